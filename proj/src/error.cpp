#include "nzloops/error.hpp"

namespace nz {

const char* errc_name(Errc c) {
    switch (c) {
        case Errc::InvalidArgument: return "InvalidArgument";
        case Errc::SchemaError: return "SchemaError";
        case Errc::IntegerOverflow: return "IntegerOverflow";
        case Errc::IncidenceViolation: return "IncidenceViolation";
        case Errc::SymplecticViolation: return "SymplecticViolation";
        case Errc::NoIntegerSolution: return "NoIntegerSolution";
        case Errc::PoleAtOne: return "PoleAtOne";
        case Errc::BranchPoint: return "BranchPoint";
        case Errc::NoConvergence: return "NoConvergence";
        case Errc::DegenerateShape: return "DegenerateShape";
        case Errc::SingularJacobian: return "SingularJacobian";
        case Errc::BranchJump: return "BranchJump";
        case Errc::NonLatticeResidual: return "NonLatticeResidual";
        case Errc::SingularHessian: return "SingularHessian";
        case Errc::HalfIntegerSurvivor: return "HalfIntegerSurvivor";
        case Errc::ZeroTorsion: return "ZeroTorsion";
        case Errc::DegenerateMove: return "DegenerateMove";
        case Errc::QuadMismatch: return "QuadMismatch";
        case Errc::PrecisionTooLow: return "PrecisionTooLow";
        case Errc::IoError: return "IoError";
    }
    return "Unknown";
}

const char* errc_module(Errc c) {
    switch (c) {
        case Errc::SchemaError:
        case Errc::IntegerOverflow:
        case Errc::IncidenceViolation:
        case Errc::IoError: return "nzio";
        case Errc::SymplecticViolation:
        case Errc::NoIntegerSolution:
        case Errc::DegenerateMove:
        case Errc::QuadMismatch: return "exactla";
        case Errc::PoleAtOne:
        case Errc::BranchPoint: return "mpnum";
        case Errc::NoConvergence:
        case Errc::DegenerateShape:
        case Errc::SingularJacobian:
        case Errc::BranchJump:
        case Errc::NonLatticeResidual: return "gluesolve";
        case Errc::SingularHessian:
        case Errc::HalfIntegerSurvivor: return "series";
        case Errc::ZeroTorsion: return "invariants";
        case Errc::InvalidArgument:
        case Errc::PrecisionTooLow: return "cli";
    }
    return "unknown";
}

}  // namespace nz
