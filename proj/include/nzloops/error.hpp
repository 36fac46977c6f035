#pragma once

#include <stdexcept>
#include <string>

namespace nz {

enum class Errc {
    InvalidArgument = 1,
    SchemaError,
    IntegerOverflow,
    IncidenceViolation,
    SymplecticViolation,
    NoIntegerSolution,
    PoleAtOne,
    BranchPoint,
    NoConvergence,
    DegenerateShape,
    SingularJacobian,
    BranchJump,
    NonLatticeResidual,
    SingularHessian,
    HalfIntegerSurvivor,
    ZeroTorsion,
    DegenerateMove,
    QuadMismatch,
    PrecisionTooLow,
    IoError,
};

const char* errc_name(Errc c);
// module prefix used in CLI output, e.g. "exactla"
const char* errc_module(Errc c);

class Error : public std::runtime_error {
public:
    Error(Errc c, const std::string& msg) : std::runtime_error(msg), code_(c) {}
    Errc code() const { return code_; }

private:
    Errc code_;
};

}  // namespace nz
