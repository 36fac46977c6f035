#pragma once

#include "nzloops/mpnum.hpp"
#include "nzloops/nzio.hpp"

#include <vector>

namespace nz {

struct ShapeAssignment {
    CVec z, zp, zpp;
    // principal logarithms of z and z''
    CVec Z, Zpp;
    Complex u;
    Real residual;
};

// Fills z', z'', principal logs; residual left at zero.
ShapeAssignment make_assignment(const CVec& z, const Complex& u = Complex());

// max_i |prod z^A z''^B - (-1)^eta m^(2 delta_iN)|
Real gluing_residual(const NZDatum& d, const CVec& z, const Complex& m);

struct LogSystem {
    CVec f;  // A Z + B Z'' - i pi eta - 2u e_N, not reduced mod 2 pi i
    CMat jac;
};
LogSystem log_system(const NZDatum& d, const CVec& Z, const Complex& u);

// default 2^-16
Real degeneracy_eps();
void set_degeneracy_eps(const Real& eps);

ShapeAssignment solve_shapes(const NZDatum& d, const Complex& m, const CVec& initial, int max_iter = 100);

// Tracks the branch through each m of `path` in turn, starting from shapes
// solved at m0. One assignment per path entry.
std::vector<ShapeAssignment> continue_in_m(const NZDatum& d, const CVec& start, const Complex& m0,
                                           const std::vector<Complex>& path);

struct LiftReport {
    IVec lattice;  // (A Z + B Z'' - 2u e_N - i pi eta) / 2 pi i
    bool standard = false;
    Real deviation;
};
LiftReport certify_lift(const NZDatum& d, const ShapeAssignment& s);

// l = -exp(C.Z + D.Z'' - i pi eta_lambda)
Complex longitude_eigenvalue(const NZDatum& d, const ShapeAssignment& s);

}  // namespace nz
