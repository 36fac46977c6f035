#pragma once

#include "nzloops/exactla.hpp"
#include "nzloops/gluesolve.hpp"
#include "nzloops/series.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace nz {

struct Tau {
    Complex raw;    // 1/2 det(A D_z'' + B D_z^-1) z^f'' z''^-f
    Complex value;  // the representative with arg in [0, pi)
    int sign_tag;   // raw = sign_tag * value
};

// At u != 0 the flattening must be longitude compatible.
Tau one_loop_tau(const NZDatum& d, const ShapeAssignment& s, const Flattening& fl);

struct ComplexVolume {
    Complex s0;
    Real re_mod_class;  // Re s0 reduced into [0, pi^2/6)
    LiftReport lift;
};

// s0 = (1/2)(Z - i pi f).(Z'' + i pi f'') - sum Li2(e^-Z) - u v, so that
// Im s0 is the volume at the discrete faithful point.
ComplexVolume complex_volume(const NZDatum& d, const ShapeAssignment& s, const Flattening& fl);

// sum of Bloch-Wigner values
Real volume_oracle(const CVec& z);

Complex two_loop_closed_form(const NZDatum& d, const CVec& z, const Flattening& fl);

struct NLoop {
    std::map<int, Complex> s;  // S_k for k = 2..n
    CVec expectation;          // <f> coefficients by hbar^(h/2)
    Real half_integer_max;
    size_t monomials = 0;
};

NLoop n_loop(const NZDatum& d, const CVec& z, const Flattening& fl, int n,
             std::optional<SeriesBounds> bounds = std::nullopt);

// tau^(3k) [hbar^k] exp(sum_{j>=2} S_j hbar^(j-1)), k = 1..n-1
std::map<int, Complex> sn_tilde(const std::map<int, Complex>& s, const Complex& tau);

struct LoopInvariants {
    ComplexVolume s0;
    Tau tau;
    Complex s2;          // series engine
    Complex s2_closed;   // independent closed form
    std::map<int, Complex> sn;
    // S_n tau^(3n-3) with tau = +value and tau = -value
    std::map<int, Complex> scaled_plus, scaled_minus;
    std::map<int, Complex> tilde_plus, tilde_minus;
};

LoopInvariants compute_invariants(const NZDatum& d, const ShapeAssignment& s, const Flattening& fl, int loops);

// ---- invariance harness ----

struct MoveSpec {
    std::string kind;  // rotate | edge | meridian | flattening | twothree | threetwo | sequence
    int tet = 0;
    Direction dir = Direction::Fwd;
    int row = 0;
    int sign = 1;
    std::optional<Flattening> target;
    int kernel_step = 0;  // flattening target = current + kernel vector k (1-based)
    TwoThreeSite two_three;
    ThreeTwoSite three_two;
    std::vector<MoveSpec> steps;
};

std::vector<MoveSpec> parse_move_specs(const std::string& json_text);

struct HarnessTolerances {
    Real tau2;
    Real s3;
    Real s2_class;
    static HarnessTolerances defaults();
};

struct HarnessEntry {
    std::string label;
    std::vector<MoveCertificate> certs;
    std::vector<std::pair<int, Direction>> normalization;
    Complex tau_before, tau_after;  // raw
    Real tau2_diff;
    std::optional<int> predicted_sign;
    int observed_sign = 0;
    Complex s2_delta;
    Real s2_class_residual;  // max(|24 Re d - round|, |24 Im d|)
    Real s3_diff;
    bool tau_ok = false, s2_ok = false, s3_ok = false;
    std::string error;

    bool ok() const { return error.empty() && tau_ok && s2_ok && s3_ok; }
};

struct HarnessReport {
    std::vector<HarnessEntry> entries;
    bool all_ok() const;
};

HarnessReport invariance_harness(const State& start, const std::vector<MoveSpec>& moves,
                                 const HarnessTolerances& tol = HarnessTolerances::defaults());

// applies one spec (recursing into sequences) as is
std::vector<MoveCertificate> apply_move(State& s, const MoveSpec& m);
std::string move_label(const MoveSpec& m);

// applies one spec and renormalizes det B
HarnessEntry apply_move_spec(State& s, const MoveSpec& m);

}  // namespace nz
