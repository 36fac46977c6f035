#pragma once

#include "nzloops/mpnum.hpp"
#include "nzloops/nzio.hpp"

#include <optional>
#include <set>
#include <string>
#include <vector>

namespace nz {

using ZVec = std::vector<Int>;
using ZMat = std::vector<ZVec>;

struct HnfResult {
    ZMat h;
    ZMat u;
};

// Row Hermite normal form: u * m == h, u unimodular, positive pivots,
// entries above each pivot reduced into [0, pivot).
HnfResult hnf(const ZMat& m);
ZMat to_zmat(const IMat& m);
Int det(const ZMat& m);
int rank(const ZMat& m);
// LLL with delta = 3/4, rows are the basis vectors
ZMat lll_reduce(ZMat basis);

using QMat = std::vector<std::vector<Rational>>;
// B^-1 M over Q; M has the same row count as B. Throws InvalidArgument if det B = 0.
QMat binv_times(const IMat& b, const IMat& m);

struct SymplecticReport {
    bool ab_symmetric = false;
    int rank_ab = 0;
    Int det_b = 0;
    std::optional<bool> binv_a_symmetric;
    std::optional<bool> longitude_ok;

    bool ok(int n) const {
        return ab_symmetric && rank_ab == n && longitude_ok.value_or(true);
    }
};

SymplecticReport check_symplectic(const NZDatum& d);

// Integer solutions (f, f'') of A f + B f'' = eta (and the longitude row when
// asked) as x0 + span(kernel).
struct FlatteningLattice {
    IVec particular;
    std::vector<IVec> kernel;
};

FlatteningLattice flattening_lattice(const NZDatum& d, bool require_longitude);
Flattening solve_flattening(const NZDatum& d, bool require_longitude);
Flattening make_flattening(const NZDatum& d, const IVec& f, const IVec& fpp);
bool check_flattening(const NZDatum& d, const Flattening& fl, bool require_longitude);

// Datum plus optional shapes and flattening carried through moves.
struct State {
    NZDatum datum;
    std::vector<Complex> shapes;
    std::optional<Flattening> flattening;
};

enum class Direction { Fwd, Bwd };

struct MoveCertificate {
    std::string kind;
    std::string params;
    std::string input_hash;
    std::string output_hash;
    // predicted ratio of the raw torsion after/before; unknown without a flattening
    std::optional<int> tau_sign;
};

// tet is 1-based in all move functions.
MoveCertificate rotate_quad(State& s, int tet, Direction dir);
// row I != N, 1-based
MoveCertificate change_edge(State& s, int row);
MoveCertificate meridian_move(State& s, int row, int sign);
MoveCertificate swap_flattening(State& s, const Flattening& target);

struct TwoThreeSite {
    int tet1 = 0;
    int tet2 = 0;
};

struct ThreeTwoSite {
    int w1 = 0, w2 = 0, w3 = 0;
    int central_row = 0;
};

MoveCertificate two_three_move(State& s, const TwoThreeSite& site);
MoveCertificate three_two_move(State& s, const ThreeTwoSite& site);

struct QuadNormalization {
    std::vector<std::pair<int, Direction>> rotations;
    std::vector<MoveCertificate> certs;
    bool changed() const { return !rotations.empty(); }
};

// Makes det B != 0. Tetrahedra in `avoid` are rotated only as a last resort.
QuadNormalization normalize_quad(State& s, const std::set<int>& avoid = {});

}  // namespace nz
