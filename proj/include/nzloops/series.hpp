#pragma once

#include "nzloops/exactla.hpp"
#include "nzloops/gluesolve.hpp"
#include "nzloops/mpnum.hpp"
#include "nzloops/nzio.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <vector>

namespace nz {

constexpr int kMaxVars = 32;

// x exponents, one byte per variable
using Exps = std::array<std::uint8_t, kMaxVars>;

struct MonoKey {
    int h = 0;  // power of hbar^(1/2)
    Exps e{};

    bool operator<(const MonoKey& o) const { return h != o.h ? h < o.h : e < o.e; }
    bool operator==(const MonoKey& o) const = default;
    int degree() const;
};

// Series in hbar^(1/2) and x_1..x_N truncated at hbar^(max_h/2) and total
// x-degree max_deg.
class TruncatedSeries {
public:
    TruncatedSeries(int nvars, int max_h, int max_deg);

    static TruncatedSeries constant(int nvars, int max_h, int max_deg, const Complex& c);

    int nvars() const { return nvars_; }
    int max_h() const { return max_h_; }
    int max_deg() const { return max_deg_; }
    const std::map<MonoKey, Complex>& terms() const { return terms_; }
    size_t size() const { return terms_.size(); }

    // silently drops keys beyond the bounds
    void add(const MonoKey& k, const Complex& c);
    Complex coeff(const MonoKey& k) const;

    TruncatedSeries operator+(const TruncatedSeries& o) const;
    TruncatedSeries operator*(const TruncatedSeries& o) const;
    TruncatedSeries scaled(const Complex& c) const;
    // needs a zero constant term
    TruncatedSeries exp() const;

private:
    bool in_bounds(const MonoKey& k) const;

    int nvars_, max_h_, max_deg_;
    std::map<MonoKey, Complex> terms_;
};

struct Propagator {
    CMat h;
    CMat hinv;
};

// H = -B^-1 A + diag(z'). SymplecticViolation if B^-1 A is not symmetric,
// SingularHessian if H is not invertible.
Propagator build_hessian(const NZDatum& d, const CVec& z);
Propagator make_propagator(const CMat& h);

// Memoized Isserlis sums over one propagator.
class WickEngine {
public:
    explicit WickEngine(const CMat& hinv);
    Complex pairing(const Exps& k);
    size_t memo_size() const { return memo_.size(); }

private:
    CMat g_;
    int n_;
    std::map<Exps, Complex> memo_;
};

Complex wick_pairing(const std::vector<int>& kappa, const CMat& hinv);
// number of perfect matchings of the index multiset, (2m-1)!! for degree 2m
Int wick_term_count(const std::vector<int>& kappa);

// Exponent of the per-tetrahedron series in one variable, without the
// B^-1 eta linear term.
TruncatedSeries tetra_exponent(const Complex& z, int max_h, int max_deg);
TruncatedSeries tetra_series(const Complex& z, int max_h, int max_deg);

struct SeriesBounds {
    int max_h;
    int max_deg;

    // hbar^(n-1), x-degree 6(n-1)
    static SeriesBounds for_loop(int n) { return {2 * (n - 1), 6 * (n - 1)}; }
};

TruncatedSeries integrand_series(const NZDatum& d, const CVec& z, const Flattening& fl, const SeriesBounds& b);

// coefficients of hbar^(h/2), h = 0..max_h. With require_integral, odd
// entries above tolerance raise HalfIntegerSurvivor.
CVec gaussian_expectation(const TruncatedSeries& s, const Propagator& p, bool require_integral = true);

}  // namespace nz
