#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "nzloops/error.hpp"
#include "nzloops/series.hpp"

#include <functional>
#include <random>

using namespace nz;

namespace {

std::string fixture(const std::string& name) { return std::string(NZ_FIXTURE_DIR) + "/" + name; }

Real tiny(int e) { return ldexp(Real(1), e); }

Complex e_pi3() { return Complex(Real(1) / 2, sqrt(Real(3)) / 2); }

MonoKey key(int h, std::initializer_list<int> e) {
    MonoKey k;
    k.h = h;
    int i = 0;
    for (int x : e) k.e[i++] = static_cast<std::uint8_t>(x);
    return k;
}

// sum over perfect matchings of the index list
Complex matchings(std::vector<int> idx, const CMat& g) {
    if (idx.empty()) return Complex(1);
    if (idx.size() % 2) return Complex();
    Complex s;
    const int a = idx[0];
    for (size_t j = 1; j < idx.size(); ++j) {
        std::vector<int> rest;
        for (size_t k = 1; k < idx.size(); ++k)
            if (k != j) rest.push_back(idx[k]);
        s += g[a][idx[j]] * matchings(rest, g);
    }
    return s;
}

long long count_matchings(int size) {
    if (size % 2) return 0;
    long long c = 1;
    for (int k = size - 1; k > 1; k -= 2) c *= k;
    return c;
}

std::vector<int> index_list(const std::vector<int>& kappa) {
    std::vector<int> idx;
    for (size_t i = 0; i < kappa.size(); ++i)
        for (int r = 0; r < kappa[i]; ++r) idx.push_back(static_cast<int>(i));
    return idx;
}

CMat random_symmetric(std::mt19937& rng, int n) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    CMat h(n, CVec(n));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j <= i; ++j) {
            h[i][j] = Complex(Real(u(rng)), Real(u(rng)));
            if (i == j) h[i][j] += Complex(Real(3));
            h[j][i] = h[i][j];
        }
    return h;
}

}  // namespace

TEST_CASE("series algebra") {
    PrecisionScope ps(256);
    TruncatedSeries a(2, 4, 4);
    a.add(key(1, {1, 0}), Complex(Real(2)));
    a.add(key(2, {0, 1}), Complex(Real(0), Real(1)));
    a.add(key(9, {0, 0}), Complex(5));  // beyond max_h, dropped
    CHECK(a.size() == 2);
    auto e = a.exp();
    auto e_neg = a.scaled(Complex(-1)).exp();
    auto prod = e * e_neg;
    for (const auto& [k, c] : prod.terms()) {
        if (k.h == 0 && k.degree() == 0)
            CHECK(abs(c - Complex(1)) < tiny(-240));
        else
            CHECK(abs(c) < tiny(-240));
    }
    // (2x)^2/2 at hbar^1
    CHECK(abs(e.coeff(key(2, {2, 0})) - Complex(2)) < tiny(-240));
    auto sq = e * e;
    for (const auto& [k, c] : sq.terms()) {
        CHECK(k.h <= 4);
        CHECK(k.degree() <= 4);
    }
}

TEST_CASE("Hessian of 4_1") {
    PrecisionScope ps(256);
    auto d = load_datum(fixture("4_1.json")).datum;
    const Complex z = e_pi3(), zp = Complex(1) / (Complex(1) - z);
    auto p = build_hessian(d, {z, z});
    // B^-1 A = [[1,1],[1,1]]
    CHECK(abs(p.h[0][0] - (zp - Complex(1))) < tiny(-240));
    CHECK(abs(p.h[1][1] - (zp - Complex(1))) < tiny(-240));
    CHECK(abs(p.h[0][1] + Complex(1)) < tiny(-240));
    CHECK(abs(p.h[0][1] - p.h[1][0]) < tiny(-240));
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            Complex s = p.h[i][0] * p.hinv[0][j] + p.h[i][1] * p.hinv[1][j];
            CHECK(abs(s - Complex(i == j ? 1 : 0)) < tiny(-240));
        }

    auto bad = d;
    bad.b[0][1] = 2;
    try {
        build_hessian(bad, {z, z});
        FAIL("expected SymplecticViolation");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::SymplecticViolation);
    }
    CHECK_THROWS_AS(make_propagator({{Complex(1), Complex(2)}, {Complex(2), Complex(4)}}), Error);
}

TEST_CASE("Hessian is symmetric for the normalized 9_12") {
    PrecisionScope ps(256);
    auto f = load_datum(fixture("9_12.json"));
    State s{f.datum, f.shapes, {}};
    normalize_quad(s);
    auto p = build_hessian(s.datum, s.shapes);
    for (int i = 0; i < 10; ++i)
        for (int j = 0; j < i; ++j) CHECK(abs(p.h[i][j] - p.h[j][i]) < tiny(-240));
}

TEST_CASE("Isserlis sums") {
    PrecisionScope ps(256);
    std::mt19937 rng(5);
    CMat g = random_symmetric(rng, 3);
    CHECK(abs(wick_pairing({1, 1, 0}, g) - g[0][1]) < tiny(-240));
    CHECK(abs(wick_pairing({4, 0, 0}, g) - Complex(3) * g[0][0] * g[0][0]) < tiny(-240));
    CHECK(abs(wick_pairing({2, 2, 0}, g) - (g[0][0] * g[1][1] + Complex(2) * g[0][1] * g[0][1])) < tiny(-240));
    CHECK(abs(wick_pairing({1, 1, 1}, g)) < tiny(-250));
    CHECK(abs(wick_pairing({0, 0, 0}, g) - Complex(1)) < tiny(-250));

    std::vector<std::vector<int>> kappas{{2, 1, 1}, {3, 1, 2}, {2, 2, 2}, {6, 0, 0}, {1, 3, 4}, {5, 2, 1}};
    WickEngine w(g);
    for (const auto& k : kappas) {
        Complex want = matchings(index_list(k), g);
        CHECK(abs(wick_pairing(k, g) - want) < tiny(-230) * (1 + abs(want)));
        Exps e{};
        for (size_t i = 0; i < k.size(); ++i) e[i] = static_cast<std::uint8_t>(k[i]);
        CHECK(abs(w.pairing(e) - want) < tiny(-230) * (1 + abs(want)));
        int deg = 0;
        for (int x : k) deg += x;
        CHECK(wick_term_count(k) == count_matchings(deg));
    }
    CHECK(w.memo_size() > 0);
    for (int m = 1; m <= 6; ++m) CHECK(wick_term_count({2 * m, 0}) == count_matchings(2 * m));
}

TEST_CASE("tetrahedron exponent coefficients") {
    PrecisionScope ps(256);
    const Complex z(Real("0.3"), Real("1.1"));
    const Complex one(1), zp = one / (one - z), w = one / z;
    auto s = tetra_exponent(z, 6, 6);
    CHECK(abs(s.coeff(key(2, {0})) + zp / Complex(12)) < tiny(-240));
    CHECK(abs(s.coeff(key(6, {0})) - z * (one + z) * zp * zp * zp / Complex(720)) < tiny(-230));
    // (-x)^3 B_0 / 3! Li_{-1}(1/z) at hbar^(1/2)
    Complex li_m1 = w / ((one - w) * (one - w));
    CHECK(abs(s.coeff(key(1, {3})) + li_m1 / Complex(6)) < tiny(-240));
    CHECK(abs(s.coeff(key(0, {2}))) < tiny(-250));
    // x-linear at hbar^(1/2): -B_1 Li_0(1/z) = z'/2
    CHECK(abs(s.coeff(key(1, {1})) - zp / Complex(2)) < tiny(-240));
}

TEST_CASE("integrand of 4_1") {
    PrecisionScope ps(256);
    auto d = load_datum(fixture("4_1.json")).datum;
    auto fl = solve_flattening(d, false);
    const Complex z = e_pi3(), zp = Complex(1) / (Complex(1) - z);
    auto s = integrand_series(d, {z, z}, fl, SeriesBounds::for_loop(2));
    CHECK(abs(s.coeff(key(0, {0, 0})) - Complex(1)) < tiny(-250));
    // f B^-1 A f / 8 - sum z'/12
    Real fa = 0;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) fa += Real(fl.f[i] * fl.f[j]);
    Complex want = Complex(fa / 8) - Complex(2) * zp / Complex(12);
    CHECK(abs(s.coeff(key(2, {0, 0})) - want) < tiny(-240));
    // (z' - (B^-1 eta)_i) / 2 with B^-1 eta = (1, 1)
    CHECK(abs(s.coeff(key(1, {1, 0})) - (zp - Complex(1)) / Complex(2)) < tiny(-240));
    CHECK(abs(s.coeff(key(1, {0, 1})) - (zp - Complex(1)) / Complex(2)) < tiny(-240));
}

TEST_CASE("Gaussian expectation of exp(J.x)") {
    PrecisionScope ps(256);
    std::mt19937 rng(2024);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const int max_h = 8;
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 1 + trial % 4;
        auto p = make_propagator(random_symmetric(rng, n));
        CVec j(n);
        for (auto& x : j) x = Complex(Real(u(rng)), Real(u(rng)));
        TruncatedSeries lin(n, max_h, max_h);
        for (int i = 0; i < n; ++i) {
            MonoKey k;
            k.h = 1;
            k.e[i] = 1;
            lin.add(k, j[i]);
        }
        auto ex = gaussian_expectation(lin.exp(), p);
        Complex q;
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) q += j[a] * p.hinv[a][b] * j[b];
        q = q / Complex(2);
        Complex term(1);
        for (int m = 0; 2 * m <= max_h; ++m) {
            if (m > 0) term = term * q / Complex(m);
            CHECK(abs(ex[2 * m] - term) < Real("1e-25"));
            if (2 * m + 1 <= max_h) CHECK(abs(ex[2 * m + 1]) < Real("1e-25"));
        }
    }
    TruncatedSeries one = TruncatedSeries::constant(2, 2, 2, Complex(1));
    auto p = make_propagator({{Complex(2), Complex(0)}, {Complex(0), Complex(3)}});
    CHECK(abs(gaussian_expectation(one, p)[0] - Complex(1)) < tiny(-250));
}

TEST_CASE("half-integer powers vanish on integrands") {
    PrecisionScope ps(256);
    for (auto name : {"4_1.json", "9_12.json"}) {
        auto f = load_datum(fixture(name));
        State s{f.datum, f.shapes, {}};
        normalize_quad(s);
        auto sa = solve_shapes(s.datum, Complex(1), s.shapes);
        auto fl = solve_flattening(s.datum, false);
        auto p = build_hessian(s.datum, sa.z);
        auto ex = gaussian_expectation(integrand_series(s.datum, sa.z, fl, SeriesBounds::for_loop(3)), p, false);
        for (size_t h = 1; h < ex.size(); h += 2) CHECK(abs(ex[h]) < Real("1e-25"));
    }
}

TEST_CASE("odd survivors are reported") {
    PrecisionScope ps(256);
    TruncatedSeries s(1, 2, 2);
    s.add(key(1, {2}), Complex(1));
    auto p = make_propagator({{Complex(2)}});
    try {
        gaussian_expectation(s, p);
        FAIL("expected HalfIntegerSurvivor");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::HalfIntegerSurvivor);
    }
}
