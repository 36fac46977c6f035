#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "nzloops/error.hpp"
#include "nzloops/exactla.hpp"
#include "nzloops/gluesolve.hpp"

#include <random>

using namespace nz;

namespace {

std::string fixture(const std::string& name) { return std::string(NZ_FIXTURE_DIR) + "/" + name; }

NZDatum fig8() { return load_datum(fixture("4_1.json")).datum; }

Real tiny(int e) { return ldexp(Real(1), e); }

CVec start(int n) { return CVec(n, Complex(Real("0.5"), Real("0.8"))); }

Complex polar(const Real& r, const Real& t) { return Complex(r * cos(t), r * sin(t)); }

// geometric A-polynomial of 4_1
Complex apoly(const Complex& l, const Complex& m) {
    Complex m2 = m * m, m4 = m2 * m2, m6 = m4 * m2, m8 = m4 * m4;
    Complex one(1);
    return m4 - (one - m2 - Complex(2) * m4 - m6 + m8) * l + m4 * l * l;
}

}  // namespace

TEST_CASE("4_1 discrete faithful point") {
    PrecisionScope ps(256);
    auto d = fig8();
    auto sa = solve_shapes(d, Complex(1), start(2));
    const Complex e(Real(1) / 2, sqrt(Real(3)) / 2);
    CHECK(abs(sa.z[0] - e) < tolerance());
    CHECK(abs(sa.z[1] - e) < tolerance());
    CHECK(sa.residual < tolerance());
    CHECK(gluing_residual(d, sa.z, Complex(1)) < tolerance());
    for (int i = 0; i < 2; ++i) {
        CHECK(abs(sa.z[i] * sa.zp[i] * sa.zpp[i] + Complex(1)) < tiny(-240));
        CHECK(abs(sa.zp[i] - Complex(1) / (Complex(1) - sa.z[i])) < tiny(-240));
    }
    auto lift = certify_lift(d, sa);
    CHECK(lift.standard);
    CHECK(lift.lattice == IVec{0, 0});
    CHECK(abs(longitude_eigenvalue(d, sa) + Complex(1)) < tolerance());
}

TEST_CASE("9_12 solves after quad normalization") {
    PrecisionScope ps(256);
    auto f = load_datum(fixture("9_12.json"));
    REQUIRE(f.shapes.size() == 10);
    State s{f.datum, f.shapes, {}};
    normalize_quad(s);
    auto sa = solve_shapes(s.datum, Complex(1), s.shapes);
    CHECK(gluing_residual(s.datum, sa.z, Complex(1)) < tolerance());
    for (const auto& z : sa.z) CHECK(z.im > 0);
    auto lift = certify_lift(s.datum, sa);
    CHECK(lift.deviation < tiny(-128));
}

TEST_CASE("Newton jacobian against central differences") {
    PrecisionScope ps(256);
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (auto name : {"4_1.json", "9_12.json"}) {
        auto d = load_datum(fixture(name)).datum;
        for (int trial = 0; trial < 3; ++trial) {
            CVec Z(d.n);
            for (auto& x : Z) x = Complex(Real(u(rng)), Real(1.0 + u(rng)));
            Complex uu(Real(u(rng) / 4), Real(u(rng) / 4));
            auto sys = log_system(d, Z, uu);
            const Real h = tiny(-40);
            for (int j = 0; j < d.n; ++j) {
                auto zp = Z, zm = Z;
                zp[j] += Complex(h);
                zm[j] -= Complex(h);
                auto fp = log_system(d, zp, uu).f, fm = log_system(d, zm, uu).f;
                for (int i = 0; i < d.n; ++i) {
                    Complex fd = (fp[i] - fm[i]) / Complex(2 * h);
                    CHECK(abs(fd - sys.jac[i][j]) < tiny(-70));
                }
            }
        }
    }
}

TEST_CASE("continuation matches the closed form") {
    PrecisionScope ps(256);
    auto d = fig8();
    auto base = solve_shapes(d, Complex(1), start(2));
    std::vector<Complex> path;
    for (int k = 1; k <= 10; ++k) path.push_back(Complex(Real(1) + Real(k) / 100));
    auto steps = continue_in_m(d, base.z, Complex(1), path);
    REQUIRE(steps.size() == 10);
    for (size_t k = 0; k < steps.size(); ++k) {
        const Complex m = path[k];
        const auto& sa = steps[k];
        CHECK(gluing_residual(d, sa.z, m) < tolerance());
        Complex l = longitude_eigenvalue(d, sa);
        // z^-2 z''^-1 = l
        CHECK(abs(ipow(sa.z[0], -2) / sa.zpp[0] - l) < tiny(-200));
        CHECK(abs(apoly(l, m)) < tiny(-200));
        Complex m2 = m * m, mm2 = Complex(1) / m2;
        Complex z = -(m2 - mm2) / (Complex(1) + m2 * l);
        Complex w = (m2 + l) / (m2 - mm2);
        CHECK(abs(sa.z[0] - z) < tiny(-200));
        CHECK(abs(sa.z[1] - w) < tiny(-200));
        auto lift = certify_lift(d, sa);
        CHECK(lift.deviation < tiny(-128));
    }
}

TEST_CASE("a closed loop in m returns to the start") {
    PrecisionScope ps(256);
    auto d = fig8();
    auto base = solve_shapes(d, Complex(1), start(2));
    std::vector<Complex> path;
    const Real r = Real("0.05");
    for (int k = 1; k <= 24; ++k) {
        Real t = 2 * pi() * k / 24;
        path.push_back(Complex(Real(1) - r) + polar(r, t));
    }
    auto steps = continue_in_m(d, base.z, Complex(1), path);
    for (int i = 0; i < 2; ++i) CHECK(abs(steps.back().z[i] - base.z[i]) < tolerance());
}

TEST_CASE("continuation into a degenerate point") {
    PrecisionScope ps(256);
    auto d = fig8();
    auto base = solve_shapes(d, Complex(1), start(2));
    try {
        continue_in_m(d, base.z, Complex(1), {Complex(Real("1e-8"))});
        FAIL("expected DegenerateShape");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::DegenerateShape);
    }
}

TEST_CASE("solver failures") {
    PrecisionScope ps(256);
    auto d = fig8();
    // a start on the degenerate locus
    try {
        solve_shapes(d, Complex(1), {Complex(1), Complex(Real("0.5"))});
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::DegenerateShape);
    }
}

TEST_CASE("lift re-certified after a rotation") {
    PrecisionScope ps(256);
    auto d = fig8();
    auto sa = solve_shapes(d, Complex(1), start(2));
    State s{d, sa.z, {}};
    rotate_quad(s, 2, Direction::Bwd);
    auto again = make_assignment(s.shapes);
    auto lift = certify_lift(s.datum, again);
    CHECK(lift.deviation < tiny(-128));
    CHECK(gluing_residual(s.datum, s.shapes, Complex(1)) < tolerance());
}

TEST_CASE("A-polynomial on sampled m") {
    PrecisionScope ps(256);
    auto d = fig8();
    auto base = solve_shapes(d, Complex(1), start(2));
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> ang(-0.6, 0.6), rad(0.85, 1.2);
    for (int k = 0; k < 5; ++k) {
        Complex m = polar(Real(rad(rng)), Real(ang(rng)));
        auto sa = continue_in_m(d, base.z, Complex(1), {m}).back();
        Complex l = longitude_eigenvalue(d, sa);
        CHECK(abs(apoly(l, m)) < tiny(-200));
    }
}
