#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "nzloops/error.hpp"
#include "nzloops/mpnum.hpp"

#include <boost/math/special_functions/bernoulli.hpp>

using namespace nz;

namespace {

bool close(const Complex& a, const Complex& b, const Real& tol) { return abs(a - b) < tol; }

Real tiny(int e) { return ldexp(Real(1), e); }

// B_n with B_1 = -1/2 from sum_{k<=n} C(n+1,k) B_k = 0
std::vector<Rational> bernoulli_oracle(int n) {
    std::vector<Rational> b(n + 1);
    b[0] = 1;
    for (int m = 1; m <= n; ++m) {
        Rational s = 0;
        Int c = 1;  // C(m+1, k)
        for (int k = 0; k < m; ++k) {
            s += Rational(c) * b[k];
            c = c * (m + 1 - k) / (k + 1);
        }
        b[m] = -s / Rational(m + 1);
    }
    return b;
}

// Cl2(theta) = theta - theta log theta + sum |B_2k| theta^(2k+1) / (2k (2k+1) (2k)!)
Real clausen_oracle(const Real& t) {
    Real s = t - t * log(t);
    Real fact = 1;
    for (int k = 1; k < 200; ++k) {
        fact *= Real(2 * k - 1) * Real(2 * k);
        Real b = abs(boost::math::bernoulli_b2n<Real>(k));
        Real term = b * pow(t, 2 * k + 1) / (Real(2 * k) * Real(2 * k + 1) * fact);
        s += term;
        if (term < tiny(-400)) break;
    }
    return s;
}

Complex polylog_series(int m, const Complex& w) {
    Complex s, p = w;
    for (int k = 1; k < 2000; ++k) {
        s += p * Complex(pow(Real(k), -m));
        p *= w;
        if (abs(p) < tiny(-300)) break;
    }
    return s;
}

}  // namespace

TEST_CASE("precision scope restores the previous precision") {
    PrecisionScope outer(256);
    CHECK(working_bits() == 256);
    {
        PrecisionScope inner(512);
        CHECK(working_bits() == 512);
        CHECK(Real(1).precision() >= 150);
    }
    CHECK(working_bits() == 256);
}

TEST_CASE("complex arithmetic") {
    PrecisionScope ps(256);
    Complex a(Real(3), Real(4));
    CHECK(abs(a) == 5);
    CHECK(close(a * conj(a), Complex(25), tiny(-240)));
    CHECK(close(a / a, Complex(1), tiny(-240)));
    CHECK(close(exp(log(a)), a, tiny(-240)));
    CHECK(close(sqrt(a) * sqrt(a), a, tiny(-240)));
    CHECK(close(ipow(a, -2) * a * a, Complex(1), tiny(-240)));
    CHECK(close(i_times(Complex(1)), I(), tiny(-250)));
    // principal branch cut on the negative axis
    CHECK(close(log(Complex(-1)), Complex(Real(0), pi()), tiny(-240)));
}

TEST_CASE("linear algebra over C") {
    PrecisionScope ps(256);
    CMat m{{Complex(2), Complex(1)}, {Complex(1), Complex(Real(0), Real(1))}};
    CHECK(close(det(m), Complex(Real(-1), Real(2)), tiny(-240)));
    CMat inv;
    REQUIRE(inverse(m, inv));
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            Complex s = m[i][0] * inv[0][j] + m[i][1] * inv[1][j];
            CHECK(close(s, Complex(i == j ? 1 : 0), tiny(-240)));
        }
    CVec x;
    REQUIRE(lu_solve(m, {Complex(3), Complex(1)}, x));
    CHECK(close(m[0][0] * x[0] + m[0][1] * x[1], Complex(3), tiny(-240)));
    CMat sing{{Complex(1), Complex(2)}, {Complex(2), Complex(4)}};
    CHECK_FALSE(lu_solve(sing, {Complex(1), Complex(1)}, x));
}

TEST_CASE("bernoulli numbers") {
    CHECK(bernoulli(0) == 1);
    CHECK(bernoulli(1) == Rational(1, 2));
    CHECK(bernoulli(2) == Rational(1, 6));
    CHECK(bernoulli(3) == 0);
    CHECK(bernoulli(4) == Rational(-1, 30));
    auto o = bernoulli_oracle(40);
    for (int n = 2; n <= 40; ++n) CHECK(bernoulli(n) == o[n]);
}

TEST_CASE("negative index polylogarithms") {
    PrecisionScope ps(256);
    Complex half(Real("0.5"));
    CHECK(close(neg_polylog(0, half), Complex(1), tiny(-240)));
    CHECK(close(neg_polylog(-1, half), Complex(2), tiny(-240)));
    CHECK(close(neg_polylog(1, Complex()), Complex(), tiny(-250)));
    Complex w(Real("0.3"), Real("0.2"));
    for (int m = 1; m >= -6; --m) CHECK(close(neg_polylog(m, w), polylog_series(m, w), tiny(-200)));
    // Li_m(w) = N_m(w) / (1-w)^(1-m); Li_{-1} = w/(1-w)^2
    auto n1 = neg_polylog_numerator(-1);
    REQUIRE(n1.size() >= 2);
    CHECK(n1[0] == 0);
    CHECK(n1[1] == 1);
    CHECK_THROWS_AS(neg_polylog(-2, Complex(1)), Error);
}

TEST_CASE("dilogarithm and Bloch-Wigner") {
    PrecisionScope ps(256);
    CHECK(close(dilog(Complex()), Complex(), tiny(-250)));
    Complex w(Real("0.4"), Real("-0.3"));
    CHECK(close(dilog(w), polylog_series(2, w), tiny(-200)));
    // outside the unit disc, checked through the inversion formula
    Complex big(Real("2.5"), Real("1.5"));
    Complex lhs = dilog(big) + dilog(Complex(1) / big);
    Complex lg = log(-big);
    Complex rhs = Complex(-(pi() * pi()) / 6) - lg * lg / Complex(2);
    CHECK(close(lhs, rhs, tiny(-200)));

    CHECK(abs(bloch_wigner(Complex(Real("0.3")))) < tiny(-240));
    const Real t = pi() / 3;
    const Complex e(cos(t), sin(t));
    Real d = bloch_wigner(e);
    CHECK(abs(d - clausen_oracle(t)) < tiny(-200));
    CHECK(abs(d - parse_real("1.0149416064096536250212025542745202859")) < tiny(-120));
    Complex z(Real("0.2"), Real("1.3"));
    CHECK(abs(bloch_wigner(z) - bloch_wigner(Complex(1) / (Complex(1) - z))) < tiny(-200));
    CHECK(abs(bloch_wigner(z) + bloch_wigner(conj(z))) < tiny(-200));
}

TEST_CASE("number parsing and printing") {
    PrecisionScope ps(256);
    CHECK(parse_real(to_string(parse_real("0.125"), 10)) == Real(1) / 8);
    CHECK_THROWS_AS(parse_real("abc"), Error);
}
