#pragma once

#include <boost/multiprecision/gmp.hpp>
#include <boost/multiprecision/mpfr.hpp>

#include <string>
#include <vector>

namespace nz {

using Real = boost::multiprecision::number<boost::multiprecision::mpfr_float_backend<0>,
                                           boost::multiprecision::et_off>;
using Int = boost::multiprecision::mpz_int;
using Rational = boost::multiprecision::mpq_rational;

// Sets the process-wide working precision (bits) for every Real created
// until destruction.
class PrecisionScope {
public:
    explicit PrecisionScope(unsigned bits);
    ~PrecisionScope();
    PrecisionScope(const PrecisionScope&) = delete;
    PrecisionScope& operator=(const PrecisionScope&) = delete;

private:
    unsigned saved_digits_;
    unsigned saved_bits_;
};

unsigned working_bits();
// 2^(16-P)
Real tolerance();
Real pi();

struct Complex {
    Real re;
    Real im;

    Complex() : re(0), im(0) {}
    Complex(const Real& r) : re(r), im(0) {}
    Complex(const Real& r, const Real& i) : re(r), im(i) {}
    Complex(int r) : re(r), im(0) {}
    Complex(long long r) : re(r), im(0) {}

    Complex& operator+=(const Complex& o);
    Complex& operator-=(const Complex& o);
    Complex& operator*=(const Complex& o);
    Complex& operator/=(const Complex& o);
};

Complex operator+(Complex a, const Complex& b);
Complex operator-(Complex a, const Complex& b);
Complex operator*(Complex a, const Complex& b);
Complex operator/(Complex a, const Complex& b);
Complex operator-(const Complex& a);

Complex conj(const Complex& z);
Real abs(const Complex& z);
Real norm2(const Complex& z);
Real arg(const Complex& z);
Complex exp(const Complex& z);
// principal branch
Complex log(const Complex& z);
Complex sqrt(const Complex& z);
Complex ipow(const Complex& z, long long k);
Complex i_times(const Complex& z);
Complex I();

using CVec = std::vector<Complex>;
using CMat = std::vector<CVec>;

// Partial pivoting; false when a pivot falls below tolerance().
bool lu_solve(CMat m, CVec rhs, CVec& x);
Complex det(CMat m);
bool inverse(const CMat& m, CMat& inv);

Real parse_real(const std::string& s);
std::string to_string(const Real& x, int digits = 0);

// Bernoulli numbers with B1 = +1/2
Rational bernoulli(int n);
// Li_m(w) = N_m(w)/(1-w)^(1-m) for m <= 0; coefficients of N_m, lowest first
std::vector<Int> neg_polylog_numerator(int m);
// m <= 1; m = 1 is -log(1-w)
Complex neg_polylog(int m, const Complex& w);
Complex dilog(const Complex& w);
Real bloch_wigner(const Complex& w);

}  // namespace nz
