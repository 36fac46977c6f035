#include "nzloops/mpnum.hpp"

#include "nzloops/error.hpp"

#include <cmath>
#include <mutex>

namespace nz {

namespace {

unsigned g_bits = 256;

unsigned digits_for_bits(unsigned bits) {
    return static_cast<unsigned>(std::ceil(bits * 0.30102999566398120)) + 1;
}

}  // namespace

PrecisionScope::PrecisionScope(unsigned bits)
    : saved_digits_(Real::default_precision()), saved_bits_(g_bits) {
    g_bits = bits;
    Real::default_precision(digits_for_bits(bits));
}

PrecisionScope::~PrecisionScope() {
    g_bits = saved_bits_;
    Real::default_precision(saved_digits_);
}

unsigned working_bits() { return g_bits; }

Real tolerance() {
    Real t = 1;
    return ldexp(t, 16 - static_cast<int>(g_bits));
}

Real pi() {
    Real r;
    mpfr_const_pi(r.backend().data(), GMP_RNDN);
    return r;
}

Complex& Complex::operator+=(const Complex& o) {
    re += o.re;
    im += o.im;
    return *this;
}

Complex& Complex::operator-=(const Complex& o) {
    re -= o.re;
    im -= o.im;
    return *this;
}

Complex& Complex::operator*=(const Complex& o) {
    Real r = re * o.re - im * o.im;
    im = re * o.im + im * o.re;
    re = r;
    return *this;
}

Complex& Complex::operator/=(const Complex& o) {
    Real d = o.re * o.re + o.im * o.im;
    Real r = (re * o.re + im * o.im) / d;
    im = (im * o.re - re * o.im) / d;
    re = r;
    return *this;
}

Complex operator+(Complex a, const Complex& b) { return a += b; }
Complex operator-(Complex a, const Complex& b) { return a -= b; }
Complex operator*(Complex a, const Complex& b) { return a *= b; }
Complex operator/(Complex a, const Complex& b) { return a /= b; }
Complex operator-(const Complex& a) { return Complex(-a.re, -a.im); }

Complex conj(const Complex& z) { return Complex(z.re, -z.im); }
Real norm2(const Complex& z) { return z.re * z.re + z.im * z.im; }
Real abs(const Complex& z) { return boost::multiprecision::hypot(z.re, z.im); }
Real arg(const Complex& z) { return boost::multiprecision::atan2(z.im, z.re); }
Complex I() { return Complex(Real(0), Real(1)); }
Complex i_times(const Complex& z) { return Complex(-z.im, z.re); }

Complex exp(const Complex& z) {
    Real m = boost::multiprecision::exp(z.re);
    return Complex(m * boost::multiprecision::cos(z.im), m * boost::multiprecision::sin(z.im));
}

Complex log(const Complex& z) { return Complex(boost::multiprecision::log(abs(z)), arg(z)); }

Complex sqrt(const Complex& z) {
    if (z.re == 0 && z.im == 0) return Complex();
    Real r = abs(z);
    Real a = boost::multiprecision::sqrt((r + boost::multiprecision::abs(z.re)) / 2);
    if (z.re >= 0) return Complex(a, z.im / (2 * a));
    Real b = z.im >= 0 ? a : Real(-a);
    return Complex(boost::multiprecision::abs(z.im) / (2 * a), b);
}

Complex ipow(const Complex& z, long long k) {
    Complex base = z, out(1);
    bool inv = k < 0;
    unsigned long long e = inv ? -static_cast<unsigned long long>(k) : k;
    while (e) {
        if (e & 1) out *= base;
        base *= base;
        e >>= 1;
    }
    return inv ? Complex(1) / out : out;
}

namespace {

size_t pivot_row(const CMat& m, size_t k) {
    size_t p = k;
    Real best = norm2(m[k][k]);
    for (size_t i = k + 1; i < m.size(); ++i) {
        Real v = norm2(m[i][k]);
        if (v > best) {
            best = v;
            p = i;
        }
    }
    return p;
}

}  // namespace

bool lu_solve(CMat m, CVec rhs, CVec& x) {
    const size_t n = m.size();
    const Real tol = tolerance();
    for (size_t k = 0; k < n; ++k) {
        size_t p = pivot_row(m, k);
        if (abs(m[p][k]) < tol) return false;
        std::swap(m[p], m[k]);
        std::swap(rhs[p], rhs[k]);
        Complex inv = Complex(1) / m[k][k];
        for (size_t i = k + 1; i < n; ++i) {
            Complex f = m[i][k] * inv;
            if (f.re == 0 && f.im == 0) continue;
            for (size_t j = k; j < n; ++j) m[i][j] -= f * m[k][j];
            rhs[i] -= f * rhs[k];
        }
    }
    x.assign(n, Complex());
    for (size_t k = n; k-- > 0;) {
        Complex s = rhs[k];
        for (size_t j = k + 1; j < n; ++j) s -= m[k][j] * x[j];
        x[k] = s / m[k][k];
    }
    return true;
}

Complex det(CMat m) {
    const size_t n = m.size();
    Complex d(1);
    for (size_t k = 0; k < n; ++k) {
        size_t p = pivot_row(m, k);
        if (m[p][k].re == 0 && m[p][k].im == 0) return Complex();
        if (p != k) {
            std::swap(m[p], m[k]);
            d = -d;
        }
        d *= m[k][k];
        Complex inv = Complex(1) / m[k][k];
        for (size_t i = k + 1; i < n; ++i) {
            Complex f = m[i][k] * inv;
            for (size_t j = k; j < n; ++j) m[i][j] -= f * m[k][j];
        }
    }
    return d;
}

bool inverse(const CMat& m, CMat& inv) {
    const size_t n = m.size();
    CMat a = m;
    inv.assign(n, CVec(n, Complex()));
    for (size_t i = 0; i < n; ++i) inv[i][i] = Complex(1);
    const Real tol = tolerance();
    for (size_t k = 0; k < n; ++k) {
        size_t p = pivot_row(a, k);
        if (abs(a[p][k]) < tol) return false;
        std::swap(a[p], a[k]);
        std::swap(inv[p], inv[k]);
        Complex s = Complex(1) / a[k][k];
        for (size_t j = 0; j < n; ++j) {
            a[k][j] *= s;
            inv[k][j] *= s;
        }
        for (size_t i = 0; i < n; ++i) {
            if (i == k) continue;
            Complex f = a[i][k];
            if (f.re == 0 && f.im == 0) continue;
            for (size_t j = 0; j < n; ++j) {
                a[i][j] -= f * a[k][j];
                inv[i][j] -= f * inv[k][j];
            }
        }
    }
    return true;
}

Real parse_real(const std::string& s) {
    try {
        return Real(s);
    } catch (const std::exception&) {
        throw Error(Errc::SchemaError, "not a decimal number: '" + s + "'");
    }
}

std::string to_string(const Real& x, int digits) {
    if (digits <= 0) digits = static_cast<int>(g_bits * 0.30102999566398120) - 4;
    if (digits < 6) digits = 6;
    if (x == 0) return "0";
    return x.str(digits, std::ios_base::scientific);
}

Rational bernoulli(int n) {
    if (n < 0) throw Error(Errc::InvalidArgument, "bernoulli: negative index");
    static std::mutex mu;
    static std::vector<Rational> cache{Rational(1)};
    std::lock_guard<std::mutex> lock(mu);
    // sum_{k<m} C(m+1,k) B_k = -(m+1) B_m, computed with B1 = -1/2
    while (static_cast<int>(cache.size()) <= n) {
        int m = static_cast<int>(cache.size());
        Rational s = 0;
        Int c = 1;
        for (int k = 0; k < m; ++k) {
            s += Rational(c) * cache[k];
            c = c * (m + 1 - k) / (k + 1);
        }
        cache.push_back(-s / (m + 1));
    }
    if (n == 1) return Rational(1, 2);
    return cache[n];
}

std::vector<Int> neg_polylog_numerator(int m) {
    if (m > 0) throw Error(Errc::InvalidArgument, "neg_polylog_numerator: m must be <= 0");
    static std::mutex mu;
    static std::vector<std::vector<Int>> cache{{Int(0), Int(1)}};
    std::lock_guard<std::mutex> lock(mu);
    // Li_{c-1} = w (N_c' (1-w) + (1-c) N_c) / (1-w)^(2-c)
    while (static_cast<int>(cache.size()) <= -m) {
        int c = 1 - static_cast<int>(cache.size());
        const auto& N = cache.back();
        std::vector<Int> t(N.size() + 1, Int(0));
        for (size_t i = 1; i < N.size(); ++i) {
            Int d = N[i] * static_cast<long>(i);
            t[i - 1] += d;
            t[i] -= d;
        }
        for (size_t i = 0; i < N.size(); ++i) t[i] += N[i] * (1 - c);
        std::vector<Int> next(1, Int(0));
        next.insert(next.end(), t.begin(), t.end());
        while (next.size() > 1 && next.back() == 0) next.pop_back();
        cache.push_back(std::move(next));
    }
    return cache[-m];
}

Complex neg_polylog(int m, const Complex& w) {
    if (m > 1) throw Error(Errc::InvalidArgument, "neg_polylog: m must be <= 1");
    Complex one_minus = Complex(1) - w;
    if (m == 1) {
        if (abs(one_minus) < tolerance()) throw Error(Errc::PoleAtOne, "Li_1 evaluated at 1");
        return -log(one_minus);
    }
    if (abs(one_minus) < tolerance()) throw Error(Errc::PoleAtOne, "Li_m pole at w = 1");
    auto N = neg_polylog_numerator(m);
    Complex num;
    for (size_t i = N.size(); i-- > 0;) num = num * w + Complex(Real(N[i]));
    return num / ipow(one_minus, 1 - m);
}

namespace {

const std::vector<Real>& bernoulli_reals(size_t count) {
    static unsigned bits = 0;
    static std::vector<Real> cache;
    if (bits != g_bits) {
        bits = g_bits;
        cache.clear();
    }
    while (cache.size() < count) {
        Rational b = bernoulli(static_cast<int>(cache.size()));
        cache.push_back(Real(numerator(b)) / Real(denominator(b)));
    }
    return cache;
}

// sum_k B_k u^(k+1)/(k+1)! with B1 = -1/2; converges for |u| < 2 pi
Complex dilog_bernoulli(const Complex& w) {
    Complex u = -log(Complex(1) - w);
    const size_t kmax = 4 * g_bits + 16;
    const auto& B = bernoulli_reals(kmax + 1);
    Real eps = ldexp(Real(1), -static_cast<int>(g_bits) - 8);
    Complex sum = u - u * u / 4;
    Complex p = u * u / 2;
    for (size_t k = 2; k < kmax; ++k) {
        p *= u;
        p /= Real(static_cast<unsigned long>(k + 1));
        if (k % 2) continue;
        Complex term = p * Complex(B[k]);
        sum += term;
        if (abs(term) < eps * abs(sum)) break;
    }
    return sum;
}

}  // namespace

Complex dilog(const Complex& w) {
    const Real z2 = pi() * pi() / 6;
    if (w.re == 0 && w.im == 0) return Complex();
    if (norm2(w) > 1) {
        // Li2(w) = -Li2(1/w) - pi^2/6 - log(-w)^2/2
        Complex l = log(-w);
        return -dilog(Complex(1) / w) - Complex(z2) - l * l / 2;
    }
    if (w.re > Real(1) / 2) {
        Complex om = Complex(1) - w;
        if (om.re == 0 && om.im == 0) return Complex(z2);
        return Complex(z2) - log(w) * log(om) - dilog_bernoulli(om);
    }
    return dilog_bernoulli(w);
}

Real bloch_wigner(const Complex& w) {
    if (abs(w) < tolerance() || abs(Complex(1) - w) < tolerance())
        throw Error(Errc::BranchPoint, "Bloch-Wigner function at 0 or 1");
    return dilog(w).im + arg(Complex(1) - w) * boost::multiprecision::log(abs(w));
}

}  // namespace nz
