#include "nzloops/series.hpp"

#include "nzloops/error.hpp"

#include <algorithm>

namespace nz {

int MonoKey::degree() const {
    int s = 0;
    for (auto v : e) s += v;
    return s;
}

TruncatedSeries::TruncatedSeries(int nvars, int max_h, int max_deg)
    : nvars_(nvars), max_h_(max_h), max_deg_(max_deg) {
    if (nvars < 0 || nvars > kMaxVars) throw Error(Errc::InvalidArgument, "series supports at most 32 variables");
    if (max_deg > 255) throw Error(Errc::InvalidArgument, "x-degree bound above 255");
}

TruncatedSeries TruncatedSeries::constant(int nvars, int max_h, int max_deg, const Complex& c) {
    TruncatedSeries s(nvars, max_h, max_deg);
    s.add(MonoKey{}, c);
    return s;
}

bool TruncatedSeries::in_bounds(const MonoKey& k) const { return k.h >= 0 && k.h <= max_h_ && k.degree() <= max_deg_; }

void TruncatedSeries::add(const MonoKey& k, const Complex& c) {
    if (!in_bounds(k)) return;
    auto it = terms_.find(k);
    if (it == terms_.end())
        terms_.emplace(k, c);
    else
        it->second += c;
}

Complex TruncatedSeries::coeff(const MonoKey& k) const {
    auto it = terms_.find(k);
    return it == terms_.end() ? Complex() : it->second;
}

TruncatedSeries TruncatedSeries::operator+(const TruncatedSeries& o) const {
    TruncatedSeries r(nvars_, std::min(max_h_, o.max_h_), std::min(max_deg_, o.max_deg_));
    for (const auto& [k, c] : terms_) r.add(k, c);
    for (const auto& [k, c] : o.terms_) r.add(k, c);
    return r;
}

TruncatedSeries TruncatedSeries::operator*(const TruncatedSeries& o) const {
    TruncatedSeries r(nvars_, std::min(max_h_, o.max_h_), std::min(max_deg_, o.max_deg_));
    for (const auto& [k1, c1] : terms_) {
        const int d1 = k1.degree();
        for (const auto& [k2, c2] : o.terms_) {
            if (k1.h + k2.h > r.max_h_ || d1 + k2.degree() > r.max_deg_) continue;
            MonoKey k;
            k.h = k1.h + k2.h;
            for (int v = 0; v < nvars_; ++v) k.e[v] = static_cast<std::uint8_t>(k1.e[v] + k2.e[v]);
            r.add(k, c1 * c2);
        }
    }
    return r;
}

TruncatedSeries TruncatedSeries::scaled(const Complex& c) const {
    TruncatedSeries r(nvars_, max_h_, max_deg_);
    for (const auto& [k, v] : terms_) r.add(k, v * c);
    return r;
}

TruncatedSeries TruncatedSeries::exp() const {
    if (terms_.count(MonoKey{})) {
        const Complex& c0 = terms_.at(MonoKey{});
        if (c0.re != 0 || c0.im != 0) throw Error(Errc::InvalidArgument, "series exp needs a zero constant term");
    }
    TruncatedSeries result = constant(nvars_, max_h_, max_deg_, Complex(1));
    TruncatedSeries term = result;
    for (long p = 1; !term.terms_.empty(); ++p) {
        term = (term * *this).scaled(Complex(Real(1) / Real(p)));
        result = result + term;
    }
    return result;
}

Propagator make_propagator(const CMat& h) {
    Propagator p;
    p.h = h;
    if (!inverse(h, p.hinv)) throw Error(Errc::SingularHessian, "Hessian is singular");
    return p;
}

namespace {

Real to_real(const Rational& q) { return Real(numerator(q)) / Real(denominator(q)); }

}  // namespace

Propagator build_hessian(const NZDatum& d, const CVec& z) {
    const int n = d.n;
    if (det(to_zmat(d.b)) == 0) throw Error(Errc::InvalidArgument, "det B = 0; normalize quads first");
    QMat q = binv_times(d.b, d.a);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < i; ++j)
            if (q[i][j] != q[j][i]) throw Error(Errc::SymplecticViolation, "B^-1 A is not symmetric");
    CMat h(n, CVec(n));
    const Complex one(1);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            h[i][j] = Complex(-to_real(q[i][j]));
            if (i == j) h[i][j] += one / (one - z[i]);
        }
    return make_propagator(h);
}

WickEngine::WickEngine(const CMat& hinv) : g_(hinv), n_(static_cast<int>(hinv.size())) {}

Complex WickEngine::pairing(const Exps& k) {
    int total = 0, first = -1;
    for (int v = 0; v < n_; ++v) {
        total += k[v];
        if (first < 0 && k[v]) first = v;
    }
    if (total == 0) return Complex(1);
    if (total % 2) return Complex();
    auto it = memo_.find(k);
    if (it != memo_.end()) return it->second;
    Exps k1 = k;
    --k1[first];
    Complex s;
    for (int j = 0; j < n_; ++j) {
        if (!k1[j]) continue;
        Exps k2 = k1;
        --k2[j];
        s += g_[first][j] * Complex(static_cast<int>(k1[j])) * pairing(k2);
    }
    memo_.emplace(k, s);
    return s;
}

namespace {

Exps to_exps(const std::vector<int>& kappa) {
    if (kappa.size() > static_cast<size_t>(kMaxVars)) throw Error(Errc::InvalidArgument, "too many variables");
    Exps e{};
    for (size_t i = 0; i < kappa.size(); ++i) {
        if (kappa[i] < 0 || kappa[i] > 255) throw Error(Errc::InvalidArgument, "exponent out of range");
        e[i] = static_cast<std::uint8_t>(kappa[i]);
    }
    return e;
}

Int count_matchings(const Exps& k, int n, std::map<Exps, Int>& memo) {
    int total = 0, first = -1;
    for (int v = 0; v < n; ++v) {
        total += k[v];
        if (first < 0 && k[v]) first = v;
    }
    if (total == 0) return 1;
    if (total % 2) return 0;
    auto it = memo.find(k);
    if (it != memo.end()) return it->second;
    Exps k1 = k;
    --k1[first];
    Int s = 0;
    for (int j = 0; j < n; ++j) {
        if (!k1[j]) continue;
        Exps k2 = k1;
        --k2[j];
        s += Int(k1[j]) * count_matchings(k2, n, memo);
    }
    memo.emplace(k, s);
    return s;
}

Complex rational_c(const Rational& q) { return Complex(to_real(q)); }

}  // namespace

Complex wick_pairing(const std::vector<int>& kappa, const CMat& hinv) {
    if (kappa.size() != hinv.size()) throw Error(Errc::InvalidArgument, "multi-index length != N");
    WickEngine w(hinv);
    return w.pairing(to_exps(kappa));
}

Int wick_term_count(const std::vector<int>& kappa) {
    std::map<Exps, Int> memo;
    return count_matchings(to_exps(kappa), static_cast<int>(kappa.size()), memo);
}

TruncatedSeries tetra_exponent(const Complex& z, int max_h, int max_deg) {
    TruncatedSeries s(1, max_h, max_deg);
    const Complex w = Complex(1) / z;
    Rational nfact = 1;
    for (int n = 0; 2 * n - 2 <= max_h; ++n) {
        if (n > 0) nfact *= n;
        Rational bn = bernoulli(n);
        if (bn == 0) continue;
        Rational kfact = 1;
        for (int k = 0; 2 * n + k - 2 <= max_h && k <= max_deg; ++k) {
            if (k > 0) kfact *= k;
            const int h = 2 * n + k - 2;
            if (h <= 0) continue;
            Rational c = bn / (nfact * kfact);
            if (k % 2) c = -c;
            MonoKey key;
            key.h = h;
            key.e[0] = static_cast<std::uint8_t>(k);
            s.add(key, rational_c(c) * neg_polylog(2 - n - k, w));
        }
    }
    return s;
}

TruncatedSeries tetra_series(const Complex& z, int max_h, int max_deg) { return tetra_exponent(z, max_h, max_deg).exp(); }

TruncatedSeries integrand_series(const NZDatum& d, const CVec& z, const Flattening& fl, const SeriesBounds& b) {
    const int n = d.n;
    if (n > kMaxVars) throw Error(Errc::InvalidArgument, "at most 32 tetrahedra");
    if (det(to_zmat(d.b)) == 0) throw Error(Errc::InvalidArgument, "det B = 0; normalize quads first");
    IMat eta_col;
    for (auto e : d.eta) eta_col.push_back({e});
    QMat bi_eta = binv_times(d.b, eta_col);
    QMat bi_a = binv_times(d.b, d.a);
    Rational q = 0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) q += Rational(fl.f[i]) * bi_a[i][j] * Rational(fl.f[j]);
    q /= 8;

    TruncatedSeries prod = TruncatedSeries::constant(n, b.max_h, b.max_deg, Complex(1));
    for (int i = 0; i < n; ++i) {
        TruncatedSeries e1 = tetra_exponent(z[i], b.max_h, b.max_deg);
        MonoKey lin;
        lin.h = 1;
        lin.e[0] = 1;
        e1.add(lin, rational_c(-bi_eta[i][0] / 2));
        TruncatedSeries u1 = e1.exp();
        TruncatedSeries embedded(n, b.max_h, b.max_deg);
        for (const auto& [k, c] : u1.terms()) {
            MonoKey kk;
            kk.h = k.h;
            kk.e[i] = k.e[0];
            embedded.add(kk, c);
        }
        prod = prod * embedded;
    }
    TruncatedSeries pre(n, b.max_h, b.max_deg);
    MonoKey hk;
    hk.h = 2;
    pre.add(hk, rational_c(q));
    return prod * pre.exp();
}

CVec gaussian_expectation(const TruncatedSeries& s, const Propagator& p, bool require_integral) {
    if (static_cast<int>(p.hinv.size()) != s.nvars()) throw Error(Errc::InvalidArgument, "propagator size != N");
    WickEngine w(p.hinv);
    CVec out(s.max_h() + 1, Complex());
    for (const auto& [k, c] : s.terms()) out[k.h] += c * w.pairing(k.e);
    if (require_integral) {
        Real scale = 1;
        for (size_t h = 0; h < out.size(); h += 2) scale = std::max(scale, abs(out[h]));
        for (size_t h = 1; h < out.size(); h += 2)
            if (abs(out[h]) > tolerance() * scale)
                throw Error(Errc::HalfIntegerSurvivor,
                            "coefficient of hbar^" + std::to_string(h) + "/2 is " + to_string(abs(out[h]), 10));
    }
    return out;
}

}  // namespace nz
