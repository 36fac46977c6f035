#include "nzloops/exactla.hpp"

#include "nzloops/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace nz {

namespace {

Int floor_div(const Int& a, const Int& b) {
    Int q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) q -= 1;
    return q;
}

void row_axpy(ZVec& dst, const ZVec& src, const Int& q) {
    for (size_t j = 0; j < dst.size(); ++j) dst[j] -= q * src[j];
}

ZMat identity(size_t n) {
    ZMat u(n, ZVec(n, Int(0)));
    for (size_t i = 0; i < n; ++i) u[i][i] = 1;
    return u;
}

long long to_ll(const Int& x) {
    if (x > std::numeric_limits<long long>::max() || x < std::numeric_limits<long long>::min())
        throw Error(Errc::IntegerOverflow, "value exceeds 64-bit range");
    return x.convert_to<long long>();
}

long long dot(const IVec& a, const IVec& b) {
    Int s = 0;
    for (size_t i = 0; i < a.size(); ++i) s += Int(a[i]) * b[i];
    return to_ll(s);
}

long long l1(const IVec& v) {
    long long s = 0;
    for (auto x : v) s += x < 0 ? -x : x;
    return s;
}

}  // namespace

ZMat to_zmat(const IMat& m) {
    ZMat out;
    for (const auto& r : m) {
        ZVec z;
        for (auto x : r) z.emplace_back(x);
        out.push_back(std::move(z));
    }
    return out;
}

HnfResult hnf(const ZMat& m) {
    HnfResult res{m, identity(m.size())};
    auto& h = res.h;
    auto& u = res.u;
    const size_t rows = h.size();
    const size_t cols = rows ? h[0].size() : 0;
    size_t r = 0;
    for (size_t c = 0; c < cols && r < rows; ++c) {
        for (;;) {
            size_t p = rows;
            for (size_t i = r; i < rows; ++i)
                if (h[i][c] != 0 && (p == rows || abs(h[i][c]) < abs(h[p][c]))) p = i;
            if (p == rows) break;
            std::swap(h[p], h[r]);
            std::swap(u[p], u[r]);
            bool clean = true;
            for (size_t i = r + 1; i < rows; ++i) {
                if (h[i][c] == 0) continue;
                Int q = h[i][c] / h[r][c];
                row_axpy(h[i], h[r], q);
                row_axpy(u[i], u[r], q);
                if (h[i][c] != 0) clean = false;
            }
            if (clean) break;
        }
        if (h[r][c] == 0) continue;
        if (h[r][c] < 0) {
            for (auto& x : h[r]) x = -x;
            for (auto& x : u[r]) x = -x;
        }
        for (size_t i = 0; i < r; ++i) {
            Int q = floor_div(h[i][c], h[r][c]);
            if (q == 0) continue;
            row_axpy(h[i], h[r], q);
            row_axpy(u[i], u[r], q);
        }
        ++r;
    }
    return res;
}

Int det(const ZMat& m0) {
    const size_t n = m0.size();
    if (n == 0) return 1;
    ZMat m = m0;
    Int sign = 1, prev = 1;
    for (size_t k = 0; k + 1 < n; ++k) {
        if (m[k][k] == 0) {
            size_t p = k + 1;
            while (p < n && m[p][k] == 0) ++p;
            if (p == n) return 0;
            std::swap(m[p], m[k]);
            sign = -sign;
        }
        for (size_t i = k + 1; i < n; ++i)
            for (size_t j = k + 1; j < n; ++j) m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) / prev;
        prev = m[k][k];
    }
    return sign * m[n - 1][n - 1];
}

int rank(const ZMat& m) {
    if (m.empty()) return 0;
    auto h = hnf(m).h;
    int r = 0;
    for (const auto& row : h)
        if (std::any_of(row.begin(), row.end(), [](const Int& x) { return x != 0; })) ++r;
    return r;
}

namespace {

struct Gso {
    std::vector<std::vector<Rational>> mu;
    std::vector<Rational> bn;
};

Gso gram_schmidt(const ZMat& b) {
    const size_t k = b.size();
    Gso g;
    g.mu.assign(k, std::vector<Rational>(k, Rational(0)));
    g.bn.assign(k, Rational(0));
    std::vector<std::vector<Rational>> bs(k);
    for (size_t i = 0; i < k; ++i) {
        bs[i].assign(b[i].begin(), b[i].end());
        for (size_t j = 0; j < i; ++j) {
            Rational d = 0;
            for (size_t t = 0; t < b[i].size(); ++t) d += Rational(b[i][t]) * bs[j][t];
            g.mu[i][j] = g.bn[j] == 0 ? Rational(0) : d / g.bn[j];
            for (size_t t = 0; t < b[i].size(); ++t) bs[i][t] -= g.mu[i][j] * bs[j][t];
        }
        for (auto& x : bs[i]) g.bn[i] += x * x;
    }
    return g;
}

Int round_q(const Rational& q) {
    Rational h = q + Rational(1, 2);
    return floor_div(numerator(h), denominator(h));
}

}  // namespace

ZMat lll_reduce(ZMat b) {
    const size_t k = b.size();
    if (k < 2) return b;
    const Rational delta(3, 4);
    Gso g = gram_schmidt(b);
    size_t i = 1;
    while (i < k) {
        for (size_t j = i; j-- > 0;) {
            Int q = round_q(g.mu[i][j]);
            if (q != 0) {
                row_axpy(b[i], b[j], q);
                g = gram_schmidt(b);
            }
        }
        Rational m = g.mu[i][i - 1];
        if (g.bn[i] >= (delta - m * m) * g.bn[i - 1]) {
            ++i;
        } else {
            std::swap(b[i], b[i - 1]);
            g = gram_schmidt(b);
            i = std::max<size_t>(i - 1, 1);
        }
    }
    return b;
}

QMat binv_times(const IMat& b, const IMat& rhs) {
    const size_t n = b.size();
    const size_t k = rhs.empty() ? 0 : rhs[0].size();
    QMat m(n, std::vector<Rational>(n + k, Rational(0)));
    for (size_t i = 0; i < n; ++i) {
        for (size_t j = 0; j < n; ++j) m[i][j] = Rational(b[i][j]);
        for (size_t j = 0; j < k; ++j) m[i][n + j] = Rational(rhs[i][j]);
    }
    for (size_t c = 0; c < n; ++c) {
        size_t p = c;
        while (p < n && m[p][c] == 0) ++p;
        if (p == n) throw Error(Errc::InvalidArgument, "B is singular");
        std::swap(m[p], m[c]);
        Rational inv = 1 / m[c][c];
        for (auto& x : m[c]) x *= inv;
        for (size_t i = 0; i < n; ++i) {
            if (i == c || m[i][c] == 0) continue;
            Rational f = m[i][c];
            for (size_t j = c; j < n + k; ++j) m[i][j] -= f * m[c][j];
        }
    }
    QMat out(n);
    for (size_t i = 0; i < n; ++i) out[i].assign(m[i].begin() + n, m[i].end());
    return out;
}

SymplecticReport check_symplectic(const NZDatum& d) {
    SymplecticReport rep;
    const int n = d.n;
    ZMat a = to_zmat(d.a), b = to_zmat(d.b);
    rep.ab_symmetric = true;
    for (int i = 0; i < n && rep.ab_symmetric; ++i)
        for (int j = 0; j < n; ++j) {
            Int x = 0, y = 0;
            for (int k = 0; k < n; ++k) {
                x += a[i][k] * b[j][k];
                y += a[j][k] * b[i][k];
            }
            if (x != y) {
                rep.ab_symmetric = false;
                break;
            }
        }
    ZMat ab(n);
    for (int i = 0; i < n; ++i) {
        ab[i] = a[i];
        ab[i].insert(ab[i].end(), b[i].begin(), b[i].end());
    }
    rep.rank_ab = rank(ab);
    rep.det_b = det(b);
    if (rep.det_b != 0) {
        QMat m = binv_times(d.b, d.a);
        bool sym = true;
        for (int i = 0; i < n && sym; ++i)
            for (int j = 0; j < i; ++j)
                if (m[i][j] != m[j][i]) {
                    sym = false;
                    break;
                }
        rep.binv_a_symmetric = sym;
    }
    if (d.longitude) {
        Int s = 0;
        for (int i = 0; i < n; ++i)
            s += Int(d.a[n - 1][i]) * d.longitude->two_d[i] - Int(d.b[n - 1][i]) * d.longitude->two_c[i];
        rep.longitude_ok = (s == 2);
    }
    return rep;
}

FlatteningLattice flattening_lattice(const NZDatum& d, bool require_longitude) {
    const int n = d.n;
    if (require_longitude && !d.longitude)
        throw Error(Errc::InvalidArgument, "longitude-compatible flattening needs longitude data");
    IMat rows;
    IVec rhs;
    for (int i = 0; i < n; ++i) {
        IVec r = d.a[i];
        r.insert(r.end(), d.b[i].begin(), d.b[i].end());
        rows.push_back(r);
        rhs.push_back(d.eta[i]);
    }
    if (require_longitude) {
        IVec r = d.longitude->two_c;
        r.insert(r.end(), d.longitude->two_d.begin(), d.longitude->two_d.end());
        rows.push_back(r);
        rhs.push_back(d.longitude->two_eta);
    }
    const size_t m = rows.size(), k = 2 * n;
    // U M^T = H, so M U^T = H^T and x = U^T y
    ZMat mt(k, ZVec(m));
    for (size_t i = 0; i < m; ++i)
        for (size_t j = 0; j < k; ++j) mt[j][i] = rows[i][j];
    auto [h, u] = hnf(mt);
    std::vector<size_t> pivots;
    for (size_t r = 0; r < k; ++r) {
        size_t c = 0;
        while (c < m && h[r][c] == 0) ++c;
        if (c == m) break;
        pivots.push_back(c);
    }
    ZVec y(k, Int(0));
    ZVec res(rhs.begin(), rhs.end());
    for (size_t j = 0; j < pivots.size(); ++j) {
        size_t c = pivots[j];
        if (res[c] % h[j][c] != 0) throw Error(Errc::NoIntegerSolution, "no integer flattening exists");
        y[j] = res[c] / h[j][c];
        for (size_t i = 0; i < m; ++i) res[i] -= h[j][i] * y[j];
    }
    for (const auto& x : res)
        if (x != 0) throw Error(Errc::NoIntegerSolution, "flattening equations are inconsistent");
    FlatteningLattice out;
    out.particular.assign(k, 0);
    for (size_t i = 0; i < k; ++i) {
        Int s = 0;
        for (size_t j = 0; j < pivots.size(); ++j) s += u[j][i] * y[j];
        out.particular[i] = to_ll(s);
    }
    ZMat ker(u.begin() + pivots.size(), u.end());
    for (const auto& v : lll_reduce(ker)) {
        IVec w;
        for (const auto& x : v) w.push_back(to_ll(x));
        out.kernel.push_back(w);
    }
    return out;
}

namespace {

bool better(const IVec& x, long long cx, const IVec& y, long long cy) {
    if (cx != cy) return cx < cy;
    return x < y;
}

IVec add(const IVec& x, const IVec& v, long long s) {
    IVec r(x);
    for (size_t i = 0; i < r.size(); ++i) r[i] += s * v[i];
    return r;
}

// Schnorr-Euchner style enumeration of x0 + span(ker) inside the L2 ball of
// radius best-L1, exact L1/lex comparison at leaves.
struct Enumerator {
    const IVec& x0;
    const std::vector<IVec>& ker;
    std::vector<std::vector<double>> mu;
    std::vector<double> bn, tau;
    double perp2 = 0;
    IVec best;
    long long best_cost;
    long long nodes = 0;
    long long budget;
    bool exhausted = false;
    std::vector<long long> lambda;

    Enumerator(const IVec& x, const std::vector<IVec>& k, IVec start, long long budget_)
        : x0(x), ker(k), best(std::move(start)), budget(budget_) {
        best_cost = l1(best);
        const size_t n = ker.size(), dim = x0.size();
        mu.assign(n, std::vector<double>(n, 0));
        bn.assign(n, 0);
        tau.assign(n, 0);
        std::vector<std::vector<double>> bs(n);
        for (size_t i = 0; i < n; ++i) {
            bs[i].assign(ker[i].begin(), ker[i].end());
            for (size_t j = 0; j < i; ++j) {
                double d = 0;
                for (size_t t = 0; t < dim; ++t) d += ker[i][t] * bs[j][t];
                mu[i][j] = d / bn[j];
                for (size_t t = 0; t < dim; ++t) bs[i][t] -= mu[i][j] * bs[j][t];
            }
            for (double v : bs[i]) bn[i] += v * v;
        }
        // target t = -x0
        std::vector<double> t(dim);
        for (size_t i = 0; i < dim; ++i) t[i] = -static_cast<double>(x0[i]);
        std::vector<double> rest = t;
        for (size_t j = 0; j < n; ++j) {
            double d = 0;
            for (size_t s = 0; s < dim; ++s) d += t[s] * bs[j][s];
            tau[j] = d / bn[j];
            for (size_t s = 0; s < dim; ++s) rest[s] -= tau[j] * bs[j][s];
        }
        for (double v : rest) perp2 += v * v;
        lambda.assign(n, 0);
    }

    void leaf() {
        IVec x = x0;
        for (size_t j = 0; j < ker.size(); ++j)
            if (lambda[j])
                for (size_t i = 0; i < x.size(); ++i) x[i] += lambda[j] * ker[j][i];
        long long c = l1(x);
        if (better(x, c, best, best_cost)) {
            best = x;
            best_cost = c;
        }
    }

    void rec(int j, double used) {
        if (exhausted) return;
        if (++nodes > budget) {
            exhausted = true;
            return;
        }
        if (j < 0) {
            leaf();
            return;
        }
        double r2 = static_cast<double>(best_cost) * static_cast<double>(best_cost);
        double rem = r2 - perp2 - used + 1e-7 * (1 + r2);
        if (rem < 0) return;
        double c = tau[j];
        for (size_t i = j + 1; i < ker.size(); ++i) c -= lambda[i] * mu[i][j];
        double w = std::sqrt(rem / bn[j]);
        long long lo = static_cast<long long>(std::ceil(c - w));
        long long hi = static_cast<long long>(std::floor(c + w));
        for (long long v = lo; v <= hi; ++v) {
            lambda[j] = v;
            double dv = (v - c);
            rec(j - 1, used + dv * dv * bn[j]);
            if (exhausted) return;
        }
        lambda[j] = 0;
    }
};

}  // namespace

Flattening solve_flattening(const NZDatum& d, bool require_longitude) {
    auto lat = flattening_lattice(d, require_longitude);
    const auto& ker = lat.kernel;
    IVec best = lat.particular;
    long long cost = l1(best);
    // local descent on +-b_i and +-b_i+-b_j
    for (bool improved = true; improved;) {
        improved = false;
        for (size_t i = 0; i < ker.size(); ++i)
            for (long long s : {1LL, -1LL}) {
                IVec c = add(best, ker[i], s);
                if (better(c, l1(c), best, cost)) {
                    best = c;
                    cost = l1(c);
                    improved = true;
                }
                for (size_t j = i + 1; j < ker.size(); ++j)
                    for (long long t : {1LL, -1LL}) {
                        IVec e = add(c, ker[j], t);
                        if (better(e, l1(e), best, cost)) {
                            best = e;
                            cost = l1(e);
                            improved = true;
                        }
                    }
            }
    }
    Enumerator en(lat.particular, ker, best, 20'000'000);
    en.rec(static_cast<int>(ker.size()) - 1, 0.0);
    const IVec& x = en.best;
    const size_t n = d.n;
    IVec f(x.begin(), x.begin() + n), fpp(x.begin() + n, x.end());
    return make_flattening(d, f, fpp);
}

Flattening make_flattening(const NZDatum& d, const IVec& f, const IVec& fpp) {
    if (f.size() != static_cast<size_t>(d.n) || fpp.size() != static_cast<size_t>(d.n))
        throw Error(Errc::InvalidArgument, "flattening length != N");
    Flattening fl;
    fl.f = f;
    fl.fpp = fpp;
    fl.fp.resize(d.n);
    for (int i = 0; i < d.n; ++i) fl.fp[i] = 1 - f[i] - fpp[i];
    fl.longitude_compatible = d.longitude && check_flattening(d, fl, true);
    return fl;
}

bool check_flattening(const NZDatum& d, const Flattening& fl, bool require_longitude) {
    const int n = d.n;
    if (fl.f.size() != static_cast<size_t>(n) || fl.fp.size() != static_cast<size_t>(n) ||
        fl.fpp.size() != static_cast<size_t>(n))
        return false;
    for (int i = 0; i < n; ++i)
        if (fl.f[i] + fl.fp[i] + fl.fpp[i] != 1) return false;
    for (int i = 0; i < n; ++i)
        if (dot(d.a[i], fl.f) + dot(d.b[i], fl.fpp) != d.eta[i]) return false;
    if (require_longitude) {
        if (!d.longitude) return false;
        if (dot(d.longitude->two_c, fl.f) + dot(d.longitude->two_d, fl.fpp) != d.longitude->two_eta) return false;
    }
    return true;
}

// ---- moves ----

namespace {

std::string params_str(std::initializer_list<std::pair<const char*, long long>> kv) {
    std::ostringstream os;
    bool first = true;
    for (auto& [k, v] : kv) {
        os << (first ? "" : ",") << k << "=" << v;
        first = false;
    }
    return os.str();
}

void check_tet(const State& s, int tet) {
    if (tet < 1 || tet > s.datum.n) throw Error(Errc::InvalidArgument, "tetrahedron index out of range");
}

void refresh_flattening(State& s) {
    if (!s.flattening) return;
    s.flattening->longitude_compatible = s.datum.longitude && check_flattening(s.datum, *s.flattening, true);
}

Real shape_eps() { return ldexp(Real(1), -16); }

bool degenerate(const Complex& z) {
    Real e = shape_eps();
    return abs(z) < e || abs(Complex(1) - z) < e || abs(z) > 1 / e;
}

}  // namespace

MoveCertificate rotate_quad(State& s, int tet, Direction dir) {
    check_tet(s, tet);
    MoveCertificate cert;
    cert.kind = "rotate";
    cert.params = params_str({{"tet", tet}, {"dir", dir == Direction::Fwd ? 1 : -1}});
    cert.input_hash = datum_hash(s.datum);
    const int i = tet - 1;
    auto& d = s.datum;
    for (int r = 0; r < d.n; ++r) {
        long long a = d.a[r][i], b = d.b[r][i];
        if (dir == Direction::Fwd) {
            d.a[r][i] = -b;
            d.b[r][i] = a - b;
            d.eta[r] -= b;
        } else {
            d.a[r][i] = b - a;
            d.b[r][i] = -a;
            d.eta[r] -= a;
        }
    }
    if (d.longitude) {
        auto& l = *d.longitude;
        long long c = l.two_c[i], e = l.two_d[i];
        if (dir == Direction::Fwd) {
            l.two_c[i] = -e;
            l.two_d[i] = c - e;
            l.two_eta -= e;
        } else {
            l.two_c[i] = e - c;
            l.two_d[i] = -c;
            l.two_eta -= c;
        }
    }
    if (!s.shapes.empty()) {
        Complex& z = s.shapes[i];
        z = dir == Direction::Fwd ? Complex(1) / (Complex(1) - z) : Complex(1) - Complex(1) / z;
    }
    if (s.flattening) {
        auto& fl = *s.flattening;
        long long f = fl.f[i], fp = fl.fp[i], fpp = fl.fpp[i];
        if (dir == Direction::Fwd) {
            cert.tau_sign = (f + 1) % 2 ? -1 : 1;
            fl.f[i] = fp;
            fl.fp[i] = fpp;
            fl.fpp[i] = f;
        } else {
            cert.tau_sign = (f + fp) % 2 ? -1 : 1;
            fl.f[i] = fpp;
            fl.fp[i] = f;
            fl.fpp[i] = fp;
        }
        refresh_flattening(s);
    }
    cert.output_hash = datum_hash(d);
    return cert;
}

MoveCertificate change_edge(State& s, int row) {
    auto& d = s.datum;
    if (row < 1 || row >= d.n) throw Error(Errc::InvalidArgument, "edge change needs 1 <= I < N");
    MoveCertificate cert;
    cert.kind = "edge";
    cert.params = params_str({{"row", row}});
    cert.input_hash = datum_hash(d);
    const int I = row - 1;
    IVec na(d.n, 0), nb(d.n, 0);
    long long ne = 0;
    for (int r = 0; r + 1 < d.n; ++r) {
        for (int j = 0; j < d.n; ++j) {
            na[j] -= d.a[r][j];
            nb[j] -= d.b[r][j];
        }
        ne -= d.eta[r];
    }
    d.a[I] = na;
    d.b[I] = nb;
    d.eta[I] = ne;
    std::swap(d.edge_rows[I], d.dropped_edge);
    cert.tau_sign = -1;
    refresh_flattening(s);
    cert.output_hash = datum_hash(d);
    return cert;
}

MoveCertificate meridian_move(State& s, int row, int sign) {
    auto& d = s.datum;
    if (row < 1 || row >= d.n) throw Error(Errc::InvalidArgument, "meridian move needs 1 <= I < N");
    if (sign != 1 && sign != -1) throw Error(Errc::InvalidArgument, "meridian move sign must be +1 or -1");
    MoveCertificate cert;
    cert.kind = "meridian";
    cert.params = params_str({{"row", row}, {"sign", sign}});
    cert.input_hash = datum_hash(d);
    const int I = row - 1, N = d.n - 1;
    for (int j = 0; j < d.n; ++j) {
        d.a[N][j] += sign * d.a[I][j];
        d.b[N][j] += sign * d.b[I][j];
    }
    d.eta[N] += sign * d.eta[I];
    cert.tau_sign = 1;
    refresh_flattening(s);
    cert.output_hash = datum_hash(d);
    return cert;
}

MoveCertificate swap_flattening(State& s, const Flattening& target) {
    if (!check_flattening(s.datum, target, false))
        throw Error(Errc::InvalidArgument, "target flattening does not satisfy A f + B f'' = eta");
    MoveCertificate cert;
    cert.kind = "flattening";
    cert.input_hash = datum_hash(s.datum);
    cert.output_hash = cert.input_hash;
    std::ostringstream os;
    os << "f=";
    for (auto x : target.f) os << x << ' ';
    os << "fpp=";
    for (auto x : target.fpp) os << x << ' ';
    cert.params = os.str();
    if (s.flattening) {
        long long e = dot(s.flattening->fpp, target.f) - dot(s.flattening->f, target.fpp);
        cert.tau_sign = e % 2 ? -1 : 1;
    }
    s.flattening = target;
    refresh_flattening(s);
    return cert;
}

MoveCertificate two_three_move(State& s, const TwoThreeSite& site) {
    auto& d = s.datum;
    check_tet(s, site.tet1);
    check_tet(s, site.tet2);
    if (site.tet1 == site.tet2) throw Error(Errc::QuadMismatch, "2-3 move needs two distinct tetrahedra");
    MoveCertificate cert;
    cert.kind = "twothree";
    cert.params = params_str({{"tet1", site.tet1}, {"tet2", site.tet2}});
    cert.input_hash = datum_hash(d);
    const int n = d.n, i1 = site.tet1 - 1, i2 = site.tet2 - 1;

    std::vector<Complex> shapes;
    if (!s.shapes.empty()) {
        const Complex one(1), x1 = s.shapes[i1], x2 = s.shapes[i2];
        Complex wp[3] = {x1 * x2, (one - one / x2) / (one - x1), (one - one / x1) / (one - x2)};
        Complex w[3];
        for (int k = 0; k < 3; ++k) {
            if (degenerate(wp[k])) throw Error(Errc::DegenerateMove, "mapped shape hits {0,1,inf}");
            w[k] = one - one / wp[k];
            if (degenerate(w[k]) || degenerate(one - one / w[k]))
                throw Error(Errc::DegenerateMove, "mapped shape hits {0,1,inf}");
        }
        shapes = s.shapes;
        shapes[i1] = w[0];
        shapes[i2] = w[1];
        shapes.push_back(w[2]);
    }

    NZDatum out;
    out.n = n + 1;
    out.dropped_edge = d.dropped_edge;
    out.edge_rows.push_back(n + 1);
    out.edge_rows.insert(out.edge_rows.end(), d.edge_rows.begin(), d.edge_rows.end());
    IVec ca(n + 1, 0), cb(n + 1, 0);
    ca[i1] = ca[i2] = ca[n] = -1;
    cb[i1] = cb[i2] = cb[n] = -1;
    out.a.push_back(ca);
    out.b.push_back(cb);
    out.eta.push_back(-1);
    auto map_row = [&](const IVec& a, const IVec& b, IVec& na, IVec& nb) {
        na = a;
        nb = b;
        na.push_back(0);
        nb.push_back(0);
        long long a1 = a[i1], b1 = b[i1], a2 = a[i2], b2 = b[i2];
        na[i1] = b1 + b2;
        nb[i1] = 0;
        na[i2] = a1;
        nb[i2] = a2 + b1;
        na[n] = a2;
        nb[n] = a1 + b2;
    };
    for (int r = 0; r < n; ++r) {
        IVec na, nb;
        map_row(d.a[r], d.b[r], na, nb);
        out.a.push_back(na);
        out.b.push_back(nb);
        out.eta.push_back(d.eta[r]);
    }
    if (d.longitude) {
        Longitude l;
        map_row(d.longitude->two_c, d.longitude->two_d, l.two_c, l.two_d);
        l.two_eta = d.longitude->two_eta;
        out.longitude = l;
    }
    validate_datum(out);

    std::optional<Flattening> fl;
    if (s.flattening) {
        const auto& e = *s.flattening;
        long long e1 = e.f[i1], e1p = e.fp[i1], e1pp = e.fpp[i1];
        long long e2 = e.f[i2], e2pp = e.fpp[i2];
        long long dd[3] = {0, e1 - e2pp, e2 - e1pp};
        long long dpp[3] = {e1p - e2 + e1pp, e1pp, e2pp};
        IVec f = e.f, fpp = e.fpp;
        f[i1] = dd[0];
        fpp[i1] = dpp[0];
        f[i2] = dd[1];
        fpp[i2] = dpp[1];
        f.push_back(dd[2]);
        fpp.push_back(dpp[2]);
        fl = make_flattening(out, f, fpp);
        if (!check_flattening(out, *fl, false)) throw Error(Errc::QuadMismatch, "mapped flattening is invalid");
        cert.tau_sign = (1 + dpp[1] - e1pp) % 2 ? -1 : 1;
    }
    s.datum = std::move(out);
    s.shapes = std::move(shapes);
    s.flattening = fl;
    cert.output_hash = datum_hash(s.datum);
    return cert;
}

MoveCertificate three_two_move(State& s, const ThreeTwoSite& site) {
    auto& d = s.datum;
    const int n = d.n;
    for (int t : {site.w1, site.w2, site.w3}) check_tet(s, t);
    if (site.w1 == site.w2 || site.w1 == site.w3 || site.w2 == site.w3)
        throw Error(Errc::QuadMismatch, "3-2 move needs three distinct tetrahedra");
    if (site.central_row < 1 || site.central_row >= n)
        throw Error(Errc::QuadMismatch, "central row must be an edge row");
    MoveCertificate cert;
    cert.kind = "threetwo";
    cert.params = params_str({{"w1", site.w1}, {"w2", site.w2}, {"w3", site.w3}, {"central_row", site.central_row}});
    cert.input_hash = datum_hash(d);
    const int W1 = site.w1 - 1, W2 = site.w2 - 1, W3 = site.w3 - 1, C = site.central_row - 1;
    for (int j = 0; j < n; ++j) {
        long long want = (j == W1 || j == W2 || j == W3) ? -1 : 0;
        if (d.a[C][j] != want || d.b[C][j] != want)
            throw Error(Errc::QuadMismatch, "central row is not the edge shared by the three tetrahedra");
    }
    if (d.eta[C] != -1) throw Error(Errc::QuadMismatch, "central row has eta != -1");

    // clear B[.,W1] with the central row, then read off the 2-tetrahedron columns
    auto reduce = [&](IVec& a, IVec& b, long long& eta, IVec& na, IVec& nb) {
        long long t = b[W1];
        for (int j = 0; j < n; ++j) {
            a[j] += t * d.a[C][j];
            b[j] += t * d.b[C][j];
        }
        eta += t * d.eta[C];
        long long a1 = a[W2], a2 = a[W3];
        long long b1 = b[W2] - a2, b2 = b[W3] - a1;
        if (a[W1] != b1 + b2) throw Error(Errc::QuadMismatch, "columns do not match the 2-3 pattern");
        na.clear();
        nb.clear();
        for (int j = 0; j < n; ++j) {
            if (j == W3) continue;
            if (j == W1) {
                na.push_back(a1);
                nb.push_back(b1);
            } else if (j == W2) {
                na.push_back(a2);
                nb.push_back(b2);
            } else {
                na.push_back(a[j]);
                nb.push_back(b[j]);
            }
        }
    };

    NZDatum out;
    out.n = n - 1;
    const int removed = d.edge_rows[C];
    auto relabel = [&](int e) { return e > removed ? e - 1 : e; };
    out.dropped_edge = relabel(d.dropped_edge);
    for (int r = 0; r < n; ++r) {
        if (r == C) continue;
        IVec a = d.a[r], b = d.b[r], na, nb;
        long long eta = d.eta[r];
        reduce(a, b, eta, na, nb);
        out.a.push_back(na);
        out.b.push_back(nb);
        out.eta.push_back(eta);
        if (r + 1 < n) out.edge_rows.push_back(relabel(d.edge_rows[r]));
    }
    if (d.longitude) {
        IVec a = d.longitude->two_c, b = d.longitude->two_d;
        long long eta = d.longitude->two_eta;
        Longitude l;
        reduce(a, b, eta, l.two_c, l.two_d);
        l.two_eta = eta;
        out.longitude = l;
    }
    validate_datum(out);

    auto pos = [&](int j) { return j > W3 ? j - 1 : j; };
    std::vector<Complex> shapes;
    if (!s.shapes.empty()) {
        const Complex one(1);
        Complex w2p = one / (one - s.shapes[W2]), w3p = one / (one - s.shapes[W3]);
        Complex x1 = (one - one / w2p) / (one - w3p), x2 = (one - one / w3p) / (one - w2p);
        for (const auto& x : {x1, x2})
            if (degenerate(x) || degenerate(one - one / x)) throw Error(Errc::DegenerateMove, "mapped shape hits {0,1,inf}");
        for (int j = 0; j < n; ++j)
            if (j != W3) shapes.push_back(s.shapes[j]);
        shapes[pos(W1)] = x1;
        shapes[pos(W2)] = x2;
    }

    std::optional<Flattening> fl;
    if (s.flattening) {
        const auto& e = *s.flattening;
        long long d1 = e.f[W1], d2 = e.f[W2], d3 = e.f[W3];
        long long d2p = e.fpp[W2], d3p = e.fpp[W3];
        IVec f, fpp;
        for (int j = 0; j < n; ++j)
            if (j != W3) {
                f.push_back(e.f[j]);
                fpp.push_back(e.fpp[j]);
            }
        f[pos(W1)] = d2 + d3p;
        fpp[pos(W1)] = d1 + d2p;
        f[pos(W2)] = d2p + d3;
        fpp[pos(W2)] = d3p + d1;
        fl = make_flattening(out, f, fpp);
        if (!check_flattening(out, *fl, false)) throw Error(Errc::QuadMismatch, "mapped flattening is invalid");
        cert.tau_sign = (1 + d2p - fpp[pos(W1)]) % 2 ? -1 : 1;
    }
    s.datum = std::move(out);
    s.shapes = std::move(shapes);
    s.flattening = fl;
    cert.output_hash = datum_hash(s.datum);
    return cert;
}

QuadNormalization normalize_quad(State& s, const std::set<int>& avoid) {
    QuadNormalization out;
    auto detb = [](const State& st) { return det(to_zmat(st.datum.b)); };
    if (detb(s) != 0) return out;
    const int n = s.datum.n;
    std::vector<int> order;
    for (int t = 1; t <= n; ++t)
        if (!avoid.count(t)) order.push_back(t);
    for (int t = 1; t <= n; ++t)
        if (avoid.count(t)) order.push_back(t);
    const Direction dirs[2] = {Direction::Fwd, Direction::Bwd};

    auto apply = [&](const std::vector<std::pair<int, Direction>>& rots) {
        State t = s;
        std::vector<MoveCertificate> certs;
        for (auto [tet, dir] : rots) certs.push_back(rotate_quad(t, tet, dir));
        if (detb(t) == 0) return false;
        s = std::move(t);
        out.rotations = rots;
        out.certs = std::move(certs);
        return true;
    };
    for (int t : order)
        for (auto dir : dirs)
            if (apply({{t, dir}})) return out;
    for (size_t i = 0; i < order.size(); ++i)
        for (size_t j = i + 1; j < order.size(); ++j)
            for (auto di : dirs)
                for (auto dj : dirs)
                    if (apply({{order[i], di}, {order[j], dj}})) return out;
    // bwd puts -a_i into B; some column subset is nondegenerate
    for (int size = 3; size <= n; ++size) {
        std::vector<bool> pick(n, false);
        std::fill(pick.begin(), pick.begin() + size, true);
        do {
            std::vector<std::pair<int, Direction>> rots;
            for (int k = 0; k < n; ++k)
                if (pick[k]) rots.emplace_back(order[k], Direction::Bwd);
            if (apply(rots)) return out;
        } while (std::prev_permutation(pick.begin(), pick.end()));
    }
    throw Error(Errc::SymplecticViolation, "no quad type makes B invertible");
}

}  // namespace nz
