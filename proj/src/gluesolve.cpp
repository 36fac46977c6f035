#include "nzloops/gluesolve.hpp"

#include "nzloops/error.hpp"

#include <algorithm>
#include <optional>

namespace nz {

namespace {

Real g_eps = 0;
bool g_eps_set = false;

long long nearest_int(const Real& x) { return boost::multiprecision::round(x).convert_to<long long>(); }

Complex reduce_2pii(const Complex& f) {
    long long k = nearest_int(f.im / (2 * pi()));
    return f - Complex(Real(0), 2 * pi() * k);
}

bool near_degenerate(const Complex& w, const Real& eps) {
    return abs(w) < eps || abs(Complex(1) - w) < eps;
}

void check_shapes(const ShapeAssignment& s) {
    const Real eps = degeneracy_eps();
    for (size_t i = 0; i < s.z.size(); ++i)
        if (near_degenerate(s.z[i], eps) || near_degenerate(s.zp[i], eps) || near_degenerate(s.zpp[i], eps))
            throw Error(Errc::DegenerateShape,
                        "shape of tetrahedron " + std::to_string(i + 1) + " is within eps of {0,1,inf}");
}

bool finite(const Complex& z) { return boost::multiprecision::isfinite(z.re) && boost::multiprecision::isfinite(z.im); }

struct NewtonResult {
    CVec z;
    Real fnorm;
};

// throws SingularJacobian; returns nullopt when the iteration cap is hit
std::optional<NewtonResult> newton(const NZDatum& d, CVec z, const Complex& u, int max_iter) {
    const size_t n = d.n;
    const Real tol = tolerance();
    for (int it = 0; it <= max_iter; ++it) {
        CVec Z(n);
        for (size_t j = 0; j < n; ++j) {
            if (!finite(z[j]) || (z[j].re == 0 && z[j].im == 0) || (z[j].re == 1 && z[j].im == 0))
                throw Error(Errc::DegenerateShape, "Newton iterate left the shape domain");
            Z[j] = log(z[j]);
        }
        auto sys = log_system(d, Z, u);
        Real fn = 0;
        for (auto& f : sys.f) {
            if (!finite(f)) throw Error(Errc::DegenerateShape, "Newton iterate left the shape domain");
            f = reduce_2pii(f);
            fn = std::max(fn, abs(f));
        }
        if (fn < tol) return NewtonResult{z, fn};
        if (it == max_iter) break;
        CVec step;
        if (!lu_solve(sys.jac, sys.f, step)) throw Error(Errc::SingularJacobian, "gluing Jacobian is singular");
        for (size_t j = 0; j < n; ++j) z[j] = exp(Z[j] - step[j]);
    }
    return std::nullopt;
}

Complex m_from_u(const Complex& u) { return exp(u); }

}  // namespace

Real degeneracy_eps() {
    if (!g_eps_set) return ldexp(Real(1), -16);
    return g_eps;
}

void set_degeneracy_eps(const Real& eps) {
    g_eps = eps;
    g_eps_set = true;
}

ShapeAssignment make_assignment(const CVec& z, const Complex& u) {
    ShapeAssignment s;
    const Complex one(1);
    s.u = u;
    s.residual = 0;
    for (const auto& w : z) {
        s.z.push_back(w);
        s.zp.push_back(one / (one - w));
        s.zpp.push_back(one - one / w);
        s.Z.push_back(log(w));
        s.Zpp.push_back(log(s.zpp.back()));
    }
    return s;
}

Real gluing_residual(const NZDatum& d, const CVec& z, const Complex& m) {
    Real worst = 0;
    const Complex one(1);
    for (int i = 0; i < d.n; ++i) {
        Complex p(1);
        for (int j = 0; j < d.n; ++j) p *= ipow(z[j], d.a[i][j]) * ipow(one - one / z[j], d.b[i][j]);
        Complex rhs = (d.eta[i] % 2) ? Complex(-1) : Complex(1);
        if (i == d.n - 1) rhs *= m * m;
        worst = std::max(worst, abs(p - rhs));
    }
    return worst;
}

LogSystem log_system(const NZDatum& d, const CVec& Z, const Complex& u) {
    const size_t n = d.n;
    const Complex one(1);
    CVec z(n), Zpp(n), zp(n);
    for (size_t j = 0; j < n; ++j) {
        z[j] = exp(Z[j]);
        Zpp[j] = log(one - one / z[j]);
        zp[j] = one / (one - z[j]);
    }
    LogSystem sys;
    sys.f.assign(n, Complex());
    sys.jac.assign(n, CVec(n, Complex()));
    for (size_t i = 0; i < n; ++i) {
        Complex s = Complex(Real(0), -pi() * d.eta[i]);
        if (i + 1 == n) s -= u * Complex(2);
        for (size_t j = 0; j < n; ++j) {
            if (d.a[i][j]) s += Z[j] * Complex(d.a[i][j]);
            if (d.b[i][j]) s += Zpp[j] * Complex(d.b[i][j]);
            // dZ''/dZ = 1/(z-1) = -z'
            sys.jac[i][j] = Complex(d.a[i][j]) - Complex(d.b[i][j]) * zp[j];
        }
        sys.f[i] = s;
    }
    return sys;
}

ShapeAssignment solve_shapes(const NZDatum& d, const Complex& m, const CVec& initial, int max_iter) {
    if (abs(m) < tolerance()) throw Error(Errc::InvalidArgument, "meridian eigenvalue m must be nonzero");
    if (initial.size() != static_cast<size_t>(d.n)) throw Error(Errc::InvalidArgument, "need N initial shapes");
    const Complex u = log(m);
    auto r = newton(d, initial, u, max_iter);
    if (!r) throw Error(Errc::NoConvergence, "Newton iteration did not converge");
    ShapeAssignment s = make_assignment(r->z, u);
    check_shapes(s);
    s.residual = gluing_residual(d, s.z, m);
    return s;
}

std::vector<ShapeAssignment> continue_in_m(const NZDatum& d, const CVec& start, const Complex& m0,
                                           const std::vector<Complex>& path) {
    const size_t n = d.n;
    std::vector<ShapeAssignment> out;
    ShapeAssignment cur = solve_shapes(d, m0, start);
    Complex u = cur.u;
    for (const auto& mt : path) {
        if (abs(mt) < tolerance()) throw Error(Errc::InvalidArgument, "meridian eigenvalue m must be nonzero");
        // pick the lift of log m nearest to the current u
        Complex ut = log(mt);
        ut = ut - Complex(Real(0), 2 * pi() * nearest_int((ut.im - u.im) / (2 * pi())));
        Real min_step = ldexp(Real(1), -30) * (1 + abs(ut - u));
        Complex du = ut - u;
        for (bool done = false; !done;) {
            const bool last = abs(du) >= abs(ut - u);
            if (last) du = ut - u;
            // tangent predictor: J dZ = 2 e_N du
            CVec Z = cur.Z;
            auto sys = log_system(d, Z, u);
            CVec rhs(n, Complex()), dz;
            rhs[n - 1] = Complex(2) * du;
            if (!lu_solve(sys.jac, rhs, dz)) throw Error(Errc::SingularJacobian, "gluing Jacobian is singular");
            CVec zp(n);
            for (size_t j = 0; j < n; ++j) zp[j] = exp(Z[j] + dz[j]);
            std::optional<NewtonResult> r;
            try {
                r = newton(d, zp, u + du, 30);
            } catch (const Error& e) {
                if (e.code() != Errc::SingularJacobian && e.code() != Errc::DegenerateShape) throw;
            }
            bool ok = r.has_value();
            if (ok)
                for (size_t j = 0; j < n && ok; ++j)
                    if (abs(r->z[j] - zp[j]) > (1 + abs(zp[j])) / 8) ok = false;
            if (!ok) {
                du = du / Complex(2);
                if (abs(du) < min_step)
                    throw Error(Errc::BranchJump,
                                "continuation lost the branch near m = " + to_string(m_from_u(u).re, 20) + " + " +
                                    to_string(m_from_u(u).im, 20) + "i");
                continue;
            }
            u = last ? ut : u + du;
            done = last;
            cur = make_assignment(r->z, u);
            try {
                check_shapes(cur);
            } catch (const Error& e) {
                throw Error(Errc::DegenerateShape, std::string(e.what()) + " at m = " + to_string(m_from_u(u).re, 20) +
                                                       " + " + to_string(m_from_u(u).im, 20) + "i");
            }
            du = du * Complex(2);
        }
        cur.u = ut;
        cur.residual = gluing_residual(d, cur.z, mt);
        out.push_back(cur);
    }
    return out;
}

LiftReport certify_lift(const NZDatum& d, const ShapeAssignment& s) {
    LiftReport rep;
    rep.deviation = 0;
    const Real tp = 2 * pi();
    for (int i = 0; i < d.n; ++i) {
        Complex r = Complex(Real(0), -pi() * d.eta[i]);
        if (i == d.n - 1) r -= Complex(2) * s.u;
        for (int j = 0; j < d.n; ++j) r += s.Z[j] * Complex(d.a[i][j]) + s.Zpp[j] * Complex(d.b[i][j]);
        long long k = nearest_int(r.im / tp);
        Real dev = abs(r - Complex(Real(0), tp * k));
        rep.deviation = std::max(rep.deviation, dev);
        rep.lattice.push_back(k);
    }
    if (rep.deviation > ldexp(Real(1), -static_cast<int>(working_bits()) / 2))
        throw Error(Errc::NonLatticeResidual, "log gluing residual is not in 2 pi i Z^N");
    rep.standard = std::all_of(rep.lattice.begin(), rep.lattice.end(), [](long long k) { return k == 0; });
    return rep;
}

Complex longitude_eigenvalue(const NZDatum& d, const ShapeAssignment& s) {
    if (!d.longitude) throw Error(Errc::InvalidArgument, "datum has no longitude row");
    const auto& l = *d.longitude;
    Complex v = Complex(Real(0), -pi() * l.two_eta);
    for (int j = 0; j < d.n; ++j) v += s.Z[j] * Complex(l.two_c[j]) + s.Zpp[j] * Complex(l.two_d[j]);
    return -exp(v / Complex(2));
}

}  // namespace nz
