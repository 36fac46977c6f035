#include "nzloops/invariants.hpp"

#include "nzloops/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <sstream>

namespace nz {

namespace {

Complex ipi(const Real& k) { return Complex(Real(0), pi() * k); }

Real rat(const Rational& q) { return Real(numerator(q)) / Real(denominator(q)); }

bool deformed(const ShapeAssignment& s) { return abs(s.u) > tolerance(); }

}  // namespace

Tau one_loop_tau(const NZDatum& d, const ShapeAssignment& s, const Flattening& fl) {
    const int n = d.n;
    if (deformed(s) && !fl.longitude_compatible)
        throw Error(Errc::InvalidArgument, "deformed torsion needs a longitude-compatible flattening");
    CMat m(n, CVec(n));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) m[i][j] = s.zpp[j] * Complex(d.a[i][j]) + Complex(d.b[i][j]) / s.z[j];
    Complex t = det(m) / Complex(2);
    for (int j = 0; j < n; ++j) t *= ipow(s.z[j], fl.fpp[j]) * ipow(s.zpp[j], -fl.f[j]);
    if (abs(t) < tolerance()) throw Error(Errc::ZeroTorsion, "one-loop invariant vanishes");
    Tau out;
    out.raw = t;
    bool upper = t.im > 0 || (t.im == 0 && t.re > 0);
    out.value = upper ? t : -t;
    out.sign_tag = upper ? 1 : -1;
    return out;
}

ComplexVolume complex_volume(const NZDatum& d, const ShapeAssignment& s, const Flattening& fl) {
    const int n = d.n;
    ComplexVolume out;
    out.lift = certify_lift(d, s);
    Complex p;
    for (int i = 0; i < n; ++i) {
        p -= (s.Z[i] - ipi(fl.f[i])) * (s.Zpp[i] + ipi(fl.fpp[i])) / Complex(2);
        p += dilog(exp(-s.Z[i]));
    }
    if (deformed(s)) {
        if (!d.longitude) throw Error(Errc::InvalidArgument, "deformed volume needs the longitude row");
        const auto& l = *d.longitude;
        Complex v = ipi(-l.two_eta);
        for (int j = 0; j < n; ++j) v += s.Z[j] * Complex(l.two_c[j]) + s.Zpp[j] * Complex(l.two_d[j]);
        v = v / Complex(2);
        p += s.u * v;
    }
    out.s0 = -p;
    const Real period = pi() * pi() / 6;
    Real r = out.s0.re - period * boost::multiprecision::floor(out.s0.re / period);
    if (r >= period || period - r < tolerance()) r = 0;
    out.re_mod_class = r;
    return out;
}

Real volume_oracle(const CVec& z) {
    Real v = 0;
    for (const auto& w : z) v += bloch_wigner(w);
    return v;
}

Complex two_loop_closed_form(const NZDatum& d, const CVec& z, const Flattening& fl) {
    const int n = d.n;
    Propagator prop = build_hessian(d, z);
    const CMat& P = prop.hinv;
    IMat eta_col;
    for (auto e : d.eta) eta_col.push_back({e});
    QMat bi_eta = binv_times(d.b, eta_col), bi_a = binv_times(d.b, d.a);
    const Complex one(1);
    CVec g1(n), g2(n), g3(n), g4(n);
    Complex zp_sum;
    for (int i = 0; i < n; ++i) {
        Complex zp = one / (one - z[i]);
        zp_sum += zp;
        g1[i] = (zp - Complex(rat(bi_eta[i][0]))) / Complex(2);
        g2[i] = z[i] * zp * zp / Complex(2);
        g3[i] = -(z[i] * zp * zp);
        g4[i] = -(z[i] * (one + z[i]) * zp * zp * zp);
    }
    Complex s;
    for (int i = 0; i < n; ++i) {
        s += g4[i] * P[i][i] * P[i][i] / Complex(8) + g2[i] * P[i][i] / Complex(2);
        for (int j = 0; j < n; ++j) {
            const Complex& pij = P[i][j];
            s += P[i][i] * g3[i] * pij * g3[j] * P[j][j] / Complex(8);
            s += g3[i] * pij * pij * pij * g3[j] / Complex(12);
            s += g1[i] * pij * g3[j] * P[j][j] / Complex(2);
            s += g1[i] * pij * g1[j] / Complex(2);
        }
    }
    Rational q = 0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) q += Rational(fl.f[i]) * bi_a[i][j] * Rational(fl.f[j]);
    s += Complex(rat(q / 8));
    s -= zp_sum / Complex(12);
    return s;
}

NLoop n_loop(const NZDatum& d, const CVec& z, const Flattening& fl, int n, std::optional<SeriesBounds> bounds) {
    if (n < 2) throw Error(Errc::InvalidArgument, "loop order must be >= 2");
    SeriesBounds b = bounds.value_or(SeriesBounds::for_loop(n));
    if (b.max_h < 2 * (n - 1)) throw Error(Errc::InvalidArgument, "hbar bound too small for this loop order");
    Propagator prop = build_hessian(d, z);
    TruncatedSeries integrand = integrand_series(d, z, fl, b);
    NLoop out;
    out.monomials = integrand.size();
    out.expectation = gaussian_expectation(integrand, prop, false);
    Real scale = 1;
    out.half_integer_max = 0;
    for (size_t h = 0; h < out.expectation.size(); ++h) {
        if (h % 2)
            out.half_integer_max = std::max(out.half_integer_max, abs(out.expectation[h]));
        else
            scale = std::max(scale, abs(out.expectation[h]));
    }
    if (out.half_integer_max > tolerance() * scale)
        throw Error(Errc::HalfIntegerSurvivor, "half-integer hbar power survives: " + to_string(out.half_integer_max, 10));
    // log of sum_p ev[p] hbar^p
    const int pmax = n - 1;
    CVec ev(pmax + 1), lg(pmax + 1);
    for (int p = 0; p <= pmax; ++p) ev[p] = out.expectation[2 * p];
    for (int p = 1; p <= pmax; ++p) {
        Complex v = ev[p];
        for (int q = 1; q < p; ++q) v -= Complex(Real(q) / Real(p)) * lg[q] * ev[p - q];
        lg[p] = v;
        out.s[p + 1] = v;
    }
    return out;
}

std::map<int, Complex> sn_tilde(const std::map<int, Complex>& s, const Complex& tau) {
    std::map<int, Complex> out;
    if (s.empty()) return out;
    const int pmax = s.rbegin()->first - 1;
    CVec a(pmax + 1), e(pmax + 1);
    for (int k = 1; k <= pmax; ++k) {
        auto it = s.find(k + 1);
        if (it == s.end()) throw Error(Errc::InvalidArgument, "sn_tilde needs consecutive S_2..S_n");
        a[k] = it->second;
    }
    e[0] = Complex(1);
    for (int p = 1; p <= pmax; ++p) {
        Complex v;
        for (int k = 1; k <= p; ++k) v += Complex(k) * a[k] * e[p - k];
        e[p] = v / Complex(p);
        out[p] = ipow(tau, 3 * p) * e[p];
    }
    return out;
}

LoopInvariants compute_invariants(const NZDatum& d, const ShapeAssignment& s, const Flattening& fl, int loops) {
    if (loops < 2 || loops > 4) throw Error(Errc::InvalidArgument, "loop order must be 2, 3 or 4");
    LoopInvariants li;
    li.s0 = complex_volume(d, s, fl);
    li.tau = one_loop_tau(d, s, fl);
    NLoop nl = n_loop(d, s.z, fl, loops);
    li.sn = nl.s;
    li.s2 = nl.s.at(2);
    li.s2_closed = two_loop_closed_form(d, s.z, fl);
    for (const auto& [k, v] : li.sn) {
        li.scaled_plus[k] = v * ipow(li.tau.value, 3 * (k - 1));
        li.scaled_minus[k] = v * ipow(-li.tau.value, 3 * (k - 1));
    }
    li.tilde_plus = sn_tilde(li.sn, li.tau.value);
    li.tilde_minus = sn_tilde(li.sn, -li.tau.value);
    return li;
}

// ---- harness ----

namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& path, const std::string& what) {
    throw Error(Errc::SchemaError, path + ": " + what);
}

int get_int(const json& o, const char* key, const std::string& path) {
    if (!o.contains(key) || !o[key].is_number_integer()) bad(path + "/" + key, "expected an integer");
    return o[key].get<int>();
}

std::vector<int> get_ints(const json& o, const char* key, const std::string& path) {
    if (!o.contains(key) || !o[key].is_array()) bad(path + "/" + key, "expected an integer array");
    std::vector<int> v;
    for (const auto& x : o[key]) {
        if (!x.is_number_integer()) bad(path + "/" + key, "expected an integer array");
        v.push_back(x.get<int>());
    }
    return v;
}

MoveSpec parse_spec(const json& o, const std::string& path) {
    if (!o.is_object()) bad(path, "expected an object");
    MoveSpec m;
    if (o.contains("sequence")) {
        m.kind = "sequence";
        const auto& seq = o["sequence"];
        if (!seq.is_array() || seq.empty()) bad(path + "/sequence", "expected a nonempty array");
        for (size_t i = 0; i < seq.size(); ++i) m.steps.push_back(parse_spec(seq[i], path + "/sequence/" + std::to_string(i)));
        return m;
    }
    if (!o.contains("kind") || !o["kind"].is_string()) bad(path + "/kind", "missing move kind");
    m.kind = o["kind"].get<std::string>();
    if (m.kind == "rotate") {
        m.tet = get_int(o, "tet", path);
        std::string dir = o.value("direction", "fwd");
        if (dir != "fwd" && dir != "bwd") bad(path + "/direction", "expected fwd or bwd");
        m.dir = dir == "fwd" ? Direction::Fwd : Direction::Bwd;
    } else if (m.kind == "edge") {
        m.row = get_int(o, "row", path);
    } else if (m.kind == "meridian") {
        m.row = get_int(o, "row", path);
        m.sign = o.contains("sign") ? get_int(o, "sign", path) : 1;
    } else if (m.kind == "flattening") {
        if (o.contains("target")) {
            Flattening f;
            f.f.clear();
            for (int x : get_ints(o["target"], "f", path + "/target")) f.f.push_back(x);
            for (int x : get_ints(o["target"], "fpp", path + "/target")) f.fpp.push_back(x);
            m.target = f;
        } else {
            m.kernel_step = get_int(o, "kernel_step", path);
        }
    } else if (m.kind == "twothree") {
        auto t = get_ints(o, "tets", path);
        if (t.size() != 2) bad(path + "/tets", "expected two tetrahedra");
        m.two_three = {t[0], t[1]};
    } else if (m.kind == "threetwo") {
        auto t = get_ints(o, "tets", path);
        if (t.size() != 3) bad(path + "/tets", "expected three tetrahedra");
        m.three_two = {t[0], t[1], t[2], get_int(o, "central_row", path)};
    } else {
        bad(path + "/kind", "unknown move kind '" + m.kind + "'");
    }
    return m;
}

std::string label_of(const MoveSpec& m) {
    std::ostringstream os;
    if (m.kind == "rotate")
        os << "rotate tet " << m.tet << (m.dir == Direction::Fwd ? " fwd" : " bwd");
    else if (m.kind == "edge")
        os << "edge change row " << m.row;
    else if (m.kind == "meridian")
        os << "meridian move row " << m.row << (m.sign > 0 ? " +" : " -");
    else if (m.kind == "flattening")
        os << (m.target ? "flattening swap to target" : "flattening swap by kernel vector " + std::to_string(m.kernel_step));
    else if (m.kind == "twothree")
        os << "2-3 at tets " << m.two_three.tet1 << "," << m.two_three.tet2;
    else if (m.kind == "threetwo")
        os << "3-2 at tets " << m.three_two.w1 << "," << m.three_two.w2 << "," << m.three_two.w3 << " central row "
           << m.three_two.central_row;
    else {
        os << "sequence [";
        for (size_t i = 0; i < m.steps.size(); ++i) os << (i ? "; " : "") << label_of(m.steps[i]);
        os << "]";
    }
    return os.str();
}

void apply_raw(State& s, const MoveSpec& m, std::vector<MoveCertificate>& certs, std::set<int>& avoid) {
    if (m.kind == "rotate") {
        certs.push_back(rotate_quad(s, m.tet, m.dir));
        avoid.insert(m.tet);
    } else if (m.kind == "edge") {
        certs.push_back(change_edge(s, m.row));
    } else if (m.kind == "meridian") {
        certs.push_back(meridian_move(s, m.row, m.sign));
    } else if (m.kind == "flattening") {
        Flattening target;
        if (m.target) {
            target = make_flattening(s.datum, m.target->f, m.target->fpp);
        } else {
            if (!s.flattening) throw Error(Errc::InvalidArgument, "kernel step needs a current flattening");
            auto lat = flattening_lattice(s.datum, false);
            if (m.kernel_step < 1 || m.kernel_step > static_cast<int>(lat.kernel.size()))
                throw Error(Errc::InvalidArgument, "kernel step index out of range");
            const auto& v = lat.kernel[m.kernel_step - 1];
            const int n = s.datum.n;
            IVec f = s.flattening->f, fpp = s.flattening->fpp;
            for (int i = 0; i < n; ++i) {
                f[i] += v[i];
                fpp[i] += v[n + i];
            }
            target = make_flattening(s.datum, f, fpp);
        }
        certs.push_back(swap_flattening(s, target));
    } else if (m.kind == "twothree") {
        certs.push_back(two_three_move(s, m.two_three));
        avoid.clear();
    } else if (m.kind == "threetwo") {
        certs.push_back(three_two_move(s, m.three_two));
        avoid.clear();
    } else if (m.kind == "sequence") {
        for (const auto& st : m.steps) apply_raw(s, st, certs, avoid);
    } else {
        throw Error(Errc::InvalidArgument, "unknown move kind " + m.kind);
    }
}

struct Snapshot {
    Complex tau;
    Complex s2, s3;
};

Snapshot snapshot(const State& s, const Complex& m) {
    ShapeAssignment sa = make_assignment(s.shapes, log(m));
    Snapshot out;
    out.tau = one_loop_tau(s.datum, sa, *s.flattening).raw;
    NLoop nl = n_loop(s.datum, s.shapes, *s.flattening, 3);
    out.s2 = nl.s.at(2);
    out.s3 = nl.s.at(3);
    return out;
}

}  // namespace

std::vector<MoveCertificate> apply_move(State& s, const MoveSpec& m) {
    std::vector<MoveCertificate> certs;
    std::set<int> avoid;
    apply_raw(s, m, certs, avoid);
    return certs;
}

std::string move_label(const MoveSpec& m) { return label_of(m); }

std::vector<MoveSpec> parse_move_specs(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(Errc::SchemaError, std::string("invalid JSON: ") + e.what());
    }
    const json* arr = &root;
    if (root.is_object()) {
        if (!root.contains("moves")) bad("/moves", "missing field");
        arr = &root["moves"];
    }
    if (!arr->is_array()) bad("/moves", "expected an array");
    std::vector<MoveSpec> out;
    for (size_t i = 0; i < arr->size(); ++i) out.push_back(parse_spec((*arr)[i], "/moves/" + std::to_string(i)));
    return out;
}

HarnessTolerances HarnessTolerances::defaults() {
    return {Real("1e-25"), Real("1e-20"), Real("1e-20")};
}

bool HarnessReport::all_ok() const {
    return std::all_of(entries.begin(), entries.end(), [](const HarnessEntry& e) { return e.ok(); });
}

HarnessEntry apply_move_spec(State& s, const MoveSpec& m) {
    HarnessEntry e;
    e.label = label_of(m);
    std::set<int> avoid;
    apply_raw(s, m, e.certs, avoid);
    auto norm = normalize_quad(s, avoid);
    e.normalization = norm.rotations;
    bool known = true;
    int sign = 1;
    for (const auto* list : {&e.certs, &norm.certs})
        for (const auto& c : *list) {
            if (!c.tau_sign) known = false;
            else sign *= *c.tau_sign;
        }
    if (known) e.predicted_sign = sign;
    return e;
}

HarnessReport invariance_harness(const State& start0, const std::vector<MoveSpec>& moves, const HarnessTolerances& tol) {
    if (!start0.flattening || start0.shapes.empty())
        throw Error(Errc::InvalidArgument, "harness needs shapes and a flattening");
    const Complex m(1);
    State start = start0;
    normalize_quad(start);
    start.shapes = solve_shapes(start.datum, m, start.shapes).z;
    const Snapshot base = snapshot(start, m);
    HarnessReport rep;
    for (const auto& mv : moves) {
        State s = start;
        HarnessEntry e;
        e.label = label_of(mv);
        try {
            e = apply_move_spec(s, mv);
            Real res = gluing_residual(s.datum, s.shapes, m);
            if (res > ldexp(tolerance(), 32))
                throw Error(Errc::NoConvergence, "mapped shapes miss the output gluing equations by " + to_string(res, 6));
            s.shapes = solve_shapes(s.datum, m, s.shapes).z;
            Snapshot after = snapshot(s, m);
            e.tau_before = base.tau;
            e.tau_after = after.tau;
            e.tau2_diff = abs(after.tau * after.tau - base.tau * base.tau);
            e.observed_sign = (after.tau / base.tau).re > 0 ? 1 : -1;
            e.s2_delta = after.s2 - base.s2;
            Real r24 = 24 * e.s2_delta.re;
            e.s2_class_residual = std::max(Real(abs(r24 - boost::multiprecision::round(r24))), Real(abs(24 * e.s2_delta.im)));
            e.s3_diff = abs(after.s3 - base.s3);
            e.tau_ok = e.tau2_diff < tol.tau2;
            e.s2_ok = e.s2_class_residual < tol.s2_class;
            e.s3_ok = e.s3_diff < tol.s3;
        } catch (const Error& err) {
            e.error = std::string(errc_module(err.code())) + "." + errc_name(err.code()) + ": " + err.what();
        }
        rep.entries.push_back(std::move(e));
    }
    return rep;
}

}  // namespace nz
