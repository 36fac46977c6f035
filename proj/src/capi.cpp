#include "nzloops/nzloops.h"

#include "nzloops/error.hpp"
#include "nzloops/invariants.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <functional>
#include <memory>
#include <mutex>
#include <regex>

using nlohmann::json;
using nlohmann::ordered_json;

struct nz_datum {
    unsigned bits = 256;
    unsigned digits = 30;
    nz::DatumFile file;
    nz::State state;
    std::vector<std::pair<int, nz::Direction>> normalization;
    bool moved = false;
};

namespace {

std::mutex g_mu;
thread_local std::string g_err;

constexpr unsigned kDefaultDigits = 30;

// bits kept back for Newton tolerance and series cancellation
unsigned capacity_digits(unsigned bits) {
    if (bits <= 64) return 0;
    return static_cast<unsigned>(std::floor((bits - 64) * 0.30102999566398120));
}

template <class F>
nz_status guarded(unsigned bits, F&& f) {
    std::lock_guard<std::mutex> lock(g_mu);
    try {
        nz::PrecisionScope ps(bits);
        f();
        return NZ_OK;
    } catch (const nz::Error& e) {
        g_err = std::string(nz::errc_module(e.code())) + "." + nz::errc_name(e.code()) + ": " + e.what();
        return static_cast<nz_status>(e.code());
    } catch (const std::exception& e) {
        g_err = std::string("internal: ") + e.what();
        return NZ_E_INTERNAL;
    }
}

char* dup(const std::string& s) {
    char* p = static_cast<char*>(std::malloc(s.size() + 1));
    if (p) std::memcpy(p, s.c_str(), s.size() + 1);
    return p;
}

nz_status put(char** out, const ordered_json& j) {
    if (!out) return NZ_OK;
    *out = dup(j.dump(1) + "\n");
    return NZ_OK;
}

std::string num(const nz::Real& x, unsigned digits) { return nz::to_string(x, static_cast<int>(digits)); }

// parts below working tolerance relative to |z| print as 0
ordered_json cj(const nz::Complex& z, unsigned digits) {
    const nz::Real cut = nz::tolerance() * std::max(nz::Real(1), nz::abs(z));
    auto part = [&](const nz::Real& x) { return abs(x) < cut ? std::string("0") : num(x, digits); };
    return ordered_json{{"re", part(z.re)}, {"im", part(z.im)}};
}

nz::Complex parse_m(const char* m) {
    if (!m || !*m) return nz::Complex(1);
    std::string s(m);
    s.erase(std::remove_if(s.begin(), s.end(), ::isspace), s.end());
    static const std::regex pair_re(R"(^([^,]+),([^,]+)$)");
    static const std::regex cplx_re(R"(^([+-]?[0-9.]+(?:[eE][+-]?[0-9]+)?)([+-][0-9.]*(?:[eE][+-]?[0-9]+)?)i$)");
    std::smatch mt;
    if (std::regex_match(s, mt, pair_re)) return nz::Complex(nz::parse_real(mt[1]), nz::parse_real(mt[2]));
    if (std::regex_match(s, mt, cplx_re)) {
        std::string im = mt[2];
        if (im == "+" || im == "-") im += "1";
        return nz::Complex(nz::parse_real(mt[1]), nz::parse_real(im));
    }
    try {
        return nz::Complex(nz::parse_real(s));
    } catch (const nz::Error&) {
        throw nz::Error(nz::Errc::InvalidArgument, "cannot parse m value '" + s + "'");
    }
}

bool is_one(const nz::Complex& m) { return abs(m - nz::Complex(1)) < nz::tolerance(); }

ordered_json dir_json(const std::vector<std::pair<int, nz::Direction>>& rots) {
    ordered_json a = ordered_json::array();
    for (auto [t, d] : rots) a.push_back({{"tet", t}, {"direction", d == nz::Direction::Fwd ? "fwd" : "bwd"}});
    return a;
}

ordered_json flat_json(const nz::Flattening& f) {
    return ordered_json{{"f", f.f}, {"fp", f.fp}, {"fpp", f.fpp}, {"longitude_compatible", f.longitude_compatible}};
}

ordered_json cert_json(const nz::MoveCertificate& c) {
    ordered_json j{{"kind", c.kind}, {"params", c.params}, {"input_hash", c.input_hash}, {"output_hash", c.output_hash}};
    j["tau_sign"] = c.tau_sign ? ordered_json(*c.tau_sign) : ordered_json(nullptr);
    return j;
}

ordered_json shapes_json(const nz::CVec& z, unsigned digits) {
    ordered_json a = ordered_json::array();
    for (const auto& w : z) a.push_back(cj(w, digits));
    return a;
}

void sync_file(nz_datum* d) {
    if (d->moved) d->file.tables.reset();
    d->file.datum = d->state.datum;
    d->file.shapes = d->state.shapes;
    d->file.flattening = d->state.flattening;
}

void normalize(nz_datum* d) {
    auto q = nz::normalize_quad(d->state);
    if (q.changed()) {
        d->moved = true;
        d->normalization.insert(d->normalization.end(), q.rotations.begin(), q.rotations.end());
    }
}

nz::CVec start_shapes(const nz_datum* d) {
    if (!d->state.shapes.empty()) return d->state.shapes;
    return nz::CVec(d->state.datum.n, nz::Complex(nz::Real("0.5"), nz::Real("0.8")));
}

// shapes at m, by continuation from the discrete faithful point
nz::ShapeAssignment solve_at(nz_datum* d, const nz::Complex& m) {
    auto base = nz::solve_shapes(d->state.datum, nz::Complex(1), start_shapes(d));
    d->state.shapes = base.z;
    if (is_one(m)) return base;
    auto path = nz::continue_in_m(d->state.datum, base.z, nz::Complex(1), {m});
    return path.back();
}

const nz::Flattening& flattening_for(nz_datum* d, bool deformed) {
    auto& fl = d->state.flattening;
    if (!fl || (deformed && !fl->longitude_compatible)) fl = nz::solve_flattening(d->state.datum, deformed);
    return *fl;
}

ordered_json base_report(const nz_datum* d, const char* command) {
    return ordered_json{{"command", command},
                        {"precision_bits", d->bits},
                        {"digits", d->digits},
                        {"n", d->state.datum.n},
                        {"datum_hash", nz::datum_hash(d->state.datum)}};
}

nz_status make_handle(unsigned bits, unsigned digits, nz_datum** out, const std::function<nz::DatumFile()>& load) {
    if (!out) {
        g_err = "cli.InvalidArgument: null output handle";
        return NZ_E_INVALID_ARGUMENT;
    }
    *out = nullptr;
    if (digits == 0) digits = kDefaultDigits;
    if (bits < 64) {
        g_err = "cli.PrecisionTooLow: precision must be at least 64 bits";
        return NZ_E_PRECISION_TOO_LOW;
    }
    if (digits > capacity_digits(bits)) {
        g_err = "cli.PrecisionTooLow: " + std::to_string(bits) + " bits support at most " +
                std::to_string(capacity_digits(bits)) + " reliable digits, " + std::to_string(digits) + " requested";
        return NZ_E_PRECISION_TOO_LOW;
    }
    auto h = std::make_unique<nz_datum>();
    h->bits = bits;
    h->digits = digits;
    nz_status st = guarded(bits, [&] {
        h->file = load();
        h->state.datum = h->file.datum;
        h->state.shapes = h->file.shapes;
        h->state.flattening = h->file.flattening;
    });
    if (st == NZ_OK) *out = h.release();
    return st;
}

nz_status check_handle(const nz_datum* d) {
    if (d) return NZ_OK;
    g_err = "cli.InvalidArgument: null datum handle";
    return NZ_E_INVALID_ARGUMENT;
}

}  // namespace

extern "C" {

NZ_API const char* nz_version(void) { return "1.0.0"; }

NZ_API const char* nz_status_name(nz_status s) {
    if (s == NZ_OK) return "OK";
    if (s == NZ_E_INTERNAL) return "Internal";
    return nz::errc_name(static_cast<nz::Errc>(s));
}

NZ_API const char* nz_status_module(nz_status s) {
    if (s == NZ_OK || s == NZ_E_INTERNAL) return "cli";
    return nz::errc_module(static_cast<nz::Errc>(s));
}

NZ_API const char* nz_last_error(void) { return g_err.c_str(); }

NZ_API void nz_string_free(char* s) { std::free(s); }

NZ_API nz_status nz_datum_load(const char* path, unsigned bits, unsigned digits, nz_datum** out) {
    if (!path) {
        g_err = "cli.InvalidArgument: null path";
        return NZ_E_INVALID_ARGUMENT;
    }
    std::string p(path);
    return make_handle(bits, digits, out, [p] { return nz::load_datum(p); });
}

NZ_API nz_status nz_datum_parse(const char* text, unsigned bits, unsigned digits, nz_datum** out) {
    if (!text) {
        g_err = "cli.InvalidArgument: null JSON text";
        return NZ_E_INVALID_ARGUMENT;
    }
    std::string t(text);
    return make_handle(bits, digits, out, [t] { return nz::parse_datum(t); });
}

NZ_API void nz_datum_free(nz_datum* d) {
    std::lock_guard<std::mutex> lock(g_mu);
    delete d;
}

NZ_API nz_status nz_datum_n(const nz_datum* d, int* n) {
    if (auto st = check_handle(d)) return st;
    if (n) *n = d->state.datum.n;
    return NZ_OK;
}

NZ_API nz_status nz_datum_to_json(const nz_datum* d, char** out) {
    if (auto st = check_handle(d)) return st;
    return guarded(d->bits, [&] {
        nz_datum copy = *d;
        sync_file(&copy);
        if (out) *out = dup(nz::serialize_datum(copy.file));
    });
}

NZ_API nz_status nz_datum_save(const nz_datum* d, const char* path) {
    if (auto st = check_handle(d)) return st;
    return guarded(d->bits, [&] {
        if (!path) throw nz::Error(nz::Errc::InvalidArgument, "null path");
        nz_datum copy = *d;
        sync_file(&copy);
        nz::save_datum(copy.file, path);
    });
}

NZ_API nz_status nz_datum_set_dropped_edge(nz_datum* d, int edge) {
    if (auto st = check_handle(d)) return st;
    return guarded(d->bits, [&] {
        if (!d->file.tables) throw nz::Error(nz::Errc::InvalidArgument, "datum has no gluing tables");
        if (d->moved) throw nz::Error(nz::Errc::InvalidArgument, "datum was transformed; tables no longer apply");
        d->state.datum = nz::derive_nz(*d->file.tables, edge);
        d->file.datum = d->state.datum;
        if (d->state.flattening && !nz::check_flattening(d->state.datum, *d->state.flattening, false))
            d->state.flattening.reset();
    });
}

NZ_API nz_status nz_ingest(nz_datum* d, char** report) {
    if (auto st = check_handle(d)) return st;
    return guarded(d->bits, [&] {
        const auto& dt = d->state.datum;
        auto rep = nz::check_symplectic(dt);
        ordered_json j = base_report(d, "ingest");
        j["dropped_edge"] = dt.dropped_edge;
        j["edge_rows"] = dt.edge_rows;
        j["has_gluing_tables"] = d->file.tables.has_value();
        j["has_longitude"] = dt.longitude.has_value();
        j["has_shapes"] = !d->state.shapes.empty();
        j["has_flattening"] = d->state.flattening.has_value();
        ordered_json s{{"ab_symmetric", rep.ab_symmetric}, {"rank_ab", rep.rank_ab}, {"det_b", rep.det_b.str()}};
        s["binv_a_symmetric"] = rep.binv_a_symmetric ? ordered_json(*rep.binv_a_symmetric) : ordered_json(nullptr);
        s["longitude_ok"] = rep.longitude_ok ? ordered_json(*rep.longitude_ok) : ordered_json(nullptr);
        j["symplectic"] = s;
        j["meta"] = json::parse(d->file.meta_json);
        put(report, j);
    });
}

NZ_API nz_status nz_flatten(nz_datum* d, int require_longitude, char** report) {
    if (auto st = check_handle(d)) return st;
    return guarded(d->bits, [&] {
        auto fl = nz::solve_flattening(d->state.datum, require_longitude != 0);
        d->state.flattening = fl;
        ordered_json j = base_report(d, "flatten");
        j["require_longitude"] = require_longitude != 0;
        j["flattening"] = flat_json(fl);
        put(report, j);
    });
}

NZ_API nz_status nz_normalize_quad(nz_datum* d, char** report) {
    if (auto st = check_handle(d)) return st;
    return guarded(d->bits, [&] {
        auto before = nz::datum_hash(d->state.datum);
        auto q = nz::normalize_quad(d->state);
        if (q.changed()) {
            d->moved = true;
            d->normalization.insert(d->normalization.end(), q.rotations.begin(), q.rotations.end());
        }
        ordered_json j = base_report(d, "normalize-quad");
        j["input_hash"] = before;
        j["rotations"] = dir_json(q.rotations);
        ordered_json certs = ordered_json::array();
        for (const auto& c : q.certs) certs.push_back(cert_json(c));
        j["certificates"] = certs;
        j["det_b"] = nz::det(nz::to_zmat(d->state.datum.b)).str();
        put(report, j);
    });
}

NZ_API nz_status nz_solve(nz_datum* d, const char* m, char** report) {
    if (auto st = check_handle(d)) return st;
    return guarded(d->bits, [&] {
        const nz::Complex mv = parse_m(m);
        auto sa = solve_at(d, mv);
        if (!is_one(mv)) d->state.shapes = sa.z;
        auto lift = nz::certify_lift(d->state.datum, sa);
        ordered_json j = base_report(d, "solve");
        j["m"] = cj(mv, d->digits);
        j["shapes"] = shapes_json(sa.z, d->digits);
        j["residual"] = num(sa.residual, 6);
        j["lift"] = {{"lattice", lift.lattice}, {"standard", lift.standard}};
        j["volume"] = num(nz::volume_oracle(sa.z), d->digits);
        if (d->state.datum.longitude)
            j["longitude_eigenvalue"] = cj(nz::longitude_eigenvalue(d->state.datum, sa), d->digits);
        put(report, j);
    });
}

NZ_API nz_status nz_continue(nz_datum* d, const char* m_path, char** report) {
    if (auto st = check_handle(d)) return st;
    return guarded(d->bits, [&] {
        if (!m_path) throw nz::Error(nz::Errc::InvalidArgument, "empty m path");
        std::vector<std::string> items;
        std::string p(m_path);
        if (!p.empty() && p.front() == '[') {
            json a;
            try {
                a = json::parse(p);
            } catch (const json::parse_error&) {
                throw nz::Error(nz::Errc::InvalidArgument, "m path is not valid JSON");
            }
            for (const auto& x : a) {
                if (!x.is_string()) throw nz::Error(nz::Errc::InvalidArgument, "m path entries must be strings");
                items.push_back(x.get<std::string>());
            }
        } else {
            size_t start = 0;
            for (;;) {
                size_t k = p.find(';', start);
                items.push_back(p.substr(start, k - start));
                if (k == std::string::npos) break;
                start = k + 1;
            }
        }
        std::vector<nz::Complex> path;
        for (const auto& s : items) path.push_back(parse_m(s.c_str()));
        if (path.empty()) throw nz::Error(nz::Errc::InvalidArgument, "empty m path");
        auto base = nz::solve_shapes(d->state.datum, nz::Complex(1), start_shapes(d));
        auto steps = nz::continue_in_m(d->state.datum, base.z, nz::Complex(1), path);
        ordered_json j = base_report(d, "continue");
        ordered_json arr = ordered_json::array();
        for (size_t i = 0; i < steps.size(); ++i) {
            ordered_json s{{"m", cj(path[i], d->digits)},
                           {"shapes", shapes_json(steps[i].z, d->digits)},
                           {"residual", num(steps[i].residual, 6)}};
            if (d->state.datum.longitude)
                s["longitude_eigenvalue"] = cj(nz::longitude_eigenvalue(d->state.datum, steps[i]), d->digits);
            arr.push_back(s);
        }
        j["steps"] = arr;
        put(report, j);
    });
}

NZ_API nz_status nz_invariants(nz_datum* d, const char* m, int loops, char** report) {
    if (auto st = check_handle(d)) return st;
    return guarded(d->bits, [&] {
        if (loops < 2 || loops > 4) throw nz::Error(nz::Errc::InvalidArgument, "loops must be 2, 3 or 4");
        const nz::Complex mv = parse_m(m);
        const bool deformed = !is_one(mv);
        normalize(d);
        auto sa = solve_at(d, mv);
        const auto& fl = flattening_for(d, deformed);
        auto li = nz::compute_invariants(d->state.datum, sa, fl, loops);
        const unsigned dg = d->digits;

        ordered_json j = base_report(d, "invariants");
        j["m"] = cj(mv, dg);
        j["loops"] = loops;
        j["normalization"] = dir_json(d->normalization);
        j["flattening"] = flat_json(fl);
        ordered_json warnings = ordered_json::array();
        if (!li.s0.lift.standard) warnings.push_back("NonStandardLift: S0 uses a nonzero lattice vector");
        j["warnings"] = warnings;
        j["lift"] = {{"lattice", li.s0.lift.lattice}, {"standard", li.s0.lift.standard}};
        const nz::Complex s0 = li.s0.s0;
        j["s0"] = {{"re", cj(s0, dg)["re"]},
                   {"im", cj(s0, dg)["im"]},
                   {"re_mod_class", cj(nz::Complex(li.s0.re_mod_class), dg)["re"]},
                   {"modulus", "pi^2/6"}};
        j["tau"] = {{"value", cj(li.tau.value, dg)},
                    {"raw", cj(li.tau.raw, dg)},
                    {"sign_tag", li.tau.sign_tag > 0 ? "+" : "-"}};
        j["s2"] = {{"raw", cj(li.s2, dg)},
                   {"shifted", cj(li.s2 + nz::Complex(nz::Real(1) / 8), dg)},
                   {"closed_form", cj(li.s2_closed, dg)},
                   {"class", "mod 1/24"}};
        ordered_json sn = ordered_json::object();
        for (const auto& [k, v] : li.sn) sn[std::to_string(k)] = cj(v, dg);
        j["sn"] = sn;
        auto pm = [&](const std::map<int, nz::Complex>& p, const std::map<int, nz::Complex>& q) {
            ordered_json a = ordered_json::object(), b = ordered_json::object();
            for (const auto& [k, v] : p) a[std::to_string(k)] = cj(v, dg);
            for (const auto& [k, v] : q) b[std::to_string(k)] = cj(v, dg);
            return ordered_json{{"tau_plus", a}, {"tau_minus", b}};
        };
        j["sn_scaled"] = pm(li.scaled_plus, li.scaled_minus);
        j["sn_tilde"] = pm(li.tilde_plus, li.tilde_minus);
        j["volume_oracle"] = num(nz::volume_oracle(sa.z), dg);
        put(report, j);
    });
}

NZ_API nz_status nz_check(nz_datum* d, const char* moves_json, char** report) {
    if (auto st = check_handle(d)) return st;
    return guarded(d->bits, [&] {
        if (!moves_json) throw nz::Error(nz::Errc::InvalidArgument, "null move spec");
        auto moves = nz::parse_move_specs(moves_json);
        normalize(d);
        auto sa = solve_at(d, nz::Complex(1));
        flattening_for(d, false);
        nz::State st{d->state.datum, sa.z, d->state.flattening};
        auto rep = nz::invariance_harness(st, moves);
        const unsigned dg = d->digits;
        ordered_json j = base_report(d, "check");
        auto tol = nz::HarnessTolerances::defaults();
        j["tolerances"] = {{"tau2", num(tol.tau2, 3)}, {"s3", num(tol.s3, 3)}, {"s2_class", num(tol.s2_class, 3)}};
        ordered_json arr = ordered_json::array();
        for (const auto& e : rep.entries) {
            ordered_json x{{"label", e.label}, {"ok", e.ok()}};
            if (!e.error.empty()) {
                x["error"] = e.error;
                arr.push_back(x);
                continue;
            }
            ordered_json certs = ordered_json::array();
            for (const auto& c : e.certs) certs.push_back(cert_json(c));
            x["certificates"] = certs;
            x["normalization"] = dir_json(e.normalization);
            x["tau_before"] = cj(e.tau_before, dg);
            x["tau_after"] = cj(e.tau_after, dg);
            x["tau2_diff"] = num(e.tau2_diff, 6);
            x["predicted_sign"] = e.predicted_sign ? ordered_json(*e.predicted_sign) : ordered_json(nullptr);
            x["observed_sign"] = e.observed_sign;
            x["s2_delta"] = cj(e.s2_delta, dg);
            x["s2_class_residual"] = num(e.s2_class_residual, 6);
            x["s3_diff"] = num(e.s3_diff, 6);
            x["tau_ok"] = e.tau_ok;
            x["s2_ok"] = e.s2_ok;
            x["s3_ok"] = e.s3_ok;
            arr.push_back(x);
        }
        j["entries"] = arr;
        j["all_ok"] = rep.all_ok();
        put(report, j);
    });
}

NZ_API nz_status nz_move(nz_datum* d, const char* move_json, char** certificate) {
    if (auto st = check_handle(d)) return st;
    return guarded(d->bits, [&] {
        if (!move_json) throw nz::Error(nz::Errc::InvalidArgument, "null move spec");
        auto specs = nz::parse_move_specs(std::string("[") + move_json + "]");
        nz::State s = d->state;
        auto certs = nz::apply_move(s, specs.at(0));
        d->state = std::move(s);
        d->moved = true;
        ordered_json j = base_report(d, "move");
        j["label"] = nz::move_label(specs[0]);
        ordered_json arr = ordered_json::array();
        for (const auto& c : certs) arr.push_back(cert_json(c));
        j["certificates"] = arr;
        j["det_b"] = nz::det(nz::to_zmat(d->state.datum.b)).str();
        put(certificate, j);
    });
}

}  // extern "C"
