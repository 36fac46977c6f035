#include "nzloops/nzio.hpp"

#include "nzloops/error.hpp"
#include "nzloops/exactla.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

namespace nz {

using nlohmann::json;

namespace {

long long sum(const IVec& v) {
    long long s = 0;
    for (auto x : v) {
        if (__builtin_add_overflow(s, x, &s)) throw Error(Errc::IntegerOverflow, "row sum overflows");
    }
    return s;
}

long long sub(long long a, long long b) {
    long long r;
    if (__builtin_sub_overflow(a, b, &r)) throw Error(Errc::IntegerOverflow, "entry difference overflows");
    return r;
}

IVec row_diff(const IVec& x, const IVec& y) {
    IVec r(x.size());
    for (size_t i = 0; i < x.size(); ++i) r[i] = sub(x[i], y[i]);
    return r;
}

std::vector<int> default_edge_rows(int n, int dropped) {
    std::vector<int> rows;
    for (int j = 1; j < n; ++j) rows.push_back(j == dropped ? n : j);
    return rows;
}

bool all_zero(const IVec& v) {
    for (auto x : v)
        if (x) return false;
    return true;
}

}  // namespace

void validate_tables(const GluingTables& t) {
    const int n = t.n;
    if (n < 1) throw Error(Errc::SchemaError, "n must be positive");
    const size_t rows = t.g.size();
    if (rows != static_cast<size_t>(n + 1) && rows != static_cast<size_t>(n + 2))
        throw Error(Errc::SchemaError, "gluing tables need N+1 or N+2 rows");
    for (const IMat* m : {&t.g, &t.gp, &t.gpp}) {
        if (m->size() != rows) throw Error(Errc::SchemaError, "g, gp, gpp differ in row count");
        for (const auto& r : *m)
            if (r.size() != static_cast<size_t>(n)) throw Error(Errc::SchemaError, "gluing row length != N");
    }
    for (const IMat* m : {&t.g, &t.gp, &t.gpp}) {
        for (int i = 0; i < n; ++i) {
            long long s = 0;
            for (int r = 0; r < n; ++r) {
                long long v = (*m)[r][i];
                if (v < 0 || v > 2) throw Error(Errc::IncidenceViolation, "edge row entry outside {0,1,2}");
                s += v;
            }
            if (s != 2)
                throw Error(Errc::IncidenceViolation,
                            "column " + std::to_string(i + 1) + " of the edge rows does not sum to 2");
        }
    }
}

NZDatum derive_nz(const GluingTables& t, int dropped_edge) {
    validate_tables(t);
    const int n = t.n;
    if (dropped_edge < 1 || dropped_edge > n) throw Error(Errc::InvalidArgument, "dropped edge out of range");
    NZDatum d;
    d.n = n;
    d.dropped_edge = dropped_edge;
    d.edge_rows = default_edge_rows(n, dropped_edge);
    auto push = [&](int r, long long base) {
        d.a.push_back(row_diff(t.g[r], t.gp[r]));
        d.b.push_back(row_diff(t.gpp[r], t.gp[r]));
        d.eta.push_back(sub(base, sum(t.gp[r])));
    };
    for (int e : d.edge_rows) push(e - 1, 2);
    push(n, 0);
    if (t.has_longitude()) {
        Longitude l;
        l.two_c = row_diff(t.g[n + 1], t.gp[n + 1]);
        l.two_d = row_diff(t.gpp[n + 1], t.gp[n + 1]);
        l.two_eta = sub(0, sum(t.gp[n + 1]));
        d.longitude = l;
    }
    validate_datum(d);
    return d;
}

void validate_datum(const NZDatum& d) {
    const size_t n = d.n;
    if (d.n < 1 || d.a.size() != n || d.b.size() != n || d.eta.size() != n)
        throw Error(Errc::SchemaError, "NZ matrices must be N x N with N-vector eta");
    for (size_t r = 0; r < n; ++r)
        if (d.a[r].size() != n || d.b[r].size() != n) throw Error(Errc::SchemaError, "NZ matrix row length != N");
    if (d.edge_rows.size() != n - 1) throw Error(Errc::SchemaError, "edge_rows must have N-1 entries");
    if (d.longitude && (d.longitude->two_c.size() != n || d.longitude->two_d.size() != n))
        throw Error(Errc::SchemaError, "longitude vectors must have N entries");
    auto rep = check_symplectic(d);
    if (!rep.ab_symmetric) throw Error(Errc::SymplecticViolation, "A B^T is not symmetric");
    if (rep.rank_ab != d.n)
        throw Error(Errc::SymplecticViolation, "(A B) has rank " + std::to_string(rep.rank_ab) + " < N");
    if (rep.longitude_ok && !*rep.longitude_ok)
        throw Error(Errc::SymplecticViolation, "longitude fails A_N.D - B_N.C = 1");
}

namespace {

struct Reader {
    const json& root;

    [[noreturn]] static void fail(const std::string& path, const std::string& what) {
        throw Error(Errc::SchemaError, path + ": " + what);
    }

    static long long integer(const json& v, const std::string& path) {
        if (v.is_number_integer()) {
            if (v.is_number_unsigned() &&
                v.get<std::uint64_t>() > static_cast<std::uint64_t>(std::numeric_limits<long long>::max()))
                throw Error(Errc::IntegerOverflow, path + ": integer exceeds 64-bit range");
            return v.get<long long>();
        }
        if (v.is_number_float()) {
            double x = v.get<double>();
            if (x == static_cast<double>(static_cast<long long>(x)) && std::abs(x) < 9.2e18) fail(path, "expected an integer literal");
            if (std::abs(x) >= 9.2e18) throw Error(Errc::IntegerOverflow, path + ": integer exceeds 64-bit range");
        }
        fail(path, "expected an integer");
    }

    static IVec vec(const json& v, const std::string& path) {
        if (!v.is_array()) fail(path, "expected an array");
        IVec out;
        for (size_t i = 0; i < v.size(); ++i) out.push_back(integer(v[i], path + "/" + std::to_string(i)));
        return out;
    }

    static IMat mat(const json& v, const std::string& path) {
        if (!v.is_array()) fail(path, "expected an array of rows");
        IMat out;
        for (size_t i = 0; i < v.size(); ++i) out.push_back(vec(v[i], path + "/" + std::to_string(i)));
        return out;
    }

    static const json& field(const json& obj, const char* key, const std::string& path) {
        if (!obj.is_object() || !obj.contains(key)) fail(path + "/" + key, "missing field");
        return obj.at(key);
    }
};

json ivec_json(const IVec& v) { return json(v); }

void pretty(const json& j, int indent, std::string& out) {
    const std::string pad(indent, ' '), pad2(indent + 1, ' ');
    bool flat = !j.is_structured() ||
                (j.is_array() && std::none_of(j.begin(), j.end(), [](const json& e) { return e.is_structured(); }));
    if (flat || j.empty()) {
        out += j.dump();
        return;
    }
    if (j.is_array()) {
        out += "[\n";
        for (size_t i = 0; i < j.size(); ++i) {
            out += pad2;
            pretty(j[i], indent + 1, out);
            out += i + 1 < j.size() ? ",\n" : "\n";
        }
        out += pad + "]";
        return;
    }
    out += "{\n";
    size_t i = 0;
    for (auto it = j.begin(); it != j.end(); ++it, ++i) {
        out += pad2 + json(it.key()).dump() + ": ";
        pretty(it.value(), indent + 1, out);
        out += i + 1 < j.size() ? ",\n" : "\n";
    }
    out += pad + "}";
}

}  // namespace

DatumFile parse_datum(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(Errc::SchemaError, std::string("invalid JSON: ") + e.what());
    }
    if (!root.is_object()) Reader::fail("", "top level must be an object");
    if (root.contains("format") && root["format"] != "nzdatum-v1") Reader::fail("/format", "unsupported format");
    const int n = static_cast<int>(Reader::integer(Reader::field(root, "n", ""), "/n"));
    if (n < 1 || n > 32) Reader::fail("/n", "N must be in 1..32");

    DatumFile out;
    if (root.contains("gluing")) {
        const auto& g = root["gluing"];
        GluingTables t;
        t.n = n;
        t.g = Reader::mat(Reader::field(g, "g", "/gluing"), "/gluing/g");
        t.gp = Reader::mat(Reader::field(g, "gp", "/gluing"), "/gluing/gp");
        t.gpp = Reader::mat(Reader::field(g, "gpp", "/gluing"), "/gluing/gpp");
        if (t.g.size() > static_cast<size_t>(n) && all_zero(t.g[n]) && t.gp.size() > static_cast<size_t>(n) &&
            all_zero(t.gp[n]) && t.gpp.size() > static_cast<size_t>(n) && all_zero(t.gpp[n]))
            Reader::fail("/gluing/g/" + std::to_string(n), "meridian row must be nonzero");
        out.tables = t;
    }

    if (root.contains("nz")) {
        const auto& z = root["nz"];
        NZDatum d;
        d.n = n;
        d.a = Reader::mat(Reader::field(z, "a", "/nz"), "/nz/a");
        d.b = Reader::mat(Reader::field(z, "b", "/nz"), "/nz/b");
        d.eta = Reader::vec(Reader::field(z, "eta", "/nz"), "/nz/eta");
        d.dropped_edge = static_cast<int>(Reader::integer(Reader::field(z, "dropped_edge", "/nz"), "/nz/dropped_edge"));
        if (d.dropped_edge < 1 || d.dropped_edge > n) Reader::fail("/nz/dropped_edge", "out of range");
        if (z.contains("edge_rows")) {
            for (auto v : Reader::vec(z["edge_rows"], "/nz/edge_rows")) d.edge_rows.push_back(static_cast<int>(v));
        } else {
            d.edge_rows = default_edge_rows(n, d.dropped_edge);
        }
        if (d.a.size() == static_cast<size_t>(n) && all_zero(d.a[n - 1]) && all_zero(d.b[n - 1]))
            Reader::fail("/nz/a/" + std::to_string(n - 1), "meridian row must be nonzero");
        if (root.contains("longitude")) {
            const auto& l = root["longitude"];
            Longitude lon;
            lon.two_c = Reader::vec(Reader::field(l, "two_c", "/longitude"), "/longitude/two_c");
            lon.two_d = Reader::vec(Reader::field(l, "two_d", "/longitude"), "/longitude/two_d");
            lon.two_eta = Reader::integer(Reader::field(l, "two_eta_lambda", "/longitude"), "/longitude/two_eta_lambda");
            d.longitude = lon;
        }
        validate_datum(d);
        if (out.tables) {
            NZDatum ref = derive_nz(*out.tables, d.dropped_edge);
            if (ref.a != d.a || ref.b != d.b || ref.eta != d.eta)
                Reader::fail("/nz", "does not match the gluing tables");
        }
        out.datum = d;
    } else if (out.tables) {
        int dropped = n;
        out.datum = derive_nz(*out.tables, dropped);
    } else {
        Reader::fail("", "need a gluing or nz block");
    }

    if (root.contains("shapes")) {
        const auto& s = root["shapes"];
        if (!s.is_array() || s.size() != static_cast<size_t>(n)) Reader::fail("/shapes", "expected N entries");
        for (size_t i = 0; i < s.size(); ++i) {
            std::string p = "/shapes/" + std::to_string(i);
            const auto& re = Reader::field(s[i], "re", p);
            const auto& im = Reader::field(s[i], "im", p);
            if (!re.is_string() || !im.is_string()) Reader::fail(p, "re/im must be decimal strings");
            out.shapes.emplace_back(parse_real(re.get<std::string>()), parse_real(im.get<std::string>()));
        }
    }

    if (root.contains("flattening")) {
        const auto& f = root["flattening"];
        IVec fv = Reader::vec(Reader::field(f, "f", "/flattening"), "/flattening/f");
        IVec fpp = Reader::vec(Reader::field(f, "fpp", "/flattening"), "/flattening/fpp");
        if (fv.size() != static_cast<size_t>(n) || fpp.size() != static_cast<size_t>(n))
            Reader::fail("/flattening", "expected N entries");
        out.flattening = make_flattening(out.datum, fv, fpp);
        if (!check_flattening(out.datum, *out.flattening, false))
            Reader::fail("/flattening", "does not satisfy A f + B f'' = eta");
    }

    if (root.contains("meta")) out.meta_json = root["meta"].dump();
    return out;
}

DatumFile load_datum(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::IoError, "cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_datum(ss.str());
}

std::string serialize_datum(const DatumFile& f) {
    json root;
    const auto& d = f.datum;
    root["format"] = "nzdatum-v1";
    root["n"] = d.n;
    if (f.tables) root["gluing"] = {{"g", f.tables->g}, {"gp", f.tables->gp}, {"gpp", f.tables->gpp}};
    root["nz"] = {{"a", d.a}, {"b", d.b}, {"eta", ivec_json(d.eta)}, {"dropped_edge", d.dropped_edge},
                  {"edge_rows", d.edge_rows}};
    if (d.longitude)
        root["longitude"] = {{"two_c", d.longitude->two_c},
                             {"two_d", d.longitude->two_d},
                             {"two_eta_lambda", d.longitude->two_eta}};
    if (!f.shapes.empty()) {
        json s = json::array();
        for (const auto& z : f.shapes) s.push_back({{"re", to_string(z.re)}, {"im", to_string(z.im)}});
        root["shapes"] = s;
    }
    if (f.flattening) root["flattening"] = {{"f", f.flattening->f}, {"fpp", f.flattening->fpp}};
    root["meta"] = json::parse(f.meta_json);
    std::string out;
    pretty(root, 0, out);
    return out + "\n";
}

void save_datum(const DatumFile& f, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error(Errc::IoError, "cannot write " + path);
    out << serialize_datum(f);
    if (!out) throw Error(Errc::IoError, "write failed for " + path);
}

std::string datum_hash(const NZDatum& d) {
    std::ostringstream os;
    os << d.n << ';';
    for (const IMat* m : {&d.a, &d.b})
        for (const auto& r : *m) {
            for (auto x : r) os << x << ',';
            os << '|';
        }
    for (auto x : d.eta) os << x << ',';
    os << ';' << d.dropped_edge << ';';
    for (auto x : d.edge_rows) os << x << ',';
    if (d.longitude) {
        os << ";L";
        for (auto x : d.longitude->two_c) os << x << ',';
        for (auto x : d.longitude->two_d) os << x << ',';
        os << d.longitude->two_eta;
    }
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : os.str()) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace nz
