#include "nzloops/nzloops.h"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

using nlohmann::ordered_json;

namespace {

struct Opts {
    std::string datum;
    unsigned bits = 0;
    unsigned digits = 0;
    std::string out;
    std::string m;
    std::vector<std::string> m_path;
    int loops = 3;
    std::string moves;
    bool longitude = false;
    int dropped_edge = 0;
    // move
    std::string kind;
    int tet = 0;
    std::string dir = "fwd";
    int row = 0;
    int sign = 1;
    std::vector<int> tets;
    int central_row = 0;
    std::string move_json;
};

int fail(nz_status st) {
    ordered_json e{{"error", {{"module", nz_status_module(st)}, {"code", nz_status_name(st)}, {"message", nz_last_error()}}}};
    std::cerr << e.dump(1) << "\n";
    return static_cast<int>(st);
}

int usage_error(const std::string& msg) {
    ordered_json e{{"error", {{"module", "cli"}, {"code", "InvalidArgument"}, {"message", msg}}}};
    std::cerr << e.dump(1) << "\n";
    return NZ_E_INVALID_ARGUMENT;
}

unsigned default_bits() {
    if (const char* p = std::getenv("NZ_PRECISION")) {
        char* end = nullptr;
        unsigned long v = std::strtoul(p, &end, 10);
        if (end && *end == '\0' && v > 0) return static_cast<unsigned>(v);
    }
    return 256;
}

bool read_file(const std::string& path, std::string& text) {
    std::ifstream in(path);
    if (!in) return false;
    std::ostringstream ss;
    ss << in.rdbuf();
    text = ss.str();
    return true;
}

// report to stdout, datum to --out when the command changes it
int emit(nz_datum* d, char* report, const Opts& o, bool saves_datum) {
    std::string r = report ? report : "";
    nz_string_free(report);
    if (saves_datum && !o.out.empty()) {
        if (nz_status st = nz_datum_save(d, o.out.c_str())) return fail(st);
    } else if (!o.out.empty()) {
        std::ofstream f(o.out);
        if (!f) return usage_error("cannot write " + o.out);
        f << r;
    }
    std::cout << r;
    return 0;
}

std::string build_move(const Opts& o) {
    if (!o.move_json.empty()) return o.move_json;
    ordered_json j{{"kind", o.kind}};
    if (o.kind == "rotate") {
        j["tet"] = o.tet;
        j["direction"] = o.dir;
    } else if (o.kind == "edge") {
        j["row"] = o.row;
    } else if (o.kind == "meridian") {
        j["row"] = o.row;
        j["sign"] = o.sign;
    } else if (o.kind == "twothree") {
        j["tets"] = o.tets;
    } else if (o.kind == "threetwo") {
        j["tets"] = o.tets;
        j["central_row"] = o.central_row;
    }
    return j.dump();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Loop invariants of ideal triangulations from Neumann-Zagier data"};
    app.require_subcommand(1);
    Opts o;
    o.bits = default_bits();

    auto common = [&](CLI::App* c) {
        c->add_option("--datum", o.datum, "datum JSON file")->required()->check(CLI::ExistingFile);
        c->add_option("--precision", o.bits, "working precision in bits (default $NZ_PRECISION or 256)");
        c->add_option("--digits", o.digits, "significant digits in reports (default 30)");
        c->add_option("--out", o.out, "output file");
    };

    auto* ingest = app.add_subcommand("ingest", "validate a datum and derive NZ data");
    common(ingest);
    ingest->add_option("--dropped-edge", o.dropped_edge, "edge equation to drop (1-based)");

    auto* flatten = app.add_subcommand("flatten", "find a small combinatorial flattening");
    common(flatten);
    flatten->add_flag("--longitude", o.longitude, "also satisfy the longitude row");

    auto* nq = app.add_subcommand("normalize-quad", "rotate quads until det B != 0");
    common(nq);

    auto* solve = app.add_subcommand("solve", "solve the gluing equations");
    common(solve);
    solve->add_option("--m", o.m, "meridian eigenvalue, e.g. 1.1 or 1.1,0.2");

    auto* cont = app.add_subcommand("continue", "track shapes along a path in m");
    common(cont);
    cont->add_option("--m-path", o.m_path, "m values, as separate arguments or joined by ';'")->required();

    auto* inv = app.add_subcommand("invariants", "compute S0, tau and higher loop invariants");
    common(inv);
    inv->add_option("--m", o.m, "meridian eigenvalue");
    inv->add_option("--loops", o.loops, "highest loop order")->check(CLI::Range(2, 4));

    auto* check = app.add_subcommand("check", "run the invariance harness");
    common(check);
    check->add_option("--moves", o.moves, "move list JSON")->required()->check(CLI::ExistingFile);

    auto* move = app.add_subcommand("move", "apply one move and write the new datum");
    common(move);
    move->add_option("--kind", o.kind, "rotate|edge|meridian|twothree|threetwo")
        ->check(CLI::IsMember({"rotate", "edge", "meridian", "twothree", "threetwo"}));
    move->add_option("--tet", o.tet, "tetrahedron (1-based)");
    move->add_option("--dir", o.dir, "fwd|bwd")->check(CLI::IsMember({"fwd", "bwd"}));
    move->add_option("--row", o.row, "row (1-based)");
    move->add_option("--sign", o.sign, "+1 or -1")->check(CLI::IsMember({1, -1}));
    move->add_option("--tets", o.tets, "tetrahedra for 2-3 / 3-2")->delimiter(',');
    move->add_option("--central-row", o.central_row, "central edge row for 3-2");
    move->add_option("--json", o.move_json, "move object in the move-list format");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        return usage_error(e.what());
    }

    if (move->parsed() && o.kind.empty() && o.move_json.empty()) return usage_error("move needs --kind or --json");

    nz_datum* d = nullptr;
    if (nz_status st = nz_datum_load(o.datum.c_str(), o.bits, o.digits, &d)) return fail(st);
    struct Guard {
        nz_datum* d;
        ~Guard() { nz_datum_free(d); }
    } guard{d};

    char* report = nullptr;
    nz_status st = NZ_OK;
    bool saves = false;
    const char* m = o.m.empty() ? nullptr : o.m.c_str();

    if (ingest->parsed()) {
        if (o.dropped_edge != 0) st = nz_datum_set_dropped_edge(d, o.dropped_edge);
        if (!st) st = nz_ingest(d, &report);
        saves = o.dropped_edge != 0;
    } else if (flatten->parsed()) {
        st = nz_flatten(d, o.longitude ? 1 : 0, &report);
        saves = true;
    } else if (nq->parsed()) {
        st = nz_normalize_quad(d, &report);
        saves = true;
    } else if (solve->parsed()) {
        st = nz_solve(d, m, &report);
    } else if (cont->parsed()) {
        std::string path;
        for (const auto& p : o.m_path) path += (path.empty() ? "" : ";") + p;
        st = nz_continue(d, path.c_str(), &report);
    } else if (inv->parsed()) {
        st = nz_invariants(d, m, o.loops, &report);
    } else if (check->parsed()) {
        std::string text;
        if (!read_file(o.moves, text)) return usage_error("cannot read " + o.moves);
        st = nz_check(d, text.c_str(), &report);
        if (!st) {
            bool all_ok = ordered_json::parse(report).value("all_ok", false);
            int rc = emit(d, report, o, false);
            if (rc) return rc;
            return all_ok ? 0 : 1;
        }
    } else if (move->parsed()) {
        st = nz_move(d, build_move(o).c_str(), &report);
        saves = true;
    }
    if (st) return fail(st);
    return emit(d, report, o, saves);
}
