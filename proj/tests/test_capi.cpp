#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "nzloops/nzloops.h"

#include <json.hpp>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <thread>

using nlohmann::json;

namespace {

std::string fixture(const std::string& name) { return std::string(NZ_FIXTURE_DIR) + "/" + name; }

struct Handle {
    nz_datum* d = nullptr;
    ~Handle() { nz_datum_free(d); }
};

json take(char* s) {
    REQUIRE(s != nullptr);
    json j = json::parse(s);
    nz_string_free(s);
    return j;
}

double num(const json& j) { return std::stod(j.get<std::string>()); }

std::string slurp(const std::string& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("status metadata") {
    CHECK(std::string(nz_status_name(NZ_OK)) == "OK");
    CHECK(std::string(nz_status_name(NZ_E_SCHEMA)) == "SchemaError");
    CHECK(std::string(nz_status_module(NZ_E_SCHEMA)) == "nzio");
    CHECK(std::string(nz_status_module(NZ_E_BRANCH_JUMP)) == "gluesolve");
    CHECK(std::string(nz_status_module(NZ_E_PRECISION_TOO_LOW)) == "cli");
    CHECK(std::string(nz_version()).size() > 0);
}

TEST_CASE("load errors") {
    nz_datum* d = nullptr;
    CHECK(nz_datum_load("/nonexistent.json", 256, 0, &d) == NZ_E_IO);
    CHECK(d == nullptr);
    CHECK(std::string(nz_last_error()).find("nzio") != std::string::npos);
    CHECK(nz_datum_parse("{\"format\": 1}", 256, 0, &d) == NZ_E_SCHEMA);
    CHECK(nz_datum_load(fixture("4_1.json").c_str(), 64, 0, &d) == NZ_E_PRECISION_TOO_LOW);
    CHECK(nz_datum_load(fixture("4_1.json").c_str(), 128, 30, &d) == NZ_E_PRECISION_TOO_LOW);
    CHECK(nz_datum_load(fixture("4_1.json").c_str(), 40, 5, &d) == NZ_E_PRECISION_TOO_LOW);
    CHECK(nz_datum_load(fixture("4_1.json").c_str(), 128, 15, &d) == NZ_OK);
    nz_datum_free(d);
    CHECK(nz_ingest(nullptr, nullptr) == NZ_E_INVALID_ARGUMENT);
}

TEST_CASE("ingest and round trip") {
    Handle h;
    REQUIRE(nz_datum_load(fixture("4_1.json").c_str(), 256, 0, &h.d) == NZ_OK);
    int n = 0;
    CHECK(nz_datum_n(h.d, &n) == NZ_OK);
    CHECK(n == 2);
    char* rep = nullptr;
    REQUIRE(nz_ingest(h.d, &rep) == NZ_OK);
    auto j = take(rep);
    CHECK(j["symplectic"]["det_b"] == "-1");
    CHECK(j["symplectic"]["rank_ab"] == 2);
    CHECK(j["meta"]["name"] == "4_1");

    char* text = nullptr;
    REQUIRE(nz_datum_to_json(h.d, &text) == NZ_OK);
    Handle h2;
    CHECK(nz_datum_parse(text, 256, 0, &h2.d) == NZ_OK);
    char* text2 = nullptr;
    REQUIRE(nz_datum_to_json(h2.d, &text2) == NZ_OK);
    CHECK(std::string(text) == std::string(text2));
    nz_string_free(text);
    nz_string_free(text2);

    CHECK(nz_datum_set_dropped_edge(h.d, 1) == NZ_OK);
    REQUIRE(nz_ingest(h.d, &rep) == NZ_OK);
    CHECK(take(rep)["dropped_edge"] == 1);
    CHECK(nz_datum_set_dropped_edge(h.d, 7) != NZ_OK);
}

TEST_CASE("solve and continue") {
    Handle h;
    REQUIRE(nz_datum_load(fixture("4_1.json").c_str(), 256, 0, &h.d) == NZ_OK);
    char* rep = nullptr;
    REQUIRE(nz_solve(h.d, nullptr, &rep) == NZ_OK);
    auto j = take(rep);
    CHECK(std::abs(num(j["shapes"][0]["re"]) - 0.5) < 1e-15);
    CHECK(std::abs(num(j["shapes"][0]["im"]) - std::sqrt(3.0) / 2) < 1e-15);
    CHECK(j["lift"]["standard"] == true);
    CHECK(std::abs(num(j["longitude_eigenvalue"]["re"]) + 1) < 1e-15);

    for (const char* m : {"1.1", "1.1,0.05", "1.1+0.05i", "1.1-0.05i"}) {
        CHECK(nz_solve(h.d, m, &rep) == NZ_OK);
        nz_string_free(rep);
    }
    CHECK(nz_solve(h.d, "abc", &rep) == NZ_E_INVALID_ARGUMENT);

    REQUIRE(nz_continue(h.d, "1.02;1.04;1.06", &rep) == NZ_OK);
    CHECK(take(rep)["steps"].size() == 3);
    REQUIRE(nz_continue(h.d, R"(["1.02", "1.04,0.01"])", &rep) == NZ_OK);
    CHECK(take(rep)["steps"].size() == 2);
}

TEST_CASE("invariants report") {
    Handle h;
    REQUIRE(nz_datum_load(fixture("4_1.json").c_str(), 256, 25, &h.d) == NZ_OK);
    char* rep = nullptr;
    REQUIRE(nz_invariants(h.d, nullptr, 3, &rep) == NZ_OK);
    auto j = take(rep);
    CHECK(j["digits"] == 25);
    CHECK(std::abs(num(j["sn"]["3"]["re"]) + 1.0 / 54) < 1e-15);
    CHECK(std::abs(num(j["tau"]["value"]["im"]) - std::sqrt(3.0) / 2) < 1e-15);
    CHECK(std::abs(num(j["s0"]["im"]) - 2.0298832128193072) < 1e-15);
    CHECK(j["warnings"].empty());
    CHECK(std::abs(num(j["sn_scaled"]["tau_plus"]["3"]["re"]) - 0.0078125) < 1e-15);
    CHECK(nz_invariants(h.d, nullptr, 7, &rep) == NZ_E_INVALID_ARGUMENT);
}

TEST_CASE("normalize, move and check") {
    Handle h;
    REQUIRE(nz_datum_load(fixture("9_12.json").c_str(), 256, 0, &h.d) == NZ_OK);
    char* rep = nullptr;
    REQUIRE(nz_normalize_quad(h.d, &rep) == NZ_OK);
    auto j = take(rep);
    CHECK(j["det_b"] != "0");
    CHECK(j["rotations"].size() >= 1);

    Handle f;
    REQUIRE(nz_datum_load(fixture("4_1.json").c_str(), 256, 0, &f.d) == NZ_OK);
    REQUIRE(nz_move(f.d, R"({"kind": "rotate", "tet": 1, "direction": "fwd"})", &rep) == NZ_OK);
    j = take(rep);
    CHECK(j["certificates"].size() == 1);
    CHECK(j["det_b"] == "0");
    CHECK(nz_move(f.d, R"({"kind": "twirl"})", &rep) == NZ_E_SCHEMA);
    // tables no longer describe the datum
    CHECK(nz_datum_set_dropped_edge(f.d, 1) == NZ_E_INVALID_ARGUMENT);

    char* text = nullptr;
    REQUIRE(nz_datum_to_json(f.d, &text) == NZ_OK);
    auto saved = json::parse(text);
    nz_string_free(text);
    CHECK_FALSE(saved.contains("gluing"));
    CHECK(saved["nz"]["a"][0][0] == -1);

    Handle g;
    REQUIRE(nz_datum_load(fixture("4_1.json").c_str(), 256, 0, &g.d) == NZ_OK);
    auto moves = slurp(fixture("moves_4_1.json"));
    REQUIRE(nz_check(g.d, moves.c_str(), &rep) == NZ_OK);
    j = take(rep);
    CHECK(j["all_ok"] == true);
    CHECK(j["entries"].size() == 8);
}

TEST_CASE("concurrent callers get identical reports") {
    std::string results[4];
    std::thread ts[4];
    for (int t = 0; t < 4; ++t)
        ts[t] = std::thread([t, &results] {
            nz_datum* d = nullptr;
            if (nz_datum_load(fixture("4_1.json").c_str(), t % 2 ? 320 : 256, 20, &d) != NZ_OK) return;
            char* rep = nullptr;
            if (nz_invariants(d, nullptr, 3, &rep) == NZ_OK) {
                auto j = json::parse(rep);
                j.erase("precision_bits");
                results[t] = j.dump();
                nz_string_free(rep);
            }
            nz_datum_free(d);
        });
    for (auto& t : ts) t.join();
    for (int t = 0; t < 4; ++t) {
        CHECK_FALSE(results[t].empty());
        CHECK(results[t] == results[0]);
    }
}
