#pragma once

#include "nzloops/mpnum.hpp"

#include <optional>
#include <string>
#include <vector>

namespace nz {

using IVec = std::vector<long long>;
using IMat = std::vector<IVec>;

// Rows 1..N edges, N+1 meridian, optional N+2 longitude.
struct GluingTables {
    int n = 0;
    IMat g, gp, gpp;

    bool has_longitude() const { return static_cast<int>(g.size()) == n + 2; }
};

// Doubled so that half-integer C, D, eta_lambda stay integral.
struct Longitude {
    IVec two_c, two_d;
    long long two_eta = 0;

    bool operator==(const Longitude&) const = default;
};

// Last row is always the meridian. edge_rows[r] names the edge held by row r
// (1-based); the remaining edge is dropped_edge.
struct NZDatum {
    int n = 0;
    IMat a, b;
    IVec eta;
    int dropped_edge = 0;
    std::vector<int> edge_rows;
    std::optional<Longitude> longitude;

    bool operator==(const NZDatum&) const = default;
};

struct Flattening {
    IVec f, fp, fpp;
    bool longitude_compatible = false;

    bool operator==(const Flattening&) const = default;
};

// Everything one file can hold.
struct DatumFile {
    std::optional<GluingTables> tables;
    NZDatum datum;
    std::vector<Complex> shapes;
    std::optional<Flattening> flattening;
    std::string meta_json = "{}";
};

void validate_tables(const GluingTables& t);
NZDatum derive_nz(const GluingTables& t, int dropped_edge);
// throws SymplecticViolation
void validate_datum(const NZDatum& d);

DatumFile parse_datum(const std::string& json_text);
DatumFile load_datum(const std::string& path);
std::string serialize_datum(const DatumFile& f);
void save_datum(const DatumFile& f, const std::string& path);

// FNV-1a over the integer fields, hex encoded
std::string datum_hash(const NZDatum& d);

}  // namespace nz
