#ifndef NZLOOPS_H
#define NZLOOPS_H

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define NZ_API __declspec(dllexport)
#else
#define NZ_API __attribute__((visibility("default")))
#endif

typedef struct nz_datum nz_datum;

/* values match nz::Errc; NZ_E_INTERNAL covers anything unexpected */
typedef enum nz_status {
    NZ_OK = 0,
    NZ_E_INVALID_ARGUMENT = 1,
    NZ_E_SCHEMA = 2,
    NZ_E_INTEGER_OVERFLOW = 3,
    NZ_E_INCIDENCE = 4,
    NZ_E_SYMPLECTIC = 5,
    NZ_E_NO_INTEGER_SOLUTION = 6,
    NZ_E_POLE_AT_ONE = 7,
    NZ_E_BRANCH_POINT = 8,
    NZ_E_NO_CONVERGENCE = 9,
    NZ_E_DEGENERATE_SHAPE = 10,
    NZ_E_SINGULAR_JACOBIAN = 11,
    NZ_E_BRANCH_JUMP = 12,
    NZ_E_NON_LATTICE_RESIDUAL = 13,
    NZ_E_SINGULAR_HESSIAN = 14,
    NZ_E_HALF_INTEGER_SURVIVOR = 15,
    NZ_E_ZERO_TORSION = 16,
    NZ_E_DEGENERATE_MOVE = 17,
    NZ_E_QUAD_MISMATCH = 18,
    NZ_E_PRECISION_TOO_LOW = 19,
    NZ_E_IO = 20,
    NZ_E_INTERNAL = 99
} nz_status;

NZ_API const char* nz_version(void);
NZ_API const char* nz_status_name(nz_status s);
NZ_API const char* nz_status_module(nz_status s);
/* message of the last failed call on this thread */
NZ_API const char* nz_last_error(void);

/* Strings returned through char** are owned by the caller. */
NZ_API void nz_string_free(char* s);

/* precision_bits >= 64; digits is the number of significant digits printed
   in reports (0 picks the default of 30). Fails with NZ_E_PRECISION_TOO_LOW
   when the precision cannot support the digits. */
NZ_API nz_status nz_datum_load(const char* path, unsigned precision_bits, unsigned digits, nz_datum** out);
NZ_API nz_status nz_datum_parse(const char* json_text, unsigned precision_bits, unsigned digits, nz_datum** out);
NZ_API void nz_datum_free(nz_datum* d);
NZ_API nz_status nz_datum_n(const nz_datum* d, int* n);
NZ_API nz_status nz_datum_to_json(const nz_datum* d, char** out);
NZ_API nz_status nz_datum_save(const nz_datum* d, const char* path);
/* re-derive A, B, eta from the gluing tables dropping the given edge */
NZ_API nz_status nz_datum_set_dropped_edge(nz_datum* d, int edge);

/* Each call below writes a JSON report to *report. */
NZ_API nz_status nz_ingest(nz_datum* d, char** report);
NZ_API nz_status nz_flatten(nz_datum* d, int require_longitude, char** report);
NZ_API nz_status nz_normalize_quad(nz_datum* d, char** report);
/* m is "re", "re,im" or "re+imi"; NULL means 1 */
NZ_API nz_status nz_solve(nz_datum* d, const char* m, char** report);
/* m_path is a comma separated list of m values joined by ';' or a JSON array of strings */
NZ_API nz_status nz_continue(nz_datum* d, const char* m_path, char** report);
/* loops in {2,3,4} */
NZ_API nz_status nz_invariants(nz_datum* d, const char* m, int loops, char** report);
NZ_API nz_status nz_check(nz_datum* d, const char* moves_json, char** report);
/* one move object in the move-spec format; transforms the datum in place */
NZ_API nz_status nz_move(nz_datum* d, const char* move_json, char** certificate);

#ifdef __cplusplus
}
#endif

#endif
