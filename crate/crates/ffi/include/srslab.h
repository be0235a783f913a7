#ifndef SRSLAB_H
#define SRSLAB_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

// Status codes.
typedef enum SrsStatus {
  SRS_STATUS_OK = 0,
  SRS_STATUS_NULL_POINTER = 1,
  SRS_STATUS_INVALID_UTF8 = 2,
  SRS_STATUS_BUFFER_TOO_SMALL = 3,
  SRS_STATUS_PARSE = 4,
  SRS_STATUS_INVALID_ELEMENT = 5,
  SRS_STATUS_PRECONDITION = 6,
  SRS_STATUS_CONFIG = 7,
  SRS_STATUS_MISSING_ARTIFACT = 8,
  SRS_STATUS_IO = 9,
  SRS_STATUS_OTHER = 10,
  SRS_STATUS_PANIC = 11,
} SrsStatus;

// A Baumslag–Solitar group BS(m, n) with its Bass–Serre tree.
typedef struct SrsBs SrsBs;

// An experiment configuration.
typedef struct SrsConfig SrsConfig;

// An element of Thompson's group F.
typedef struct SrsThompson SrsThompson;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// The message of the last failed call on this thread ("" after a success).
// The pointer stays valid until the next call on the same thread.
const char *srs_last_error(void);

// The library version, a static string.
const char *srs_version(void);

// Parses an element of F from its text form.
//
// # Safety
// `text` must be a valid C string and `out` a valid pointer.
enum SrsStatus srs_thompson_parse(const char *text, struct SrsThompson **out);

// The standard generators: index 0 is x0 (translation by 1), 1 is x1.
//
// # Safety
// `out` must be a valid pointer.
enum SrsStatus srs_thompson_generator(uint32_t index, struct SrsThompson **out);

// `*out = a · b`.
//
// # Safety
// `a`, `b` must be live handles and `out` a valid pointer.
enum SrsStatus srs_thompson_mul(const struct SrsThompson *a,
                                const struct SrsThompson *b,
                                struct SrsThompson **out);

// `*out = a⁻¹`.
//
// # Safety
// `a` must be a live handle and `out` a valid pointer.
enum SrsStatus srs_thompson_inverse(const struct SrsThompson *a, struct SrsThompson **out);

// `*equal = (a == b)`.
//
// # Safety
// `a`, `b` must be live handles and `equal` a valid pointer.
enum SrsStatus srs_thompson_equal(const struct SrsThompson *a,
                                  const struct SrsThompson *b,
                                  bool *equal);

// Writes the text form of `a`.
//
// # Safety
// `a` must be a live handle; `buf` must hold `len` bytes; `needed` may be null.
enum SrsStatus srs_thompson_format(const struct SrsThompson *a,
                                   char *buf,
                                   size_t len,
                                   size_t *needed);

// Releases a handle; null is ignored.
//
// # Safety
// `a` must come from this library and not be used afterwards.
void srs_thompson_free(struct SrsThompson *a);

// BS(m, n) = ⟨a, t | t a^m t⁻¹ = a^n⟩ with m, n nonzero.
//
// # Safety
// `out` must be a valid pointer.
enum SrsStatus srs_bs_new(int64_t m, int64_t n, struct SrsBs **out);

// Writes the Britton normal form of a word over {a, A, t, T}.
//
// # Safety
// `g` must be a live handle, `word` a C string; `buf` must hold `len` bytes.
enum SrsStatus srs_bs_normal_form(const struct SrsBs *g,
                                  const char *word,
                                  char *buf,
                                  size_t len,
                                  size_t *needed);

// `*equal` is whether two words give the same group element.
//
// # Safety
// `g` must be a live handle, the words C strings and `equal` a valid pointer.
enum SrsStatus srs_bs_equal(const struct SrsBs *g, const char *u, const char *v, bool *equal);

// Height (signed t-exponent sum) of the vertex w⟨a⟩ of the Bass–Serre tree.
//
// # Safety
// `g` must be a live handle, `word` a C string and `out` a valid pointer.
enum SrsStatus srs_bs_height(const struct SrsBs *g, const char *word, int64_t *out);

// Smallest k in [1, bound] with w⁻¹ a^k w ∈ ⟨a⟩; `*found` is false when
// there is none within the bound.
//
// # Safety
// `g` must be a live handle, `word` a C string, `k` and `found` valid pointers.
enum SrsStatus srs_bs_intersection_index(const struct SrsBs *g,
                                         const char *word,
                                         uint64_t bound,
                                         uint64_t *k,
                                         bool *found);

// # Safety
// `g` must come from this library and not be used afterwards.
void srs_bs_free(struct SrsBs *g);

// Φ(r) for the telescoping law p_j = 1/((j+1)(j+2)).
//
// # Safety
// `out` must be a valid pointer.
enum SrsStatus srs_gauge_telescoping(uint64_t r, uint64_t *out);

// The default configuration of an experiment ("records", "wreath-srs",
// "permwreath-srs", "thompson-mu", "bs-tree", "martingale").
//
// # Safety
// `kind` must be a C string and `out` a valid pointer.
enum SrsStatus srs_config_default(const char *kind, struct SrsConfig **out);

// A configuration from TOML text. `kind` may be null when the text names it.
//
// # Safety
// `kind` must be null or a C string; `toml` a C string; `out` a valid pointer.
enum SrsStatus srs_config_from_toml(const char *kind, const char *toml, struct SrsConfig **out);

// Overrides seed, trials and horizon.
//
// # Safety
// `c` must be a live handle.
enum SrsStatus srs_config_set_run(struct SrsConfig *c,
                                  uint64_t seed,
                                  uint64_t trials,
                                  uint64_t horizon);

// Writes the SHA-256 of the configuration as hex.
//
// # Safety
// `c` must be a live handle; `buf` must hold `len` bytes.
enum SrsStatus srs_config_hash(const struct SrsConfig *c, char *buf, size_t len, size_t *needed);

// # Safety
// `c` must come from this library and not be used afterwards.
void srs_config_free(struct SrsConfig *c);

// Runs the experiment into `out_dir`; `*all_checks_pass` reports the
// acceptance checks of the manifest.
//
// # Safety
// `c` must be a live handle, `out_dir` a C string and `all_checks_pass` valid.
enum SrsStatus srs_run(const struct SrsConfig *c, const char *out_dir, bool *all_checks_pass);

// Re-checks a run directory; `*passed` is whether every check holds.
//
// # Safety
// `dir` must be a C string and `passed` a valid pointer.
enum SrsStatus srs_verify(const char *dir, bool *passed);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SRSLAB_H */
