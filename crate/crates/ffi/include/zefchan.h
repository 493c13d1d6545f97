#ifndef ZEFCHAN_H
#define ZEFCHAN_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stddef.h>
#include <stdint.h>

/**
 * Disprover policy: first triple in `(y_c, x_c, x_e)` order.
 */
#define ZEF_POLICY_FIRST 0

/**
 * Disprover policy: largest `W(y_c|x_c)`.
 */
#define ZEF_POLICY_MAX_PROB 1

typedef enum ZefStatus {
  ZEF_STATUS_OK = 0,
  ZEF_STATUS_NULL_POINTER = 1,
  ZEF_STATUS_INVALID_UTF8 = 2,
  ZEF_STATUS_PARSE = 3,
  ZEF_STATUS_CHANNEL = 4,
  ZEF_STATUS_CODE = 5,
  ZEF_STATUS_CAPACITY = 6,
  ZEF_STATUS_PROTOCOL = 7,
  ZEF_STATUS_SIMULATION = 8,
  ZEF_STATUS_INVALID_ARGUMENT = 9,
  ZEF_STATUS_PANIC = 10,
} ZefStatus;

typedef struct ZefChannel ZefChannel;

typedef struct ZefCodebook ZefCodebook;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until the
 * next call into this library from the same thread.
 */
const char *zef_last_error_message(void);

/**
 * Release a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void zef_string_free(char *s);

/**
 * Parse a channel file (`{"name","inputs","outputs","rows"}`).
 *
 * # Safety
 * `json` is a NUL-terminated string; `out` is valid for writes.
 */
enum ZefStatus zef_channel_from_json(const char *json, struct ZefChannel **out);

/**
 * # Safety
 * `ch` is null or a handle from [`zef_channel_from_json`] not yet freed.
 */
void zef_channel_free(struct ZefChannel *ch);

/**
 * # Safety
 * `ch` is a live channel handle; `inputs` and `outputs` are valid for writes.
 */
enum ZefStatus zef_channel_dims(const struct ZefChannel *ch, uintptr_t *inputs, uintptr_t *outputs);

/**
 * Capacity in bits, to within `tol`.
 *
 * # Safety
 * `ch` is a live channel handle; `bits` is valid for writes.
 */
enum ZefStatus zef_channel_capacity(const struct ZefChannel *ch, double tol, double *bits);

/**
 * Number of disprover triples of the channel.
 *
 * # Safety
 * `ch` is a live channel handle; `count` is valid for writes.
 */
enum ZefStatus zef_channel_disprover_count(const struct ZefChannel *ch, uintptr_t *count);

/**
 * Channel report as JSON under the capacity-achieving input.
 *
 * # Safety
 * `ch` is a live channel handle; `out` is valid for writes.
 */
enum ZefStatus zef_channel_report_json(const struct ZefChannel *ch, char **out);

/**
 * Parse a codebook file (`{"n","messages","codewords"}`).
 *
 * # Safety
 * `json` is a NUL-terminated string; `out` is valid for writes.
 */
enum ZefStatus zef_codebook_from_json(const char *json, struct ZefCodebook **out);

/**
 * # Safety
 * `code` is null or a handle from [`zef_codebook_from_json`] not yet freed.
 */
void zef_codebook_free(struct ZefCodebook *code);

/**
 * Exact erasure probability of message `m`.
 *
 * # Safety
 * `code` and `ch` are live handles; `lambda` is valid for writes.
 */
enum ZefStatus zef_codebook_erasure_prob(const struct ZefCodebook *code,
                                         const struct ZefChannel *ch,
                                         uintptr_t m,
                                         double *lambda);

/**
 * Zero-undetected-error decode of `len` outputs. Writes the message index,
 * or -1 for an erasure.
 *
 * # Safety
 * `y` points to `len` readable values; `message` is valid for writes.
 */
enum ZefStatus zef_codebook_decode(const struct ZefCodebook *code,
                                   const struct ZefChannel *ch,
                                   const uintptr_t *y,
                                   uintptr_t len,
                                   int64_t *message);

/**
 * Monte Carlo run; writes the statistics as JSON. A null `backward` selects
 * the noiseless-feedback scheme. `gamma = 0` means the automatic length.
 *
 * # Safety
 * `forward` and `code` are live handles, `backward` is null or live; `out`
 * is valid for writes.
 */
enum ZefStatus zef_simulate_json(const struct ZefChannel *forward,
                                 const struct ZefChannel *backward,
                                 const struct ZefCodebook *code,
                                 uintptr_t gamma,
                                 uint32_t policy,
                                 uintptr_t messages,
                                 uint64_t seed,
                                 char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ZEFCHAN_H */
