#ifndef URK_H
#define URK_H

/* C interface to the sketch/protocol library. All functions return a status
 * code; on any non-OK status, urk_last_error() describes the failure (the
 * message is thread-local and valid until the next call on that thread).
 * Buffers and strings handed out by the library are owned by the caller and
 * released with urk_buffer_free / urk_string_free. */

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum urk_status {
    URK_OK = 0,
    URK_EPARAM = 1,   /* violated parameter constraint (message names it) */
    URK_EFORMAT = 2,  /* malformed serialized input or file */
    URK_EREFUSAL = 3, /* exhaustive computation exceeds configured limits */
    URK_EINVAL = 4,   /* null pointer / out-of-range C argument */
    URK_EINTERNAL = 5 /* anything else */
} urk_status;

const char* urk_last_error(void);
void urk_buffer_free(uint8_t* p);
void urk_string_free(char* p);

/* --- one-way protocol ---------------------------------------------------- */

typedef struct urk_protocol urk_protocol;

/* Exhaustive-decoder protocol instance. k smallest differing indices;
 * recovery sparsity oversample*k. */
urk_status urk_protocol_create(uint64_t n, uint64_t k, uint64_t q, uint64_t oversample,
                               uint64_t slack, uint64_t seed, urk_protocol** out);
void urk_protocol_destroy(urk_protocol* p);

/* x: n bytes, each 0 or 1. Returns the serialized message (wire format) and
 * the exact payload bit count. */
urk_status urk_protocol_alice(const urk_protocol* p, const uint8_t* x, uint64_t n, uint8_t** msg,
                              uint64_t* msg_len, uint64_t* payload_bits);

/* msg: serialized message bytes. y: n bytes of 0/1. On success *out_count is
 * the number of indices written to out (at most cap, which must be >= k), or
 * -1 when the protocol answers Fail. */
urk_status urk_protocol_bob(const urk_protocol* p, const uint8_t* msg, uint64_t msg_len,
                            const uint8_t* y, uint64_t n, uint32_t* out, uint64_t cap,
                            int64_t* out_count);

/* --- turnstile sketch ------------------------------------------------------ */

typedef struct urk_sketch urk_sketch;

urk_status urk_sketch_create(uint64_t n, uint64_t k, uint64_t q, uint64_t oversample,
                             uint64_t slack, uint64_t seed, urk_sketch** out);
void urk_sketch_destroy(urk_sketch* s);
urk_status urk_sketch_update(urk_sketch* s, uint64_t index, int64_t delta);
/* dst += src; both must carry identical parameters (seed included). */
urk_status urk_sketch_merge(urk_sketch* dst, const urk_sketch* src);
urk_status urk_sketch_serialize(const urk_sketch* s, uint8_t** bytes, uint64_t* len);

/* Report min{k, ||z||_0} support indices (smallest-index rule), or sample
 * them uniformly without replacement. *out_count = -1 on Fail. */
urk_status urk_sketch_support_find(const urk_sketch* s, uint32_t* out, uint64_t cap,
                                   int64_t* out_count);
urk_status urk_sketch_l0_sample(const urk_sketch* s, uint64_t sample_seed, uint32_t* out,
                                uint64_t cap, int64_t* out_count);

/* --- encoding harness files ------------------------------------------------ */

/* handle: "oracle", "always-fail", "iid" (with delta_syn), or "sketch".
 * The encoded set S is the sorted first m elements of a permutation derived
 * from seed, so decode can re-derive it and report a verdict. The summary
 * line (caller-owned) lists the bit accounting; decode's ends ",ok" or
 * ",mismatch". */
urk_status urk_lb_encode_file(uint64_t n, uint64_t log2_inv_delta, const char* handle,
                              double delta_syn, uint64_t seed, const char* path, char** summary);
urk_status urk_lb_decode_file(uint64_t n, uint64_t log2_inv_delta, const char* handle,
                              double delta_syn, uint64_t seed, const char* path, char** summary);

/* --- experiments (CSV out) -------------------------------------------------- */

urk_status urk_exp_failure_rate(uint64_t n, uint64_t k, uint64_t q, uint64_t slack,
                                const uint64_t* oversamples, uint64_t oversample_count,
                                uint64_t trials, uint64_t seed, char** csv);
urk_status urk_exp_message_size(const uint64_t* ns, uint64_t n_count, uint64_t k, uint64_t q,
                                uint64_t oversample, uint64_t slack, uint64_t seed, char** csv);
urk_status urk_exp_uniformity(uint64_t n, uint64_t support_size, uint64_t q, uint64_t oversample,
                              uint64_t slack, uint64_t trials, uint64_t seed, char** csv);
urk_status urk_exp_savings(uint64_t n, uint64_t log2_inv_delta, const char* handle,
                           double delta_syn, uint64_t trials, uint64_t seed, char** csv);
urk_status urk_exp_adaptivity(uint64_t n, uint64_t t, uint64_t trials, uint64_t seed, char** csv);
urk_status urk_exp_pochhammer(uint64_t kmax, char** csv);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* URK_H */
