/* SPDX-License-Identifier: Apache-2.0 */

/* C interface to the revolver toolkit. Handles are opaque; every call that
 * can fail returns an rv_status and leaves a message for rv_last_error().
 * Matrices cross the boundary as row-major double arrays. */

#ifndef REVOLVER_H
#define REVOLVER_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(__GNUC__)
#define RV_API __attribute__((visibility("default")))
#else
#define RV_API
#endif

typedef enum rv_status {
    RV_OK = 0,
    RV_INVALID_ARGUMENT = 1, /* null pointer, bad size */
    RV_CAPACITY = 2,         /* data does not fit the slot vector */
    RV_PRECONDITION = 3,     /* shapes or parameters the algorithm cannot take */
    RV_ENGINE = 4,           /* incompatible ciphertexts or masks */
    RV_INGEST = 5,           /* malformed or missing input file */
    RV_VERIFICATION = 6,     /* results differ from the plaintext oracle */
    RV_INTERNAL = 7
} rv_status;

typedef struct rv_engine rv_engine;
typedef struct rv_ciphertext rv_ciphertext;

typedef struct rv_meter {
    uint64_t add, mul, cmul, rot, enc, max_depth;
} rv_meter;

/* Message for the last failing call on this thread; "" after success. */
RV_API const char *rv_last_error(void);
RV_API const char *rv_status_name(rv_status status);
RV_API const char *rv_version(void);

/* ---- engine ---- */

RV_API rv_status rv_engine_create(size_t slots, rv_engine **out);
/* JSON config: slots, logq, logn, delta, delta_c. */
RV_API rv_status rv_engine_create_from_config(const char *path, rv_engine **out);
RV_API void rv_engine_destroy(rv_engine *engine);
RV_API size_t rv_engine_slots(const rv_engine *engine);
RV_API rv_status rv_engine_meter(const rv_engine *engine, rv_meter *out);
RV_API void rv_engine_reset_meter(rv_engine *engine);

/* ---- primitives ---- */

RV_API rv_status rv_enc(rv_engine *engine, const double *values, size_t count, rv_ciphertext **out);
/* Copies min(count, slots) leading slots into out. */
RV_API rv_status rv_dec(const rv_engine *engine, const rv_ciphertext *ct, double *out, size_t count);
RV_API rv_status rv_add(rv_engine *engine, const rv_ciphertext *a, const rv_ciphertext *b, rv_ciphertext **out);
RV_API rv_status rv_mul(rv_engine *engine, const rv_ciphertext *a, const rv_ciphertext *b, rv_ciphertext **out);
/* Mask shorter than the slot count is zero-extended. */
RV_API rv_status rv_cmul(rv_engine *engine, const double *mask, size_t count, const rv_ciphertext *ct,
                         rv_ciphertext **out);
/* Left rotation: slot i of out is slot (i + amount) mod slots. */
RV_API rv_status rv_rot(rv_engine *engine, const rv_ciphertext *ct, long long amount, rv_ciphertext **out);
RV_API size_t rv_ct_depth(const rv_ciphertext *ct);
RV_API size_t rv_ct_size(const rv_ciphertext *ct);
RV_API void rv_ct_destroy(rv_ciphertext *ct);
RV_API rv_status rv_ct_save(const rv_ciphertext *ct, const char *path);
RV_API rv_status rv_ct_load(const char *path, rv_ciphertext **out);

/* ---- encrypted kernels on plaintext inputs (encrypt, evaluate, decrypt) ---- */

/* c (m x p) = a (m x n) * b (n x p), single-ciphertext revolver encoding. */
RV_API rv_status rv_matmul(rv_engine *engine, const double *a, size_t m, size_t n, const double *b, size_t p,
                           double *c);
/* Same product through the outer-product multi-ciphertext path. */
RV_API rv_status rv_matmul_outer(rv_engine *engine, const double *a, size_t m, size_t n, const double *b, size_t p,
                                 double *c);
/* out ((h-k+1) x (w-k+1)) = valid convolution of image (h x w) with kernel (k x k) plus bias. */
RV_API rv_status rv_conv(rv_engine *engine, const double *image, size_t h, size_t w, const double *kernel, size_t k,
                         double bias, double *out);

/* ---- jobs ---- */

typedef struct rv_job_config {
    size_t slots;
    int log_q, log_n, delta, delta_c;
    size_t stride; /* slots per image */
} rv_job_config;

RV_API void rv_job_config_default(rv_job_config *cfg);
/* JSON: engine keys plus "stride". */
RV_API rv_status rv_job_config_load(const char *path, rv_job_config *cfg);

typedef struct rv_batch_plan {
    size_t images_per_ct, batches, zero_fill;
} rv_batch_plan;

RV_API rv_status rv_plan_batches(const rv_job_config *cfg, size_t image_count, rv_batch_plan *out);

/* limit > 0 reads only the first `limit` images. */
RV_API rv_status rv_owner_encode(const rv_job_config *cfg, const char *images, const char *out_dir, size_t limit,
                                 size_t *batches_written);
RV_API rv_status rv_provider_encode(const rv_job_config *cfg, const char *weights_dir, const char *out,
                                    size_t *ciphertexts);

typedef struct rv_infer_options {
    const char *const *batches;
    size_t batch_count;
    const char *model;
    const char *predictions;
    const char *report; /* NULL or "" to skip */
    size_t parallel;
    int verify;
    const char *oracle_weights;
    double tolerance;
} rv_infer_options;

typedef struct rv_infer_summary {
    size_t records, batches, max_depth;
    int verified;
    double max_abs_error;
    size_t label_mismatches;
    rv_meter total;
} rv_infer_summary;

/* RV_VERIFICATION when verify is set and the oracle disagrees; outputs are written regardless. */
RV_API rv_status rv_cloud_infer(const rv_job_config *cfg, const rv_infer_options *opt, rv_infer_summary *out);

typedef struct rv_verify_summary {
    size_t records;
    double max_abs_error;
    size_t label_mismatches;
} rv_verify_summary;

RV_API rv_status rv_verify(const char *predictions, const char *weights_dir, const char *images, double tolerance,
                           rv_verify_summary *out);

/* Per-step cost table on the standard grid. *out is owned by the caller (rv_string_free).
 * *over counts rows whose measured cost exceeds the bound. */
RV_API rv_status rv_bench(int json, char **out, size_t *over);
RV_API void rv_string_free(char *s);

#ifdef __cplusplus
}
#endif

#endif /* REVOLVER_H */
