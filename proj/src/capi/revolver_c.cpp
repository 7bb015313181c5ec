// SPDX-License-Identifier: Apache-2.0

#include "revolver/revolver.h"

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <string>
#include <vector>

#include "revolver/bench.hpp"
#include "revolver/conv.hpp"
#include "revolver/engine.hpp"
#include "revolver/errors.hpp"
#include "revolver/jobs.hpp"
#include "revolver/matmul.hpp"
#include "revolver/multi_ct.hpp"
#include "revolver/serialize.hpp"

struct rv_engine {
    revolver::Engine engine;
    explicit rv_engine(revolver::EngineParams p) : engine(p) {}
};

struct rv_ciphertext {
    revolver::Ciphertext ct;
};

namespace {

thread_local std::string g_last_error;

struct BadArgument : std::exception {
    std::string msg;
    explicit BadArgument(std::string m) : msg(std::move(m)) {}
};

rv_status fail(rv_status s, const char *what) {
    g_last_error = what;
    return s;
}

template <class F>
rv_status guard(F &&f) {
    try {
        f();
        g_last_error.clear();
        return RV_OK;
    } catch (const BadArgument &e) {
        return fail(RV_INVALID_ARGUMENT, e.msg.c_str());
    } catch (const revolver::CapacityError &e) {
        return fail(RV_CAPACITY, e.what());
    } catch (const revolver::PreconditionError &e) {
        return fail(RV_PRECONDITION, e.what());
    } catch (const revolver::EngineError &e) {
        return fail(RV_ENGINE, e.what());
    } catch (const revolver::IngestError &e) {
        return fail(RV_INGEST, e.what());
    } catch (const revolver::VerificationError &e) {
        return fail(RV_VERIFICATION, e.what());
    } catch (const std::exception &e) {
        return fail(RV_INTERNAL, e.what());
    } catch (...) {
        return fail(RV_INTERNAL, "unknown error");
    }
}

template <class... P>
void need(const char *fn, const P *...ptrs) {
    if (((ptrs == nullptr) || ...)) throw BadArgument(std::string(fn) + ": null argument");
}

revolver::Matrix to_matrix(const double *v, std::size_t r, std::size_t c) {
    revolver::Matrix m(r, c);
    if (r * c != 0) std::memcpy(m.data().data(), v, r * c * sizeof(double));
    return m;
}

void from_matrix(const revolver::Matrix &m, double *out) {
    std::memcpy(out, m.data().data(), m.data().size() * sizeof(double));
}

rv_meter to_c(const revolver::OpMeter &m) {
    return {m.add_count, m.mul_count, m.cmul_count, m.rot_count, m.enc_count, m.max_depth};
}

revolver::JobConfig from_c(const rv_job_config &c) {
    revolver::JobConfig cfg;
    cfg.params.slots = c.slots;
    cfg.params.log_q = c.log_q;
    cfg.params.log_n = c.log_n;
    cfg.params.delta = c.delta;
    cfg.params.delta_c = c.delta_c;
    cfg.stride = c.stride;
    return cfg;
}

rv_job_config to_c(const revolver::JobConfig &cfg) {
    return {cfg.params.slots, cfg.params.log_q, cfg.params.log_n, cfg.params.delta, cfg.params.delta_c, cfg.stride};
}

rv_ciphertext *wrap(revolver::Ciphertext ct) { return new rv_ciphertext{std::move(ct)}; }

}  // namespace

extern "C" {

const char *rv_last_error(void) { return g_last_error.c_str(); }

const char *rv_status_name(rv_status s) {
    switch (s) {
        case RV_OK: return "ok";
        case RV_INVALID_ARGUMENT: return "invalid argument";
        case RV_CAPACITY: return "capacity";
        case RV_PRECONDITION: return "precondition";
        case RV_ENGINE: return "engine";
        case RV_INGEST: return "ingest";
        case RV_VERIFICATION: return "verification";
        case RV_INTERNAL: return "internal";
    }
    return "unknown";
}

const char *rv_version(void) { return "0.1.0"; }

rv_status rv_engine_create(size_t slots, rv_engine **out) {
    return guard([&] {
        need("rv_engine_create", out);
        revolver::EngineParams p;
        p.slots = slots;
        p.validate();
        *out = new rv_engine(p);
    });
}

rv_status rv_engine_create_from_config(const char *path, rv_engine **out) {
    return guard([&] {
        need("rv_engine_create_from_config", path, out);
        const auto p = revolver::EngineParams::load(path);
        p.validate();
        *out = new rv_engine(p);
    });
}

void rv_engine_destroy(rv_engine *e) { delete e; }

size_t rv_engine_slots(const rv_engine *e) { return e ? e->engine.slots() : 0; }

rv_status rv_engine_meter(const rv_engine *e, rv_meter *out) {
    return guard([&] {
        need("rv_engine_meter", e, out);
        *out = to_c(e->engine.meter_snapshot());
    });
}

void rv_engine_reset_meter(rv_engine *e) {
    if (e) e->engine.reset_meter();
}

rv_status rv_enc(rv_engine *e, const double *values, size_t count, rv_ciphertext **out) {
    return guard([&] {
        need("rv_enc", e, out);
        if (count && !values) throw BadArgument("rv_enc: null values");
        *out = wrap(e->engine.enc(std::span<const double>(values, count)));
    });
}

rv_status rv_dec(const rv_engine *e, const rv_ciphertext *ct, double *out, size_t count) {
    return guard([&] {
        need("rv_dec", e, ct, out);
        const auto v = e->engine.dec(ct->ct);
        std::memcpy(out, v.data(), std::min(count, v.size()) * sizeof(double));
    });
}

rv_status rv_add(rv_engine *e, const rv_ciphertext *a, const rv_ciphertext *b, rv_ciphertext **out) {
    return guard([&] {
        need("rv_add", e, a, b, out);
        *out = wrap(e->engine.add(a->ct, b->ct));
    });
}

rv_status rv_mul(rv_engine *e, const rv_ciphertext *a, const rv_ciphertext *b, rv_ciphertext **out) {
    return guard([&] {
        need("rv_mul", e, a, b, out);
        *out = wrap(e->engine.mul(a->ct, b->ct));
    });
}

rv_status rv_cmul(rv_engine *e, const double *mask, size_t count, const rv_ciphertext *ct, rv_ciphertext **out) {
    return guard([&] {
        need("rv_cmul", e, ct, out);
        if (count && !mask) throw BadArgument("rv_cmul: null mask");
        if (count > e->engine.slots()) throw revolver::CapacityError("rv_cmul: mask longer than the slot count");
        std::vector<double> m(e->engine.slots(), 0.0);
        std::copy(mask, mask + count, m.begin());
        *out = wrap(e->engine.cmul(revolver::PlainMask(std::move(m)), ct->ct));
    });
}

rv_status rv_rot(rv_engine *e, const rv_ciphertext *ct, long long amount, rv_ciphertext **out) {
    return guard([&] {
        need("rv_rot", e, ct, out);
        *out = wrap(e->engine.rot(ct->ct, amount));
    });
}

size_t rv_ct_depth(const rv_ciphertext *ct) { return ct ? ct->ct.depth() : 0; }
size_t rv_ct_size(const rv_ciphertext *ct) { return ct ? ct->ct.size() : 0; }
void rv_ct_destroy(rv_ciphertext *ct) { delete ct; }

rv_status rv_ct_save(const rv_ciphertext *ct, const char *path) {
    return guard([&] {
        need("rv_ct_save", ct, path);
        revolver::save_ciphertext(path, ct->ct);
    });
}

rv_status rv_ct_load(const char *path, rv_ciphertext **out) {
    return guard([&] {
        need("rv_ct_load", path, out);
        *out = wrap(revolver::load_ciphertext(path));
    });
}

rv_status rv_matmul(rv_engine *e, const double *a, size_t m, size_t n, const double *b, size_t p, double *c) {
    return guard([&] {
        need("rv_matmul", e, a, b, c);
        from_matrix(revolver::matmul_encrypted(e->engine, to_matrix(a, m, n), to_matrix(b, n, p)), c);
    });
}

rv_status rv_matmul_outer(rv_engine *e, const double *a, size_t m, size_t n, const double *b, size_t p, double *c) {
    return guard([&] {
        need("rv_matmul_outer", e, a, b, c);
        const auto l = revolver::encode_left(e->engine, to_matrix(a, m, n), p);
        const auto r = revolver::encode_right(e->engine, to_matrix(b, n, p), m);
        from_matrix(revolver::decode_matrix(e->engine, revolver::matmul_outer(e->engine, l, r)), c);
    });
}

rv_status rv_conv(rv_engine *e, const double *image, size_t h, size_t w, const double *kernel, size_t k, double bias,
                  double *out) {
    return guard([&] {
        need("rv_conv", e, image, kernel, out);
        from_matrix(revolver::conv_encrypted(e->engine, to_matrix(image, h, w),
                                             revolver::Kernel{to_matrix(kernel, k, k), bias}),
                    out);
    });
}

void rv_job_config_default(rv_job_config *cfg) {
    if (cfg) *cfg = to_c(revolver::JobConfig{});
}

rv_status rv_job_config_load(const char *path, rv_job_config *cfg) {
    return guard([&] {
        need("rv_job_config_load", path, cfg);
        *cfg = to_c(revolver::JobConfig::load(path));
    });
}

rv_status rv_plan_batches(const rv_job_config *cfg, size_t image_count, rv_batch_plan *out) {
    return guard([&] {
        need("rv_plan_batches", cfg, out);
        const auto plan = revolver::BatchPlan::make(cfg->slots, image_count, cfg->stride);
        *out = {plan.images_per_ct, plan.batches, plan.zero_fill};
    });
}

rv_status rv_owner_encode(const rv_job_config *cfg, const char *images, const char *out_dir, size_t limit,
                          size_t *batches_written) {
    return guard([&] {
        need("rv_owner_encode", cfg, images, out_dir);
        const auto files = revolver::owner_encode(images, out_dir, from_c(*cfg), limit);
        if (batches_written) *batches_written = files.size();
    });
}

rv_status rv_provider_encode(const rv_job_config *cfg, const char *weights_dir, const char *out, size_t *ciphertexts) {
    return guard([&] {
        need("rv_provider_encode", cfg, weights_dir, out);
        const std::size_t n = revolver::provider_encode_job(weights_dir, out, from_c(*cfg));
        if (ciphertexts) *ciphertexts = n;
    });
}

rv_status rv_cloud_infer(const rv_job_config *cfg, const rv_infer_options *opt, rv_infer_summary *out) {
    return guard([&] {
        need("rv_cloud_infer", cfg, opt, opt->model, opt->predictions);
        if (opt->batch_count && !opt->batches) throw BadArgument("rv_cloud_infer: null batch list");
        revolver::InferOptions o;
        for (size_t i = 0; i < opt->batch_count; ++i) {
            need("rv_cloud_infer", opt->batches[i]);
            o.batches.emplace_back(opt->batches[i]);
        }
        o.model = opt->model;
        o.predictions = opt->predictions;
        if (opt->report) o.report = opt->report;
        o.parallel = opt->parallel;
        o.verify = opt->verify != 0;
        if (opt->oracle_weights) o.oracle_weights = opt->oracle_weights;
        if (opt->tolerance > 0) o.tolerance = opt->tolerance;
        const auto s = revolver::cloud_infer(o, from_c(*cfg));
        if (out)
            *out = {s.records, s.batches, s.max_depth, s.verified ? 1 : 0, s.max_abs_error, s.label_mismatches,
                    to_c(s.total)};
    });
}

rv_status rv_verify(const char *predictions, const char *weights_dir, const char *images, double tolerance,
                    rv_verify_summary *out) {
    return guard([&] {
        need("rv_verify", predictions, weights_dir, images);
        const auto s = revolver::verify_predictions(predictions, weights_dir, images, tolerance > 0 ? tolerance : 1e-6);
        if (out) *out = {s.records, s.max_abs_error, s.label_mismatches};
    });
}

rv_status rv_bench(int json, char **out, size_t *over) {
    return guard([&] {
        need("rv_bench", out);
        const auto rows = revolver::run_bench(revolver::BenchGrid::standard());
        const std::string text = json ? revolver::cost_table_json(rows) : revolver::format_cost_table(rows);
        if (over) *over = static_cast<size_t>(std::count_if(rows.begin(), rows.end(), [](const auto &r) { return r.exceeds; }));
        *out = static_cast<char *>(std::malloc(text.size() + 1));
        if (!*out) throw std::bad_alloc();
        std::memcpy(*out, text.c_str(), text.size() + 1);
    });
}

void rv_string_free(char *s) { std::free(s); }

}  // extern "C"
