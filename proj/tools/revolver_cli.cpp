// SPDX-License-Identifier: Apache-2.0

// revolver: command line front end over the C API.
// Exit codes: 0 success, 1 bad input or usage, 2 verification mismatch.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "revolver/revolver.h"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitMismatch = 2;

int report(rv_status s) {
    if (s == RV_OK) return kExitOk;
    std::cerr << "error (" << rv_status_name(s) << "): " << rv_last_error() << '\n';
    return s == RV_VERIFICATION ? kExitMismatch : kExitInput;
}

struct Common {
    std::string config;
    std::size_t slots = 0;
    std::size_t stride = 0;

    void attach(CLI::App *cmd) {
        cmd->add_option("--config", config, "JSON engine config (slots, logq, logn, delta, delta_c, stride)")
            ->check(CLI::ExistingFile);
        cmd->add_option("--slots", slots, "slot count; overrides the config");
        cmd->add_option("--stride", stride, "slots per image; overrides the config");
    }

    rv_status resolve(rv_job_config &cfg) const {
        rv_job_config_default(&cfg);
        if (!config.empty()) {
            const rv_status s = rv_job_config_load(config.c_str(), &cfg);
            if (s != RV_OK) return s;
        }
        if (slots) cfg.slots = slots;
        if (stride) cfg.stride = stride;
        rv_batch_plan plan;
        return rv_plan_batches(&cfg, 0, &plan);
    }
};

// Directories expand to their *.ct files in name order.
std::vector<std::string> expand_batches(const std::vector<std::string> &inputs) {
    std::vector<std::string> out;
    for (const auto &in : inputs) {
        if (!fs::is_directory(in)) {
            out.push_back(in);
            continue;
        }
        std::vector<std::string> found;
        for (const auto &entry : fs::directory_iterator(in))
            if (entry.is_regular_file() && entry.path().extension() == ".ct") found.push_back(entry.path().string());
        std::sort(found.begin(), found.end());
        out.insert(out.end(), found.begin(), found.end());
    }
    return out;
}

void print_meter(const rv_meter &m) {
    std::printf("ops: add %llu  mul %llu  cmul %llu  rot %llu  enc %llu  max depth %llu\n",
                static_cast<unsigned long long>(m.add), static_cast<unsigned long long>(m.mul),
                static_cast<unsigned long long>(m.cmul), static_cast<unsigned long long>(m.rot),
                static_cast<unsigned long long>(m.enc), static_cast<unsigned long long>(m.max_depth));
}

}  // namespace

int main(int argc, char **argv) {
    CLI::App app{"Packed-slot homomorphic evaluation toolkit (simulated CKKS backend)"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(rv_version()));

    // owner-encode
    Common owner_common;
    std::string owner_images, owner_out;
    std::size_t owner_limit = 0;
    auto *owner = app.add_subcommand("owner-encode", "pack IDX images into simulated batch ciphertexts");
    owner->add_option("--images", owner_images, "IDX image file (u8, 28x28)")->required();
    owner->add_option("--out", owner_out, "output directory")->required();
    owner->add_option("--limit", owner_limit, "read at most N images");
    owner_common.attach(owner);

    // provider-encode
    Common provider_common;
    std::string provider_weights, provider_out;
    auto *provider = app.add_subcommand("provider-encode", "encode weight CSVs into a model bundle");
    provider->add_option("--weights", provider_weights, "directory of weight CSV files")->required();
    provider->add_option("--out", provider_out, "model bundle path")->required();
    provider_common.attach(provider);

    // cloud-infer
    Common cloud_common;
    std::vector<std::string> cloud_batches;
    std::string cloud_model, cloud_predictions, cloud_report, cloud_weights;
    std::size_t cloud_parallel = 1;
    bool cloud_verify = false;
    double cloud_tol = 1e-6;
    auto *cloud = app.add_subcommand("cloud-infer", "run the encrypted CNN over batch files");
    cloud->add_option("--batches", cloud_batches, "batch files or directories")->required();
    cloud->add_option("--model", cloud_model, "model bundle")->required();
    cloud->add_option("--predictions", cloud_predictions, "JSONL output")->required();
    cloud->add_option("--report", cloud_report, "JSON meter report");
    cloud->add_option("--parallel", cloud_parallel, "worker threads")->check(CLI::PositiveNumber);
    cloud->add_flag("--verify", cloud_verify, "check scores against the plaintext oracle");
    cloud->add_option("--weights", cloud_weights, "plain weight CSVs for --verify");
    cloud->add_option("--tolerance", cloud_tol, "max abs score error for --verify");
    cloud_common.attach(cloud);

    // verify
    std::string verify_predictions, verify_weights, verify_images;
    double verify_tol = 1e-6;
    auto *verify = app.add_subcommand("verify", "recompute predictions with the plaintext oracle");
    verify->add_option("--predictions", verify_predictions, "JSONL predictions")->required();
    verify->add_option("--weights", verify_weights, "plain weight CSVs")->required();
    verify->add_option("--images", verify_images, "IDX image file")->required();
    verify->add_option("--tolerance", verify_tol, "max abs score error");

    // bench
    bool bench_json = false;
    std::string bench_out;
    auto *bench = app.add_subcommand("bench", "per-step operation counts against published costs");
    bench->add_flag("--json", bench_json, "JSON instead of a text table");
    bench->add_option("--out", bench_out, "write to a file instead of stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success &e) {
        return app.exit(e);
    } catch (const CLI::ParseError &e) {
        app.exit(e);
        return kExitInput;
    }

    rv_job_config cfg;
    if (*owner) {
        if (rv_status s = owner_common.resolve(cfg)) return report(s);
        std::size_t written = 0;
        if (rv_status s = rv_owner_encode(&cfg, owner_images.c_str(), owner_out.c_str(), owner_limit, &written))
            return report(s);
        std::printf("wrote %zu batch file(s) to %s (SIMULATED)\n", written, owner_out.c_str());
        return kExitOk;
    }
    if (*provider) {
        if (rv_status s = provider_common.resolve(cfg)) return report(s);
        std::size_t cts = 0;
        if (rv_status s = rv_provider_encode(&cfg, provider_weights.c_str(), provider_out.c_str(), &cts))
            return report(s);
        std::printf("wrote model bundle %s with %zu ciphertexts (SIMULATED)\n", provider_out.c_str(), cts);
        return kExitOk;
    }
    if (*cloud) {
        if (rv_status s = cloud_common.resolve(cfg)) return report(s);
        if (cloud_verify && cloud_weights.empty()) {
            std::cerr << "error: --verify needs --weights\n";
            return kExitInput;
        }
        const auto files = expand_batches(cloud_batches);
        if (files.empty()) {
            std::cerr << "error: no batch files found\n";
            return kExitInput;
        }
        std::vector<const char *> ptrs;
        for (const auto &f : files) ptrs.push_back(f.c_str());
        rv_infer_options opt{};
        opt.batches = ptrs.data();
        opt.batch_count = ptrs.size();
        opt.model = cloud_model.c_str();
        opt.predictions = cloud_predictions.c_str();
        opt.report = cloud_report.empty() ? nullptr : cloud_report.c_str();
        opt.parallel = cloud_parallel;
        opt.verify = cloud_verify;
        opt.oracle_weights = cloud_weights.empty() ? nullptr : cloud_weights.c_str();
        opt.tolerance = cloud_tol;
        rv_infer_summary sum{};
        if (rv_status s = rv_cloud_infer(&cfg, &opt, &sum)) return report(s);
        std::printf("%zu predictions from %zu batch(es) -> %s\n", sum.records, sum.batches, cloud_predictions.c_str());
        print_meter(sum.total);
        if (cloud_verify)
            std::printf("verified against oracle: max abs error %.3g, %zu label mismatches\n", sum.max_abs_error,
                        sum.label_mismatches);
        return kExitOk;
    }
    if (*verify) {
        rv_verify_summary sum{};
        if (rv_status s = rv_verify(verify_predictions.c_str(), verify_weights.c_str(), verify_images.c_str(),
                                    verify_tol, &sum))
            return report(s);
        std::printf("%zu records match the oracle (max abs error %.3g)\n", sum.records, sum.max_abs_error);
        return kExitOk;
    }
    if (*bench) {
        char *text = nullptr;
        std::size_t over = 0;
        if (rv_status s = rv_bench(bench_json ? 1 : 0, &text, &over)) return report(s);
        if (bench_out.empty()) {
            std::fputs(text, stdout);
        } else {
            std::ofstream(bench_out) << text;
        }
        rv_string_free(text);
        if (over) {
            std::cerr << over << " row(s) exceed their bound\n";
            return kExitMismatch;
        }
        return kExitOk;
    }
    return kExitInput;
}
