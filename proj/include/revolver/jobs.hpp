// SPDX-License-Identifier: Apache-2.0

// The three deployment roles as file-to-file jobs, plus verification.
// Data owner: IDX images -> packed batch files. Model provider: weight CSVs
// -> encoded model bundle. Cloud: batches + bundle -> predictions and a
// meter report.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "revolver/cnn.hpp"
#include "revolver/engine.hpp"

namespace revolver {

struct JobConfig {
    EngineParams params;
    std::size_t stride = 1024;  // slots per image

    /// JSON object: engine keys (see EngineParams::load) plus "stride".
    static JobConfig load(const std::filesystem::path &path);
    /// Throws PreconditionError when the batch layout cannot work with these params.
    void validate() const;
};

/// Writes batch_NNNNN.SIMULATED.ct files; returns their paths in order.
/// `limit` > 0 reads only the first `limit` images.
std::vector<std::filesystem::path> owner_encode(const std::filesystem::path &images,
                                                const std::filesystem::path &out_dir, const JobConfig &cfg,
                                                std::size_t limit = 0);

/// Writes the model bundle; returns the number of ciphertexts in it.
std::size_t provider_encode_job(const std::filesystem::path &weights_dir, const std::filesystem::path &out,
                                const JobConfig &cfg);

struct InferOptions {
    std::vector<std::filesystem::path> batches;  // processed in the given order
    std::filesystem::path model;
    std::filesystem::path predictions;  // JSONL, one record per real image
    std::filesystem::path report;       // JSON meter report; empty to skip
    std::size_t parallel = 1;           // worker threads, one engine each
    bool verify = false;
    std::filesystem::path oracle_weights;  // plain weights, required by verify
    double tolerance = 1e-6;
};

struct InferSummary {
    std::size_t records = 0;
    std::size_t batches = 0;
    OpMeter total;
    ForwardTrace stages;  // summed over batches
    std::size_t max_depth = 0;
    bool verified = false;
    double max_abs_error = 0.0;
    std::size_t label_mismatches = 0;
};

/// Throws VerificationError (after writing the outputs) when verify is set
/// and scores disagree with the oracle beyond the tolerance, or labels differ.
InferSummary cloud_infer(const InferOptions &opt, const JobConfig &cfg);

struct VerifySummary {
    std::size_t records = 0;
    double max_abs_error = 0.0;
    std::size_t label_mismatches = 0;
};

/// Recomputes every prediction record with the plaintext oracle. Throws
/// VerificationError on any mismatch.
VerifySummary verify_predictions(const std::filesystem::path &predictions, const std::filesystem::path &weights_dir,
                                 const std::filesystem::path &images, double tolerance = 1e-6);

/// Argmax labels agree when the oracle's top-two gap exceeds this guard.
inline constexpr double kLabelGapGuard = 1e-5;

}  // namespace revolver
