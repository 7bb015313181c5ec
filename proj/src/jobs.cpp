// SPDX-License-Identifier: Apache-2.0

#include "revolver/jobs.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <json.hpp>

#include "revolver/errors.hpp"
#include "revolver/mnist.hpp"
#include "revolver/model.hpp"
#include "revolver/oracle.hpp"
#include "revolver/serialize.hpp"

namespace revolver {

namespace {

nlohmann::json meter_json(const OpMeter &m) {
    return {{"add", m.add_count}, {"mul", m.mul_count}, {"cmul", m.cmul_count},
            {"rot", m.rot_count}, {"enc", m.enc_count}, {"max_depth", m.max_depth}};
}

void merge_trace(ForwardTrace &into, const ForwardTrace &t) {
    into.conv.merge(t.conv);
    into.act1.merge(t.act1);
    into.flatten.merge(t.flatten);
    into.fc1.merge(t.fc1);
    into.act2.merge(t.act2);
    into.fc2.merge(t.fc2);
}

double top_two_gap(std::span<const double> row) {
    double best = -INFINITY, second = -INFINITY;
    for (double x : row) {
        if (x > best) {
            second = best;
            best = x;
        } else if (x > second) {
            second = x;
        }
    }
    return best - second;
}

struct LoadedBatch {
    Ciphertext ct;
    std::size_t count = 0;
};

LoadedBatch load_batch(const std::filesystem::path &path, const JobConfig &cfg, const EncodedModel &model) {
    LoadedBatch b;
    try {
        b.ct = load_ciphertext(path);
    } catch (const IngestError &e) {
        throw IngestError(std::string("batch ") + e.what());
    }
    const Layout &l = b.ct.layout();
    if (b.ct.size() != cfg.params.slots)
        throw PreconditionError("batch " + path.string() + ": " + std::to_string(b.ct.size()) +
                                " slots, engine has " + std::to_string(cfg.params.slots));
    if (l.kind != LayoutKind::dataset || l.cols != model.stride || l.h != kImageSide || l.w != kImageSide ||
        l.rows == 0 || l.rows > model.images_per_ct)
        throw PreconditionError("batch " + path.string() + ": layout does not match the model");
    b.count = l.rows;
    return b;
}

}  // namespace

JobConfig JobConfig::load(const std::filesystem::path &path) {
    JobConfig cfg;
    cfg.params = EngineParams::load(path);
    std::ifstream in(path);
    try {
        const auto j = nlohmann::json::parse(in);
        if (j.contains("stride")) cfg.stride = j.at("stride").get<std::size_t>();
    } catch (const nlohmann::json::exception &e) {
        throw IngestError(path.string() + ": " + e.what());
    }
    cfg.validate();
    return cfg;
}

void JobConfig::validate() const {
    params.validate();
    BatchPlan::make(params.slots, 0, stride);
    if (stride < kImageSide * kImageSide)
        throw PreconditionError("config: stride " + std::to_string(stride) + " smaller than a 28x28 image");
}

std::vector<std::filesystem::path> owner_encode(const std::filesystem::path &images,
                                                const std::filesystem::path &out_dir, const JobConfig &cfg,
                                                std::size_t limit) {
    cfg.validate();
    const std::vector<Matrix> data = load_idx_images(images, limit);
    if (data.empty()) throw PreconditionError(images.string() + ": no images");
    if (data[0].rows() != kImageSide || data[0].cols() != kImageSide)
        throw IngestError(images.string() + ": images must be 28x28");
    const BatchPlan plan = BatchPlan::make(cfg.params.slots, data.size(), cfg.stride);

    Engine engine(cfg.params);
    std::filesystem::create_directories(out_dir);
    std::vector<std::filesystem::path> written;
    for (std::size_t b = 0; b < plan.batches; ++b) {
        const std::size_t first = b * plan.images_per_ct;
        const std::size_t count = std::min(plan.images_per_ct, data.size() - first);
        const Ciphertext ct =
            pack_batch(engine, std::span<const Matrix>(data).subspan(first, count), cfg.stride);
        char name[64];
        std::snprintf(name, sizeof name, "batch_%05zu.SIMULATED.ct", b);
        written.push_back(out_dir / name);
        save_ciphertext(written.back(), ct);
    }
    return written;
}

std::size_t provider_encode_job(const std::filesystem::path &weights_dir, const std::filesystem::path &out,
                                const JobConfig &cfg) {
    cfg.validate();
    const ModelWeights w = load_weights_csv(weights_dir);
    Engine engine(cfg.params);
    const EncodedModel model = provider_encode(engine, w, cfg.stride);
    if (out.has_parent_path()) std::filesystem::create_directories(out.parent_path());
    save_model(out, model, cfg.params.slots);
    return model.ciphertext_count();
}

InferSummary cloud_infer(const InferOptions &opt, const JobConfig &cfg) {
    cfg.validate();
    if (opt.batches.empty()) throw PreconditionError("cloud-infer: no batch files");
    if (opt.verify && opt.oracle_weights.empty())
        throw PreconditionError("cloud-infer: verification needs the plain oracle weights");
    const EncodedModel model = load_model(opt.model, cfg.params.slots);
    if (model.stride != cfg.stride)
        throw PreconditionError("cloud-infer: model stride " + std::to_string(model.stride) + " differs from config " +
                                std::to_string(cfg.stride));

    std::vector<LoadedBatch> batches;
    for (const auto &p : opt.batches) batches.push_back(load_batch(p, cfg, model));

    const std::size_t workers = std::clamp<std::size_t>(opt.parallel, 1, batches.size());
    std::vector<Matrix> scores(batches.size());
    std::vector<ForwardTrace> traces(batches.size());
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        Engine engine(cfg.params);
        for (std::size_t b = next++; b < batches.size(); b = next++) {
            const PackedMatrix out = forward(engine, batches[b].ct, model, &traces[b], workers == 1);
            scores[b] = decode_scores(engine, out, batches[b].count);
        }
        return engine.meter_snapshot();
    };
    InferSummary summary;
    std::vector<std::future<OpMeter>> jobs;
    for (std::size_t i = 0; i < workers; ++i) jobs.push_back(std::async(std::launch::async, work));
    for (auto &j : jobs) summary.total.merge(j.get());
    for (const ForwardTrace &t : traces) merge_trace(summary.stages, t);
    summary.batches = batches.size();
    summary.max_depth = summary.total.max_depth;

    if (opt.predictions.has_parent_path()) std::filesystem::create_directories(opt.predictions.parent_path());
    std::ofstream pred(opt.predictions);
    if (!pred) throw IngestError(opt.predictions.string() + ": cannot write");
    std::size_t index = 0;
    for (const Matrix &s : scores) {
        const auto labels = argmax_decide(s);
        for (std::size_t t = 0; t < s.rows(); ++t, ++index) {
            const auto row = s.row(t);
            pred << nlohmann::json{{"index", index},
                                   {"label", labels[t]},
                                   {"scores", std::vector<double>(row.begin(), row.end())}}
                        .dump()
                 << '\n';
        }
    }
    summary.records = index;

    if (opt.verify) {
        const ModelWeights w = load_weights_csv(opt.oracle_weights);
        Engine reader(cfg.params);
        for (std::size_t b = 0; b < batches.size(); ++b) {
            const auto images = unpack_batch(reader, batches[b].ct, batches[b].count, cfg.stride);
            const Matrix expect = oracle_forward(w, images);
            const auto got_labels = argmax_decide(scores[b]);
            const auto want_labels = argmax_rows(expect);
            for (std::size_t t = 0; t < expect.rows(); ++t) {
                for (std::size_t c = 0; c < kClasses; ++c)
                    summary.max_abs_error = std::max(summary.max_abs_error, std::abs(expect(t, c) - scores[b](t, c)));
                if (got_labels[t] != want_labels[t] && top_two_gap(expect.row(t)) > kLabelGapGuard)
                    ++summary.label_mismatches;
            }
        }
        summary.verified = summary.max_abs_error <= opt.tolerance && summary.label_mismatches == 0;
    }

    if (!opt.report.empty()) {
        nlohmann::json stages = {{"conv", meter_json(summary.stages.conv)},   {"act1", meter_json(summary.stages.act1)},
                                 {"flatten", meter_json(summary.stages.flatten)}, {"fc1", meter_json(summary.stages.fc1)},
                                 {"act2", meter_json(summary.stages.act2)},   {"fc2", meter_json(summary.stages.fc2)}};
        nlohmann::json report = {{"simulated", true},
                                 {"slots", cfg.params.slots},
                                 {"batches", summary.batches},
                                 {"records", summary.records},
                                 {"workers", workers},
                                 {"model_ciphertexts", model.ciphertext_count()},
                                 {"total", meter_json(summary.total)},
                                 {"stages", stages},
                                 {"max_depth", summary.max_depth},
                                 {"pipeline_depth", kPipelineDepth}};
        if (opt.verify)
            report["verification"] = {{"passed", summary.verified},
                                      {"max_abs_error", summary.max_abs_error},
                                      {"label_mismatches", summary.label_mismatches},
                                      {"tolerance", opt.tolerance}};
        if (opt.report.has_parent_path()) std::filesystem::create_directories(opt.report.parent_path());
        std::ofstream out(opt.report);
        if (!out) throw IngestError(opt.report.string() + ": cannot write");
        out << report.dump(2) << '\n';
    }

    if (opt.verify && !summary.verified)
        throw VerificationError("cloud-infer: scores differ from the oracle (max abs error " +
                                std::to_string(summary.max_abs_error) + ", " +
                                std::to_string(summary.label_mismatches) + " label mismatches)");
    return summary;
}

VerifySummary verify_predictions(const std::filesystem::path &predictions, const std::filesystem::path &weights_dir,
                                 const std::filesystem::path &images, double tolerance) {
    const ModelWeights w = load_weights_csv(weights_dir);
    const std::vector<Matrix> data = load_idx_images(images);
    std::ifstream in(predictions);
    if (!in) throw IngestError(predictions.string() + ": cannot open");

    VerifySummary summary;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::size_t index = 0, label = 0;
        std::vector<double> got;
        try {
            const auto j = nlohmann::json::parse(line);
            index = j.at("index").get<std::size_t>();
            label = j.at("label").get<std::size_t>();
            got = j.at("scores").get<std::vector<double>>();
        } catch (const nlohmann::json::exception &e) {
            throw IngestError(predictions.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
        if (index >= data.size() || got.size() != kClasses)
            throw IngestError(predictions.string() + ":" + std::to_string(line_no) + ": record does not fit the images");
        const Matrix expect = oracle_forward(w, std::span<const Matrix>(&data[index], 1));
        for (std::size_t c = 0; c < kClasses; ++c)
            summary.max_abs_error = std::max(summary.max_abs_error, std::abs(expect(0, c) - got[c]));
        if (label != argmax_rows(expect)[0] && top_two_gap(expect.row(0)) > kLabelGapGuard) ++summary.label_mismatches;
        ++summary.records;
    }
    if (summary.records == 0) throw IngestError(predictions.string() + ": no prediction records");
    if (summary.max_abs_error > tolerance || summary.label_mismatches > 0)
        throw VerificationError("verify: " + std::to_string(summary.label_mismatches) +
                                " label mismatches, max abs error " + std::to_string(summary.max_abs_error));
    return summary;
}

}  // namespace revolver
