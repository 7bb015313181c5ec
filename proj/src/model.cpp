// SPDX-License-Identifier: Apache-2.0

#include "revolver/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <span>
#include <string>

#include "revolver/errors.hpp"
#include "revolver/pack.hpp"

namespace revolver {

namespace {

void expect_shape(const Matrix &m, std::size_t rows, std::size_t cols, const std::string &what) {
    if (m.rows() != rows || m.cols() != cols)
        throw IngestError(what + ": expected " + std::to_string(rows) + "x" + std::to_string(cols) + ", found " +
                          std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
}

std::vector<double> read_vector(const std::filesystem::path &path, std::size_t expected) {
    const Matrix m = read_csv_matrix(path);
    if (m.rows() != 1 && m.cols() != 1)
        throw IngestError(path.string() + ": expected a single row or column of values");
    if (m.data().size() != expected)
        throw IngestError(path.string() + ": expected " + std::to_string(expected) + " values, found " +
                          std::to_string(m.data().size()));
    return m.data();
}

void write_vector(const std::filesystem::path &path, std::span<const double> v) {
    Matrix m(1, v.size());
    std::copy(v.begin(), v.end(), m.data().begin());
    write_csv_matrix(path, m);
}

std::filesystem::path need(const std::filesystem::path &dir, const char *name) {
    const auto p = dir / name;
    if (!std::filesystem::exists(p)) throw IngestError(p.string() + ": missing weight file");
    return p;
}

}  // namespace

void ModelWeights::validate() const {
    const std::size_t kk = k();
    if (kk == 0) throw IngestError("conv_k0: empty kernel");
    if (kImageSide < 2 * kk - 1) throw IngestError("conv kernels: k=" + std::to_string(kk) + " too large");
    for (std::size_t c = 0; c < kMaps; ++c) expect_shape(conv[c], kk, kk, "conv_k" + std::to_string(c));
    expect_shape(fc1, kHidden, features(), "fc1_weight");
    if (fc1_bias.size() != kHidden) throw IngestError("fc1_bias: expected " + std::to_string(kHidden) + " values");
    expect_shape(fc2, kClasses, kHidden, "fc2_weight");
    if (fc2_bias.size() != kClasses) throw IngestError("fc2_bias: expected " + std::to_string(kClasses) + " values");
}

ModelWeights random_weights(std::uint64_t seed, std::size_t k) {
    std::mt19937_64 rng(seed);
    auto fill = [&](Matrix &m, double scale) {
        std::uniform_real_distribution<double> d(-scale, scale);
        for (double &x : m.data()) x = d(rng);
    };
    ModelWeights w;
    for (auto &kernel : w.conv) {
        kernel = Matrix(k, k);
        fill(kernel, 0.6 / static_cast<double>(k));
    }
    std::uniform_real_distribution<double> small(-0.1, 0.1);
    for (double &b : w.conv_bias) b = small(rng);
    w.fc1 = Matrix(kHidden, w.features());
    fill(w.fc1, 1.5 / std::sqrt(static_cast<double>(w.features())));
    w.fc1_bias.resize(kHidden);
    for (double &b : w.fc1_bias) b = small(rng);
    w.fc2 = Matrix(kClasses, kHidden);
    fill(w.fc2, 1.0 / std::sqrt(static_cast<double>(kHidden)));
    w.fc2_bias.resize(kClasses);
    for (double &b : w.fc2_bias) b = small(rng);
    return w;
}

ModelWeights load_weights_csv(const std::filesystem::path &dir) {
    ModelWeights w;
    for (std::size_t c = 0; c < kMaps; ++c) {
        const std::string name = "conv_k" + std::to_string(c) + ".csv";
        w.conv[c] = read_csv_matrix(need(dir, name.c_str()));
    }
    const auto cb = read_vector(need(dir, "conv_bias.csv"), kMaps);
    std::copy(cb.begin(), cb.end(), w.conv_bias.begin());
    w.fc1 = read_csv_matrix(need(dir, "fc1_weight.csv"));
    w.fc1_bias = read_vector(need(dir, "fc1_bias.csv"), kHidden);
    w.fc2 = read_csv_matrix(need(dir, "fc2_weight.csv"));
    w.fc2_bias = read_vector(need(dir, "fc2_bias.csv"), kClasses);
    const auto a1 = read_vector(need(dir, "act1.csv"), 4);
    const auto a2 = read_vector(need(dir, "act2.csv"), 4);
    std::copy(a1.begin(), a1.end(), w.act1.begin());
    std::copy(a2.begin(), a2.end(), w.act2.begin());
    w.validate();
    return w;
}

void save_weights_csv(const std::filesystem::path &dir, const ModelWeights &w) {
    w.validate();
    std::filesystem::create_directories(dir);
    for (std::size_t c = 0; c < kMaps; ++c) write_csv_matrix(dir / ("conv_k" + std::to_string(c) + ".csv"), w.conv[c]);
    write_vector(dir / "conv_bias.csv", w.conv_bias);
    write_csv_matrix(dir / "fc1_weight.csv", w.fc1);
    write_vector(dir / "fc1_bias.csv", w.fc1_bias);
    write_csv_matrix(dir / "fc2_weight.csv", w.fc2);
    write_vector(dir / "fc2_bias.csv", w.fc2_bias);
    write_vector(dir / "act1.csv", w.act1);
    write_vector(dir / "act2.csv", w.act2);
}

BatchPlan BatchPlan::make(std::size_t slots, std::size_t image_count, std::size_t stride) {
    if (!is_power_of_two(stride) || !is_power_of_two(slots) || stride > slots)
        throw PreconditionError("BatchPlan: stride must be a power of two no larger than slots");
    BatchPlan plan;
    plan.stride = stride;
    plan.images_per_ct = slots / stride;
    plan.batches = (image_count + plan.images_per_ct - 1) / plan.images_per_ct;
    plan.zero_fill = plan.batches * plan.images_per_ct - image_count;
    return plan;
}

}  // namespace revolver
