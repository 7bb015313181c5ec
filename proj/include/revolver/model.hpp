// SPDX-License-Identifier: Apache-2.0

// Plain model parameters for the MNIST network
//   CONV (4 kernels k x k) -> ACT-1 -> FC-1 (4 (29-k)^2 -> 64) -> ACT-2 -> FC-2 (64 -> 10)
// and the batch arithmetic for packing images into ciphertexts.
//
// Flatten order is map-major: feature index c * s * s + r * s + q holds
// map c at output row r, column q, where s = 29 - k.

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "revolver/matrix.hpp"

namespace revolver {

inline constexpr std::size_t kImageSide = 28;
inline constexpr std::size_t kMaps = 4;
inline constexpr std::size_t kHidden = 64;
inline constexpr std::size_t kClasses = 10;

using Poly3 = std::array<double, 4>;  // constant term first

/// Activation polynomials fitted for the published network.
inline constexpr Poly3 kAct1 = {-0.00015120704, 0.4610149, 2.0225089, -1.4511951};
inline constexpr Poly3 kAct2 = {-1.5650465, -0.9943767, 1.6794522, 0.5350255};

inline double eval_poly(const Poly3 &c, double x) { return c[0] + x * (c[1] + x * (c[2] + x * c[3])); }

struct ModelWeights {
    std::array<Matrix, kMaps> conv;  // k x k each
    std::array<double, kMaps> conv_bias{};
    Matrix fc1;  // kHidden x features()
    std::vector<double> fc1_bias;
    Matrix fc2;  // kClasses x kHidden
    std::vector<double> fc2_bias;
    Poly3 act1 = kAct1;
    Poly3 act2 = kAct2;

    std::size_t k() const { return conv[0].rows(); }
    std::size_t map_side() const { return kImageSide - k() + 1; }
    std::size_t features() const { return kMaps * map_side() * map_side(); }

    /// Checks every dimension against the architecture; throws IngestError.
    void validate() const;
};

/// Uniform random weights of the right shapes, scaled so activations stay O(1).
ModelWeights random_weights(std::uint64_t seed, std::size_t k = 3);

/// Reads conv_k{0..3}.csv, conv_bias.csv, fc1_weight.csv, fc1_bias.csv,
/// fc2_weight.csv, fc2_bias.csv, act1.csv, act2.csv. Bias and coefficient
/// files may hold their values on one row or one per line.
ModelWeights load_weights_csv(const std::filesystem::path &dir);
void save_weights_csv(const std::filesystem::path &dir, const ModelWeights &w);

struct BatchPlan {
    std::size_t images_per_ct = 0;  // slots / stride
    std::size_t stride = 0;         // f: slots reserved per image
    std::size_t batches = 0;
    std::size_t zero_fill = 0;  // empty image rows in the final batch

    /// Throws PreconditionError unless stride is a power of two dividing slots.
    static BatchPlan make(std::size_t slots, std::size_t image_count, std::size_t stride = 1024);
};

}  // namespace revolver
