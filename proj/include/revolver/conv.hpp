// SPDX-License-Identifier: Apache-2.0

// Convolution on row-major packed images: window aggregation, kernel
// spreading and the k*k offset loop. Stride (1, 1), valid padding.
//
// Output convention: the result for window (a, b) is written to the window's
// top-left slot a * w + b, so the valid output is the top-left
// (h - k + 1) x (w - k + 1) block of the image layout and every other slot is 0.

#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "revolver/engine.hpp"
#include "revolver/matrix.hpp"

namespace revolver {

struct ImageShape {
    std::size_t h = 0;
    std::size_t w = 0;

    std::size_t size() const { return h * w; }
    bool operator==(const ImageShape &) const = default;
};

struct Kernel {
    Matrix weights;  // k x k
    double bias = 0.0;

    std::size_t k() const { return weights.rows(); }
};

/// Placement of one or more images in a ciphertext: image t starts at slot
/// t * stride. A stride of 0 means images are packed back to back (h * w).
struct ImageTiling {
    std::size_t count = 1;
    std::size_t stride = 0;

    std::size_t stride_for(ImageShape s) const { return stride == 0 ? s.size() : stride; }
    bool operator==(const ImageTiling &) const = default;
};

/// Kernel spread over the image grid. span_cts[i * k + j] pairs with filter
/// offsets (i, j): column offset i, row offset j.
struct KernelSpan {
    std::vector<Ciphertext> span_cts;
    Ciphertext bias_ct;  // bias at every valid output slot, 0 elsewhere
    std::size_t k = 0;
    ImageShape shape;
    ImageTiling tiling;
};

/// Requires h >= 2k - 1 and w >= 2k - 1 so every offset has at least one anchor.
KernelSpan kernel_spanner(Engine &engine, const Kernel &kernel, ImageShape shape, ImageTiling tiling = {});

/// Plain layout of span (offset_i, offset_j) for one image, row-major h x w.
/// Exposed for tests and the provider tooling.
Matrix span_pattern(const Kernel &kernel, ImageShape shape, std::size_t offset_i, std::size_t offset_j);

/// 1 at (row, col) when (col - offset_i) % k == 0, (row - offset_j) % k == 0,
/// col + k <= w and row + k <= h; replicated for each image of the tiling.
PlainMask build_offset_filter(std::size_t slots, ImageShape shape, std::size_t k, std::size_t offset_i,
                              std::size_t offset_j, ImageTiling tiling = {});

/// Horizontal then vertical rotate-and-add: slot (a, b) gains the sum of the
/// k x k window anchored there. 2(k - 1) rotations, 2(k - 1) adds.
Ciphertext window_sums(Engine &engine, const Ciphertext &ct, ImageShape shape, std::size_t k);

/// Window sums plus bias, kept only at anchors with row % k == 0 and
/// col % k == 0 whose window fits. One cMul.
Ciphertext sum_for_conv(Engine &engine, const Ciphertext &ct, ImageShape shape, std::size_t k, double bias,
                        ImageTiling tiling = {});

/// Meter deltas per offset: [0] Mul, [1] window sums, [2] offset filter, [3] accumulate.
using ConvStepCosts = std::array<OpMeter, 4>;

struct ConvTrace {
    std::vector<ConvStepCosts> iterations;
};

/// Valid convolution with bias at the anchor block; k*k offset iterations.
Ciphertext conv(Engine &engine, const Ciphertext &image, const KernelSpan &span, ConvTrace *trace = nullptr);

/// Encodes one image, spans the kernel, convolves and decodes the valid block.
Matrix conv_encrypted(Engine &engine, const Matrix &image, const Kernel &kernel, ConvTrace *trace = nullptr);

}  // namespace revolver
