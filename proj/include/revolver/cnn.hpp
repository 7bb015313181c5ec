// SPDX-License-Identifier: Apache-2.0

// Encrypted inference for the MNIST network of model.hpp.
//
// Data layout: m = slots / f images per ciphertext, image t row-major at
// slot t * f. After the convolution each feature map lives in its own
// ciphertext; flatten_maps compacts map c of image t into slots
// [t * f, t * f + s * s), so the four map ciphertexts together form an
// m x (4 f) matrix whose row t is image t's feature vector, map c at
// column block c. FC-1 consumes the four blocks as inner tiles.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "revolver/conv.hpp"
#include "revolver/engine.hpp"
#include "revolver/matmul.hpp"
#include "revolver/model.hpp"
#include "revolver/virtual_ct.hpp"

namespace revolver {

/// conv 2 + ACT-1 2 + flatten 1 + FC-1 3 + ACT-2 2 + FC-2 3.
inline constexpr std::size_t kPipelineDepth = 13;

/// c0 + c1 x + c2 x^2 + c3 x^3 as c0 + c1 x + x^2 (c2 + c3 x): two Muls,
/// two cMuls, depth + 2. With a support filter, slots outside it come out 0.
Ciphertext poly_activation(Engine &engine, const Ciphertext &ct, const Poly3 &coeffs);
Ciphertext poly_activation(Engine &engine, const Ciphertext &ct, const Poly3 &coeffs, std::span<const double> support);

/// One batched convolution per kernel span; outputs share the input layout.
std::vector<Ciphertext> conv_layer(Engine &engine, const Ciphertext &ct, const VirtualLayout &layout,
                                   std::span<const KernelSpan> spans, bool parallel = false);

/// Reform-compacts each side x side anchor block. Returns one m x f matrix per map.
std::vector<PackedMatrix> flatten_maps(Engine &engine, std::span<const Ciphertext> maps, const VirtualLayout &layout,
                                       std::size_t side);

/// Reads the flattened features back as an m x (maps * side^2) matrix, map-major.
Matrix decode_flattened(const Engine &engine, std::span<const PackedMatrix> maps, std::size_t side);

/// A fully connected layer y = W x + b, tiled for the revolver matmul.
/// tiles[k * col_blocks + c] holds the transpose of W's block (rows c * tile_p..,
/// cols k * segment..), encoded as B.
struct EncodedFc {
    std::vector<PackedMatrix> tiles;
    std::vector<Ciphertext> biases;  // per column block, seeds the accumulator
    std::size_t inner_blocks = 0;
    std::size_t col_blocks = 0;
    std::size_t tile_p = 0;
    std::size_t out_dim = 0;
    std::size_t segment = 0;  // input features per inner block
};

enum class FcMode { single, tiled };

/// W is out_dim x (inner_blocks * segment). Inputs are m x width layouts.
EncodedFc encode_fc(Engine &engine, const Matrix &w, std::span<const double> bias, std::size_t inner_blocks,
                    std::size_t segment, std::size_t m, std::size_t width);

/// Single mode needs exactly one tile. Output: m x width, column o = y_o.
PackedMatrix fc_layer(Engine &engine, std::span<const PackedMatrix> inputs, const EncodedFc &fc, FcMode mode,
                      bool parallel = false);

struct EncodedModel {
    std::vector<KernelSpan> spans;
    EncodedFc fc1, fc2;
    Poly3 act1{}, act2{};
    std::size_t k = 0;
    std::size_t stride = 0;  // f
    std::size_t images_per_ct = 0;

    std::size_t ciphertext_count() const;
    VirtualLayout input_layout() const { return {images_per_ct, stride, kImageSide, kImageSide}; }
};

EncodedModel provider_encode(Engine &engine, const ModelWeights &w, std::size_t stride = 1024);

/// Packs up to slots / stride images; missing rows are zero.
Ciphertext pack_batch(Engine &engine, std::span<const Matrix> images, std::size_t stride = 1024);

/// Images of a packed batch (the simulator can read them back).
std::vector<Matrix> unpack_batch(const Engine &engine, const Ciphertext &ct, std::size_t count, std::size_t stride,
                                 std::size_t h = kImageSide, std::size_t w = kImageSide);

struct ForwardTrace {
    OpMeter conv, act1, flatten, fc1, act2, fc2;
};

/// Returns an m x f layout whose row t holds image t's kClasses scores.
PackedMatrix forward(Engine &engine, const Ciphertext &batch, const EncodedModel &model,
                     ForwardTrace *trace = nullptr, bool parallel = false);

/// First `count` rows, kClasses columns.
Matrix decode_scores(const Engine &engine, const PackedMatrix &scores, std::size_t count);

/// Per image, the index of the highest score; ties go to the lowest index.
std::vector<std::uint8_t> argmax_decide(const Matrix &scores);

}  // namespace revolver
