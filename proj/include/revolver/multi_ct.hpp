// SPDX-License-Identifier: Apache-2.0

// Operands spread over several ciphertexts.
//
// Matrices: A (m x n) becomes n ciphertexts, the k-th holding the m x p
// broadcast of column k; B (n x p) becomes n ciphertexts, the k-th holding m
// copies of row k. A * B is then the sum of n slot-wise products with no
// rotation at all.
//
// Images: an h x w image becomes w ciphertexts, one per column, optionally
// stacking m images at stride h. Only h slots per image are needed, so
// images larger than a ciphertext are fine.

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "revolver/conv.hpp"
#include "revolver/engine.hpp"
#include "revolver/matrix.hpp"
#include "revolver/pack.hpp"

namespace revolver {

enum class OperandRole { left, right };

struct ColumnEncodedMatrix {
    std::vector<Ciphertext> cts;  // n ciphertexts, each an m x p layout
    OperandRole role = OperandRole::left;
    std::size_t m = 0, n = 0, p = 0;
};

ColumnEncodedMatrix encode_left(Engine &engine, const Matrix &a, std::size_t p);
ColumnEncodedMatrix encode_right(Engine &engine, const Matrix &b, std::size_t m);

/// Sum over k of left.cts[k] * right.cts[k]: n Muls, n - 1 Adds, no rotations.
PackedMatrix matmul_outer(Engine &engine, const ColumnEncodedMatrix &left, const ColumnEncodedMatrix &right,
                          bool parallel = false);

struct ColumnEncodedImage {
    std::vector<Ciphertext> cts;  // one per column
    std::size_t h = 0, w = 0;
    std::size_t batch = 1;
    std::size_t stride = 0;  // slots between stacked images; h at encode time
};

/// Column j of image t goes to ciphertext j at slots [t * h, t * h + h).
/// All images must share one shape.
ColumnEncodedImage encode_image_columns(Engine &engine, std::span<const Matrix> images);
ColumnEncodedImage encode_image_columns(Engine &engine, const Matrix &image);

/// Valid convolution in the column domain. Output column j' is
/// k0 + sum_{q,p} K[p][q] * (column j' + q moved up by p), masked to the
/// first h - k + 1 slots of every image block. w(k - 1) rotations,
/// k^2 (w - k + 1) cMuls, depth + 1.
ColumnEncodedImage conv_columns(Engine &engine, const ColumnEncodedImage &img, const Kernel &kernel);

/// Reassembles image t of a column encoding into an h x w matrix.
Matrix decode_columns(const Engine &engine, const ColumnEncodedImage &img, std::size_t t = 0);

}  // namespace revolver
