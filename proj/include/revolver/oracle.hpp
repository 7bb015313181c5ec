// SPDX-License-Identifier: Apache-2.0

// Plaintext reference computations. Deliberately naive and independent of
// the packed code paths they check.

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "revolver/matrix.hpp"
#include "revolver/model.hpp"

namespace revolver {

Matrix oracle_matmul(const Matrix &a, const Matrix &b);

/// Valid convolution: out[i][j] = k0 + sum_{p,q} K[p][q] * I[i + p][j + q].
Matrix oracle_conv(const Matrix &image, const Matrix &kernel, double k0);

/// Per-image flattened feature vector after CONV and ACT-1 (map-major).
std::vector<double> oracle_features(const ModelWeights &w, const Matrix &image);

/// Scores, one row of kClasses per image.
Matrix oracle_forward(const ModelWeights &w, std::span<const Matrix> images);

/// Index of the largest entry of each row; ties go to the lowest index.
std::vector<std::uint8_t> argmax_rows(const Matrix &scores);

}  // namespace revolver
