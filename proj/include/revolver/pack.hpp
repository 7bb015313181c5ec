// SPDX-License-Identifier: Apache-2.0

// Plaintext <-> slot layouts for matrices, and the shifting / aggregation
// primitives that work on row-major packed matrices.

#pragma once

#include <cstddef>
#include <filesystem>

#include "revolver/engine.hpp"
#include "revolver/matrix.hpp"

namespace revolver {

struct MatrixShape {
    std::size_t rows = 0;
    std::size_t cols = 0;

    std::size_t size() const { return rows * cols; }
    bool operator==(const MatrixShape &) const = default;
};

enum class Encoding {
    database,   // row-major dataset packing
    row_major,  // tau_a
    revolver,   // tau_b: B transposed and vertically tiled
};

/// A matrix-shaped ciphertext. Entry (i, j) lives in slot i * shape.cols + j;
/// slots beyond shape.size() are zero at encode time.
struct PackedMatrix {
    Ciphertext ct;
    MatrixShape shape;
    Encoding encoding = Encoding::row_major;
    /// Number of source columns tiled by a revolver encoding (p); 0 otherwise.
    std::size_t period = 0;
};

PackedMatrix encode_db(Engine &engine, const Matrix &z);

/// Row-major packing of A into a rows x width layout. width/rows of 0 keep
/// A's own dimensions; larger values zero-pad.
PackedMatrix encode_tau_a(Engine &engine, const Matrix &a, std::size_t width = 0, std::size_t rows = 0);

/// Revolver packing of B (n x p): row r of the target_m x width layout is
/// column (r mod p) of B, zero-padded to width.
PackedMatrix encode_tau_b(Engine &engine, const Matrix &b, std::size_t target_m, std::size_t width = 0);

/// Reads the top-left rows x cols block of a packed matrix.
Matrix decode_matrix(const Engine &engine, const PackedMatrix &pm, std::size_t rows, std::size_t cols);
Matrix decode_matrix(const Engine &engine, const PackedMatrix &pm);

/// rot by 1. Wraps inside the matrix block when the block fills every slot.
PackedMatrix incomplete_col_shift(Engine &engine, const PackedMatrix &pm);
/// rot by cols. Wraps inside the matrix block when the block fills every slot.
PackedMatrix row_shift(Engine &engine, const PackedMatrix &pm);

/// Every row becomes the vector of column sums. Requires rows to be a power
/// of two. Uses log2(rows) rotations when the block fills the slots;
/// otherwise one extra rotation (block replication) and one cleanup cMul.
PackedMatrix sum_row_vec(Engine &engine, const PackedMatrix &pm);

/// Every entry of row i becomes sum_j Z[i][j]. Requires cols to be a power
/// of two. Cost: 2*log2(cols) rotations, 2*log2(cols) adds, one cMul.
PackedMatrix sum_col_vec(Engine &engine, const PackedMatrix &pm);

/// Rotation count of sum_col_vec for a given width.
constexpr std::size_t sum_col_vec_rotations(std::size_t cols) { return 2 * log2_exact(cols); }

/// Reads a CSV matrix (one row per line, '.' decimal point regardless of locale).
Matrix read_csv_matrix(const std::filesystem::path &path);
void write_csv_matrix(const std::filesystem::path &path, const Matrix &m);

}  // namespace revolver
