// SPDX-License-Identifier: Apache-2.0

// Single-ciphertext matrix multiplication over the revolver encoding, and
// its blockwise extension for operands spread over several ciphertexts.
//
// A (m x n) is packed row-major; B (n x p) is packed by encode_tau_b so that
// row r holds column (r mod p) of B. Iteration idx multiplies A by the
// revolver state in which row i holds column (i + idx) mod p, row-sums the
// product and keeps slot (i, (i + idx) mod p). After p iterations the
// accumulator holds C = A * B in its top-left m x p block.

#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "revolver/engine.hpp"
#include "revolver/matrix.hpp"
#include "revolver/pack.hpp"

namespace revolver {

/// Layout chosen for an (m x n) * (n x p) product.
struct MatmulPlan {
    std::size_t m = 0, n = 0, p = 0;  // logical dimensions
    std::size_t rows = 0;             // layout rows: max(m, p)
    std::size_t width = 0;            // layout width: next power of two >= max(n, p)
    bool fast_path = false;           // rows % p == 0 and shifted rows come from one rotation
    bool replicate = false;           // fast path needs a one-off block replica first

    /// Throws CapacityError when the padded layout does not fit in `slots`.
    static MatmulPlan make(std::size_t m, std::size_t n, std::size_t p, std::size_t slots);
};

/// Row shift strategy. `fastest` takes the single-rotation shift whenever the
/// layout allows it; `two_rotation` always uses the masked two-rotation shift.
enum class RowShift { fastest, two_rotation };

/// Meter deltas for one iteration: [0] row shift + Mul, [1] SumColVec,
/// [2] result filter, [3] accumulation.
using MatmulStepCosts = std::array<OpMeter, 4>;

struct MatmulTrace {
    OpMeter prepare;  // block replication for the fast path, if any
    std::vector<MatmulStepCosts> iterations;
};

/// Advances a revolver-encoded B by idx + 1 rows: row i of the result holds
/// column (i + idx + 1) mod p of B. When rows % p == 0 and the block fills the
/// slots this is the single rotation rot(ct, n); otherwise two rotations, two
/// filter cMuls and one Add. Requires rows >= p and 0 <= idx < p.
PackedMatrix row_shifter(Engine &engine, const PackedMatrix &bbar, std::size_t p, std::size_t idx);

/// Filter keeping slot (i, (i + idx) mod p) of every row i < m in an m x n layout.
PlainMask build_result_filter(std::size_t slots, std::size_t m, std::size_t n, std::size_t p, std::size_t idx);

/// Homomorphic product. `a` and `bbar` must share a rows x width layout with
/// width a power of two, rows >= p and width >= p (use MatmulPlan to pad).
/// `initial`, when given, seeds the accumulator (e.g. a bias ciphertext);
/// otherwise the accumulator is a fresh encryption of zeros.
PackedMatrix matmul(Engine &engine, const PackedMatrix &a, const PackedMatrix &bbar,
                    const std::optional<Ciphertext> &initial = std::nullopt, MatmulTrace *trace = nullptr,
                    RowShift shift = RowShift::fastest);

/// Plans, encodes, multiplies and decodes. Convenience for plain operands.
Matrix matmul_encrypted(Engine &engine, const Matrix &a, const Matrix &b, MatmulTrace *trace = nullptr,
                        RowShift shift = RowShift::fastest);

struct TileGrid {
    std::size_t row_blocks = 1;    // blocks of A's rows
    std::size_t inner_blocks = 1;  // blocks of the shared dimension
    std::size_t col_blocks = 1;    // blocks of B's columns
};

/// Blockwise product. `as` holds A tiles row-major over (row_block, inner_block),
/// `bs` holds B tiles row-major over (inner_block, col_block). Output tile
/// (r, c) = sum_k matmul(A[r][k], B[k][c]), returned row-major over (r, c).
/// Output tiles are independent and run concurrently when `parallel` is set.
std::vector<PackedMatrix> matmul_tiled(Engine &engine, std::span<const PackedMatrix> as,
                                       std::span<const PackedMatrix> bs, TileGrid grid, bool parallel = false);

/// Splits plain A and B evenly over `grid`, multiplies tile-wise and
/// reassembles the plaintext product.
Matrix matmul_tiled_encrypted(Engine &engine, const Matrix &a, const Matrix &b, TileGrid grid,
                              bool parallel = false);

/// Places tile b's leading `tile_cols` columns at column offset b * tile_cols
/// and sums the tiles (one rotation per tile after the first).
PackedMatrix concat_column_tiles(Engine &engine, std::span<const PackedMatrix> tiles, std::size_t tile_cols);

}  // namespace revolver
