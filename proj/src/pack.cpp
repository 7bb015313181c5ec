// SPDX-License-Identifier: Apache-2.0

#include "revolver/pack.hpp"

#include <algorithm>
#include <string>
#include <vector>

#include "revolver/errors.hpp"

namespace revolver {

namespace {

Layout matrix_layout(MatrixShape s) { return {LayoutKind::matrix, s.rows, s.cols, 0, 0}; }

void require_fit(const Engine &engine, MatrixShape s, const char *op) {
    if (s.rows == 0 || s.cols == 0) throw PreconditionError(std::string(op) + ": empty shape");
    if (s.size() > engine.slots())
        throw CapacityError(std::string(op) + ": " + std::to_string(s.rows) + "x" + std::to_string(s.cols) +
                            " exceeds " + std::to_string(engine.slots()) + " slots");
}

PackedMatrix pack_rows(Engine &engine, const Matrix &a, MatrixShape shape, Encoding enc, const char *op) {
    require_fit(engine, shape, op);
    std::vector<double> slots(shape.size(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) slots[i * shape.cols + j] = a(i, j);
    return {engine.enc(slots, matrix_layout(shape)), shape, enc, 0};
}

}  // namespace

PackedMatrix encode_db(Engine &engine, const Matrix &z) {
    return pack_rows(engine, z, {z.rows(), z.cols()}, Encoding::database, "encode_db");
}

PackedMatrix encode_tau_a(Engine &engine, const Matrix &a, std::size_t width, std::size_t rows) {
    MatrixShape shape{rows == 0 ? a.rows() : rows, width == 0 ? a.cols() : width};
    if (shape.rows < a.rows() || shape.cols < a.cols())
        throw PreconditionError("encode_tau_a: padded layout smaller than the matrix");
    // Slot k holds a[k / n][k % n]; for an unpadded layout this is exactly row-major order.
    return pack_rows(engine, a, shape, Encoding::row_major, "encode_tau_a");
}

PackedMatrix encode_tau_b(Engine &engine, const Matrix &b, std::size_t target_m, std::size_t width) {
    const std::size_t n = b.rows();
    const std::size_t p = b.cols();
    if (p == 0 || n == 0) throw PreconditionError("encode_tau_b: empty matrix");
    if (target_m == 0) throw PreconditionError("encode_tau_b: target_m must be positive");
    MatrixShape shape{target_m, width == 0 ? n : width};
    if (shape.cols < n) throw PreconditionError("encode_tau_b: width smaller than the inner dimension");
    require_fit(engine, shape, "encode_tau_b");
    std::vector<double> slots(shape.size(), 0.0);
    for (std::size_t r = 0; r < target_m; ++r)
        for (std::size_t k = 0; k < n; ++k) slots[r * shape.cols + k] = b(k, r % p);
    return {engine.enc(slots, matrix_layout(shape)), shape, Encoding::revolver, p};
}

Matrix decode_matrix(const Engine &engine, const PackedMatrix &pm, std::size_t rows, std::size_t cols) {
    if (rows > pm.shape.rows || cols > pm.shape.cols)
        throw PreconditionError("decode_matrix: requested block exceeds the layout");
    const auto slots = engine.dec(pm.ct);
    Matrix out(rows, cols);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) out(i, j) = slots[i * pm.shape.cols + j];
    return out;
}

Matrix decode_matrix(const Engine &engine, const PackedMatrix &pm) {
    return decode_matrix(engine, pm, pm.shape.rows, pm.shape.cols);
}

PackedMatrix incomplete_col_shift(Engine &engine, const PackedMatrix &pm) {
    PackedMatrix out = pm;
    out.ct = engine.rot(pm.ct, 1);
    return out;
}

PackedMatrix row_shift(Engine &engine, const PackedMatrix &pm) {
    PackedMatrix out = pm;
    out.ct = engine.rot(pm.ct, static_cast<long long>(pm.shape.cols));
    return out;
}

PackedMatrix sum_row_vec(Engine &engine, const PackedMatrix &pm) {
    const auto [m, n] = pm.shape;
    if (!is_power_of_two(m)) throw PreconditionError("sum_row_vec: row count must be a power of two");
    const bool full = m * n == engine.slots();
    if (!full && 2 * m * n > engine.slots())
        throw CapacityError("sum_row_vec: partial block needs room for one replica");

    Ciphertext acc = pm.ct;
    if (!full) {
        // Place a copy of the block right after it so the cascade reads cyclically.
        acc = engine.add(acc, engine.rot(acc, -static_cast<long long>(m * n)));
    }
    for (std::size_t step = 1; step < m; step <<= 1)
        acc = engine.add(acc, engine.rot(acc, static_cast<long long>(step * n)));
    if (!full) {
        std::vector<double> keep(engine.slots(), 0.0);
        std::fill(keep.begin(), keep.begin() + static_cast<std::ptrdiff_t>(m * n), 1.0);
        acc = engine.cmul(PlainMask::filter(std::move(keep)), acc);
    }
    PackedMatrix out = pm;
    out.ct = acc;
    return out;
}

PackedMatrix sum_col_vec(Engine &engine, const PackedMatrix &pm) {
    const auto [m, n] = pm.shape;
    if (!is_power_of_two(n)) throw PreconditionError("sum_col_vec: column count must be a power of two");
    if (m * n > engine.slots()) throw CapacityError("sum_col_vec: block exceeds slots");

    // Column 0 of each row collects its row's sum; other columns read into the
    // next row and are discarded by the mask.
    Ciphertext acc = pm.ct;
    for (std::size_t step = 1; step < n; step <<= 1)
        acc = engine.add(acc, engine.rot(acc, static_cast<long long>(step)));

    std::vector<double> first_col(engine.slots(), 0.0);
    for (std::size_t i = 0; i < m; ++i) first_col[i * n] = 1.0;
    acc = engine.cmul(PlainMask::filter(std::move(first_col)), acc);

    // Spread column 0 rightwards across the row; each window of n slots
    // ending at (i, j) contains exactly one column-0 slot, namely (i, 0).
    for (std::size_t step = 1; step < n; step <<= 1)
        acc = engine.add(acc, engine.rot(acc, -static_cast<long long>(step)));

    PackedMatrix out = pm;
    out.ct = acc;
    return out;
}

}  // namespace revolver
