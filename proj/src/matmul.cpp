// SPDX-License-Identifier: Apache-2.0

#include "revolver/matmul.hpp"

#include <algorithm>
#include <future>
#include <string>

#include "revolver/errors.hpp"

namespace revolver {

namespace {

PlainMask rows_mask(std::size_t slots, MatrixShape shape, std::size_t first_row, std::size_t end_row) {
    std::vector<double> v(slots, 0.0);
    std::fill(v.begin() + static_cast<std::ptrdiff_t>(first_row * shape.cols),
              v.begin() + static_cast<std::ptrdiff_t>(end_row * shape.cols), 1.0);
    return PlainMask::filter(std::move(v));
}

// Revolver state `shift` (row i holds column (i + shift) mod p), built from
// the unshifted encoding so the depth does not grow with the iteration count.
// `cyclic` means rows m.. of `src` repeat rows 0.. (full block or replica).
Ciphertext revolver_state(Engine &engine, const Ciphertext &src, MatrixShape shape, std::size_t p,
                          std::size_t shift, bool cyclic) {
    const std::size_t m = shape.rows;
    const auto n = static_cast<long long>(shape.cols);
    const auto s = static_cast<long long>(shift);
    if (m % p == 0 && cyclic) return engine.rot(src, n * s);

    // Rows [0, m - shift) come straight from rows shift.. of the source; the
    // freed bottom rows take source rows starting at m mod p, which carry the
    // same columns modulo p.
    const Ciphertext upper = engine.cmul(rows_mask(engine.slots(), shape, 0, m - shift), engine.rot(src, n * s));
    const long long back = s - static_cast<long long>(m) + static_cast<long long>(m % p);
    const Ciphertext lower = engine.cmul(rows_mask(engine.slots(), shape, m - shift, m), engine.rot(src, n * back));
    return engine.add(upper, lower);
}

void check_operands(const Engine &engine, const PackedMatrix &a, const PackedMatrix &bbar) {
    if (bbar.encoding != Encoding::revolver || bbar.period == 0)
        throw PreconditionError("matmul: right operand must be revolver-encoded");
    if (a.encoding == Encoding::revolver) throw PreconditionError("matmul: left operand must be row-major");
    if (!(a.shape == bbar.shape))
        throw PreconditionError("matmul: operand layouts differ (" + std::to_string(a.shape.rows) + "x" +
                                std::to_string(a.shape.cols) + " vs " + std::to_string(bbar.shape.rows) + "x" +
                                std::to_string(bbar.shape.cols) + ")");
    const std::size_t p = bbar.period;
    if (!is_power_of_two(a.shape.cols)) throw PreconditionError("matmul: layout width must be a power of two");
    if (a.shape.rows < p) throw PreconditionError("matmul: layout needs at least p rows; pad with MatmulPlan");
    if (a.shape.cols < p) throw PreconditionError("matmul: layout width must be at least p");
    if (a.shape.size() > engine.slots()) throw CapacityError("matmul: layout exceeds slots");
}

}  // namespace

MatmulPlan MatmulPlan::make(std::size_t m, std::size_t n, std::size_t p, std::size_t slots) {
    if (m == 0 || n == 0 || p == 0) throw PreconditionError("MatmulPlan: dimensions must be positive");
    MatmulPlan plan;
    plan.m = m;
    plan.n = n;
    plan.p = p;
    plan.rows = std::max(m, p);
    plan.width = next_power_of_two(std::max(n, p));
    const std::size_t block = plan.rows * plan.width;
    if (block > slots)
        throw CapacityError("MatmulPlan: " + std::to_string(plan.rows) + "x" + std::to_string(plan.width) +
                            " layout exceeds " + std::to_string(slots) + " slots");
    const bool full = block == slots;
    plan.fast_path = plan.rows % p == 0 && (full || 2 * block <= slots);
    plan.replicate = plan.fast_path && !full;
    return plan;
}

PackedMatrix row_shifter(Engine &engine, const PackedMatrix &bbar, std::size_t p, std::size_t idx) {
    if (p == 0 || idx >= p) throw PreconditionError("row_shifter: idx must lie in [0, p)");
    if (bbar.shape.rows < p) throw PreconditionError("row_shifter: needs at least p rows");
    const bool cyclic = bbar.shape.size() == engine.slots();
    PackedMatrix out = bbar;
    out.ct = revolver_state(engine, bbar.ct, bbar.shape, p, idx + 1, cyclic);
    return out;
}

PlainMask build_result_filter(std::size_t slots, std::size_t m, std::size_t n, std::size_t p, std::size_t idx) {
    if (p == 0 || idx >= p) throw PreconditionError("build_result_filter: idx must lie in [0, p)");
    if (p > n) throw PreconditionError("build_result_filter: p exceeds the row width");
    if (m * n > slots) throw CapacityError("build_result_filter: layout exceeds slots");
    std::vector<double> v(slots, 0.0);
    for (std::size_t i = 0; i < m; ++i) v[i * n + (i + idx) % p] = 1.0;
    return PlainMask::filter(std::move(v));
}

PackedMatrix matmul(Engine &engine, const PackedMatrix &a, const PackedMatrix &bbar,
                    const std::optional<Ciphertext> &initial, MatmulTrace *trace, RowShift shift) {
    check_operands(engine, a, bbar);
    const MatrixShape shape = a.shape;
    const std::size_t p = bbar.period;
    const std::size_t block = shape.size();
    const Layout layout{LayoutKind::matrix, shape.rows, shape.cols, 0, 0};

    Ciphertext acc = initial ? *initial : engine.enc(std::span<const double>{}, layout);

    OpMeter mark = engine.meter_snapshot();
    auto lap = [&]() {
        const OpMeter now = engine.meter_snapshot();
        const OpMeter d = now.since(mark);
        mark = now;
        return d;
    };

    Ciphertext source = bbar.ct;
    const bool fast = shift == RowShift::fastest;
    bool cyclic = fast && block == engine.slots();
    if (fast && shape.rows % p == 0 && !cyclic && 2 * block <= engine.slots()) {
        source = engine.add(source, engine.rot(source, -static_cast<long long>(block)));
        cyclic = true;
    }
    if (trace) {
        trace->prepare = lap();
        trace->iterations.clear();
    }

    for (std::size_t idx = 0; idx < p; ++idx) {
        MatmulStepCosts costs;
        // Step 1: the first iteration uses the encoding as is.
        const Ciphertext shifted = idx == 0 ? bbar.ct : revolver_state(engine, source, shape, p, idx, cyclic);
        Ciphertext t = engine.mul(a.ct, shifted);
        if (trace) costs[0] = lap();
        // Step 2
        t = sum_col_vec(engine, PackedMatrix{t, shape, Encoding::row_major, 0}).ct;
        if (trace) costs[1] = lap();
        // Step 3
        t = engine.cmul(build_result_filter(engine.slots(), shape.rows, shape.cols, p, idx), t);
        if (trace) costs[2] = lap();
        // Step 4
        acc = engine.add(acc, t);
        if (trace) {
            costs[3] = lap();
            trace->iterations.push_back(costs);
        }
    }
    return {acc.with_layout(layout), shape, Encoding::row_major, 0};
}

Matrix matmul_encrypted(Engine &engine, const Matrix &a, const Matrix &b, MatmulTrace *trace, RowShift shift) {
    if (a.cols() != b.rows()) throw PreconditionError("matmul: inner dimensions differ");
    const MatmulPlan plan = MatmulPlan::make(a.rows(), a.cols(), b.cols(), engine.slots());
    const PackedMatrix pa = encode_tau_a(engine, a, plan.width, plan.rows);
    const PackedMatrix pb = encode_tau_b(engine, b, plan.rows, plan.width);
    const PackedMatrix c = matmul(engine, pa, pb, std::nullopt, trace, shift);
    return decode_matrix(engine, c, plan.m, plan.p);
}

std::vector<PackedMatrix> matmul_tiled(Engine &engine, std::span<const PackedMatrix> as,
                                       std::span<const PackedMatrix> bs, TileGrid grid, bool parallel) {
    const auto [R, K, C] = grid;
    if (R == 0 || K == 0 || C == 0) throw PreconditionError("matmul_tiled: empty tile grid");
    if (as.size() != R * K || bs.size() != K * C)
        throw PreconditionError("matmul_tiled: tile counts do not match the grid");
    for (std::size_t r = 0; r < R; ++r)
        for (std::size_t k = 0; k < K; ++k)
            if (!(as[r * K + k].shape == as[r * K].shape))
                throw PreconditionError("matmul_tiled: A tiles in one row block must share a layout");
    for (std::size_t c = 0; c < C; ++c)
        for (std::size_t k = 0; k < K; ++k)
            if (bs[k * C + c].period != bs[c].period)
                throw PreconditionError("matmul_tiled: B tiles in one column block must share p");

    auto tile = [&](std::size_t r, std::size_t c) {
        std::optional<Ciphertext> acc;
        PackedMatrix out;
        for (std::size_t k = 0; k < K; ++k) {
            out = matmul(engine, as[r * K + k], bs[k * C + c], acc);
            acc = out.ct;
        }
        return out;
    };

    std::vector<PackedMatrix> out(R * C);
    if (parallel && R * C > 1) {
        std::vector<std::future<PackedMatrix>> jobs;
        jobs.reserve(R * C);
        for (std::size_t r = 0; r < R; ++r)
            for (std::size_t c = 0; c < C; ++c) jobs.push_back(std::async(std::launch::async, tile, r, c));
        for (std::size_t i = 0; i < jobs.size(); ++i) out[i] = jobs[i].get();
    } else {
        for (std::size_t r = 0; r < R; ++r)
            for (std::size_t c = 0; c < C; ++c) out[r * C + c] = tile(r, c);
    }
    return out;
}

Matrix matmul_tiled_encrypted(Engine &engine, const Matrix &a, const Matrix &b, TileGrid grid, bool parallel) {
    if (a.cols() != b.rows()) throw PreconditionError("matmul: inner dimensions differ");
    const auto [R, K, C] = grid;
    if (R == 0 || K == 0 || C == 0) throw PreconditionError("matmul_tiled: empty tile grid");
    if (R > a.rows() || K > a.cols() || C > b.cols())
        throw PreconditionError("matmul_tiled: more blocks than matrix entries");
    const std::size_t mb = (a.rows() + R - 1) / R;
    const std::size_t nb = (a.cols() + K - 1) / K;
    const std::size_t pb = (b.cols() + C - 1) / C;
    const MatmulPlan plan = MatmulPlan::make(mb, nb, pb, engine.slots());

    std::vector<PackedMatrix> as, bs;
    for (std::size_t r = 0; r < R; ++r)
        for (std::size_t k = 0; k < K; ++k)
            as.push_back(encode_tau_a(engine, a.block(r * mb, k * nb, mb, nb), plan.width, plan.rows));
    for (std::size_t k = 0; k < K; ++k)
        for (std::size_t c = 0; c < C; ++c)
            bs.push_back(encode_tau_b(engine, b.block(k * nb, c * pb, nb, pb), plan.rows, plan.width));

    const auto tiles = matmul_tiled(engine, as, bs, grid, parallel);
    Matrix out(a.rows(), b.cols());
    for (std::size_t r = 0; r < R; ++r)
        for (std::size_t c = 0; c < C; ++c) {
            const Matrix t = decode_matrix(engine, tiles[r * C + c], mb, pb);
            for (std::size_t i = 0; i < mb && r * mb + i < out.rows(); ++i)
                for (std::size_t j = 0; j < pb && c * pb + j < out.cols(); ++j) out(r * mb + i, c * pb + j) = t(i, j);
        }
    return out;
}

PackedMatrix concat_column_tiles(Engine &engine, std::span<const PackedMatrix> tiles, std::size_t tile_cols) {
    if (tiles.empty()) throw PreconditionError("concat_column_tiles: no tiles");
    const MatrixShape shape = tiles.front().shape;
    if (tiles.size() * tile_cols > shape.cols)
        throw PreconditionError("concat_column_tiles: concatenated width exceeds the layout");
    Ciphertext acc = tiles.front().ct;
    for (std::size_t b = 1; b < tiles.size(); ++b) {
        if (!(tiles[b].shape == shape)) throw PreconditionError("concat_column_tiles: tile layouts differ");
        acc = engine.add(acc, engine.rot(tiles[b].ct, -static_cast<long long>(b * tile_cols)));
    }
    return {acc, shape, Encoding::row_major, 0};
}

}  // namespace revolver
