// SPDX-License-Identifier: Apache-2.0

#include "revolver/conv.hpp"

#include <string>

#include "revolver/errors.hpp"

namespace revolver {

namespace {

void check_tiling(std::size_t slots, ImageShape shape, ImageTiling tiling, const char *op) {
    if (shape.h == 0 || shape.w == 0) throw PreconditionError(std::string(op) + ": empty image shape");
    if (tiling.count == 0) throw PreconditionError(std::string(op) + ": empty tiling");
    const std::size_t stride = tiling.stride_for(shape);
    if (stride < shape.size()) throw PreconditionError(std::string(op) + ": tiling stride smaller than an image");
    if ((tiling.count - 1) * stride + shape.size() > slots)
        throw CapacityError(std::string(op) + ": images exceed " + std::to_string(slots) + " slots");
}

// Spreads a per-image h x w pattern to every image of the tiling.
std::vector<double> tile_pattern(std::size_t slots, const Matrix &pattern, ImageShape shape, ImageTiling tiling) {
    std::vector<double> v(slots, 0.0);
    const std::size_t stride = tiling.stride_for(shape);
    for (std::size_t t = 0; t < tiling.count; ++t)
        for (std::size_t r = 0; r < shape.h; ++r)
            for (std::size_t c = 0; c < shape.w; ++c) v[t * stride + r * shape.w + c] = pattern(r, c);
    return v;
}

Matrix anchor_pattern(ImageShape shape, std::size_t k, std::size_t offset_i, std::size_t offset_j) {
    Matrix m(shape.h, shape.w);
    for (std::size_t row = offset_j; row + k <= shape.h; row += k)
        for (std::size_t col = offset_i; col + k <= shape.w; col += k) m(row, col) = 1.0;
    return m;
}

}  // namespace

Matrix span_pattern(const Kernel &kernel, ImageShape shape, std::size_t offset_i, std::size_t offset_j) {
    const std::size_t k = kernel.k();
    Matrix p(shape.h, shape.w);
    for (std::size_t a = offset_j; a + k <= shape.h; a += k)
        for (std::size_t b = offset_i; b + k <= shape.w; b += k)
            for (std::size_t r = 0; r < k; ++r)
                for (std::size_t c = 0; c < k; ++c) p(a + r, b + c) = kernel.weights(r, c);
    return p;
}

KernelSpan kernel_spanner(Engine &engine, const Kernel &kernel, ImageShape shape, ImageTiling tiling) {
    const std::size_t k = kernel.k();
    if (k == 0 || kernel.weights.cols() != k) throw PreconditionError("kernel_spanner: kernel must be k x k");
    if (shape.h < 2 * k - 1 || shape.w < 2 * k - 1)
        throw PreconditionError("kernel_spanner: image " + std::to_string(shape.h) + "x" + std::to_string(shape.w) +
                                " smaller than 2k-1 for k=" + std::to_string(k));
    check_tiling(engine.slots(), shape, tiling, "kernel_spanner");

    const Layout layout{LayoutKind::image, tiling.count, tiling.stride_for(shape), shape.h, shape.w};
    KernelSpan span;
    span.k = k;
    span.shape = shape;
    span.tiling = tiling;
    span.span_cts.reserve(k * k);
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j)
            span.span_cts.push_back(
                engine.enc(tile_pattern(engine.slots(), span_pattern(kernel, shape, i, j), shape, tiling), layout));

    Matrix bias(shape.h, shape.w);
    for (std::size_t r = 0; r + k <= shape.h; ++r)
        for (std::size_t c = 0; c + k <= shape.w; ++c) bias(r, c) = kernel.bias;
    span.bias_ct = engine.enc(tile_pattern(engine.slots(), bias, shape, tiling), layout);
    return span;
}

PlainMask build_offset_filter(std::size_t slots, ImageShape shape, std::size_t k, std::size_t offset_i,
                              std::size_t offset_j, ImageTiling tiling) {
    if (k == 0 || offset_i >= k || offset_j >= k)
        throw PreconditionError("build_offset_filter: offsets must lie in [0, k)");
    check_tiling(slots, shape, tiling, "build_offset_filter");
    return PlainMask::filter(tile_pattern(slots, anchor_pattern(shape, k, offset_i, offset_j), shape, tiling));
}

Ciphertext window_sums(Engine &engine, const Ciphertext &ct, ImageShape shape, std::size_t k) {
    if (k == 0 || k > shape.h || k > shape.w) throw PreconditionError("window_sums: kernel larger than the image");
    Ciphertext row_sums = ct;
    for (std::size_t q = 1; q < k; ++q) row_sums = engine.add(row_sums, engine.rot(ct, static_cast<long long>(q)));
    Ciphertext out = row_sums;
    for (std::size_t p = 1; p < k; ++p)
        out = engine.add(out, engine.rot(row_sums, static_cast<long long>(p * shape.w)));
    return out;
}

Ciphertext sum_for_conv(Engine &engine, const Ciphertext &ct, ImageShape shape, std::size_t k, double bias,
                        ImageTiling tiling) {
    check_tiling(engine.slots(), shape, tiling, "sum_for_conv");
    Ciphertext acc = window_sums(engine, ct, shape, k);
    Matrix b(shape.h, shape.w);
    for (std::size_t r = 0; r + k <= shape.h; ++r)
        for (std::size_t c = 0; c + k <= shape.w; ++c) b(r, c) = bias;
    acc = engine.add_plain(PlainMask(tile_pattern(engine.slots(), b, shape, tiling)), acc);
    return engine.cmul(build_offset_filter(engine.slots(), shape, k, 0, 0, tiling), acc);
}

Ciphertext conv(Engine &engine, const Ciphertext &image, const KernelSpan &span, ConvTrace *trace) {
    const std::size_t k = span.k;
    if (span.span_cts.size() != k * k) throw PreconditionError("conv: kernel span must hold k*k ciphertexts");
    if (image.size() != engine.slots()) throw EngineError("conv: image ciphertext slot count mismatch");

    OpMeter mark = engine.meter_snapshot();
    auto lap = [&]() {
        const OpMeter now = engine.meter_snapshot();
        const OpMeter d = now.since(mark);
        mark = now;
        return d;
    };
    if (trace) trace->iterations.clear();

    Ciphertext acc = span.bias_ct;
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < k; ++j) {
            ConvStepCosts costs;
            Ciphertext t = engine.mul(image, span.span_cts[i * k + j]);
            if (trace) costs[0] = lap();
            t = window_sums(engine, t, span.shape, k);
            if (trace) costs[1] = lap();
            t = engine.cmul(build_offset_filter(engine.slots(), span.shape, k, i, j, span.tiling), t);
            if (trace) costs[2] = lap();
            acc = engine.add(acc, t);
            if (trace) {
                costs[3] = lap();
                trace->iterations.push_back(costs);
            }
        }
    }
    return acc.with_layout(image.layout());
}

Matrix conv_encrypted(Engine &engine, const Matrix &image, const Kernel &kernel, ConvTrace *trace) {
    const ImageShape shape{image.rows(), image.cols()};
    const std::size_t k = kernel.k();
    if (k > shape.h || k > shape.w) throw PreconditionError("conv: kernel larger than the image");
    const Ciphertext ct = engine.enc(image.data(), Layout{LayoutKind::image, 1, shape.size(), shape.h, shape.w});
    const KernelSpan span = kernel_spanner(engine, kernel, shape);
    const auto out = engine.dec(conv(engine, ct, span, trace));
    Matrix result(shape.h - k + 1, shape.w - k + 1);
    for (std::size_t r = 0; r < result.rows(); ++r)
        for (std::size_t c = 0; c < result.cols(); ++c) result(r, c) = out[r * shape.w + c];
    return result;
}

}  // namespace revolver
