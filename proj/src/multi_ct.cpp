// SPDX-License-Identifier: Apache-2.0

#include "revolver/multi_ct.hpp"

#include <future>
#include <string>

#include "revolver/errors.hpp"

namespace revolver {

ColumnEncodedMatrix encode_left(Engine &engine, const Matrix &a, std::size_t p) {
    const std::size_t m = a.rows(), n = a.cols();
    if (m == 0 || n == 0 || p == 0) throw PreconditionError("encode_left: dimensions must be positive");
    if (m * p > engine.slots())
        throw CapacityError("encode_left: " + std::to_string(m) + "x" + std::to_string(p) + " exceeds slots");
    ColumnEncodedMatrix out{{}, OperandRole::left, m, n, p};
    const Layout layout{LayoutKind::matrix, m, p, 0, 0};
    std::vector<double> v(m * p);
    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < p; ++j) v[i * p + j] = a(i, k);
        out.cts.push_back(engine.enc(v, layout));
    }
    return out;
}

ColumnEncodedMatrix encode_right(Engine &engine, const Matrix &b, std::size_t m) {
    const std::size_t n = b.rows(), p = b.cols();
    if (m == 0 || n == 0 || p == 0) throw PreconditionError("encode_right: dimensions must be positive");
    if (m * p > engine.slots())
        throw CapacityError("encode_right: " + std::to_string(m) + "x" + std::to_string(p) + " exceeds slots");
    ColumnEncodedMatrix out{{}, OperandRole::right, m, n, p};
    const Layout layout{LayoutKind::matrix, m, p, 0, 0};
    std::vector<double> v(m * p);
    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < p; ++j) v[i * p + j] = b(k, j);
        out.cts.push_back(engine.enc(v, layout));
    }
    return out;
}

PackedMatrix matmul_outer(Engine &engine, const ColumnEncodedMatrix &left, const ColumnEncodedMatrix &right,
                          bool parallel) {
    if (left.role != OperandRole::left || right.role != OperandRole::right)
        throw PreconditionError("matmul_outer: operands have the wrong roles");
    if (left.m != right.m || left.n != right.n || left.p != right.p)
        throw PreconditionError("matmul_outer: operand dimensions differ");
    if (left.cts.size() != left.n || right.cts.size() != right.n)
        throw PreconditionError("matmul_outer: expected n ciphertexts per operand");

    std::vector<Ciphertext> products(left.n);
    if (parallel && left.n > 1) {
        std::vector<std::future<Ciphertext>> jobs;
        for (std::size_t k = 0; k < left.n; ++k)
            jobs.push_back(std::async(std::launch::async,
                                      [&, k] { return engine.mul(left.cts[k], right.cts[k]); }));
        for (std::size_t k = 0; k < left.n; ++k) products[k] = jobs[k].get();
    } else {
        for (std::size_t k = 0; k < left.n; ++k) products[k] = engine.mul(left.cts[k], right.cts[k]);
    }
    Ciphertext acc = products[0];
    for (std::size_t k = 1; k < left.n; ++k) acc = engine.add(acc, products[k]);
    const Layout layout{LayoutKind::matrix, left.m, left.p, 0, 0};
    return {acc.with_layout(layout), {left.m, left.p}, Encoding::row_major, 0};
}

ColumnEncodedImage encode_image_columns(Engine &engine, std::span<const Matrix> images) {
    if (images.empty()) throw PreconditionError("encode_image_columns: no images");
    const std::size_t h = images[0].rows(), w = images[0].cols();
    if (h == 0 || w == 0) throw PreconditionError("encode_image_columns: empty image");
    for (const Matrix &im : images)
        if (im.rows() != h || im.cols() != w)
            throw PreconditionError("encode_image_columns: images differ in shape");
    const std::size_t m = images.size();
    if (m * h > engine.slots())
        throw CapacityError("encode_image_columns: " + std::to_string(m) + " columns of " + std::to_string(h) +
                            " pixels exceed slots");

    ColumnEncodedImage out{{}, h, w, m, h};
    const Layout layout{LayoutKind::image_column, m, h, h, w};
    std::vector<double> v(m * h);
    for (std::size_t j = 0; j < w; ++j) {
        for (std::size_t t = 0; t < m; ++t)
            for (std::size_t r = 0; r < h; ++r) v[t * h + r] = images[t](r, j);
        out.cts.push_back(engine.enc(v, layout));
    }
    return out;
}

ColumnEncodedImage encode_image_columns(Engine &engine, const Matrix &image) {
    return encode_image_columns(engine, std::span<const Matrix>(&image, 1));
}

ColumnEncodedImage conv_columns(Engine &engine, const ColumnEncodedImage &img, const Kernel &kernel) {
    const std::size_t k = kernel.k();
    if (k == 0 || kernel.weights.cols() != k) throw PreconditionError("conv_columns: kernel must be k x k");
    if (k > img.h || k > img.w) throw PreconditionError("conv_columns: kernel larger than the image");
    if (img.cts.size() != img.w) throw PreconditionError("conv_columns: expected one ciphertext per column");
    const std::size_t stride = img.stride == 0 ? img.h : img.stride;
    const std::size_t out_h = img.h - k + 1, out_w = img.w - k + 1;
    const std::size_t slots = engine.slots();

    // moved[j][p]: column j moved up by p. Slots past the valid rows of an
    // image may pick up the next image's pixels; the masks below drop them.
    std::vector<std::vector<Ciphertext>> moved(img.w);
    for (std::size_t j = 0; j < img.w; ++j) {
        moved[j].push_back(img.cts[j]);
        for (std::size_t p = 1; p < k; ++p) moved[j].push_back(engine.rot(img.cts[j], static_cast<long long>(p)));
    }

    auto valid_scaled = [&](double c) {
        std::vector<double> v(slots, 0.0);
        for (std::size_t t = 0; t < img.batch; ++t)
            for (std::size_t r = 0; r < out_h; ++r) v[t * stride + r] = c;
        return PlainMask(std::move(v));
    };
    const PlainMask bias = valid_scaled(kernel.bias);

    ColumnEncodedImage out{{}, out_h, out_w, img.batch, stride};
    const Layout layout{LayoutKind::image_column, img.batch, stride, out_h, out_w};
    for (std::size_t jo = 0; jo < out_w; ++jo) {
        Ciphertext acc;
        for (std::size_t q = 0; q < k; ++q)
            for (std::size_t p = 0; p < k; ++p) {
                Ciphertext term = engine.cmul(valid_scaled(kernel.weights(p, q)), moved[jo + q][p]);
                acc = acc.empty() ? term : engine.add(acc, term);
            }
        acc = engine.add_plain(bias, acc);
        out.cts.push_back(acc.with_layout(layout));
    }
    return out;
}

Matrix decode_columns(const Engine &engine, const ColumnEncodedImage &img, std::size_t t) {
    if (t >= img.batch) throw PreconditionError("decode_columns: image index out of range");
    if (img.cts.size() != img.w) throw PreconditionError("decode_columns: expected one ciphertext per column");
    const std::size_t stride = img.stride == 0 ? img.h : img.stride;
    Matrix out(img.h, img.w);
    for (std::size_t j = 0; j < img.w; ++j) {
        const auto v = engine.dec(img.cts[j]);
        for (std::size_t r = 0; r < img.h; ++r) out(r, j) = v[t * stride + r];
    }
    return out;
}

}  // namespace revolver
