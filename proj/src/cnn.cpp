// SPDX-License-Identifier: Apache-2.0

#include "revolver/cnn.hpp"

#include <algorithm>
#include <future>
#include <string>

#include "revolver/errors.hpp"

namespace revolver {

namespace {

PlainMask scaled(std::span<const double> support, double c) {
    std::vector<double> v(support.begin(), support.end());
    for (double &x : v) x *= c;
    return PlainMask(std::move(v));
}

// 1 at columns [0, cols) of rows [0, m) in an m x f layout.
std::vector<double> leading_columns(std::size_t slots, std::size_t m, std::size_t f, std::size_t cols) {
    std::vector<double> v(slots, 0.0);
    for (std::size_t i = 0; i < m; ++i) std::fill_n(v.begin() + static_cast<std::ptrdiff_t>(i * f), cols, 1.0);
    return v;
}

// 1 on the top-left side x side block of every image.
std::vector<double> anchor_block(std::size_t slots, const VirtualLayout &layout, std::size_t side) {
    std::vector<double> v(slots, 0.0);
    for (std::size_t t = 0; t < layout.m; ++t)
        for (std::size_t r = 0; r < side; ++r)
            std::fill_n(v.begin() + static_cast<std::ptrdiff_t>(t * layout.f + r * layout.w), side, 1.0);
    return v;
}

class Stopwatch {
  public:
    explicit Stopwatch(const Engine &e) : engine_(e), mark_(e.meter_snapshot()) {}
    OpMeter lap() {
        const OpMeter now = engine_.meter_snapshot();
        const OpMeter d = now.since(mark_);
        mark_ = now;
        return d;
    }

  private:
    const Engine &engine_;
    OpMeter mark_;
};

}  // namespace

Ciphertext poly_activation(Engine &engine, const Ciphertext &ct, const Poly3 &coeffs) {
    const std::vector<double> ones(engine.slots(), 1.0);
    return poly_activation(engine, ct, coeffs, ones);
}

Ciphertext poly_activation(Engine &engine, const Ciphertext &ct, const Poly3 &coeffs, std::span<const double> support) {
    if (support.size() != engine.slots()) throw EngineError("poly_activation: support size differs from slots");
    const Ciphertext x2 = engine.mul(ct, ct);
    Ciphertext t = engine.add_plain(scaled(support, coeffs[2]), engine.cmul(scaled(support, coeffs[3]), ct));
    const Ciphertext cubic = engine.mul(x2, t);
    const Ciphertext linear = engine.cmul(scaled(support, coeffs[1]), ct);
    return engine.add_plain(scaled(support, coeffs[0]), engine.add(cubic, linear)).with_layout(ct.layout());
}

std::vector<Ciphertext> conv_layer(Engine &engine, const Ciphertext &ct, const VirtualLayout &layout,
                                   std::span<const KernelSpan> spans, bool parallel) {
    if (!(ct.layout().kind == LayoutKind::dataset) && !(ct.layout().kind == LayoutKind::none))
        throw PreconditionError("conv_layer: input must be a dataset ciphertext");
    std::vector<Ciphertext> out(spans.size());
    if (parallel && spans.size() > 1) {
        std::vector<std::future<Ciphertext>> jobs;
        for (const KernelSpan &s : spans)
            jobs.push_back(std::async(std::launch::async, [&, sp = &s] { return batched_conv(engine, ct, layout, *sp); }));
        for (std::size_t c = 0; c < spans.size(); ++c) out[c] = jobs[c].get();
    } else {
        for (std::size_t c = 0; c < spans.size(); ++c) out[c] = batched_conv(engine, ct, layout, spans[c]);
    }
    return out;
}

std::vector<PackedMatrix> flatten_maps(Engine &engine, std::span<const Ciphertext> maps, const VirtualLayout &layout,
                                       std::size_t side) {
    if (side * side > layout.f) throw CapacityError("flatten_maps: map exceeds the image stride");
    std::vector<PackedMatrix> out;
    for (const Ciphertext &map : maps) {
        const Reformed r = reform(engine, map, layout, side, side);
        const Layout tag{LayoutKind::matrix, layout.m, layout.f, 0, 0};
        out.push_back({r.ct.with_layout(tag), {layout.m, layout.f}, Encoding::database, 0});
    }
    return out;
}

Matrix decode_flattened(const Engine &engine, std::span<const PackedMatrix> maps, std::size_t side) {
    if (maps.empty()) throw PreconditionError("decode_flattened: no maps");
    const std::size_t m = maps[0].shape.rows, s2 = side * side;
    Matrix out(m, maps.size() * s2);
    for (std::size_t c = 0; c < maps.size(); ++c) {
        const Matrix block = decode_matrix(engine, maps[c], m, s2);
        for (std::size_t t = 0; t < m; ++t)
            for (std::size_t i = 0; i < s2; ++i) out(t, c * s2 + i) = block(t, i);
    }
    return out;
}

EncodedFc encode_fc(Engine &engine, const Matrix &w, std::span<const double> bias, std::size_t inner_blocks,
                    std::size_t segment, std::size_t m, std::size_t width) {
    if (w.cols() != inner_blocks * segment)
        throw PreconditionError("encode_fc: weight columns " + std::to_string(w.cols()) + " != " +
                                std::to_string(inner_blocks) + " x " + std::to_string(segment));
    if (bias.size() != w.rows()) throw PreconditionError("encode_fc: bias length differs from output count");
    if (segment > width) throw CapacityError("encode_fc: input segment wider than the layout");
    if (!is_power_of_two(m) || !is_power_of_two(width))
        throw PreconditionError("encode_fc: layout dimensions must be powers of two");

    EncodedFc fc;
    fc.inner_blocks = inner_blocks;
    fc.segment = segment;
    fc.out_dim = w.rows();
    fc.tile_p = std::min(next_power_of_two(fc.out_dim), m);
    fc.col_blocks = (fc.out_dim + fc.tile_p - 1) / fc.tile_p;
    if (fc.col_blocks * fc.tile_p > width) throw CapacityError("encode_fc: outputs do not fit in one row");
    const MatmulPlan plan = MatmulPlan::make(m, width, fc.tile_p, engine.slots());
    if (plan.rows != m || plan.width != width) throw PreconditionError("encode_fc: layout needs padding");

    for (std::size_t k = 0; k < inner_blocks; ++k)
        for (std::size_t c = 0; c < fc.col_blocks; ++c) {
            // B = transpose of W's block: n = segment rows, tile_p columns.
            Matrix b(segment, fc.tile_p);
            for (std::size_t r = 0; r < segment; ++r)
                for (std::size_t j = 0; j < fc.tile_p && c * fc.tile_p + j < fc.out_dim; ++j)
                    b(r, j) = w(c * fc.tile_p + j, k * segment + r);
            fc.tiles.push_back(encode_tau_b(engine, b, m, width));
        }
    const Layout layout{LayoutKind::matrix, m, width, 0, 0};
    for (std::size_t c = 0; c < fc.col_blocks; ++c) {
        std::vector<double> v(m * width, 0.0);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < fc.tile_p && c * fc.tile_p + j < fc.out_dim; ++j)
                v[i * width + j] = bias[c * fc.tile_p + j];
        fc.biases.push_back(engine.enc(v, layout));
    }
    return fc;
}

PackedMatrix fc_layer(Engine &engine, std::span<const PackedMatrix> inputs, const EncodedFc &fc, FcMode mode,
                      bool parallel) {
    if (inputs.size() != fc.inner_blocks)
        throw PreconditionError("fc_layer: expected " + std::to_string(fc.inner_blocks) + " input blocks, got " +
                                std::to_string(inputs.size()));
    if (mode == FcMode::single && (fc.inner_blocks != 1 || fc.col_blocks != 1))
        throw PreconditionError("fc_layer: single mode needs a one-tile layer");
    if (fc.tiles.size() != fc.inner_blocks * fc.col_blocks || fc.biases.size() != fc.col_blocks)
        throw PreconditionError("fc_layer: encoded layer is incomplete");

    auto column = [&](std::size_t c) {
        std::optional<Ciphertext> acc = fc.biases[c];
        PackedMatrix out;
        for (std::size_t k = 0; k < fc.inner_blocks; ++k) {
            out = matmul(engine, inputs[k], fc.tiles[k * fc.col_blocks + c], acc);
            acc = out.ct;
        }
        return out;
    };
    std::vector<PackedMatrix> cols(fc.col_blocks);
    if (parallel && fc.col_blocks > 1) {
        std::vector<std::future<PackedMatrix>> jobs;
        for (std::size_t c = 0; c < fc.col_blocks; ++c) jobs.push_back(std::async(std::launch::async, column, c));
        for (std::size_t c = 0; c < fc.col_blocks; ++c) cols[c] = jobs[c].get();
    } else {
        for (std::size_t c = 0; c < fc.col_blocks; ++c) cols[c] = column(c);
    }
    return concat_column_tiles(engine, cols, fc.tile_p);
}

std::size_t EncodedModel::ciphertext_count() const {
    std::size_t n = 0;
    for (const KernelSpan &s : spans) n += s.span_cts.size() + 1;
    n += fc1.tiles.size() + fc1.biases.size();
    n += fc2.tiles.size() + fc2.biases.size();
    return n;
}

EncodedModel provider_encode(Engine &engine, const ModelWeights &w, std::size_t stride) {
    w.validate();
    const BatchPlan plan = BatchPlan::make(engine.slots(), 0, stride);
    EncodedModel model;
    model.k = w.k();
    model.stride = stride;
    model.images_per_ct = plan.images_per_ct;
    model.act1 = w.act1;
    model.act2 = w.act2;

    const VirtualLayout layout = model.input_layout();
    layout.validate(engine.slots());
    if (layout.pad() < required_pad(layout, model.k))
        throw CapacityError("provider_encode: stride " + std::to_string(stride) + " leaves pad " +
                            std::to_string(layout.pad()) + " below the margin for k=" + std::to_string(model.k));
    for (std::size_t c = 0; c < kMaps; ++c)
        model.spans.push_back(
            kernel_spanner(engine, Kernel{w.conv[c], w.conv_bias[c]}, layout.shape(), layout.tiling()));

    const std::size_t side = w.map_side();
    const std::size_t m = model.images_per_ct;
    model.fc1 = encode_fc(engine, w.fc1, w.fc1_bias, kMaps, side * side, m, stride);
    model.fc2 = encode_fc(engine, w.fc2, w.fc2_bias, 1, kHidden, m, stride);
    return model;
}

Ciphertext pack_batch(Engine &engine, std::span<const Matrix> images, std::size_t stride) {
    const BatchPlan plan = BatchPlan::make(engine.slots(), images.size(), stride);
    if (images.size() > plan.images_per_ct)
        throw CapacityError("pack_batch: " + std::to_string(images.size()) + " images exceed " +
                            std::to_string(plan.images_per_ct) + " per ciphertext");
    const std::size_t h = images.empty() ? kImageSide : images[0].rows();
    const std::size_t w = images.empty() ? kImageSide : images[0].cols();
    if (h * w > stride) throw CapacityError("pack_batch: image larger than the stride");
    std::vector<double> v(engine.slots(), 0.0);
    for (std::size_t t = 0; t < images.size(); ++t) {
        if (images[t].rows() != h || images[t].cols() != w)
            throw PreconditionError("pack_batch: images differ in shape");
        std::copy(images[t].data().begin(), images[t].data().end(),
                  v.begin() + static_cast<std::ptrdiff_t>(t * stride));
    }
    return engine.enc(v, Layout{LayoutKind::dataset, images.size(), stride, h, w});
}

std::vector<Matrix> unpack_batch(const Engine &engine, const Ciphertext &ct, std::size_t count, std::size_t stride,
                                 std::size_t h, std::size_t w) {
    if (count * stride > ct.size()) throw CapacityError("unpack_batch: count exceeds the ciphertext");
    const auto v = engine.dec(ct);
    std::vector<Matrix> out;
    for (std::size_t t = 0; t < count; ++t) {
        Matrix m(h, w);
        std::copy_n(v.begin() + static_cast<std::ptrdiff_t>(t * stride), h * w, m.data().begin());
        out.push_back(std::move(m));
    }
    return out;
}

PackedMatrix forward(Engine &engine, const Ciphertext &batch, const EncodedModel &model, ForwardTrace *trace,
                     bool parallel) {
    if (batch.size() != engine.slots()) throw EngineError("forward: batch slot count differs from the engine");
    if (model.spans.size() != kMaps) throw PreconditionError("forward: model needs one span per feature map");
    const VirtualLayout layout = model.input_layout();
    const std::size_t side = kImageSide - model.k + 1;
    Stopwatch sw(engine);

    const std::vector<Ciphertext> maps = conv_layer(engine, batch, layout, model.spans, parallel);
    if (trace) trace->conv = sw.lap();

    const std::vector<double> anchors = anchor_block(engine.slots(), layout, side);
    std::vector<Ciphertext> activated;
    for (const Ciphertext &c : maps) activated.push_back(poly_activation(engine, c, model.act1, anchors));
    if (trace) trace->act1 = sw.lap();

    const std::vector<PackedMatrix> flat = flatten_maps(engine, activated, layout, side);
    if (trace) trace->flatten = sw.lap();

    PackedMatrix hidden = fc_layer(engine, flat, model.fc1, FcMode::tiled, parallel);
    if (trace) trace->fc1 = sw.lap();

    const std::vector<double> hidden_support =
        leading_columns(engine.slots(), layout.m, layout.f, model.fc1.out_dim);
    hidden.ct = poly_activation(engine, hidden.ct, model.act2, hidden_support);
    if (trace) trace->act2 = sw.lap();

    const FcMode mode = model.fc2.tiles.size() == 1 ? FcMode::single : FcMode::tiled;
    PackedMatrix scores = fc_layer(engine, std::span<const PackedMatrix>(&hidden, 1), model.fc2, mode, parallel);
    if (trace) trace->fc2 = sw.lap();
    return scores;
}

Matrix decode_scores(const Engine &engine, const PackedMatrix &scores, std::size_t count) {
    if (count > scores.shape.rows) throw PreconditionError("decode_scores: more rows requested than packed");
    return decode_matrix(engine, scores, count, kClasses);
}

std::vector<std::uint8_t> argmax_decide(const Matrix &scores) {
    std::vector<std::uint8_t> labels;
    for (std::size_t t = 0; t < scores.rows(); ++t) {
        const auto row = scores.row(t);
        labels.push_back(static_cast<std::uint8_t>(std::max_element(row.begin(), row.end()) - row.begin()));
    }
    return labels;
}

}  // namespace revolver
