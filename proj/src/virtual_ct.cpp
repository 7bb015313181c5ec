// SPDX-License-Identifier: Apache-2.0

#include "revolver/virtual_ct.hpp"

#include <string>
#include <vector>

#include "revolver/errors.hpp"
#include "revolver/matrix.hpp"

namespace revolver {

namespace {

// 1 at slots [begin, end) of every image row.
PlainMask per_image_range(std::size_t slots, const VirtualLayout &layout, std::size_t begin, std::size_t end) {
    std::vector<double> v(slots, 0.0);
    for (std::size_t i = 0; i < layout.m; ++i)
        for (std::size_t j = begin; j < end; ++j) v[i * layout.f + j] = 1.0;
    return PlainMask::filter(std::move(v));
}

}  // namespace

void VirtualLayout::validate(std::size_t slots) const {
    if (m == 0 || h == 0 || w == 0) throw PreconditionError("virtual layout: dimensions must be positive");
    if (!is_power_of_two(f)) throw PreconditionError("virtual layout: row stride f must be a power of two");
    if (h * w > f)
        throw PreconditionError("virtual layout: image " + std::to_string(h) + "x" + std::to_string(w) +
                                " exceeds row stride " + std::to_string(f));
    if (m * f != slots)
        throw PreconditionError("virtual layout: m*f = " + std::to_string(m * f) + " but engine has " +
                                std::to_string(slots) + " slots");
}

Ciphertext vrot(Engine &engine, const Ciphertext &ct, const VirtualLayout &layout, std::size_t r) {
    layout.validate(engine.slots());
    const std::size_t hw = layout.image_size();
    if (r >= hw) throw PreconditionError("vrot: r must lie in [0, h*w)");

    const Ciphertext head = engine.cmul(per_image_range(engine.slots(), layout, 0, hw - r),
                                        engine.rot(ct, static_cast<long long>(r)));
    // Left by slots - hw + r, i.e. right by hw - r.
    const Ciphertext tail = engine.cmul(per_image_range(engine.slots(), layout, hw - r, hw),
                                        engine.rot(ct, static_cast<long long>(engine.slots() - hw + r)));
    return engine.add(head, tail);
}

Ciphertext vadd(Engine &engine, const Ciphertext &a, const Ciphertext &b) {
    if (!(a.layout() == b.layout())) throw PreconditionError("vadd: layout mismatch");
    return engine.add(a, b);
}

Ciphertext vmul(Engine &engine, const Ciphertext &a, const Ciphertext &b) {
    if (!(a.layout() == b.layout())) throw PreconditionError("vmul: layout mismatch");
    return engine.mul(a, b);
}

std::size_t required_pad(const VirtualLayout &layout, std::size_t k) { return (k - 1) * (layout.w + 1); }

Ciphertext batched_conv(Engine &engine, const Ciphertext &ct, const VirtualLayout &layout, const KernelSpan &span,
                        ConvTrace *trace) {
    layout.validate(engine.slots());
    if (!(span.shape == layout.shape()) || !(span.tiling == layout.tiling()))
        throw PreconditionError("batched_conv: kernel span is not tiled for this layout");
    if (layout.pad() < required_pad(layout, span.k))
        throw PreconditionError("batched_conv: pad " + std::to_string(layout.pad()) + " below required margin " +
                                std::to_string(required_pad(layout, span.k)));
    return conv(engine, ct, span, trace);
}

Reformed reform(Engine &engine, const Ciphertext &ct, const VirtualLayout &layout, std::size_t out_h,
                std::size_t out_w) {
    layout.validate(engine.slots());
    if (out_h == 0 || out_w == 0 || out_h > layout.h || out_w > layout.w)
        throw PreconditionError("reform: block exceeds the image");

    Ciphertext acc;
    for (std::size_t r = 0; r < out_h; ++r) {
        const std::size_t start = r * layout.w;
        Ciphertext row = engine.cmul(per_image_range(engine.slots(), layout, start, start + out_w), ct);
        if (r == 0) {
            acc = row;
            continue;
        }
        row = engine.rot(row, static_cast<long long>(r * (layout.w - out_w)));
        acc = engine.add(acc, row);
    }
    VirtualLayout next = layout;
    next.h = out_h;
    next.w = out_w;
    const Layout tag{LayoutKind::dataset, next.m, next.f, next.h, next.w};
    return {acc.with_layout(tag), next};
}

}  // namespace revolver
