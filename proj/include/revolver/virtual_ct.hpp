// SPDX-License-Identifier: Apache-2.0

// Virtual ciphertexts: a dataset ciphertext with m images row-packed at
// stride f behaves as m independent image ciphertexts. Add and Mul carry
// over unchanged; rotation needs the two-rotation vrot.

#pragma once

#include <cstddef>

#include "revolver/conv.hpp"
#include "revolver/engine.hpp"

namespace revolver {

struct VirtualLayout {
    std::size_t m = 0;  // images per ciphertext
    std::size_t f = 0;  // slots per image row
    std::size_t h = 0;
    std::size_t w = 0;

    std::size_t image_size() const { return h * w; }
    std::size_t pad() const { return f - h * w; }
    ImageShape shape() const { return {h, w}; }
    ImageTiling tiling() const { return {m, f}; }

    /// h*w <= f, m*f == slots, f a power of two.
    void validate(std::size_t slots) const;

    bool operator==(const VirtualLayout &) const = default;
};

/// Rotates every image prefix left by r (0 <= r < h*w); pad slots stay 0.
/// Two rotations, two filter cMuls, one Add.
Ciphertext vrot(Engine &engine, const Ciphertext &ct, const VirtualLayout &layout, std::size_t r);

Ciphertext vadd(Engine &engine, const Ciphertext &a, const Ciphertext &b);
Ciphertext vmul(Engine &engine, const Ciphertext &a, const Ciphertext &b);

/// Minimum pad that keeps every pre-mask window read of image t inside slots
/// that image owns: (k - 1) * (w + 1).
std::size_t required_pad(const VirtualLayout &layout, std::size_t k);

/// Convolves all m images at once. `span` must be tiled with the layout's
/// tiling. Cost is independent of m.
Ciphertext batched_conv(Engine &engine, const Ciphertext &ct, const VirtualLayout &layout, const KernelSpan &span,
                        ConvTrace *trace = nullptr);

struct Reformed {
    Ciphertext ct;
    VirtualLayout layout;
};

/// Compacts each image's top-left out_h x out_w block (row stride w) into its
/// first out_h*out_w slots. out_h cMuls, out_h - 1 rotations and adds.
Reformed reform(Engine &engine, const Ciphertext &ct, const VirtualLayout &layout, std::size_t out_h,
                std::size_t out_w);

}  // namespace revolver
