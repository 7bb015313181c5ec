// SPDX-License-Identifier: Apache-2.0

#include "revolver/oracle.hpp"

#include "revolver/errors.hpp"

namespace revolver {

Matrix oracle_matmul(const Matrix &a, const Matrix &b) {
    if (a.cols() != b.rows()) throw PreconditionError("oracle_matmul: inner dimensions differ");
    Matrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < b.cols(); ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
            c(i, j) = s;
        }
    return c;
}

Matrix oracle_conv(const Matrix &image, const Matrix &kernel, double k0) {
    const std::size_t k = kernel.rows();
    if (k == 0 || kernel.cols() != k) throw PreconditionError("oracle_conv: kernel must be square");
    if (k > image.rows() || k > image.cols()) throw PreconditionError("oracle_conv: kernel larger than the image");
    Matrix out(image.rows() - k + 1, image.cols() - k + 1);
    for (std::size_t i = 0; i < out.rows(); ++i)
        for (std::size_t j = 0; j < out.cols(); ++j) {
            double s = k0;
            for (std::size_t p = 0; p < k; ++p)
                for (std::size_t q = 0; q < k; ++q) s += kernel(p, q) * image(i + p, j + q);
            out(i, j) = s;
        }
    return out;
}

std::vector<double> oracle_features(const ModelWeights &w, const Matrix &image) {
    std::vector<double> f;
    f.reserve(w.features());
    for (std::size_t c = 0; c < kMaps; ++c) {
        const Matrix map = oracle_conv(image, w.conv[c], w.conv_bias[c]);
        for (double x : map.data()) f.push_back(eval_poly(w.act1, x));
    }
    return f;
}

Matrix oracle_forward(const ModelWeights &w, std::span<const Matrix> images) {
    w.validate();
    Matrix scores(images.size(), kClasses);
    for (std::size_t t = 0; t < images.size(); ++t) {
        if (images[t].rows() != kImageSide || images[t].cols() != kImageSide)
            throw PreconditionError("oracle_forward: images must be 28x28");
        const std::vector<double> f = oracle_features(w, images[t]);
        std::vector<double> hidden(kHidden);
        for (std::size_t o = 0; o < kHidden; ++o) {
            double s = w.fc1_bias[o];
            for (std::size_t i = 0; i < f.size(); ++i) s += w.fc1(o, i) * f[i];
            hidden[o] = eval_poly(w.act2, s);
        }
        for (std::size_t o = 0; o < kClasses; ++o) {
            double s = w.fc2_bias[o];
            for (std::size_t i = 0; i < kHidden; ++i) s += w.fc2(o, i) * hidden[i];
            scores(t, o) = s;
        }
    }
    return scores;
}

std::vector<std::uint8_t> argmax_rows(const Matrix &scores) {
    std::vector<std::uint8_t> out(scores.rows());
    for (std::size_t i = 0; i < scores.rows(); ++i) {
        std::size_t best = 0;
        for (std::size_t j = 1; j < scores.cols(); ++j)
            if (scores(i, j) > scores(i, best)) best = j;
        out[i] = static_cast<std::uint8_t>(best);
    }
    return out;
}

}  // namespace revolver
