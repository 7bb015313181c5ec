// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include "revolver/cnn.hpp"
#include "revolver/errors.hpp"
#include "revolver/oracle.hpp"
#include "support.hpp"

using namespace revolver;

namespace {

std::vector<Matrix> random_images(std::size_t n) {
    std::vector<Matrix> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(rvtest::real_matrix(28, 28, 0.0, 1.0));
    return out;
}

}  // namespace

TEST_CASE("poly_activation evaluates the cubic with two levels") {
    Engine e(EngineParams{.slots = 8});
    const std::vector<double> xs = {0.0, 1.0, -1.0, 0.5, 2.0, -0.25, 3.0, 0.125};
    const Ciphertext ct = e.enc(xs);
    SUBCASE("identity") {
        const auto out = e.dec(poly_activation(e, ct, {0, 1, 0, 0}));
        for (std::size_t i = 0; i < xs.size(); ++i) CHECK(out[i] == doctest::Approx(xs[i]));
    }
    SUBCASE("first activation at zero is its constant") {
        const auto out = e.dec(poly_activation(e, ct, kAct1));
        CHECK(out[0] == doctest::Approx(-0.00015120704).epsilon(1e-12));
    }
    SUBCASE("second activation at one sums its coefficients") {
        const auto out = e.dec(poly_activation(e, ct, kAct2));
        CHECK(out[1] == doctest::Approx(-0.3449455).epsilon(1e-9));
    }
    SUBCASE("cost and depth") {
        e.reset_meter();
        const Ciphertext r = poly_activation(e, ct, kAct1);
        const OpMeter m = e.meter_snapshot();
        CHECK(m.mul_count == 2);
        CHECK(m.cmul_count == 2);
        CHECK(m.rot_count == 0);
        CHECK(r.depth() == 2);
    }
    SUBCASE("support zeroes the outside") {
        const std::vector<double> support = {1, 1, 0, 0, 1, 0, 0, 0};
        const auto out = e.dec(poly_activation(e, ct, kAct2, support));
        for (std::size_t i = 0; i < xs.size(); ++i) {
            if (support[i] == 0.0) CHECK(out[i] == 0.0);
            else CHECK(out[i] == doctest::Approx(eval_poly(kAct2, xs[i])));
        }
    }
}

TEST_CASE("batch plan arithmetic") {
    const BatchPlan p = BatchPlan::make(32768, 10000);
    CHECK(p.images_per_ct == 32);
    CHECK(p.batches == 313);
    CHECK(p.zero_fill == 16);
    CHECK(BatchPlan::make(32768, 32).batches == 1);
    CHECK(BatchPlan::make(32768, 33).batches == 2);
    CHECK_THROWS_AS(BatchPlan::make(32768, 1, 1000), PreconditionError);
}

TEST_CASE("fc_layer matches the affine oracle") {
    Engine e(EngineParams{.slots = 64});
    // 4 samples in a 4 x 16 layout, 8 inputs, 4 outputs.
    const Matrix x = rvtest::int_matrix(4, 8);
    const Matrix w = rvtest::int_matrix(4, 8);
    const std::vector<double> b = {1, -2, 3, 0};
    const EncodedFc fc = encode_fc(e, w, b, 1, 8, 4, 16);
    const PackedMatrix in = encode_tau_a(e, x, 16, 4);
    const PackedMatrix y = fc_layer(e, std::span<const PackedMatrix>(&in, 1), fc, FcMode::single);
    const Matrix got = decode_matrix(e, y, 4, 4);
    Matrix want = oracle_matmul(x, w.transpose());
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j) want(i, j) += b[j];
    CHECK(got == want);
}

TEST_CASE("fc_layer tiles inner and column blocks") {
    Engine e(EngineParams{.slots = 64});
    // m = 4 rows, so tile_p = 4 and 6 outputs need 2 column blocks; 2 inner blocks of 5.
    const Matrix x = rvtest::int_matrix(4, 10);
    const Matrix w = rvtest::int_matrix(6, 10);
    const std::vector<double> b = {1, 2, 3, 4, 5, 6};
    const EncodedFc fc = encode_fc(e, w, b, 2, 5, 4, 16);
    CHECK(fc.col_blocks == 2);
    CHECK(fc.tile_p == 4);
    std::vector<PackedMatrix> in = {encode_tau_a(e, x.block(0, 0, 4, 5), 16, 4),
                                    encode_tau_a(e, x.block(0, 5, 4, 5), 16, 4)};
    CHECK_THROWS_AS(fc_layer(e, in, fc, FcMode::single), PreconditionError);
    const Matrix got = decode_matrix(e, fc_layer(e, in, fc, FcMode::tiled), 4, 6);
    Matrix want = oracle_matmul(x, w.transpose());
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 6; ++j) want(i, j) += b[j];
    CHECK(got == want);
}

TEST_CASE("identity fc returns the input prefix") {
    Engine e(EngineParams{.slots = 64});
    const Matrix x = rvtest::int_matrix(4, 4);
    Matrix id(4, 4);
    for (std::size_t i = 0; i < 4; ++i) id(i, i) = 1;
    const std::vector<double> zero(4, 0.0);
    const EncodedFc fc = encode_fc(e, id, zero, 1, 4, 4, 16);
    const PackedMatrix in = encode_tau_a(e, x, 16, 4);
    CHECK(decode_matrix(e, fc_layer(e, std::span<const PackedMatrix>(&in, 1), fc, FcMode::single), 4, 4) == x);
}

TEST_CASE("conv layer and flatten follow the map-major oracle order") {
    Engine e;
    const ModelWeights w = random_weights(3);
    const EncodedModel model = provider_encode(e, w);
    const auto images = random_images(5);
    const Ciphertext batch = pack_batch(e, images);
    const VirtualLayout layout = model.input_layout();
    const auto maps = conv_layer(e, batch, layout, model.spans);
    REQUIRE(maps.size() == 4);
    std::vector<Ciphertext> act;
    for (const auto &m : maps) act.push_back(poly_activation(e, m, w.act1));
    const auto flat = flatten_maps(e, act, layout, 26);
    const Matrix f = decode_flattened(e, flat, 26);
    CHECK(f.cols() == 2704);
    for (std::size_t t = 0; t < images.size(); ++t) {
        const auto want = oracle_features(w, images[t]);
        double d = 0.0;
        for (std::size_t i = 0; i < want.size(); ++i) d = std::max(d, std::abs(want[i] - f(t, i)));
        CHECK(d < 1e-9);
    }
    // Padding rows stay zero apart from the activation constant, which the support mask removes.
    for (std::size_t i = 0; i < f.cols(); ++i) CHECK(f(31, i) == doctest::Approx(eval_poly(w.act1, w.conv_bias[i / 676])));
}

TEST_CASE("flatten is a bijection onto the 2704 prefix") {
    Engine e;
    const VirtualLayout layout{32, 1024, 28, 28};
    // Map c carries the distinct value 1 + c * 10000 + t * 1000000 + anchor index.
    std::vector<Ciphertext> maps;
    for (std::size_t c = 0; c < 4; ++c) {
        std::vector<double> v(e.slots(), 0.0);
        for (std::size_t t = 0; t < 32; ++t)
            for (std::size_t r = 0; r < 26; ++r)
                for (std::size_t q = 0; q < 26; ++q) v[t * 1024 + r * 28 + q] = 1 + c * 10000 + t * 1000000 + r * 26 + q;
        maps.push_back(e.enc(v));
    }
    const Matrix f = decode_flattened(e, flatten_maps(e, maps, layout, 26), 26);
    for (std::size_t t = 0; t < 32; ++t)
        for (std::size_t i = 0; i < 2704; ++i) CHECK(f(t, i) == 1 + (i / 676) * 10000 + t * 1000000 + i % 676);
}

TEST_CASE("forward agrees with the oracle and has constant depth") {
    Engine e;
    const ModelWeights w = random_weights(11);
    const EncodedModel model = provider_encode(e, w);
    CHECK(model.ciphertext_count() == 52);
    const auto images = random_images(32);
    e.reset_meter();
    ForwardTrace trace;
    const PackedMatrix out = forward(e, pack_batch(e, images), model, &trace);
    const Matrix got = decode_scores(e, out, 32);
    const Matrix want = oracle_forward(w, images);
    CHECK(rvtest::max_abs_diff(got, want) < 1e-6);
    CHECK(argmax_decide(got) == argmax_rows(want));
    CHECK(e.meter_snapshot().max_depth == kPipelineDepth);
    CHECK(trace.conv.mul_count == 4 * 9);
}

TEST_CASE("forward on zero images gives constants-only scores") {
    Engine e;
    const ModelWeights w = random_weights(5);
    const EncodedModel model = provider_encode(e, w);
    const std::vector<Matrix> zeros(3, Matrix(28, 28));
    const Matrix got = decode_scores(e, forward(e, pack_batch(e, zeros), model), 3);
    const Matrix want = oracle_forward(w, zeros);
    CHECK(rvtest::max_abs_diff(got, want) < 1e-9);
    for (std::size_t c = 0; c < 10; ++c) CHECK(got(0, c) == doctest::Approx(got(2, c)));
}

TEST_CASE("argmax ties go to the lowest index") {
    Matrix s(2, 10);
    s(0, 9) = 1.0;
    const auto l = argmax_decide(s);
    CHECK(l[0] == 9);
    CHECK(l[1] == 0);
}

TEST_CASE("degenerate 1x1 kernels give one span ciphertext each") {
    Engine e;
    const ModelWeights w = random_weights(2, 1);
    const EncodedModel model = provider_encode(e, w);
    CHECK(model.spans[0].span_cts.size() == 1);
    const auto images = random_images(2);
    const Matrix got = decode_scores(e, forward(e, pack_batch(e, images), model), 2);
    CHECK(rvtest::max_abs_diff(got, oracle_forward(w, images)) < 1e-6);
}
