// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <future>
#include <vector>

#include "revolver/engine.hpp"
#include "revolver/errors.hpp"
#include "support.hpp"

using namespace revolver;

namespace {

std::vector<double> v(std::initializer_list<double> xs) { return xs; }

}  // namespace

TEST_CASE("default parameters mirror the published configuration") {
    const EngineParams p;
    CHECK(p.slots == 32768);
    CHECK(p.log_q == 1200);
    CHECK(p.log_n == 16);
    CHECK(p.delta == 45);
    CHECK(p.delta_c == 20);
    CHECK((std::size_t{1} << (p.log_n - 1)) == p.slots);
}

TEST_CASE("slots must be a power of two of at least 2") {
    CHECK_THROWS_AS(Engine(EngineParams{.slots = 0}), PreconditionError);
    CHECK_THROWS_AS(Engine(EngineParams{.slots = 1}), PreconditionError);
    CHECK_THROWS_AS(Engine(EngineParams{.slots = 12}), PreconditionError);
    CHECK_NOTHROW(Engine(EngineParams{.slots = 2}));
}

TEST_CASE("config file loading") {
    const auto path = std::filesystem::temp_directory_path() / "rv_engine_cfg.json";
    {
        std::ofstream(path) << R"({"slots": 1024, "logq": 600, "delta_c": 18})";
    }
    const EngineParams p = EngineParams::load(path);
    CHECK(p.slots == 1024);
    CHECK(p.log_q == 600);
    CHECK(p.log_n == 16);
    CHECK(p.delta_c == 18);
    {
        std::ofstream(path) << R"({"slots": 1000})";
    }
    CHECK_THROWS_AS(EngineParams::load(path), PreconditionError);
    {
        std::ofstream(path) << "{not json";
    }
    CHECK_THROWS_AS(EngineParams::load(path), IngestError);
    std::filesystem::remove(path);
}

TEST_CASE("enc pads with zeros and counts") {
    Engine e(EngineParams{.slots = 4});
    const Ciphertext ct = e.enc(v({1, 2, 3}));
    CHECK(e.dec(ct) == v({1, 2, 3, 0}));
    CHECK(ct.depth() == 0);
    CHECK(e.dec(e.enc(std::vector<double>{})) == v({0, 0, 0, 0}));
    CHECK(e.meter_snapshot().enc_count == 2);
    CHECK_THROWS_AS(e.enc(v({1, 2, 3, 4, 5})), CapacityError);
}

TEST_CASE("enc of one MNIST image fills the leading 784 slots") {
    Engine e;
    std::vector<double> px(784, 0.5);
    const auto out = e.dec(e.enc(px));
    CHECK(out.size() == 32768);
    CHECK(out[783] == 0.5);
    CHECK(out[784] == 0.0);
}

TEST_CASE("add, mul, cmul semantics and depth") {
    Engine e(EngineParams{.slots = 2});
    const Ciphertext a = e.enc(v({1, 2})), b = e.enc(v({3, 4}));
    CHECK(e.dec(e.add(a, b)) == v({4, 6}));
    CHECK(e.dec(e.add(e.enc(v({1})), e.enc(v({2})))) == v({3, 0}));
    const Ciphertext p = e.mul(e.enc(v({2, 3})), e.enc(v({4, 5})));
    CHECK(e.dec(p) == v({8, 15}));
    CHECK(p.depth() == 1);
    CHECK(e.add(p, a).depth() == 1);
    CHECK(e.mul(p, a).depth() == 2);
    CHECK(e.dec(e.mul(a, e.enc(v({1, 1})))) == e.dec(a));

    const Ciphertext f = e.cmul(PlainMask::filter(v({1, 0})), e.enc(v({7, 9})));
    CHECK(e.dec(f) == v({7, 0}));
    CHECK(f.depth() == 1);
    CHECK(e.dec(e.cmul(PlainMask(v({1, 1})), a)) == e.dec(a));

    const Ciphertext q = e.add_plain(PlainMask(v({0.5, -1})), a);
    CHECK(e.dec(q) == v({1.5, 1}));
    CHECK(q.depth() == 0);
}

TEST_CASE("filter masks hold only zeros and ones") {
    CHECK_THROWS_AS(PlainMask::filter(v({1, 0.5})), PreconditionError);
    CHECK(PlainMask::filter(v({1, 0})).role() == MaskRole::filter);
}

TEST_CASE("rotation") {
    Engine e(EngineParams{.slots = 4});
    const Ciphertext ct = e.enc(v({1, 2, 3, 4}));
    CHECK(e.dec(e.rot(ct, 1)) == v({2, 3, 4, 1}));
    CHECK(e.dec(e.rot(ct, -1)) == v({4, 1, 2, 3}));
    e.reset_meter();
    CHECK(e.dec(e.rot(ct, 0)) == e.dec(ct));
    CHECK(e.meter_snapshot().rot_count == 1);
    CHECK(e.dec(e.rot(ct, 4)) == e.dec(ct));
    CHECK(e.rot(e.mul(ct, ct), 3).depth() == 1);
}

TEST_CASE("property: rot composes additively") {
    Engine e(EngineParams{.slots = 16});
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> xs(16);
        for (double &x : xs) x = rvtest::randint(-50, 50);
        const Ciphertext ct = e.enc(xs);
        const long long a = rvtest::randint(-40, 40), b = rvtest::randint(-40, 40);
        CHECK(e.dec(e.rot(e.rot(ct, a), b)) == e.dec(e.rot(ct, a + b)));
    }
}

TEST_CASE("property: dec of enc is exact and slot count never changes") {
    Engine e(EngineParams{.slots = 32});
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> xs(static_cast<std::size_t>(rvtest::randint(0, 32)));
        for (double &x : xs) x = rvtest::uniform(-1e6, 1e6);
        const Ciphertext ct = e.enc(xs);
        auto out = e.dec(ct);
        REQUIRE(out.size() == 32);
        for (std::size_t i = 0; i < 32; ++i) CHECK(out[i] == (i < xs.size() ? xs[i] : 0.0));
        CHECK(e.mul(e.rot(ct, 3), ct).size() == 32);
    }
}

TEST_CASE("mismatched slot counts are engine errors") {
    Engine small(EngineParams{.slots = 4}), big(EngineParams{.slots = 8});
    const Ciphertext a = small.enc(v({1})), b = big.enc(v({1}));
    CHECK_THROWS_AS(small.add(a, b), EngineError);
    CHECK_THROWS_AS(small.mul(a, b), EngineError);
    CHECK_THROWS_AS(small.cmul(PlainMask(std::vector<double>(8, 1.0)), a), EngineError);
    CHECK_THROWS_AS(small.rot(b, 1), EngineError);
}

TEST_CASE("meter snapshot, merge and reset") {
    Engine e(EngineParams{.slots = 4});
    CHECK(e.meter_snapshot() == OpMeter{});
    const Ciphertext a = e.enc(v({1}));
    e.mul(a, a);
    const OpMeter m = e.meter_snapshot();
    CHECK(m.mul_count == 1);
    CHECK(m.max_depth == 1);
    CHECK(e.meter_snapshot() == m);

    OpMeter x, y;
    x.add_count = 2;
    x.max_depth = 5;
    y.add_count = 3;
    y.rot_count = 1;
    y.max_depth = 2;
    OpMeter xy = x, yx = y;
    xy.merge(y);
    yx.merge(x);
    CHECK(xy == yx);
    CHECK(xy.add_count == 5);
    CHECK(xy.max_depth == 5);

    e.reset_meter();
    CHECK(e.meter_snapshot() == OpMeter{});
}

TEST_CASE("concurrent use keeps exact counts") {
    Engine e(EngineParams{.slots = 64});
    const Ciphertext a = e.enc(std::vector<double>(64, 1.0));
    e.reset_meter();
    std::vector<std::future<void>> jobs;
    for (int t = 0; t < 8; ++t)
        jobs.push_back(std::async(std::launch::async, [&] {
            for (int i = 0; i < 500; ++i) e.rot(e.mul(a, a), i);
        }));
    for (auto &j : jobs) j.get();
    const OpMeter m = e.meter_snapshot();
    CHECK(m.mul_count == 4000);
    CHECK(m.rot_count == 4000);
    CHECK(m.max_depth == 1);
}
