// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include "revolver/errors.hpp"
#include "revolver/matmul.hpp"
#include "revolver/oracle.hpp"
#include "support.hpp"

using namespace revolver;

TEST_CASE("row_shifter general path") {
    Engine e(EngineParams{.slots = 16});
    // m = 3, p = 2: rows col0, col1, col0 -> col1, col0, col1.
    const Matrix b{{1, 2}, {3, 4}, {5, 6}, {7, 8}};
    const PackedMatrix bbar = encode_tau_b(e, b, 3);
    e.reset_meter();
    const PackedMatrix s = row_shifter(e, bbar, 2, 0);
    const OpMeter m = e.meter_snapshot();
    CHECK(decode_matrix(e, s) == Matrix{{2, 4, 6, 8}, {1, 3, 5, 7}, {2, 4, 6, 8}});
    CHECK(m.rot_count == 2);
    CHECK(m.cmul_count == 2);
    CHECK(m.add_count == 1);
    CHECK_THROWS_AS(row_shifter(e, bbar, 2, 2), PreconditionError);
}

TEST_CASE("row_shifter two-row example") {
    Engine e(EngineParams{.slots = 8});
    const Matrix b{{1, 2}, {3, 4}, {5, 6}, {7, 8}};
    const PackedMatrix bbar = encode_tau_b(e, b, 2);
    e.reset_meter();
    const PackedMatrix s = row_shifter(e, bbar, 2, 0);
    CHECK(decode_matrix(e, s) == Matrix{{2, 4, 6, 8}, {1, 3, 5, 7}});
    // m mod p == 0 in a full block: a single rotation by n.
    CHECK(e.meter_snapshot().rot_count == 1);
    CHECK(e.dec(s.ct) == e.dec(e.rot(bbar.ct, 4)));
}

TEST_CASE("row_shifter with p = 1 leaves the values alone") {
    Engine e(EngineParams{.slots = 8});
    const PackedMatrix bbar = encode_tau_b(e, Matrix{{1}, {2}, {3}, {4}}, 2);
    CHECK(decode_matrix(e, row_shifter(e, bbar, 1, 0)) == decode_matrix(e, bbar));
}

TEST_CASE("property: revolver state idx + 1 holds column (i + idx + 1) mod p") {
    Engine e(EngineParams{.slots = 256});
    for (int trial = 0; trial < 80; ++trial) {
        const std::size_t p = rvtest::randint(1, 6), m = rvtest::randint(static_cast<int>(p), 12);
        const std::size_t n = std::size_t{1} << rvtest::randint(0, 3);
        if (m * n > 256) continue;
        const Matrix b = rvtest::int_matrix(n, p);
        const PackedMatrix bbar = encode_tau_b(e, b, m);
        const std::size_t idx = rvtest::randint(0, static_cast<int>(p) - 1);
        const Matrix got = decode_matrix(e, row_shifter(e, bbar, p, idx));
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t k = 0; k < n; ++k) CHECK(got(i, k) == b(k, (i + idx + 1) % p));
    }
}

TEST_CASE("result filter") {
    auto ones = [](const PlainMask &mask) {
        std::vector<std::size_t> at;
        for (std::size_t i = 0; i < mask.size(); ++i)
            if (mask.values()[i] == 1.0) at.push_back(i);
        return at;
    };
    CHECK(ones(build_result_filter(8, 2, 4, 2, 0)) == std::vector<std::size_t>{0, 5});
    CHECK(ones(build_result_filter(8, 2, 4, 2, 1)) == std::vector<std::size_t>{1, 4});
    CHECK(ones(build_result_filter(8, 4, 2, 1, 0)) == std::vector<std::size_t>{0, 2, 4, 6});
    CHECK(build_result_filter(8, 2, 4, 2, 0).role() == MaskRole::filter);
    CHECK_THROWS_AS(build_result_filter(8, 2, 4, 2, 2), PreconditionError);
}

TEST_CASE("matmul examples") {
    Engine e(EngineParams{.slots = 8});
    const Matrix a{{1, 0, 0, 0}, {0, 1, 0, 0}};
    const Matrix b{{1, 2}, {3, 4}, {5, 6}, {7, 8}};
    CHECK(matmul_encrypted(e, a, b) == Matrix{{1, 2}, {3, 4}});
    CHECK(matmul_encrypted(e, Matrix(2, 4), b) == Matrix(2, 2));

    const PackedMatrix c = matmul(e, encode_tau_a(e, a), encode_tau_b(e, b, 2));
    const auto s = e.dec(c.ct);
    CHECK(s == std::vector<double>{1, 2, 0, 0, 3, 4, 0, 0});
}

TEST_CASE("matmul rejects mismatched operands") {
    Engine e(EngineParams{.slots = 16});
    const PackedMatrix a = encode_tau_a(e, Matrix(2, 4));
    const PackedMatrix b = encode_tau_b(e, Matrix(4, 2), 2);
    CHECK_THROWS_AS(matmul(e, b, b), PreconditionError);
    CHECK_THROWS_AS(matmul(e, a, a), PreconditionError);
    CHECK_THROWS_AS(matmul(e, encode_tau_a(e, Matrix(4, 4)), b), PreconditionError);
    CHECK_THROWS_AS(matmul(e, encode_tau_a(e, Matrix(3, 3)), encode_tau_b(e, Matrix(3, 2), 3)), PreconditionError);
    CHECK_THROWS_AS(MatmulPlan::make(16, 16, 2, 16), CapacityError);
}

TEST_CASE("property: matmul equals the oracle over a grid, with zeros outside the block") {
    for (std::size_t slots : {64, 128, 512}) {
        Engine e(EngineParams{.slots = slots});
        for (std::size_t m : {1, 2, 3, 4, 5, 8})
            for (std::size_t n : {1, 2, 3, 4, 8})
                for (std::size_t p : {1, 2, 3, 4, 8}) {
                    const MatmulPlan plan = [&] {
                        try {
                            return MatmulPlan::make(m, n, p, slots);
                        } catch (const CapacityError &) {
                            return MatmulPlan{};
                        }
                    }();
                    if (plan.rows == 0) continue;
                    const Matrix a = rvtest::int_matrix(m, n), b = rvtest::int_matrix(n, p);
                    const PackedMatrix c = matmul(e, encode_tau_a(e, a, plan.width, plan.rows),
                                                  encode_tau_b(e, b, plan.rows, plan.width));
                    CHECK(decode_matrix(e, c, m, p) == oracle_matmul(a, b));
                    const auto s = e.dec(c.ct);
                    for (std::size_t k = 0; k < slots; ++k)
                        if (k / plan.width >= m || k % plan.width >= p) CHECK(s[k] == 0.0);
                }
    }
}

TEST_CASE("matmul depth is constant in p") {
    Engine e(EngineParams{.slots = 1024});
    for (std::size_t p : {1, 2, 4, 8, 16}) {
        const Matrix a = rvtest::int_matrix(16, 8), b = rvtest::int_matrix(8, p);
        const MatmulPlan plan = MatmulPlan::make(16, 8, p, 1024);
        const PackedMatrix c =
            matmul(e, encode_tau_a(e, a, plan.width, plan.rows), encode_tau_b(e, b, plan.rows, plan.width));
        CHECK(c.ct.depth() == 3);
    }
    // General path (m mod p != 0) too.
    const MatmulPlan plan = MatmulPlan::make(6, 8, 4, 1024);
    CHECK_FALSE(plan.fast_path);
    const PackedMatrix c = matmul(e, encode_tau_a(e, rvtest::int_matrix(6, 8), plan.width, plan.rows),
                                  encode_tau_b(e, rvtest::int_matrix(8, 4), plan.rows, plan.width));
    CHECK(c.ct.depth() == 4);
}

TEST_CASE("per-iteration costs") {
    SUBCASE("general path") {
        Engine e(EngineParams{.slots = 64});
        MatmulTrace tr;
        matmul_encrypted(e, rvtest::int_matrix(3, 8), rvtest::int_matrix(8, 2), &tr);
        REQUIRE(tr.iterations.size() == 2);
        const auto &it = tr.iterations[1];
        CHECK(it[0].add_count == 1);
        CHECK(it[0].cmul_count == 2);
        CHECK(it[0].rot_count == 2);
        CHECK(it[0].mul_count == 1);
        CHECK(it[1].rot_count == sum_col_vec_rotations(8));
        CHECK(it[1].cmul_count == 1);
        CHECK(it[2].cmul_count == 1);
        CHECK(it[2].rot_count == 0);
        CHECK(it[3].add_count == 1);
        CHECK(tr.prepare == OpMeter{});
    }
    SUBCASE("fast path, full block") {
        Engine e(EngineParams{.slots = 32});
        MatmulTrace tr;
        e.reset_meter();
        matmul_encrypted(e, rvtest::int_matrix(4, 8), rvtest::int_matrix(8, 2), &tr);
        const auto &it = tr.iterations[1];
        CHECK(it[0].rot_count == 1);
        CHECK(it[0].cmul_count == 0);
        CHECK(it[0].add_count == 0);
        // p - 1 shifts plus p SumColVec cascades.
        CHECK(e.meter_snapshot().rot_count == 1 + 2 * sum_col_vec_rotations(8));
    }
    SUBCASE("fast path with a replica") {
        Engine e(EngineParams{.slots = 128});
        MatmulTrace tr;
        matmul_encrypted(e, rvtest::int_matrix(4, 8), rvtest::int_matrix(8, 4), &tr);
        CHECK(tr.prepare.rot_count == 1);
        CHECK(tr.iterations[2][0].rot_count == 1);
    }
}

TEST_CASE("tiled matmul") {
    Engine e(EngineParams{.slots = 64});
    const Matrix a = rvtest::int_matrix(8, 4), b = rvtest::int_matrix(4, 2);
    CHECK(matmul_tiled_encrypted(e, a, b, {1, 1, 1}) == oracle_matmul(a, b));
    CHECK(matmul_tiled_encrypted(e, a, b, {2, 1, 1}) == oracle_matmul(a, b));
    CHECK(matmul_tiled_encrypted(e, a, b, {1, 1, 2}) == oracle_matmul(a, b));
    const Matrix a2 = rvtest::int_matrix(6, 10), b2 = rvtest::int_matrix(10, 5);
    CHECK(matmul_tiled_encrypted(e, a2, b2, {2, 3, 2}, true) == oracle_matmul(a2, b2));
    CHECK(matmul_tiled_encrypted(e, a2, b2, {3, 2, 3}, false) == oracle_matmul(a2, b2));
    CHECK_THROWS_AS(matmul_tiled(e, {}, {}, {1, 1, 1}), PreconditionError);
}

TEST_CASE("concat_column_tiles places tiles side by side") {
    Engine e(EngineParams{.slots = 32});
    std::vector<PackedMatrix> tiles = {encode_tau_a(e, Matrix{{1, 2}, {3, 4}}, 8, 4),
                                       encode_tau_a(e, Matrix{{5, 6}, {7, 8}}, 8, 4)};
    CHECK(decode_matrix(e, concat_column_tiles(e, tiles, 2), 2, 4) == Matrix{{1, 2, 5, 6}, {3, 4, 7, 8}});
    CHECK_THROWS_AS(concat_column_tiles(e, tiles, 5), PreconditionError);
}

TEST_CASE("two-rotation row shift matches the published step costs on every layout") {
    Engine e(EngineParams{.slots = 256});
    const std::array<std::array<std::size_t, 3>, 4> dims = {{{4, 8, 2}, {8, 8, 8}, {4, 4, 4}, {16, 16, 4}}};
    for (const auto &[m, n, p] : dims) {
        INFO("m=" << m << " n=" << n << " p=" << p);
        const Matrix a = rvtest::int_matrix(m, n), b = rvtest::int_matrix(n, p);
        MatmulTrace trace;
        CHECK(matmul_encrypted(e, a, b, &trace, RowShift::two_rotation) == oracle_matmul(a, b));
        CHECK(trace.prepare.rot_count == 0);
        for (std::size_t idx = 1; idx < trace.iterations.size(); ++idx) {
            const OpMeter &s1 = trace.iterations[idx][0];
            CHECK(s1.add_count == 1);
            CHECK(s1.cmul_count == 2);
            CHECK(s1.rot_count == 2);
            CHECK(s1.mul_count == 1);
        }
    }
}
