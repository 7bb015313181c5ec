// SPDX-License-Identifier: Apache-2.0

#include "revolver/bench.hpp"

#include <cstdio>
#include <json.hpp>
#include <random>
#include <string>

#include "revolver/conv.hpp"
#include "revolver/matmul.hpp"

namespace revolver {

namespace {

OpMeter counts(std::uint64_t add, std::uint64_t cmul, std::uint64_t rot, std::uint64_t mul) {
    OpMeter m;
    m.add_count = add;
    m.cmul_count = cmul;
    m.rot_count = rot;
    m.mul_count = mul;
    return m;
}

bool exceeds(const OpMeter &a, const OpMeter &b) {
    return a.add_count > b.add_count || a.cmul_count > b.cmul_count || a.rot_count > b.rot_count ||
           a.mul_count > b.mul_count;
}

bool same_counts(const OpMeter &a, const OpMeter &b) {
    return a.add_count == b.add_count && a.cmul_count == b.cmul_count && a.rot_count == b.rot_count &&
           a.mul_count == b.mul_count;
}

Matrix random_matrix(std::mt19937_64 &rng, std::size_t r, std::size_t c) {
    std::uniform_int_distribution<int> d(-4, 4);
    Matrix m(r, c);
    for (double &x : m.data()) x = d(rng);
    return m;
}

void add_row(std::vector<CostRow> &rows, CostRow row) {
    row.exceeds = exceeds(row.measured, row.bound);
    if (!same_counts(row.measured, row.published) && row.note.empty()) row.note = "differs from published";
    rows.push_back(std::move(row));
}

std::string fmt(const OpMeter &m) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%3llu %3llu %3llu %3llu", static_cast<unsigned long long>(m.add_count),
                  static_cast<unsigned long long>(m.cmul_count), static_cast<unsigned long long>(m.rot_count),
                  static_cast<unsigned long long>(m.mul_count));
    return buf;
}

nlohmann::json meter_json(const OpMeter &m) {
    return {{"add", m.add_count}, {"cmul", m.cmul_count}, {"rot", m.rot_count}, {"mul", m.mul_count}};
}

}  // namespace

BenchGrid BenchGrid::standard() {
    BenchGrid g;
    g.matmul = {{4, 8, 2}, {3, 4, 2}, {8, 16, 4}, {5, 8, 4}, {8, 8, 8}, {6, 32, 4}, {16, 64, 4}};
    g.conv = {{5, 5, 2}, {8, 8, 3}, {12, 12, 3}, {9, 11, 5}, {28, 28, 3}};
    return g;
}

std::vector<CostRow> run_bench(const BenchGrid &grid) {
    std::vector<CostRow> rows;
    std::mt19937_64 rng(7);
    Engine engine(EngineParams{.slots = grid.slots});

    for (const auto &[m, n, p] : grid.matmul)
        for (const RowShift shift : {RowShift::fastest, RowShift::two_rotation}) {
            const MatmulPlan plan = MatmulPlan::make(m, n, p, grid.slots);
            const bool fast = plan.fast_path && shift == RowShift::fastest;
            if (shift == RowShift::two_rotation && !plan.fast_path) continue;  // same as the fastest run
            MatmulTrace trace;
            matmul_encrypted(engine, random_matrix(rng, m, n), random_matrix(rng, n, p), &trace, shift);
            const MatmulStepCosts &it = trace.iterations.back();
            const std::size_t lp = log2_exact(next_power_of_two(p));
            const std::size_t lw = log2_exact(plan.width);
            const bool shifted = trace.iterations.size() > 1;
            const std::string scen = "m=" + std::to_string(m) + " n=" + std::to_string(n) + " p=" + std::to_string(p) +
                                     (fast ? " fast" : plan.fast_path ? " two-rot" : " general");
            const OpMeter step1_bound = !shifted ? counts(0, 0, 0, 1) : fast ? counts(0, 0, 1, 1) : counts(1, 2, 2, 1);
            add_row(rows, {"matmul", scen, 1, it[0], counts(1, 2, 2, 1), step1_bound, false,
                           fast ? "single-rotation shift" : ""});
            add_row(rows, {"matmul", scen, 2, it[1], counts(2 * lp, 1, 2 * lp, 0), counts(2 * lw, 1, 2 * lw, 0), false,
                           lw > lp ? "aggregates over width " + std::to_string(plan.width) + ": log2 n, not log2 p"
                                   : ""});
            add_row(rows, {"matmul", scen, 3, it[2], counts(0, 1, 0, 0), counts(0, 1, 0, 0), false, ""});
            add_row(rows, {"matmul", scen, 4, it[3], counts(1, 0, 0, 0), counts(1, 0, 0, 0), false, ""});
        }

    for (const auto &[h, w, k] : grid.conv) {
        ConvTrace trace;
        Engine local(EngineParams{.slots = next_power_of_two(std::max(grid.slots, h * w))});
        conv_encrypted(local, random_matrix(rng, h, w), Kernel{random_matrix(rng, k, k), 1.0}, &trace);
        const ConvStepCosts &it = trace.iterations.back();
        const std::string scen = "h=" + std::to_string(h) + " w=" + std::to_string(w) + " k=" + std::to_string(k);
        add_row(rows, {"conv", scen, 1, it[0], counts(0, 0, 0, 1), counts(0, 0, 0, 1), false, ""});
        add_row(rows, {"conv", scen, 2, it[1], counts(2 * k, 1, 2 * k, 0), counts(2 * (k - 1), 0, 2 * (k - 1), 0),
                       false, "anchor mask folded into step 3"});
        add_row(rows, {"conv", scen, 3, it[2], counts(0, 1, 0, 0), counts(0, 1, 0, 0), false, ""});
        add_row(rows, {"conv", scen, 4, it[3], counts(1, 0, 0, 0), counts(1, 0, 0, 0), false, ""});
    }
    return rows;
}

std::string format_cost_table(const std::vector<CostRow> &rows) {
    std::string out = "algo    scenario                    step  measured(add cmul rot mul)  published         "
                      "bound             flag  note\n";
    char buf[512];
    for (const CostRow &r : rows) {
        std::snprintf(buf, sizeof buf, "%-7s %-27s %4zu  %-26s  %-16s  %-16s  %-4s  %s\n", r.algo.c_str(),
                      r.scenario.c_str(), r.step, fmt(r.measured).c_str(), fmt(r.published).c_str(),
                      fmt(r.bound).c_str(), r.exceeds ? "OVER" : "ok", r.note.c_str());
        out += buf;
    }
    return out;
}

std::string cost_table_json(const std::vector<CostRow> &rows) {
    nlohmann::json j = nlohmann::json::array();
    for (const CostRow &r : rows)
        j.push_back({{"algo", r.algo},
                     {"scenario", r.scenario},
                     {"step", r.step},
                     {"measured", meter_json(r.measured)},
                     {"published", meter_json(r.published)},
                     {"bound", meter_json(r.bound)},
                     {"exceeds", r.exceeds},
                     {"note", r.note}});
    return j.dump(2);
}

}  // namespace revolver
