// SPDX-License-Identifier: Apache-2.0

// Per-step operation counts of the matmul and convolution loops, measured on
// the engine meter and set against the published step costs and against
// the bounds this implementation documents.

#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "revolver/engine.hpp"

namespace revolver {

struct CostRow {
    std::string algo;      // "matmul" or "conv"
    std::string scenario;  // e.g. "m=4 n=8 p=2 general"
    std::size_t step = 0;  // 1..4
    OpMeter measured;      // one representative iteration (the last)
    OpMeter published;     // published per-step cost at these dimensions
    OpMeter bound;         // documented bound for this implementation
    bool exceeds = false;  // measured > bound in some count
    std::string note;
};

struct BenchGrid {
    std::vector<std::array<std::size_t, 3>> matmul;  // (m, n, p)
    std::vector<std::array<std::size_t, 3>> conv;    // (h, w, k)
    std::size_t slots = 4096;

    static BenchGrid standard();
};

std::vector<CostRow> run_bench(const BenchGrid &grid);

/// Fixed-width text table, one line per row.
std::string format_cost_table(const std::vector<CostRow> &rows);
/// JSON array of rows.
std::string cost_table_json(const std::vector<CostRow> &rows);

}  // namespace revolver
