// SPDX-License-Identifier: Apache-2.0

// Hand-rolled generators shared by the test binaries.

#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "revolver/matrix.hpp"

namespace rvtest {

using revolver::Matrix;

inline std::mt19937_64 &rng() {
    static std::mt19937_64 g(20240521);
    return g;
}

inline int randint(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng()); }

inline double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng()); }

inline Matrix int_matrix(std::size_t r, std::size_t c, int lo = -9, int hi = 9) {
    Matrix m(r, c);
    for (double &x : m.data()) x = randint(lo, hi);
    return m;
}

inline Matrix real_matrix(std::size_t r, std::size_t c, double lo = -1.0, double hi = 1.0) {
    Matrix m(r, c);
    for (double &x : m.data()) x = uniform(lo, hi);
    return m;
}

inline double max_abs_diff(const Matrix &a, const Matrix &b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.data().size(); ++i) d = std::max(d, std::abs(a.data()[i] - b.data()[i]));
    return d;
}

// Fresh scratch directory under the system temp dir, removed on scope exit.
struct TempDir {
    std::filesystem::path path;
    explicit TempDir(const std::string &tag) {
        path = std::filesystem::temp_directory_path() / ("rvtest_" + tag + "_" + std::to_string(rng()()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    TempDir(const TempDir &) = delete;
    TempDir &operator=(const TempDir &) = delete;
};

// Images on the 256-level pixel grid so IDX round trips are exact.
inline std::vector<Matrix> pixel_images(std::size_t count, std::size_t side = 28) {
    std::vector<Matrix> out;
    for (std::size_t i = 0; i < count; ++i) {
        Matrix m(side, side);
        for (double &x : m.data()) x = randint(0, 255) / 255.0;
        out.push_back(m);
    }
    return out;
}

}  // namespace rvtest
