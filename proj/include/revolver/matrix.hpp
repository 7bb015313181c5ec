// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace revolver {

/// Dense row-major matrix of doubles. Plaintext-side container only.
class Matrix {
  public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
    Matrix(std::initializer_list<std::initializer_list<double>> rows);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double &operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }
    std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }

    const std::vector<double> &data() const { return data_; }
    std::vector<double> &data() { return data_; }

    Matrix transpose() const;
    /// Copy of the block starting at (r0, c0). Out-of-range entries read as 0.
    Matrix block(std::size_t r0, std::size_t c0, std::size_t rows, std::size_t cols) const;

    bool operator==(const Matrix &other) const = default;

  private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

constexpr bool is_power_of_two(std::size_t x) { return x != 0 && (x & (x - 1)) == 0; }

constexpr std::size_t next_power_of_two(std::size_t x) {
    std::size_t p = 1;
    while (p < x) p <<= 1;
    return p;
}

constexpr std::size_t log2_exact(std::size_t x) {
    std::size_t r = 0;
    while ((std::size_t{1} << r) < x) ++r;
    return r;
}

}  // namespace revolver
