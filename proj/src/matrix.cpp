// SPDX-License-Identifier: Apache-2.0

#include "revolver/matrix.hpp"

#include "revolver/errors.hpp"

namespace revolver {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto &r : rows) {
        if (r.size() != cols_) throw PreconditionError("Matrix: ragged initializer");
        data_.insert(data_.end(), r.begin(), r.end());
    }
}

Matrix Matrix::transpose() const {
    Matrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
}

Matrix Matrix::block(std::size_t r0, std::size_t c0, std::size_t rows, std::size_t cols) const {
    Matrix b(rows, cols);
    for (std::size_t i = 0; i < rows && r0 + i < rows_; ++i)
        for (std::size_t j = 0; j < cols && c0 + j < cols_; ++j) b(i, j) = (*this)(r0 + i, c0 + j);
    return b;
}

}  // namespace revolver
