#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace ctow {

// Dense row-major matrix of doubles.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
    std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    bool operator==(const Matrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

// Per-instance class probabilities, one row per instance.
using ProbMatrix = Matrix;

bool is_row_stochastic(const Matrix& m, double tol);

// Gathers the given rows (duplicates allowed) into a new matrix.
Matrix take_rows(const Matrix& m, std::span<const int> rows);

// Index of the largest entry; ties resolve to the lowest index.
int argmax_row(std::span<const double> row);

// argmax_row applied to every row.
std::vector<int> argmax_rows(const Matrix& m);

} // namespace ctow
