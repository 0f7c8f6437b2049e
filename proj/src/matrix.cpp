#include "ctow/matrix.hpp"

#include <cmath>

namespace ctow {

bool is_row_stochastic(const Matrix& m, double tol) {
    for (std::size_t i = 0; i < m.rows(); ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < m.cols(); ++j) {
            double v = m(i, j);
            if (!std::isfinite(v) || v < -tol || v > 1.0 + tol) return false;
            sum += v;
        }
        if (std::abs(sum - 1.0) > tol) return false;
    }
    return true;
}

Matrix take_rows(const Matrix& m, std::span<const int> rows) {
    Matrix out(rows.size(), m.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        auto src = m.row(static_cast<std::size_t>(rows[i]));
        auto dst = out.row(i);
        for (std::size_t j = 0; j < m.cols(); ++j) dst[j] = src[j];
    }
    return out;
}

int argmax_row(std::span<const double> row) {
    int best = 0;
    for (int j = 1; j < static_cast<int>(row.size()); ++j) {
        if (row[static_cast<std::size_t>(j)] > row[static_cast<std::size_t>(best)]) best = j;
    }
    return best;
}

std::vector<int> argmax_rows(const Matrix& m) {
    std::vector<int> out;
    out.reserve(m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i) out.push_back(argmax_row(m.row(i)));
    return out;
}

} // namespace ctow
