#ifndef SKILLTRACK_HUNGARIAN_HPP
#define SKILLTRACK_HUNGARIAN_HPP

#include <algorithm>
#include <cassert>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <limits>
#include <utility>
#include <vector>

#include "skilltrack/error.hpp"

namespace skilltrack {

/// Row-major dense matrix.
template <class T>
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, T fill = T{}) : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool empty() const { return rows_ == 0 || cols_ == 0; }

    T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    const T& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    const std::vector<T>& data() const { return data_; }

private:
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<T> data_;
};

struct Assignment {
    std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (row, col), ascending by row
    std::vector<std::size_t> unmatched_rows;
    std::vector<std::size_t> unmatched_cols;
};

/// Sum of `cost` over `pairs`, accumulated in pair order.
template <class T>
T assignment_cost(const Matrix<T>& cost, const std::vector<std::pair<std::size_t, std::size_t>>& pairs) {
    T total{};
    for (auto [r, c] : pairs) total += cost(r, c);
    return total;
}

/// Minimum-cost assignment (Kuhn-Munkres, shortest augmenting path with
/// potentials, O(n^3)). A rectangular matrix is padded to square with
/// `pad`; pairs landing on padding are reported as unmatched. Every row is
/// matched when rows <= cols and every column when cols <= rows. Ties resolve
/// to the lowest column index during each augmenting-path scan, so results are
/// reproducible.
template <std::floating_point T>
Assignment hungarian(const Matrix<T>& cost, T pad = T{0}) {
    const std::size_t rows = cost.rows(), cols = cost.cols();
    Assignment result;
    if (rows == 0 || cols == 0) {
        for (std::size_t r = 0; r < rows; ++r) result.unmatched_rows.push_back(r);
        for (std::size_t c = 0; c < cols; ++c) result.unmatched_cols.push_back(c);
        return result;
    }
    for (T v : cost.data())
        if (!std::isfinite(v)) throw ValidationError("hungarian: cost entries must be finite");

    const std::size_t n = std::max(rows, cols);
    auto at = [&](std::size_t r, std::size_t c) -> T {  // 1-based
        return (r <= rows && c <= cols) ? cost(r - 1, c - 1) : pad;
    };

    const T inf = std::numeric_limits<T>::infinity();
    std::vector<T> u(n + 1, 0), v(n + 1, 0);
    std::vector<std::size_t> match_of_col(n + 1, 0), way(n + 1, 0);

    for (std::size_t row = 1; row <= n; ++row) {
        match_of_col[0] = row;
        std::size_t col0 = 0;
        std::vector<T> minv(n + 1, inf);
        std::vector<char> used(n + 1, false);
        do {
            used[col0] = true;
            const std::size_t r0 = match_of_col[col0];
            T delta = inf;
            std::size_t col1 = 0;
            for (std::size_t c = 1; c <= n; ++c) {
                if (used[c]) continue;
                T cur = at(r0, c) - u[r0] - v[c];
                if (cur < minv[c]) {
                    minv[c] = cur;
                    way[c] = col0;
                }
                if (minv[c] < delta) {
                    delta = minv[c];
                    col1 = c;
                }
            }
            assert(col1 != 0);
            for (std::size_t c = 0; c <= n; ++c) {
                if (used[c]) {
                    u[match_of_col[c]] += delta;
                    v[c] -= delta;
                } else {
                    minv[c] -= delta;
                }
            }
            col0 = col1;
        } while (match_of_col[col0] != 0);
        do {
            std::size_t col1 = way[col0];
            match_of_col[col0] = match_of_col[col1];
            col0 = col1;
        } while (col0 != 0);
    }

    std::vector<std::size_t> col_of_row(rows, 0);
    std::vector<char> col_used(cols, false);
    for (std::size_t c = 1; c <= n; ++c) {
        std::size_t r = match_of_col[c];
        if (r >= 1 && r <= rows && c <= cols) {
            col_of_row[r - 1] = c;
            col_used[c - 1] = true;
        }
    }
    for (std::size_t r = 0; r < rows; ++r) {
        if (col_of_row[r] != 0)
            result.pairs.emplace_back(r, col_of_row[r] - 1);
        else
            result.unmatched_rows.push_back(r);
    }
    for (std::size_t c = 0; c < cols; ++c)
        if (!col_used[c]) result.unmatched_cols.push_back(c);
    return result;
}

}  // namespace skilltrack

#endif
