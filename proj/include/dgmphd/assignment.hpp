#pragma once

#include <cstddef>
#include <limits>
#include <vector>

#include "dgmphd/linalg.hpp"

namespace dgmphd {

struct Assignment {
    /// column assigned to each row
    std::vector<std::size_t> row_to_col;
    double cost = 0.0;
};

/// Minimum-cost assignment of every row to a distinct column (rows ≤ cols),
/// shortest augmenting path with potentials, O(rows² · cols).
template <class T = double>
Assignment solve_assignment(const std::vector<std::vector<T>>& cost) {
    const std::size_t rows = cost.size();
    if (rows == 0) return {};
    const std::size_t cols = cost.front().size();
    detail::require(rows <= cols, "assignment needs at least as many columns as rows");
    for (const auto& r : cost) detail::require(r.size() == cols, "cost matrix rows differ in length");

    const T inf = std::numeric_limits<T>::infinity();
    // 1-based potentials; column 0 is the virtual source.
    std::vector<T> u(rows + 1, T{0}), v(cols + 1, T{0});
    std::vector<std::size_t> match(cols + 1, 0), way(cols + 1, 0);
    for (std::size_t i = 1; i <= rows; ++i) {
        match[0] = i;
        std::size_t j0 = 0;
        std::vector<T> minv(cols + 1, inf);
        std::vector<bool> used(cols + 1, false);
        do {
            used[j0] = true;
            const std::size_t i0 = match[j0];
            T delta = inf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= cols; ++j) {
                if (used[j]) continue;
                const T cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= cols; ++j) {
                if (used[j]) {
                    u[match[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (match[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            match[j0] = match[j1];
            j0 = j1;
        } while (j0 != 0);
    }

    Assignment result;
    result.row_to_col.assign(rows, 0);
    for (std::size_t j = 1; j <= cols; ++j) {
        if (match[j] != 0) result.row_to_col[match[j] - 1] = j - 1;
    }
    for (std::size_t i = 0; i < rows; ++i) result.cost += static_cast<double>(cost[i][result.row_to_col[i]]);
    return result;
}

}  // namespace dgmphd
