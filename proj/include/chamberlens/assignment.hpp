#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <numeric>
#include <vector>

namespace chamberlens {

/// Hungarian method (potentials + shortest augmenting path) for a square
/// cost matrix. Returns the column chosen for each row, minimizing the total.
template <typename T>
std::vector<std::size_t> hungarian_min(const std::vector<std::vector<T>>& cost) {
    const std::size_t n = cost.size();
    if (n == 0) {
        return {};
    }
    constexpr T inf = std::numeric_limits<T>::max() / 4;
    // 1-based with a virtual column 0, as in the classic formulation
    std::vector<T> u(n + 1, 0), v(n + 1, 0);
    std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
    for (std::size_t i = 1; i <= n; ++i) {
        p[0] = i;
        std::size_t j0 = 0;
        std::vector<T> minv(n + 1, inf);
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            const std::size_t i0 = p[j0];
            T delta = inf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= n; ++j) {
                if (used[j]) {
                    continue;
                }
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
            for (std::size_t j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<std::size_t> row_to_col(n, 0);
    for (std::size_t j = 1; j <= n; ++j) {
        row_to_col[p[j] - 1] = j - 1;
    }
    return row_to_col;
}

/// Maximum-weight assignment on a square matrix via cost = max - value.
template <typename T>
std::vector<std::size_t> hungarian_max(const std::vector<std::vector<T>>& value) {
    T top = 0;
    for (const auto& row : value) {
        for (const T x : row) {
            top = std::max(top, x);
        }
    }
    auto cost = value;
    for (auto& row : cost) {
        for (auto& x : row) {
            x = top - x;
        }
    }
    return hungarian_min(cost);
}

/// Exhaustive maximum-weight assignment for small square matrices; returns
/// the lexicographically first optimal permutation.
template <typename T>
std::vector<std::size_t> permutation_search_max(const std::vector<std::vector<T>>& value) {
    const std::size_t n = value.size();
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::vector<std::size_t> best = perm;
    T best_sum = 0;
    bool first = true;
    do {
        T s = 0;
        for (std::size_t i = 0; i < n; ++i) {
            s += value[i][perm[i]];
        }
        if (first || s > best_sum) {
            best_sum = s;
            best = perm;
            first = false;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

} // namespace chamberlens
