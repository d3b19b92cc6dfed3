#pragma once

// Slow, independent reference implementations used as test oracles.

#include <algorithm>
#include <array>
#include <cstdint>
#include <numeric>
#include <utility>
#include <vector>

#include <fmt/format.h>

#include "chamberlens/graph.hpp"
#include "chamberlens/rng.hpp"

namespace oracle {

using chamberlens::Edge;
using chamberlens::InteractionGraph;
using chamberlens::NodeIndex;

/// Zero-padded names so lexicographic node order equals index order.
inline std::vector<std::string> node_names(std::size_t n) {
    std::vector<std::string> names;
    for (std::size_t i = 0; i < n; ++i) {
        names.push_back(fmt::format("n{:04}", i));
    }
    return names;
}

inline InteractionGraph make_graph(std::size_t n, const std::vector<std::array<std::uint64_t, 3>>& edges) {
    std::vector<Edge> list;
    for (const auto& [a, b, w] : edges) {
        list.push_back({static_cast<NodeIndex>(std::min(a, b)), static_cast<NodeIndex>(std::max(a, b)), w});
    }
    return InteractionGraph(node_names(n), std::move(list));
}

/// Zachary's karate club, 34 members, 78 unweighted friendships.
inline InteractionGraph karate_club() {
    static const std::vector<std::vector<int>> adj{
        {1, 2, 3, 4, 5, 6, 7, 8, 10, 11, 12, 13, 17, 19, 21, 31},
        {2, 3, 7, 13, 17, 19, 21, 30},
        {3, 7, 8, 9, 13, 27, 28, 32},
        {7, 12, 13},
        {6, 10},
        {6, 10, 16},
        {16},
        {},
        {30, 32, 33},
        {33},
        {},
        {},
        {},
        {33},
        {32, 33},
        {32, 33},
        {},
        {},
        {32, 33},
        {33},
        {32, 33},
        {},
        {32, 33},
        {25, 27, 29, 32, 33},
        {25, 27, 31},
        {31},
        {29, 33},
        {33},
        {31, 33},
        {32, 33},
        {32, 33},
        {32, 33},
        {33},
        {},
    };
    std::vector<std::array<std::uint64_t, 3>> edges;
    for (std::size_t a = 0; a < adj.size(); ++a) {
        for (const int b : adj[a]) {
            edges.push_back({a, static_cast<std::uint64_t>(b), 1});
        }
    }
    return make_graph(34, edges);
}

/// Q = 1/(2m) * sum_ij [A_ij - k_i k_j / 2m] delta(c_i, c_j), over a dense
/// adjacency matrix.
inline double direct_modularity(const InteractionGraph& g, const std::vector<std::int32_t>& c) {
    const std::size_t n = g.node_count();
    std::vector<std::vector<double>> a(n, std::vector<double>(n, 0.0));
    for (const auto& e : g.edges()) {
        a[e.a][e.b] += double(e.weight);
        a[e.b][e.a] += double(e.weight);
    }
    std::vector<double> k(n, 0.0);
    double two_m = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            k[i] += a[i][j];
        }
        two_m += k[i];
    }
    double q = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (c[i] == c[j]) {
                q += a[i][j] - k[i] * k[j] / two_m;
            }
        }
    }
    return q / two_m;
}

/// Best modularity over every set partition (restricted growth strings).
inline double exhaustive_best_modularity(const InteractionGraph& g) {
    const std::size_t n = g.node_count();
    std::vector<std::int32_t> rgs(n, 0);
    double best = -1.0;
    while (true) {
        best = std::max(best, direct_modularity(g, rgs));
        // next restricted growth string
        std::size_t i = n;
        bool advanced = false;
        while (i-- > 1) {
            const std::int32_t prefix_max = *std::max_element(rgs.begin(), rgs.begin() + static_cast<long>(i));
            if (rgs[i] <= prefix_max) {
                ++rgs[i];
                std::fill(rgs.begin() + static_cast<long>(i) + 1, rgs.end(), 0);
                advanced = true;
                break;
            }
        }
        if (!advanced) {
            break;
        }
    }
    return best;
}

/// Erdos-Renyi graph with weights 1..max_weight.
inline InteractionGraph random_graph(chamberlens::Rng& rng, std::size_t n, double p, std::uint64_t max_weight = 5) {
    std::vector<std::array<std::uint64_t, 3>> edges;
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = a + 1; b < n; ++b) {
            if (rng.bernoulli(p)) {
                edges.push_back({a, b, 1 + rng.below(max_weight)});
            }
        }
    }
    return make_graph(n, edges);
}

/// Maximum diagonal mass over every one-to-one row/column assignment of a
/// rectangular matrix.
inline std::int64_t brute_force_matching(const std::vector<std::vector<std::int64_t>>& m) {
    const std::size_t rows = m.size();
    const std::size_t cols = rows ? m[0].size() : 0;
    const std::size_t n = std::max(rows, cols);
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::int64_t best = 0;
    do {
        std::int64_t s = 0;
        for (std::size_t i = 0; i < rows; ++i) {
            if (perm[i] < cols) {
                s += m[i][perm[i]];
            }
        }
        best = std::max(best, s);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

/// Adjusted Rand index from explicit pair counting.
template <typename A, typename B>
double pair_count_ari(const std::vector<A>& x, const std::vector<B>& y) {
    const std::size_t n = x.size();
    double both = 0, in_x = 0, in_y = 0, pairs = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const bool sx = x[i] == x[j];
            const bool sy = y[i] == y[j];
            both += sx && sy;
            in_x += sx;
            in_y += sy;
            pairs += 1;
        }
    }
    const double expected = in_x * in_y / pairs;
    const double max_index = 0.5 * (in_x + in_y);
    if (max_index == expected) {
        return 1.0;
    }
    return (both - expected) / (max_index - expected);
}

} // namespace oracle
