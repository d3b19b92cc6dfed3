#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "chamberlens/error.hpp"
#include "chamberlens/ingest.hpp"

namespace chamberlens {

using NodeIndex = std::uint32_t;

struct Edge {
    NodeIndex a = 0; // a < b
    NodeIndex b = 0;
    std::uint64_t weight = 0;

    bool operator==(const Edge&) const = default;
};

struct Neighbor {
    NodeIndex node = 0;
    std::uint64_t weight = 0;
};

/// Undirected weighted user graph without self-loops. Nodes are user ids in
/// lexicographic order; edges are sorted by (a, b) with a < b.
class InteractionGraph {
public:
    InteractionGraph() = default;

    /// Validates and indexes an edge list. Edges may arrive in any order but
    /// must be canonical (a < b), unique and have weight >= 1.
    InteractionGraph(std::vector<std::string> nodes, std::vector<Edge> edges)
        : nodes_(std::move(nodes)), edges_(std::move(edges)) {
        std::sort(edges_.begin(), edges_.end(), [](const Edge& x, const Edge& y) {
            return std::pair(x.a, x.b) < std::pair(y.a, y.b);
        });
        for (std::size_t i = 0; i < edges_.size(); ++i) {
            const auto& e = edges_[i];
            if (e.a >= e.b || e.b >= nodes_.size()) {
                throw ValidationError("edge endpoints must satisfy a < b < node count");
            }
            if (e.weight == 0) {
                throw ValidationError("edge weight must be positive");
            }
            if (i > 0 && edges_[i - 1].a == e.a && edges_[i - 1].b == e.b) {
                throw ValidationError("duplicate edge");
            }
        }
        index_adjacency();
    }

    std::size_t node_count() const { return nodes_.size(); }
    std::size_t edge_count() const { return edges_.size(); }
    bool empty() const { return nodes_.empty(); }

    const std::vector<std::string>& nodes() const { return nodes_; }
    const std::vector<Edge>& edges() const { return edges_; }

    std::span<const Neighbor> neighbors(NodeIndex v) const {
        return {adjacency_.data() + offsets_[v], adjacency_.data() + offsets_[v + 1]};
    }

    std::uint64_t degree(NodeIndex v) const { return degree_[v]; }

    std::uint64_t total_weight() const {
        std::uint64_t m = 0;
        for (const auto& e : edges_) {
            m += e.weight;
        }
        return m;
    }

    /// Index of a user id, or node_count() when absent.
    NodeIndex find(const std::string& user) const {
        const auto it = std::lower_bound(nodes_.begin(), nodes_.end(), user);
        if (it == nodes_.end() || *it != user) {
            return static_cast<NodeIndex>(nodes_.size());
        }
        return static_cast<NodeIndex>(it - nodes_.begin());
    }

    bool operator==(const InteractionGraph& o) const { return nodes_ == o.nodes_ && edges_ == o.edges_; }

private:
    void index_adjacency() {
        const std::size_t n = nodes_.size();
        offsets_.assign(n + 1, 0);
        degree_.assign(n, 0);
        for (const auto& e : edges_) {
            ++offsets_[e.a + 1];
            ++offsets_[e.b + 1];
            degree_[e.a] += e.weight;
            degree_[e.b] += e.weight;
        }
        for (std::size_t v = 0; v < n; ++v) {
            offsets_[v + 1] += offsets_[v];
        }
        adjacency_.resize(offsets_[n]);
        std::vector<std::size_t> fill(offsets_.begin(), offsets_.end() - 1);
        for (const auto& e : edges_) {
            adjacency_[fill[e.a]++] = {e.b, e.weight};
            adjacency_[fill[e.b]++] = {e.a, e.weight};
        }
    }

    std::vector<std::string> nodes_;
    std::vector<Edge> edges_;
    std::vector<std::size_t> offsets_{0};
    std::vector<Neighbor> adjacency_;
    std::vector<std::uint64_t> degree_;
};

namespace detail {

// Rebuilds a graph from the given edges, dropping nodes no edge touches.
inline InteractionGraph compact(const std::vector<std::string>& names,
                                const std::vector<std::pair<std::pair<NodeIndex, NodeIndex>, std::uint64_t>>& weighted) {
    std::vector<char> used(names.size(), 0);
    for (const auto& [ab, w] : weighted) {
        used[ab.first] = used[ab.second] = 1;
    }
    std::vector<NodeIndex> remap(names.size(), 0);
    std::vector<std::string> nodes;
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (used[i]) {
            remap[i] = static_cast<NodeIndex>(nodes.size());
            nodes.push_back(names[i]);
        }
    }
    std::vector<Edge> edges;
    edges.reserve(weighted.size());
    for (const auto& [ab, w] : weighted) {
        edges.push_back({remap[ab.first], remap[ab.second], w});
    }
    return InteractionGraph(std::move(nodes), std::move(edges));
}

} // namespace detail

/// Merges replies in both directions into one undirected weight per user
/// pair. Self-replies are dropped and users left without edges are omitted.
inline InteractionGraph build_reply_graph(const std::vector<TweetRecord>& records) {
    std::map<std::pair<std::string, std::string>, std::uint64_t> counts;
    for (const auto& r : records) {
        if (!r.reply_to_user_id || *r.reply_to_user_id == r.user_id) {
            continue;
        }
        auto key = std::minmax(r.user_id, *r.reply_to_user_id);
        ++counts[{key.first, key.second}];
    }
    std::vector<std::string> names;
    for (const auto& [key, w] : counts) {
        names.push_back(key.first);
        names.push_back(key.second);
    }
    std::sort(names.begin(), names.end());
    names.erase(std::unique(names.begin(), names.end()), names.end());

    auto index_of = [&](const std::string& s) {
        return static_cast<NodeIndex>(std::lower_bound(names.begin(), names.end(), s) - names.begin());
    };
    std::vector<Edge> edges;
    edges.reserve(counts.size());
    for (const auto& [key, w] : counts) {
        edges.push_back({index_of(key.first), index_of(key.second), w});
    }
    return InteractionGraph(std::move(names), std::move(edges));
}

/// Keeps edges with weight >= min_weight and the nodes they touch.
inline InteractionGraph threshold_graph(const InteractionGraph& g, std::uint64_t min_weight = 3) {
    if (min_weight < 1) {
        throw ValidationError("min_weight must be >= 1");
    }
    std::vector<std::pair<std::pair<NodeIndex, NodeIndex>, std::uint64_t>> kept;
    for (const auto& e : g.edges()) {
        if (e.weight >= min_weight) {
            kept.push_back({{e.a, e.b}, e.weight});
        }
    }
    return detail::compact(g.nodes(), kept);
}

inline nlohmann::ordered_json to_json(const InteractionGraph& g) {
    nlohmann::ordered_json j;
    j["nodes"] = g.nodes();
    auto edges = nlohmann::ordered_json::array();
    for (const auto& e : g.edges()) {
        edges.push_back({e.a, e.b, e.weight});
    }
    j["edges"] = std::move(edges);
    return j;
}

inline InteractionGraph graph_from_json(const nlohmann::json& j) {
    try {
        auto nodes = j.at("nodes").get<std::vector<std::string>>();
        if (!std::is_sorted(nodes.begin(), nodes.end()) ||
            std::adjacent_find(nodes.begin(), nodes.end()) != nodes.end()) {
            throw ValidationError("graph nodes must be unique and sorted");
        }
        std::vector<Edge> edges;
        for (const auto& e : j.at("edges")) {
            if (!e.is_array() || e.size() != 3) {
                throw ValidationError("graph edges must be [i, j, w] triples");
            }
            edges.push_back({e[0].get<NodeIndex>(), e[1].get<NodeIndex>(), e[2].get<std::uint64_t>()});
        }
        return InteractionGraph(std::move(nodes), std::move(edges));
    } catch (const nlohmann::json::exception& ex) {
        throw ValidationError(std::string("malformed graph.json: ") + ex.what());
    }
}

inline void write_graph_json(const InteractionGraph& g, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    out << to_json(g).dump() << '\n';
}

inline InteractionGraph read_graph_json(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot read " + path.string());
    }
    const auto j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded()) {
        throw ValidationError("graph file is not valid JSON: " + path.string());
    }
    return graph_from_json(j);
}

} // namespace chamberlens
