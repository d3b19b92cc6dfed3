#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "chamberlens/error.hpp"
#include "chamberlens/graph.hpp"
#include "chamberlens/rng.hpp"

namespace chamberlens {

using CommunityId = std::int32_t;

/// Node -> community assignment with dense ids 0..C-1 and the (resolution 1)
/// modularity of that assignment.
struct Partition {
    std::vector<CommunityId> assignment;
    double modularity = 0.0;

    std::size_t community_count() const {
        if (assignment.empty()) {
            return 0;
        }
        return static_cast<std::size_t>(*std::max_element(assignment.begin(), assignment.end())) + 1;
    }

    std::vector<std::vector<NodeIndex>> members() const {
        std::vector<std::vector<NodeIndex>> out(community_count());
        for (std::size_t v = 0; v < assignment.size(); ++v) {
            out[static_cast<std::size_t>(assignment[v])].push_back(static_cast<NodeIndex>(v));
        }
        return out;
    }
};

/// Relabels arbitrary ids to 0..C-1 in order of first appearance.
inline std::vector<CommunityId> dense_labels(const std::vector<CommunityId>& labels) {
    std::unordered_map<CommunityId, CommunityId> seen;
    std::vector<CommunityId> out(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const auto [it, inserted] = seen.try_emplace(labels[i], static_cast<CommunityId>(seen.size()));
        out[i] = it->second;
    }
    return out;
}

/// Newman weighted modularity. Communities are summed in order of first
/// appearance, so relabeling ids gives a bit-identical value.
inline double modularity(const InteractionGraph& g, const std::vector<CommunityId>& assignment,
                         double resolution = 1.0) {
    if (assignment.size() != g.node_count()) {
        throw ValidationError("assignment does not cover every node");
    }
    const double m = static_cast<double>(g.total_weight());
    if (m <= 0.0) {
        throw ValidationError("modularity is undefined for a graph without edges");
    }
    const auto labels = dense_labels(assignment);
    const std::size_t c = labels.empty() ? 0 : static_cast<std::size_t>(*std::max_element(labels.begin(), labels.end())) + 1;
    std::vector<double> internal(c, 0.0);
    std::vector<double> total(c, 0.0);
    for (const auto& e : g.edges()) {
        if (labels[e.a] == labels[e.b]) {
            internal[labels[e.a]] += 2.0 * static_cast<double>(e.weight);
        }
    }
    for (std::size_t v = 0; v < g.node_count(); ++v) {
        total[labels[v]] += static_cast<double>(g.degree(static_cast<NodeIndex>(v)));
    }
    double q = 0.0;
    for (std::size_t k = 0; k < c; ++k) {
        const double frac = total[k] / (2.0 * m);
        q += internal[k] / (2.0 * m) - resolution * frac * frac;
    }
    return q;
}

struct LouvainOptions {
    std::uint64_t seed = 0;
    double resolution = 1.0;
    /// Independent runs with seed-derived visit orders; the best Q is kept.
    std::size_t trials = 3;
};

struct LouvainResult {
    Partition partition;
    /// Modularity (at the requested resolution) after every local-move pass.
    std::vector<double> q_trace;
    /// Smallest accepted single-move gain; +inf when nothing moved.
    double min_move_gain = std::numeric_limits<double>::infinity();
    std::size_t levels = 0;
};

namespace detail {

// Working graph for one Louvain level: community super-nodes with self-loops.
struct LevelGraph {
    std::vector<std::size_t> offsets{0};
    std::vector<std::pair<std::uint32_t, double>> adj; // no self entries
    std::vector<double> self_loop;                     // loop weight, counted once
    std::vector<double> degree;                        // includes 2 * self_loop

    std::size_t size() const { return degree.size(); }

    static LevelGraph from(const InteractionGraph& g) {
        LevelGraph lg;
        const std::size_t n = g.node_count();
        lg.offsets.assign(n + 1, 0);
        lg.self_loop.assign(n, 0.0);
        lg.degree.assign(n, 0.0);
        for (std::size_t v = 0; v < n; ++v) {
            const auto nb = g.neighbors(static_cast<NodeIndex>(v));
            lg.offsets[v + 1] = lg.offsets[v] + nb.size();
            for (const auto& x : nb) {
                lg.adj.emplace_back(x.node, static_cast<double>(x.weight));
                lg.degree[v] += static_cast<double>(x.weight);
            }
        }
        return lg;
    }

    // Collapses communities (dense ids) into super-nodes.
    LevelGraph aggregate(const std::vector<std::uint32_t>& comm, std::size_t count) const {
        std::vector<std::map<std::uint32_t, double>> links(count);
        LevelGraph out;
        out.self_loop.assign(count, 0.0);
        out.degree.assign(count, 0.0);
        for (std::size_t v = 0; v < size(); ++v) {
            const auto cv = comm[v];
            out.self_loop[cv] += self_loop[v];
            out.degree[cv] += degree[v];
            for (std::size_t e = offsets[v]; e < offsets[v + 1]; ++e) {
                const auto [u, w] = adj[e];
                const auto cu = comm[u];
                if (cu == cv) {
                    out.self_loop[cv] += 0.5 * w; // each internal edge is seen twice
                } else {
                    links[cv][cu] += w;
                }
            }
        }
        out.offsets.assign(count + 1, 0);
        for (std::size_t c = 0; c < count; ++c) {
            out.offsets[c + 1] = out.offsets[c] + links[c].size();
            for (const auto& [u, w] : links[c]) {
                out.adj.emplace_back(u, w);
            }
        }
        return out;
    }

    double q(const std::vector<std::uint32_t>& comm, double two_m, double resolution) const {
        std::vector<double> in(size(), 0.0);
        std::vector<double> tot(size(), 0.0);
        for (std::size_t v = 0; v < size(); ++v) {
            in[comm[v]] += 2.0 * self_loop[v];
            tot[comm[v]] += degree[v];
            for (std::size_t e = offsets[v]; e < offsets[v + 1]; ++e) {
                if (comm[adj[e].first] == comm[v]) {
                    in[comm[v]] += adj[e].second;
                }
            }
        }
        double q = 0.0;
        for (std::size_t c = 0; c < size(); ++c) {
            q += in[c] / two_m - resolution * (tot[c] / two_m) * (tot[c] / two_m);
        }
        return q;
    }
};

inline constexpr double kLouvainMinGain = 1e-9;
inline constexpr std::size_t kLouvainMaxRounds = 20;

} // namespace detail

namespace detail {

/// One multi-level Louvain run: local moves by modularity gain, then aggregation,
/// until a level makes no move. Further rounds restart the local moves on
/// the original nodes from the current partition and aggregate again, until
/// a whole round moves nothing (at most kLouvainMaxRounds). Visit order is
/// a seeded shuffle per (round, level). Ties keep the current community,
/// then prefer the lowest community id.
inline LouvainResult louvain_run(const InteractionGraph& g, const LouvainOptions& opt, std::uint64_t trial) {
    if (g.empty() || g.total_weight() == 0) {
        throw ValidationError("louvain requires a graph with at least one edge");
    }
    const double two_m = 2.0 * static_cast<double>(g.total_weight());
    const double gamma = opt.resolution;

    LouvainResult result;
    std::vector<std::uint32_t> node_comm(g.node_count());
    std::iota(node_comm.begin(), node_comm.end(), 0u);

    for (std::size_t round = 0; round < detail::kLouvainMaxRounds; ++round) {
        bool round_moved = false;
        detail::LevelGraph level = detail::LevelGraph::from(g);
        std::vector<std::uint32_t> start = node_comm; // partition of the current level's nodes
        for (std::size_t depth = 0;; ++depth) {
            const std::size_t n = level.size();
            std::vector<std::uint32_t> comm = start;
            std::vector<double> tot(n, 0.0);
            std::vector<std::uint32_t> members(n, 0);
            for (std::size_t v = 0; v < n; ++v) {
                tot[comm[v]] += level.degree[v];
                ++members[comm[v]];
            }
            std::vector<std::uint32_t> empty; // unused ids, highest first
            for (std::size_t c = n; c-- > 0;) {
                if (members[c] == 0) {
                    empty.push_back(static_cast<std::uint32_t>(c));
                }
            }

            std::vector<std::uint32_t> order(n);
            std::iota(order.begin(), order.end(), 0u);
            Rng rng(mix_seed(mix_seed(opt.seed, trial), depth, round));
            rng.shuffle(std::span<std::uint32_t>(order));

            std::vector<double> link(n, 0.0);
            std::vector<char> seen(n, 0);
            std::vector<std::uint32_t> touched;
            bool level_moved = false;
            for (;;) {
                std::size_t moves = 0;
                for (const auto v : order) {
                    const auto own = comm[v];
                    const double k = level.degree[v];
                    touched.clear();
                    for (std::size_t e = level.offsets[v]; e < level.offsets[v + 1]; ++e) {
                        const auto c = comm[level.adj[e].first];
                        if (!seen[c]) {
                            seen[c] = 1;
                            touched.push_back(c);
                        }
                        link[c] += level.adj[e].second;
                    }
                    tot[own] -= k;
                    const double own_gain = link[own] - gamma * tot[own] * k / two_m;
                    auto best = own;
                    double best_gain = -std::numeric_limits<double>::infinity();
                    for (const auto c : touched) {
                        if (c == own) {
                            continue;
                        }
                        const double gain = link[c] - gamma * tot[c] * k / two_m;
                        if (gain > best_gain || (gain == best_gain && c < best)) {
                            best_gain = gain;
                            best = c;
                        }
                    }
                    // a community of its own gains nothing
                    if (members[own] > 1 && !empty.empty() && 0.0 > best_gain) {
                        best_gain = 0.0;
                        best = empty.back();
                    }
                    // gains are in units of edge weight; dQ = 2 * diff / 2m
                    const double dq = 2.0 * (best_gain - own_gain) / two_m;
                    if (best != own && dq > detail::kLouvainMinGain) {
                        comm[v] = best;
                        if (!empty.empty() && best == empty.back()) {
                            empty.pop_back();
                        }
                        if (--members[own] == 0) {
                            empty.push_back(own);
                        }
                        ++members[best];
                        result.min_move_gain = std::min(result.min_move_gain, dq);
                        ++moves;
                    }
                    tot[comm[v]] += k;
                    for (const auto c : touched) {
                        link[c] = 0.0;
                        seen[c] = 0;
                    }
                }
                if (moves == 0) {
                    break;
                }
                level_moved = true;
                result.q_trace.push_back(level.q(comm, two_m, gamma));
            }
            ++result.levels;
            round_moved = round_moved || level_moved;

            // renumber surviving communities densely in node order
            std::vector<std::uint32_t> dense(n, UINT32_MAX);
            std::uint32_t count = 0;
            for (std::size_t v = 0; v < n; ++v) {
                if (dense[comm[v]] == UINT32_MAX) {
                    dense[comm[v]] = count++;
                }
                comm[v] = dense[comm[v]];
            }
            if (depth == 0) {
                node_comm = comm;
            } else {
                for (auto& c : node_comm) {
                    c = comm[c];
                }
            }
            if (!level_moved && (depth > 0 || count == n)) {
                break;
            }
            level = level.aggregate(comm, count);
            start.resize(count);
            std::iota(start.begin(), start.end(), 0u);
        }
        if (!round_moved) {
            break;
        }
    }

    std::vector<CommunityId> labels(node_comm.begin(), node_comm.end());
    result.partition.assignment = dense_labels(labels);
    result.partition.modularity = modularity(g, result.partition.assignment);
    return result;
}

} // namespace detail

/// Best of `trials` independent runs by modularity at the requested
/// resolution; the earliest trial wins ties.
inline LouvainResult louvain_traced(const InteractionGraph& g, const LouvainOptions& opt = {}) {
    LouvainResult best = detail::louvain_run(g, opt, 0);
    double q_best = modularity(g, best.partition.assignment, opt.resolution);
    for (std::uint64_t t = 1; t < opt.trials; ++t) {
        auto r = detail::louvain_run(g, opt, t);
        const double q = modularity(g, r.partition.assignment, opt.resolution);
        if (q > q_best) {
            q_best = q;
            best = std::move(r);
        }
    }
    return best;
}

inline Partition louvain(const InteractionGraph& g, std::uint64_t seed, double resolution = 1.0) {
    return louvain_traced(g, {seed, resolution}).partition;
}

struct CommunityRank {
    CommunityId id = 0;
    std::size_t size = 0;
    double density = 0.0;
};

struct TopCommunities {
    std::vector<CommunityId> ids;
    std::vector<CommunityRank> ranking; // every qualifying community, ranked
    std::size_t shortfall = 0;          // k minus the number returned
};

/// Internal weighted density of every community: twice the internal weight
/// divided by |c|(|c|-1). Singletons have density 0.
inline std::vector<CommunityRank> community_density(const Partition& p, const InteractionGraph& g) {
    const std::size_t c = p.community_count();
    std::vector<CommunityRank> out(c);
    for (std::size_t i = 0; i < c; ++i) {
        out[i].id = static_cast<CommunityId>(i);
    }
    for (const auto id : p.assignment) {
        ++out[static_cast<std::size_t>(id)].size;
    }
    std::vector<double> internal(c, 0.0);
    for (const auto& e : g.edges()) {
        if (p.assignment[e.a] == p.assignment[e.b]) {
            internal[static_cast<std::size_t>(p.assignment[e.a])] += 2.0 * static_cast<double>(e.weight);
        }
    }
    for (std::size_t i = 0; i < c; ++i) {
        const double s = static_cast<double>(out[i].size);
        out[i].density = out[i].size > 1 ? internal[i] / (s * (s - 1.0)) : 0.0;
    }
    return out;
}

/// The k densest communities having at least min_size members, ranked by
/// density, then size, then lowest id.
inline TopCommunities select_top_communities(const Partition& p, const InteractionGraph& g,
                                             std::size_t k = 6, std::size_t min_size = 10) {
    if (k < 1) {
        throw ValidationError("top-k must be >= 1");
    }
    if (p.assignment.size() != g.node_count()) {
        throw ValidationError("partition does not match graph");
    }
    TopCommunities top;
    for (const auto& r : community_density(p, g)) {
        if (r.size >= min_size) {
            top.ranking.push_back(r);
        }
    }
    std::sort(top.ranking.begin(), top.ranking.end(), [](const CommunityRank& a, const CommunityRank& b) {
        if (a.density != b.density) {
            return a.density > b.density;
        }
        if (a.size != b.size) {
            return a.size > b.size;
        }
        return a.id < b.id;
    });
    for (std::size_t i = 0; i < std::min(k, top.ranking.size()); ++i) {
        top.ids.push_back(top.ranking[i].id);
    }
    top.shortfall = k - top.ids.size();
    return top;
}

// partition.json: {modularity, communities: {id: [user...]}, selected: [id...]}

inline nlohmann::ordered_json partition_to_json(const Partition& p, const InteractionGraph& g,
                                                const std::vector<CommunityId>& selected) {
    nlohmann::ordered_json j;
    j["modularity"] = p.modularity;
    nlohmann::ordered_json comms = nlohmann::ordered_json::object();
    const auto members = p.members();
    for (std::size_t c = 0; c < members.size(); ++c) {
        auto users = nlohmann::ordered_json::array();
        for (const auto v : members[c]) {
            users.push_back(g.nodes()[v]);
        }
        comms[std::to_string(c)] = std::move(users);
    }
    j["communities"] = std::move(comms);
    j["selected"] = selected;
    return j;
}

/// Community membership as read back from partition.json.
struct CommunityFile {
    double modularity = 0.0;
    std::map<std::string, CommunityId> community_of; // user -> community
    std::vector<CommunityId> selected;
    std::size_t community_count = 0;
};

inline CommunityFile read_partition_json(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot read " + path.string());
    }
    const auto j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded()) {
        throw ValidationError("partition file is not valid JSON: " + path.string());
    }
    CommunityFile out;
    try {
        out.modularity = j.at("modularity").get<double>();
        for (const auto& [key, users] : j.at("communities").items()) {
            const auto id = static_cast<CommunityId>(std::stol(key));
            for (const auto& u : users) {
                out.community_of[u.get<std::string>()] = id;
            }
            out.community_count = std::max(out.community_count, static_cast<std::size_t>(id) + 1);
        }
        if (const auto it = j.find("selected"); it != j.end()) {
            out.selected = it->get<std::vector<CommunityId>>();
        }
    } catch (const std::exception& ex) {
        throw ValidationError(std::string("malformed partition.json: ") + ex.what());
    }
    return out;
}

inline void write_partition_json(const Partition& p, const InteractionGraph& g,
                                 const std::vector<CommunityId>& selected,
                                 const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    out << partition_to_json(p, g, selected).dump() << '\n';
}

} // namespace chamberlens
