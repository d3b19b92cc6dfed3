#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "chamberlens/error.hpp"
#include "chamberlens/graph.hpp"
#include "chamberlens/parallel.hpp"
#include "chamberlens/rng.hpp"

namespace chamberlens {

struct Point {
    double x = 0.0;
    double y = 0.0;

    bool operator==(const Point&) const = default;
};

inline double distance(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

struct LayoutPositions {
    std::vector<Point> coords;

    bool operator==(const LayoutPositions&) const = default;
};

/// One annealing stage. Temperature is interpolated linearly from
/// `temp_start` to `temp_end` over the stage.
struct AnnealStage {
    const char* name;
    double fraction;
    double temp_start;
    double temp_end;
    double attraction;
    double attraction_exponent;
    double damping;
};

/// Liquid, expansion, cooldown, crunch, simmer.
inline constexpr std::array<AnnealStage, 5> kOpenOrdSchedule{{
    {"liquid", 0.25, 2000.0, 2000.0, 10.0, 2.0, 1.0},
    {"expansion", 0.25, 2000.0, 2000.0, 2.0, 2.0, 1.0},
    {"cooldown", 0.25, 2000.0, 250.0, 1.0, 2.0, 0.1},
    {"crunch", 0.10, 250.0, 250.0, 1.0, 2.0, 0.25},
    {"simmer", 0.15, 250.0, 250.0, 0.5, 2.0, 0.0},
}};

struct LayoutOptions {
    std::uint64_t seed = 0;
    std::size_t total_iters = 750;
    /// Fraction of the longest edges dropped from attraction at the start
    /// of cooldown. 0 disables edge cutting.
    double cut = 0.0;
    /// Sum the density kernel over every node pair instead of the grid.
    bool exact_repulsion = false;
    unsigned threads = thread_count();
};

struct LayoutResult {
    LayoutPositions positions;
    std::vector<LayoutPositions> stage_ends; // one snapshot per stage
    std::size_t edges_cut = 0;
};

namespace detail {

inline constexpr double kField = 2000.0;
inline constexpr std::size_t kGridCells = 50;
inline constexpr double kCell = kField / static_cast<double>(kGridCells);
inline constexpr double kKernelRadius = 1.5 * kCell;
inline constexpr double kDensityWeight = 1.0;
inline constexpr double kJumpScale = 0.02; // jump length per unit temperature

inline double tent(double dx, double dy) {
    const double ax = 1.0 - std::abs(dx) / kKernelRadius;
    const double ay = 1.0 - std::abs(dy) / kKernelRadius;
    return ax > 0.0 && ay > 0.0 ? ax * ay : 0.0;
}

// Cell occupancy grid. Each node deposits bilinear weights on the four cell
// centers around it; density at a point is the tent kernel summed over the
// deposits in the surrounding cells.
class DensityGrid {
public:
    DensityGrid() : mass_(kGridCells * kGridCells, 0.0) {}

    void clear() { std::fill(mass_.begin(), mass_.end(), 0.0); }

    void add(Point p, double sign = 1.0) {
        for (const auto& d : deposits(p)) {
            mass_[d.cell] += sign * d.weight;
        }
    }

    double density(Point p) const {
        const auto [cx, cy] = cell_of(p);
        double sum = 0.0;
        for (long dy = -2; dy <= 2; ++dy) {
            for (long dx = -2; dx <= 2; ++dx) {
                const long gx = cx + dx;
                const long gy = cy + dy;
                if (gx < 0 || gy < 0 || gx >= long(kGridCells) || gy >= long(kGridCells)) {
                    continue;
                }
                const double m = mass_[static_cast<std::size_t>(gy) * kGridCells + static_cast<std::size_t>(gx)];
                if (m != 0.0) {
                    const Point c = center(gx, gy);
                    sum += m * tent(p.x - c.x, p.y - c.y);
                }
            }
        }
        return sum;
    }

    // Density at p contributed by a node sitting at `self`.
    static double self_density(Point p, Point self) {
        double sum = 0.0;
        for (const auto& d : deposits(self)) {
            const Point c = center(static_cast<long>(d.cell % kGridCells), static_cast<long>(d.cell / kGridCells));
            sum += d.weight * tent(p.x - c.x, p.y - c.y);
        }
        return sum;
    }

private:
    struct Deposit {
        std::size_t cell;
        double weight;
    };

    static double grid_coord(double v) {
        return std::clamp((v + kField / 2.0) / kCell - 0.5, 0.0, double(kGridCells - 1));
    }

    static std::pair<long, long> cell_of(Point p) {
        return {std::lround(grid_coord(p.x)), std::lround(grid_coord(p.y))};
    }

    static Point center(long gx, long gy) {
        return {(double(gx) + 0.5) * kCell - kField / 2.0, (double(gy) + 0.5) * kCell - kField / 2.0};
    }

    static std::array<Deposit, 4> deposits(Point p) {
        const double gx = grid_coord(p.x);
        const double gy = grid_coord(p.y);
        const auto x0 = static_cast<std::size_t>(std::min(std::floor(gx), double(kGridCells - 2)));
        const auto y0 = static_cast<std::size_t>(std::min(std::floor(gy), double(kGridCells - 2)));
        const double fx = gx - double(x0);
        const double fy = gy - double(y0);
        return {{{y0 * kGridCells + x0, (1 - fx) * (1 - fy)},
                 {y0 * kGridCells + x0 + 1, fx * (1 - fy)},
                 {(y0 + 1) * kGridCells + x0, (1 - fx) * fy},
                 {(y0 + 1) * kGridCells + x0 + 1, fx * fy}}};
    }

    std::vector<double> mass_;
};

struct WeightedLink {
    NodeIndex node;
    double weight;
};

} // namespace detail

/// Multi-stage annealed force-directed layout in the OpenOrd style. Each
/// iteration every node evaluates its current spot, the damped weighted
/// centroid of its neighbours and a random jump around that centroid, and
/// keeps the lowest-energy candidate. Energy is weighted attraction to
/// neighbours plus the local grid density. Updates are synchronous, and
/// every node draws from its own (seed, iteration, node) stream, so output
/// does not depend on the thread count.
inline LayoutResult openord_layout_traced(const InteractionGraph& g, const LayoutOptions& opt = {}) {
    using detail::kCell;
    if (g.empty()) {
        throw ValidationError("layout requires a non-empty graph");
    }
    if (!(opt.cut >= 0.0 && opt.cut <= 1.0)) {
        throw ValidationError("cut must lie in [0, 1]");
    }
    const std::size_t n = g.node_count();
    LayoutResult result;
    if (n == 1) {
        result.positions.coords = {Point{}};
        result.stage_ends.assign(kOpenOrdSchedule.size(), result.positions);
        return result;
    }

    std::vector<Point> pos(n);
    {
        Rng rng(mix_seed(opt.seed, 0x1a40u));
        const double half = detail::kField / 4.0;
        for (auto& p : pos) {
            p.x = rng.uniform(-half, half);
            p.y = rng.uniform(-half, half);
        }
    }

    std::vector<std::vector<detail::WeightedLink>> links(n);
    std::vector<char> edge_alive(g.edge_count(), 1);
    auto rebuild_links = [&] {
        for (auto& l : links) {
            l.clear();
        }
        for (std::size_t i = 0; i < g.edge_count(); ++i) {
            if (edge_alive[i]) {
                const auto& e = g.edges()[i];
                links[e.a].push_back({e.b, double(e.weight)});
                links[e.b].push_back({e.a, double(e.weight)});
            }
        }
    };
    rebuild_links();

    detail::DensityGrid grid;
    std::vector<Point> next(n);
    std::size_t iter = 0;
    for (std::size_t s = 0; s < kOpenOrdSchedule.size(); ++s) {
        const auto& stage = kOpenOrdSchedule[s];
        const auto stage_iters = static_cast<std::size_t>(std::llround(stage.fraction * double(opt.total_iters)));

        if (std::string_view(stage.name) == "cooldown" && opt.cut > 0.0 && g.edge_count() > 0) {
            std::vector<std::size_t> order(g.edge_count());
            std::iota(order.begin(), order.end(), std::size_t{0});
            std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
                const auto& ea = g.edges()[a];
                const auto& eb = g.edges()[b];
                return distance(pos[ea.a], pos[ea.b]) > distance(pos[eb.a], pos[eb.b]);
            });
            const auto drop = static_cast<std::size_t>(std::floor(opt.cut * double(g.edge_count())));
            for (std::size_t i = 0; i < drop; ++i) {
                edge_alive[order[i]] = 0;
            }
            result.edges_cut = drop;
            rebuild_links();
        }

        for (std::size_t it = 0; it < stage_iters; ++it, ++iter) {
            const double t = stage_iters > 1 ? double(it) / double(stage_iters - 1) : 0.0;
            const double temperature = stage.temp_start + (stage.temp_end - stage.temp_start) * t;
            const double jump_prob = std::min(1.0, temperature / detail::kField);
            const double jump = detail::kJumpScale * temperature;

            if (!opt.exact_repulsion) {
                grid.clear();
                for (const auto& p : pos) {
                    grid.add(p);
                }
            }

            auto energy = [&](std::size_t v, Point p) {
                double attract = 0.0;
                double total_w = 0.0;
                for (const auto& l : links[v]) {
                    const double d = distance(p, pos[l.node]) / kCell;
                    attract += l.weight * std::pow(d, stage.attraction_exponent);
                    total_w += l.weight;
                }
                if (total_w > 0.0) {
                    attract = stage.attraction * attract / total_w;
                }
                double dens = 0.0;
                if (opt.exact_repulsion) {
                    for (std::size_t u = 0; u < n; ++u) {
                        if (u != v) {
                            dens += detail::tent(p.x - pos[u].x, p.y - pos[u].y);
                        }
                    }
                } else {
                    dens = grid.density(p) - detail::DensityGrid::self_density(p, pos[v]);
                }
                return attract + detail::kDensityWeight * dens;
            };

            parallel_for(n, [&](std::size_t begin, std::size_t end) {
                for (std::size_t v = begin; v < end; ++v) {
                    SplitMix64 rng(mix_seed(opt.seed, iter, v));
                    const Point old = pos[v];
                    Point best = old;
                    double best_e = energy(v, old);

                    Point centroid = old;
                    double total_w = 0.0;
                    Point acc{};
                    for (const auto& l : links[v]) {
                        acc.x += l.weight * pos[l.node].x;
                        acc.y += l.weight * pos[l.node].y;
                        total_w += l.weight;
                    }
                    if (total_w > 0.0) {
                        centroid = {old.x + stage.damping * (acc.x / total_w - old.x),
                                    old.y + stage.damping * (acc.y / total_w - old.y)};
                        const double e = energy(v, centroid);
                        if (e < best_e) {
                            best = centroid;
                            best_e = e;
                        }
                    }
                    const double rx = rng.uniform();
                    const double ry = rng.uniform();
                    if (rng.uniform() < jump_prob) {
                        const Point cand{centroid.x + (rx - 0.5) * 2.0 * jump, centroid.y + (ry - 0.5) * 2.0 * jump};
                        if (energy(v, cand) < best_e) {
                            best = cand;
                        }
                    }
                    best.x = std::clamp(best.x, -detail::kField / 2.0, detail::kField / 2.0);
                    best.y = std::clamp(best.y, -detail::kField / 2.0, detail::kField / 2.0);
                    next[v] = best;
                }
            }, opt.threads);
            pos.swap(next);
        }
        result.stage_ends.push_back({pos});
    }
    result.positions.coords = std::move(pos);
    return result;
}

inline LayoutPositions openord_layout(const InteractionGraph& g, std::uint64_t seed, std::size_t total_iters = 750) {
    LayoutOptions opt;
    opt.seed = seed;
    opt.total_iters = total_iters;
    return openord_layout_traced(g, opt).positions;
}

namespace detail {

inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) {
        return s;
    }
    std::string out = "\"";
    for (const char c : s) {
        if (c == '"') {
            out.push_back('"');
        }
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

} // namespace detail

inline void write_layout_csv(const InteractionGraph& g, const LayoutPositions& layout, std::ostream& out) {
    out << "user_id,x,y\n";
    for (std::size_t v = 0; v < g.node_count(); ++v) {
        out << detail::csv_field(g.nodes()[v]) << ',' << fmt::format("{},{}", layout.coords[v].x, layout.coords[v].y)
            << '\n';
    }
}

inline void write_layout_csv(const InteractionGraph& g, const LayoutPositions& layout,
                             const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    write_layout_csv(g, layout, out);
}

} // namespace chamberlens
