#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "chamberlens/layout.hpp"
#include "support/oracles.hpp"

using namespace chamberlens;

namespace {

InteractionGraph bridged_cliques() {
    std::vector<std::array<std::uint64_t, 3>> edges;
    for (std::uint64_t base : {0u, 10u}) {
        for (std::uint64_t a = 0; a < 10; ++a) {
            for (std::uint64_t b = a + 1; b < 10; ++b) {
                edges.push_back({base + a, base + b, 1});
            }
        }
    }
    edges.push_back({9, 10, 1});
    return oracle::make_graph(20, edges);
}

std::pair<double, double> intra_inter(const LayoutPositions& l) {
    double intra = 0, inter = 0;
    int n_intra = 0, n_inter = 0;
    for (std::size_t i = 0; i < 20; ++i) {
        for (std::size_t j = i + 1; j < 20; ++j) {
            const double d = distance(l.coords[i], l.coords[j]);
            if ((i < 10) == (j < 10)) {
                intra += d;
                ++n_intra;
            } else {
                inter += d;
                ++n_inter;
            }
        }
    }
    return {intra / n_intra, inter / n_inter};
}

} // namespace

TEST(Layout, SingleNodeSitsAtOrigin) {
    const InteractionGraph g({"solo"}, {});
    EXPECT_EQ(openord_layout(g, 3).coords, (std::vector<Point>{{0.0, 0.0}}));
}

TEST(Layout, EmptyGraphIsRejected) {
    EXPECT_THROW(openord_layout(InteractionGraph{}, 0), ValidationError);
}

TEST(Layout, TwoNodesPullTogether) {
    const auto g = oracle::make_graph(2, {{0, 1, 1}});
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto start = openord_layout(g, seed, 0);
        const auto end = openord_layout(g, seed);
        EXPECT_LE(distance(end.coords[0], end.coords[1]), distance(start.coords[0], start.coords[1]));
    }
}

TEST(Layout, BridgedCliquesSeparate) {
    const auto [intra, inter] = intra_inter(openord_layout(bridged_cliques(), 1));
    EXPECT_LT(intra, inter);
}

TEST(Layout, RecenteringKeepsTheRatio) {
    auto l = openord_layout(bridged_cliques(), 2);
    const auto before = intra_inter(l);
    for (auto& p : l.coords) {
        p.x += 123.5;
        p.y -= 77.25;
    }
    const auto after = intra_inter(l);
    EXPECT_NEAR(before.first / before.second, after.first / after.second, 1e-9);
}

TEST(Layout, DeterministicAndThreadIndependent) {
    Rng rng(4);
    const auto g = oracle::random_graph(rng, 300, 0.02);
    LayoutOptions a;
    a.seed = 9;
    a.total_iters = 100;
    a.threads = 1;
    LayoutOptions b = a;
    b.threads = 4;
    EXPECT_EQ(openord_layout_traced(g, a).positions, openord_layout_traced(g, a).positions);
    EXPECT_EQ(openord_layout_traced(g, a).positions, openord_layout_traced(g, b).positions);
}

TEST(Layout, FiniteAtEveryStage) {
    Rng rng(6);
    const auto g = oracle::random_graph(rng, 80, 0.05, 10);
    LayoutOptions opt;
    opt.total_iters = 200;
    opt.cut = 0.2;
    const auto r = openord_layout_traced(g, opt);
    ASSERT_EQ(r.stage_ends.size(), 5u);
    for (const auto& stage : r.stage_ends) {
        for (const auto& p : stage.coords) {
            EXPECT_TRUE(std::isfinite(p.x) && std::isfinite(p.y));
        }
    }
    EXPECT_EQ(r.edges_cut, static_cast<std::size_t>(std::floor(0.2 * double(g.edge_count()))));
}

TEST(Layout, ExactRepulsionAlsoSeparatesCliques) {
    LayoutOptions opt;
    opt.seed = 1;
    opt.exact_repulsion = true;
    const auto [intra, inter] = intra_inter(openord_layout_traced(bridged_cliques(), opt).positions);
    EXPECT_LT(intra, inter);
}

TEST(Layout, CsvHasHeaderAndOneRowPerNode) {
    const auto g = oracle::make_graph(3, {{0, 1, 1}, {1, 2, 2}});
    std::ostringstream out;
    write_layout_csv(g, openord_layout(g, 0, 50), out);
    const auto text = out.str();
    EXPECT_TRUE(text.starts_with("user_id,x,y\n"));
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 4);
}
