#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "chamberlens/concordance.hpp"
#include "chamberlens/synth.hpp"
#include "support/oracles.hpp"
#include "support/tables.hpp"

using namespace chamberlens;

namespace {

std::map<std::string, int> labels(const std::vector<int>& v) {
    std::map<std::string, int> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        out["t" + std::to_string(100 + i)] = v[i];
    }
    return out;
}

ConfusionMatrix random_matrix(Rng& rng, std::size_t rows, std::size_t cols) {
    ConfusionMatrix m;
    for (std::size_t i = 0; i < rows; ++i) {
        m.row_ids.push_back("r" + std::to_string(i));
    }
    for (std::size_t j = 0; j < cols; ++j) {
        m.col_ids.push_back("c" + std::to_string(j));
    }
    m.counts.assign(rows, std::vector<std::int64_t>(cols));
    for (auto& r : m.counts) {
        for (auto& x : r) {
            x = static_cast<std::int64_t>(rng.below(50));
        }
    }
    return m;
}

} // namespace

TEST(Confusion, IdenticalLabelsAreDiagonal) {
    const auto l = labels({0, 1, 0, 1, 1, 0, 0, 1, 1, 0});
    const auto m = confusion(l, l);
    EXPECT_EQ(m.counts, (std::vector<std::vector<std::int64_t>>{{5, 0}, {0, 5}}));
}

TEST(Confusion, SingleTweet) {
    const auto m = confusion(labels({3}), labels({7}));
    EXPECT_EQ(m.counts, (std::vector<std::vector<std::int64_t>>{{1}}));
    EXPECT_EQ(m.row_ids, (std::vector<std::string>{"3"}));
    EXPECT_EQ(m.col_ids, (std::vector<std::string>{"7"}));
}

TEST(Confusion, HandTally) {
    // text:      0 0 0 1 1 1 1 2 2 2 2 2
    // community: a a b b b c a c c c a b
    const auto text = labels({0, 0, 0, 1, 1, 1, 1, 2, 2, 2, 2, 2});
    std::map<std::string, std::string> comm;
    const std::string cs = "aabbbcacccab";
    for (std::size_t i = 0; i < cs.size(); ++i) {
        comm["t" + std::to_string(100 + i)] = std::string(1, cs[i]);
    }
    const auto m = confusion(text, comm);
    EXPECT_EQ(m.col_ids, (std::vector<std::string>{"a", "b", "c"}));
    EXPECT_EQ(m.counts, (std::vector<std::vector<std::int64_t>>{{2, 1, 0}, {1, 2, 1}, {1, 1, 3}}));
}

TEST(Confusion, NoOverlapIsAnError) {
    const std::map<std::string, int> a{{"x", 0}}, b{{"y", 0}};
    EXPECT_THROW(confusion(a, b), ValidationError);
}

TEST(Matching, SixBySixTable) {
    const auto r = match_clusters(tables::six_by_six());
    EXPECT_EQ(r.matched, 4627);
    EXPECT_EQ(r.total, 13099);
    EXPECT_NEAR(r.accuracy, 0.3532, 0.0005);
    EXPECT_DOUBLE_EQ(r.accuracy, 0.3532330712268112);
    for (std::size_t i = 0; i < 6; ++i) {
        EXPECT_EQ(r.row_to_col[i], i);
    }
    EXPECT_DOUBLE_EQ(r.identity_accuracy, r.accuracy);
}

TEST(Matching, FiveByFiveTable) {
    const auto r = match_clusters(tables::five_by_five());
    EXPECT_EQ(r.matched, 1864);
    EXPECT_EQ(r.total, 4288);
    EXPECT_NEAR(r.accuracy, 0.4347, 0.0005);
    EXPECT_DOUBLE_EQ(r.accuracy, 0.43470149253731344);
}

TEST(Matching, DiagonalIsPerfect) {
    ConfusionMatrix m{{"a", "b", "c"}, {"x", "y", "z"}, {{4, 0, 0}, {0, 9, 0}, {0, 0, 1}}};
    EXPECT_EQ(match_clusters(m).accuracy, 1.0);
}

TEST(Matching, EqualsBruteForce) {
    Rng rng(31);
    for (int trial = 0; trial < 60; ++trial) {
        const auto m = random_matrix(rng, 1 + rng.below(7), 1 + rng.below(7));
        EXPECT_EQ(match_clusters(m).matched, oracle::brute_force_matching(m.counts));
    }
}

TEST(Matching, HungarianAboveSearchLimit) {
    Rng rng(32);
    for (int trial = 0; trial < 3; ++trial) {
        const auto m = random_matrix(rng, 9, 9);
        const auto r = match_clusters(m);
        EXPECT_EQ(r.matched, oracle::brute_force_matching(m.counts));
    }
    const auto big = random_matrix(rng, 12, 15);
    const auto r = match_clusters(big);
    std::set<std::size_t> used;
    for (const auto& c : r.row_to_col) {
        ASSERT_TRUE(c.has_value());
        EXPECT_TRUE(used.insert(*c).second);
    }
}

TEST(Matching, PermutingIdsKeepsAccuracy) {
    Rng rng(33);
    const auto m = random_matrix(rng, 5, 6);
    auto p = m;
    std::swap(p.counts[0], p.counts[3]);
    std::swap(p.row_ids[0], p.row_ids[3]);
    for (auto& row : p.counts) {
        std::swap(row[1], row[5]);
    }
    std::swap(p.col_ids[1], p.col_ids[5]);
    EXPECT_EQ(match_clusters(m).accuracy, match_clusters(p).accuracy);
}

TEST(DropCluster, SixBySixBecomesFiveByFive) {
    const auto dropped = drop_cluster(tables::six_by_six(), "2", "2");
    EXPECT_EQ(dropped, tables::five_by_five());
    EXPECT_GT(match_clusters(dropped).accuracy, match_clusters(tables::six_by_six()).accuracy);
}

TEST(DropCluster, SumIdentity) {
    Rng rng(34);
    const auto m = random_matrix(rng, 5, 5);
    std::int64_t row = 0, col = 0;
    for (std::size_t j = 0; j < 5; ++j) {
        row += m.counts[2][j];
        col += m.counts[j][2];
    }
    EXPECT_EQ(drop_cluster(m, "r2", "c2").total(), m.total() - row - col + m.counts[2][2]);
}

TEST(DropCluster, Errors) {
    const ConfusionMatrix one{{"a"}, {"x"}, {{1}}};
    EXPECT_THROW(drop_cluster(one, "a", "x"), ValidationError);
    EXPECT_THROW(drop_cluster(tables::six_by_six(), "9", "2"), ValidationError);
}

TEST(Metrics, NmiCases) {
    const std::vector<int> a{0, 0, 1, 1, 2, 2};
    EXPECT_NEAR(nmi(a, a), 1.0, 1e-12);
    EXPECT_EQ(nmi(a, std::vector<int>(6, 4)), 0.0);
    EXPECT_NEAR(nmi(std::vector<int>{0, 0, 1, 1}, std::vector<int>{0, 1, 0, 1}), 0.0, 1e-15);
}

TEST(Metrics, AriCases) {
    const std::vector<int> a{0, 0, 1, 1, 2, 2};
    EXPECT_NEAR(ari(a, a), 1.0, 1e-12);
    EXPECT_EQ(ari(std::vector<int>(5, 0), std::vector<int>(5, 1)), 1.0);
    const std::vector<int> x{0, 0, 1, 1}, y{0, 1, 0, 1};
    EXPECT_LE(ari(x, y), 0.0);
    EXPECT_NEAR(ari(x, y), -0.5, 1e-12);
    EXPECT_NEAR(ari(x, y), oracle::pair_count_ari(x, y), 1e-12);
}

TEST(Metrics, AriMatchesPairCountingAndIsSymmetric) {
    Rng rng(35);
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t n = 2 + rng.below(40);
        std::vector<int> x(n), y(n);
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = static_cast<int>(rng.below(4));
            y[i] = static_cast<int>(rng.below(3));
        }
        EXPECT_NEAR(ari(x, y), oracle::pair_count_ari(x, y), 1e-12);
        EXPECT_NEAR(ari(x, y), ari(y, x), 1e-12);
        EXPECT_NEAR(nmi(x, y), nmi(y, x), 1e-12);
        std::vector<int> renamed = x;
        for (auto& v : renamed) {
            v = 10 - v;
        }
        EXPECT_NEAR(nmi(x, y), nmi(renamed, y), 1e-12);
        EXPECT_NEAR(ari(x, y), ari(renamed, y), 1e-12);
    }
}

TEST(Means, SingleCommunityIdenticalVectors) {
    StyleVector v;
    v.tweet_id = "a";
    v.neg = 0.3;
    v.neu = 0.5;
    v.pos = 0.2;
    v.subjectivity = 0.7;
    auto w = v;
    w.tweet_id = "b";
    const std::map<std::string, int> comm{{"a", 4}, {"b", 4}};
    const auto means = community_style_means({v, w}, comm);
    const auto& m = means.means.at("4");
    EXPECT_DOUBLE_EQ(m.neg, 0.3);
    EXPECT_DOUBLE_EQ(m.subjectivity, 0.7);
    EXPECT_EQ(means.tweet_counts.at("4"), 2u);
}

TEST(Means, AveragesSubjectivity) {
    StyleVector a, b;
    a.tweet_id = "a";
    b.tweet_id = "b";
    b.subjectivity = 1.0;
    const std::map<std::string, int> comm{{"a", 0}, {"b", 0}};
    EXPECT_DOUBLE_EQ(community_style_means({a, b}, comm).means.at("0").subjectivity, 0.5);
}

TEST(Means, EmptyCommunityIsReported) {
    StyleVector a;
    a.tweet_id = "a";
    const std::map<std::string, int> comm{{"a", 0}};
    const auto m = community_style_means({a}, comm, std::vector<int>{0, 1});
    EXPECT_EQ(m.empty, (std::vector<std::string>{"1"}));
}

TEST(Means, RecoverPlantedStyles) {
    SynthSpec spec;
    spec.seed = 11;
    const auto out = generate(spec);
    std::map<std::string, std::int32_t> comm;
    for (const auto& r : out.records) {
        comm[r.tweet_id] = out.truth.at(r.user_id);
    }
    const auto means = community_style_means(out.features, comm);
    for (std::size_t c = 0; c < spec.k; ++c) {
        const auto& m = means.means.at(std::to_string(c));
        const double n = double(means.tweet_counts.at(std::to_string(c)));
        const double se = spec.style_noise / std::sqrt(n);
        const auto& planted = out.style_means[c];
        // subjectivity is never renormalized and sits far from the [0,1]
        // edges, so its mean is unbiased
        EXPECT_NEAR(m.subjectivity, planted[3], 3 * se);
        // truncation at 0 and simplex renormalization bias the rest slightly
        EXPECT_NEAR(m.neg, planted[0], 3 * se + 0.02);
        EXPECT_NEAR(m.fallacy[c], planted[4 + c], 3 * se + 0.02);
    }
}

TEST(Report, CsvRoundTripAndJsonFields) {
    const auto m = tables::six_by_six();
    std::istringstream in(confusion_to_csv(m));
    EXPECT_EQ(confusion_from_csv(in), m);
    const auto j = report_to_json(concordance_report(m));
    EXPECT_DOUBLE_EQ(j.at("matched_accuracy").get<double>(), 0.3532330712268112);
    EXPECT_EQ(j.at("matching").at("2").get<std::string>(), "2");
}
