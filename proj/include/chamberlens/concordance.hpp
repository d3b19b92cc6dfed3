#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "chamberlens/assignment.hpp"
#include "chamberlens/error.hpp"
#include "chamberlens/ingest.hpp"
#include "chamberlens/style.hpp"

namespace chamberlens {

/// Rows are text clusters, columns are communities.
struct ConfusionMatrix {
    std::vector<std::string> row_ids;
    std::vector<std::string> col_ids;
    std::vector<std::vector<std::int64_t>> counts;

    std::size_t rows() const { return row_ids.size(); }
    std::size_t cols() const { return col_ids.size(); }

    std::int64_t total() const {
        std::int64_t s = 0;
        for (const auto& r : counts) {
            for (const auto x : r) {
                s += x;
            }
        }
        return s;
    }

    bool operator==(const ConfusionMatrix&) const = default;
};

namespace detail {

template <typename T>
std::string label_string(const T& v) {
    if constexpr (std::is_convertible_v<T, std::string>) {
        return std::string(v);
    } else {
        return std::to_string(v);
    }
}

} // namespace detail

/// counts[i][j] = number of tweets in text cluster i whose author is in
/// community j, over the tweets present in both mappings.
template <typename TextLabel, typename CommunityLabel>
ConfusionMatrix confusion(const std::map<std::string, TextLabel>& text_labels,
                          const std::map<std::string, CommunityLabel>& community_of_tweet) {
    std::set<TextLabel> rows;
    std::set<CommunityLabel> cols;
    std::vector<std::pair<TextLabel, CommunityLabel>> pairs;
    for (const auto& [tweet, label] : text_labels) {
        const auto it = community_of_tweet.find(tweet);
        if (it == community_of_tweet.end()) {
            continue;
        }
        rows.insert(label);
        cols.insert(it->second);
        pairs.emplace_back(label, it->second);
    }
    if (pairs.empty()) {
        throw ValidationError("text clusters and communities share no tweets");
    }
    ConfusionMatrix m;
    std::map<TextLabel, std::size_t> row_index;
    std::map<CommunityLabel, std::size_t> col_index;
    for (const auto& r : rows) {
        row_index[r] = m.row_ids.size();
        m.row_ids.push_back(detail::label_string(r));
    }
    for (const auto& c : cols) {
        col_index[c] = m.col_ids.size();
        m.col_ids.push_back(detail::label_string(c));
    }
    m.counts.assign(m.rows(), std::vector<std::int64_t>(m.cols(), 0));
    for (const auto& [r, c] : pairs) {
        ++m.counts[row_index[r]][col_index[c]];
    }
    return m;
}

struct ClusterMatching {
    /// Column index matched to each row; empty for unmatched rows.
    std::vector<std::optional<std::size_t>> row_to_col;
    std::int64_t matched = 0;
    std::int64_t total = 0;
    double accuracy = 0.0;
    /// Accuracy read off the positional diagonal, without any matching.
    double identity_accuracy = 0.0;
};

inline constexpr std::size_t kPermutationSearchLimit = 8;

/// Optimal one-to-one matching of text clusters to communities maximizing
/// the matched count. Exhaustive search up to 8x8, Hungarian above.
inline ClusterMatching match_clusters(const ConfusionMatrix& m) {
    if (m.rows() == 0 || m.cols() == 0) {
        throw ValidationError("cannot match an empty confusion matrix");
    }
    const std::size_t s = std::max(m.rows(), m.cols());
    std::vector<std::vector<std::int64_t>> square(s, std::vector<std::int64_t>(s, 0));
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) {
            square[i][j] = m.counts[i][j];
        }
    }
    const auto perm = s <= kPermutationSearchLimit ? permutation_search_max(square) : hungarian_max(square);

    ClusterMatching out;
    out.row_to_col.assign(m.rows(), std::nullopt);
    for (std::size_t i = 0; i < m.rows(); ++i) {
        if (perm[i] < m.cols()) {
            out.row_to_col[i] = perm[i];
            out.matched += m.counts[i][perm[i]];
        }
    }
    out.total = m.total();
    std::int64_t diag = 0;
    for (std::size_t i = 0; i < std::min(m.rows(), m.cols()); ++i) {
        diag += m.counts[i][i];
    }
    if (out.total > 0) {
        out.accuracy = double(out.matched) / double(out.total);
        out.identity_accuracy = double(diag) / double(out.total);
    }
    return out;
}

/// Removes one text-cluster row and one community column.
inline ConfusionMatrix drop_cluster(const ConfusionMatrix& m, const std::string& text_cluster_id,
                                    const std::string& community_id) {
    const auto r = std::find(m.row_ids.begin(), m.row_ids.end(), text_cluster_id);
    const auto c = std::find(m.col_ids.begin(), m.col_ids.end(), community_id);
    if (r == m.row_ids.end()) {
        throw ValidationError("unknown text cluster id '" + text_cluster_id + "'");
    }
    if (c == m.col_ids.end()) {
        throw ValidationError("unknown community id '" + community_id + "'");
    }
    if (m.rows() < 2 || m.cols() < 2) {
        throw ValidationError("dropping would leave an empty confusion matrix");
    }
    const auto ri = static_cast<std::size_t>(r - m.row_ids.begin());
    const auto ci = static_cast<std::size_t>(c - m.col_ids.begin());
    ConfusionMatrix out;
    for (std::size_t i = 0; i < m.rows(); ++i) {
        if (i == ri) {
            continue;
        }
        out.row_ids.push_back(m.row_ids[i]);
        auto& row = out.counts.emplace_back();
        for (std::size_t j = 0; j < m.cols(); ++j) {
            if (j != ci) {
                row.push_back(m.counts[i][j]);
            }
        }
    }
    for (std::size_t j = 0; j < m.cols(); ++j) {
        if (j != ci) {
            out.col_ids.push_back(m.col_ids[j]);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Agreement metrics over a contingency table

/// I(A;B) / sqrt(H(A) H(B)) with natural logs; 0 when either side is constant.
inline double nmi(const ConfusionMatrix& m) {
    const double n = double(m.total());
    if (n <= 0.0) {
        return 0.0;
    }
    std::vector<double> a(m.rows(), 0.0), b(m.cols(), 0.0);
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) {
            a[i] += double(m.counts[i][j]);
            b[j] += double(m.counts[i][j]);
        }
    }
    auto entropy = [n](const std::vector<double>& marg) {
        double h = 0.0;
        for (const double x : marg) {
            if (x > 0.0) {
                h -= x / n * std::log(x / n);
            }
        }
        return h;
    };
    const double ha = entropy(a);
    const double hb = entropy(b);
    if (ha <= 0.0 || hb <= 0.0) {
        return 0.0;
    }
    double mi = 0.0;
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) {
            const double x = double(m.counts[i][j]);
            if (x > 0.0) {
                mi += x / n * std::log(n * x / (a[i] * b[j]));
            }
        }
    }
    return std::clamp(mi / std::sqrt(ha * hb), 0.0, 1.0);
}

/// Adjusted Rand index from pair counts. Degenerate tables where the
/// expected and maximum index coincide (e.g. one cluster on both sides)
/// count as perfect agreement.
inline double ari(const ConfusionMatrix& m) {
    auto pairs = [](double x) { return x * (x - 1.0) / 2.0; };
    double n = 0.0, index = 0.0;
    std::vector<double> a(m.rows(), 0.0), b(m.cols(), 0.0);
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) {
            const double x = double(m.counts[i][j]);
            a[i] += x;
            b[j] += x;
            n += x;
            index += pairs(x);
        }
    }
    double sa = 0.0, sb = 0.0;
    for (const double x : a) {
        sa += pairs(x);
    }
    for (const double x : b) {
        sb += pairs(x);
    }
    const double all = pairs(n);
    if (all <= 0.0) {
        return 1.0;
    }
    const double expected = sa * sb / all;
    const double max_index = 0.5 * (sa + sb);
    if (max_index == expected) {
        return 1.0;
    }
    return (index - expected) / (max_index - expected);
}

namespace detail {

template <typename A, typename B>
ConfusionMatrix contingency(std::span<const A> labels_a, std::span<const B> labels_b) {
    if (labels_a.size() != labels_b.size()) {
        throw ValidationError("labelings cover different item counts");
    }
    std::map<std::string, A> ma;
    std::map<std::string, B> mb;
    for (std::size_t i = 0; i < labels_a.size(); ++i) {
        const auto key = fmt::format("{:020}", i);
        ma.emplace(key, labels_a[i]);
        mb.emplace(key, labels_b[i]);
    }
    return confusion(ma, mb);
}

} // namespace detail

template <typename A, typename B>
double nmi(std::span<const A> labels_a, std::span<const B> labels_b) {
    if (labels_a.empty()) {
        return 0.0;
    }
    return nmi(detail::contingency(labels_a, labels_b));
}

template <typename A, typename B>
double ari(std::span<const A> labels_a, std::span<const B> labels_b) {
    if (labels_a.empty()) {
        return 1.0;
    }
    return ari(detail::contingency(labels_a, labels_b));
}

template <typename A, typename B>
double nmi(const std::vector<A>& a, const std::vector<B>& b) {
    return nmi(std::span<const A>(a), std::span<const B>(b));
}

template <typename A, typename B>
double ari(const std::vector<A>& a, const std::vector<B>& b) {
    return ari(std::span<const A>(a), std::span<const B>(b));
}

// ---------------------------------------------------------------------------
// Per-community mean style

struct CommunityMeans {
    std::map<std::string, StyleVector> means; // tweet_id field holds the community id
    std::map<std::string, std::size_t> tweet_counts;
    std::vector<std::string> empty; // requested communities without tweets
};

/// Arithmetic mean of every style feature per community. Communities listed
/// in `expected` that receive no tweets are reported in `empty`.
template <typename CommunityLabel>
CommunityMeans community_style_means(const std::vector<StyleVector>& vectors,
                                     const std::map<std::string, CommunityLabel>& community_of_tweet,
                                     const std::vector<CommunityLabel>& expected = {}) {
    std::map<CommunityLabel, std::pair<StyleVector, std::size_t>> acc;
    for (const auto& v : vectors) {
        const auto it = community_of_tweet.find(v.tweet_id);
        if (it == community_of_tweet.end()) {
            continue;
        }
        auto [slot, fresh] = acc.try_emplace(it->second);
        auto& [sum, count] = slot->second;
        if (fresh) {
            sum.neu = 0.0;
            sum.fallacy.assign(v.fallacy.size(), 0.0);
        }
        sum.neg += v.neg;
        sum.neu += v.neu;
        sum.pos += v.pos;
        sum.subjectivity += v.subjectivity;
        for (std::size_t i = 0; i < v.fallacy.size(); ++i) {
            sum.fallacy[i] += v.fallacy[i];
        }
        ++count;
    }
    CommunityMeans out;
    for (auto& [label, entry] : acc) {
        auto& [mean, count] = entry;
        const double c = double(count);
        mean.tweet_id = detail::label_string(label);
        mean.neg /= c;
        mean.neu /= c;
        mean.pos /= c;
        mean.subjectivity /= c;
        for (auto& x : mean.fallacy) {
            x /= c;
        }
        mean.refresh_fallacy_top();
        out.tweet_counts[mean.tweet_id] = count;
        out.means[mean.tweet_id] = mean;
    }
    for (const auto& e : expected) {
        if (!acc.contains(e)) {
            out.empty.push_back(detail::label_string(e));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Report and CSV files

struct ConcordanceReport {
    ConfusionMatrix matrix;
    ClusterMatching matching;
    double nmi = 0.0;
    double ari = 0.0;
    CommunityMeans means;
    std::optional<double> community_recovery_ari;
};

inline ConcordanceReport concordance_report(ConfusionMatrix matrix, CommunityMeans means = {}) {
    ConcordanceReport r;
    r.matching = match_clusters(matrix);
    r.nmi = nmi(matrix);
    r.ari = ari(matrix);
    r.matrix = std::move(matrix);
    r.means = std::move(means);
    return r;
}

inline nlohmann::ordered_json report_to_json(const ConcordanceReport& r) {
    nlohmann::ordered_json j;
    j["matrix"] = {{"rows", r.matrix.row_ids}, {"cols", r.matrix.col_ids}, {"counts", r.matrix.counts}};
    nlohmann::ordered_json matching = nlohmann::ordered_json::object();
    for (std::size_t i = 0; i < r.matrix.rows(); ++i) {
        if (const auto c = r.matching.row_to_col[i]) {
            matching[r.matrix.row_ids[i]] = r.matrix.col_ids[*c];
        }
    }
    j["matching"] = std::move(matching);
    j["matched_count"] = r.matching.matched;
    j["total_count"] = r.matching.total;
    j["matched_accuracy"] = r.matching.accuracy;
    j["identity_accuracy"] = r.matching.identity_accuracy;
    j["nmi"] = r.nmi;
    j["ari"] = r.ari;
    if (r.community_recovery_ari) {
        j["community_recovery_ari"] = *r.community_recovery_ari;
    }
    nlohmann::ordered_json means = nlohmann::ordered_json::object();
    for (const auto& [id, v] : r.means.means) {
        means[id] = {{"tweets", r.means.tweet_counts.at(id)},
                     {"neg", v.neg},
                     {"neu", v.neu},
                     {"pos", v.pos},
                     {"subjectivity", v.subjectivity},
                     {"fallacy", v.fallacy}};
    }
    j["per_community_means"] = std::move(means);
    j["communities_without_tweets"] = r.means.empty;
    return j;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    out << text;
    if (!out) {
        throw IoError("write failed for " + path.string());
    }
}

inline std::string confusion_to_csv(const ConfusionMatrix& m) {
    std::string out = "text_cluster";
    for (const auto& c : m.col_ids) {
        out += ',' + c;
    }
    out += '\n';
    for (std::size_t i = 0; i < m.rows(); ++i) {
        out += m.row_ids[i];
        for (const auto x : m.counts[i]) {
            out += ',' + std::to_string(x);
        }
        out += '\n';
    }
    return out;
}

/// Reads a confusion matrix: header row of community ids after one corner
/// cell, then one row per text cluster (id, counts...).
inline ConfusionMatrix confusion_from_csv(std::istream& in) {
    detail::CsvReader reader(in);
    std::vector<std::string> row;
    if (!reader.next_row(row) || row.size() < 2) {
        throw FormatError("confusion CSV needs a header with at least one community id");
    }
    ConfusionMatrix m;
    m.col_ids.assign(row.begin() + 1, row.end());
    while (reader.next_row(row)) {
        if (row.size() == 1 && row[0].empty()) {
            continue;
        }
        if (row.size() != m.cols() + 1) {
            throw FormatError("confusion CSV row '" + row[0] + "' has the wrong number of cells");
        }
        m.row_ids.push_back(row[0]);
        auto& counts = m.counts.emplace_back();
        for (std::size_t j = 1; j < row.size(); ++j) {
            try {
                std::size_t used = 0;
                const long long v = std::stoll(row[j], &used);
                if (used != row[j].size() || v < 0) {
                    throw std::invalid_argument("bad count");
                }
                counts.push_back(v);
            } catch (const std::exception&) {
                throw FormatError("confusion CSV cell '" + row[j] + "' is not a non-negative integer");
            }
        }
    }
    if (m.rows() == 0) {
        throw FormatError("confusion CSV has no data rows");
    }
    return m;
}

inline ConfusionMatrix read_confusion_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot read " + path.string());
    }
    return confusion_from_csv(in);
}

/// Long format: community,feature,mean.
inline std::string means_to_csv(const CommunityMeans& means) {
    std::string out = "community,feature,mean\n";
    for (const auto& [id, v] : means.means) {
        out += fmt::format("{},neg,{}\n", id, v.neg);
        out += fmt::format("{},neu,{}\n", id, v.neu);
        out += fmt::format("{},pos,{}\n", id, v.pos);
        out += fmt::format("{},subjectivity,{}\n", id, v.subjectivity);
        for (std::size_t i = 0; i < v.fallacy.size(); ++i) {
            out += fmt::format("{},fallacy_{},{}\n", id, i, v.fallacy[i]);
        }
    }
    return out;
}

/// Two-column projection used for the negativity/subjectivity scatter.
inline std::string projection_to_csv(const CommunityMeans& means) {
    std::string out = "community,mean_negativity,mean_subjectivity,tweets\n";
    for (const auto& [id, v] : means.means) {
        out += fmt::format("{},{},{},{}\n", id, v.neg, v.subjectivity, means.tweet_counts.at(id));
    }
    return out;
}

} // namespace chamberlens
