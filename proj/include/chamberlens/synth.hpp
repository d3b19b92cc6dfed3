#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <unordered_set>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "chamberlens/error.hpp"
#include "chamberlens/ingest.hpp"
#include "chamberlens/rng.hpp"
#include "chamberlens/style.hpp"

namespace chamberlens {

/// Width of one planted style row: neg, neu, pos, subjectivity, fallacy_0..12.
inline constexpr std::size_t kStyleWidth = 4 + kFallacySlots;

/// Planted-partition generator settings.
struct SynthSpec {
    std::size_t k = 6;
    std::vector<std::size_t> sizes = std::vector<std::size_t>(6, 50);
    double p_in = 0.2;
    double p_out = 0.002;
    double weight_mean = 4.0; // replies per connected pair, 1 + Poisson(mean - 1)
    std::size_t tweets_per_user = 20;
    std::vector<std::vector<double>> style_means; // k rows; empty -> default_style_means(k)
    double style_noise = 0.05;
    std::uint64_t seed = 42;
    bool lexicon_mode = false;
};

/// Well separated per-community styles: negativity rises with the community
/// index, subjectivity follows a different permutation, and each community
/// concentrates its fallacy mass on slots of its own (c and c + k while
/// 2k fits in the slot count, otherwise c alone).
inline std::vector<std::vector<double>> default_style_means(std::size_t k) {
    std::vector<std::vector<double>> rows;
    for (std::size_t c = 0; c < k; ++c) {
        const double t = k > 1 ? double(c) / double(k - 1) : 0.0;
        const double s = k > 1 ? double((c * 3 + 1) % k) / double(k - 1) : 0.5;
        std::vector<double> row(kStyleWidth, 0.0);
        row[0] = 0.05 + 0.6 * t;
        row[2] = 0.05 + 0.3 * (1.0 - t);
        row[1] = 1.0 - row[0] - row[2];
        row[3] = 0.15 + 0.7 * s;
        std::vector<std::size_t> peaks{c % kFallacySlots};
        if (2 * k <= kFallacySlots) {
            peaks.push_back(c + k);
        }
        const double peak_mass = peaks.size() == 2 ? 0.3 : 0.5;
        const double rest = (1.0 - peak_mass * double(peaks.size())) / double(kFallacySlots - peaks.size());
        for (std::size_t f = 0; f < kFallacySlots; ++f) {
            row[4 + f] = std::find(peaks.begin(), peaks.end(), f) != peaks.end() ? peak_mass : rest;
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

/// Every community gets the first default row: no style signal at all.
inline std::vector<std::vector<double>> identical_style_means(std::size_t k) {
    return std::vector<std::vector<double>>(k, default_style_means(1).front());
}

inline void validate(const SynthSpec& spec) {
    auto prob = [](double p) { return std::isfinite(p) && p >= 0.0 && p <= 1.0; };
    if (spec.k < 1 || spec.sizes.size() != spec.k) {
        throw ValidationError("synth: sizes must list one count per community");
    }
    if (std::any_of(spec.sizes.begin(), spec.sizes.end(), [](std::size_t s) { return s == 0; })) {
        throw ValidationError("synth: community sizes must be positive");
    }
    if (!prob(spec.p_in) || !prob(spec.p_out)) {
        throw ValidationError("synth: p_in and p_out must lie in [0, 1]");
    }
    if (!(spec.weight_mean >= 1.0) || !std::isfinite(spec.weight_mean)) {
        throw ValidationError("synth: weight_mean must be >= 1");
    }
    if (spec.tweets_per_user < 1) {
        throw ValidationError("synth: tweets_per_user must be positive");
    }
    if (!(spec.style_noise >= 0.0) || !std::isfinite(spec.style_noise)) {
        throw ValidationError("synth: style_noise must be non-negative");
    }
    if (!spec.style_means.empty()) {
        if (spec.style_means.size() != spec.k) {
            throw ValidationError("synth: style_means needs one row per community");
        }
        for (const auto& row : spec.style_means) {
            if (row.size() != kStyleWidth || !std::all_of(row.begin(), row.end(), prob)) {
                throw ValidationError("synth: style rows need 17 entries in [0, 1]");
            }
            double fsum = 0.0;
            for (std::size_t f = 4; f < kStyleWidth; ++f) {
                fsum += row[f];
            }
            if (std::abs(row[0] + row[1] + row[2] - 1.0) > kSimplexTolerance ||
                std::abs(fsum - 1.0) > kSimplexTolerance) {
                throw ValidationError("synth: polarity and fallacy blocks must each sum to 1");
            }
        }
    }
}

struct SynthStats {
    std::size_t intra_pairs = 0; // connected pairs inside a community
    std::size_t inter_pairs = 0;
    std::size_t intra_possible = 0;
    std::size_t inter_possible = 0;
};

struct SynthOutput {
    std::vector<TweetRecord> records;
    std::vector<StyleVector> features;            // parallel to records
    std::map<std::string, std::int32_t> truth;    // user -> planted community
    std::vector<std::vector<double>> style_means; // as used
    SynthStats stats;
};

namespace detail {

/// Normal noise around `mean`, truncated symmetrically so the draw stays in
/// [0, 1] and its expectation stays at `mean`.
inline double truncated_normal(Rng& rng, double mean, double sd) {
    const double half = std::min(mean, 1.0 - mean);
    if (sd <= 0.0 || half <= 0.0) {
        return std::clamp(mean, 0.0, 1.0);
    }
    for (int attempt = 0; attempt < 100; ++attempt) {
        const double d = sd * rng.normal();
        if (d >= -half && d <= half) {
            return mean + d;
        }
    }
    return mean;
}

inline StyleVector sample_style(Rng& rng, const std::vector<double>& mean, double noise) {
    StyleVector v;
    std::vector<double> x = mean;
    if (noise > 0.0) {
        for (auto& e : x) {
            e = truncated_normal(rng, e, noise);
        }
        const double psum = x[0] + x[1] + x[2];
        if (psum > 0.0) {
            for (std::size_t i = 0; i < 3; ++i) {
                x[i] /= psum;
            }
        } else {
            x[0] = x[2] = 0.0;
            x[1] = 1.0;
        }
        double fsum = 0.0;
        for (std::size_t f = 4; f < kStyleWidth; ++f) {
            fsum += x[f];
        }
        for (std::size_t f = 4; f < kStyleWidth; ++f) {
            x[f] = fsum > 0.0 ? x[f] / fsum : 1.0 / double(kFallacySlots);
        }
    }
    v.neg = x[0];
    v.neu = x[1];
    v.pos = x[2];
    v.subjectivity = x[3];
    v.fallacy.assign(x.begin() + 4, x.end());
    v.refresh_fallacy_top();
    return v;
}

inline std::vector<std::string> sorted_words(const std::unordered_set<std::string>& set) {
    std::vector<std::string> out(set.begin(), set.end());
    std::sort(out.begin(), out.end());
    return out;
}

// Appends lexicon words at rates that follow the sampled style, so the
// baseline scorer sees the planted signal too.
inline std::string lexicon_text(Rng& rng, const StyleVector& v, std::string base) {
    static const auto neg = sorted_words(Lexicon::bundled().negative);
    static const auto pos = sorted_words(Lexicon::bundled().positive);
    static const auto subj = sorted_words(Lexicon::bundled().subjective);
    auto append = [&](const std::vector<std::string>& words, double rate) {
        const auto count = static_cast<std::size_t>(std::lround(rate * 6.0));
        for (std::size_t i = 0; i < count; ++i) {
            base += ' ';
            base += words[static_cast<std::size_t>(rng.below(words.size()))];
        }
    };
    append(neg, v.neg);
    append(pos, v.pos);
    append(subj, v.subjectivity);
    if (v.fallacy_label == kAdHominem) {
        base += " you";
    }
    return base;
}

} // namespace detail

/// Generates reply tweets from a planted partition plus a parallel feature
/// stream. Every user writes tweets_per_user standalone tweets; reply tweets
/// come on top, one per reply drawn for each connected pair, with the author
/// picked by a fair coin. Output is a pure function of the spec.
inline SynthOutput generate(const SynthSpec& spec) {
    validate(spec);
    SynthOutput out;
    out.style_means = spec.style_means.empty() ? default_style_means(spec.k) : spec.style_means;

    std::vector<std::string> users;
    std::vector<std::int32_t> community;
    for (std::size_t c = 0; c < spec.k; ++c) {
        for (std::size_t i = 0; i < spec.sizes[c]; ++i) {
            users.push_back(fmt::format("u{:05}", users.size()));
            community.push_back(static_cast<std::int32_t>(c));
            out.truth[users.back()] = static_cast<std::int32_t>(c);
        }
    }
    const std::size_t n = users.size();

    std::size_t tweet_no = 0;
    auto next_id = [&] { return fmt::format("t{:07}", tweet_no++); };

    for (std::size_t u = 0; u < n; ++u) {
        for (std::size_t i = 0; i < spec.tweets_per_user; ++i) {
            out.records.push_back({next_id(), users[u], fmt::format("synthetic tweet {} from user {}", i, users[u]),
                                   std::nullopt, std::nullopt});
        }
    }

    Rng graph_rng(mix_seed(spec.seed, 1));
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = a + 1; b < n; ++b) {
            const bool same = community[a] == community[b];
            (same ? out.stats.intra_possible : out.stats.inter_possible) += 1;
            if (!graph_rng.bernoulli(same ? spec.p_in : spec.p_out)) {
                continue;
            }
            (same ? out.stats.intra_pairs : out.stats.inter_pairs) += 1;
            const auto replies = 1 + graph_rng.poisson(spec.weight_mean - 1.0);
            for (std::uint64_t r = 0; r < replies; ++r) {
                const bool a_writes = graph_rng.bernoulli(0.5);
                const auto& author = a_writes ? users[a] : users[b];
                const auto& target = a_writes ? users[b] : users[a];
                out.records.push_back({next_id(), author,
                                       fmt::format("synthetic reply {} from user {} to {}", r, author, target),
                                       std::nullopt, target});
            }
        }
    }

    Rng style_rng(mix_seed(spec.seed, 2));
    Rng word_rng(mix_seed(spec.seed, 3));
    out.features.reserve(out.records.size());
    for (auto& rec : out.records) {
        const auto c = static_cast<std::size_t>(out.truth.at(rec.user_id));
        auto v = detail::sample_style(style_rng, out.style_means[c], spec.style_noise);
        v.tweet_id = rec.tweet_id;
        if (spec.lexicon_mode) {
            rec.text = detail::lexicon_text(word_rng, v, std::move(rec.text));
        }
        out.features.push_back(std::move(v));
    }
    return out;
}

inline SynthSpec synth_spec_from_json(const nlohmann::json& j) {
    static const std::set<std::string> known{"k",         "sizes",         "p_in",          "p_out",
                                             "weight_mean", "tweets_per_user", "style_means", "style_noise",
                                             "seed",      "lexicon_mode",  "identical_styles"};
    if (!j.is_object()) {
        throw ValidationError("synth spec must be a JSON object");
    }
    for (const auto& [key, value] : j.items()) {
        if (!known.contains(key)) {
            throw ValidationError("synth spec: unknown key '" + key + "'");
        }
    }
    SynthSpec s;
    try {
        s.k = j.value("k", s.k);
        s.sizes = j.contains("sizes") ? j.at("sizes").get<std::vector<std::size_t>>()
                                      : std::vector<std::size_t>(s.k, 50);
        s.p_in = j.value("p_in", s.p_in);
        s.p_out = j.value("p_out", s.p_out);
        s.weight_mean = j.value("weight_mean", s.weight_mean);
        s.tweets_per_user = j.value("tweets_per_user", s.tweets_per_user);
        s.style_noise = j.value("style_noise", s.style_noise);
        s.seed = j.value("seed", s.seed);
        s.lexicon_mode = j.value("lexicon_mode", s.lexicon_mode);
        if (j.contains("style_means")) {
            s.style_means = j.at("style_means").get<std::vector<std::vector<double>>>();
        } else if (j.value("identical_styles", false)) {
            s.style_means = identical_style_means(s.k);
        }
    } catch (const nlohmann::json::exception& ex) {
        throw ValidationError(std::string("synth spec: ") + ex.what());
    }
    validate(s);
    return s;
}

inline nlohmann::ordered_json truth_to_json(const SynthOutput& out) {
    nlohmann::ordered_json j;
    nlohmann::ordered_json nodes = nlohmann::ordered_json::object();
    for (const auto& [user, c] : out.truth) {
        nodes[user] = c;
    }
    j["node_community"] = std::move(nodes);
    j["style_means"] = out.style_means;
    return j;
}

inline std::map<std::string, std::int32_t> read_truth_json(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot read " + path.string());
    }
    const auto j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded()) {
        throw ValidationError("truth file is not valid JSON: " + path.string());
    }
    try {
        return j.at("node_community").get<std::map<std::string, std::int32_t>>();
    } catch (const nlohmann::json::exception& ex) {
        throw ValidationError(std::string("malformed truth.json: ") + ex.what());
    }
}

/// Writes tweets.jsonl, features.jsonl and truth.json into `dir`.
inline void write_synth(const SynthOutput& out, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    write_tweets_jsonl(out.records, dir / "tweets.jsonl");
    export_features(out.features, dir / "features.jsonl");
    std::ofstream truth(dir / "truth.json", std::ios::binary);
    if (!truth) {
        throw IoError("cannot write " + (dir / "truth.json").string());
    }
    truth << truth_to_json(out).dump() << '\n';
}

} // namespace chamberlens
