#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "chamberlens/error.hpp"
#include "chamberlens/lexicon_data.hpp" // generated from data/lexicons/*.txt

namespace chamberlens {

/// Fallacy slots. Twelve named classes plus a trailing "other/none" slot so
/// that labels span 0..12.
inline constexpr std::size_t kFallacySlots = 13;

inline constexpr std::array<std::string_view, kFallacySlots> kFallacyNames{
    "ad_hominem",       "ad_populum",         "false_causality",     "circular_claim",
    "appeal_to_emotion", "fallacy_of_relevance", "deductive_fallacy", "intentional_fallacy",
    "fallacy_of_extension", "false_dilemma",  "fallacy_of_credibility", "equivocation",
    "other"};

inline constexpr std::size_t kAdHominem = 0;
inline constexpr std::size_t kAdPopulum = 1;

struct StyleVector {
    std::string tweet_id;
    double neg = 0.0;
    double neu = 1.0;
    double pos = 0.0;
    double subjectivity = 0.0;
    std::vector<double> fallacy = std::vector<double>(kFallacySlots, 1.0 / double(kFallacySlots));
    std::size_t fallacy_label = 0;
    double fallacy_score = 1.0 / double(kFallacySlots);

    /// Sets label/score from the distribution; ties go to the lowest slot.
    void refresh_fallacy_top() {
        const auto it = std::max_element(fallacy.begin(), fallacy.end());
        fallacy_label = static_cast<std::size_t>(it - fallacy.begin());
        fallacy_score = *it;
    }

    bool operator==(const StyleVector&) const = default;
};

inline constexpr double kSimplexTolerance = 1e-6;

/// Throws ValidationError naming the first violated invariant.
inline void validate(const StyleVector& v) {
    auto in_unit = [](double x) { return std::isfinite(x) && x >= 0.0 && x <= 1.0; };
    if (!in_unit(v.neg) || !in_unit(v.neu) || !in_unit(v.pos)) {
        throw ValidationError("polarity entries must lie in [0, 1]");
    }
    if (std::abs(v.neg + v.neu + v.pos - 1.0) > kSimplexTolerance) {
        throw ValidationError("polarity triple must sum to 1");
    }
    if (!in_unit(v.subjectivity)) {
        throw ValidationError("subjectivity must lie in [0, 1]");
    }
    if (v.fallacy.empty() || !std::all_of(v.fallacy.begin(), v.fallacy.end(), in_unit)) {
        throw ValidationError("fallacy entries must lie in [0, 1]");
    }
    double sum = 0.0;
    for (const double x : v.fallacy) {
        sum += x;
    }
    if (std::abs(sum - 1.0) > kSimplexTolerance) {
        throw ValidationError("fallacy distribution must sum to 1");
    }
    if (v.fallacy_label >= v.fallacy.size() || v.fallacy_score != v.fallacy[v.fallacy_label]) {
        throw ValidationError("fallacy_score must equal fallacy[fallacy_label]");
    }
    if (v.fallacy_score < *std::max_element(v.fallacy.begin(), v.fallacy.end())) {
        throw ValidationError("fallacy_label must be the argmax of the distribution");
    }
}

// ---------------------------------------------------------------------------
// Lexicon baseline scorer

class Lexicon {
public:
    std::unordered_set<std::string> positive;
    std::unordered_set<std::string> negative;
    std::unordered_set<std::string> subjective;
    std::unordered_set<std::string> first_person;
    std::unordered_set<std::string> second_person;
    std::unordered_set<std::string> quantifiers;

    /// Word lists shipped with the library.
    static const Lexicon& bundled() {
        static const Lexicon lex = [] {
            Lexicon l;
            l.positive = words(lexicon_data::kPositive);
            l.negative = words(lexicon_data::kNegative);
            l.subjective = words(lexicon_data::kSubjective);
            l.first_person = words(lexicon_data::kFirstPerson);
            l.second_person = words(lexicon_data::kSecondPerson);
            l.quantifiers = words(lexicon_data::kQuantifiers);
            return l;
        }();
        return lex;
    }

    /// One token per line; blank lines and '#' comments ignored.
    static std::unordered_set<std::string> words(std::string_view list) {
        std::unordered_set<std::string> out;
        std::size_t start = 0;
        while (start <= list.size()) {
            auto end = list.find('\n', start);
            if (end == std::string_view::npos) {
                end = list.size();
            }
            auto line = list.substr(start, end - start);
            while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t')) {
                line.remove_suffix(1);
            }
            while (!line.empty() && (line.front() == ' ' || line.front() == '\t')) {
                line.remove_prefix(1);
            }
            if (!line.empty() && line.front() != '#') {
                out.emplace(line);
            }
            start = end + 1;
        }
        return out;
    }
};

/// Lowercased ASCII word tokens (letters, digits, apostrophes, hyphens).
/// Bytes >= 0x80 act as separators so the result is locale independent.
inline std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string cur;
    auto flush = [&] {
        while (!cur.empty() && (cur.back() == '\'' || cur.back() == '-')) {
            cur.pop_back();
        }
        std::size_t lead = 0;
        while (lead < cur.size() && (cur[lead] == '\'' || cur[lead] == '-')) {
            ++lead;
        }
        if (lead < cur.size()) {
            tokens.push_back(cur.substr(lead));
        }
        cur.clear();
    };
    for (const char ch : text) {
        const auto c = static_cast<unsigned char>(ch);
        if ((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '\'' || c == '-') {
            cur.push_back(static_cast<char>(c));
        } else if (c >= 'A' && c <= 'Z') {
            cur.push_back(static_cast<char>(c - 'A' + 'a'));
        } else {
            flush();
        }
    }
    flush();
    return tokens;
}

/// Offline stand-in for the pretrained polarity, subjectivity and fallacy
/// models. Pure function of the text and lexicon.
inline StyleVector score_baseline(std::string_view text, const Lexicon& lex = Lexicon::bundled()) {
    StyleVector v;
    const auto tokens = tokenize(text);
    if (tokens.empty()) {
        return v;
    }
    std::size_t p = 0;
    std::size_t n = 0;
    std::size_t subj = 0;
    bool second_person = false;
    bool quantifier = false;
    for (const auto& t : tokens) {
        p += lex.positive.contains(t);
        n += lex.negative.contains(t);
        const bool first = lex.first_person.contains(t);
        const bool second = lex.second_person.contains(t);
        subj += lex.subjective.contains(t) + first + second;
        second_person = second_person || second;
        quantifier = quantifier || lex.quantifiers.contains(t);
    }
    const double t = static_cast<double>(tokens.size());
    const double hits = static_cast<double>(p + n);
    const double strength = std::min(1.0, hits / t * 4.0);
    v.neg = static_cast<double>(n) / (hits + 1.0) * strength;
    v.pos = static_cast<double>(p) / (hits + 1.0) * strength;
    v.neu = 1.0 - v.neg - v.pos;
    v.subjectivity = std::clamp(static_cast<double>(subj) / t, 0.0, 1.0);

    if ((second_person && n > 0) || quantifier) {
        if (second_person && n > 0) {
            v.fallacy[kAdHominem] += 0.3;
        }
        if (quantifier) {
            v.fallacy[kAdPopulum] += 0.3;
        }
        double sum = 0.0;
        for (const double x : v.fallacy) {
            sum += x;
        }
        for (auto& x : v.fallacy) {
            x /= sum;
        }
    }
    v.refresh_fallacy_top();
    return v;
}

// ---------------------------------------------------------------------------
// features.jsonl interchange

inline nlohmann::ordered_json to_json(const StyleVector& v) {
    nlohmann::ordered_json j;
    j["tweet_id"] = v.tweet_id;
    j["neg"] = v.neg;
    j["neu"] = v.neu;
    j["pos"] = v.pos;
    j["subjectivity"] = v.subjectivity;
    j["fallacy"] = v.fallacy;
    j["fallacy_label"] = v.fallacy_label;
    j["fallacy_score"] = v.fallacy_score;
    return j;
}

inline void export_features(const std::vector<StyleVector>& vectors, std::ostream& out) {
    for (const auto& v : vectors) {
        out << to_json(v).dump(-1, ' ', false, nlohmann::json::error_handler_t::replace) << '\n';
    }
}

inline void export_features(const std::vector<StyleVector>& vectors, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    export_features(vectors, out);
    if (!out) {
        throw IoError("write failed for " + path.string());
    }
}

struct FeatureImport {
    std::vector<StyleVector> vectors;
    std::size_t lines = 0;
    std::size_t rejected = 0;
    std::size_t renormalized = 0;
};

namespace detail {

inline constexpr double kRenormTolerance = 1e-3;

// Renormalizes a near-simplex block in place. False when the block is too
// far from summing to one.
inline bool settle_simplex(std::span<double> block, bool& changed) {
    double sum = 0.0;
    for (const double x : block) {
        sum += x;
    }
    if (std::abs(sum - 1.0) <= kSimplexTolerance) {
        return true;
    }
    if (std::abs(sum - 1.0) > kRenormTolerance) {
        return false;
    }
    for (auto& x : block) {
        x /= sum;
    }
    changed = true;
    return true;
}

inline std::optional<StyleVector> parse_feature_line(const std::string& line, bool& renormalized) {
    const auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        return std::nullopt;
    }
    try {
        StyleVector v;
        const auto& id = j.at("tweet_id");
        v.tweet_id = id.is_string() ? id.get<std::string>() : id.dump();
        if (v.tweet_id.empty()) {
            return std::nullopt;
        }
        v.neg = j.at("neg").get<double>();
        v.neu = j.at("neu").get<double>();
        v.pos = j.at("pos").get<double>();
        v.subjectivity = j.at("subjectivity").get<double>();
        v.fallacy = j.at("fallacy").get<std::vector<double>>();
        if (v.fallacy.size() != kFallacySlots) {
            return std::nullopt;
        }
        auto in_unit = [](double x) { return std::isfinite(x) && x >= 0.0 && x <= 1.0; };
        if (!in_unit(v.neg) || !in_unit(v.neu) || !in_unit(v.pos) || !in_unit(v.subjectivity) ||
            !std::all_of(v.fallacy.begin(), v.fallacy.end(), in_unit)) {
            return std::nullopt;
        }
        bool changed = false;
        std::array<double, 3> polarity{v.neg, v.neu, v.pos};
        if (!settle_simplex(polarity, changed) || !settle_simplex(v.fallacy, changed)) {
            return std::nullopt;
        }
        v.neg = polarity[0];
        v.neu = polarity[1];
        v.pos = polarity[2];

        const double top = *std::max_element(v.fallacy.begin(), v.fallacy.end());
        const auto label = j.at("fallacy_label").get<long long>();
        const auto score = j.at("fallacy_score").get<double>();
        if (label < 0 || static_cast<std::size_t>(label) >= kFallacySlots) {
            return std::nullopt;
        }
        v.fallacy_label = static_cast<std::size_t>(label);
        // the stated label must be a maximum; its score is re-derived
        if (top - v.fallacy[v.fallacy_label] > kSimplexTolerance ||
            std::abs(score - v.fallacy[v.fallacy_label]) > kRenormTolerance) {
            return std::nullopt;
        }
        if (v.fallacy[v.fallacy_label] != top) {
            v.refresh_fallacy_top();
            changed = true;
        }
        v.fallacy_score = v.fallacy[v.fallacy_label];
        renormalized = changed || score != v.fallacy_score;
        return v;
    } catch (const nlohmann::json::exception&) {
        return std::nullopt;
    }
}

} // namespace detail

inline constexpr double kMaxRejectedFraction = 0.10;

/// Reads and validates features.jsonl. Sums within 1e-3 of one are
/// renormalized; worse records are rejected and counted. Fails when more
/// than 10% of the records are rejected.
inline FeatureImport import_features(std::istream& in) {
    FeatureImport out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        ++out.lines;
        bool renormalized = false;
        if (auto v = detail::parse_feature_line(line, renormalized)) {
            out.renormalized += renormalized;
            out.vectors.push_back(std::move(*v));
        } else {
            ++out.rejected;
        }
    }
    if (out.lines > 0 && double(out.rejected) > kMaxRejectedFraction * double(out.lines)) {
        throw ValidationError("rejected " + std::to_string(out.rejected) + " of " + std::to_string(out.lines) +
                              " feature records");
    }
    return out;
}

inline FeatureImport import_features(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot read " + path.string());
    }
    return import_features(in);
}

// ---------------------------------------------------------------------------
// Feature matrix

enum class FeatureMode { distribution, top1 };

inline FeatureMode parse_feature_mode(std::string_view s) {
    if (s == "distribution") {
        return FeatureMode::distribution;
    }
    if (s == "top1") {
        return FeatureMode::top1;
    }
    throw ValidationError("unknown feature mode '" + std::string(s) + "' (expected distribution or top1)");
}

struct FeatureMatrix {
    std::vector<std::string> rows;
    std::vector<std::string> dims;
    std::vector<double> values; // row-major

    std::size_t row_count() const { return rows.size(); }
    std::size_t dim_count() const { return dims.size(); }

    std::span<const double> row(std::size_t i) const { return {values.data() + i * dims.size(), dims.size()}; }
    std::span<double> row(std::size_t i) { return {values.data() + i * dims.size(), dims.size()}; }

    double at(std::size_t i, std::size_t j) const { return values[i * dims.size() + j]; }
};

/// distribution: [neg, neu, pos, subjectivity, fallacy_0..fallacy_{L-1}]
/// top1:         [neg, neu, pos, subjectivity, fallacy_score, onehot_0..onehot_{L-1}]
inline FeatureMatrix assemble_matrix(const std::vector<StyleVector>& vectors,
                                     FeatureMode mode = FeatureMode::distribution) {
    if (vectors.empty()) {
        throw ValidationError("cannot assemble a feature matrix from zero vectors");
    }
    const std::size_t slots = vectors.front().fallacy.size();
    FeatureMatrix m;
    m.dims = {"neg", "neu", "pos", "subjectivity"};
    if (mode == FeatureMode::top1) {
        m.dims.push_back("fallacy_score");
    }
    for (std::size_t i = 0; i < slots; ++i) {
        m.dims.push_back((mode == FeatureMode::top1 ? "onehot_" : "fallacy_") + std::to_string(i));
    }
    m.rows.reserve(vectors.size());
    m.values.reserve(vectors.size() * m.dims.size());
    for (const auto& v : vectors) {
        if (v.fallacy.size() != slots) {
            throw ValidationError("inconsistent fallacy slot count");
        }
        m.rows.push_back(v.tweet_id);
        m.values.insert(m.values.end(), {v.neg, v.neu, v.pos, v.subjectivity});
        if (mode == FeatureMode::distribution) {
            m.values.insert(m.values.end(), v.fallacy.begin(), v.fallacy.end());
        } else {
            m.values.push_back(v.fallacy_score);
            for (std::size_t i = 0; i < slots; ++i) {
                m.values.push_back(i == v.fallacy_label ? 1.0 : 0.0);
            }
        }
    }
    return m;
}

} // namespace chamberlens
