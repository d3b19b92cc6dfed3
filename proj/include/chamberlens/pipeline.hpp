#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "chamberlens/cluster.hpp"
#include "chamberlens/community.hpp"
#include "chamberlens/concordance.hpp"
#include "chamberlens/error.hpp"
#include "chamberlens/graph.hpp"
#include "chamberlens/ingest.hpp"
#include "chamberlens/layout.hpp"
#include "chamberlens/parallel.hpp"
#include "chamberlens/style.hpp"
#include "chamberlens/synth.hpp"

namespace chamberlens {

namespace fs = std::filesystem;

/// Progress messages go to stderr; stdout is reserved for machine output.
class Log {
public:
    explicit Log(std::ostream& err = std::cerr, bool quiet = false) : err_(&err), quiet_(quiet) {}

    template <typename... Args>
    void info(fmt::format_string<Args...> f, Args&&... args) const {
        if (!quiet_) {
            *err_ << fmt::format(f, std::forward<Args>(args)...) << '\n';
        }
    }

    template <typename... Args>
    void warn(fmt::format_string<Args...> f, Args&&... args) const {
        *err_ << "warning: " << fmt::format(f, std::forward<Args>(args)...) << '\n';
    }

private:
    std::ostream* err_;
    bool quiet_;
};

enum class ScorerKind { baseline, import };

inline ScorerKind parse_scorer(std::string_view s) {
    if (s == "baseline") {
        return ScorerKind::baseline;
    }
    if (s == "import") {
        return ScorerKind::import;
    }
    throw ValidationError("unknown scorer '" + std::string(s) + "' (expected baseline or import)");
}

struct PipelineConfig {
    fs::path tweets;
    DatasetFormat format = DatasetFormat::jsonl;
    ColumnMapping columns;
    ScorerKind scorer = ScorerKind::baseline;
    std::optional<fs::path> features_in;
    FeatureMode feature_mode = FeatureMode::distribution;
    std::uint64_t min_weight = 3;
    std::uint64_t seed = 0;
    double resolution = 1.0;
    std::size_t top_k = 6;
    std::size_t min_size = 10;
    std::optional<std::size_t> k;
    std::size_t restarts = 1;
    std::size_t max_iters = 300;
    double tol = 1e-6;
    bool include_rest = false;
    std::optional<fs::path> truth;
    fs::path output_dir = "out";
    bool layout = false;
    std::size_t layout_iters = 750;
};

/// Parses a config document. Relative paths resolve against `base_dir`
/// (the config file's directory); unknown keys are rejected.
inline PipelineConfig config_from_json(const nlohmann::json& j, const fs::path& base_dir) {
    static const std::set<std::string> known{
        "tweets", "format",  "columns",  "scorer",       "features_in", "feature_mode", "min_weight",
        "seed",   "resolution", "top_k", "min_size",     "k",           "restarts",     "max_iters",
        "tol",    "include_rest", "truth", "output_dir", "layout",      "layout_iters"};
    if (!j.is_object()) {
        throw ValidationError("config must be a JSON object");
    }
    for (const auto& [key, value] : j.items()) {
        if (!known.contains(key)) {
            throw ValidationError("config: unknown key '" + key + "'");
        }
    }
    auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base_dir / p; };
    PipelineConfig c;
    try {
        if (!j.contains("tweets")) {
            throw ValidationError("config: 'tweets' is required");
        }
        c.tweets = resolve(j.at("tweets").get<std::string>());
        c.format = parse_format(j.value("format", std::string("jsonl")));
        if (j.contains("columns")) {
            static const std::set<std::string> cols{"tweet_id", "user_id", "text", "created_at", "reply_to_user_id"};
            const auto& m = j.at("columns");
            for (const auto& [key, value] : m.items()) {
                if (!cols.contains(key)) {
                    throw ValidationError("config: unknown column key '" + key + "'");
                }
            }
            c.columns.tweet_id = m.value("tweet_id", c.columns.tweet_id);
            c.columns.user_id = m.value("user_id", c.columns.user_id);
            c.columns.text = m.value("text", c.columns.text);
            c.columns.created_at = m.value("created_at", c.columns.created_at);
            c.columns.reply_to_user_id = m.value("reply_to_user_id", c.columns.reply_to_user_id);
        }
        c.scorer = parse_scorer(j.value("scorer", std::string("baseline")));
        if (j.contains("features_in") && !j.at("features_in").is_null()) {
            c.features_in = resolve(j.at("features_in").get<std::string>());
        }
        c.feature_mode = parse_feature_mode(j.value("feature_mode", std::string("distribution")));
        c.min_weight = j.value("min_weight", c.min_weight);
        c.seed = j.value("seed", c.seed);
        c.resolution = j.value("resolution", c.resolution);
        c.top_k = j.value("top_k", c.top_k);
        c.min_size = j.value("min_size", c.min_size);
        if (j.contains("k") && !j.at("k").is_null()) {
            c.k = j.at("k").get<std::size_t>();
        }
        c.restarts = j.value("restarts", c.restarts);
        c.max_iters = j.value("max_iters", c.max_iters);
        c.tol = j.value("tol", c.tol);
        c.include_rest = j.value("include_rest", c.include_rest);
        if (j.contains("truth") && !j.at("truth").is_null()) {
            c.truth = resolve(j.at("truth").get<std::string>());
        }
        c.output_dir = resolve(j.value("output_dir", std::string("out")));
        c.layout = j.value("layout", c.layout);
        c.layout_iters = j.value("layout_iters", c.layout_iters);
    } catch (const nlohmann::json::exception& ex) {
        throw ValidationError(std::string("config: ") + ex.what());
    }
    if (c.scorer == ScorerKind::import && !c.features_in) {
        throw ValidationError("config: scorer 'import' needs 'features_in'");
    }
    if (c.min_weight < 1) {
        throw ValidationError("config: min_weight must be >= 1");
    }
    return c;
}

inline PipelineConfig load_config(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot read " + path.string());
    }
    const auto j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded()) {
        throw ValidationError("config is not valid JSON: " + path.string());
    }
    return config_from_json(j, path.parent_path());
}

// ---------------------------------------------------------------------------
// Stages. Each reads its inputs from files and writes its outputs to files,
// so `pipeline` and the individual subcommands produce identical artifacts.

inline ParseStats ingest_stage(const fs::path& input, DatasetFormat format, const ColumnMapping& cols,
                               const fs::path& out, const Log& log) {
    const auto parsed = parse_dataset(input, format, cols);
    write_tweets_jsonl(parsed.records, out);
    log.info("ingest: {} rows, {} records, {} skipped, {} duplicates", parsed.stats.rows, parsed.records.size(),
             parsed.stats.skipped, parsed.stats.duplicates);
    return parsed.stats;
}

inline std::vector<TweetRecord> read_tweets(const fs::path& path) {
    return parse_dataset(path, DatasetFormat::jsonl).records;
}

inline InteractionGraph graph_stage(const fs::path& tweets, std::uint64_t min_weight, const fs::path& out,
                                    const Log& log) {
    const auto full = build_reply_graph(read_tweets(tweets));
    auto g = threshold_graph(full, min_weight);
    write_graph_json(g, out);
    log.info("graph: {} nodes / {} edges before threshold, {} / {} with weight >= {}", full.node_count(),
             full.edge_count(), g.node_count(), g.edge_count(), min_weight);
    return g;
}

struct CommunityArgs {
    std::uint64_t seed = 0;
    double resolution = 1.0;
    std::size_t top_k = 6;
    std::size_t min_size = 10;
};

inline TopCommunities communities_stage(const fs::path& graph_path, const CommunityArgs& args, const fs::path& out,
                                        const Log& log) {
    const auto g = read_graph_json(graph_path);
    const auto p = louvain(g, args.seed, args.resolution);
    auto top = select_top_communities(p, g, args.top_k, args.min_size);
    write_partition_json(p, g, top.ids, out);
    log.info("communities: {} found, modularity {:.4f}, {} selected", p.community_count(), p.modularity, top.ids.size());
    if (top.shortfall > 0) {
        log.warn("only {} communities have >= {} members ({} short of top-k {})", top.ids.size(), args.min_size,
                 top.shortfall, args.top_k);
    }
    return top;
}

inline void layout_stage(const fs::path& graph_path, const LayoutOptions& opt, const fs::path& out, const Log& log) {
    const auto g = read_graph_json(graph_path);
    const auto result = openord_layout_traced(g, opt);
    write_layout_csv(g, result.positions, out);
    log.info("layout: {} nodes placed over {} iterations, {} edges cut", g.node_count(), opt.total_iters,
             result.edges_cut);
}

inline std::size_t score_stage(const fs::path& tweets_path, ScorerKind scorer,
                               const std::optional<fs::path>& features_in, const fs::path& out, const Log& log) {
    const auto tweets = read_tweets(tweets_path);
    std::vector<StyleVector> vectors(tweets.size());
    std::size_t missing = 0;
    if (scorer == ScorerKind::baseline) {
        const auto& lex = Lexicon::bundled();
        parallel_for(tweets.size(), [&](std::size_t begin, std::size_t end) {
            for (std::size_t i = begin; i < end; ++i) {
                vectors[i] = score_baseline(tweets[i].text, lex);
                vectors[i].tweet_id = tweets[i].tweet_id;
            }
        });
    } else {
        if (!features_in) {
            throw ValidationError("scorer 'import' needs --features-in");
        }
        auto imported = import_features(*features_in);
        log.info("score: imported {} feature records ({} rejected, {} renormalized)", imported.vectors.size(),
                 imported.rejected, imported.renormalized);
        std::map<std::string, StyleVector> by_id;
        for (auto& v : imported.vectors) {
            by_id[v.tweet_id] = std::move(v);
        }
        std::vector<StyleVector> aligned;
        aligned.reserve(tweets.size());
        for (const auto& t : tweets) {
            if (auto it = by_id.find(t.tweet_id); it != by_id.end()) {
                aligned.push_back(it->second);
            } else {
                ++missing;
            }
        }
        vectors = std::move(aligned);
        if (missing > 0) {
            log.warn("{} tweets have no imported features and are left out", missing);
        }
    }
    export_features(vectors, out);
    log.info("score: wrote {} feature vectors", vectors.size());
    return vectors.size();
}

/// Community of every tweet whose author belongs to a selected community
/// (all communities when none are marked selected). With include_rest the
/// remaining tweets map to community -1.
inline std::map<std::string, std::int32_t> tweet_communities(const std::vector<TweetRecord>& tweets,
                                                             const CommunityFile& partition, bool include_rest) {
    std::set<CommunityId> selected(partition.selected.begin(), partition.selected.end());
    std::map<std::string, std::int32_t> out;
    for (const auto& t : tweets) {
        const auto it = partition.community_of.find(t.user_id);
        const bool chosen = it != partition.community_of.end() && (selected.empty() || selected.contains(it->second));
        if (chosen) {
            out[t.tweet_id] = it->second;
        } else if (include_rest) {
            out[t.tweet_id] = -1;
        }
    }
    return out;
}

struct ClusterArgs {
    fs::path features;
    FeatureMode mode = FeatureMode::distribution;
    std::optional<std::size_t> k;
    std::uint64_t seed = 0;
    std::size_t max_iters = 300;
    double tol = 1e-6;
    std::size_t restarts = 1;
    std::optional<fs::path> partition; // restricts rows to selected communities, sets default k
    std::optional<fs::path> tweets;
    bool include_rest = false;
};

inline TextClustering cluster_stage(const ClusterArgs& args, const fs::path& out, const Log& log) {
    auto vectors = import_features(args.features).vectors;
    std::size_t default_k = 6;
    if (args.partition) {
        if (!args.tweets) {
            throw ValidationError("cluster: --partition also needs --tweets to map tweets to authors");
        }
        const auto partition = read_partition_json(*args.partition);
        const auto membership = tweet_communities(read_tweets(*args.tweets), partition, args.include_rest);
        std::erase_if(vectors, [&](const StyleVector& v) { return !membership.contains(v.tweet_id); });
        if (!partition.selected.empty()) {
            default_k = partition.selected.size();
        }
    }
    if (vectors.empty()) {
        throw ValidationError("cluster: no feature rows to cluster");
    }
    KMeansOptions opt;
    opt.k = args.k.value_or(default_k);
    opt.seed = args.seed;
    opt.max_iters = args.max_iters;
    opt.tol = args.tol;
    opt.restarts = args.restarts;
    const auto matrix = assemble_matrix(vectors, args.mode);
    if (matrix.row_count() < 2) {
        throw ValidationError("cluster: need at least two feature rows");
    }
    const auto z = standardize(matrix);
    if (!z.flagged.empty()) {
        log.info("cluster: {} constant feature columns zeroed", z.flagged.size());
    }
    auto result = kmeans(z.matrix, opt);
    write_clusters_json(result, z.matrix.rows, out);
    log.info("cluster: {} rows, k={}, inertia {:.4f}, {} iterations, {} empty clusters", matrix.row_count(), opt.k,
             result.inertia, result.iterations, result.empty_clusters);
    return result;
}

struct EvaluateArgs {
    fs::path tweets;
    fs::path features;
    fs::path clusters;
    fs::path partition;
    std::optional<fs::path> truth;
    bool include_rest = false;
};

namespace detail {

inline void write_report_files(const ConcordanceReport& report, const fs::path& out_dir) {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    write_text(out_dir / "report.json", report_to_json(report).dump(2) + "\n");
    write_text(out_dir / "confusion.csv", confusion_to_csv(report.matrix));
    write_text(out_dir / "means.csv", means_to_csv(report.means));
    write_text(out_dir / "projection.csv", projection_to_csv(report.means));
}

inline void rename_rest(ConfusionMatrix& m) {
    for (auto& c : m.col_ids) {
        if (c == "-1") {
            c = "rest";
        }
    }
}

} // namespace detail

inline ConcordanceReport evaluate_stage(const EvaluateArgs& args, const fs::path& out_dir, const Log& log) {
    const auto tweets = read_tweets(args.tweets);
    const auto partition = read_partition_json(args.partition);
    const auto membership = tweet_communities(tweets, partition, args.include_rest);
    const auto clusters = read_clusters_json(args.clusters);
    auto matrix = confusion(clusters.labels, membership);
    detail::rename_rest(matrix);

    const auto vectors = import_features(args.features).vectors;
    std::vector<CommunityId> expected = partition.selected;
    if (args.include_rest) {
        expected.push_back(-1);
    }
    auto means = community_style_means(vectors, membership, expected);
    if (auto it = means.means.find("-1"); it != means.means.end()) {
        auto node = means.means.extract(it);
        node.key() = "rest";
        node.mapped().tweet_id = "rest";
        means.means.insert(std::move(node));
        auto count = means.tweet_counts.extract("-1");
        count.key() = "rest";
        means.tweet_counts.insert(std::move(count));
    }
    for (const auto& e : means.empty) {
        log.warn("community {} has no tweets and is left out of the means", e);
    }

    auto report = concordance_report(std::move(matrix), std::move(means));
    if (args.truth) {
        const auto truth = read_truth_json(*args.truth);
        std::vector<CommunityId> found, planted;
        for (const auto& [user, c] : partition.community_of) {
            if (const auto it = truth.find(user); it != truth.end()) {
                found.push_back(c);
                planted.push_back(it->second);
            }
        }
        if (!found.empty()) {
            report.community_recovery_ari = ari(found, planted);
        }
    }
    detail::write_report_files(report, out_dir);
    log.info("evaluate: {} tweets, matched accuracy {:.4f} (identity {:.4f}), NMI {:.4f}, ARI {:.4f}",
             report.matching.total, report.matching.accuracy, report.matching.identity_accuracy, report.nmi,
             report.ari);
    return report;
}

/// Report for a confusion matrix given directly as CSV, optionally with one
/// text cluster and one community dropped first.
inline ConcordanceReport evaluate_confusion_stage(const fs::path& csv, const std::optional<std::string>& drop_text,
                                                  const std::optional<std::string>& drop_community,
                                                  const std::optional<fs::path>& out_dir, const Log& log) {
    auto matrix = read_confusion_csv(csv);
    if (drop_text || drop_community) {
        if (!drop_text || !drop_community) {
            throw ValidationError("dropping needs both --drop-text and --drop-community");
        }
        matrix = drop_cluster(matrix, *drop_text, *drop_community);
    }
    auto report = concordance_report(std::move(matrix));
    if (out_dir) {
        detail::write_report_files(report, *out_dir);
    }
    log.info("evaluate: {}x{} matrix, matched accuracy {:.4f}", report.matrix.rows(), report.matrix.cols(),
             report.matching.accuracy);
    return report;
}

/// Output file names inside the pipeline output directory.
struct PipelinePaths {
    fs::path tweets, graph, partition, features, clusters, layout;

    explicit PipelinePaths(const fs::path& dir)
        : tweets(dir / "tweets.jsonl"), graph(dir / "graph.json"), partition(dir / "partition.json"),
          features(dir / "features.jsonl"), clusters(dir / "clusters.json"), layout(dir / "layout.csv") {}
};

/// ingest -> graph -> communities -> score -> cluster -> evaluate
/// (plus layout when enabled).
inline ConcordanceReport run_pipeline(const PipelineConfig& c, const Log& log) {
    std::error_code ec;
    fs::create_directories(c.output_dir, ec);
    if (ec) {
        throw IoError("cannot create " + c.output_dir.string());
    }
    const PipelinePaths out(c.output_dir);
    ingest_stage(c.tweets, c.format, c.columns, out.tweets, log);
    graph_stage(out.tweets, c.min_weight, out.graph, log);
    communities_stage(out.graph, {c.seed, c.resolution, c.top_k, c.min_size}, out.partition, log);
    if (c.layout) {
        LayoutOptions lo;
        lo.seed = c.seed;
        lo.total_iters = c.layout_iters;
        layout_stage(out.graph, lo, out.layout, log);
    }
    score_stage(out.tweets, c.scorer, c.features_in, out.features, log);

    ClusterArgs ca;
    ca.features = out.features;
    ca.mode = c.feature_mode;
    ca.k = c.k;
    ca.seed = c.seed;
    ca.max_iters = c.max_iters;
    ca.tol = c.tol;
    ca.restarts = c.restarts;
    ca.partition = out.partition;
    ca.tweets = out.tweets;
    ca.include_rest = c.include_rest;
    cluster_stage(ca, out.clusters, log);

    EvaluateArgs ea{out.tweets, out.features, out.clusters, out.partition, c.truth, c.include_rest};
    return evaluate_stage(ea, c.output_dir, log);
}

} // namespace chamberlens
