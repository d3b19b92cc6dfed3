#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "chamberlens/error.hpp"
#include "chamberlens/pipeline.hpp"
#include "chamberlens/svg.hpp"
#include "chamberlens/synth.hpp"

namespace chamberlens {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitIo = 2;

namespace detail {

inline DatasetFormat format_for(const fs::path& input, const std::optional<std::string>& flag) {
    if (flag) {
        return parse_format(*flag);
    }
    return input.extension() == ".csv" ? DatasetFormat::csv : DatasetFormat::jsonl;
}

inline nlohmann::ordered_json report_summary(const ConcordanceReport& r) {
    nlohmann::ordered_json j;
    j["matched_accuracy"] = r.matching.accuracy;
    j["identity_accuracy"] = r.matching.identity_accuracy;
    j["nmi"] = r.nmi;
    j["ari"] = r.ari;
    if (r.community_recovery_ari) {
        j["community_recovery_ari"] = *r.community_recovery_ari;
    }
    return j;
}

inline std::ifstream open_input(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot read " + path.string());
    }
    return in;
}

} // namespace detail

/// Entry point of the `chamberlens` tool. Returns the process exit code:
/// 0 on success, 1 on usage or validation errors, 2 on I/O errors.
inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Echo-chamber analysis: reply graphs, communities, writing style and their concordance",
                 "chamberlens"};
    app.set_help_all_flag("--help-all", "Show help for every subcommand");
    bool quiet = false;
    app.add_flag("-q,--quiet", quiet, "Only print warnings and errors to stderr");
    app.require_subcommand(1);

    // ingest
    auto* ingest = app.add_subcommand("ingest", "Normalize a CSV or JSONL tweet dump into tweets.jsonl");
    fs::path ingest_in, ingest_out = "tweets.jsonl";
    std::optional<std::string> ingest_format;
    ColumnMapping cols;
    ingest->add_option("-i,--input", ingest_in, "Raw dataset")->required();
    ingest->add_option("--format", ingest_format, "csv or jsonl (default: from the file extension)");
    ingest->add_option("-o,--out", ingest_out, "Output tweets.jsonl")->capture_default_str();
    ingest->add_option("--col-id", cols.tweet_id, "CSV column holding the tweet id")->capture_default_str();
    ingest->add_option("--col-user", cols.user_id, "CSV column holding the author id")->capture_default_str();
    ingest->add_option("--col-text", cols.text, "CSV column holding the text")->capture_default_str();
    ingest->add_option("--col-date", cols.created_at, "CSV column holding the timestamp")->capture_default_str();
    ingest->add_option("--col-reply", cols.reply_to_user_id, "CSV column holding the replied-to user")
        ->capture_default_str();

    // graph
    auto* graph = app.add_subcommand("graph", "Build the thresholded reply graph");
    fs::path graph_tweets, graph_out = "graph.json";
    std::uint64_t min_weight = 3;
    graph->add_option("-t,--tweets", graph_tweets, "tweets.jsonl")->required();
    graph->add_option("--min-weight", min_weight, "Keep edges with at least this many replies")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    graph->add_option("-o,--out", graph_out, "Output graph.json")->capture_default_str();

    // communities
    auto* communities = app.add_subcommand("communities", "Louvain communities and top-k selection");
    fs::path comm_graph, comm_out = "partition.json";
    CommunityArgs comm_args;
    communities->add_option("-g,--graph", comm_graph, "graph.json")->required();
    communities->add_option("--seed", comm_args.seed, "Random seed")->capture_default_str();
    communities->add_option("--resolution", comm_args.resolution, "Modularity resolution")->capture_default_str();
    communities->add_option("--top-k", comm_args.top_k, "Number of dense communities to select")->capture_default_str();
    communities->add_option("--min-size", comm_args.min_size, "Minimum members of a selected community")
        ->capture_default_str();
    communities->add_option("-o,--out", comm_out, "Output partition.json")->capture_default_str();

    // layout
    auto* layout = app.add_subcommand("layout", "Multi-stage force-directed layout of the reply graph");
    fs::path layout_graph, layout_out = "layout.csv";
    LayoutOptions layout_opt;
    layout->add_option("-g,--graph", layout_graph, "graph.json")->required();
    layout->add_option("--seed", layout_opt.seed, "Random seed")->capture_default_str();
    layout->add_option("--iters", layout_opt.total_iters, "Total iterations over all stages")->capture_default_str();
    layout->add_option("--cut", layout_opt.cut, "Fraction of longest edges cut at cooldown")
        ->capture_default_str()
        ->check(CLI::Range(0.0, 1.0));
    layout->add_flag("--exact", layout_opt.exact_repulsion, "All-pairs density instead of the grid");
    layout->add_option("-o,--out", layout_out, "Output layout.csv")->capture_default_str();

    // score
    auto* score = app.add_subcommand("score", "Style vectors for every tweet");
    fs::path score_tweets, score_out = "features.jsonl";
    std::string scorer = "baseline";
    std::optional<fs::path> features_in;
    score->add_option("-t,--tweets", score_tweets, "tweets.jsonl")->required();
    score->add_option("--scorer", scorer, "baseline or import")->capture_default_str();
    score->add_option("--features-in", features_in, "features.jsonl to import (scorer import)");
    score->add_option("-o,--out", score_out, "Output features.jsonl")->capture_default_str();

    // cluster
    auto* cluster = app.add_subcommand("cluster", "k-means over standardized style vectors");
    ClusterArgs cl;
    fs::path cluster_out = "clusters.json";
    std::string cluster_mode = "distribution";
    cluster->add_option("-f,--features", cl.features, "features.jsonl")->required();
    cluster->add_option("--mode", cluster_mode, "distribution or top1")->capture_default_str();
    cluster->add_option("--k", cl.k, "Number of clusters (default: selected community count, else 6)");
    cluster->add_option("--seed", cl.seed, "Random seed")->capture_default_str();
    cluster->add_option("--max-iters", cl.max_iters, "Lloyd iteration cap")->capture_default_str();
    cluster->add_option("--tol", cl.tol, "Centroid shift tolerance")->capture_default_str();
    cluster->add_option("--restarts", cl.restarts, "Independent seedings, lowest inertia kept")->capture_default_str();
    cluster->add_option("--partition", cl.partition, "partition.json; restricts rows to selected communities");
    cluster->add_option("--tweets", cl.tweets, "tweets.jsonl, needed with --partition");
    cluster->add_flag("--include-rest", cl.include_rest, "Also cluster tweets outside the selected communities");
    cluster->add_option("-o,--out", cluster_out, "Output clusters.json")->capture_default_str();

    // evaluate
    auto* evaluate = app.add_subcommand("evaluate", "Concordance between text clusters and communities");
    EvaluateArgs ev;
    std::optional<fs::path> ev_confusion, ev_out_dir;
    std::optional<std::string> drop_text, drop_community;
    evaluate->add_option("--confusion", ev_confusion, "Evaluate a confusion matrix CSV directly");
    evaluate->add_option("--drop-text", drop_text, "Text cluster id removed from the matrix");
    evaluate->add_option("--drop-community", drop_community, "Community id removed from the matrix");
    evaluate->add_option("-t,--tweets", ev.tweets, "tweets.jsonl");
    evaluate->add_option("-f,--features", ev.features, "features.jsonl");
    evaluate->add_option("-c,--clusters", ev.clusters, "clusters.json");
    evaluate->add_option("-p,--partition", ev.partition, "partition.json");
    evaluate->add_option("--truth", ev.truth, "truth.json from synth, adds community recovery ARI");
    evaluate->add_flag("--include-rest", ev.include_rest, "Count tweets outside the selected communities as 'rest'");
    evaluate->add_option("-o,--out-dir", ev_out_dir, "Directory for report.json, confusion.csv, means.csv, projection.csv");

    // synth
    auto* synth = app.add_subcommand("synth", "Planted-partition dataset with known styles");
    std::optional<fs::path> spec_path;
    fs::path synth_dir = "synth";
    SynthSpec spec;
    std::optional<std::size_t> synth_size;
    bool identical = false;
    synth->add_option("--spec", spec_path, "JSON spec; individual flags are ignored when given");
    synth->add_option("--k", spec.k, "Communities")->capture_default_str();
    synth->add_option("--size", synth_size, "Users per community (default 50)");
    synth->add_option("--p-in", spec.p_in, "Pair probability inside a community")->capture_default_str();
    synth->add_option("--p-out", spec.p_out, "Pair probability across communities")->capture_default_str();
    synth->add_option("--weight-mean", spec.weight_mean, "Mean replies per connected pair")->capture_default_str();
    synth->add_option("--tweets-per-user", spec.tweets_per_user, "Standalone tweets per user")->capture_default_str();
    synth->add_option("--style-noise", spec.style_noise, "Standard deviation of style noise")->capture_default_str();
    synth->add_option("--seed", spec.seed, "Random seed")->capture_default_str();
    synth->add_flag("--identical-styles", identical, "Give every community the same style means");
    synth->add_flag("--lexicon", spec.lexicon_mode, "Emit lexicon-word texts instead of placeholders");
    synth->add_option("-o,--out-dir", synth_dir, "Output directory")->capture_default_str();

    // pipeline
    auto* pipeline = app.add_subcommand("pipeline", "ingest, graph, communities, score, cluster, evaluate");
    fs::path config_path;
    std::optional<std::uint64_t> pipeline_seed;
    std::optional<fs::path> pipeline_out;
    pipeline->add_option("--config", config_path, "Pipeline JSON config")->required();
    pipeline->add_option("--seed", pipeline_seed, "Overrides the config seed");
    pipeline->add_option("-o,--out-dir", pipeline_out, "Overrides the config output_dir");

    // plot
    auto* plot = app.add_subcommand("plot", "SVG scatter of community means or of a layout");
    std::optional<fs::path> plot_means, plot_layout, plot_partition;
    fs::path plot_out = "plot.svg";
    auto* means_opt = plot->add_option("--means", plot_means, "means.csv from evaluate");
    auto* layout_opt_flag = plot->add_option("--layout", plot_layout, "layout.csv from layout");
    means_opt->excludes(layout_opt_flag);
    plot->add_option("--partition", plot_partition, "partition.json, colors layout nodes by community");
    plot->add_option("-o,--out", plot_out, "Output SVG")->capture_default_str();

    if (argc <= 1) {
        err << app.help();
        return kExitValidation;
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n";
        const auto subs = app.get_subcommands();
        err << (subs.empty() ? app.help() : subs.front()->help());
        return kExitValidation;
    }

    const Log log(err, quiet);
    try {
        if (*ingest) {
            ingest_stage(ingest_in, detail::format_for(ingest_in, ingest_format), cols, ingest_out, log);
        } else if (*graph) {
            graph_stage(graph_tweets, min_weight, graph_out, log);
        } else if (*communities) {
            communities_stage(comm_graph, comm_args, comm_out, log);
        } else if (*layout) {
            layout_stage(layout_graph, layout_opt, layout_out, log);
        } else if (*score) {
            score_stage(score_tweets, parse_scorer(scorer), features_in, score_out, log);
        } else if (*cluster) {
            cl.mode = parse_feature_mode(cluster_mode);
            cluster_stage(cl, cluster_out, log);
        } else if (*evaluate) {
            ConcordanceReport report;
            if (ev_confusion) {
                report = evaluate_confusion_stage(*ev_confusion, drop_text, drop_community, ev_out_dir, log);
            } else {
                if (ev.tweets.empty() || ev.features.empty() || ev.clusters.empty() || ev.partition.empty()) {
                    throw ValidationError(
                        "evaluate needs --confusion, or all of --tweets, --features, --clusters and --partition");
                }
                report = evaluate_stage(ev, ev_out_dir.value_or("."), log);
            }
            out << detail::report_summary(report).dump() << '\n';
        } else if (*synth) {
            if (spec_path) {
                auto in = detail::open_input(*spec_path);
                const auto j = nlohmann::json::parse(in, nullptr, false);
                if (j.is_discarded()) {
                    throw ValidationError("synth spec is not valid JSON: " + spec_path->string());
                }
                spec = synth_spec_from_json(j);
            } else {
                spec.sizes.assign(spec.k, synth_size.value_or(50));
                if (identical) {
                    spec.style_means = identical_style_means(spec.k);
                }
                validate(spec);
            }
            const auto generated = generate(spec);
            write_synth(generated, synth_dir);
            log.info("synth: {} users, {} tweets, {} intra / {} inter connected pairs", generated.truth.size(),
                     generated.records.size(), generated.stats.intra_pairs, generated.stats.inter_pairs);
        } else if (*pipeline) {
            auto config = load_config(config_path);
            if (pipeline_seed) {
                config.seed = *pipeline_seed;
            }
            if (pipeline_out) {
                config.output_dir = *pipeline_out;
            }
            const auto report = run_pipeline(config, log);
            out << detail::report_summary(report).dump() << '\n';
        } else if (*plot) {
            std::string svg;
            if (plot_means) {
                auto in = detail::open_input(*plot_means);
                svg = plot_means_svg(means_points(in));
            } else if (plot_layout) {
                std::map<std::string, std::string> community_of;
                if (plot_partition) {
                    for (const auto& [user, c] : read_partition_json(*plot_partition).community_of) {
                        community_of[user] = std::to_string(c);
                    }
                }
                auto in = detail::open_input(*plot_layout);
                svg = plot_layout_svg(layout_points(in, community_of));
            } else {
                throw ValidationError("plot needs --means or --layout");
            }
            write_text(plot_out, svg);
            log.info("plot: wrote {}", plot_out.string());
        }
    } catch (const IoError& e) {
        err << "error: " << e.what() << '\n';
        return kExitIo;
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return kExitIo;
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const nlohmann::json::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitValidation;
    }
    return kExitOk;
}

} // namespace chamberlens
