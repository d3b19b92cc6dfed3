// Acceptance run: one PASS/FAIL line per primary criterion. Exit status is
// the number of failed criteria (capped at 1).

#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

#include <fmt/format.h>

#include "chamberlens/cli.hpp"
#include "support/oracles.hpp"
#include "support/tables.hpp"

using namespace chamberlens;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

int failures = 0;

void report(bool ok, const std::string& name, const std::string& detail) {
    std::cout << (ok ? "PASS " : "FAIL ") << name << ": " << detail << std::endl;
    failures += !ok;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

int cli(std::vector<std::string> args) {
    args.insert(args.begin(), "chamberlens");
    std::vector<const char*> argv;
    for (const auto& a : args) {
        argv.push_back(a.c_str());
    }
    std::ostringstream out;
    return run_cli(static_cast<int>(argv.size()), argv.data(), out, std::cerr);
}

nlohmann::json read_json(const fs::path& p) {
    return nlohmann::json::parse(slurp(p));
}

void table_one() {
    const auto m = tables::six_by_six();
    const auto start = Clock::now();
    const auto r = match_clusters(m);
    const double ms = seconds_since(start) * 1e3;
    bool identity = true;
    for (std::size_t i = 0; i < 6; ++i) {
        identity = identity && r.row_to_col[i] == i;
    }
    report(std::abs(r.accuracy - 0.3532) <= 0.0005 && identity && ms < 1.0, "table1_matching",
           fmt::format("accuracy {:.6f} ({} / {}), identity matching {}, {:.3f} ms", r.accuracy, r.matched, r.total,
                       identity ? "yes" : "no", ms));
}

void table_two() {
    const auto start = Clock::now();
    const auto dropped = drop_cluster(tables::six_by_six(), "2", "2");
    const auto r = match_clusters(dropped);
    const double ms = seconds_since(start) * 1e3;
    const bool equal = dropped == tables::five_by_five();
    report(equal && std::abs(r.accuracy - 0.4347) <= 0.0005 && ms < 1.0, "table2_drop_cluster",
           fmt::format("matrix equal {}, accuracy {:.6f} ({} / {}), {:.3f} ms", equal ? "yes" : "no", r.accuracy,
                       r.matched, r.total, ms));
}

void louvain_benchmark() {
    const auto start = Clock::now();
    const auto g = oracle::karate_club();
    double min_q = 1.0, worst_gap = 0.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto p = louvain(g, seed);
        min_q = std::min(min_q, p.modularity);
        worst_gap = std::max(worst_gap, std::abs(modularity(g, p.assignment) - oracle::direct_modularity(g, p.assignment)));
    }
    Rng rng(20240601);
    int graphs = 0;
    while (graphs < 100) {
        const std::size_t n = 2 + rng.below(29);
        const auto rg = oracle::random_graph(rng, n, 0.05 + 0.4 * rng.uniform());
        if (rg.edge_count() == 0) {
            continue;
        }
        ++graphs;
        std::vector<CommunityId> c(n);
        const auto groups = 1 + rng.below(n);
        for (auto& x : c) {
            x = static_cast<CommunityId>(rng.below(groups));
        }
        worst_gap = std::max(worst_gap, std::abs(modularity(rg, c) - oracle::direct_modularity(rg, c)));
        const auto p = louvain(rg, graphs);
        worst_gap = std::max(worst_gap, std::abs(p.modularity - oracle::direct_modularity(rg, p.assignment)));
    }
    const double secs = seconds_since(start);
    report(min_q >= 0.40 && worst_gap <= 1e-12 && secs < 5.0, "louvain_karate_and_modularity_oracle",
           fmt::format("min Q over 20 seeds {:.6f}, max |Q - direct| {:.2e} over karate + {} random graphs, {:.3f} s",
                       min_q, worst_gap, graphs, secs));
}

void louvain_small_instances() {
    const auto start = Clock::now();
    Rng rng(777);
    int graphs = 0, close = 0, above = 0;
    while (graphs < 50) {
        const std::size_t n = 2 + rng.below(7);
        const auto g = oracle::random_graph(rng, n, 0.3 + 0.5 * rng.uniform(), 4);
        if (g.edge_count() == 0) {
            continue;
        }
        ++graphs;
        const double best = oracle::exhaustive_best_modularity(g);
        const double q = louvain(g, graphs).modularity;
        above += q > best + 1e-12;
        close += q >= 0.95 * best - 1e-12;
    }
    const double secs = seconds_since(start);
    report(above == 0 && close >= 45 && secs < 60.0, "louvain_exhaustive_oracle",
           fmt::format("{} graphs, Q > Q* on {}, Q >= 0.95 Q* on {}, {:.3f} s", graphs, above, close, secs));
}

void matching_oracle() {
    const auto start = Clock::now();
    Rng rng(4242);
    int agree = 0;
    for (int trial = 0; trial < 200; ++trial) {
        ConfusionMatrix m;
        const std::size_t rows = 1 + rng.below(8), cols = 1 + rng.below(8);
        for (std::size_t i = 0; i < rows; ++i) {
            m.row_ids.push_back(std::to_string(i));
        }
        for (std::size_t j = 0; j < cols; ++j) {
            m.col_ids.push_back(std::to_string(j));
        }
        m.counts.assign(rows, std::vector<std::int64_t>(cols));
        for (auto& r : m.counts) {
            for (auto& x : r) {
                x = static_cast<std::int64_t>(rng.below(1000));
            }
        }
        agree += match_clusters(m).matched == oracle::brute_force_matching(m.counts);
    }
    const double secs = seconds_since(start);
    report(agree == 200 && secs < 10.0, "matching_brute_force_oracle",
           fmt::format("{} / 200 matrices agree, {:.3f} s", agree, secs));
}

// Runs synth + pipeline in `dir` and returns report.json.
nlohmann::json planted_run(const fs::path& dir, bool identical_styles) {
    fs::remove_all(dir);
    fs::create_directories(dir);
    std::vector<std::string> synth{"-q", "synth", "-o", (dir / "syn").string()};
    if (identical_styles) {
        synth.push_back("--identical-styles");
    }
    if (cli(synth) != 0) {
        throw std::runtime_error("synth failed");
    }
    std::ofstream(dir / "cfg.json") << nlohmann::json{{"tweets", "syn/tweets.jsonl"},
                                                      {"scorer", "import"},
                                                      {"features_in", "syn/features.jsonl"},
                                                      {"truth", "syn/truth.json"},
                                                      {"seed", 0},
                                                      {"restarts", 10},
                                                      {"output_dir", "out"}}
                                           .dump(2);
    if (cli({"-q", "pipeline", "--config", (dir / "cfg.json").string()}) != 0) {
        throw std::runtime_error("pipeline failed");
    }
    return read_json(dir / "out" / "report.json");
}

void planted(const fs::path& work) {
    const auto start = Clock::now();
    const auto r = planted_run(work / "planted", false);
    const double secs = seconds_since(start);
    const double recovery = r.at("community_recovery_ari").get<double>();
    const double acc = r.at("matched_accuracy").get<double>();
    report(recovery >= 0.95 && acc >= 0.90 && secs < 120.0, "end_to_end_planted",
           fmt::format("community recovery ARI {:.4f}, matched accuracy {:.4f}, {:.2f} s", recovery, acc, secs));
}

void null_styles(const fs::path& work) {
    const auto start = Clock::now();
    const auto r = planted_run(work / "null", true);
    const double secs = seconds_since(start);
    const double acc = r.at("matched_accuracy").get<double>();
    const double nmi_v = r.at("nmi").get<double>();
    const bool in_band = acc >= 1.0 / 6.0 - 0.03 && acc <= 1.0 / 6.0 + 0.10;
    report(in_band && nmi_v <= 0.05 && secs < 120.0, "end_to_end_null",
           fmt::format("matched accuracy {:.4f} (band [{:.4f}, {:.4f}]), NMI {:.4f}, {:.2f} s", acc,
                       1.0 / 6.0 - 0.03, 1.0 / 6.0 + 0.10, nmi_v, secs));
}

void metric_properties() {
    const std::vector<int> labels{0, 1, 1, 2, 2, 2, 0, 1};
    const double nmi_same = nmi(labels, labels);
    const double nmi_const = nmi(labels, std::vector<int>(labels.size(), 3));
    const double ari_same = ari(labels, labels);

    Rng rng(99);
    int monotone = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 5 + rng.below(200), d = 1 + rng.below(6);
        FeatureMatrix m;
        for (std::size_t j = 0; j < d; ++j) {
            m.dims.push_back(std::to_string(j));
        }
        for (std::size_t i = 0; i < n; ++i) {
            m.rows.push_back(std::to_string(i));
            for (std::size_t j = 0; j < d; ++j) {
                m.values.push_back(rng.normal() + 4.0 * double(rng.below(3)));
            }
        }
        const auto c = kmeans(m, 1 + rng.below(std::min<std::size_t>(n, 10)), static_cast<std::uint64_t>(trial));
        bool ok = true;
        for (std::size_t i = 1; i < c.inertia_trace.size(); ++i) {
            ok = ok && c.inertia_trace[i] <= c.inertia_trace[i - 1] * (1.0 + 1e-12) + 1e-12;
        }
        monotone += ok;
    }
    FeatureMatrix small;
    small.dims = {"x", "y"};
    for (std::size_t i = 0; i < 15; ++i) {
        small.rows.push_back(std::to_string(i));
        small.values.push_back(rng.normal());
        small.values.push_back(rng.normal());
    }
    const double k_eq_n = kmeans(small, 15, 0).inertia;
    const bool ok = std::abs(nmi_same - 1.0) < 1e-12 && nmi_const == 0.0 && std::abs(ari_same - 1.0) < 1e-12 &&
                    monotone == 100 && k_eq_n == 0.0;
    report(ok, "metric_properties",
           fmt::format("nmi(x,x) {:.12f}, nmi(x,const) {}, ari(x,x) {:.12f}, monotone traces {} / 100, "
                       "inertia at k=n {}",
                       nmi_same, nmi_const, ari_same, monotone, k_eq_n));
}

void layout_sanity() {
    std::vector<std::array<std::uint64_t, 3>> edges;
    for (std::uint64_t base : {0u, 10u}) {
        for (std::uint64_t a = 0; a < 10; ++a) {
            for (std::uint64_t b = a + 1; b < 10; ++b) {
                edges.push_back({base + a, base + b, 1});
            }
        }
    }
    edges.push_back({9, 10, 1});
    const auto g = oracle::make_graph(20, edges);
    const auto start = Clock::now();
    int separated = 0;
    double worst_ratio = 0.0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto l = openord_layout(g, seed);
        double intra = 0, inter = 0;
        int ni = 0, nx = 0;
        for (std::size_t i = 0; i < 20; ++i) {
            for (std::size_t j = i + 1; j < 20; ++j) {
                const double d = distance(l.coords[i], l.coords[j]);
                if ((i < 10) == (j < 10)) {
                    intra += d;
                    ++ni;
                } else {
                    inter += d;
                    ++nx;
                }
            }
        }
        const double ratio = (intra / ni) / (inter / nx);
        worst_ratio = std::max(worst_ratio, ratio);
        separated += ratio < 1.0;
    }
    const double secs = seconds_since(start);
    report(separated == 10 && secs < 5.0, "layout_bridged_cliques",
           fmt::format("{} / 10 seeds with intra < inter (worst intra/inter {:.3f}), {:.3f} s", separated,
                       worst_ratio, secs));
}

void determinism(const fs::path& work) {
    const auto dir = work / "determinism";
    fs::remove_all(dir);
    fs::create_directories(dir);
    cli({"-q", "synth", "-o", (dir / "syn").string()});
    std::ofstream(dir / "cfg.json") << nlohmann::json{{"tweets", "syn/tweets.jsonl"},
                                                      {"scorer", "import"},
                                                      {"features_in", "syn/features.jsonl"},
                                                      {"seed", 5},
                                                      {"output_dir", "first"}}
                                           .dump(2);
    const auto cfg = (dir / "cfg.json").string();
    const int a = cli({"-q", "pipeline", "--config", cfg});
    const int b = cli({"-q", "pipeline", "--config", cfg, "-o", (dir / "second").string()});
    std::vector<std::string> differing;
    for (const auto* f : {"report.json", "clusters.json", "partition.json"}) {
        if (slurp(dir / "first" / f) != slurp(dir / "second" / f) || slurp(dir / "first" / f).empty()) {
            differing.push_back(f);
        }
    }
    report(a == 0 && b == 0 && differing.empty(), "pipeline_determinism",
           differing.empty() ? "report.json, clusters.json, partition.json byte-identical across two runs"
                             : fmt::format("differing: {}", fmt::join(differing, ", ")));
}

void guarded(const std::string& name, const std::function<void()>& fn) {
    try {
        fn();
    } catch (const std::exception& e) {
        report(false, name, std::string("exception: ") + e.what());
    }
}

} // namespace

int main(int argc, char** argv) {
    const fs::path work = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "chamberlens_acceptance";
    fs::create_directories(work);
    guarded("table1_matching", table_one);
    guarded("table2_drop_cluster", table_two);
    guarded("louvain_karate_and_modularity_oracle", louvain_benchmark);
    guarded("louvain_exhaustive_oracle", louvain_small_instances);
    guarded("matching_brute_force_oracle", matching_oracle);
    guarded("end_to_end_planted", [&] { planted(work); });
    guarded("end_to_end_null", [&] { null_styles(work); });
    guarded("metric_properties", metric_properties);
    guarded("layout_bridged_cliques", layout_sanity);
    guarded("pipeline_determinism", [&] { determinism(work); });
    std::cout << (failures == 0 ? "all criteria passed" : fmt::format("{} criteria failed", failures)) << std::endl;
    return failures == 0 ? 0 : 1;
}
