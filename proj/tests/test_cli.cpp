#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "chamberlens/cli.hpp"

using namespace chamberlens;
namespace fs = std::filesystem;

namespace {

const fs::path kFixtures = CHAMBERLENS_FIXTURES;

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args) {
    args.insert(args.begin(), "chamberlens");
    std::vector<const char*> argv;
    for (const auto& a : args) {
        argv.push_back(a.c_str());
    }
    std::ostringstream out, err;
    const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

fs::path fresh_dir(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("chamberlens_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

// Small planted fixture: 6 blocks of 20 users.
fs::path small_synth(const fs::path& dir) {
    const auto syn = dir / "syn";
    EXPECT_EQ(run({"-q", "synth", "--size", "20", "--p-in", "0.4", "-o", syn.string()}).code, 0);
    return syn;
}

void write_config(const fs::path& path, const nlohmann::json& j) {
    std::ofstream(path) << j.dump(2);
}

} // namespace

TEST(Cli, NoArgumentsPrintsUsage) {
    const auto r = run({});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("Usage"), std::string::npos);
    EXPECT_TRUE(r.out.empty());
}

TEST(Cli, UnknownSubcommandOrFlag) {
    EXPECT_EQ(run({"frobnicate"}).code, 1);
    const auto r = run({"graph", "--tweets", "x.jsonl", "--bogus"});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("Usage"), std::string::npos);
}

TEST(Cli, HelpExitsCleanly) {
    const auto r = run({"--help"});
    EXPECT_EQ(r.code, 0);
    EXPECT_NE(r.out.find("pipeline"), std::string::npos);
}

TEST(Cli, EvaluateConfusionCsv) {
    const auto r = run({"evaluate", "--confusion", (kFixtures / "table1.csv").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = nlohmann::json::parse(r.out);
    EXPECT_NEAR(j.at("matched_accuracy").get<double>(), 0.3532, 0.0005);
}

TEST(Cli, EvaluateConfusionWithDrop) {
    const auto dir = fresh_dir("drop");
    const auto r = run({"-q", "evaluate", "--confusion", (kFixtures / "table1.csv").string(), "--drop-text", "2",
                        "--drop-community", "2", "-o", dir.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NEAR(nlohmann::json::parse(r.out).at("matched_accuracy").get<double>(), 0.4347, 0.0005);
    EXPECT_TRUE(fs::exists(dir / "report.json"));
    EXPECT_TRUE(fs::exists(dir / "confusion.csv"));
}

TEST(Cli, MissingInputIsIoError) {
    EXPECT_EQ(run({"-q", "graph", "--tweets", "/nonexistent/tweets.jsonl"}).code, 2);
}

TEST(Cli, ConfigRejectsUnknownKeys) {
    const auto dir = fresh_dir("badcfg");
    write_config(dir / "cfg.json", {{"tweets", "t.jsonl"}, {"colour", "blue"}});
    const auto r = run({"pipeline", "--config", (dir / "cfg.json").string()});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("colour"), std::string::npos);
}

TEST(Cli, IngestCsvFixture) {
    const auto dir = fresh_dir("ingest");
    const auto r = run({"-q", "ingest", "-i", (kFixtures / "ten_rows.csv").string(), "-o",
                        (dir / "tweets.jsonl").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto text = slurp(dir / "tweets.jsonl");
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 9);
}

TEST(Cli, PipelineEqualsSubcommands) {
    const auto dir = fresh_dir("compose");
    const auto syn = small_synth(dir);
    write_config(dir / "cfg.json", {{"tweets", "syn/tweets.jsonl"},
                                    {"scorer", "import"},
                                    {"features_in", "syn/features.jsonl"},
                                    {"truth", "syn/truth.json"},
                                    {"seed", 3},
                                    {"output_dir", "piped"}});
    const auto piped = run({"-q", "pipeline", "--config", (dir / "cfg.json").string()});
    ASSERT_EQ(piped.code, 0) << piped.err;

    const auto s = dir / "steps";
    fs::create_directories(s);
    auto p = [&](const char* f) { return (s / f).string(); };
    ASSERT_EQ(run({"-q", "ingest", "-i", (syn / "tweets.jsonl").string(), "-o", p("tweets.jsonl")}).code, 0);
    ASSERT_EQ(run({"-q", "graph", "-t", p("tweets.jsonl"), "-o", p("graph.json")}).code, 0);
    ASSERT_EQ(run({"-q", "communities", "-g", p("graph.json"), "--seed", "3", "-o", p("partition.json")}).code, 0);
    ASSERT_EQ(run({"-q", "score", "-t", p("tweets.jsonl"), "--scorer", "import", "--features-in",
                   (syn / "features.jsonl").string(), "-o", p("features.jsonl")})
                  .code,
              0);
    ASSERT_EQ(run({"-q", "cluster", "-f", p("features.jsonl"), "--seed", "3", "--partition", p("partition.json"),
                   "--tweets", p("tweets.jsonl"), "-o", p("clusters.json")})
                  .code,
              0);
    const auto stepped = run({"-q", "evaluate", "-t", p("tweets.jsonl"), "-f", p("features.jsonl"), "-c",
                              p("clusters.json"), "-p", p("partition.json"), "--truth",
                              (syn / "truth.json").string(), "-o", s.string()});
    ASSERT_EQ(stepped.code, 0) << stepped.err;

    EXPECT_EQ(piped.out, stepped.out);
    for (const auto* f : {"tweets.jsonl", "graph.json", "partition.json", "features.jsonl", "clusters.json",
                          "report.json", "confusion.csv", "means.csv", "projection.csv"}) {
        EXPECT_EQ(slurp(dir / "piped" / f), slurp(s / f)) << f;
    }
}

TEST(Cli, PipelineIsDeterministic) {
    const auto dir = fresh_dir("determinism");
    small_synth(dir);
    write_config(dir / "cfg.json", {{"tweets", "syn/tweets.jsonl"}, {"output_dir", "a"}});
    ASSERT_EQ(run({"-q", "pipeline", "--config", (dir / "cfg.json").string()}).code, 0);
    ASSERT_EQ(run({"-q", "pipeline", "--config", (dir / "cfg.json").string(), "-o", (dir / "b").string()}).code, 0);
    for (const auto* f : {"report.json", "clusters.json", "partition.json"}) {
        EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "b" / f)) << f;
    }
}

TEST(Cli, LayoutAndPlots) {
    const auto dir = fresh_dir("plots");
    const auto syn = small_synth(dir);
    write_config(dir / "cfg.json", {{"tweets", "syn/tweets.jsonl"},
                                    {"scorer", "import"},
                                    {"features_in", "syn/features.jsonl"},
                                    {"layout", true},
                                    {"layout_iters", 100},
                                    {"output_dir", "out"}});
    ASSERT_EQ(run({"-q", "pipeline", "--config", (dir / "cfg.json").string()}).code, 0);
    const auto out = dir / "out";
    ASSERT_TRUE(fs::exists(out / "layout.csv"));
    ASSERT_EQ(run({"-q", "plot", "--means", (out / "means.csv").string(), "-o", (dir / "means.svg").string()}).code,
              0);
    const auto svg = slurp(dir / "means.svg");
    const auto selected = read_partition_json(out / "partition.json").selected.size();
    std::size_t points = 0;
    for (auto at = svg.find("class=\"point\""); at != std::string::npos; at = svg.find("class=\"point\"", at + 1)) {
        ++points;
    }
    EXPECT_EQ(points, selected);
    ASSERT_EQ(run({"-q", "plot", "--layout", (out / "layout.csv").string(), "--partition",
                   (out / "partition.json").string(), "-o", (dir / "layout.svg").string()})
                  .code,
              0);
    EXPECT_TRUE(slurp(dir / "layout.svg").starts_with("<svg"));
    EXPECT_EQ(run({"-q", "plot", "-o", (dir / "x.svg").string()}).code, 1);
}

TEST(Cli, BaselineScorerPath) {
    const auto dir = fresh_dir("baseline");
    const auto tweets = dir / "tweets.jsonl";
    ASSERT_EQ(run({"-q", "ingest", "-i", (kFixtures / "ten_rows.csv").string(), "-o", tweets.string()}).code, 0);
    ASSERT_EQ(run({"-q", "score", "-t", tweets.string(), "-o", (dir / "features.jsonl").string()}).code, 0);
    std::ifstream in(dir / "features.jsonl");
    const auto imported = import_features(in);
    EXPECT_EQ(imported.vectors.size(), 9u);
    EXPECT_EQ(imported.rejected, 0u);
}
