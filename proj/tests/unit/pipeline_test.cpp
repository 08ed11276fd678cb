#include "recscale/pipeline/config.hpp"
#include "recscale/pipeline/pipeline.hpp"
#include "recscale/pipeline/report.hpp"
#include "recscale/pipeline/run_dir.hpp"

#include "../support/pipeline_harness.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

namespace recscale::pipeline {
namespace {

using testing::TempDir;

const char* kMinimalToml = R"(
[dataset]
interactions = "interactions.jsonl"
catalog = "catalog.jsonl"

[backends.sim]
kind = "simulated"

[[policies]]
backend = "sim"
model = "small-model"

[reward]
backend = "sim"
model = "reward-model"

[recommender]
backend = "sim"
model = "rec-model"

[embedding]
backend = "sim"
model = "embed-model"
)";

TEST(Config, DefaultsAndRelativePaths) {
    TempDir dir;
    const auto path = dir.write("run.toml", kMinimalToml);
    const auto c = load_config(path);
    EXPECT_EQ(c.eval.c, 20u);
    EXPECT_EQ(c.eval.ks, (std::vector<int>{5, 10}));
    EXPECT_EQ(c.eval.seeds, (std::vector<std::uint64_t>{1, 2, 3}));
    EXPECT_EQ(c.rating_threshold, 4);
    EXPECT_EQ(c.min_history, 5);
    EXPECT_EQ(c.strategies.size(), 4u);
    EXPECT_EQ(c.resolve(c.interactions), dir.path() / "interactions.jsonl");
}

TEST(Config, OverridesParseAsTomlOrFallBackToString) {
    TempDir dir;
    const auto path = dir.write("run.toml", kMinimalToml);
    const auto c = load_config(path, {"search.n=6", "dedup.eps = 0.35", "run.id=abc-1", "eval.ks=[1, 3]"});
    EXPECT_EQ(c.search.n, 6);
    EXPECT_DOUBLE_EQ(c.dedup.eps, 0.35);
    EXPECT_EQ(c.run_id, "abc-1");
    EXPECT_EQ(c.eval.ks, (std::vector<int>{1, 3}));
}

TEST(Config, RepeatsDeriveSeedsAndMustMatchThem) {
    TempDir dir;
    const auto path = dir.write("run.toml", kMinimalToml);
    EXPECT_EQ(load_config(path, {"eval.repeats=5"}).eval.seeds, (std::vector<std::uint64_t>{1, 2, 3, 4, 5}));
    EXPECT_THROW(load_config(path, {"eval.repeats=2", "eval.seeds=[4, 5, 6]"}), ConfigError);
}

TEST(Config, RejectsBadInput) {
    TempDir dir;
    const auto path = dir.write("run.toml", kMinimalToml);
    EXPECT_THROW(load_config(path, {"search.nn=3"}), ConfigError);
    EXPECT_THROW(load_config(path, {"reward.backend=missing"}), ConfigError);
    EXPECT_THROW(load_config(path, {"search.n=0"}), ConfigError);
    EXPECT_THROW(load_config(path, {"dedup.eps=2.5"}), ConfigError);
    EXPECT_THROW(load_config(path, {"search.n=\"eight\""}), ConfigError);
    EXPECT_THROW(load_config(path, {"nodots"}), ConfigError);
    EXPECT_THROW(load_config(dir.write("bad.toml", "[dataset\n")), ConfigError);
}

TEST(Config, HashIgnoresWorkerCountsButNotSettings) {
    TempDir dir;
    const auto path = dir.write("run.toml", kMinimalToml);
    const auto base = load_config(path).hash();
    EXPECT_EQ(load_config(path, {"search.workers=16", "features.workers=1"}).hash(), base);
    EXPECT_NE(load_config(path, {"search.n=10"}).hash(), base);
}

TEST(Config, Slug) {
    EXPECT_EQ(slug("gpt-4o-mini"), "gpt-4o-mini");
    EXPECT_EQ(slug("org/model:latest"), "org_model_latest");
}

TEST(RunDir, MarkerTracksChecksums) {
    TempDir dir;
    const auto c = load_config(dir.write("run.toml", kMinimalToml));
    RunDir run(dir / "run", c, "t");
    EXPECT_FALSE(run.complete("ingest"));
    EXPECT_THROW(run.require("ingest", "features"), StageMissing);
    dir.write("run/splits/a.txt", "hello");
    run.mark("ingest", {"splits/a.txt"});
    EXPECT_TRUE(run.complete("ingest"));
    RunDir reopened(dir / "run", c, "t");
    EXPECT_TRUE(reopened.complete("ingest"));
    dir.write("run/splits/a.txt", "changed");
    EXPECT_FALSE(reopened.complete("ingest"));
}

TEST(RunDir, RefusesDifferentConfigOrTemplates) {
    TempDir dir;
    const auto path = dir.write("run.toml", kMinimalToml);
    RunDir run(dir / "run", load_config(path), "t");
    EXPECT_THROW(RunDir(dir / "run", load_config(path, {"search.n=6"}), "t"), ConfigError);
    EXPECT_THROW(RunDir(dir / "run", load_config(path), "other"), ConfigError);
}

TEST(Report, ReproducesImprovementCellFromFixture) {
    const auto fixture = json::parse(read_file(fs::path(RECSCALE_FIXTURE_DIR) / "report/toys_dr_ndcg10.json"));
    const TableLayout layout{{eval::TaskKind::direct_ranking}, {fixture["k"].get<int>()}};
    std::vector<SourceMetrics> rows;
    for (const auto& r : fixture["rows"]) {
        SourceMetrics row;
        row.label = r["label"];
        eval::Metrics m;
        m.ndcg_at[fixture["k"].get<int>()] = r["ndcg"].get<double>();
        m.valid_rate = 1.0;
        row.by_task[eval::TaskKind::direct_ranking] = m;
        rows.push_back(row);
    }
    const auto expected = fixture["expected_change_pct"].get<std::string>();
    const auto md = table1_markdown(rows, layout);
    EXPECT_NE(md.find("| 43.50 |"), std::string::npos) << md;
    EXPECT_NE(md.find("| 48.86 |"), std::string::npos) << md;
    EXPECT_NE(md.find("+" + expected + "%"), std::string::npos) << md;
    const auto csv = table1_csv(rows, layout);
    EXPECT_NE(csv.find("," + expected + "\n"), std::string::npos) << csv;
}

TEST(Report, JudgingSectionNotRunWhenAbsent) {
    ReportInputs in;
    in.layout = {{eval::TaskKind::direct_ranking}, {10}};
    in.fit = fit_json({}, "dr NDCG@10");
    const auto md = render_report(in);
    EXPECT_NE(md.find("## Pairwise judging\n\nnot run\n"), std::string::npos);
}

TEST(Report, ScatterHasOneRowPerSourceAndFitNeedsTwoCounts) {
    std::vector<ScatterRow> rows{{"a", "cot", 10, 0.2}, {"a", "mcts", 100, 0.3}, {"b", "beam", 0, 0.1}};
    const auto csv = scatter_csv(rows, "dr NDCG@10");
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
    const auto fit = fit_json(rows, "dr NDCG@10");
    EXPECT_EQ(fit["status"], "ok");
    EXPECT_EQ(fit["points"], 2);
    EXPECT_NEAR(fit["slope_per_decade"].get<double>(), 0.1, 1e-12);
    EXPECT_EQ(fit_json({rows[0]}, "m")["status"], "insufficient data");
}

TEST(Report, ProvenanceNamesEverySetting) {
    const auto lines = provenance_lines(testing::tiny_config("/tmp"), "h1", "h2");
    std::string all;
    for (const auto& l : lines) all += l + "\n";
    for (const char* needle : {"rating threshold 4", "eps 0.200", "N 4, M 2", "temperature 1.00", "C 20", "K {5,10}",
                               "repeats 3", "config hash: h1", "templates hash: h2"}) {
        EXPECT_NE(all.find(needle), std::string::npos) << needle;
    }
}

TEST(Stages, IngestTwoUsersAndSkipOnRerun) {
    TempDir dir;
    std::string interactions;
    int t = 0;
    for (const char* u : {"a", "b", "c"}) {
        const int n = std::string(u) == "c" ? 3 : 6;  // c falls below min_history
        for (int i = 0; i < n; ++i) {
            interactions += json{{"user", u}, {"item", "i" + std::to_string(i)}, {"rating", i % 2 ? 5 : 2},
                                 {"timestamp", ++t}}.dump() + "\n";
        }
    }
    dir.write("interactions.jsonl", interactions);
    std::string catalog;
    for (int i = 0; i < 30; ++i) {
        catalog += json{{"item", "i" + std::to_string(i)}, {"title", "Item " + std::to_string(i)}, {"description", ""}}
                       .dump() + "\n";
    }
    dir.write("catalog.jsonl", catalog);
    const auto c = load_config(dir.write("run.toml", kMinimalToml), {"run.root=\"runs\""});

    std::vector<std::string> log;
    Options o;
    o.log = [&](const std::string& line) { log.push_back(line); };
    Pipeline p(c, o);
    p.ingest();
    const auto splits = read_jsonl(p.run().path("splits/splits.jsonl"));
    EXPECT_EQ(splits.records.size(), 2u);
    const auto before = testing::snapshot(p.run().root());
    log.clear();
    EXPECT_EQ(run_command("ingest", c, o), exit_ok);
    ASSERT_FALSE(log.empty());
    EXPECT_NE(log.front().find("skipped"), std::string::npos);
    EXPECT_TRUE(testing::snapshot_diff(before, testing::snapshot(p.run().root())).empty());
}

TEST(Stages, MissingUpstreamIsNamedAndExitsThree) {
    TempDir dir;
    const auto c = testing::tiny_config(dir.path());
    Pipeline p(c, testing::quiet());
    try {
        p.dedup();
        FAIL() << "dedup ran without features";
    } catch (const StageMissing& e) {
        EXPECT_NE(std::string(e.what()).find("features/gpt-4o-mini/cot"), std::string::npos);
    }
    EXPECT_EQ(run_command("eval", c, testing::quiet()), exit_upstream_missing);
}

TEST(Stages, BackendFailureExitsFour) {
    TempDir dir;
    // A search width the transcript was not recorded with has no replies.
    const auto c = testing::tiny_config(dir.path(), {"search.n=6"});
    EXPECT_EQ(run_command("ingest", c, testing::quiet()), exit_ok);
    Options o = testing::quiet();
    o.strategy = search::Strategy::best_of_n;
    EXPECT_EQ(run_command("features", c, o), exit_backend);
}

TEST(Stages, FeaturesPlaybackFiveUsersWithProvenance) {
    TempDir dir;
    const auto c = testing::tiny_config(dir.path());
    Pipeline p(c, testing::quiet([] {
                   Options o;
                   o.strategy = search::Strategy::beam;
                   o.policy = "deepseek-r1";
                   return o;
               }()));
    p.ingest();
    p.features();
    const auto rows = read_jsonl(p.run().path("features/deepseek-r1/beam.jsonl"));
    ASSERT_EQ(rows.records.size(), 5u);
    std::size_t features = 0;
    for (const auto& r : rows.records) {
        const auto set = search::feature_set_from_json(r.value);
        for (const auto& f : set.features) {
            EXPECT_EQ(f.provenance.strategy, search::Strategy::beam);
            EXPECT_EQ(f.provenance.policy_model_id, "deepseek-r1");
            ++features;
        }
    }
    EXPECT_GT(features, 0u);
    EXPECT_FALSE(fs::exists(p.run().path("features/deepseek-r1/beam.partial.jsonl")));
    EXPECT_TRUE(p.run().complete("features/deepseek-r1/beam"));
    EXPECT_FALSE(p.run().complete("features/deepseek-r1/cot"));
}

TEST(Stages, StopAfterThreeThenResumeMatchesUninterrupted) {
    TempDir dir;
    auto options = [](std::size_t stop_after) {
        Options o = testing::quiet();
        o.strategy = search::Strategy::mcts;
        o.policy = "gpt-4o-mini";
        o.stop_after = stop_after;
        return o;
    };
    auto clean = testing::tiny_config(dir / "clean");
    Pipeline full(clean, options(0));
    full.ingest();
    full.features();
    const auto expected = read_file(full.run().path("features/gpt-4o-mini/mcts.jsonl"));

    auto config = testing::tiny_config(dir / "resumed");
    {
        Pipeline first(config, options(3));
        first.ingest();
        EXPECT_THROW(first.features(), Interrupted);
        const auto partial = first.run().path("features/gpt-4o-mini/mcts.partial.jsonl");
        EXPECT_EQ(read_jsonl(partial).records.size(), 3u);
        // A write torn by the kill leaves a partial trailing line.
        append_line(partial, R"({"user_id": "u04", "featu)");
    }
    Pipeline second(config, options(0));
    second.features();
    const auto resumed = read_file(second.run().path("features/gpt-4o-mini/mcts.jsonl"));
    EXPECT_EQ(resumed, expected);
    EXPECT_EQ(resumed.substr(0, resumed.find('\n')), expected.substr(0, expected.find('\n')));
}

TEST(Stages, EveryStageIsIdempotent) {
    TempDir dir;
    const auto run = testing::run_tiny_pipeline(dir.path());
    const auto before = testing::snapshot(run);
    auto c = testing::tiny_config(dir.path());
    for (const char* cmd : {"ingest", "features", "dedup", "eval", "judge", "report"}) {
        EXPECT_EQ(run_command(cmd, c, testing::quiet()), exit_ok) << cmd;
    }
    EXPECT_TRUE(testing::snapshot_diff(before, testing::snapshot(run)).empty());
    const auto report = read_file(run / "report/report.md");
    EXPECT_NE(report.find("| gpt-4o | "), std::string::npos);
    const auto scatter = read_file(run / "report/scatter.csv");
    EXPECT_EQ(std::count(scatter.begin(), scatter.end(), '\n'), 1 + 8);
}

}  // namespace
}  // namespace recscale::pipeline
