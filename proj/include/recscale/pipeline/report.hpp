#pragma once

#include "recscale/eval/eval.hpp"
#include "recscale/judge/judge.hpp"
#include "recscale/pipeline/config.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace recscale::pipeline {

// One table row: the baseline or a (policy, strategy) feature source.
struct SourceMetrics {
    std::string label;
    std::string policy;    // empty for the baseline
    std::string strategy;  // empty for the baseline
    std::map<eval::TaskKind, eval::Metrics> by_task;
};

struct TableLayout {
    std::vector<eval::TaskKind> tasks;
    std::vector<int> ks;
};

// NDCG at the largest K of the first task (HIT for next-item prediction).
std::optional<double> headline_metric(const SourceMetrics& row, const TableLayout& layout);
std::string headline_name(const TableLayout& layout);

// Metrics are printed x100 with two decimals. rows[0] is the baseline; the
// last column is the relative change of the headline metric against it.
std::string table1_csv(const std::vector<SourceMetrics>& rows, const TableLayout& layout);
std::string table1_markdown(const std::vector<SourceMetrics>& rows, const TableLayout& layout);

struct ScatterRow {
    std::string policy;
    std::string strategy;
    std::size_t unique_features = 0;
    double metric = 0;
};

std::string scatter_csv(const std::vector<ScatterRow>& rows, const std::string& metric_name);

// OLS fit over rows with a positive unique count; {"status": "insufficient
// data", ...} when no line can be fitted.
nlohmann::json fit_json(const std::vector<ScatterRow>& rows, const std::string& metric_name);

struct FeatureStats {
    std::string policy;
    std::string strategy;
    std::size_t users = 0;
    std::size_t failed = 0;
    std::size_t degenerate = 0;
    std::size_t valid_features = 0;
    std::size_t unique_features = 0;
};

struct JudgeSummary {
    std::string model_a;
    std::string model_b;
    std::string strategy;
    std::size_t pairs = 0;
    std::vector<judge::JudgeReport> reports;
};

struct ReportInputs {
    std::vector<std::string> provenance;
    nlohmann::json dataset_summary;
    std::vector<FeatureStats> features;
    TableLayout layout;
    std::vector<SourceMetrics> rows;
    std::vector<ScatterRow> scatter;
    nlohmann::json fit;
    std::optional<JudgeSummary> judging;  // unset: judging stage not run
};

// Every setting a reported number depends on, one "name: value" line each.
std::vector<std::string> provenance_lines(const RunConfig& config, const std::string& config_hash,
                                          const std::string& templates_hash);

std::string render_report(const ReportInputs& in);

}  // namespace recscale::pipeline
