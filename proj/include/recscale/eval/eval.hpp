#pragma once

#include "recscale/common/files.hpp"
#include "recscale/common/templates.hpp"
#include "recscale/dataset/dataset.hpp"
#include "recscale/llm/gateway.hpp"
#include "recscale/search/feature.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace recscale::eval {

enum class TaskKind { direct_ranking, in_context_learning, next_item_prediction };

const char* to_string(TaskKind k);  // "dr", "icl", "nip"
TaskKind task_from_string(std::string_view s);

// Pre-rendered blocks of the one-shot example.
struct OneShotExample {
    std::string user_id;
    std::string history;
    std::string candidates;
    std::string answer;
};

struct RecTask {
    TaskKind kind = TaskKind::direct_ranking;
    std::optional<OneShotExample> example;  // present iff kind is in_context_learning

    void validate() const;
};

struct RankingOutput {
    std::vector<std::string> ordered_items;
    bool compliant = false;
    std::string raw_text;
};

// Example built from a held-out user chosen by `seed`: their history, a
// candidate set, and an answer listing the ground truth first and the other
// candidates in candidate order.
OneShotExample make_example(const TemplateLibrary& templates, const std::vector<dataset::UserSplit>& users,
                            const dataset::ItemCatalog& catalog, std::size_t c, std::uint64_t seed);

// `features` may be null or empty; the feature section appears only when it
// holds at least one feature.
std::string build_rec_prompt(const TemplateLibrary& templates, const RecTask& task, const dataset::UserSplit& split,
                             const search::FeatureSet* features, const dataset::CandidateSet& candidates,
                             const dataset::ItemCatalog& catalog);

// Reads "[index] title" lines (list markers and emphasis tolerated); a line
// without an index is matched by title, case-insensitively. Any list line
// that names no candidate is a foreign item. Ranking tasks are compliant
// when the result is a permutation of the candidates, NIP when exactly one
// candidate is named.
RankingOutput parse_ranking(std::string_view raw, const dataset::CandidateSet& candidates,
                            const dataset::ItemCatalog& catalog, TaskKind kind = TaskKind::direct_ranking);

// 1-based rank of `truth` in a compliant ranking, 0 if absent or non-compliant.
std::size_t rank_of(const RankingOutput& ranking, const std::string& truth);

double ndcg_at_k(const RankingOutput& ranking, const std::string& truth, int k);
double hit_at_k(const RankingOutput& ranking, const std::string& truth, int k);

struct Metrics {
    double valid_rate = 0;
    std::map<int, double> ndcg_at;
    std::map<int, double> hit_at;
    std::optional<double> nip_hit;
    std::size_t users = 0;
};

struct EvalResult {
    TaskKind kind = TaskKind::direct_ranking;
    Metrics mean;
    std::vector<Metrics> per_repeat;
    int repeats = 0;
};

struct EvalConfig {
    std::string model_id;
    std::size_t c = 20;
    std::vector<int> ks{5, 10};
    std::vector<std::uint64_t> seeds{1, 2, 3};  // one per repeat
    bool exclude_noncompliant = false;
    std::size_t workers = 8;
    double temperature = 0.0;
    int max_tokens = 2048;
};

struct UserOutcome {
    std::string user_id;
    std::string ground_truth;
    RankingOutput ranking;
};

nlohmann::json to_json(const UserOutcome& o);
UserOutcome outcome_from_json(const nlohmann::json& j);

// Aggregates per-user outcomes of one repeat.
Metrics aggregate(const std::vector<UserOutcome>& outcomes, TaskKind kind, const std::vector<int>& ks,
                  bool exclude_noncompliant);

Metrics mean_of(const std::vector<Metrics>& repeats);

// Runs every repeat over `users`. With a checkpoint directory, finished
// repeats are stored as repeat_<r>.jsonl and reused; if a gateway error
// interrupts a repeat, the users finished so far are kept in
// repeat_<r>.partial.jsonl and only the rest are asked on the next call.
EvalResult evaluate(llm::Gateway& gateway, const TemplateLibrary& templates,
                    const std::vector<dataset::UserSplit>& users, const dataset::ItemCatalog& catalog,
                    const RecTask& task, const std::map<std::string, search::FeatureSet>* features_by_user,
                    const EvalConfig& config, const std::optional<fs::path>& checkpoint_dir = std::nullopt);

nlohmann::json to_json(const Metrics& m);
nlohmann::json to_json(const EvalResult& r);

struct FitPoint {
    double count = 0;  // unique feature count, > 0
    double metric = 0;
    std::string label;
};

struct CorrelationFit {
    std::vector<FitPoint> points;
    double slope = 0;  // metric per decade of count
    double intercept = 0;
    double r = 0;
};

// OLS of metric on log10(count). Throws std::invalid_argument with fewer
// than two points, a non-positive count, or all counts equal. r is 0 when
// every metric is equal.
CorrelationFit fit_correlation(const std::vector<FitPoint>& points);

// Relative change in percent.
double improvement(double value, double baseline);

}  // namespace recscale::eval
