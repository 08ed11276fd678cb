#pragma once

#include "recscale/common/templates.hpp"
#include "recscale/llm/gateway.hpp"
#include "recscale/search/feature.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace recscale::judge {

struct JudgePair {
    search::Feature side_a;
    search::Feature side_b;
    std::string user_id;
};

enum class Choice { first, second, unclear };
enum class Outcome { a_wins, b_wins, tie };

const char* to_string(Choice c);
const char* to_string(Outcome o);

// "first"/"second" (or "1"/"2", "Description 1"/"Description 2"); anything
// naming both or neither is unclear.
Choice parse_choice(std::string_view reply);

struct Verdict {
    Outcome outcome = Outcome::tie;
    std::string round_1;  // raw reply, A shown first
    std::string round_2;  // raw reply, B shown first
    Choice choice_1 = Choice::unclear;
    Choice choice_2 = Choice::unclear;
};

// A wins only if round 1 picks first and round 2 picks second.
Outcome combine(Choice round_1, Choice round_2);

std::string describe(const search::Feature& f);

// Two judge calls with positions swapped. Throws on gateway failure.
Verdict compare_pair(llm::Gateway& gateway, const TemplateLibrary& templates, const JudgePair& pair,
                     const std::string& judge_model_id);

struct JudgeReport {
    std::string judge_model_id;
    int wins_a = 0;
    int ties = 0;
    int wins_b = 0;
    int skipped = 0;  // pairs lost to gateway failures

    int judged() const { return wins_a + ties + wins_b; }
};

struct JudgeConfig {
    std::size_t sample_size = 0;  // users to pair; 0 means all shared users
    std::uint64_t pairing_seed = 0;
    std::size_t workers = 4;
};

// Users that have at least one valid feature on both sides, ascending,
// optionally subsampled by seed. Each side contributes one of its valid
// features (all carry the same reward), picked by seed.
std::vector<JudgePair> form_pairs(const std::map<std::string, search::FeatureSet>& sets_a,
                                  const std::map<std::string, search::FeatureSet>& sets_b, const JudgeConfig& config);

struct Judge {
    llm::Gateway* gateway = nullptr;
    std::string model_id;
};

struct JudgingRun {
    std::vector<JudgeReport> reports;  // one per judge, in input order
    std::vector<nlohmann::json> audit;  // one row per (judge, pair)
};

JudgingRun judge_pairs(const std::vector<JudgePair>& pairs, const std::vector<Judge>& judges,
                       const TemplateLibrary& templates, std::size_t workers = 4);

JudgingRun run_judging(const std::map<std::string, search::FeatureSet>& sets_a,
                       const std::map<std::string, search::FeatureSet>& sets_b, const std::vector<Judge>& judges,
                       const TemplateLibrary& templates, const JudgeConfig& config);

std::string reports_csv(const std::vector<JudgeReport>& reports);

}  // namespace recscale::judge
