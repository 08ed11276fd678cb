#pragma once

#include <nlohmann/json.hpp>

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace recscale::search {

enum class Strategy { cot, best_of_n, beam, mcts };

const char* to_string(Strategy s);
Strategy strategy_from_string(std::string_view s);

struct Provenance {
    std::string policy_model_id;
    Strategy strategy = Strategy::cot;
    int step_index = 0;

    bool operator==(const Provenance&) const = default;
};

struct Feature {
    std::string name;
    std::string definition;
    std::optional<bool> valid;  // unset until scored
    Provenance provenance;

    bool operator==(const Feature&) const = default;
};

struct FeatureSet {
    std::string user_id;
    std::vector<Feature> features;  // names unique, case-insensitive
    std::vector<Feature> rejected;  // scored invalid and filtered out
    std::string raw_text;
    bool failed = false;
    std::string note;  // why the set is failed/empty, if it is

    std::size_t valid_count() const;
};

struct RewardScore {
    int valid_count = 0;
    std::vector<bool> per_feature;
    int retries = 0;
};

class ParseFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Reads either a JSON object {"Name": "definition", ...} (code fences
// allowed, key order kept) or "Name: definition" lines, numbered or
// bulleted. Duplicate names keep the first occurrence. Throws ParseFailure
// when nothing is recognised.
FeatureSet parse_features(std::string_view raw);

enum class StepKind { feature, end, unparseable };

struct StepOutcome {
    StepKind kind = StepKind::unparseable;
    Feature feature;
};

// One-step continuation reply: a feature line, or the end marker "END".
StepOutcome parse_step(std::string_view raw);

bool has_feature_named(const std::vector<Feature>& features, std::string_view name);

// Stamps validity from `score` and moves invalid features to `rejected`.
void apply_score(FeatureSet& set, const RewardScore& score);

nlohmann::json to_json(const Feature& f);
Feature feature_from_json(const nlohmann::json& j);
nlohmann::json to_json(const FeatureSet& s);
FeatureSet feature_set_from_json(const nlohmann::json& j);

}  // namespace recscale::search
