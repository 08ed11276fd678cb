#pragma once

#include "recscale/common/templates.hpp"
#include "recscale/dataset/dataset.hpp"
#include "recscale/llm/gateway.hpp"
#include "recscale/search/feature.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace recscale::search {

// The policy side of the search: complete generations (solution level) and
// one-feature continuations (step level). Returns raw model text; may throw
// llm::GatewayError.
class PolicyModel {
public:
    virtual ~PolicyModel() = default;
    virtual std::string generate(std::uint64_t seed) = 0;
    virtual std::string extend(const std::vector<Feature>& prefix, std::uint64_t seed) = 0;
    virtual std::string model_id() const = 0;
};

// Validity of each feature against the user's liked/disliked items.
class RewardModel {
public:
    virtual ~RewardModel() = default;
    virtual RewardScore score(const std::vector<Feature>& features) = 0;
};

struct SamplingParams {
    double temperature = 0.0;
    int max_tokens = 1024;
};

// Policy prompt: the user-behaviour-analyst template with one item line per
// train item, liked items first then disliked, each in chronological order.
std::string build_policy_prompt(const TemplateLibrary& templates, const dataset::PreferenceProfile& profile,
                                const dataset::ItemCatalog& catalog);

std::string build_continuation_prompt(const TemplateLibrary& templates, const std::string& policy_prompt,
                                      const std::vector<Feature>& prefix);

std::string build_reward_prompt(const TemplateLibrary& templates, const dataset::PreferenceProfile& profile,
                                const dataset::ItemCatalog& catalog, const std::vector<Feature>& features);

// Parses a JSON array of booleans (true/false, "yes"/"no" strings accepted)
// of exactly `expected` entries; nullopt otherwise.
std::optional<std::vector<bool>> parse_verdicts(std::string_view raw, std::size_t expected);

class LlmPolicy : public PolicyModel {
public:
    LlmPolicy(llm::Gateway& gateway, const TemplateLibrary& templates, const dataset::PreferenceProfile& profile,
              const dataset::ItemCatalog& catalog, std::string model_id, SamplingParams params);

    std::string generate(std::uint64_t seed) override;
    std::string extend(const std::vector<Feature>& prefix, std::uint64_t seed) override;
    std::string model_id() const override { return model_id_; }

    const std::string& prompt() const { return prompt_; }

private:
    llm::Gateway& gateway_;
    const TemplateLibrary& templates_;
    std::string model_id_;
    SamplingParams params_;
    std::string prompt_;
};

// One reward call per feature list. An unparseable verdict is retried once
// with a different request seed; after that, features without a readable
// verdict count as invalid.
class LlmRewardModel : public RewardModel {
public:
    LlmRewardModel(llm::Gateway& gateway, const TemplateLibrary& templates, const dataset::PreferenceProfile& profile,
                   const dataset::ItemCatalog& catalog, std::string model_id, SamplingParams params);

    RewardScore score(const std::vector<Feature>& features) override;

private:
    llm::Gateway& gateway_;
    const TemplateLibrary& templates_;
    const dataset::PreferenceProfile& profile_;
    const dataset::ItemCatalog& catalog_;
    std::string model_id_;
    SamplingParams params_;
};

}  // namespace recscale::search
