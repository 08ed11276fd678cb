#include "recscale/search/models.hpp"

#include "recscale/common/text.hpp"

#include <nlohmann/json.hpp>

namespace recscale::search {

using dataset::ItemCatalog;
using dataset::PreferenceProfile;
using dataset::RatedItem;

namespace {

const dataset::ItemInfo& lookup(const ItemCatalog& catalog, const std::string& id) {
    const auto it = catalog.find(id);
    if (it == catalog.end()) throw dataset::DatasetError("item missing from catalog: " + id);
    return it->second;
}

std::string item_lines(const TemplateLibrary& templates, const std::string& tpl, const std::vector<RatedItem>& items,
                       const ItemCatalog& catalog, const char* separator) {
    std::string out;
    for (const auto& item : items) {
        const auto& info = lookup(catalog, item.item_id);
        if (!out.empty()) out += separator;
        out += templates.render(tpl, {{"title", info.title},
                                      {"description", info.description.empty() ? "no description" : info.description},
                                      {"rating", std::to_string(item.rating)}});
    }
    return out.empty() ? "(none)" : out;
}

std::string numbered_features(const std::vector<Feature>& features) {
    if (features.empty()) return "(none)";
    std::string out;
    for (std::size_t i = 0; i < features.size(); ++i) {
        if (i) out += '\n';
        out += std::to_string(i + 1) + ". " + features[i].name + ": " + features[i].definition;
    }
    return out;
}

}  // namespace

std::string build_policy_prompt(const TemplateLibrary& templates, const PreferenceProfile& profile,
                                const ItemCatalog& catalog) {
    std::vector<RatedItem> all = profile.liked;
    all.insert(all.end(), profile.disliked.begin(), profile.disliked.end());
    return templates.render("policy", {{"user_id", "user " + profile.user_id},
                                       {"items", item_lines(templates, "policy_item", all, catalog, "\n\n")}});
}

std::string build_continuation_prompt(const TemplateLibrary& templates, const std::string& policy_prompt,
                                      const std::vector<Feature>& prefix) {
    return templates.render("continuation",
                            {{"policy_prompt", policy_prompt}, {"features_so_far", numbered_features(prefix)}});
}

std::string build_reward_prompt(const TemplateLibrary& templates, const PreferenceProfile& profile,
                                const ItemCatalog& catalog, const std::vector<Feature>& features) {
    return templates.render("reward",
                            {{"user_id", profile.user_id},
                             {"liked_items", item_lines(templates, "reward_item", profile.liked, catalog, "\n")},
                             {"disliked_items", item_lines(templates, "reward_item", profile.disliked, catalog, "\n")},
                             {"features", numbered_features(features)},
                             {"feature_count", std::to_string(features.size())}});
}

std::optional<std::vector<bool>> parse_verdicts(std::string_view raw, std::size_t expected) {
    const auto open = raw.find('[');
    const auto close = raw.find(']', open == std::string_view::npos ? 0 : open);
    if (open == std::string_view::npos || close == std::string_view::npos) return std::nullopt;
    nlohmann::json arr;
    try {
        arr = nlohmann::json::parse(raw.substr(open, close - open + 1));
    } catch (const nlohmann::json::parse_error&) {
        return std::nullopt;
    }
    if (!arr.is_array() || arr.size() != expected) return std::nullopt;
    std::vector<bool> out;
    for (const auto& v : arr) {
        if (v.is_boolean()) {
            out.push_back(v.get<bool>());
        } else if (v.is_string()) {
            const std::string s = text::to_lower(text::trim(v.get<std::string>()));
            if (s == "true" || s == "yes" || s == "valid") {
                out.push_back(true);
            } else if (s == "false" || s == "no" || s == "invalid") {
                out.push_back(false);
            } else {
                return std::nullopt;
            }
        } else {
            return std::nullopt;
        }
    }
    return out;
}

LlmPolicy::LlmPolicy(llm::Gateway& gateway, const TemplateLibrary& templates, const PreferenceProfile& profile,
                     const ItemCatalog& catalog, std::string model_id, SamplingParams params)
    : gateway_(gateway),
      templates_(templates),
      model_id_(std::move(model_id)),
      params_(params),
      prompt_(build_policy_prompt(templates, profile, catalog)) {}

std::string LlmPolicy::generate(std::uint64_t seed) {
    return gateway_
        .complete(llm::single_turn(model_id_, prompt_, params_.temperature, params_.max_tokens,
                                   static_cast<std::int64_t>(seed >> 1)))
        .text;
}

std::string LlmPolicy::extend(const std::vector<Feature>& prefix, std::uint64_t seed) {
    return gateway_
        .complete(llm::single_turn(model_id_, build_continuation_prompt(templates_, prompt_, prefix),
                                   params_.temperature, params_.max_tokens, static_cast<std::int64_t>(seed >> 1)))
        .text;
}

LlmRewardModel::LlmRewardModel(llm::Gateway& gateway, const TemplateLibrary& templates,
                               const PreferenceProfile& profile, const ItemCatalog& catalog, std::string model_id,
                               SamplingParams params)
    : gateway_(gateway),
      templates_(templates),
      profile_(profile),
      catalog_(catalog),
      model_id_(std::move(model_id)),
      params_(params) {}

RewardScore LlmRewardModel::score(const std::vector<Feature>& features) {
    RewardScore out;
    if (features.empty()) return out;
    const std::string prompt = build_reward_prompt(templates_, profile_, catalog_, features);
    std::optional<std::vector<bool>> verdicts;
    for (int attempt = 0; attempt < 2 && !verdicts; ++attempt) {
        if (attempt > 0) ++out.retries;
        const auto reply =
            gateway_.complete(llm::single_turn(model_id_, prompt, params_.temperature, params_.max_tokens, attempt));
        verdicts = parse_verdicts(reply.text, features.size());
    }
    out.per_feature = verdicts.value_or(std::vector<bool>(features.size(), false));
    for (bool v : out.per_feature) out.valid_count += v ? 1 : 0;
    return out;
}

}  // namespace recscale::search
