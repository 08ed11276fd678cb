#include "recscale/search/feature.hpp"

#include "recscale/common/text.hpp"

#include <algorithm>

namespace recscale::search {

using nlohmann::json;
using nlohmann::ordered_json;

const char* to_string(Strategy s) {
    switch (s) {
        case Strategy::cot: return "cot";
        case Strategy::best_of_n: return "best_of_n";
        case Strategy::beam: return "beam";
        case Strategy::mcts: return "mcts";
    }
    return "cot";
}

Strategy strategy_from_string(std::string_view s) {
    if (s == "cot") return Strategy::cot;
    if (s == "best_of_n") return Strategy::best_of_n;
    if (s == "beam") return Strategy::beam;
    if (s == "mcts") return Strategy::mcts;
    throw std::invalid_argument("unknown strategy: " + std::string(s));
}

std::size_t FeatureSet::valid_count() const {
    return static_cast<std::size_t>(
        std::count_if(features.begin(), features.end(), [](const Feature& f) { return f.valid.value_or(false); }));
}

bool has_feature_named(const std::vector<Feature>& features, std::string_view name) {
    return std::any_of(features.begin(), features.end(),
                       [&](const Feature& f) { return text::iequals(f.name, text::trim(name)); });
}

namespace {

constexpr std::size_t kMaxNameLength = 80;
constexpr int kMaxNameWords = 8;

std::string clean_name(std::string_view raw) {
    std::string name = text::strip_emphasis(raw);
    std::string_view v = text::trim(name);
    while (!v.empty() && (v.front() == '"' || v.front() == '\'')) v.remove_prefix(1);
    while (!v.empty() && (v.back() == '"' || v.back() == '\'' || v.back() == ':')) v.remove_suffix(1);
    return std::string(text::trim(v));
}

bool plausible_name(std::string_view name) {
    if (name.empty() || name.size() > kMaxNameLength) return false;
    int words = 1;
    for (char c : name) words += c == ' ';
    return words <= kMaxNameWords;
}

void push_unique(FeatureSet& set, std::string name, std::string definition) {
    if (name.empty() || definition.empty() || has_feature_named(set.features, name)) return;
    Feature f;
    f.name = std::move(name);
    f.definition = std::move(definition);
    f.provenance.step_index = static_cast<int>(set.features.size());
    set.features.push_back(std::move(f));
}

std::string without_fences(std::string_view raw) {
    std::string out;
    for (auto line : text::split_lines(raw)) {
        if (text::trim(line).rfind("```", 0) == 0) continue;
        out.append(line);
        out.push_back('\n');
    }
    return out;
}

bool parse_json_object(const std::string& body, FeatureSet& set) {
    const auto open = body.find('{');
    const auto close = body.rfind('}');
    if (open == std::string::npos || close == std::string::npos || close < open) return false;
    ordered_json obj;
    try {
        obj = ordered_json::parse(body.substr(open, close - open + 1));
    } catch (const ordered_json::parse_error&) {
        return false;
    }
    if (!obj.is_object()) return false;
    for (const auto& [key, value] : obj.items()) {
        std::string definition;
        if (value.is_string()) {
            definition = value.get<std::string>();
        } else if (value.is_object() && value.contains("definition") && value["definition"].is_string()) {
            definition = value["definition"].get<std::string>();
        } else if (!value.is_null()) {
            definition = value.dump();
        }
        push_unique(set, clean_name(key), std::string(text::trim(definition)));
    }
    return !set.features.empty();
}

// "Name: definition" on one line; `require_marker` restricts to list items.
bool parse_line(std::string_view line, bool require_marker, std::string& name, std::string& definition) {
    if (require_marker && !text::has_list_marker(text::strip_emphasis(line))) return false;
    // "**1. Durability**: text" -> "1. Durability: text" before dropping the marker.
    const std::string unemphasized = text::strip_emphasis(line);
    const std::string_view body = text::strip_list_marker(unemphasized);
    const auto colon = body.find(':');
    if (colon == std::string_view::npos) return false;
    name = clean_name(body.substr(0, colon));
    definition = std::string(text::trim(body.substr(colon + 1)));
    return plausible_name(name) && !definition.empty();
}

}  // namespace

FeatureSet parse_features(std::string_view raw) {
    FeatureSet set;
    set.raw_text = std::string(raw);
    const std::string body = without_fences(raw);
    if (parse_json_object(body, set)) return set;
    set.features.clear();

    const auto lines = text::split_lines(body);
    const bool any_marker = std::any_of(lines.begin(), lines.end(), [](std::string_view l) {
        return text::has_list_marker(text::strip_emphasis(l));
    });
    for (auto line : lines) {
        std::string name, definition;
        if (parse_line(line, any_marker, name, definition)) push_unique(set, std::move(name), std::move(definition));
    }
    if (set.features.empty()) throw ParseFailure("no features recognised in policy output");
    return set;
}

StepOutcome parse_step(std::string_view raw) {
    const std::string body = without_fences(raw);
    for (auto line : text::split_lines(body)) {
        std::string t = text::strip_emphasis(line);
        while (!t.empty() && (t.back() == '.' || t.back() == '!')) t.pop_back();
        if (text::iequals(text::trim(t), "END")) {
            // Only an end marker when no feature line precedes it.
            return StepOutcome{StepKind::end, {}};
        }
        std::string name, definition;
        if (parse_line(line, false, name, definition)) {
            StepOutcome out{StepKind::feature, {}};
            out.feature.name = std::move(name);
            out.feature.definition = std::move(definition);
            return out;
        }
    }
    try {
        FeatureSet set = parse_features(raw);
        return StepOutcome{StepKind::feature, set.features.front()};
    } catch (const ParseFailure&) {
        return StepOutcome{StepKind::unparseable, {}};
    }
}

void apply_score(FeatureSet& set, const RewardScore& score) {
    std::vector<Feature> kept;
    for (std::size_t i = 0; i < set.features.size(); ++i) {
        Feature f = std::move(set.features[i]);
        f.valid = i < score.per_feature.size() && score.per_feature[i];
        (*f.valid ? kept : set.rejected).push_back(std::move(f));
    }
    set.features = std::move(kept);
}

json to_json(const Feature& f) {
    return json{{"name", f.name},
                {"definition", f.definition},
                {"valid", f.valid ? json(*f.valid) : json(nullptr)},
                {"provenance",
                 {{"policy_model_id", f.provenance.policy_model_id},
                  {"strategy", to_string(f.provenance.strategy)},
                  {"step_index", f.provenance.step_index}}}};
}

Feature feature_from_json(const json& j) {
    Feature f;
    f.name = j.at("name").get<std::string>();
    f.definition = j.at("definition").get<std::string>();
    if (j.contains("valid") && !j.at("valid").is_null()) f.valid = j.at("valid").get<bool>();
    const json& p = j.at("provenance");
    f.provenance.policy_model_id = p.at("policy_model_id").get<std::string>();
    f.provenance.strategy = strategy_from_string(p.at("strategy").get<std::string>());
    f.provenance.step_index = p.at("step_index").get<int>();
    return f;
}

json to_json(const FeatureSet& s) {
    json features = json::array();
    for (const auto& f : s.features) features.push_back(to_json(f));
    json rejected = json::array();
    for (const auto& f : s.rejected) rejected.push_back(to_json(f));
    return json{{"user_id", s.user_id},     {"features", std::move(features)},
                {"rejected", std::move(rejected)}, {"raw_text", s.raw_text},
                {"failed", s.failed},       {"note", s.note},
                {"valid_count", s.valid_count()}};
}

FeatureSet feature_set_from_json(const json& j) {
    FeatureSet s;
    s.user_id = j.at("user_id").get<std::string>();
    for (const auto& f : j.at("features")) s.features.push_back(feature_from_json(f));
    if (j.contains("rejected")) {
        for (const auto& f : j.at("rejected")) s.rejected.push_back(feature_from_json(f));
    }
    s.raw_text = j.value("raw_text", std::string{});
    s.failed = j.value("failed", false);
    s.note = j.value("note", std::string{});
    return s;
}

}  // namespace recscale::search
