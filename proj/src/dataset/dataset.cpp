#include "recscale/dataset/dataset.hpp"

#include "recscale/common/rng.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_map>

namespace recscale::dataset {

namespace {

std::string id_field(const json& j, const char* key) {
    const auto it = j.find(key);
    if (it == j.end()) {
        throw DatasetError(std::string("missing key '") + key + "'");
    }
    if (it->is_string()) {
        if (it->get_ref<const std::string&>().empty()) {
            throw DatasetError(std::string("empty '") + key + "'");
        }
        return it->get<std::string>();
    }
    if (it->is_number_integer()) {
        return std::to_string(it->get<std::int64_t>());
    }
    throw DatasetError(std::string("'") + key + "' must be a string");
}

// Accepts integers and integral floats ("5.0" style Amazon dumps).
std::int64_t integral_field(const json& j, const char* key) {
    const auto it = j.find(key);
    if (it == j.end()) {
        throw DatasetError(std::string("missing key '") + key + "'");
    }
    if (it->is_number_integer()) {
        return it->get<std::int64_t>();
    }
    if (it->is_number_float()) {
        const double v = it->get<double>();
        if (std::floor(v) == v && std::abs(v) < 9.0e15) {
            return static_cast<std::int64_t>(v);
        }
    }
    throw DatasetError(std::string("'") + key + "' must be an integer");
}

Interaction parse_interaction(const json& j) {
    if (!j.is_object()) {
        throw DatasetError("record is not an object");
    }
    Interaction x;
    x.user_id = id_field(j, "user");
    x.item_id = id_field(j, "item");
    const auto rating = integral_field(j, "rating");
    if (rating < 1 || rating > 5) {
        throw DatasetError("rating out of range: " + std::to_string(rating));
    }
    x.rating = static_cast<int>(rating);
    x.timestamp = integral_field(j, "timestamp");
    if (x.timestamp < 0) {
        throw DatasetError("negative timestamp");
    }
    return x;
}

bool chronological(const Interaction& a, const Interaction& b) {
    if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
    return a.item_id < b.item_id;
}

}  // namespace

InteractionLoad load_interactions(const fs::path& path) {
    if (!fs::exists(path)) {
        throw DatasetError("interaction file not found: " + path.string());
    }
    InteractionLoad out;
    auto raw = read_jsonl(path);
    for (auto& [line, msg] : raw.errors) {
        out.errors.push_back({line, "invalid JSON: " + msg});
    }
    for (const auto& rec : raw.records) {
        try {
            out.interactions.push_back(parse_interaction(rec.value));
        } catch (const DatasetError& e) {
            out.errors.push_back({rec.line_number, e.what()});
        }
    }
    std::sort(out.errors.begin(), out.errors.end(),
              [](const LineError& a, const LineError& b) { return a.line < b.line; });
    out.skipped = out.errors.size();
    return out;
}

CatalogLoad load_catalog(const fs::path& path) {
    if (!fs::exists(path)) {
        throw DatasetError("catalog file not found: " + path.string());
    }
    CatalogLoad out;
    auto raw = read_jsonl(path);
    for (auto& [line, msg] : raw.errors) {
        out.errors.push_back({line, "invalid JSON: " + msg});
    }
    for (const auto& rec : raw.records) {
        try {
            const json& j = rec.value;
            if (!j.is_object()) throw DatasetError("record is not an object");
            const std::string id = id_field(j, "item");
            ItemInfo info;
            info.title = j.value("title", std::string{});
            info.description = j.value("description", std::string{});
            if (info.title.empty()) throw DatasetError("missing title for " + id);
            out.catalog.insert_or_assign(id, std::move(info));
        } catch (const std::exception& e) {
            out.errors.push_back({rec.line_number, e.what()});
        }
    }
    std::sort(out.errors.begin(), out.errors.end(),
              [](const LineError& a, const LineError& b) { return a.line < b.line; });
    out.skipped = out.errors.size();
    return out;
}

std::vector<std::string> missing_catalog_items(const std::vector<Interaction>& interactions,
                                               const ItemCatalog& catalog) {
    std::set<std::string> missing;
    for (const auto& x : interactions) {
        if (!catalog.contains(x.item_id)) missing.insert(x.item_id);
    }
    return {missing.begin(), missing.end()};
}

SplitResult build_splits(const std::vector<Interaction>& interactions, int min_history) {
    if (min_history < 2) {
        throw DatasetError("min_history must be >= 2");
    }
    std::map<std::string, std::vector<Interaction>> by_user;
    for (const auto& x : interactions) {
        by_user[x.user_id].push_back(x);
    }
    SplitResult result;
    for (auto& [user, events] : by_user) {
        std::sort(events.begin(), events.end(), chronological);
        // Keep the latest event per item.
        std::unordered_map<std::string, std::size_t> last_index;
        for (std::size_t i = 0; i < events.size(); ++i) last_index[events[i].item_id] = i;
        std::vector<Interaction> unique;
        unique.reserve(last_index.size());
        for (std::size_t i = 0; i < events.size(); ++i) {
            if (last_index[events[i].item_id] == i) unique.push_back(std::move(events[i]));
        }
        result.collapsed_repeats += events.size() - unique.size();
        if (unique.size() < static_cast<std::size_t>(min_history)) {
            ++result.dropped_users;
            continue;
        }
        UserSplit split;
        split.user_id = user;
        split.test = unique.back();
        unique.pop_back();
        split.train = std::move(unique);
        result.splits.push_back(std::move(split));
    }
    return result;
}

std::vector<Interaction> flatten(const std::vector<UserSplit>& splits) {
    std::vector<Interaction> out;
    for (const auto& s : splits) {
        out.insert(out.end(), s.train.begin(), s.train.end());
        out.push_back(s.test);
    }
    return out;
}

PreferenceProfile partition_preferences(const UserSplit& split, int threshold) {
    if (threshold < 1 || threshold > 5) {
        throw DatasetError("threshold must be in [1, 5]");
    }
    PreferenceProfile p;
    p.user_id = split.user_id;
    p.threshold = threshold;
    for (const auto& x : split.train) {
        (x.rating >= threshold ? p.liked : p.disliked).push_back({x.item_id, x.rating});
    }
    return p;
}

CandidateSet sample_candidates(const UserSplit& split, const ItemCatalog& catalog, std::size_t c,
                               std::uint64_t seed) {
    if (c == 0) {
        throw DatasetError("candidate count must be positive");
    }
    std::set<std::string> excluded;
    for (const auto& x : split.train) excluded.insert(x.item_id);
    excluded.insert(split.test.item_id);

    // Eligible pool in ascending item_id order (catalog is an ordered map).
    std::vector<std::string> pool;
    pool.reserve(catalog.size());
    for (const auto& [id, info] : catalog) {
        if (!excluded.contains(id)) pool.push_back(id);
    }
    const std::size_t negatives = c - 1;
    if (pool.size() < negatives) {
        throw DatasetError("catalog too small for user " + split.user_id + ": need " + std::to_string(negatives) +
                           " negatives, have " + std::to_string(pool.size()));
    }
    SplitMix64 rng(seed);
    for (std::size_t i = 0; i < negatives; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.bounded(pool.size() - i));
        std::swap(pool[i], pool[j]);
    }
    CandidateSet out;
    out.user_id = split.user_id;
    out.ground_truth = split.test.item_id;
    out.seed = seed;
    out.candidates.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(negatives));
    const std::size_t pos = static_cast<std::size_t>(rng.bounded(c));
    out.candidates.insert(out.candidates.begin() + static_cast<std::ptrdiff_t>(pos), split.test.item_id);
    return out;
}

std::uint64_t candidate_seed(std::uint64_t repeat_seed, const std::string& user_id) {
    return derive_seed(repeat_seed, "candidates/" + user_id);
}

json to_json(const Interaction& x) {
    return json{{"user", x.user_id}, {"item", x.item_id}, {"rating", x.rating}, {"timestamp", x.timestamp}};
}

json to_json(const UserSplit& s) {
    json train = json::array();
    for (const auto& x : s.train) train.push_back(to_json(x));
    return json{{"user_id", s.user_id}, {"train", std::move(train)}, {"test", to_json(s.test)}};
}

UserSplit split_from_json(const json& j) {
    UserSplit s;
    s.user_id = j.at("user_id").get<std::string>();
    for (const auto& x : j.at("train")) s.train.push_back(parse_interaction(x));
    s.test = parse_interaction(j.at("test"));
    return s;
}

}  // namespace recscale::dataset
