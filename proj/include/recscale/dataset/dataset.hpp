#pragma once

#include "recscale/common/files.hpp"

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace recscale::dataset {

struct Interaction {
    std::string user_id;
    std::string item_id;
    int rating = 0;               // 1..5
    std::int64_t timestamp = 0;   // seconds since epoch, >= 0

    bool operator==(const Interaction&) const = default;
};

struct ItemInfo {
    std::string title;
    std::string description;
};

// item_id -> (title, description). Ordered so that iteration is deterministic.
using ItemCatalog = std::map<std::string, ItemInfo>;

struct UserSplit {
    std::string user_id;
    std::vector<Interaction> train;  // ascending (timestamp, item_id)
    Interaction test;

    bool operator==(const UserSplit&) const = default;
};

struct RatedItem {
    std::string item_id;
    int rating = 0;

    bool operator==(const RatedItem&) const = default;
};

struct PreferenceProfile {
    std::string user_id;
    std::vector<RatedItem> liked;
    std::vector<RatedItem> disliked;
    int threshold = 4;
};

struct CandidateSet {
    std::string user_id;
    std::vector<std::string> candidates;
    std::string ground_truth;
    std::uint64_t seed = 0;

    bool operator==(const CandidateSet&) const = default;
};

class DatasetError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct LineError {
    std::size_t line = 0;
    std::string message;
};

struct InteractionLoad {
    std::vector<Interaction> interactions;
    std::size_t skipped = 0;
    std::vector<LineError> errors;
};

// JSON-lines with keys user, item, rating, timestamp. Malformed records are
// skipped and reported with their line number. Throws DatasetError if the
// file cannot be opened.
InteractionLoad load_interactions(const fs::path& path);

struct CatalogLoad {
    ItemCatalog catalog;
    std::size_t skipped = 0;
    std::vector<LineError> errors;
};

// JSON-lines with keys item, title, description.
CatalogLoad load_catalog(const fs::path& path);

// Item ids referenced by interactions that the catalog cannot resolve.
std::vector<std::string> missing_catalog_items(const std::vector<Interaction>& interactions,
                                               const ItemCatalog& catalog);

struct SplitResult {
    std::vector<UserSplit> splits;  // ascending user_id
    std::size_t dropped_users = 0;
    std::size_t collapsed_repeats = 0;  // repeat (user, item) events merged into their latest
};

// Leave-one-out split. Repeat interactions with the same item keep only the
// latest event so the held-out item never reappears in train.
SplitResult build_splits(const std::vector<Interaction>& interactions, int min_history = 5);

// Inverse of build_splits for one split: train followed by test.
std::vector<Interaction> flatten(const std::vector<UserSplit>& splits);

PreferenceProfile partition_preferences(const UserSplit& split, int threshold = 4);

// C-1 negatives drawn without replacement from the catalog minus the user's
// train items minus the ground truth; ground truth inserted at a seeded
// position. Mapping from seed to output is documented in docs/sampling.md.
CandidateSet sample_candidates(const UserSplit& split, const ItemCatalog& catalog, std::size_t c,
                               std::uint64_t seed);

// Per-user seed for a repeat seed: derive_seed(repeat_seed, "candidates/" + user_id).
std::uint64_t candidate_seed(std::uint64_t repeat_seed, const std::string& user_id);

json to_json(const Interaction& x);
json to_json(const UserSplit& s);
UserSplit split_from_json(const json& j);

}  // namespace recscale::dataset
