#pragma once

#include "recscale/common/files.hpp"
#include "recscale/dedup/dedup.hpp"
#include "recscale/eval/eval.hpp"
#include "recscale/search/strategies.hpp"

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace recscale::pipeline {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct BackendSpec {
    std::string name;
    std::string kind;  // openai | simulated | playback
    std::string base_url;
    std::string api_key_env;
    double timeout_s = 60.0;
    std::size_t max_parallel = 4;
    fs::path transcript;  // playback source
    fs::path record;      // if set, every reply is also written to this transcript
    std::size_t embedding_dim = 256;
};

struct ModelRef {
    std::string backend;
    std::string model;
    double temperature = 0.0;
    int max_tokens = 1024;
};

struct EvalSettings {
    std::size_t c = 20;
    std::vector<int> ks{5, 10};
    std::vector<std::uint64_t> seeds{1, 2, 3};
    std::vector<eval::TaskKind> tasks{eval::TaskKind::direct_ranking, eval::TaskKind::in_context_learning,
                                      eval::TaskKind::next_item_prediction};
    bool exclude_noncompliant = false;
    std::size_t workers = 8;
    std::uint64_t icl_seed = 7;
    int max_tokens = 2048;
};

struct JudgeSettings {
    std::string model_a;  // policy model ids
    std::string model_b;
    search::Strategy strategy = search::Strategy::cot;
    std::size_t sample_size = 0;
    std::uint64_t pairing_seed = 0;
    std::size_t workers = 4;
};

struct RunConfig {
    fs::path base_dir;  // relative paths resolve against this
    std::string run_id = "default";
    fs::path runs_root;
    fs::path templates_dir;
    fs::path cache_dir;  // empty: in-memory cache only

    fs::path interactions;
    fs::path catalog;
    int min_history = 5;
    int rating_threshold = 4;

    std::map<std::string, BackendSpec> backends;
    std::vector<ModelRef> policies;
    ModelRef reward;
    ModelRef recommender;
    ModelRef embedding;
    std::vector<ModelRef> judges;

    std::vector<search::Strategy> strategies{search::Strategy::cot, search::Strategy::best_of_n,
                                             search::Strategy::beam, search::Strategy::mcts};
    search::StrategyConfig search;
    std::size_t user_workers = 4;  // users searched concurrently

    dedup::DedupConfig dedup;
    EvalSettings eval;
    JudgeSettings judge;

    // Relative paths are taken against base_dir.
    fs::path resolve(const fs::path& p) const { return p.is_absolute() ? p : base_dir / p; }

    // Resolved settings as JSON; this is what the manifest snapshots.
    nlohmann::json to_json() const;
    std::string hash() const;
};

// Parses a TOML file, applies "dotted.key=value" overrides (values are read
// as TOML, falling back to a plain string) and validates the result.
RunConfig load_config(const fs::path& path, const std::vector<std::string>& overrides = {});

RunConfig config_from_json(const nlohmann::json& j, const fs::path& base_dir);

// Directory-safe form of a model id.
std::string slug(const std::string& model_id);

}  // namespace recscale::pipeline
