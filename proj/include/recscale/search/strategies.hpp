#pragma once

#include "recscale/search/feature.hpp"
#include "recscale/search/models.hpp"

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace recscale::search {

struct StrategyConfig {
    int n = 8;  // Best-of-N samples, beam width
    int m = 2;  // beam expansion factor, MCTS branching width
    int mcts_iterations = 32;
    double uct_c = 1.414;
    int max_features = 10;
    std::uint64_t rng_seed = 0;
    std::size_t workers = 4;  // concurrent policy/reward calls within one search

    // Throws std::invalid_argument on n < 1, m < 1, n % m != 0,
    // max_features < 1, mcts_iterations < 1 or uct_c <= 0.
    void validate() const;
};

// Everything a search needs apart from the config. `seed` is the per-user
// stream; see user_seed().
struct SearchInput {
    PolicyModel& policy;
    RewardModel& reward;
    std::string user_id;
    std::uint64_t seed = 0;
};

std::uint64_t user_seed(std::uint64_t rng_seed, const std::string& user_id);

// Seed of the k-th complete generation. CoT uses sample 0, so Best-of-N with
// n = 1 sees the same reply.
std::uint64_t sample_seed(std::uint64_t seed, int k);

// One complete generation, one retry on a parse failure. Not scored.
FeatureSet generate_cot(const SearchInput& in);

RewardScore score_features(RewardModel& reward, const FeatureSet& set);

FeatureSet best_of_n(const SearchInput& in, const StrategyConfig& config);

struct BeamRound {
    std::size_t beams = 0;      // after generation/expansion
    std::size_t survivors = 0;  // after pruning; 0 in the final round
    std::size_t longest = 0;    // features in the longest beam
};

struct BeamTrace {
    std::vector<BeamRound> rounds;
    std::size_t winner_origin = 0;  // index of the round-0 beam the answer descends from
};

FeatureSet beam_search(const SearchInput& in, const StrategyConfig& config, BeamTrace* trace = nullptr);

struct SearchNode {
    std::vector<Feature> partial;
    int visits = 0;
    double total_reward = 0.0;
    std::vector<std::unique_ptr<SearchNode>> children;
    bool terminal = false;

    // Best complete sequence from a rollout that started at this node.
    std::vector<Feature> rollout;
    double rollout_reward = -1.0;
};

// +infinity when node.visits == 0.
double uct_score(const SearchNode& node, int parent_visits, double c);

// A single MCTS tree. Each node expands into config.m children.
class MctsSearch {
public:
    struct Iteration {
        std::vector<const SearchNode*> path;  // root first
        double reward = 0.0;
    };

    MctsSearch(const SearchInput& in, const StrategyConfig& config);

    Iteration iterate();
    const SearchNode& root() const { return root_; }
    int iterations() const { return iterations_; }

    // Follows the most visited child from the root (ties to the lowest
    // index) and returns the terminal sequence found there, unfiltered.
    std::vector<Feature> best_sequence() const;

private:
    enum class Extension { feature, end, failed };
    Extension extend(const std::vector<Feature>& prefix, std::uint64_t seed, Feature& out);
    void expand(SearchNode& node);
    double rollout(SearchNode& node);

    const SearchInput& in_;
    StrategyConfig config_;
    SearchNode root_;
    int iterations_ = 0;
};

FeatureSet mcts(const SearchInput& in, const StrategyConfig& config);

// Runs `strategy`, then scores and filters the result so only valid features
// remain (CoT included).
FeatureSet run_strategy(Strategy strategy, const SearchInput& in, const StrategyConfig& config);

// Full per-user search over LLM-backed policy and reward models. A profile
// without both liked and disliked items yields an empty set noted
// "degenerate_profile" and makes no calls.
struct SearchModelIds {
    std::string policy;
    std::string reward;
    SamplingParams policy_params{1.0, 1024};
    SamplingParams reward_params{0.0, 512};
};

FeatureSet search_user(Strategy strategy, const dataset::PreferenceProfile& profile,
                       const dataset::ItemCatalog& catalog, const TemplateLibrary& templates,
                       llm::Gateway& policy_gateway, llm::Gateway& reward_gateway, const SearchModelIds& models,
                       const StrategyConfig& config);

}  // namespace recscale::search
