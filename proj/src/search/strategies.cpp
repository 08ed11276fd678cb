#include "recscale/search/strategies.hpp"

#include "recscale/common/parallel.hpp"
#include "recscale/common/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace recscale::search {

namespace {

// Policy failures end a sample, beam or rollout instead of the whole search.
// Configuration problems (auth, bad requests, missing transcript entries)
// still propagate.
template <typename Fn>
bool policy_call(Fn&& fn) {
    try {
        fn();
        return true;
    } catch (const llm::TransientError&) {
    } catch (const llm::RetriesExhausted&) {
    } catch (const llm::MalformedReply&) {
    }
    return false;
}

void stamp(std::vector<Feature>& features, const std::string& model_id, Strategy strategy) {
    for (std::size_t i = 0; i < features.size(); ++i) {
        features[i].provenance.policy_model_id = model_id;
        features[i].provenance.strategy = strategy;
        features[i].provenance.step_index = static_cast<int>(i);
    }
}

FeatureSet failed_set(const std::string& user_id, std::string note) {
    FeatureSet out;
    out.user_id = user_id;
    out.failed = true;
    out.note = std::move(note);
    return out;
}

// Order by valid_count descending, index ascending.
std::vector<std::size_t> rank(const std::vector<RewardScore>& scores) {
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a].valid_count > scores[b].valid_count; });
    return order;
}

std::string feature_line(const Feature& f) { return f.name + ": " + f.definition; }

}  // namespace

void StrategyConfig::validate() const {
    if (n < 1) throw std::invalid_argument("search.n must be at least 1");
    if (m < 1) throw std::invalid_argument("search.m must be at least 1");
    if (n % m != 0) throw std::invalid_argument("search.n must be a multiple of search.m");
    if (max_features < 1) throw std::invalid_argument("search.max_features must be at least 1");
    if (mcts_iterations < 1) throw std::invalid_argument("search.mcts_iterations must be at least 1");
    if (!(uct_c > 0)) throw std::invalid_argument("search.uct_c must be positive");
}

std::uint64_t user_seed(std::uint64_t rng_seed, const std::string& user_id) {
    return derive_seed(rng_seed, "user/" + user_id);
}

std::uint64_t sample_seed(std::uint64_t seed, int k) { return derive_seed(seed, "sample/" + std::to_string(k)); }

FeatureSet generate_cot(const SearchInput& in) {
    std::string raw;
    for (int attempt = 0; attempt < 2; ++attempt) {
        const auto seed = attempt == 0 ? sample_seed(in.seed, 0) : derive_seed(in.seed, "cot/retry");
        if (!policy_call([&] { raw = in.policy.generate(seed); })) continue;
        try {
            FeatureSet set = parse_features(raw);
            set.user_id = in.user_id;
            stamp(set.features, in.policy.model_id(), Strategy::cot);
            return set;
        } catch (const ParseFailure&) {
        }
    }
    FeatureSet out = failed_set(in.user_id, "parse_failure");
    out.raw_text = raw;
    return out;
}

RewardScore score_features(RewardModel& reward, const FeatureSet& set) {
    if (set.features.empty()) return {};
    RewardScore s = reward.score(set.features);
    if (s.per_feature.size() != set.features.size()) throw std::logic_error("reward model returned misaligned verdicts");
    return s;
}

FeatureSet best_of_n(const SearchInput& in, const StrategyConfig& config) {
    config.validate();
    struct Sample {
        bool ok = false;
        FeatureSet set;
        RewardScore score;
    };
    const auto samples = parallel_map(static_cast<std::size_t>(config.n), config.workers, [&](std::size_t i) {
        Sample s;
        std::string raw;
        if (!policy_call([&] { raw = in.policy.generate(sample_seed(in.seed, static_cast<int>(i))); })) return s;
        try {
            s.set = parse_features(raw);
        } catch (const ParseFailure&) {
            return s;
        }
        s.ok = true;
        s.set.user_id = in.user_id;
        stamp(s.set.features, in.policy.model_id(), Strategy::best_of_n);
        s.score = score_features(in.reward, s.set);
        return s;
    });

    const Sample* best = nullptr;
    for (const auto& s : samples) {
        if (s.ok && (!best || s.score.valid_count > best->score.valid_count)) best = &s;
    }
    if (!best) return failed_set(in.user_id, "all_samples_failed");
    FeatureSet out = best->set;
    apply_score(out, best->score);
    return out;
}

FeatureSet beam_search(const SearchInput& in, const StrategyConfig& config, BeamTrace* trace) {
    config.validate();
    struct Beam {
        std::vector<Feature> features;
        bool terminal = false;
        std::size_t origin = 0;
        std::string raw;
    };
    const auto n = static_cast<std::size_t>(config.n);
    const auto m = static_cast<std::size_t>(config.m);
    const auto max_features = static_cast<std::size_t>(config.max_features);

    // Extends `beam` by one step; END, an unreadable reply, a repeated name
    // or a policy failure ends it unchanged.
    auto step = [&](const Beam& beam, std::uint64_t seed) {
        Beam next = beam;
        if (beam.terminal) return next;
        std::string raw;
        if (!policy_call([&] { raw = in.policy.extend(beam.features, seed); })) {
            next.terminal = true;
            return next;
        }
        const StepOutcome outcome = parse_step(raw);
        if (outcome.kind != StepKind::feature || has_feature_named(beam.features, outcome.feature.name)) {
            next.terminal = true;
            return next;
        }
        next.features.push_back(outcome.feature);
        next.raw += feature_line(outcome.feature) + "\n";
        next.terminal = next.features.size() >= max_features;
        return next;
    };

    std::vector<Beam> beams = parallel_map(n, config.workers, [&](std::size_t i) {
        Beam root;
        root.origin = i;
        return step(root, derive_seed(in.seed, "beam/0/" + std::to_string(i)));
    });

    BeamTrace local;
    BeamTrace& t = trace ? *trace : local;
    t.rounds.clear();
    std::vector<RewardScore> scores;
    for (int round = 1;; ++round) {
        scores = parallel_map(beams.size(), config.workers, [&](std::size_t i) {
            FeatureSet prefix;
            prefix.features = beams[i].features;
            return score_features(in.reward, prefix);
        });
        BeamRound r;
        r.beams = beams.size();
        for (const auto& b : beams) r.longest = std::max(r.longest, b.features.size());
        const bool done = std::all_of(beams.begin(), beams.end(), [](const Beam& b) { return b.terminal; });
        if (done) {
            t.rounds.push_back(r);
            break;
        }

        const auto order = rank(scores);
        std::vector<std::size_t> survivors(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n / m));
        r.survivors = survivors.size();
        t.rounds.push_back(r);

        beams = parallel_map(survivors.size() * m, config.workers, [&](std::size_t k) {
            const std::size_t s = k / m;
            const std::size_t j = k % m;
            return step(beams[survivors[s]], derive_seed(in.seed, "beam/" + std::to_string(round) + "/" +
                                                                      std::to_string(s) + "/" + std::to_string(j)));
        });
    }

    const auto best = rank(scores).front();
    if (beams[best].features.empty()) return failed_set(in.user_id, "all_beams_failed");
    t.winner_origin = beams[best].origin;
    FeatureSet out;
    out.user_id = in.user_id;
    out.features = beams[best].features;
    out.raw_text = beams[best].raw;
    stamp(out.features, in.policy.model_id(), Strategy::beam);
    apply_score(out, scores[best]);
    return out;
}

double uct_score(const SearchNode& node, int parent_visits, double c) {
    if (node.visits == 0) return std::numeric_limits<double>::infinity();
    const double n = node.visits;
    return node.total_reward / n + c * std::sqrt(std::log(static_cast<double>(parent_visits)) / n);
}

MctsSearch::MctsSearch(const SearchInput& in, const StrategyConfig& config) : in_(in), config_(config) {
    config_.validate();
}

MctsSearch::Extension MctsSearch::extend(const std::vector<Feature>& prefix, std::uint64_t seed, Feature& out) {
    std::string raw;
    if (!policy_call([&] { raw = in_.policy.extend(prefix, seed); })) return Extension::failed;
    StepOutcome outcome = parse_step(raw);
    if (outcome.kind == StepKind::end) return Extension::end;
    if (outcome.kind != StepKind::feature || has_feature_named(prefix, outcome.feature.name)) {
        return Extension::failed;
    }
    out = std::move(outcome.feature);
    return Extension::feature;
}

void MctsSearch::expand(SearchNode& node) {
    const auto max_features = static_cast<std::size_t>(config_.max_features);
    for (int j = 0; j < config_.m; ++j) {
        auto child = std::make_unique<SearchNode>();
        child->partial = node.partial;
        Feature f;
        const auto seed = derive_seed(in_.seed, "mcts/expand/" + std::to_string(iterations_) + "/" + std::to_string(j));
        if (extend(node.partial, seed, f) == Extension::feature) {
            child->partial.push_back(std::move(f));
            child->terminal = child->partial.size() >= max_features;
        } else {
            child->terminal = true;
        }
        node.children.push_back(std::move(child));
    }
}

double MctsSearch::rollout(SearchNode& node) {
    const auto max_features = static_cast<std::size_t>(config_.max_features);
    std::vector<Feature> seq = node.partial;
    if (!node.terminal) {
        for (int k = 0; seq.size() < max_features; ++k) {
            Feature f;
            const auto seed =
                derive_seed(in_.seed, "mcts/rollout/" + std::to_string(iterations_) + "/" + std::to_string(k));
            const auto ext = extend(seq, seed, f);
            if (ext == Extension::end) break;
            if (ext == Extension::failed) return 0.0;
            seq.push_back(std::move(f));
        }
    }
    FeatureSet set;
    set.features = seq;
    const double reward = score_features(in_.reward, set).valid_count;
    if (reward > node.rollout_reward) {
        node.rollout_reward = reward;
        node.rollout = std::move(seq);
    }
    return reward;
}

MctsSearch::Iteration MctsSearch::iterate() {
    std::vector<SearchNode*> path{&root_};
    SearchNode* node = &root_;
    while (!node->terminal && !node->children.empty()) {
        SearchNode* pick = nullptr;
        double best = -std::numeric_limits<double>::infinity();
        for (auto& child : node->children) {
            const double u = uct_score(*child, node->visits, config_.uct_c);
            if (!pick || u > best) {
                pick = child.get();
                best = u;
            }
        }
        node = pick;
        path.push_back(node);
    }
    if (!node->terminal && node->children.empty() && (node->visits > 0 || node == &root_)) {
        expand(*node);
        node = node->children.front().get();
        path.push_back(node);
    }
    const double reward = rollout(*node);
    for (SearchNode* p : path) {
        p->visits += 1;
        p->total_reward += reward;
    }
    ++iterations_;
    return {std::vector<const SearchNode*>(path.begin(), path.end()), reward};
}

std::vector<Feature> MctsSearch::best_sequence() const {
    const SearchNode* node = &root_;
    for (;;) {
        const SearchNode* pick = nullptr;
        for (const auto& child : node->children) {
            if (child->visits > 0 && (!pick || child->visits > pick->visits)) pick = child.get();
        }
        if (!pick) break;
        node = pick;
    }
    if (node->terminal) return node->partial;
    return node->rollout;
}

FeatureSet mcts(const SearchInput& in, const StrategyConfig& config) {
    MctsSearch search(in, config);
    for (int i = 0; i < config.mcts_iterations; ++i) search.iterate();
    FeatureSet out;
    out.user_id = in.user_id;
    out.features = search.best_sequence();
    if (out.features.empty()) return failed_set(in.user_id, "no_terminal_sequence");
    for (const auto& f : out.features) out.raw_text += feature_line(f) + "\n";
    stamp(out.features, in.policy.model_id(), Strategy::mcts);
    apply_score(out, score_features(in.reward, out));
    return out;
}

FeatureSet run_strategy(Strategy strategy, const SearchInput& in, const StrategyConfig& config) {
    switch (strategy) {
        case Strategy::cot: {
            FeatureSet set = generate_cot(in);
            if (!set.failed) apply_score(set, score_features(in.reward, set));
            return set;
        }
        case Strategy::best_of_n: return best_of_n(in, config);
        case Strategy::beam: return beam_search(in, config);
        case Strategy::mcts: return mcts(in, config);
    }
    throw std::invalid_argument("unknown strategy");
}

FeatureSet search_user(Strategy strategy, const dataset::PreferenceProfile& profile,
                       const dataset::ItemCatalog& catalog, const TemplateLibrary& templates,
                       llm::Gateway& policy_gateway, llm::Gateway& reward_gateway, const SearchModelIds& models,
                       const StrategyConfig& config) {
    if (profile.liked.empty() || profile.disliked.empty()) {
        FeatureSet out;
        out.user_id = profile.user_id;
        out.note = "degenerate_profile";
        return out;
    }
    LlmPolicy policy(policy_gateway, templates, profile, catalog, models.policy, models.policy_params);
    LlmRewardModel reward(reward_gateway, templates, profile, catalog, models.reward, models.reward_params);
    SearchInput in{policy, reward, profile.user_id, user_seed(config.rng_seed, profile.user_id)};
    return run_strategy(strategy, in, config);
}

}  // namespace recscale::search
