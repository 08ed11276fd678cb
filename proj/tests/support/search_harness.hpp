#pragma once

// Scripted policy/reward models and the randomized search scenarios shared by
// the unit tests and the acceptance runner.

#include "recscale/common/rng.hpp"
#include "recscale/search/strategies.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>
#include <string>
#include <vector>

namespace recscale::testing {

using search::Feature;

class FnPolicy : public search::PolicyModel {
public:
    using Generate = std::function<std::string(std::uint64_t)>;
    using Extend = std::function<std::string(const std::vector<Feature>&, std::uint64_t)>;

    FnPolicy(Generate g, Extend e, std::string id = "scripted-policy")
        : generate_(std::move(g)), extend_(std::move(e)), id_(std::move(id)) {}

    std::string generate(std::uint64_t seed) override { return generate_(seed); }
    std::string extend(const std::vector<Feature>& prefix, std::uint64_t seed) override {
        return extend_(prefix, seed);
    }
    std::string model_id() const override { return id_; }

private:
    Generate generate_;
    Extend extend_;
    std::string id_;
};

class FnReward : public search::RewardModel {
public:
    using Judge = std::function<bool(const std::vector<Feature>&, std::size_t)>;

    explicit FnReward(Judge judge) : judge_(std::move(judge)) {}

    search::RewardScore score(const std::vector<Feature>& features) override {
        {
            std::lock_guard lock(mu_);
            ++calls_;
        }
        search::RewardScore s;
        for (std::size_t i = 0; i < features.size(); ++i) {
            const bool v = judge_(features, i);
            s.per_feature.push_back(v);
            s.valid_count += v;
        }
        return s;
    }

    int calls() const {
        std::lock_guard lock(mu_);
        return calls_;
    }

private:
    Judge judge_;
    mutable std::mutex mu_;
    int calls_ = 0;
};

inline std::string hex(std::uint64_t v) {
    std::ostringstream os;
    os << std::hex << v;
    return os.str();
}

// Best-of-N over scripted per-sample valid counts. Returns an empty string on
// success, a description of the mismatch otherwise.
inline std::string check_best_of_n_case(std::uint64_t case_seed) {
    SplitMix64 rng(case_seed);
    search::StrategyConfig config;
    config.n = 1 + static_cast<int>(rng.bounded(12));
    config.m = 1;
    config.workers = 1 + rng.bounded(4);
    const std::uint64_t seed = rng.next();
    std::vector<int> counts(static_cast<std::size_t>(config.n));
    for (auto& c : counts) c = static_cast<int>(rng.bounded(6));

    std::map<std::uint64_t, int> index_of;
    for (int i = 0; i < config.n; ++i) index_of[search::sample_seed(seed, i)] = i;
    FnPolicy policy(
        [&](std::uint64_t s) {
            const int i = index_of.at(s);
            std::string out;
            for (int j = 0; j < 6; ++j) {
                out += std::to_string(j + 1) + ". S" + std::to_string(i) + "F" + std::to_string(j) + ": feature " +
                       std::to_string(j) + " of sample " + std::to_string(i) + "\n";
            }
            return out;
        },
        [](const std::vector<Feature>&, std::uint64_t) { return std::string("END"); });
    FnReward reward([&](const std::vector<Feature>& fs, std::size_t k) {
        const int i = std::stoi(fs[k].name.substr(1, fs[k].name.find('F') - 1));
        return static_cast<int>(k) < counts[static_cast<std::size_t>(i)];
    });

    int expected = 0;
    for (int i = 1; i < config.n; ++i) {
        if (counts[static_cast<std::size_t>(i)] > counts[static_cast<std::size_t>(expected)]) expected = i;
    }
    const auto set = search::best_of_n({policy, reward, "u", seed}, config);
    const int want = counts[static_cast<std::size_t>(expected)];
    if (static_cast<int>(set.features.size()) != want) {
        return "returned " + std::to_string(set.features.size()) + " features, expected " + std::to_string(want);
    }
    const std::string prefix = "S" + std::to_string(expected) + "F";
    for (const auto& f : set.features) {
        if (f.name.rfind(prefix, 0) != 0) return "feature " + f.name + " not from sample " + std::to_string(expected);
        if (!f.valid.value_or(false)) return "unfiltered invalid feature " + f.name;
    }
    for (int c : counts) {
        if (static_cast<int>(set.valid_count()) < c) return "valid_count below some sample";
    }
    return {};
}

// A policy that proposes fresh random feature names, sometimes ends, and
// sometimes answers with prose. Pure in (prefix, seed).
inline FnPolicy random_policy(double end_rate = 0.15, double junk_rate = 0.05) {
    auto extend = [=](const std::vector<Feature>& prefix, std::uint64_t seed) -> std::string {
        std::uint64_t h = seed;
        for (const auto& f : prefix) h ^= fnv1a64(f.name) + 0x9E37 * prefix.size();
        SplitMix64 r(h);
        const double u = r.uniform();
        if (u < end_rate) return "END";
        if (u < end_rate + junk_rate) return "I would need more information about this user.";
        return "F" + std::to_string(r.bounded(100000)) + ": a preference dimension";
    };
    auto generate = [=](std::uint64_t seed) { return extend({}, seed); };
    return FnPolicy(generate, extend);
}

inline bool hash_valid(const std::vector<Feature>& fs, std::size_t k) { return fnv1a64(fs[k].name) % 3 != 0; }

inline std::string check_beam_case(int n, int m, std::uint64_t case_seed) {
    SplitMix64 rng(case_seed);
    search::StrategyConfig config;
    config.n = n;
    config.m = m;
    config.max_features = 1 + static_cast<int>(rng.bounded(8));
    config.workers = 1 + rng.bounded(4);
    auto policy = random_policy(rng.uniform() * 0.2, 0.03);
    FnReward reward(hash_valid);
    search::BeamTrace trace;
    const auto set = search::beam_search({policy, reward, "u", rng.next()}, config, &trace);
    if (trace.rounds.empty()) return "no rounds recorded";
    for (std::size_t r = 0; r < trace.rounds.size(); ++r) {
        const auto& round = trace.rounds[r];
        const bool last = r + 1 == trace.rounds.size();
        if (round.beams != static_cast<std::size_t>(n)) {
            return "round " + std::to_string(r) + " holds " + std::to_string(round.beams) + " beams";
        }
        if (!last && round.survivors != static_cast<std::size_t>(n / m)) {
            return "round " + std::to_string(r) + " kept " + std::to_string(round.survivors) + " beams";
        }
        if (round.longest > static_cast<std::size_t>(config.max_features)) {
            return "beam longer than max_features in round " + std::to_string(r);
        }
    }
    if (trace.rounds.size() > static_cast<std::size_t>(config.max_features)) return "too many rounds";
    for (const auto& f : set.features) {
        if (!f.valid.value_or(false)) return "unfiltered invalid feature";
    }
    return {};
}

// Runs a random tree and checks the per-iteration path property plus the
// aggregate visit invariants.
inline std::string check_mcts_case(std::uint64_t case_seed) {
    SplitMix64 rng(case_seed);
    search::StrategyConfig config;
    config.n = 1;
    config.m = 1 + static_cast<int>(rng.bounded(3));
    config.n = config.m;
    config.max_features = 1 + static_cast<int>(rng.bounded(6));
    config.mcts_iterations = 1 + static_cast<int>(rng.bounded(40));
    config.uct_c = 0.5 + rng.uniform() * 2;
    auto policy = random_policy(0.15, 0.05);
    FnReward reward(hash_valid);
    search::SearchInput in{policy, reward, "u", rng.next()};
    search::MctsSearch tree(in, config);

    using Snapshot = std::map<const search::SearchNode*, std::pair<int, double>>;
    auto snapshot = [&] {
        Snapshot s;
        std::vector<const search::SearchNode*> stack{&tree.root()};
        while (!stack.empty()) {
            const auto* node = stack.back();
            stack.pop_back();
            s[node] = {node->visits, node->total_reward};
            for (const auto& c : node->children) stack.push_back(c.get());
        }
        return s;
    };

    for (int it = 0; it < config.mcts_iterations; ++it) {
        const Snapshot before = snapshot();
        const auto record = tree.iterate();
        const Snapshot after = snapshot();
        std::map<const search::SearchNode*, bool> on_path;
        for (const auto* p : record.path) on_path[p] = true;
        if (record.path.empty() || record.path.front() != &tree.root()) return "path does not start at root";
        for (const auto& [node, va] : after) {
            const auto b = before.count(node) ? before.at(node) : std::pair<int, double>{0, 0.0};
            if (on_path.count(node)) {
                if (va.first != b.first + 1) return "path node visits not incremented by one";
                if (std::abs(va.second - (b.second + record.reward)) > 1e-9) return "path node reward mismatch";
            } else if (va != b) {
                return "off-path node changed";
            }
        }
        for (std::size_t i = 1; i < record.path.size(); ++i) {
            bool child = false;
            for (const auto& c : record.path[i - 1]->children) child |= c.get() == record.path[i];
            if (!child) return "path is not parent-to-child";
        }
    }
    if (tree.root().visits != config.mcts_iterations) return "root visits differ from iterations";
    std::vector<const search::SearchNode*> stack{&tree.root()};
    while (!stack.empty()) {
        const auto* node = stack.back();
        stack.pop_back();
        int sum = 0;
        for (const auto& c : node->children) {
            sum += c->visits;
            stack.push_back(c.get());
            if (c->partial.size() > static_cast<std::size_t>(config.max_features)) return "node past max_features";
        }
        if (node->visits < sum) return "node visits below sum of child visits";
    }
    return {};
}

// Two-branch tree: every rollout under branch A is worth 3, under branch B
// worth 1. `a_first` decides which root child is A.
struct TwoBranchResult {
    int visits_a = 0;
    int visits_b = 0;
    bool answer_from_a = false;
    std::vector<int> child_visits;  // root children, slot order
};

inline TwoBranchResult run_two_branch(std::uint64_t seed, bool a_first, int iterations, double c, int max_features) {
    int root_calls = 0;
    FnPolicy policy(
        [](std::uint64_t) { return std::string("END"); },
        [&](const std::vector<Feature>& prefix, std::uint64_t s) {
            if (prefix.empty()) {
                const bool a = (root_calls++ == 0) == a_first;
                return std::string(a ? "A" : "B") + "-root: first choice";
            }
            return prefix.front().name.substr(0, 1) + "-" + std::to_string(prefix.size()) + "-" + hex(s) +
                   ": follow-up";
        });
    FnReward reward([](const std::vector<Feature>& fs, std::size_t k) {
        const bool a = fs.front().name[0] == 'A';
        return k < static_cast<std::size_t>(a ? 3 : 1);
    });
    search::StrategyConfig config;
    config.n = 2;
    config.m = 2;
    config.mcts_iterations = iterations;
    config.uct_c = c;
    config.max_features = max_features;
    search::SearchInput in{policy, reward, "u", seed};
    search::MctsSearch tree(in, config);
    for (int i = 0; i < iterations; ++i) tree.iterate();

    TwoBranchResult out;
    for (const auto& child : tree.root().children) {
        out.child_visits.push_back(child->visits);
        (child->partial.front().name[0] == 'A' ? out.visits_a : out.visits_b) += child->visits;
    }
    const auto best = tree.best_sequence();
    out.answer_from_a = !best.empty() && best.front().name[0] == 'A';
    return out;
}

// Minimal MCTS over an abstract complete tree: every node has `width`
// children, depth `max_depth` is terminal, and a rollout from any node scores
// `branch_reward[root child]`. Returns root-child visits.
inline std::vector<int> reference_two_branch_visits(const std::vector<double>& branch_reward, int iterations,
                                                    double c, int width, int max_depth) {
    struct Node {
        int depth = 0;
        int branch = -1;
        int n = 0;
        double w = 0;
        std::vector<std::unique_ptr<Node>> kids;
    };
    Node root;
    for (int it = 0; it < iterations; ++it) {
        std::vector<Node*> path{&root};
        Node* cur = &root;
        while (cur->depth < max_depth && !cur->kids.empty()) {
            Node* pick = nullptr;
            double best = 0;
            for (auto& k : cur->kids) {
                const double u = k->n == 0 ? std::numeric_limits<double>::max()
                                           : k->w / k->n + c * std::sqrt(std::log(double(cur->n)) / k->n);
                if (!pick || u > best) {
                    pick = k.get();
                    best = u;
                }
            }
            cur = pick;
            path.push_back(cur);
        }
        if (cur->depth < max_depth && cur->kids.empty() && (cur->n > 0 || cur == &root)) {
            for (int j = 0; j < width; ++j) {
                auto k = std::make_unique<Node>();
                k->depth = cur->depth + 1;
                k->branch = cur == &root ? j : cur->branch;
                cur->kids.push_back(std::move(k));
            }
            cur = cur->kids.front().get();
            path.push_back(cur);
        }
        const double r = branch_reward[static_cast<std::size_t>(cur->branch)];
        for (Node* p : path) {
            p->n += 1;
            p->w += r;
        }
    }
    std::vector<int> out;
    for (auto& k : root.kids) out.push_back(k->n);
    return out;
}

}  // namespace recscale::testing
