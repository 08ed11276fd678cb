#pragma once

// Metric oracles and constructed ranking outputs shared by the unit tests
// and the acceptance runner.

#include "recscale/common/rng.hpp"
#include "recscale/eval/eval.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace recscale::testing {

// DCG@k over graded relevance, divided by the DCG@k of the ideal ordering.
inline double brute_force_ndcg(const std::vector<double>& rel_in_rank_order, int k) {
    auto dcg = [k](const std::vector<double>& rel) {
        double s = 0;
        for (int i = 0; i < k && i < static_cast<int>(rel.size()); ++i) s += rel[static_cast<std::size_t>(i)] / std::log2(i + 2.0);
        return s;
    };
    std::vector<double> ideal = rel_in_rank_order;
    std::sort(ideal.rbegin(), ideal.rend());
    const double idcg = dcg(ideal);
    return idcg == 0 ? 0 : dcg(rel_in_rank_order) / idcg;
}

inline double brute_force_hit(const std::vector<double>& rel_in_rank_order, int k) {
    for (int i = 0; i < k && i < static_cast<int>(rel_in_rank_order.size()); ++i) {
        if (rel_in_rank_order[static_cast<std::size_t>(i)] > 0) return 1;
    }
    return 0;
}

// Compares ndcg_at_k / hit_at_k with the brute-force oracle on `cases`
// random compliant rankings over `c` candidates. Returns the largest
// absolute difference seen.
inline double metric_oracle_max_error(std::size_t cases, std::size_t c, std::uint64_t seed) {
    SplitMix64 rng(seed);
    double worst = 0;
    for (std::size_t t = 0; t < cases; ++t) {
        eval::RankingOutput ranking;
        ranking.compliant = true;
        for (std::size_t i = 0; i < c; ++i) ranking.ordered_items.push_back("item" + std::to_string(i));
        for (std::size_t i = c; i > 1; --i) std::swap(ranking.ordered_items[i - 1], ranking.ordered_items[rng.bounded(i)]);
        const std::string truth = "item" + std::to_string(rng.bounded(c));
        std::vector<double> rel;
        for (const auto& item : ranking.ordered_items) rel.push_back(item == truth ? 1.0 : 0.0);
        for (int k : {1, 3, 5, 10, 20}) {
            worst = std::max(worst, std::abs(eval::ndcg_at_k(ranking, truth, k) - brute_force_ndcg(rel, k)));
            worst = std::max(worst, std::abs(eval::hit_at_k(ranking, truth, k) - brute_force_hit(rel, k)));
        }
    }
    return worst;
}

// A 20-candidate set over a synthetic catalog, and model outputs that are
// complete, missing one item, duplicating one item, or naming a foreign item.
struct RankingPatterns {
    dataset::ItemCatalog catalog;
    dataset::CandidateSet candidates;

    explicit RankingPatterns(std::size_t c = 20) {
        for (std::size_t i = 0; i < c + 5; ++i) {
            catalog["p" + std::to_string(i)] = {"Product number " + std::to_string(i), ""};
        }
        candidates.user_id = "u";
        for (std::size_t i = 0; i < c; ++i) candidates.candidates.push_back("p" + std::to_string((i * 7) % c));
        candidates.ground_truth = candidates.candidates[3];
    }

    std::string line(std::size_t i) const {
        return "[" + std::to_string(i + 1) + "] " + catalog.at(candidates.candidates[i]).title;
    }

    std::string complete() const {
        std::string out;
        for (std::size_t i = candidates.candidates.size(); i-- > 0;) out += line(i) + "\n";
        return out;
    }
    std::string missing_one() const {
        std::string out;
        for (std::size_t i = 0; i + 1 < candidates.candidates.size(); ++i) out += line(i) + "\n";
        return out;
    }
    std::string duplicated_one() const {
        std::string out = line(0) + "\n";
        for (std::size_t i = 0; i + 1 < candidates.candidates.size(); ++i) out += line(i) + "\n";
        return out;
    }
    std::string foreign_item() const {
        std::string out;
        for (std::size_t i = 0; i + 1 < candidates.candidates.size(); ++i) out += line(i) + "\n";
        out += "[21] " + catalog.at("p" + std::to_string(candidates.candidates.size() + 2)).title + "\n";
        return out;
    }

    // Valid rate over `users` outcomes that all follow one pattern.
    double valid_rate(const std::string& raw, std::size_t users = 10) const {
        std::vector<eval::UserOutcome> outcomes;
        for (std::size_t u = 0; u < users; ++u) {
            outcomes.push_back({"u" + std::to_string(u), candidates.ground_truth,
                                eval::parse_ranking(raw, candidates, catalog)});
        }
        return eval::aggregate(outcomes, eval::TaskKind::direct_ranking, {5, 10}, false).valid_rate;
    }
};

struct OlsOracle {
    double slope = 0;
    double intercept = 0;
    double r = 0;
};

// Normal equations [n sx; sx sxx][b; a] = [sy; sxy] solved by Cramer's rule,
// and Pearson r from raw sums.
inline OlsOracle ols_normal_equations(const std::vector<double>& counts, const std::vector<double>& ys) {
    double n = static_cast<double>(counts.size()), sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        const double x = std::log10(counts[i]);
        sx += x;
        sy += ys[i];
        sxx += x * x;
        sxy += x * ys[i];
        syy += ys[i] * ys[i];
    }
    const double det = n * sxx - sx * sx;
    OlsOracle o;
    o.intercept = (sy * sxx - sx * sxy) / det;
    o.slope = (n * sxy - sx * sy) / det;
    o.r = (n * sxy - sx * sy) / std::sqrt((n * sxx - sx * sx) * (n * syy - sy * sy));
    return o;
}

}  // namespace recscale::testing
