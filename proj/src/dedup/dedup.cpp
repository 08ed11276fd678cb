#include "recscale/dedup/dedup.hpp"

#include "recscale/common/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace recscale::dedup {

void DedupConfig::validate() const {
    if (!(eps > 0.0 && eps < 2.0)) throw std::invalid_argument("dedup.eps must be in (0, 2)");
    if (min_pts < 1) throw std::invalid_argument("dedup.min_pts must be at least 1");
}

Vector normalize(Vector v) {
    double sq = 0;
    for (double x : v) sq += x * x;
    if (!(sq > 0)) throw std::invalid_argument("cannot normalize a zero vector");
    const double inv = 1.0 / std::sqrt(sq);
    for (double& x : v) x *= inv;
    return v;
}

double cosine_distance(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) throw DimensionMismatch("vectors of dimension " + std::to_string(a.size()) + " and " +
                                                      std::to_string(b.size()));
    double dot = 0;
    for (std::size_t i = 0; i < a.size(); ++i) dot += a[i] * b[i];
    return 1.0 - dot;
}

std::string embedding_text(const search::Feature& f) { return f.name + ": " + f.definition; }

std::vector<EmbeddedFeature> embed_features(llm::Gateway& gateway, const std::string& model_id,
                                            const std::vector<search::Feature>& features, std::size_t batch) {
    std::vector<EmbeddedFeature> out;
    out.reserve(features.size());
    batch = std::max<std::size_t>(1, batch);
    for (std::size_t start = 0; start < features.size(); start += batch) {
        const std::size_t end = std::min(features.size(), start + batch);
        std::vector<std::string> texts;
        for (std::size_t i = start; i < end; ++i) texts.push_back(embedding_text(features[i]));
        auto vectors = gateway.embed(texts, model_id);
        for (std::size_t i = start; i < end; ++i) {
            out.push_back({features[i], normalize(std::move(vectors[i - start].values))});
        }
    }
    return out;
}

std::vector<std::vector<std::size_t>> neighbourhoods(const std::vector<Vector>& points, double eps,
                                                     std::size_t workers) {
    if (!points.empty()) {
        const auto dim = points.front().size();
        for (const auto& p : points) {
            if (p.size() != dim) throw DimensionMismatch("points must share one dimension");
        }
    }
    return parallel_map(points.size(), workers, [&](std::size_t i) {
        std::vector<std::size_t> row;
        for (std::size_t j = 0; j < points.size(); ++j) {
            if (i == j || cosine_distance(points[i], points[j]) <= eps) row.push_back(j);
        }
        return row;
    });
}

namespace {

// DBSCAN over the first `k` points, with neighbour rows restricted to j < k.
std::vector<int> cluster_prefix(const std::vector<std::vector<std::size_t>>& nbrs, std::size_t k, int min_pts) {
    auto prefix_row = [&](std::size_t i) {
        const auto& row = nbrs[i];
        return std::pair{row.begin(), std::lower_bound(row.begin(), row.end(), k)};
    };
    std::vector<char> core(k, 0);
    for (std::size_t i = 0; i < k; ++i) {
        const auto [b, e] = prefix_row(i);
        core[i] = e - b >= min_pts;
    }

    std::vector<int> label(k, kNoise);
    int next = 0;
    std::vector<std::size_t> queue;
    for (std::size_t i = 0; i < k; ++i) {
        if (!core[i] || label[i] != kNoise) continue;
        const int id = next++;
        label[i] = id;
        queue.assign(1, i);
        for (std::size_t q = 0; q < queue.size(); ++q) {
            const auto [b, e] = prefix_row(queue[q]);
            for (auto it = b; it != e; ++it) {
                if (label[*it] != kNoise) continue;
                label[*it] = id;
                if (core[*it]) queue.push_back(*it);
            }
        }
    }

    std::vector<int> rename(static_cast<std::size_t>(next), kNoise);
    int dense = 0;
    for (int& l : label) {
        if (l == kNoise) continue;
        auto& r = rename[static_cast<std::size_t>(l)];
        if (r == kNoise) r = dense++;
        l = r;
    }
    return label;
}

struct UnionFind {
    std::vector<std::size_t> parent;
    std::size_t sets = 0;

    std::size_t find(std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    }
    void add() {
        parent.push_back(parent.size());
        ++sets;
    }
    void unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a == b) return;
        parent[std::max(a, b)] = std::min(a, b);
        --sets;
    }
};

}  // namespace

std::vector<int> dbscan(const std::vector<Vector>& points, const DedupConfig& config) {
    config.validate();
    const auto nbrs = neighbourhoods(points, config.eps, config.workers);
    return cluster_prefix(nbrs, points.size(), config.min_pts);
}

std::size_t count_unique(const std::vector<int>& labels) {
    std::vector<int> clusters;
    std::size_t noise = 0;
    for (int l : labels) {
        if (l == kNoise) {
            ++noise;
        } else {
            clusters.push_back(l);
        }
    }
    std::sort(clusters.begin(), clusters.end());
    return noise + static_cast<std::size_t>(std::unique(clusters.begin(), clusters.end()) - clusters.begin());
}

std::vector<GrowthPoint> growth_curve(const std::vector<Vector>& points, const DedupConfig& config) {
    config.validate();
    const std::size_t total = points.size();
    std::vector<GrowthPoint> out;
    if (total == 0) return out;
    const std::size_t stride = config.stride ? config.stride : std::max<std::size_t>(1, total / 200);
    const auto nbrs = neighbourhoods(points, config.eps, config.workers);
    auto due = [&](std::size_t k) { return k % stride == 0 || k == total; };

    if (config.min_pts == 1) {
        // Every point is core, so clusters are connected components and can
        // be grown one point at a time.
        UnionFind uf;
        for (std::size_t k = 1; k <= total; ++k) {
            const std::size_t i = k - 1;
            uf.add();
            for (std::size_t j : nbrs[i]) {
                if (j >= i) break;
                uf.unite(i, j);
            }
            if (due(k)) out.push_back({k, uf.sets});
        }
        return out;
    }
    for (std::size_t k = 1; k <= total; ++k) {
        if (due(k)) out.push_back({k, count_unique(cluster_prefix(nbrs, k, config.min_pts))});
    }
    return out;
}

DedupReport deduplicate(const std::vector<Vector>& points, const DedupConfig& config) {
    DedupReport r;
    r.labels = dbscan(points, config);
    r.total_valid = points.size();
    r.unique_count = count_unique(r.labels);
    r.growth = growth_curve(points, config);
    r.eps = config.eps;
    r.min_pts = config.min_pts;
    return r;
}

std::string growth_csv(const std::vector<GrowthPoint>& growth) {
    std::string out = "total,unique\n";
    for (const auto& p : growth) out += std::to_string(p.total) + "," + std::to_string(p.unique) + "\n";
    return out;
}

nlohmann::json summary_json(const DedupReport& report) {
    return {{"total_valid", report.total_valid},
            {"unique_count", report.unique_count},
            {"eps", report.eps},
            {"min_pts", report.min_pts}};
}

}  // namespace recscale::dedup
