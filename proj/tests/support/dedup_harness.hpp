#pragma once

// Random point sets and an O(n^2) reference DBSCAN shared by the unit tests
// and the acceptance runner.

#include "recscale/common/rng.hpp"
#include "recscale/dedup/dedup.hpp"

#include <cmath>
#include <map>
#include <string>
#include <vector>

namespace recscale::testing {

// Unit vectors scattered around a few random centres so that typical eps
// values produce a mix of clusters, borders and noise.
inline std::vector<dedup::Vector> random_points(SplitMix64& rng, std::size_t n, std::size_t dim) {
    auto gaussian = [&] {
        const double u1 = 1.0 - rng.uniform();
        const double u2 = rng.uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    };
    const std::size_t centres = 1 + rng.bounded(8);
    std::vector<dedup::Vector> c(centres, dedup::Vector(dim));
    for (auto& v : c)
        for (auto& x : v) x = gaussian();
    std::vector<dedup::Vector> out;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& base = c[rng.bounded(centres)];
        const double spread = 0.05 + rng.uniform() * 0.6;
        dedup::Vector v(dim);
        for (std::size_t d = 0; d < dim; ++d) v[d] = base[d] + spread * gaussian() * std::sqrt(double(dim)) / 3.0;
        out.push_back(dedup::normalize(v));
    }
    return out;
}

// Textbook DBSCAN from a full distance matrix: cores, core components by
// repeated relaxation, borders attached to the component holding the
// smallest-index core point among their neighbours.
inline std::vector<int> reference_dbscan(const std::vector<dedup::Vector>& pts, double eps, int min_pts) {
    const std::size_t n = pts.size();
    std::vector<std::vector<char>> near(n, std::vector<char>(n, 0));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double dot = 0;
            for (std::size_t d = 0; d < pts[i].size(); ++d) dot += pts[i][d] * pts[j][d];
            near[i][j] = i == j || 1.0 - dot <= eps;
        }
    }
    std::vector<char> core(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        int count = 0;
        for (std::size_t j = 0; j < n; ++j) count += near[i][j];
        core[i] = count >= min_pts;
    }
    // comp[i] = smallest core index connected to core i.
    std::vector<std::size_t> comp(n);
    for (std::size_t i = 0; i < n; ++i) comp[i] = i;
    for (bool changed = true; changed;) {
        changed = false;
        for (std::size_t i = 0; i < n; ++i) {
            if (!core[i]) continue;
            for (std::size_t j = 0; j < n; ++j) {
                if (core[j] && near[i][j] && comp[j] < comp[i]) {
                    comp[i] = comp[j];
                    changed = true;
                }
            }
        }
    }
    std::vector<long> raw(n, -1);
    for (std::size_t i = 0; i < n; ++i) {
        if (core[i]) {
            raw[i] = static_cast<long>(comp[i]);
            continue;
        }
        for (std::size_t j = 0; j < n; ++j) {
            if (core[j] && near[i][j] && (raw[i] < 0 || static_cast<long>(comp[j]) < raw[i])) {
                raw[i] = static_cast<long>(comp[j]);
            }
        }
    }
    std::map<long, int> ids;
    std::vector<int> out(n, dedup::kNoise);
    for (std::size_t i = 0; i < n; ++i) {
        if (raw[i] < 0) continue;
        auto it = ids.find(raw[i]);
        if (it == ids.end()) it = ids.emplace(raw[i], static_cast<int>(ids.size())).first;
        out[i] = it->second;
    }
    return out;
}

// True if both labelings describe the same partition with identical noise.
inline bool same_partition(const std::vector<int>& a, const std::vector<int>& b) {
    if (a.size() != b.size()) return false;
    std::map<int, int> fwd, back;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if ((a[i] == dedup::kNoise) != (b[i] == dedup::kNoise)) return false;
        if (a[i] == dedup::kNoise) continue;
        auto [f, fnew] = fwd.emplace(a[i], b[i]);
        auto [r, rnew] = back.emplace(b[i], a[i]);
        if (f->second != b[i] || r->second != a[i]) return false;
    }
    return true;
}

struct DbscanCase {
    std::vector<dedup::Vector> points;
    double eps = 0;
    int min_pts = 1;
};

inline DbscanCase random_dbscan_case(std::uint64_t seed) {
    SplitMix64 rng(seed);
    DbscanCase c;
    const std::size_t n = 1 + rng.bounded(200);
    const std::size_t dim = 2 + rng.bounded(15);
    c.points = random_points(rng, n, dim);
    c.eps = 0.05 + 0.45 * rng.uniform();
    const int pts[] = {1, 3, 5};
    c.min_pts = pts[rng.bounded(3)];
    return c;
}

// Empty on success.
inline std::string check_dbscan_case(std::uint64_t seed) {
    const auto c = random_dbscan_case(seed);
    dedup::DedupConfig config;
    config.eps = c.eps;
    config.min_pts = c.min_pts;
    const auto got = dedup::dbscan(c.points, config);
    const auto want = reference_dbscan(c.points, c.eps, c.min_pts);
    if (!same_partition(got, want)) return "partition differs from reference";
    if (dedup::count_unique(got) != dedup::count_unique(want)) return "unique count differs";
    return {};
}

// unique_count over 5 increasing eps values must never rise.
inline std::string check_monotone_case(std::uint64_t seed) {
    SplitMix64 rng(seed);
    const auto pts = random_points(rng, 20 + rng.bounded(150), 2 + rng.bounded(10));
    std::vector<double> eps;
    for (int i = 0; i < 5; ++i) eps.push_back(0.02 + 0.9 * rng.uniform());
    std::sort(eps.begin(), eps.end());
    const int choices[] = {1, 3, 5};
    dedup::DedupConfig config;
    config.min_pts = choices[rng.bounded(3)];
    std::size_t last = pts.size() + 1;
    for (double e : eps) {
        config.eps = e;
        const auto u = dedup::count_unique(dedup::dbscan(pts, config));
        if (u > last) return "unique count rose from " + std::to_string(last) + " to " + std::to_string(u);
        last = u;
    }
    return {};
}

}  // namespace recscale::testing
