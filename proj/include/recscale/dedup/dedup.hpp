#pragma once

#include "recscale/llm/gateway.hpp"
#include "recscale/search/feature.hpp"

#include <nlohmann/json.hpp>

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace recscale::dedup {

using Vector = std::vector<double>;

constexpr int kNoise = -1;

struct DedupConfig {
    double eps = 0.2;   // cosine distance
    int min_pts = 1;    // neighbours within eps, self included
    std::size_t stride = 0;  // growth-curve stride; 0 picks max(1, total / 200)
    std::size_t workers = 4;

    void validate() const;  // 0 < eps < 2, min_pts >= 1
};

class DimensionMismatch : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct EmbeddedFeature {
    search::Feature feature;
    Vector vector;  // unit length
};

// Unit-length copy; throws std::invalid_argument on a zero vector.
Vector normalize(Vector v);

double cosine_distance(const Vector& a, const Vector& b);

// Text that is embedded for a feature.
std::string embedding_text(const search::Feature& f);

// Embeds in order through the gateway, `batch` texts per request.
std::vector<EmbeddedFeature> embed_features(llm::Gateway& gateway, const std::string& model_id,
                                            const std::vector<search::Feature>& features, std::size_t batch = 64);

// For each point, the ascending indices of all points within eps (itself
// included). Rows are computed concurrently.
std::vector<std::vector<std::size_t>> neighbourhoods(const std::vector<Vector>& points, double eps,
                                                     std::size_t workers);

// DBSCAN with inclusive eps. Labels are dense, numbered in order of first
// appearance by point index; noise is kNoise. A border point reachable from
// several clusters joins the one whose lowest-index core point comes first.
std::vector<int> dbscan(const std::vector<Vector>& points, const DedupConfig& config);

// Distinct cluster labels plus one per noise point.
std::size_t count_unique(const std::vector<int>& labels);

struct GrowthPoint {
    std::size_t total = 0;
    std::size_t unique = 0;

    bool operator==(const GrowthPoint&) const = default;
};

// (prefix length, unique count of the prefix) at every stride multiple, plus
// the full set as the last point.
std::vector<GrowthPoint> growth_curve(const std::vector<Vector>& points, const DedupConfig& config);

struct DedupReport {
    std::size_t total_valid = 0;
    std::size_t unique_count = 0;
    std::vector<int> labels;
    std::vector<GrowthPoint> growth;
    double eps = 0;
    int min_pts = 0;
};

DedupReport deduplicate(const std::vector<Vector>& points, const DedupConfig& config);

std::string growth_csv(const std::vector<GrowthPoint>& growth);
nlohmann::json summary_json(const DedupReport& report);

}  // namespace recscale::dedup
