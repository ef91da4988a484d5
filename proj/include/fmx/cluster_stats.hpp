#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fmx/dataset.hpp"
#include "fmx/distance.hpp"
#include "fmx/fastmap.hpp"

/**
 * @file cluster_stats.hpp
 *
 * @brief Cluster radius and diameter, their size-weighted aggregates, and
 * per-attribute summaries.
 */

namespace fmx {

/**
 * RMS distance over all ordered pairs of distinct members:
 * sqrt(sum_k sum_j d^2(x_k, x_j) / (n (n - 1))). A singleton has diameter 0.
 */
template <class Dist>
double cluster_diameter(std::span<const std::size_t> members, const Dist& dist) {
    const auto n = members.size();
    if (n == 0) throw DomainError("diameter of an empty cluster");
    if (n == 1) return 0.0;
    double sum = 0.0;
    for (std::size_t u = 0; u < n; ++u)
        for (std::size_t v = u + 1; v < n; ++v) {
            const double d = dist(members[u], members[v]);
            sum += d * d;
        }
    return std::sqrt(2.0 * sum / (static_cast<double>(n) * static_cast<double>(n - 1)));
}

struct RadiusResult {
    std::vector<double> centroid;
    double radius = 0.0;
};

/// Centroid (arithmetic mean) and RMS Euclidean distance to it.
inline RadiusResult cluster_radius(std::span<const std::vector<double>> points) {
    if (points.empty()) throw DomainError("radius of an empty cluster");
    const auto dim = points.front().size();
    RadiusResult r;
    r.centroid.assign(dim, 0.0);
    for (const auto& p : points) {
        if (p.size() != dim) throw DomainError("points of differing dimension");
        for (std::size_t c = 0; c < dim; ++c) r.centroid[c] += p[c];
    }
    for (auto& c : r.centroid) c /= static_cast<double>(points.size());
    double sum = 0.0;
    for (const auto& p : points)
        for (std::size_t c = 0; c < dim; ++c) {
            const double d = p[c] - r.centroid[c];
            sum += d * d;
        }
    r.radius = std::sqrt(sum / static_cast<double>(points.size()));
    return r;
}

/// Per-cluster inputs to the weighted aggregates.
struct ClusterMeasure {
    std::size_t n = 0;
    std::optional<double> radius;
    double diameter = 0.0;
};

/**
 * Weighted aggregates: R^2 = sum n_i R_i^2 / sum n_i and
 * D^2 = sum n_i (n_i - 1) D_i^2 / sum n_i (n_i - 1). Both the squared values
 * and their square roots are kept.
 */
struct Aggregates {
    std::optional<double> radius_sq;
    std::optional<double> radius;
    std::optional<double> diameter_sq;
    std::optional<double> diameter;
};

inline Aggregates weighted_aggregates(std::span<const ClusterMeasure> clusters) {
    if (clusters.empty()) throw DomainError("aggregates need at least one cluster");
    Aggregates out;
    double r_num = 0.0, r_den = 0.0, d_num = 0.0, d_den = 0.0;
    bool all_radii = true;
    for (const auto& c : clusters) {
        if (c.n == 0) throw DomainError("empty cluster");
        const auto n = static_cast<double>(c.n);
        if (c.radius) {
            r_num += n * *c.radius * *c.radius;
            r_den += n;
        } else {
            all_radii = false;
        }
        if (c.n >= 2) {
            d_num += n * (n - 1.0) * c.diameter * c.diameter;
            d_den += n * (n - 1.0);
        }
    }
    if (all_radii) {
        out.radius_sq = r_num / r_den;
        out.radius = std::sqrt(*out.radius_sq);
    }
    if (d_den > 0.0) {
        out.diameter_sq = d_num / d_den;
        out.diameter = std::sqrt(*out.diameter_sq);
    }
    return out;
}

/// One class as seen in the base metric and in the projection.
struct ClusterRow {
    std::string label;
    std::size_t n = 0;
    bool singleton = false;
    double diameter_base = 0.0;
    std::optional<double> diameter_projected;
    std::optional<double> radius_base;
    std::optional<double> radius_projected;
};

struct ClusterReport {
    std::string class_attribute;
    std::vector<ClusterRow> clusters;
    Aggregates base;
    std::optional<Aggregates> projected;
    std::size_t unlabeled = 0;
};

namespace cluster_detail {

inline std::vector<double> active_continuous_point(const IndexedDataset& data, std::size_t i) {
    std::vector<double> p;
    for (std::size_t k = 0; k < data.columns(); ++k)
        if (data.roles[k] == ColumnRole::continuous) p.push_back(data.value(i, k));
    return p;
}

}  // namespace cluster_detail

/**
 * @brief Per-class diameters before and after projection.
 *
 * Rows are grouped by `dataset`'s class attribute; `data` must encode the
 * same rows in the same order. With a projection, diameters and radii are
 * also measured on its Euclidean coordinates. A base-space radius is
 * reported only when every active attribute is continuous, since the mixed
 * metric has no centroid. Rows with a missing class are counted as unlabeled.
 */
inline ClusterReport before_after_report(const Dataset& dataset, const IndexedDataset& data,
                                         const Projection* projection = nullptr) {
    const auto cls = dataset.metadata.class_index();
    if (!cls) throw DomainError("cluster report needs a class attribute");
    if (data.row_ids != dataset.row_ids) throw DomainError("encoded rows do not match the dataset");
    std::vector<std::size_t> proj_index;
    if (projection) {
        proj_index.resize(dataset.size());
        for (std::size_t i = 0; i < dataset.size(); ++i) {
            auto idx = projection->index_of(dataset.row_ids[i]);
            if (!idx) throw StateError("projection does not cover row " + std::to_string(dataset.row_ids[i]));
            proj_index[i] = *idx;
        }
    }

    const auto& cattr = dataset.metadata.attributes[*cls];
    std::map<std::string, std::vector<std::size_t>> groups;
    ClusterReport report;
    report.class_attribute = cattr.name;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        if (const auto* t = std::get_if<Nominal>(&dataset.rows[i][*cls])) groups[t->token].push_back(i);
        else ++report.unlabeled;
    }

    bool base_centroid = true;
    for (std::size_t k = 0; k < data.columns(); ++k)
        if (data.roles[k] == ColumnRole::nominal) base_centroid = false;

    const MixedMetric base(data);
    auto projected_dist = [&](std::size_t i, std::size_t j) {
        return minkowski(projection->point(proj_index[i]), projection->point(proj_index[j]));
    };

    std::vector<std::string> order = cattr.domain;
    for (const auto& [label, _] : groups)
        if (std::find(order.begin(), order.end(), label) == order.end()) order.push_back(label);

    std::vector<ClusterMeasure> base_measures, proj_measures;
    for (const auto& label : order) {
        auto it = groups.find(label);
        if (it == groups.end()) continue;
        const auto& members = it->second;
        ClusterRow row;
        row.label = label;
        row.n = members.size();
        row.singleton = members.size() == 1;
        row.diameter_base = cluster_diameter(std::span<const std::size_t>(members), base);
        if (base_centroid) {
            std::vector<std::vector<double>> pts;
            for (auto i : members) pts.push_back(cluster_detail::active_continuous_point(data, i));
            row.radius_base = cluster_radius(pts).radius;
        }
        if (projection) {
            row.diameter_projected = cluster_diameter(std::span<const std::size_t>(members), projected_dist);
            std::vector<std::vector<double>> pts;
            for (auto i : members) {
                auto p = projection->point(proj_index[i]);
                pts.emplace_back(p.begin(), p.end());
            }
            row.radius_projected = cluster_radius(pts).radius;
            proj_measures.push_back({row.n, row.radius_projected, *row.diameter_projected});
        }
        base_measures.push_back({row.n, row.radius_base, row.diameter_base});
        report.clusters.push_back(std::move(row));
    }
    if (!base_measures.empty()) report.base = weighted_aggregates(base_measures);
    if (projection && !proj_measures.empty()) report.projected = weighted_aggregates(proj_measures);
    return report;
}

/// Histogram for nominal attributes, mean and population deviation for continuous ones.
struct AttributeSummary {
    std::string attribute;
    AttributeKind kind = AttributeKind::nominal;
    std::vector<std::pair<std::string, std::size_t>> histogram;
    std::size_t count = 0;
    double mean = 0.0;
    double std_population = 0.0;
};

inline AttributeSummary attribute_summary(const Dataset& d, std::string_view attr) {
    const auto k = d.metadata.require_index(attr);
    const auto& a = d.metadata.attributes[k];
    AttributeSummary s;
    s.attribute = a.name;
    s.kind = a.kind;
    if (a.kind == AttributeKind::nominal) {
        std::map<std::string, std::size_t> counts;
        for (const auto& row : d.rows)
            if (const auto* t = std::get_if<Nominal>(&row[k])) {
                ++counts[t->token];
                ++s.count;
            }
        for (const auto& token : a.domain) {
            auto it = counts.find(token);
            s.histogram.emplace_back(token, it == counts.end() ? 0 : it->second);
            if (it != counts.end()) counts.erase(it);
        }
        for (const auto& [token, c] : counts) s.histogram.emplace_back(token, c);
        return s;
    }
    auto col = continuous_column(d, attr);
    for (const auto& v : col)
        if (v) ++s.count;
    if (s.count > 0) {
        const auto stats = compute_column_stats(col);
        s.mean = stats.mean;
        s.std_population = stats.std_population;
    }
    return s;
}

}  // namespace fmx
