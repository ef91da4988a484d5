#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "fmx/preprocess.hpp"
#include "fmx/rank_scale.hpp"

/**
 * @file distance.hpp
 *
 * @brief Dissimilarity measures between objects.
 *
 * Minkowski distances for continuous vectors, contingency-table measures for
 * binary vectors, simple matching for nominal vectors and the mixed metric
 * used as the FastMap base distance.
 */

namespace fmx {

/// Order and optional per-attribute weights of a Minkowski distance.
struct MetricSpec {
    double order = 2.0;
    std::optional<std::vector<double>> weights;

    /// Copy whose weights are rescaled to sum to 1.
    MetricSpec normalized() const {
        MetricSpec out = *this;
        if (out.weights) {
            double sum = 0.0;
            for (double w : *out.weights) sum += w;
            if (!(sum > 0.0)) throw DomainError("weights sum to zero");
            for (double& w : *out.weights) w /= sum;
        }
        return out;
    }
};

/// (sum_k w_k |x_k - y_k|^L)^(1/L); w_k = 1 when no weights are given.
inline double minkowski(std::span<const double> x, std::span<const double> y, const MetricSpec& spec = {}) {
    if (x.size() != y.size()) throw DomainError("minkowski: vector lengths differ");
    if (!(spec.order >= 1.0)) throw DomainError("minkowski: order must be >= 1");
    if (spec.weights && spec.weights->size() != x.size())
        throw DomainError("minkowski: weight count does not match vector length");
    const double L = spec.order;
    double sum = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double diff = std::abs(x[k] - y[k]);
        double term = L == 1.0 ? diff : L == 2.0 ? diff * diff : std::pow(diff, L);
        if (spec.weights) {
            const double w = (*spec.weights)[k];
            if (!(w >= 0.0)) throw DomainError("minkowski: weights must be non-negative");
            term *= w;
        }
        sum += term;
    }
    if (L == 1.0) return sum;
    if (L == 2.0) return std::sqrt(sum);
    return std::pow(sum, 1.0 / L);
}

/// 2x2 contingency counts of two binary vectors.
struct ContingencyCounts {
    std::size_t q = 0;  ///< both 1
    std::size_t r = 0;  ///< 1 in x, 0 in y
    std::size_t s = 0;  ///< 0 in x, 1 in y
    std::size_t t = 0;  ///< both 0

    std::size_t p() const noexcept { return q + r + s + t; }
    bool operator==(const ContingencyCounts&) const = default;
};

using BitVector = std::vector<std::uint8_t>;

inline ContingencyCounts contingency(std::span<const std::uint8_t> x, std::span<const std::uint8_t> y) {
    if (x.size() != y.size()) throw DomainError("contingency: vector lengths differ");
    ContingencyCounts c;
    for (std::size_t k = 0; k < x.size(); ++k) {
        if (x[k] > 1 || y[k] > 1) throw DomainError("contingency: bit vectors hold only 0 and 1");
        if (x[k] && y[k]) ++c.q;
        else if (x[k]) ++c.r;
        else if (y[k]) ++c.s;
        else ++c.t;
    }
    return c;
}

enum class BinaryMeasure { simple_matching, hamming, jaccard, scalar_product };

/**
 * @brief Binary dissimilarity from contingency counts.
 *
 * - simple_matching: (r + s) / p
 * - hamming: p - q - t
 * - jaccard: (r + s) / (q + r + s), for asymmetric attributes
 * - scalar_product: p - q
 */
inline double binary_distance(const ContingencyCounts& c, BinaryMeasure kind) {
    const auto p = static_cast<double>(c.p());
    switch (kind) {
        case BinaryMeasure::simple_matching:
            if (c.p() == 0) throw DomainError("simple matching over zero attributes");
            return static_cast<double>(c.r + c.s) / p;
        case BinaryMeasure::hamming:
            return p - static_cast<double>(c.q) - static_cast<double>(c.t);
        case BinaryMeasure::jaccard:
            if (c.q + c.r + c.s == 0) throw DomainError("jaccard is undefined when both vectors are all zero");
            return static_cast<double>(c.r + c.s) / static_cast<double>(c.q + c.r + c.s);
        case BinaryMeasure::scalar_product:
            return p - static_cast<double>(c.q);
    }
    return 0.0;
}

inline double binary_distance(std::span<const std::uint8_t> x, std::span<const std::uint8_t> y, BinaryMeasure kind) {
    return binary_distance(contingency(x, y), kind);
}

/// (p - m) / p with m the number of positions holding the same state.
inline double nominal_matching(std::span<const std::size_t> x, std::span<const std::size_t> y) {
    if (x.size() != y.size()) throw DomainError("nominal matching: vector lengths differ");
    if (x.empty()) throw DomainError("nominal matching over zero attributes");
    std::size_t matches = 0;
    for (std::size_t k = 0; k < x.size(); ++k)
        if (x[k] == y[k]) ++matches;
    return static_cast<double>(x.size() - matches) / static_cast<double>(x.size());
}

/// Bit vector of row `i` over two-state nominal columns; domain index 1 is presence.
inline BitVector binary_row(const IndexedDataset& data, std::size_t i, std::span<const std::size_t> columns) {
    BitVector out;
    out.reserve(columns.size());
    for (auto k : columns) {
        if (data.roles.at(k) != ColumnRole::nominal || data.metadata.attributes[k].domain.size() != 2)
            throw DomainError("attribute '" + data.metadata.attributes[k].name + "' is not a two-state nominal");
        if (data.is_missing(i, k)) throw DomainError("missing value in binary attribute");
        out.push_back(data.value(i, k) != 0.0 ? 1 : 0);
    }
    return out;
}

/// Squared mixed distance: squared differences over continuous columns plus one per nominal mismatch.
inline double mixed_distance_sq(const IndexedDataset& data, std::size_t a, std::size_t b) {
    const auto p = data.columns();
    const double* ra = data.values.data() + a * p;
    const double* rb = data.values.data() + b * p;
    const std::uint8_t* ma = data.missing.data() + a * p;
    const std::uint8_t* mb = data.missing.data() + b * p;
    double sum = 0.0;
    for (std::size_t k = 0; k < p; ++k) {
        const auto role = data.roles[k];
        if (role == ColumnRole::null) continue;
        if (ma[k] || mb[k])
            throw DomainError("missing value in attribute '" + data.metadata.attributes[k].name +
                              "'; impute or drop rows before computing distances");
        if (role == ColumnRole::continuous) {
            const double diff = ra[k] - rb[k];
            sum += diff * diff;
        } else if (ra[k] != rb[k]) {
            sum += 1.0;
        }
    }
    return sum;
}

/**
 * Euclidean distance over continuous attributes combined with 0/1 matching
 * over nominal ones: sqrt(sum (a_k - b_k)^2 + sum [a_k != b_k]).
 */
inline double mixed_distance(const IndexedDataset& data, std::size_t a, std::size_t b) {
    return std::sqrt(mixed_distance_sq(data, a, b));
}

/// Callable form of mixed_distance over row indices, for FastMap.
struct MixedMetric {
    const IndexedDataset* data = nullptr;

    explicit MixedMetric(const IndexedDataset& d) : data(&d) {}

    std::size_t size() const { return data->size(); }
    double operator()(std::size_t a, std::size_t b) const { return mixed_distance(*data, a, b); }
    double squared(std::size_t a, std::size_t b) const { return mixed_distance_sq(*data, a, b); }
};

}  // namespace fmx
