#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "fmx/dataset.hpp"
#include "fmx/distance.hpp"
#include "fmx/error.hpp"

/**
 * @file fastmap.hpp
 *
 * @brief FastMap projection of N objects into k dimensions from pairwise distances only.
 *
 * Each axis is anchored on two far-apart pivot objects a and b. An object's
 * coordinate on that axis comes from the cosine law,
 *
 *     x_i = (d(a,i)^2 + d(a,b)^2 - d(b,i)^2) / (2 d(a,b)),
 *
 * and the next axis works with the residual distance in the hyperplane
 * orthogonal to it,
 *
 *     d'(i,j)^2 = max(0, d(i,j)^2 - (x_i - x_j)^2).
 *
 * Residuals are never materialized as a matrix: a distance at level j is
 * recomputed from the base distance and the j coordinate columns already
 * filled. Axes are 0-based here; axis j corresponds to column j of X.
 */

namespace fmx {

struct ProjectionOptions {
    std::size_t k = 2;
    std::size_t pivot_iterations = 5;
    std::uint64_t seed = 0;
    /// Pivot distances at or below this count as zero and stop the recursion.
    double epsilon = 1e-12;

    void validate() const {
        if (k < 1) throw DomainError("target dimension k must be >= 1");
        if (pivot_iterations < 1) throw DomainError("pivot iterations must be >= 1");
        if (!(epsilon >= 0.0)) throw DomainError("epsilon must be non-negative");
    }
};

/**
 * @brief Result of a FastMap run.
 *
 * `coords` is N x k row-major. `pivots[j]` holds the row ids of the two
 * pivots chosen for axis j; axes from `converged_axes` on are all zero and
 * repeat the pivot pair at which the distances vanished.
 */
struct Projection {
    std::vector<RowId> row_ids;
    std::size_t dims = 0;
    std::vector<double> coords;
    std::vector<std::pair<RowId, RowId>> pivots;
    std::vector<double> pivot_distances;
    ProjectionOptions options;
    std::size_t converged_axes = 0;

    std::size_t size() const noexcept { return row_ids.size(); }
    double x(std::size_t i, std::size_t j) const { return coords[i * dims + j]; }
    std::span<const double> point(std::size_t i) const { return {coords.data() + i * dims, dims}; }

    std::optional<std::size_t> index_of(RowId id) const {
        auto it = std::find(row_ids.begin(), row_ids.end(), id);
        if (it == row_ids.end()) return std::nullopt;
        return static_cast<std::size_t>(it - row_ids.begin());
    }
};

namespace fastmap_detail {

template <class Dist>
concept HasSquared = requires(const Dist& d, std::size_t i) {
    { d.squared(i, i) } -> std::convertible_to<double>;
};

template <class Dist>
double base_sq(const Dist& d, std::size_t i, std::size_t j) {
    if constexpr (HasSquared<Dist>) {
        return d.squared(i, j);
    } else {
        const double v = d(i, j);
        return v * v;
    }
}

/// Index of the object farthest from `from` (excluding itself), lowest index on ties.
template <class Dist>
std::size_t farthest(std::size_t n, const Dist& dist, std::size_t from) {
    std::size_t best = from == 0 ? 1 : 0;
    double best_d = dist(from, best);
    for (std::size_t i = best + 1; i < n; ++i) {
        if (i == from) continue;
        const double d = dist(from, i);
        if (d > best_d) {
            best_d = d;
            best = i;
        }
    }
    return best;
}

}  // namespace fastmap_detail

/**
 * @brief Heuristic search for a far-apart pair.
 *
 * Starts from a seeded random object b, then alternates a = farthest(b),
 * b = farthest(a) for `iterations` rounds. `dist` may be any function that
 * orders pairs like the distance (a squared distance works too).
 */
template <class Dist>
std::pair<std::size_t, std::size_t> choose_pivots(std::size_t n, const Dist& dist, std::size_t iterations,
                                                  std::mt19937_64& rng) {
    if (n < 2) throw DomainError("pivot selection needs at least 2 objects");
    if (iterations < 1) throw DomainError("pivot iterations must be >= 1");
    std::size_t b = static_cast<std::size_t>(rng() % n);
    std::size_t a = b;
    for (std::size_t it = 0; it < iterations; ++it) {
        const std::size_t next_a = fastmap_detail::farthest(n, dist, b);
        const std::size_t next_b = fastmap_detail::farthest(n, dist, next_a);
        const bool stable = next_a == a && next_b == b;
        a = next_a;
        b = next_b;
        if (stable) break;
    }
    return {a, b};
}

/// Coordinates of every object on the line through pivots a and b, from squared distances.
template <class DistSq>
std::vector<double> project_axis_sq(std::size_t n, const DistSq& dist_sq, std::size_t a, std::size_t b,
                                    double epsilon = 1e-12) {
    const double dab2 = dist_sq(a, b);
    const double dab = std::sqrt(dab2);
    if (!(dab > epsilon)) throw DomainError("pivot distance is zero; no axis can be defined");
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (i == a) {
            x[i] = 0.0;
            continue;
        }
        x[i] = (dist_sq(a, i) + dab2 - dist_sq(b, i)) / (2.0 * dab);
    }
    return x;
}

/// Coordinates of every object on the line through pivots a and b.
template <class Dist>
std::vector<double> project_axis(std::size_t n, const Dist& dist, std::size_t a, std::size_t b,
                                 double epsilon = 1e-12) {
    return project_axis_sq(
        n, [&](std::size_t i, std::size_t j) { const double d = dist(i, j); return d * d; }, a, b, epsilon);
}

/// Distance in the hyperplane orthogonal to an axis with coordinates `x`, clamped at zero.
template <class Dist>
auto residual_distance(Dist dist, std::vector<double> x) {
    return [dist = std::move(dist), x = std::move(x)](std::size_t i, std::size_t j) {
        const double d = dist(i, j);
        const double dx = x.at(i) - x.at(j);
        return std::sqrt(std::max(0.0, d * d - dx * dx));
    };
}

/**
 * @brief Projects `n` objects with base distance `dist` into `opts.k` dimensions.
 *
 * `ids` labels the objects in the result (defaults to 0..n-1). Identical
 * inputs and seed give bit-identical output.
 */
template <class Dist>
Projection fastmap(std::size_t n, const Dist& dist, const ProjectionOptions& opts, std::span<const RowId> ids = {}) {
    opts.validate();
    if (n < 2) throw DomainError("FastMap needs at least 2 objects");
    if (!ids.empty() && ids.size() != n) throw DomainError("row id count does not match object count");

    Projection out;
    out.options = opts;
    out.dims = opts.k;
    out.coords.assign(n * opts.k, 0.0);
    out.row_ids.resize(n);
    for (std::size_t i = 0; i < n; ++i) out.row_ids[i] = ids.empty() ? static_cast<RowId>(i) : ids[i];

    // Squared distance after removing the first `level` axes.
    std::size_t level = 0;
    auto residual_sq = [&](std::size_t i, std::size_t j) {
        if (i == j) return 0.0;
        double d2 = fastmap_detail::base_sq(dist, i, j);
        for (std::size_t l = 0; l < level; ++l) {
            const double dx = out.coords[i * opts.k + l] - out.coords[j * opts.k + l];
            d2 = std::max(0.0, d2 - dx * dx);
        }
        return d2;
    };

    std::mt19937_64 rng(opts.seed);
    for (level = 0; level < opts.k; ++level) {
        const auto [a, b] = choose_pivots(n, residual_sq, opts.pivot_iterations, rng);
        const double dab2 = residual_sq(a, b);
        const double dab = std::sqrt(dab2);
        out.pivots.emplace_back(out.row_ids[a], out.row_ids[b]);
        out.pivot_distances.push_back(dab);
        if (!(dab > opts.epsilon)) {
            out.pivot_distances.back() = 0.0;
            for (std::size_t rest = level + 1; rest < opts.k; ++rest) {
                out.pivots.emplace_back(out.row_ids[a], out.row_ids[b]);
                out.pivot_distances.push_back(0.0);
            }
            break;
        }
        const auto x = project_axis_sq(n, residual_sq, a, b, opts.epsilon);
        for (std::size_t i = 0; i < n; ++i) out.coords[i * opts.k + level] = x[i];
        out.converged_axes = level + 1;
    }
    return out;
}

/// FastMap over an encoded dataset with the mixed base metric.
inline Projection project(const IndexedDataset& data, const ProjectionOptions& opts) {
    if (data.has_missing())
        throw DomainError("dataset has missing values; impute or drop them before projecting");
    return fastmap(data.size(), MixedMetric(data), opts, data.row_ids);
}

}  // namespace fmx
