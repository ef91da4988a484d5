#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "fmx/dataset.hpp"
#include "fmx/rank_scale.hpp"

/**
 * @file preprocess.hpp
 *
 * @brief Column statistics, normalization, missing-value imputation and the
 * numeric encoding consumed by the distance functions.
 */

namespace fmx {

/// One continuous column; nullopt marks a missing cell.
using Column = std::vector<std::optional<double>>;

/// Population statistics over the non-missing cells of a column.
struct ColumnStats {
    double mean = 0.0;
    double std_population = 0.0;
    double mean_abs_dev = 0.0;
    double min = 0.0;
    double max = 0.0;
    std::size_t count_non_missing = 0;

    bool operator==(const ColumnStats&) const = default;
};

inline ColumnStats compute_column_stats(std::span<const std::optional<double>> col) {
    ColumnStats s;
    double sum = 0.0;
    for (const auto& v : col) {
        if (!v) continue;
        if (s.count_non_missing == 0) s.min = s.max = *v;
        s.min = std::min(s.min, *v);
        s.max = std::max(s.max, *v);
        sum += *v;
        ++s.count_non_missing;
    }
    if (s.count_non_missing == 0) throw DomainError("column has no non-missing values");
    const auto n = static_cast<double>(s.count_non_missing);
    s.mean = sum / n;
    double sq = 0.0, abs_dev = 0.0;
    for (const auto& v : col) {
        if (!v) continue;
        const double d = *v - s.mean;
        sq += d * d;
        abs_dev += std::abs(d);
    }
    s.std_population = std::sqrt(sq / n);
    s.mean_abs_dev = abs_dev / n;
    return s;
}

/// Extracts a continuous attribute as a Column.
inline Column continuous_column(const Dataset& d, std::string_view attr) {
    const auto k = d.metadata.require_index(attr);
    if (d.metadata.attributes[k].kind != AttributeKind::continuous)
        throw DomainError("attribute '" + std::string(attr) + "' is not continuous");
    Column col;
    col.reserve(d.size());
    for (const auto& row : d.rows) {
        if (const auto* c = std::get_if<Continuous>(&row[k])) col.emplace_back(c->value);
        else col.emplace_back(std::nullopt);
    }
    return col;
}

inline ColumnStats compute_column_stats(const Dataset& d, std::string_view attr) {
    return compute_column_stats(continuous_column(d, attr));
}

enum class ZVariant { sigma, mad };
enum class NormalizationKind { min_max, z_score, decimal };

/// Everything needed to reapply or undo a normalization.
struct NormalizationParams {
    NormalizationKind kind = NormalizationKind::z_score;
    double new_min = 0.0;
    double new_max = 1.0;
    ZVariant variant = ZVariant::sigma;
    int decimal_exponent = 0;
    ColumnStats stats;

    double apply(double v) const {
        switch (kind) {
            case NormalizationKind::min_max:
                return (v - stats.min) / (stats.max - stats.min) * (new_max - new_min) + new_min;
            case NormalizationKind::z_score:
                return (v - stats.mean) / denominator();
            case NormalizationKind::decimal:
                return v / std::pow(10.0, decimal_exponent);
        }
        return v;
    }

    double invert(double v) const {
        switch (kind) {
            case NormalizationKind::min_max:
                return (v - new_min) / (new_max - new_min) * (stats.max - stats.min) + stats.min;
            case NormalizationKind::z_score:
                return v * denominator() + stats.mean;
            case NormalizationKind::decimal:
                return v * std::pow(10.0, decimal_exponent);
        }
        return v;
    }

    double denominator() const {
        return variant == ZVariant::sigma ? stats.std_population : stats.mean_abs_dev;
    }
};

struct NormalizedColumn {
    Column values;
    NormalizationParams params;
};

namespace preprocess_detail {

inline Column map_column(std::span<const std::optional<double>> col, const NormalizationParams& p) {
    Column out;
    out.reserve(col.size());
    for (const auto& v : col) out.push_back(v ? std::optional<double>(p.apply(*v)) : std::nullopt);
    return out;
}

}  // namespace preprocess_detail

/// Linear map of [stats.min, stats.max] onto [new_min, new_max]; endpoints are exact.
inline NormalizedColumn min_max_normalize(std::span<const std::optional<double>> col, const ColumnStats& stats,
                                          double new_min, double new_max) {
    if (!(stats.max > stats.min)) throw DomainError("min-max normalization of a constant column");
    if (!(new_max > new_min)) throw DomainError("min-max target range is empty");
    NormalizationParams p;
    p.kind = NormalizationKind::min_max;
    p.new_min = new_min;
    p.new_max = new_max;
    p.stats = stats;
    NormalizedColumn out{{}, p};
    out.values.reserve(col.size());
    for (const auto& v : col) {
        if (!v) out.values.emplace_back(std::nullopt);
        else if (*v == stats.min) out.values.emplace_back(new_min);
        else if (*v == stats.max) out.values.emplace_back(new_max);
        else out.values.emplace_back(p.apply(*v));
    }
    return out;
}

inline NormalizedColumn z_normalize(std::span<const std::optional<double>> col, const ColumnStats& stats,
                                    ZVariant variant) {
    NormalizationParams p;
    p.kind = NormalizationKind::z_score;
    p.variant = variant;
    p.stats = stats;
    if (!(p.denominator() > 0.0))
        throw DomainError(variant == ZVariant::sigma ? "z-normalization with zero standard deviation"
                                                     : "z-normalization with zero mean absolute deviation");
    return {preprocess_detail::map_column(col, p), p};
}

/// Divides by the least power of ten 10^j (j >= 0) that brings every |v| below 1.
inline NormalizedColumn decimal_scale(std::span<const std::optional<double>> col) {
    double max_abs = -1.0;
    for (const auto& v : col)
        if (v) max_abs = std::max(max_abs, std::abs(*v));
    if (max_abs < 0.0) throw DomainError("decimal scaling of an all-missing column");
    NormalizationParams p;
    p.kind = NormalizationKind::decimal;
    while (max_abs / std::pow(10.0, p.decimal_exponent) >= 1.0) ++p.decimal_exponent;
    p.stats = compute_column_stats(col);
    return {preprocess_detail::map_column(col, p), p};
}

/// V% = sigma / mean * 100.
inline double coefficient_of_variation(const ColumnStats& stats) {
    if (stats.mean == 0.0) throw DomainError("coefficient of variation is undefined for zero mean");
    return stats.std_population / stats.mean * 100.0;
}

/// Lower and upper quartile by Tukey's median-of-halves; for odd n the median is left out of both halves.
struct Quartiles {
    double q1 = 0.0;
    double q3 = 0.0;
};

inline Quartiles median_of_halves(std::vector<double> values) {
    if (values.size() < 4) throw DomainError("quartiles need at least 4 values");
    std::sort(values.begin(), values.end());
    const auto half = values.size() / 2;
    auto median = [](auto first, std::size_t n) {
        return n % 2 ? first[n / 2] : (first[n / 2 - 1] + first[n / 2]) / 2.0;
    };
    return {median(values.begin(), half), median(values.end() - static_cast<std::ptrdiff_t>(half), half)};
}

/// Row ids whose value falls outside [Q1 - factor * IQR, Q3 + factor * IQR].
inline std::vector<RowId> iqr_outliers(std::span<const std::optional<double>> col, std::span<const RowId> ids,
                                       double factor = 1.5) {
    if (col.size() != ids.size()) throw DomainError("column and row id lengths differ");
    std::vector<double> present;
    for (const auto& v : col)
        if (v) present.push_back(*v);
    const auto q = median_of_halves(std::move(present));
    const double iqr = q.q3 - q.q1;
    const double lo = q.q1 - factor * iqr, hi = q.q3 + factor * iqr;
    std::vector<RowId> out;
    for (std::size_t i = 0; i < col.size(); ++i)
        if (col[i] && (*col[i] < lo || *col[i] > hi)) out.push_back(ids[i]);
    return out;
}

inline std::vector<RowId> iqr_outliers(const Dataset& d, std::string_view attr, double factor = 1.5) {
    return iqr_outliers(continuous_column(d, attr), d.row_ids, factor);
}

// ---------------------------------------------------------------------------
// Missing values

struct DropRows {};
/// Fill with a fixed token (nominal) or its numeric reading (continuous).
struct GlobalConstant {
    std::string token;
};
struct MeanOrMode {};
struct ClassConditional {};

using ImputeStrategy = std::variant<DropRows, GlobalConstant, MeanOrMode, ClassConditional>;

struct ImputedCell {
    RowId row_id = 0;
    std::string attribute;
    CellValue value;
};

struct ImputeReport {
    std::vector<ImputedCell> filled;
    std::vector<RowId> dropped;
};

struct ImputeResult {
    Dataset dataset;
    ImputeReport report;
};

namespace preprocess_detail {

/// Mean (continuous) or most frequent token, ties to domain order (nominal), over `rows`.
inline std::optional<CellValue> central_value(const Dataset& d, std::size_t k, const std::vector<std::size_t>& rows) {
    const auto& a = d.metadata.attributes[k];
    if (a.kind == AttributeKind::continuous) {
        double sum = 0.0;
        std::size_t n = 0;
        for (auto i : rows)
            if (const auto* c = std::get_if<Continuous>(&d.rows[i][k])) {
                sum += c->value;
                ++n;
            }
        if (n == 0) return std::nullopt;
        return Continuous{sum / static_cast<double>(n)};
    }
    std::map<std::string, std::size_t> counts;
    for (auto i : rows)
        if (const auto* t = std::get_if<Nominal>(&d.rows[i][k])) ++counts[t->token];
    if (counts.empty()) return std::nullopt;
    const std::string* best = nullptr;
    std::size_t best_count = 0;
    for (const auto& token : a.domain) {
        auto it = counts.find(token);
        if (it != counts.end() && it->second > best_count) {
            best = &it->first;
            best_count = it->second;
        }
    }
    // Tokens outside the declared domain, in lexical order.
    for (const auto& [token, c] : counts)
        if (c > best_count && !a.domain_index(token)) {
            best = &token;
            best_count = c;
        }
    return Nominal{*best};
}

}  // namespace preprocess_detail

/**
 * @brief Removes or fills missing cells in the targeted columns.
 *
 * `columns` defaults to every non-skipped attribute.
 */
inline ImputeResult impute_missing(const Dataset& d, const ImputeStrategy& strategy,
                                   std::optional<std::vector<std::string>> columns = std::nullopt) {
    const auto& m = d.metadata;
    std::vector<std::size_t> targets;
    if (columns) {
        for (const auto& name : *columns) targets.push_back(m.require_index(name));
    } else {
        for (std::size_t k = 0; k < m.size(); ++k)
            if (!m.attributes[k].skip) targets.push_back(k);
    }

    ImputeResult result;
    if (std::holds_alternative<DropRows>(strategy)) {
        std::vector<std::size_t> keep;
        for (std::size_t i = 0; i < d.size(); ++i) {
            bool any = std::any_of(targets.begin(), targets.end(),
                                   [&](std::size_t k) { return is_missing(d.rows[i][k]); });
            if (any) result.report.dropped.push_back(d.row_ids[i]);
            else keep.push_back(i);
        }
        result.dataset = d.subset(keep);
        return result;
    }

    result.dataset = d;
    auto& out = result.dataset;
    std::vector<std::size_t> all(d.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;

    auto fill = [&](std::size_t i, std::size_t k, const CellValue& v) {
        out.rows[i][k] = v;
        result.report.filled.push_back({d.row_ids[i], m.attributes[k].name, v});
    };

    if (const auto* c = std::get_if<GlobalConstant>(&strategy)) {
        const auto number = parse_number(c->token);
        for (auto k : targets) {
            auto& attr = out.metadata.attributes[k];
            std::optional<CellValue> v;
            if (attr.kind == AttributeKind::continuous) {
                if (!number) throw DomainError("constant '" + c->token + "' is not a number for '" + attr.name + "'");
                v = Continuous{*number};
            } else {
                v = Nominal{c->token};
            }
            bool used = false;
            for (std::size_t i = 0; i < d.size(); ++i)
                if (is_missing(d.rows[i][k])) {
                    fill(i, k, *v);
                    used = true;
                }
            if (used && attr.kind == AttributeKind::nominal && !attr.domain_index(c->token))
                attr.domain.push_back(c->token);
        }
        return result;
    }

    if (std::holds_alternative<MeanOrMode>(strategy)) {
        for (auto k : targets) {
            bool has_gap = std::any_of(d.rows.begin(), d.rows.end(), [&](const auto& r) { return is_missing(r[k]); });
            if (!has_gap) continue;
            auto v = preprocess_detail::central_value(d, k, all);
            if (!v) throw DomainError("attribute '" + m.attributes[k].name + "' has no known values to average");
            for (std::size_t i = 0; i < d.size(); ++i)
                if (is_missing(d.rows[i][k])) fill(i, k, *v);
        }
        return result;
    }

    // Class-conditional
    const auto cls = m.class_index();
    if (!cls) throw DomainError("class-conditional imputation needs a class attribute");
    std::map<std::string, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < d.size(); ++i) {
        if (const auto* t = std::get_if<Nominal>(&d.rows[i][*cls])) by_class[t->token].push_back(i);
    }
    for (auto k : targets) {
        if (k == *cls) continue;
        std::map<std::string, std::optional<CellValue>> cache;
        for (std::size_t i = 0; i < d.size(); ++i) {
            if (!is_missing(d.rows[i][k])) continue;
            const auto* t = std::get_if<Nominal>(&d.rows[i][*cls]);
            if (!t)
                throw DomainError("row " + std::to_string(d.row_ids[i]) +
                                  " has no class value for class-conditional imputation");
            auto it = cache.find(t->token);
            if (it == cache.end())
                it = cache.emplace(t->token, preprocess_detail::central_value(d, k, by_class[t->token])).first;
            if (!it->second)
                throw DomainError("attribute '" + m.attributes[k].name + "' has no known values in class '" +
                                  t->token + "'");
            fill(i, k, *it->second);
        }
    }
    return result;
}

// ---------------------------------------------------------------------------
// Numeric encoding

enum class ZNorm { none, sigma, mad };

/// How a column takes part in distance computations.
enum class ColumnRole { nominal, continuous, null };

struct IndexOptions {
    ZNorm znorm = ZNorm::none;
    /// Nominal attributes whose domain order is a rank order; encoded on [0, 1] and treated as continuous.
    std::vector<std::string> ordinal;
    /// Leave the class attribute out of the encoding so it does not drive the distances.
    bool exclude_class = true;
};

/**
 * @brief Numeric view of a Dataset.
 *
 * Nominal cells hold their 0-based domain index, continuous cells their
 * (optionally z-normalized) value. Null columns (skipped attributes, and the
 * class attribute when excluded) hold NaN in every row. Missing cells are
 * flagged in `missing`.
 */
struct IndexedDataset {
    Metadata metadata;
    std::vector<RowId> row_ids;
    std::vector<ColumnRole> roles;
    std::vector<double> values;
    std::vector<std::uint8_t> missing;
    std::vector<std::optional<NormalizationParams>> params;
    std::vector<std::string> warnings;

    std::size_t size() const noexcept { return row_ids.size(); }
    std::size_t columns() const noexcept { return roles.size(); }

    double value(std::size_t i, std::size_t k) const { return values[i * columns() + k]; }
    bool is_missing(std::size_t i, std::size_t k) const { return missing[i * columns() + k] != 0; }
    bool is_null(std::size_t k) const { return roles[k] == ColumnRole::null; }

    std::span<const double> row(std::size_t i) const {
        return {values.data() + i * columns(), columns()};
    }

    /// True if some non-null column has a missing cell.
    bool has_missing() const {
        for (std::size_t i = 0; i < size(); ++i)
            for (std::size_t k = 0; k < columns(); ++k)
                if (!is_null(k) && is_missing(i, k)) return true;
        return false;
    }
};

inline IndexedDataset index_dataset(const Dataset& d, const IndexOptions& opts = {}) {
    const auto& m = d.metadata;
    const auto p = m.size();
    const auto n = d.size();
    IndexedDataset out;
    out.metadata = m;
    out.row_ids = d.row_ids;
    out.roles.resize(p);
    out.params.resize(p);
    out.values.assign(n * p, 0.0);
    out.missing.assign(n * p, 0);

    const auto cls = m.class_index();
    for (const auto& name : opts.ordinal) m.require_index(name);

    for (std::size_t k = 0; k < p; ++k) {
        const auto& a = m.attributes[k];
        const bool is_ordinal = std::find(opts.ordinal.begin(), opts.ordinal.end(), a.name) != opts.ordinal.end();
        if (a.skip || (opts.exclude_class && cls && *cls == k)) {
            out.roles[k] = ColumnRole::null;
            for (std::size_t i = 0; i < n; ++i) out.values[i * p + k] = std::nan("");
            continue;
        }
        if (a.kind == AttributeKind::nominal) {
            std::optional<std::unordered_map<std::string, double>> ranks;
            if (is_ordinal) ranks = ordinal_to_rank_scale(a);
            out.roles[k] = is_ordinal ? ColumnRole::continuous : ColumnRole::nominal;
            for (std::size_t i = 0; i < n; ++i) {
                const auto* t = std::get_if<Nominal>(&d.rows[i][k]);
                if (!t) {
                    out.missing[i * p + k] = 1;
                    out.values[i * p + k] = std::nan("");
                    continue;
                }
                if (ranks) {
                    auto it = ranks->find(t->token);
                    if (it == ranks->end()) throw DomainError("token '" + t->token + "' outside domain of '" + a.name + "'");
                    out.values[i * p + k] = it->second;
                } else {
                    auto idx = a.domain_index(t->token);
                    if (!idx) throw DomainError("token '" + t->token + "' outside domain of '" + a.name + "'");
                    out.values[i * p + k] = static_cast<double>(*idx);
                }
            }
            continue;
        }
        out.roles[k] = ColumnRole::continuous;
        Column col;
        col.reserve(n);
        for (std::size_t i = 0; i < n; ++i) {
            if (const auto* c = std::get_if<Continuous>(&d.rows[i][k])) col.emplace_back(c->value);
            else col.emplace_back(std::nullopt);
        }
        if (opts.znorm != ZNorm::none) {
            const auto variant = opts.znorm == ZNorm::sigma ? ZVariant::sigma : ZVariant::mad;
            bool scaled = false;
            if (std::any_of(col.begin(), col.end(), [](const auto& v) { return v.has_value(); })) {
                const auto stats = compute_column_stats(col);
                NormalizationParams probe;
                probe.variant = variant;
                probe.stats = stats;
                if (probe.denominator() > 0.0) {
                    auto z = z_normalize(col, stats, variant);
                    col = std::move(z.values);
                    out.params[k] = z.params;
                    scaled = true;
                }
            }
            if (!scaled)
                out.warnings.push_back("attribute '" + a.name + "' has zero spread; left unscaled");
        }
        for (std::size_t i = 0; i < n; ++i) {
            if (col[i]) {
                out.values[i * p + k] = *col[i];
            } else {
                out.missing[i * p + k] = 1;
                out.values[i * p + k] = std::nan("");
            }
        }
    }
    return out;
}

}  // namespace fmx
