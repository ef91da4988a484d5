#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <system_error>
#include <variant>
#include <vector>

#include "fmx/error.hpp"

/**
 * @file dataset.hpp
 *
 * @brief Attribute metadata and the in-memory table of objects.
 */

namespace fmx {

enum class AttributeKind { nominal, continuous };

inline std::string_view to_string(AttributeKind kind) {
    return kind == AttributeKind::nominal ? "nominal" : "continuous";
}

inline AttributeKind parse_attribute_kind(std::string_view text) {
    if (text == "nominal") return AttributeKind::nominal;
    if (text == "continuous") return AttributeKind::continuous;
    throw DomainError("unknown attribute type '" + std::string(text) + "'");
}

/**
 * @brief Description of one column.
 *
 * A nominal domain is open when it was not declared (`open_domain`, or an
 * empty list): any token is accepted and the list records the tokens seen
 * so far, in order of first appearance. A declared domain is closed.
 */
struct AttributeMeta {
    std::string name;
    AttributeKind kind = AttributeKind::nominal;
    std::vector<std::string> domain;
    bool skip = false;
    std::string description;
    std::optional<std::string> missing_value;
    bool open_domain = false;

    bool operator==(const AttributeMeta&) const = default;

    bool closed_domain() const noexcept { return !open_domain && !domain.empty(); }

    /// Index of `token` within the domain, if present.
    std::optional<std::size_t> domain_index(std::string_view token) const {
        auto it = std::find(domain.begin(), domain.end(), token);
        if (it == domain.end()) return std::nullopt;
        return static_cast<std::size_t>(it - domain.begin());
    }
};

struct Metadata {
    char separator = ',';
    std::string missing_value = "?";
    std::string description;
    std::optional<std::string> class_attribute;
    std::vector<AttributeMeta> attributes;

    bool operator==(const Metadata&) const = default;

    std::size_t size() const noexcept { return attributes.size(); }

    std::optional<std::size_t> index_of(std::string_view name) const {
        for (std::size_t k = 0; k < attributes.size(); ++k)
            if (attributes[k].name == name) return k;
        return std::nullopt;
    }

    std::size_t require_index(std::string_view name) const {
        if (auto k = index_of(name)) return *k;
        throw DomainError("unknown attribute '" + std::string(name) + "'");
    }

    std::optional<std::size_t> class_index() const {
        if (!class_attribute) return std::nullopt;
        return index_of(*class_attribute);
    }

    /// The token that marks a missing cell in column `k`.
    const std::string& missing_token(std::size_t k) const {
        const auto& override_token = attributes.at(k).missing_value;
        return override_token ? *override_token : missing_value;
    }
};

/// Checks every Metadata invariant; throws DomainError describing the first violation.
inline void validate(const Metadata& m) {
    if (m.separator == '\n' || m.separator == '\r')
        throw DomainError("separator must not be a line break");
    std::set<std::string_view> names;
    for (const auto& a : m.attributes) {
        if (a.name.empty()) throw DomainError("attribute with empty name");
        if (!names.insert(a.name).second)
            throw DomainError("duplicate attribute name '" + a.name + "'");
        if (a.kind == AttributeKind::continuous && !a.domain.empty())
            throw DomainError("attribute '" + a.name + "': domain given for a continuous attribute");
        std::set<std::string_view> tokens;
        for (const auto& t : a.domain) {
            if (!tokens.insert(t).second)
                throw DomainError("attribute '" + a.name + "': duplicate domain token '" + t + "'");
            if (t.find(m.separator) != std::string::npos)
                throw DomainError("attribute '" + a.name + "': domain token '" + t +
                                  "' contains the separator");
        }
    }
    if (m.class_attribute) {
        auto k = m.index_of(*m.class_attribute);
        if (!k) throw DomainError("class attribute '" + *m.class_attribute + "' does not exist");
        const auto& a = m.attributes[*k];
        if (a.kind != AttributeKind::nominal)
            throw DomainError("class attribute '" + a.name + "' must be nominal");
        if (a.skip) throw DomainError("class attribute '" + a.name + "' is skipped");
    }
}

struct Missing {
    bool operator==(const Missing&) const = default;
};

struct Nominal {
    std::string token;
    bool operator==(const Nominal&) const = default;
};

struct Continuous {
    double value = 0.0;
    bool operator==(const Continuous&) const = default;
};

using CellValue = std::variant<Nominal, Continuous, Missing>;

inline bool is_missing(const CellValue& v) { return std::holds_alternative<Missing>(v); }

inline CellValue make_continuous(double v) {
    if (!std::isfinite(v)) throw DomainError("continuous value must be finite");
    return Continuous{v};
}

using RowId = std::int64_t;

/// Shortest decimal text that parses back to exactly `v`.
inline std::string format_number(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc{}) throw DomainError("cannot format number");
    return std::string(buf, end);
}

/// Parses a decimal number with '.' radix; accepts a leading '+'. Rejects non-finite values.
inline std::optional<double> parse_number(std::string_view text) {
    if (!text.empty() && text.front() == '+') text.remove_prefix(1);
    if (text.empty()) return std::nullopt;
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v,
                                     std::chars_format::general);
    if (ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(v))
        return std::nullopt;
    return v;
}

/**
 * @brief An N x p table of cells together with its metadata.
 *
 * Row ids are assigned once when rows are created and are carried through
 * every subset operation unchanged.
 */
struct Dataset {
    Metadata metadata;
    std::vector<std::vector<CellValue>> rows;
    std::vector<RowId> row_ids;

    std::size_t size() const noexcept { return rows.size(); }
    bool empty() const noexcept { return rows.empty(); }

    std::optional<std::size_t> row_index(RowId id) const {
        auto it = std::find(row_ids.begin(), row_ids.end(), id);
        if (it == row_ids.end()) return std::nullopt;
        return static_cast<std::size_t>(it - row_ids.begin());
    }

    RowId next_row_id() const {
        return row_ids.empty() ? 0 : *std::max_element(row_ids.begin(), row_ids.end()) + 1;
    }

    /// Keeps the rows at `indices`, in that order.
    Dataset subset(const std::vector<std::size_t>& indices) const {
        Dataset out;
        out.metadata = metadata;
        out.rows.reserve(indices.size());
        out.row_ids.reserve(indices.size());
        for (auto i : indices) {
            out.rows.push_back(rows.at(i));
            out.row_ids.push_back(row_ids.at(i));
        }
        return out;
    }
};

/// Reason a cell is not acceptable under its attribute, or nullopt when it is.
inline std::optional<std::string> check_cell(const AttributeMeta& a, const CellValue& v) {
    if (is_missing(v)) return std::nullopt;
    if (a.kind == AttributeKind::continuous) {
        const auto* c = std::get_if<Continuous>(&v);
        if (!c) return "attribute '" + a.name + "' expects a number";
        if (!std::isfinite(c->value)) return "attribute '" + a.name + "': non-finite number";
        return std::nullopt;
    }
    const auto* n = std::get_if<Nominal>(&v);
    if (!n) return "attribute '" + a.name + "' expects a nominal token";
    if (a.closed_domain() && !a.domain_index(n->token))
        return "attribute '" + a.name + "': token '" + n->token + "' is outside the domain";
    return std::nullopt;
}

/// Checks the Dataset invariants (arity, domains, unique row ids).
inline void validate(const Dataset& d) {
    validate(d.metadata);
    if (d.rows.size() != d.row_ids.size()) throw DomainError("row id count does not match row count");
    std::set<RowId> ids(d.row_ids.begin(), d.row_ids.end());
    if (ids.size() != d.row_ids.size()) throw DomainError("duplicate row ids");
    const auto p = d.metadata.size();
    for (std::size_t i = 0; i < d.rows.size(); ++i) {
        if (d.rows[i].size() != p)
            throw DomainError("row " + std::to_string(d.row_ids[i]) + " has " +
                              std::to_string(d.rows[i].size()) + " cells, expected " +
                              std::to_string(p));
        for (std::size_t k = 0; k < p; ++k)
            if (auto why = check_cell(d.metadata.attributes[k], d.rows[i][k]))
                throw DomainError("row " + std::to_string(d.row_ids[i]) + ": " + *why);
    }
}

/// Text form of a cell as it would appear in a data file.
inline std::string cell_text(const Metadata& m, std::size_t k, const CellValue& v) {
    if (const auto* n = std::get_if<Nominal>(&v)) return n->token;
    if (const auto* c = std::get_if<Continuous>(&v)) return format_number(c->value);
    return m.missing_token(k);
}

}  // namespace fmx
