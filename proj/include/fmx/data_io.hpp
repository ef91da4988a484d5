#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "fmx/dataset.hpp"

namespace fmx {

/// A rejected input line.
struct RowError {
    std::size_t line = 0;
    std::string message;
};

struct DataParseResult {
    Dataset dataset;
    std::vector<RowError> errors;

    bool ok() const noexcept { return errors.empty(); }
};

namespace data_detail {

inline std::string_view trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

/// Splits on `sep` without trimming; an empty input yields one empty field.
inline std::vector<std::string_view> split(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        auto pos = line.find(sep, start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

}  // namespace data_detail

/**
 * @brief Reads delimited rows against `m`.
 *
 * Cells are trimmed, compared against the column's missing token, and typed
 * by the attribute kind. Open nominal domains grow in order of first
 * appearance. Rows that fail (arity, bad number, token outside a closed
 * domain) are reported with their 1-based line and left out; loading
 * continues with the next line. Accepted rows get row ids 0, 1, 2, ...
 */
inline DataParseResult parse_data(std::string_view text, const Metadata& m) {
    using namespace data_detail;
    validate(m);
    DataParseResult result;
    auto& d = result.dataset;
    d.metadata = m;
    for (std::size_t k = 0; k < m.size(); ++k)
        if (m.attributes[k].kind == AttributeKind::nominal && !m.attributes[k].closed_domain())
            d.metadata.attributes[k].open_domain = true;
    const std::size_t p = m.size();

    // Only domains that were open on entry may grow.
    std::vector<bool> open(p);
    for (std::size_t k = 0; k < p; ++k)
        open[k] = m.attributes[k].kind == AttributeKind::nominal && !m.attributes[k].closed_domain();

    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto nl = text.find('\n', start);
        auto raw = text.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
        start = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;
        if (!raw.empty() && raw.back() == '\r') raw.remove_suffix(1);
        if (trim(raw).empty()) continue;

        auto fields = split(raw, m.separator);
        if (fields.size() != p) {
            result.errors.push_back({line_no, "cell count mismatch: got " + std::to_string(fields.size()) +
                                                  ", expected " + std::to_string(p)});
            continue;
        }
        std::vector<CellValue> row;
        row.reserve(p);
        std::string problem;
        for (std::size_t k = 0; k < p && problem.empty(); ++k) {
            const auto& a = m.attributes[k];
            auto token = trim(fields[k]);
            if (token == m.missing_token(k)) {
                row.emplace_back(Missing{});
            } else if (a.kind == AttributeKind::continuous) {
                auto v = parse_number(token);
                if (!v) problem = "attribute '" + a.name + "': unparseable number '" + std::string(token) + "'";
                else row.emplace_back(Continuous{*v});
            } else {
                if (token.empty())
                    problem = "attribute '" + a.name + "': empty cell";
                else if (!open[k] && !a.domain_index(token))
                    problem = "attribute '" + a.name + "': token '" + std::string(token) +
                              "' is outside the domain";
                else row.emplace_back(Nominal{std::string(token)});
            }
        }
        if (!problem.empty()) {
            result.errors.push_back({line_no, std::move(problem)});
            continue;
        }
        for (std::size_t k = 0; k < p; ++k) {
            if (!open[k]) continue;
            const auto& token = std::get_if<Nominal>(&row[k]);
            auto& attr = d.metadata.attributes[k];
            if (token && !attr.domain_index(token->token)) attr.domain.push_back(token->token);
        }
        d.row_ids.push_back(static_cast<RowId>(d.rows.size()));
        d.rows.push_back(std::move(row));
    }
    return result;
}

/// Like parse_data but throws ParseError on the first rejected row.
inline Dataset parse_data_strict(std::string_view text, const Metadata& m) {
    auto r = parse_data(text, m);
    if (!r.ok()) throw ParseError(r.errors.front().message, r.errors.front().line);
    return std::move(r.dataset);
}

/**
 * @brief Writes one separator-joined line per row, LF terminated.
 *
 * Throws DomainError for a nominal token that would not read back as the
 * same cell: it contains the separator or a line break, has surrounding
 * whitespace, is empty, or equals the column's missing token.
 */
inline std::string write_data(const Dataset& d) {
    const auto& m = d.metadata;
    std::string out;
    for (std::size_t i = 0; i < d.rows.size(); ++i) {
        const auto& row = d.rows[i];
        if (row.size() != m.size())
            throw DomainError("row " + std::to_string(d.row_ids.at(i)) + " has the wrong cell count");
        for (std::size_t k = 0; k < row.size(); ++k) {
            if (k) out += m.separator;
            if (const auto* n = std::get_if<Nominal>(&row[k])) {
                const auto& t = n->token;
                if (t.find(m.separator) != std::string::npos)
                    throw DomainError("token '" + t + "' contains the separator");
                if (t.find_first_of("\r\n") != std::string::npos)
                    throw DomainError("token contains a line break");
                if (t.empty() || data_detail::trim(t) != t)
                    throw DomainError("token '" + t + "' is empty or has surrounding whitespace");
                if (t == m.missing_token(k))
                    throw DomainError("token '" + t + "' collides with the missing-value marker");
            }
            out += cell_text(m, k, row[k]);
        }
        out += '\n';
    }
    return out;
}

}  // namespace fmx
