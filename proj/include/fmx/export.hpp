#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "fmx/data_io.hpp"
#include "fmx/dataset.hpp"
#include "fmx/names_xml.hpp"

namespace fmx {

enum class ExportFormat { data_names, plain_text, html, delimited };

/// Accepts the CLI spellings: data_names, text (or plain_text), html, delimited.
inline ExportFormat parse_export_format(std::string_view s) {
    if (s == "data_names") return ExportFormat::data_names;
    if (s == "text" || s == "plain_text") return ExportFormat::plain_text;
    if (s == "html") return ExportFormat::html;
    if (s == "delimited") return ExportFormat::delimited;
    throw DomainError("unknown export format '" + std::string(s) + "'");
}

/// Exported documents keyed by file extension (".data", ".names", ".txt", ".html", ".csv").
using ExportFiles = std::map<std::string, std::string>;

namespace export_detail {

inline std::size_t display_width(std::string_view s) {
    // UTF-8 continuation bytes take no column.
    return static_cast<std::size_t>(std::count_if(s.begin(), s.end(), [](char c) {
        return (static_cast<unsigned char>(c) & 0xC0) != 0x80;
    }));
}

inline std::string html_escape(std::string_view s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

inline std::vector<std::vector<std::string>> table(const Dataset& d) {
    std::vector<std::vector<std::string>> out;
    std::vector<std::string> header{"row_id"};
    for (const auto& a : d.metadata.attributes) header.push_back(a.name);
    out.push_back(std::move(header));
    for (std::size_t i = 0; i < d.size(); ++i) {
        std::vector<std::string> row{std::to_string(d.row_ids[i])};
        for (std::size_t k = 0; k < d.metadata.size(); ++k) row.push_back(cell_text(d.metadata, k, d.rows[i][k]));
        out.push_back(std::move(row));
    }
    return out;
}

}  // namespace export_detail

/// Left-aligned columns separated by two spaces; first line is the header.
inline std::string to_plain_text(const Dataset& d) {
    const auto t = export_detail::table(d);
    std::vector<std::size_t> width(t.front().size(), 0);
    for (const auto& row : t)
        for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], export_detail::display_width(row[c]));
    std::string out;
    for (const auto& row : t) {
        std::string line;
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c) line += "  ";
            line += row[c];
            if (c + 1 < row.size()) line.append(width[c] - export_detail::display_width(row[c]), ' ');
        }
        out += line + "\n";
    }
    return out;
}

inline std::string to_html(const Dataset& d) {
    using export_detail::html_escape;
    const auto t = export_detail::table(d);
    std::string out = "<!DOCTYPE html>\n<html>\n<head><meta charset=\"utf-8\"><title>";
    out += html_escape(d.metadata.description.empty() ? "extract" : d.metadata.description);
    out += "</title></head>\n<body>\n<table>\n";
    for (std::size_t r = 0; r < t.size(); ++r) {
        out += "<tr>";
        for (const auto& cell : t[r]) out += (r == 0 ? "<th>" : "<td>") + html_escape(cell) + (r == 0 ? "</th>" : "</td>");
        out += "</tr>\n";
    }
    out += "</table>\n</body>\n</html>\n";
    return out;
}

/// Header row plus data rows, joined with the metadata separator.
inline std::string to_delimited(const Dataset& d) {
    const auto t = export_detail::table(d);
    std::string out;
    for (const auto& row : t) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (row[c].find(d.metadata.separator) != std::string::npos)
                throw DomainError("value '" + row[c] + "' contains the separator");
            if (c) out += d.metadata.separator;
            out += row[c];
        }
        out += '\n';
    }
    return out;
}

inline ExportFiles export_dataset(const Dataset& d, ExportFormat format) {
    switch (format) {
        case ExportFormat::data_names:
            return {{".data", write_data(d)}, {".names", serialize_names(d.metadata)}};
        case ExportFormat::plain_text: return {{".txt", to_plain_text(d)}};
        case ExportFormat::html: return {{".html", to_html(d)}};
        case ExportFormat::delimited: return {{".csv", to_delimited(d)}};
    }
    return {};
}

}  // namespace fmx
