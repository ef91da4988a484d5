#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "fmx/cluster_stats.hpp"
#include "fmx/data_io.hpp"
#include "fmx/export.hpp"
#include "fmx/extract.hpp"
#include "fmx/fastmap.hpp"
#include "fmx/json_io.hpp"
#include "fmx/names_xml.hpp"
#include "fmx/preprocess.hpp"

/**
 * @file commands.hpp
 *
 * @brief The batch pipeline behind the `explorer` subcommands, as plain
 * functions over strings so it can be tested without touching the disk.
 */

namespace fmx {

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::filesystem::path& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error("write to '" + path.string() + "' failed");
}

/// Parses both documents; every rejected row is reported, not just the first.
inline Dataset load_dataset(const std::string& data_text, const std::string& names_text) {
    auto m = parse_names(names_text);
    auto r = parse_data(data_text, m);
    if (!r.ok()) {
        std::string msg = std::to_string(r.errors.size()) + " row(s) rejected:";
        for (const auto& e : r.errors) msg += "\n  line " + std::to_string(e.line) + ": " + e.message;
        throw ParseError(msg);
    }
    return std::move(r.dataset);
}

inline Dataset load_dataset_files(const std::filesystem::path& data, const std::filesystem::path& names) {
    return load_dataset(read_file(data), read_file(names));
}

/// `drop`, `mean`, `class-mean` or `const:V`.
inline ImputeStrategy parse_impute(std::string_view s) {
    if (s == "drop") return DropRows{};
    if (s == "mean") return MeanOrMode{};
    if (s == "class-mean") return ClassConditional{};
    if (s.starts_with("const:")) return GlobalConstant{std::string(s.substr(6))};
    throw DomainError("unknown imputation '" + std::string(s) + "'");
}

inline ZNorm parse_znorm(std::string_view s) {
    if (s == "none") return ZNorm::none;
    if (s == "sigma") return ZNorm::sigma;
    if (s == "mad") return ZNorm::mad;
    throw DomainError("unknown z-normalization '" + std::string(s) + "'");
}

/// Applies the imputation strategy to every non-skipped column.
inline Dataset prepare(const Dataset& d, const ImputeStrategy& impute) {
    return impute_missing(d, impute).dataset;
}

struct ProjectCommand {
    ProjectionOptions projection;
    ZNorm znorm = ZNorm::none;
    ImputeStrategy impute = DropRows{};
};

struct ProjectOutput {
    Dataset dataset;
    IndexedDataset indexed;
    Projection projection;
};

inline ProjectOutput run_project(const Dataset& d, const ProjectCommand& cmd) {
    auto ready = prepare(d, cmd.impute);
    IndexOptions io;
    io.znorm = cmd.znorm;
    auto indexed = index_dataset(ready, io);
    auto proj = project(indexed, cmd.projection);
    return {std::move(ready), std::move(indexed), std::move(proj)};
}

/// `row_id<TAB>x1..xk<TAB>class`; the class column is empty when absent or missing.
inline std::string coords_tsv(const Dataset& d, const Projection& p) {
    std::string out = "row_id";
    for (std::size_t j = 0; j < p.dims; ++j) out += "\tx" + std::to_string(j + 1);
    out += "\tclass\n";
    const auto cls = d.metadata.class_index();
    for (std::size_t i = 0; i < p.size(); ++i) {
        out += std::to_string(p.row_ids[i]);
        for (std::size_t j = 0; j < p.dims; ++j) out += "\t" + format_number(p.x(i, j));
        out += "\t";
        if (cls) {
            auto idx = d.row_index(p.row_ids[i]);
            if (idx) out += cell_text(d.metadata, *cls, d.rows[*idx][*cls]);
        }
        out += "\n";
    }
    return out;
}

/// Reads a coords.tsv back; the class column is ignored.
inline Projection parse_coords_tsv(std::string_view text) {
    Projection p;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start < text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        auto line = text.substr(start, end - start);
        start = end + 1;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        ++line_no;
        if (line.empty()) continue;
        auto cells = data_detail::split(line, '\t');
        if (line_no == 1) {
            if (cells.size() < 3 || cells.front() != "row_id" || cells.back() != "class")
                throw ParseError("coords header must be row_id, x1..xk, class", 1);
            p.dims = cells.size() - 2;
            continue;
        }
        if (cells.size() != p.dims + 2) throw ParseError("wrong number of columns", line_no);
        RowId id = 0;
        auto [ptr, ec] = std::from_chars(cells[0].data(), cells[0].data() + cells[0].size(), id);
        if (ec != std::errc{} || ptr != cells[0].data() + cells[0].size()) throw ParseError("bad row id", line_no);
        p.row_ids.push_back(id);
        for (std::size_t j = 0; j < p.dims; ++j) {
            auto v = parse_number(cells[j + 1]);
            if (!v) throw ParseError("bad coordinate", line_no);
            p.coords.push_back(*v);
        }
    }
    if (p.dims == 0) throw ParseError("coords file is empty");
    return p;
}

struct StatsCommand {
    ZNorm znorm = ZNorm::none;
    ImputeStrategy impute = DropRows{};
};

/**
 * Attribute summaries plus, with a class attribute, the per-class report.
 * With coordinates, the dataset is narrowed to the rows they cover and the
 * report gains the projected side.
 */
inline json run_stats(const Dataset& d, const std::optional<Projection>& coords, const StatsCommand& cmd = {}) {
    auto ready = prepare(d, cmd.impute);
    if (coords) {
        std::vector<std::size_t> keep;
        for (auto id : coords->row_ids) {
            auto i = ready.row_index(id);
            if (!i) throw DomainError("coords row " + std::to_string(id) + " is not in the prepared dataset");
            keep.push_back(*i);
        }
        ready = ready.subset(keep);
    }
    json out = {{"rows", ready.size()}, {"attributes", summaries_json(ready)}};
    if (ready.metadata.class_index() && ready.size() > 0) {
        IndexOptions io;
        io.znorm = cmd.znorm;
        const auto indexed = index_dataset(ready, io);
        out["clusters"] = to_json(before_after_report(ready, indexed, coords ? &*coords : nullptr));
    } else {
        out["clusters"] = nullptr;
    }
    return out;
}

struct ExtractCommand {
    std::vector<std::string> where;
    std::vector<std::string> columns;
    std::vector<std::string> sort;
    bool distinct = false;
    LinkMode link = LinkMode::smart;
    ExtractSchema schema;
};

inline LinkMode parse_link_mode(std::string_view s) {
    if (s == "smart") return LinkMode::smart;
    if (s == "and") return LinkMode::all_and;
    if (s == "or") return LinkMode::all_or;
    throw DomainError("unknown link mode '" + std::string(s) + "'");
}

/// `attr`, `attr:asc` or `attr:desc`.
inline SortKey parse_sort_key(std::string_view s) {
    const auto c = s.rfind(':');
    if (c != std::string_view::npos) {
        const auto dir = s.substr(c + 1);
        if (dir == "asc") return {std::string(s.substr(0, c)), false};
        if (dir == "desc") return {std::string(s.substr(0, c)), true};
    }
    return {std::string(s), false};
}

struct ExtractPlan {
    Query query;
    std::vector<std::string> warnings;
};

inline ExtractPlan build_query(const Metadata& m, const ExtractCommand& cmd) {
    ConditionSet set;
    for (const auto& spec : cmd.where) set = add_condition_spec(std::move(set), m, cmd.schema, spec);
    auto linked = smart_link(set.conditions, cmd.link);
    ExtractPlan plan;
    plan.query.source = cmd.schema.source;
    plan.query.where = std::move(linked.expr);
    for (const auto& c : cmd.columns) {
        m.require_index(c);
        plan.query.columns.push_back(c);
    }
    for (const auto& s : cmd.sort) {
        auto key = parse_sort_key(s);
        m.require_index(key.attribute);
        plan.query.sort.push_back(std::move(key));
    }
    plan.query.distinct = cmd.distinct;
    plan.warnings = std::move(linked.warnings);
    return plan;
}

/// Splits "a,b,c" and drops empty pieces.
inline std::vector<std::string> split_list(std::string_view s) {
    std::vector<std::string> out;
    for (auto piece : data_detail::split(s, ','))
        if (auto t = data_detail::trim(piece); !t.empty()) out.emplace_back(t);
    return out;
}

/**
 * Writes exported documents. A single document goes to `out` as given; the
 * .data/.names pair goes next to it, sharing its stem.
 */
inline std::vector<std::filesystem::path> write_export(const ExportFiles& files, const std::filesystem::path& out) {
    std::vector<std::filesystem::path> written;
    if (files.size() == 1) {
        write_file(out, files.begin()->second);
        written.push_back(out);
        return written;
    }
    auto stem = out;
    if (stem.extension() == ".data" || stem.extension() == ".names") stem.replace_extension();
    for (const auto& [ext, content] : files) {
        auto path = stem;
        path += ext;
        write_file(path, content);
        written.push_back(path);
    }
    return written;
}

}  // namespace fmx
