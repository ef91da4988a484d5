#pragma once

#include <string>
#include <vector>

#include "json.hpp"

#include "fmx/cluster_stats.hpp"
#include "fmx/dataset.hpp"
#include "fmx/extract.hpp"
#include "fmx/fastmap.hpp"
#include "fmx/session.hpp"

/**
 * @file json_io.hpp
 *
 * @brief JSON documents exchanged by the CLI and the HTTP service.
 */

namespace fmx {

using nlohmann::json;

inline json to_json(const AttributeMeta& a) {
    json j = {{"name", a.name},
              {"type", std::string(to_string(a.kind))},
              {"domain", a.domain},
              {"open_domain", a.kind == AttributeKind::nominal && !a.closed_domain()},
              {"skip", a.skip},
              {"description", a.description}};
    j["missing_value"] = a.missing_value ? json(*a.missing_value) : json(nullptr);
    return j;
}

inline json to_json(const Metadata& m) {
    json attrs = json::array();
    for (const auto& a : m.attributes) attrs.push_back(to_json(a));
    json j = {{"separator", std::string(1, m.separator)},
              {"missing_value", m.missing_value},
              {"description", m.description},
              {"attributes", attrs}};
    j["class"] = m.class_attribute ? json(*m.class_attribute) : json(nullptr);
    return j;
}

namespace json_detail {

inline void patch_attribute(AttributeMeta& a, const json& j) {
    for (const auto& [key, v] : j.items()) {
        if (key == "name") {
            a.name = v.get<std::string>();
        } else if (key == "type") {
            a.kind = parse_attribute_kind(v.get<std::string>());
        } else if (key == "domain") {
            a.domain = v.get<std::vector<std::string>>();
            a.open_domain = false;
        } else if (key == "open_domain") {
            a.open_domain = v.get<bool>();
        } else if (key == "skip") {
            a.skip = v.get<bool>();
        } else if (key == "description") {
            a.description = v.get<std::string>();
        } else if (key == "missing_value") {
            if (v.is_null()) a.missing_value.reset();
            else a.missing_value = v.get<std::string>();
        } else {
            throw DomainError("unknown attribute field '" + key + "'");
        }
    }
}

}  // namespace json_detail

/**
 * Applies a partial metadata document. Top-level fields replace their
 * counterparts; each entry of "attributes" is merged into the attribute
 * with the same "name" (or appended when no such attribute exists). Use
 * "rename" to change an attribute's name and "remove" to drop attributes.
 */
inline Metadata patch_metadata(Metadata m, const json& patch) {
    if (!patch.is_object()) throw DomainError("metadata patch must be a JSON object");
    for (const auto& [key, v] : patch.items()) {
        if (key == "separator") {
            const auto s = v.get<std::string>();
            if (s.size() != 1) throw DomainError("separator must be one character");
            m.separator = s[0];
        } else if (key == "missing_value") {
            m.missing_value = v.get<std::string>();
        } else if (key == "description") {
            m.description = v.get<std::string>();
        } else if (key == "class") {
            if (v.is_null()) m.class_attribute.reset();
            else m.class_attribute = v.get<std::string>();
        } else if (key == "attributes") {
            for (const auto& entry : v) {
                const auto name = entry.at("name").get<std::string>();
                auto k = m.index_of(name);
                if (!k) {
                    AttributeMeta a;
                    json_detail::patch_attribute(a, entry);
                    m.attributes.push_back(std::move(a));
                } else {
                    json_detail::patch_attribute(m.attributes[*k], entry);
                }
            }
        } else if (key == "rename") {
            for (const auto& [from, to] : v.items()) {
                auto k = m.require_index(from);
                m.attributes[k].name = to.get<std::string>();
                if (m.class_attribute == from) m.class_attribute = to.get<std::string>();
            }
        } else if (key == "remove") {
            for (const auto& name : v) {
                auto k = m.require_index(name.get<std::string>());
                m.attributes.erase(m.attributes.begin() + static_cast<std::ptrdiff_t>(k));
            }
        } else {
            throw DomainError("unknown metadata field '" + key + "'");
        }
    }
    return m;
}

inline json to_json(const CellValue& v) {
    if (const auto* n = std::get_if<Nominal>(&v)) return n->token;
    if (const auto* c = std::get_if<Continuous>(&v)) return c->value;
    return nullptr;
}

/// JSON cell for attribute `a`: null is missing; numbers and numeric strings fit continuous attributes.
inline CellValue cell_from_json(const AttributeMeta& a, const json& v) {
    if (v.is_null()) return Missing{};
    if (a.kind == AttributeKind::continuous) {
        if (v.is_number()) return make_continuous(v.get<double>());
        if (v.is_string())
            if (auto n = parse_number(v.get<std::string>())) return Continuous{*n};
        throw DomainError("attribute '" + a.name + "' expects a number");
    }
    if (v.is_string()) return Nominal{v.get<std::string>()};
    if (v.is_number()) return Nominal{format_number(v.get<double>())};
    if (v.is_boolean()) return Nominal{v.get<bool>() ? "true" : "false"};
    throw DomainError("attribute '" + a.name + "' expects a token");
}

inline json row_to_json(const Dataset& d, std::size_t i) {
    json values = json::array();
    for (const auto& c : d.rows[i]) values.push_back(to_json(c));
    return {{"row_id", d.row_ids[i]}, {"values", values}};
}

inline json to_json(const Projection& p) {
    json coords = json::array();
    for (std::size_t i = 0; i < p.size(); ++i) {
        auto pt = p.point(i);
        coords.push_back(std::vector<double>(pt.begin(), pt.end()));
    }
    json pivots = json::array();
    for (std::size_t j = 0; j < p.pivots.size(); ++j)
        pivots.push_back({{"a", p.pivots[j].first}, {"b", p.pivots[j].second}, {"distance", p.pivot_distances[j]}});
    return {{"row_ids", p.row_ids},
            {"k", p.dims},
            {"coords", coords},
            {"pivots", pivots},
            {"converged_axes", p.converged_axes},
            {"options",
             {{"k", p.options.k},
              {"pivot_iterations", p.options.pivot_iterations},
              {"seed", p.options.seed},
              {"epsilon", p.options.epsilon}}}};
}

namespace json_detail {

inline json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

inline json to_json(const Aggregates& a) {
    return {{"radius", opt(a.radius)},
            {"radius_squared", opt(a.radius_sq)},
            {"diameter", opt(a.diameter)},
            {"diameter_squared", opt(a.diameter_sq)}};
}

}  // namespace json_detail

inline json to_json(const ClusterReport& r) {
    json clusters = json::array();
    for (const auto& c : r.clusters)
        clusters.push_back({{"label", c.label},
                            {"n", c.n},
                            {"singleton", c.singleton},
                            {"diameter_base", c.diameter_base},
                            {"diameter_projected", json_detail::opt(c.diameter_projected)},
                            {"radius_base", json_detail::opt(c.radius_base)},
                            {"radius_projected", json_detail::opt(c.radius_projected)}});
    json j = {{"class_attribute", r.class_attribute},
              {"clusters", clusters},
              {"base", json_detail::to_json(r.base)},
              {"unlabeled", r.unlabeled}};
    j["projected"] = r.projected ? json_detail::to_json(*r.projected) : json(nullptr);
    return j;
}

inline json to_json(const AttributeSummary& s) {
    json j = {{"attribute", s.attribute}, {"type", std::string(to_string(s.kind))}, {"count", s.count}};
    if (s.kind == AttributeKind::nominal) {
        json h = json::array();
        for (const auto& [token, n] : s.histogram) h.push_back({{"value", token}, {"count", n}});
        j["histogram"] = h;
    } else {
        j["mean"] = s.mean;
        j["std"] = s.std_population;
    }
    return j;
}

inline json to_json(const GroupNode& g) {
    json children = json::array();
    for (const auto& c : g.children) children.push_back(to_json(c));
    json j = {{"count", g.count}, {"children", children}};
    j["value"] = g.missing ? json(nullptr) : json(g.value);
    return j;
}

inline json summaries_json(const Dataset& d) {
    json out = json::array();
    for (const auto& a : d.metadata.attributes)
        if (!a.skip) out.push_back(to_json(attribute_summary(d, a.name)));
    return out;
}

inline ExtractSchema schema_from_json(const json& j) {
    ExtractSchema s;
    if (j.contains("source")) s.source = j.at("source").get<std::string>();
    if (j.contains("types"))
        for (const auto& [name, t] : j.at("types").items()) s.types[name] = parse_value_type(t.get<std::string>());
    return s;
}

inline SelectionPolygon polygon_from_json(const json& j) {
    SelectionPolygon p;
    for (const auto& v : j) {
        if (v.is_array() && v.size() == 2) p.vertices.push_back({v[0].get<double>(), v[1].get<double>()});
        else if (v.is_object()) p.vertices.push_back({v.at("x").get<double>(), v.at("y").get<double>()});
        else throw DomainError("polygon vertices are [x, y] pairs");
    }
    return p;
}

}  // namespace fmx
