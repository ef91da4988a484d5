#pragma once

#include <cstddef>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include "fmx/dataset.hpp"

/**
 * @file names_xml.hpp
 *
 * @brief Reader and writer for the `.names` XML metadata document.
 *
 * The document has a single `metadata` root holding one or more empty
 * `attribute` elements:
 *
 *     <metadata separator="," missingValue="?" description="..." class="Kind">
 *       <attribute name="Cover" type="nominal" domain="skin,fur" skip="false"/>
 *     </metadata>
 *
 * `separator` and `name` are required, `type` defaults to nominal and `skip`
 * to false. A DOCTYPE is neither required nor interpreted.
 */

namespace fmx {

namespace names_detail {

using boost::property_tree::ptree;

inline std::size_t line_at(std::string_view text, std::size_t offset) {
    std::size_t line = 1;
    for (std::size_t i = 0; i < offset && i < text.size(); ++i)
        if (text[i] == '\n') ++line;
    return line;
}

/// Line of the `ordinal`-th (0-based) start tag named `tag`, ignoring comments and PIs.
inline std::size_t tag_line(std::string_view text, std::string_view tag, std::size_t ordinal) {
    std::size_t seen = 0;
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text[i] != '<') continue;
        auto rest = text.substr(i);
        if (rest.starts_with("<!--")) {
            auto end = text.find("-->", i + 4);
            if (end == std::string_view::npos) break;
            i = end + 2;
            continue;
        }
        if (rest.starts_with("<?") || rest.starts_with("<!")) {
            auto end = text.find('>', i);
            if (end == std::string_view::npos) break;
            i = end;
            continue;
        }
        if (rest.size() > tag.size() + 1 && rest.substr(1, tag.size()) == tag) {
            char c = rest[tag.size() + 1];
            if (c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '/' || c == '>') {
                if (seen == ordinal) return line_at(text, i);
                ++seen;
            }
        }
    }
    return 0;
}

inline bool is_blank(std::string_view s) {
    return s.find_first_not_of(" \t\r\n") == std::string_view::npos;
}

inline std::string_view trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline bool parse_bool_attr(const std::string& v, std::string_view what, std::size_t line) {
    if (v == "true") return true;
    if (v == "false") return false;
    throw ParseError(std::string(what) + " must be 'true' or 'false', got '" + v + "'", line);
}

inline std::vector<std::string> split_domain(std::string_view text, std::size_t line) {
    std::vector<std::string> out;
    if (is_blank(text)) return out;
    std::size_t start = 0;
    while (true) {
        auto comma = text.find(',', start);
        auto token = trim(text.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                                             : comma - start));
        if (token.empty()) throw ParseError("empty token in domain list", line);
        out.emplace_back(token);
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

inline void escape_into(std::string& out, std::string_view v) {
    for (char c : v) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            case '\t': out += "&#9;"; break;
            case '\n': out += "&#10;"; break;
            case '\r': out += "&#13;"; break;
            default: out += c;
        }
    }
}

inline void write_attr(std::string& out, std::string_view key, std::string_view value) {
    out += ' ';
    out += key;
    out += "=\"";
    escape_into(out, value);
    out += '"';
}

}  // namespace names_detail

/// Parses a `.names` document. Throws ParseError carrying the line of the offending element.
inline Metadata parse_names(const std::string& xml_text) {
    using namespace names_detail;
    ptree doc;
    try {
        std::istringstream in(xml_text);
        boost::property_tree::read_xml(in, doc);
    } catch (const boost::property_tree::xml_parser_error& e) {
        throw ParseError("malformed XML: " + e.message(), e.line());
    }

    const ptree* root = nullptr;
    for (const auto& [key, child] : doc) {
        if (key == "<xmlcomment>") continue;
        if (key != "metadata")
            throw ParseError("unknown element <" + key + ">", tag_line(xml_text, key, 0));
        if (root) throw ParseError("more than one <metadata> element", tag_line(xml_text, key, 1));
        root = &child;
    }
    if (!root) throw ParseError("missing <metadata> root element");
    const std::size_t root_line = tag_line(xml_text, "metadata", 0);

    Metadata m;
    bool have_separator = false;
    std::size_t attr_ordinal = 0;
    for (const auto& [key, child] : *root) {
        if (key == "<xmlcomment>") continue;
        if (key == "<xmlattr>") {
            for (const auto& [name, value] : child) {
                const auto& v = value.data();
                if (name == "separator") {
                    if (v.size() != 1)
                        throw ParseError("separator must be exactly one character", root_line);
                    m.separator = v[0];
                    have_separator = true;
                } else if (name == "missingValue") {
                    m.missing_value = v;
                } else if (name == "description") {
                    m.description = v;
                } else if (name == "class") {
                    m.class_attribute = v;
                } else {
                    throw ParseError("unknown metadata attribute '" + name + "'", root_line);
                }
            }
            continue;
        }
        if (key != "attribute") {
            // Unknown tags are located by their first occurrence.
            throw ParseError("unknown element <" + key + ">", tag_line(xml_text, key, 0));
        }
        const std::size_t line = tag_line(xml_text, "attribute", attr_ordinal++);
        AttributeMeta a;
        bool have_name = false;
        std::string domain_text;
        bool have_domain = false;
        for (const auto& [ckey, cchild] : child) {
            if (ckey == "<xmlcomment>") continue;
            if (ckey != "<xmlattr>")
                throw ParseError("element <attribute> must be empty", line);
            for (const auto& [name, value] : cchild) {
                const auto& v = value.data();
                if (name == "name") {
                    a.name = v;
                    have_name = true;
                } else if (name == "type") {
                    if (v == "nominal") a.kind = AttributeKind::nominal;
                    else if (v == "continuous") a.kind = AttributeKind::continuous;
                    else throw ParseError("type must be 'nominal' or 'continuous', got '" + v + "'", line);
                } else if (name == "domain") {
                    domain_text = v;
                    have_domain = true;
                } else if (name == "description") {
                    a.description = v;
                } else if (name == "missingValue") {
                    a.missing_value = v;
                } else if (name == "skip") {
                    a.skip = parse_bool_attr(v, "skip", line);
                } else {
                    throw ParseError("unknown attribute setting '" + name + "'", line);
                }
            }
        }
        if (!is_blank(child.data())) throw ParseError("element <attribute> must be empty", line);
        if (!have_name || a.name.empty()) throw ParseError("attribute without a name", line);
        for (const auto& prev : m.attributes)
            if (prev.name == a.name) throw ParseError("duplicate attribute name '" + a.name + "'", line);
        if (have_domain) {
            a.domain = split_domain(domain_text, line);
            if (a.kind == AttributeKind::continuous && !a.domain.empty())
                throw ParseError("domain given for continuous attribute '" + a.name + "'", line);
        } else if (a.kind == AttributeKind::nominal) {
            a.open_domain = true;
        }
        m.attributes.push_back(std::move(a));
    }
    if (!have_separator) throw ParseError("metadata requires a separator", root_line);
    if (!is_blank(root->data())) throw ParseError("unexpected text inside <metadata>", root_line);
    if (m.attributes.empty()) throw ParseError("metadata needs at least one <attribute>", root_line);
    try {
        validate(m);
    } catch (const DomainError& e) {
        throw ParseError(e.what(), root_line);
    }
    return m;
}

/// Writes `m` as a `.names` document. Settings equal to their defaults are omitted.
inline std::string serialize_names(const Metadata& m) {
    using namespace names_detail;
    validate(m);
    std::string out = "<metadata";
    write_attr(out, "separator", std::string_view(&m.separator, 1));
    if (m.missing_value != "?") write_attr(out, "missingValue", m.missing_value);
    if (!m.description.empty()) write_attr(out, "description", m.description);
    if (m.class_attribute) write_attr(out, "class", *m.class_attribute);
    out += ">\n";
    for (const auto& a : m.attributes) {
        out += "  <attribute";
        write_attr(out, "name", a.name);
        if (a.kind == AttributeKind::continuous) write_attr(out, "type", "continuous");
        if (a.closed_domain()) {
            std::string joined;
            for (const auto& t : a.domain) {
                if (t.find(',') != std::string::npos || trim(t) != t || t.empty())
                    throw DomainError("domain token '" + t + "' of '" + a.name +
                                      "' cannot be written in a comma list");
                if (!joined.empty()) joined += ',';
                joined += t;
            }
            write_attr(out, "domain", joined);
        }
        if (!a.description.empty()) write_attr(out, "description", a.description);
        if (a.missing_value) write_attr(out, "missingValue", *a.missing_value);
        if (a.skip) write_attr(out, "skip", "true");
        out += " />\n";
    }
    out += "</metadata>\n";
    return out;
}

}  // namespace fmx
