#pragma once

#include <algorithm>
#include <cctype>
#include <compare>
#include <cstdio>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "fmx/dataset.hpp"

/**
 * @file extract.hpp
 *
 * @brief Typed conditions, automatic AND/OR linking, SQL text and in-memory
 * evaluation of extracts.
 */

namespace fmx {

/// Value type of an attribute as seen by the condition editor.
enum class ValueType { boolean, numeric, string, date };

inline std::string_view to_string(ValueType t) {
    switch (t) {
        case ValueType::boolean: return "boolean";
        case ValueType::numeric: return "numeric";
        case ValueType::string: return "string";
        case ValueType::date: return "date";
    }
    return "string";
}

inline ValueType parse_value_type(std::string_view s) {
    if (s == "boolean") return ValueType::boolean;
    if (s == "numeric") return ValueType::numeric;
    if (s == "string") return ValueType::string;
    if (s == "date") return ValueType::date;
    throw DomainError("unknown value type '" + std::string(s) + "'");
}

/// Calendar date, ISO-8601 on input and output.
struct Date {
    int year = 1970;
    int month = 1;
    int day = 1;

    auto operator<=>(const Date&) const = default;

    static bool valid(int y, int m, int d) {
        if (m < 1 || m > 12 || d < 1) return false;
        static constexpr int days[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
        const bool leap = (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
        return d <= days[m - 1] + (m == 2 && leap ? 1 : 0);
    }

    /// Parses YYYY-MM-DD; nullopt for malformed text or impossible dates.
    static std::optional<Date> parse(std::string_view s) {
        if (s.size() != 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
        auto num = [&](std::size_t pos, std::size_t len) -> std::optional<int> {
            int v = 0;
            for (std::size_t i = pos; i < pos + len; ++i) {
                if (!std::isdigit(static_cast<unsigned char>(s[i]))) return std::nullopt;
                v = v * 10 + (s[i] - '0');
            }
            return v;
        };
        auto y = num(0, 4), m = num(5, 2), d = num(8, 2);
        if (!y || !m || !d || !valid(*y, *m, *d)) return std::nullopt;
        return Date{*y, *m, *d};
    }

    std::string iso() const {
        char buf[16];
        std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", year, month, day);
        return buf;
    }
};

using Operand = std::variant<bool, double, std::string, Date>;

enum class Operation { eq, neq, gt, lt, ge, le, is_null, is_not_null, starting, containing };

inline std::string_view to_string(Operation op) {
    switch (op) {
        case Operation::eq: return "eq";
        case Operation::neq: return "neq";
        case Operation::gt: return "gt";
        case Operation::lt: return "lt";
        case Operation::ge: return "ge";
        case Operation::le: return "le";
        case Operation::is_null: return "is_null";
        case Operation::is_not_null: return "is_not_null";
        case Operation::starting: return "starting";
        case Operation::containing: return "containing";
    }
    return "eq";
}

/// Accepts the names printed by to_string and the SQL symbols (=, <>, !=, >, <, >=, <=).
inline Operation parse_operation(std::string_view s) {
    static const std::map<std::string_view, Operation> names = {
        {"eq", Operation::eq},           {"=", Operation::eq},
        {"neq", Operation::neq},         {"<>", Operation::neq},
        {"!=", Operation::neq},          {"gt", Operation::gt},
        {">", Operation::gt},            {"lt", Operation::lt},
        {"<", Operation::lt},            {"ge", Operation::ge},
        {">=", Operation::ge},           {"le", Operation::le},
        {"<=", Operation::le},           {"is_null", Operation::is_null},
        {"is_not_null", Operation::is_not_null}, {"starting", Operation::starting},
        {"containing", Operation::containing},
    };
    auto it = names.find(s);
    if (it == names.end()) throw DomainError("unknown operation '" + std::string(s) + "'");
    return it->second;
}

inline bool takes_operand(Operation op) { return op != Operation::is_null && op != Operation::is_not_null; }

/// Operations offered for an attribute of type `t`.
inline std::vector<Operation> allowed_ops(ValueType t) {
    using O = Operation;
    switch (t) {
        case ValueType::boolean:
            return {O::eq, O::neq, O::is_null, O::is_not_null};
        case ValueType::numeric:
        case ValueType::date:
            return {O::eq, O::neq, O::gt, O::lt, O::ge, O::le, O::is_null, O::is_not_null};
        case ValueType::string:
            return {O::eq, O::neq, O::starting, O::containing, O::is_null, O::is_not_null};
    }
    return {};
}

inline bool is_allowed(ValueType t, Operation op) {
    const auto ops = allowed_ops(t);
    return std::find(ops.begin(), ops.end(), op) != ops.end();
}

/// Table label and attribute value types used when building extracts.
struct ExtractSchema {
    std::string source = "data";
    std::map<std::string, ValueType, std::less<>> types;
};

/// Explicit schema type, else numeric for continuous and string for nominal attributes.
inline ValueType type_of(const Metadata& m, const ExtractSchema& schema, std::string_view attr) {
    const auto k = m.require_index(attr);
    if (auto it = schema.types.find(attr); it != schema.types.end()) return it->second;
    return m.attributes[k].kind == AttributeKind::continuous ? ValueType::numeric : ValueType::string;
}

namespace extract_detail {

inline std::string lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

inline std::optional<bool> parse_bool(std::string_view s) {
    const auto l = lower(s);
    if (l == "true" || l == "1" || l == "yes" || l == "t") return true;
    if (l == "false" || l == "0" || l == "no" || l == "f") return false;
    return std::nullopt;
}

}  // namespace extract_detail

/// Reads operand text for an attribute of type `t`.
inline Operand parse_operand(ValueType t, std::string_view text) {
    switch (t) {
        case ValueType::boolean:
            if (auto b = extract_detail::parse_bool(text)) return *b;
            throw DomainError("'" + std::string(text) + "' is not a boolean");
        case ValueType::numeric:
            if (auto v = parse_number(text)) return *v;
            throw DomainError("'" + std::string(text) + "' is not a number");
        case ValueType::date:
            if (auto d = Date::parse(text)) return *d;
            throw DomainError("'" + std::string(text) + "' is not a valid YYYY-MM-DD date");
        case ValueType::string:
            return std::string(text);
    }
    return std::string(text);
}

inline bool operand_matches(ValueType t, const Operand& v) {
    switch (t) {
        case ValueType::boolean: return std::holds_alternative<bool>(v);
        case ValueType::numeric: return std::holds_alternative<double>(v);
        case ValueType::string: return std::holds_alternative<std::string>(v);
        case ValueType::date: return std::holds_alternative<Date>(v);
    }
    return false;
}

struct Condition {
    std::string attribute;
    Operation op = Operation::eq;
    std::optional<Operand> operand;

    bool operator==(const Condition&) const = default;
};

/**
 * @brief Conditions entered so far.
 *
 * Each attribute used in a condition keeps one unbound clone slot so a
 * further condition on the same attribute can be entered (a range needs two).
 */
struct ConditionSet {
    std::vector<Condition> conditions;
    std::vector<std::string> clone_slots;
};

/// Validates the condition against the attribute type and appends it.
inline ConditionSet add_condition(ConditionSet set, const Metadata& m, const ExtractSchema& schema,
                                  std::string attribute, Operation op, std::optional<Operand> operand = std::nullopt) {
    const auto t = type_of(m, schema, attribute);
    if (!is_allowed(t, op))
        throw DomainError("operation '" + std::string(to_string(op)) + "' is not allowed on " +
                          std::string(to_string(t)) + " attribute '" + attribute + "'");
    if (takes_operand(op)) {
        if (!operand) throw DomainError("operation '" + std::string(to_string(op)) + "' needs an operand");
        if (!operand_matches(t, *operand))
            throw DomainError("operand type does not match " + std::string(to_string(t)) + " attribute '" +
                              attribute + "'");
        if (const auto* d = std::get_if<Date>(&*operand); d && !Date::valid(d->year, d->month, d->day))
            throw DomainError("invalid calendar date");
    } else if (operand) {
        throw DomainError("operation '" + std::string(to_string(op)) + "' takes no operand");
    }
    if (std::find(set.clone_slots.begin(), set.clone_slots.end(), attribute) == set.clone_slots.end())
        set.clone_slots.push_back(attribute);
    set.conditions.push_back({std::move(attribute), op, std::move(operand)});
    return set;
}

/// Parses an `attr:op:operand` triple; the operand may itself contain ':'.
inline ConditionSet add_condition_spec(ConditionSet set, const Metadata& m, const ExtractSchema& schema,
                                       std::string_view spec) {
    const auto c1 = spec.find(':');
    if (c1 == std::string_view::npos) throw DomainError("condition '" + std::string(spec) + "' is not attr:op:operand");
    const auto attr = spec.substr(0, c1);
    const auto rest = spec.substr(c1 + 1);
    const auto c2 = rest.find(':');
    const auto op = parse_operation(rest.substr(0, c2));
    std::optional<Operand> operand;
    if (takes_operand(op)) {
        if (c2 == std::string_view::npos) throw DomainError("condition '" + std::string(spec) + "' lacks an operand");
        operand = parse_operand(type_of(m, schema, attr), rest.substr(c2 + 1));
    } else if (c2 != std::string_view::npos && c2 + 1 < rest.size()) {
        throw DomainError("condition '" + std::string(spec) + "' takes no operand");
    }
    return add_condition(std::move(set), m, schema, std::string(attr), op, std::move(operand));
}

enum class Connective { and_, or_ };

/// AND/OR tree over conditions. A node with no children is the empty (always true) expression.
struct ConditionExpr {
    std::optional<Condition> leaf;
    Connective connective = Connective::and_;
    std::vector<ConditionExpr> children;

    static ConditionExpr make_leaf(Condition c) {
        ConditionExpr e;
        e.leaf = std::move(c);
        return e;
    }

    bool is_leaf() const noexcept { return leaf.has_value(); }
    bool empty() const noexcept { return !leaf && children.empty(); }
};

enum class LinkMode { smart, all_and, all_or };

struct LinkResult {
    ConditionExpr expr;
    std::vector<std::string> warnings;
};

namespace extract_detail {

enum class OpClass { eq, neq, lower, upper, null_test, starting, containing };

inline OpClass classify(Operation op) {
    switch (op) {
        case Operation::eq: return OpClass::eq;
        case Operation::neq: return OpClass::neq;
        case Operation::gt:
        case Operation::ge: return OpClass::lower;
        case Operation::lt:
        case Operation::le: return OpClass::upper;
        case Operation::is_null:
        case Operation::is_not_null: return OpClass::null_test;
        case Operation::starting: return OpClass::starting;
        case Operation::containing: return OpClass::containing;
    }
    return OpClass::eq;
}

/// a <=> b for operands of the same ordered type.
inline std::optional<std::partial_ordering> compare(const Operand& a, const Operand& b) {
    if (a.index() != b.index()) return std::nullopt;
    return std::visit(
        [&](const auto& x) -> std::optional<std::partial_ordering> {
            using T = std::decay_t<decltype(x)>;
            const auto& y = std::get<T>(b);
            if constexpr (std::is_same_v<T, bool>) return static_cast<int>(x) <=> static_cast<int>(y);
            else return std::partial_ordering(x <=> y);
        },
        a);
}

}  // namespace extract_detail

/**
 * @brief The connective the linking rules pick for two conditions on one attribute.
 *
 * | first          | second         | operands | link |
 * |----------------|----------------|----------|------|
 * | = A            | = B            | A != B   | OR   |
 * | > or >= A      | < or <= B      | A <= B   | AND  |
 * | IS [NOT] NULL  | = A            |          | OR   |
 * | <> A           | <> B           |          | AND  |
 * | > or >= A      | < or <= B      | A > B    | OR   |
 * | STARTING A     | STARTING B     | A != B   | OR   |
 * | < A (or > A)   | < B (or > B)   |          | AND  |
 * | LIKE A         | LIKE B         | A != B   | OR   |
 *
 * Rules apply in either order of the two conditions. No match gives nullopt.
 */
inline std::optional<Connective> link_rule(const Condition& first, const Condition& second) {
    using extract_detail::OpClass;
    const auto c1 = extract_detail::classify(first.op);
    const auto c2 = extract_detail::classify(second.op);
    auto differ = [&] { return first.operand != second.operand; };

    if (c1 == OpClass::eq && c2 == OpClass::eq) return differ() ? std::optional(Connective::or_) : std::nullopt;
    if ((c1 == OpClass::lower && c2 == OpClass::upper) || (c1 == OpClass::upper && c2 == OpClass::lower)) {
        const auto& lo = c1 == OpClass::lower ? first : second;
        const auto& hi = c1 == OpClass::lower ? second : first;
        auto cmp = extract_detail::compare(*lo.operand, *hi.operand);
        if (!cmp || *cmp == std::partial_ordering::unordered) return std::nullopt;
        return *cmp <= 0 ? Connective::and_ : Connective::or_;
    }
    if ((c1 == OpClass::null_test && c2 == OpClass::eq) || (c1 == OpClass::eq && c2 == OpClass::null_test))
        return Connective::or_;
    if (c1 == OpClass::neq && c2 == OpClass::neq) return Connective::and_;
    if (c1 == OpClass::starting && c2 == OpClass::starting)
        return differ() ? std::optional(Connective::or_) : std::nullopt;
    if ((c1 == OpClass::lower && c2 == OpClass::lower) || (c1 == OpClass::upper && c2 == OpClass::upper))
        return Connective::and_;
    if (c1 == OpClass::containing && c2 == OpClass::containing)
        return differ() ? std::optional(Connective::or_) : std::nullopt;
    return std::nullopt;
}

namespace extract_detail {

inline void append(ConditionExpr& expr, Connective conn, ConditionExpr next) {
    if (expr.empty()) {
        expr = std::move(next);
        return;
    }
    if (!expr.is_leaf() && expr.connective == conn) {
        expr.children.push_back(std::move(next));
        return;
    }
    ConditionExpr node;
    node.connective = conn;
    node.children.push_back(std::move(expr));
    node.children.push_back(std::move(next));
    expr = std::move(node);
}

}  // namespace extract_detail

/**
 * @brief Links conditions into one expression.
 *
 * Conditions are grouped by attribute in order of first appearance. Inside a
 * group the connective between consecutive conditions comes from link_rule
 * (unmatched pairs fall back to AND with a warning) and the group is folded
 * left. Groups are joined with AND. `all_and` / `all_or` force one
 * connective everywhere.
 */
inline LinkResult smart_link(const std::vector<Condition>& conditions, LinkMode mode = LinkMode::smart) {
    LinkResult result;
    std::vector<std::string> order;
    std::map<std::string, std::vector<const Condition*>> groups;
    for (const auto& c : conditions) {
        if (!groups.contains(c.attribute)) order.push_back(c.attribute);
        groups[c.attribute].push_back(&c);
    }
    const Connective across = mode == LinkMode::all_or ? Connective::or_ : Connective::and_;
    ConditionExpr top;
    top.connective = across;
    for (const auto& attr : order) {
        const auto& group = groups[attr];
        ConditionExpr expr = ConditionExpr::make_leaf(*group.front());
        for (std::size_t k = 1; k < group.size(); ++k) {
            Connective conn = across;
            if (mode == LinkMode::smart) {
                if (auto rule = link_rule(*group[k - 1], *group[k])) {
                    conn = *rule;
                } else {
                    conn = Connective::and_;
                    result.warnings.push_back("no linking rule for two conditions on '" + attr + "'; using AND");
                }
            }
            extract_detail::append(expr, conn, ConditionExpr::make_leaf(*group[k]));
        }
        top.children.push_back(std::move(expr));
    }
    if (top.children.size() == 1) result.expr = std::move(top.children.front());
    else result.expr = std::move(top);
    return result;
}

struct SortKey {
    std::string attribute;
    bool descending = false;

    bool operator==(const SortKey&) const = default;
};

/// State of one extract. Empty `columns` selects every attribute.
struct Query {
    std::string source = "data";
    ConditionExpr where;
    std::vector<std::string> columns;
    std::vector<SortKey> sort;
    bool distinct = false;
    std::vector<std::string> group_keys;
};

namespace extract_detail {

inline std::string identifier(std::string_view name) {
    bool plain = !name.empty() && !std::isdigit(static_cast<unsigned char>(name.front()));
    for (unsigned char c : name)
        if (!(std::isalnum(c) || c == '_' || c == '.' || c >= 0x80)) plain = false;
    if (plain) return std::string(name);
    std::string out = "\"";
    for (char c : name) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

inline std::string sql_string(std::string_view s) {
    std::string out = "'";
    for (char c : s) {
        if (c == '\'') out += '\'';
        out += c;
    }
    return out + "'";
}

inline std::string literal(const Operand& v) {
    return std::visit(
        [](const auto& x) -> std::string {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, bool>) return x ? "TRUE" : "FALSE";
            else if constexpr (std::is_same_v<T, double>) return format_number(x);
            else if constexpr (std::is_same_v<T, std::string>) return sql_string(x);
            else return sql_string(x.iso());
        },
        v);
}

inline std::string condition_sql(const Condition& c) {
    const auto id = identifier(c.attribute);
    switch (c.op) {
        case Operation::eq: return id + " = " + literal(*c.operand);
        case Operation::neq: return id + " <> " + literal(*c.operand);
        case Operation::gt: return id + " > " + literal(*c.operand);
        case Operation::lt: return id + " < " + literal(*c.operand);
        case Operation::ge: return id + " >= " + literal(*c.operand);
        case Operation::le: return id + " <= " + literal(*c.operand);
        case Operation::is_null: return id + " IS NULL";
        case Operation::is_not_null: return id + " IS NOT NULL";
        case Operation::starting: return id + " STARTING " + literal(*c.operand);
        case Operation::containing: {
            const auto& s = std::get<std::string>(*c.operand);
            return id + " LIKE " + sql_string("%" + s + "%");
        }
    }
    return id;
}

inline std::string expr_sql(const ConditionExpr& e, bool top) {
    if (e.is_leaf()) return top ? condition_sql(*e.leaf) : "(" + condition_sql(*e.leaf) + ")";
    std::string out;
    for (std::size_t i = 0; i < e.children.size(); ++i) {
        if (i) out += e.connective == Connective::and_ ? " and " : " or ";
        out += expr_sql(e.children[i], false);
    }
    return top ? out : "(" + out + ")";
}

}  // namespace extract_detail

/// Renders the WHERE expression alone (empty for an empty expression).
inline std::string where_sql(const ConditionExpr& e) {
    return e.empty() ? std::string() : extract_detail::expr_sql(e, true);
}

/**
 * select-from-where text, one clause per line:
 *
 *     select пациент
 *     from Пациенти
 *     where (възраст >= 30) and (възраст <= 50)
 *     order by възраст desc
 */
inline std::string emit_sql(const Query& q) {
    using extract_detail::identifier;
    std::string out = "select ";
    if (q.distinct) out += "distinct ";
    if (q.columns.empty()) {
        out += "*";
    } else {
        for (std::size_t i = 0; i < q.columns.size(); ++i) {
            if (i) out += ", ";
            out += identifier(q.columns[i]);
        }
    }
    out += "\nfrom " + identifier(q.source);
    if (!q.where.empty()) out += "\nwhere " + where_sql(q.where);
    if (!q.sort.empty()) {
        out += "\norder by ";
        for (std::size_t i = 0; i < q.sort.size(); ++i) {
            if (i) out += ", ";
            out += identifier(q.sort[i].attribute) + (q.sort[i].descending ? " desc" : " asc");
        }
    }
    return out + "\n";
}

namespace extract_detail {

/// Typed reading of a cell; nullopt for missing or unreadable cells.
inline std::optional<Operand> cell_operand(const CellValue& v, ValueType t) {
    if (is_missing(v)) return std::nullopt;
    if (const auto* c = std::get_if<Continuous>(&v)) {
        switch (t) {
            case ValueType::numeric: return c->value;
            case ValueType::boolean: return c->value != 0.0;
            case ValueType::string: return format_number(c->value);
            case ValueType::date: return std::nullopt;
        }
    }
    const auto& token = std::get<Nominal>(v).token;
    switch (t) {
        case ValueType::numeric:
            if (auto n = parse_number(token)) return *n;
            return std::nullopt;
        case ValueType::boolean:
            if (auto b = parse_bool(token)) return *b;
            return std::nullopt;
        case ValueType::date:
            if (auto d = Date::parse(token)) return *d;
            return std::nullopt;
        case ValueType::string: return token;
    }
    return std::nullopt;
}

inline bool holds(const Condition& c, const CellValue& cell, ValueType t) {
    if (c.op == Operation::is_null) return is_missing(cell);
    if (c.op == Operation::is_not_null) return !is_missing(cell);
    const auto v = cell_operand(cell, t);
    if (!v) return false;
    if (c.op == Operation::starting || c.op == Operation::containing) {
        const auto* s = std::get_if<std::string>(&*v);
        const auto* needle = std::get_if<std::string>(&*c.operand);
        if (!s || !needle) return false;
        return c.op == Operation::starting ? s->starts_with(*needle) : s->find(*needle) != std::string::npos;
    }
    auto cmp = compare(*v, *c.operand);
    if (!cmp || *cmp == std::partial_ordering::unordered) return false;
    switch (c.op) {
        case Operation::eq: return *cmp == 0;
        case Operation::neq: return *cmp != 0;
        case Operation::gt: return *cmp > 0;
        case Operation::lt: return *cmp < 0;
        case Operation::ge: return *cmp >= 0;
        case Operation::le: return *cmp <= 0;
        default: return false;
    }
}

struct Evaluator {
    const Metadata& m;
    const ExtractSchema& schema;

    bool operator()(const ConditionExpr& e, const std::vector<CellValue>& row) const {
        if (e.is_leaf()) {
            const auto k = m.require_index(e.leaf->attribute);
            return holds(*e.leaf, row[k], type_of(m, schema, e.leaf->attribute));
        }
        if (e.children.empty()) return true;
        if (e.connective == Connective::and_) {
            for (const auto& c : e.children)
                if (!(*this)(c, row)) return false;
            return true;
        }
        for (const auto& c : e.children)
            if ((*this)(c, row)) return true;
        return false;
    }
};

inline void check_attributes(const ConditionExpr& e, const Metadata& m) {
    if (e.is_leaf()) m.require_index(e.leaf->attribute);
    for (const auto& c : e.children) check_attributes(c, m);
}

/// Missing sorts before every value.
inline int compare_cells(const CellValue& a, const CellValue& b, ValueType t) {
    const auto va = cell_operand(a, t), vb = cell_operand(b, t);
    if (!va || !vb) return (va ? 1 : 0) - (vb ? 1 : 0);
    auto cmp = compare(*va, *vb);
    if (!cmp || *cmp == std::partial_ordering::unordered || *cmp == 0) return 0;
    return *cmp < 0 ? -1 : 1;
}

}  // namespace extract_detail

/// True if row `i` of `d` satisfies `e`.
inline bool matches(const ConditionExpr& e, const Dataset& d, std::size_t i, const ExtractSchema& schema = {}) {
    return extract_detail::Evaluator{d.metadata, schema}(e, d.rows.at(i));
}

/**
 * @brief Runs an extract in memory.
 *
 * A missing cell satisfies only IS NULL. Rows are filtered, stably sorted by
 * the sort keys (missing first when ascending), projected onto the columns
 * and, with `distinct`, reduced to the first of each group of equal
 * projected rows. Row ids are carried over.
 */
inline Dataset evaluate(const Query& q, const Dataset& d, const ExtractSchema& schema = {}) {
    const auto& m = d.metadata;
    extract_detail::check_attributes(q.where, m);
    std::vector<std::size_t> column_idx;
    for (const auto& c : q.columns) column_idx.push_back(m.require_index(c));
    if (q.columns.empty())
        for (std::size_t k = 0; k < m.size(); ++k) column_idx.push_back(k);
    std::vector<std::pair<std::size_t, ValueType>> sort_idx;
    for (const auto& s : q.sort) sort_idx.emplace_back(m.require_index(s.attribute), type_of(m, schema, s.attribute));

    const extract_detail::Evaluator eval{m, schema};
    std::vector<std::size_t> kept;
    for (std::size_t i = 0; i < d.size(); ++i)
        if (eval(q.where, d.rows[i])) kept.push_back(i);

    std::stable_sort(kept.begin(), kept.end(), [&](std::size_t a, std::size_t b) {
        for (std::size_t s = 0; s < sort_idx.size(); ++s) {
            const auto [k, t] = sort_idx[s];
            int c = extract_detail::compare_cells(d.rows[a][k], d.rows[b][k], t);
            if (q.sort[s].descending) c = -c;
            if (c != 0) return c < 0;
        }
        return false;
    });

    Dataset out;
    out.metadata.separator = m.separator;
    out.metadata.missing_value = m.missing_value;
    out.metadata.description = m.description;
    for (auto k : column_idx) out.metadata.attributes.push_back(m.attributes[k]);
    if (m.class_attribute && out.metadata.index_of(*m.class_attribute))
        out.metadata.class_attribute = m.class_attribute;

    for (auto i : kept) {
        std::vector<CellValue> row;
        row.reserve(column_idx.size());
        for (auto k : column_idx) row.push_back(d.rows[i][k]);
        if (q.distinct && std::find(out.rows.begin(), out.rows.end(), row) != out.rows.end()) continue;
        out.rows.push_back(std::move(row));
        out.row_ids.push_back(d.row_ids[i]);
    }
    return out;
}

/// One level of a grouped count; `children` holds the next key's groups.
struct GroupNode {
    std::string value;
    bool missing = false;
    std::size_t count = 0;
    std::vector<GroupNode> children;
};

namespace extract_detail {

inline std::vector<GroupNode> group_level(const Dataset& d, const std::vector<std::size_t>& keys, std::size_t level,
                                          const std::vector<std::size_t>& rows) {
    std::vector<GroupNode> out;
    if (level == keys.size()) return out;
    const auto k = keys[level];
    std::vector<std::vector<std::size_t>> members;
    for (auto i : rows) {
        const auto& cell = d.rows[i][k];
        const bool miss = is_missing(cell);
        const auto text = cell_text(d.metadata, k, cell);
        auto it = std::find_if(out.begin(), out.end(),
                               [&](const GroupNode& g) { return g.missing == miss && g.value == text; });
        if (it == out.end()) {
            out.push_back({text, miss, 0, {}});
            members.emplace_back();
            it = out.end() - 1;
        }
        ++it->count;
        members[static_cast<std::size_t>(it - out.begin())].push_back(i);
    }
    for (std::size_t g = 0; g < out.size(); ++g) out[g].children = group_level(d, keys, level + 1, members[g]);
    return out;
}

}  // namespace extract_detail

/// Hierarchical row counts by `keys`, groups in order of first appearance.
inline std::vector<GroupNode> group_counts(const Dataset& d, const std::vector<std::string>& keys) {
    std::vector<std::size_t> idx;
    for (const auto& k : keys) idx.push_back(d.metadata.require_index(k));
    if (idx.empty()) return {};
    std::vector<std::size_t> rows(d.size());
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
    return extract_detail::group_level(d, idx, 0, rows);
}

}  // namespace fmx
