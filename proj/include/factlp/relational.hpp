#pragma once

#include <algorithm>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "factlp/errors.hpp"

namespace factlp {

//! Domain values are opaque tokens. Numeric-looking input stays textual.
using Value = std::string;

//! A named tuple: attribute -> value. The attribute set is its scope.
using Tuple = std::map<std::string, Value>;

//! Restriction of a tuple to the attributes in `attrs` (ignores attributes
//! the tuple does not have).
inline Tuple tuple_restrict(const Tuple& t, const std::set<std::string>& attrs) {
    Tuple out;
    for (const auto& [a, v] : t)
        if (attrs.count(a)) out.emplace(a, v);
    return out;
}

//! Whether two tuples agree on every attribute they share.
inline bool tuples_compatible(const Tuple& a, const Tuple& b) {
    for (const auto& [attr, v] : a) {
        auto it = b.find(attr);
        if (it != b.end() && it->second != v) return false;
    }
    return true;
}

//! Union of two compatible tuples.
inline Tuple tuple_merge(const Tuple& a, const Tuple& b) {
    Tuple out = a;
    for (const auto& [attr, v] : b) {
        auto [it, inserted] = out.emplace(attr, v);
        if (!inserted && it->second != v)
            throw schema_error("tuple_merge: conflicting values for attribute '" + attr + "'");
    }
    return out;
}

//! Render a tuple as {x=1, y=0} for error messages and text output.
inline std::string tuple_to_string(const Tuple& t) {
    std::string out = "{";
    bool first = true;
    for (const auto& [a, v] : t) {
        if (!first) out += ", ";
        first = false;
        out += a + "=" + v;
    }
    return out + "}";
}

//! A finite relation with a fixed, ordered attribute list and set-valued
//! contents (no duplicate rows, no row order).
class Relation {
public:
    explicit Relation(std::vector<std::string> attributes)
        : attrs_(std::move(attributes)) {
        if (attrs_.empty())
            throw schema_error("relation schema must have at least one attribute");
        std::set<std::string> seen;
        for (const auto& a : attrs_) {
            if (a.empty())
                throw schema_error("relation schema contains an empty attribute name");
            if (!seen.insert(a).second)
                throw schema_error("duplicate attribute '" + a + "' in relation schema");
        }
    }

    const std::vector<std::string>& attributes() const { return attrs_; }

    std::set<std::string> attribute_set() const {
        return {attrs_.begin(), attrs_.end()};
    }

    bool has_attribute(const std::string& a) const {
        return std::find(attrs_.begin(), attrs_.end(), a) != attrs_.end();
    }

    const std::set<Tuple>& tuples() const { return tuples_; }

    std::size_t size() const { return tuples_.size(); }
    bool empty() const { return tuples_.empty(); }

    //! Insert a tuple whose scope must equal the schema. Duplicates are
    //! silently absorbed.
    void insert(Tuple t) {
        if (t.size() != attrs_.size())
            throw schema_error("tuple arity " + std::to_string(t.size()) +
                               " does not match schema arity " + std::to_string(attrs_.size()));
        for (const auto& a : attrs_)
            if (!t.count(a))
                throw schema_error("tuple is missing attribute '" + a + "'");
        tuples_.insert(std::move(t));
    }

    //! Insert from values listed in schema order.
    void insert_row(const std::vector<Value>& row) {
        if (row.size() != attrs_.size())
            throw schema_error("row arity " + std::to_string(row.size()) +
                               " does not match schema arity " + std::to_string(attrs_.size()));
        Tuple t;
        for (std::size_t i = 0; i < attrs_.size(); ++i) t.emplace(attrs_[i], row[i]);
        tuples_.insert(std::move(t));
    }

    bool contains(const Tuple& t) const { return tuples_.count(t) != 0; }

    //! Equality is semantic: same attribute set (order ignored) and same
    //! tuple set.
    friend bool operator==(const Relation& a, const Relation& b) {
        return a.attribute_set() == b.attribute_set() && a.tuples_ == b.tuples_;
    }
    friend bool operator!=(const Relation& a, const Relation& b) { return !(a == b); }

private:
    std::vector<std::string> attrs_;
    std::set<Tuple> tuples_;
};

//! All tuples of `r` whose value on `attr` equals `value`.
inline Relation select_eq(const Relation& r, const std::string& attr, const Value& value) {
    if (!r.has_attribute(attr))
        throw schema_error("select: unknown attribute '" + attr + "'");
    Relation out(r.attributes());
    for (const auto& t : r.tuples())
        if (t.at(attr) == value) out.insert(t);
    return out;
}

//! Project the attributes in `drop` away. Dropping everything is refused
//! because relations cannot have an empty schema.
inline Relation project_out(const Relation& r, const std::set<std::string>& drop) {
    for (const auto& a : drop)
        if (!r.has_attribute(a))
            throw schema_error("project_out: unknown attribute '" + a + "'");
    std::vector<std::string> kept;
    for (const auto& a : r.attributes())
        if (!drop.count(a)) kept.push_back(a);
    if (kept.empty())
        throw schema_error("project_out: dropping all attributes would leave an empty schema");
    Relation out(kept);
    std::set<std::string> kept_set(kept.begin(), kept.end());
    for (const auto& t : r.tuples()) out.insert(tuple_restrict(t, kept_set));
    return out;
}

//! Natural join. Shared attributes must agree; disjoint schemas produce a
//! cartesian product. Result attribute order: left schema, then the right
//! schema's new attributes.
inline Relation natural_join(const Relation& a, const Relation& b) {
    std::vector<std::string> attrs = a.attributes();
    std::vector<std::string> shared;
    for (const auto& x : b.attributes()) {
        if (a.has_attribute(x))
            shared.push_back(x);
        else
            attrs.push_back(x);
    }
    Relation out(attrs);
    std::set<std::string> shared_set(shared.begin(), shared.end());
    std::map<Tuple, std::vector<const Tuple*>> index;
    for (const auto& tb : b.tuples()) index[tuple_restrict(tb, shared_set)].push_back(&tb);
    for (const auto& ta : a.tuples()) {
        auto it = index.find(tuple_restrict(ta, shared_set));
        if (it == index.end()) continue;
        for (const Tuple* tb : it->second) out.insert(tuple_merge(ta, *tb));
    }
    return out;
}

//! The ways a partial tuple over attributes(r) minus `sub` extends to a
//! full tuple of `r`. Each result is scoped to `sub` alone.
inline std::set<Tuple> extensions(const Relation& r, const std::set<std::string>& sub,
                                  const Tuple& partial) {
    for (const auto& a : sub)
        if (!r.has_attribute(a))
            throw schema_error("extensions: unknown attribute '" + a + "'");
    std::set<std::string> outer;
    for (const auto& a : r.attributes())
        if (!sub.count(a)) outer.insert(a);
    if (partial.size() != outer.size())
        throw schema_error("extensions: partial tuple scope does not match the non-projected attributes");
    for (const auto& a : outer)
        if (!partial.count(a))
            throw schema_error("extensions: partial tuple is missing attribute '" + a + "'");
    std::set<Tuple> out;
    for (const auto& t : r.tuples())
        if (tuple_restrict(t, outer) == partial) out.insert(tuple_restrict(t, sub));
    return out;
}

//! Options for the delimited text reader/writer. The format is plain
//! splitting on the delimiter; values must not contain it.
struct CsvOptions {
    char delimiter = ',';
    bool header = false;
};

namespace detail {

inline std::vector<std::string> split_line(const std::string& line, char delim) {
    std::vector<std::string> out;
    std::string field;
    for (char c : line) {
        if (c == delim) {
            out.push_back(field);
            field.clear();
        } else {
            field += c;
        }
    }
    out.push_back(field);
    return out;
}

} // namespace detail

//! Read a relation from delimited text. If `opts.header` is set the first
//! line names the columns; it must match `attributes` when both are given.
//! Pass an empty attribute list to take the schema from the header.
//! Repeated rows collapse into one tuple.
inline Relation load_relation(std::istream& in, std::vector<std::string> attributes,
                              const CsvOptions& opts = {}) {
    std::string line;
    int lineno = 0;
    if (opts.header) {
        if (!std::getline(in, line))
            throw parse_error("line 1: expected a header line");
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        auto header = detail::split_line(line, opts.delimiter);
        if (attributes.empty()) {
            attributes = header;
        } else if (header != attributes) {
            throw parse_error("line 1: header does not match the expected attribute list");
        }
    }
    if (attributes.empty())
        throw schema_error("load_relation: no attribute list and no header to take one from");
    Relation r(attributes);
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = detail::split_line(line, opts.delimiter);
        if (fields.size() != attributes.size())
            throw parse_error("line " + std::to_string(lineno) + ": expected " +
                              std::to_string(attributes.size()) + " fields, got " +
                              std::to_string(fields.size()));
        r.insert_row(fields);
    }
    return r;
}

//! Write delimited text, one row per tuple in set order.
inline void write_csv(std::ostream& out, const Relation& r, const CsvOptions& opts = {}) {
    auto emit_row = [&](const std::vector<std::string>& fields) {
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (fields[i].find(opts.delimiter) != std::string::npos ||
                fields[i].find('\n') != std::string::npos)
                throw parse_error("write_csv: value contains the delimiter or a newline");
            if (i) out << opts.delimiter;
            out << fields[i];
        }
        out << '\n';
    };
    if (opts.header) emit_row(r.attributes());
    for (const auto& t : r.tuples()) {
        std::vector<std::string> row;
        for (const auto& a : r.attributes()) row.push_back(t.at(a));
        emit_row(row);
    }
}

//! JSON form: {"name": ..., "attributes": [...], "tuples": [[...], ...]}.
inline nlohmann::json relation_to_json(const Relation& r, const std::string& name = "") {
    nlohmann::json j;
    if (!name.empty()) j["name"] = name;
    j["attributes"] = r.attributes();
    auto rows = nlohmann::json::array();
    for (const auto& t : r.tuples()) {
        auto row = nlohmann::json::array();
        for (const auto& a : r.attributes()) row.push_back(t.at(a));
        rows.push_back(std::move(row));
    }
    j["tuples"] = std::move(rows);
    return j;
}

namespace detail {

//! Accept strings directly and integers by decimal rendering, so hand
//! written files may say 1 instead of "1".
inline std::string json_value_token(const nlohmann::json& v, const std::string& where) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_integer()) return std::to_string(v.get<long long>());
    throw parse_error(where + ": values must be strings or integers");
}

} // namespace detail

inline Relation relation_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("attributes") || !j.contains("tuples"))
        throw parse_error("relation JSON needs \"attributes\" and \"tuples\"");
    std::vector<std::string> attrs;
    for (const auto& a : j.at("attributes")) {
        if (!a.is_string()) throw parse_error("relation attributes must be strings");
        attrs.push_back(a.get<std::string>());
    }
    Relation r(attrs);
    int i = 0;
    for (const auto& row : j.at("tuples")) {
        std::string where = "tuple #" + std::to_string(i++);
        if (!row.is_array() || row.size() != attrs.size())
            throw parse_error(where + ": expected an array of " + std::to_string(attrs.size()) +
                              " values");
        std::vector<Value> vals;
        for (const auto& v : row) vals.push_back(detail::json_value_token(v, where));
        r.insert_row(vals);
    }
    return r;
}

//! A named collection of relations, as fed to query evaluation.
class Database {
public:
    void add(const std::string& name, Relation r) {
        if (name.empty()) throw schema_error("relation name must not be empty");
        if (!rels_.emplace(name, std::move(r)).second)
            throw schema_error("duplicate relation name '" + name + "'");
    }

    bool has(const std::string& name) const { return rels_.count(name) != 0; }

    const Relation& get(const std::string& name) const {
        auto it = rels_.find(name);
        if (it == rels_.end()) throw schema_error("unknown relation '" + name + "'");
        return it->second;
    }

    const std::map<std::string, Relation>& relations() const { return rels_; }

private:
    std::map<std::string, Relation> rels_;
};

} // namespace factlp
