#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "factlp/errors.hpp"
#include "factlp/relational.hpp"

namespace factlp {

enum class GateKind { Input, Union, Product };

inline std::string gate_kind_to_string(GateKind k) {
    switch (k) {
        case GateKind::Input: return "input";
        case GateKind::Union: return "union";
        case GateKind::Product: return "product";
    }
    return "?";
}

inline GateKind gate_kind_from_string(const std::string& s) {
    if (s == "input") return GateKind::Input;
    if (s == "union") return GateKind::Union;
    if (s == "product") return GateKind::Product;
    throw parse_error("unknown gate kind '" + s + "'");
}

//! One gate. Inputs carry an attribute/value pair and have no children;
//! union and product gates have at least one child.
struct Gate {
    GateKind kind = GateKind::Input;
    std::string attr;
    std::string value;
    std::vector<int> children;

    static Gate input(std::string attr, std::string value) {
        Gate g;
        g.kind = GateKind::Input;
        g.attr = std::move(attr);
        g.value = std::move(value);
        return g;
    }
    static Gate gate_union(std::vector<int> children) {
        Gate g;
        g.kind = GateKind::Union;
        g.children = std::move(children);
        return g;
    }
    static Gate product(std::vector<int> children) {
        Gate g;
        g.kind = GateKind::Product;
        g.children = std::move(children);
        return g;
    }
};

//! A directed wire from `child` up into slot `pos` of `parent`'s child
//! list. Edge ids are positions in the canonical order: sorted by parent
//! id, then by slot. Parallel edges between the same two gates are
//! distinct edges.
struct Edge {
    int parent = -1;
    int pos = -1;
    int child = -1;
};

//! A circuit over union and product gates with input leaves, stored as a
//! DAG with one designated output gate (the root). The empty circuit has
//! no gates and denotes the empty answer set; it can still carry a
//! declared attribute list so its enumeration has a schema.
class Circuit {
public:
    Circuit() = default;

    Circuit(std::vector<Gate> gates, int root, std::vector<std::string> attributes = {})
        : gates_(std::move(gates)), root_(root), attrs_(std::move(attributes)) {
        if (gates_.empty()) {
            if (root_ != -1)
                throw index_error("root id " + std::to_string(root_) + " in an empty circuit");
        } else {
            if (root_ < 0 || root_ >= static_cast<int>(gates_.size()))
                throw index_error("root id " + std::to_string(root_) + " is out of range");
        }
        for (std::size_t g = 0; g < gates_.size(); ++g)
            for (int c : gates_[g].children)
                if (c < 0 || c >= static_cast<int>(gates_.size()))
                    throw index_error("gate " + std::to_string(g) + " has out-of-range child " +
                                      std::to_string(c));
        build_edges();
    }

    bool empty() const { return gates_.empty(); }
    int root() const { return root_; }
    std::size_t num_gates() const { return gates_.size(); }
    std::size_t num_edges() const { return edges_.size(); }

    const std::vector<Gate>& gates() const { return gates_; }
    const Gate& gate(int id) const {
        if (id < 0 || id >= static_cast<int>(gates_.size()))
            throw index_error("gate id " + std::to_string(id) + " is out of range");
        return gates_[id];
    }

    const std::vector<Edge>& edges() const { return edges_; }
    const Edge& edge(int id) const {
        if (id < 0 || id >= static_cast<int>(edges_.size()))
            throw index_error("edge id " + std::to_string(id) + " is out of range");
        return edges_[id];
    }

    //! Edge ids leaving gate g upward (g is the child end).
    const std::vector<int>& out_edges(int g) const {
        gate(g);
        return out_edges_[g];
    }
    //! Edge ids entering gate g (g is the parent end), in child-list order.
    const std::vector<int>& in_edges(int g) const {
        gate(g);
        return in_edges_[g];
    }

    //! Declared attribute list if one was given, otherwise the sorted
    //! attributes of the input gates.
    std::vector<std::string> attributes() const {
        if (!attrs_.empty()) return attrs_;
        std::set<std::string> s;
        for (const auto& g : gates_)
            if (g.kind == GateKind::Input) s.insert(g.attr);
        return {s.begin(), s.end()};
    }

    const std::vector<std::string>& declared_attributes() const { return attrs_; }

private:
    void build_edges() {
        // Gates and child slots are visited in increasing order, so the
        // edge vector comes out sorted by (parent, pos) by construction.
        out_edges_.assign(gates_.size(), {});
        in_edges_.assign(gates_.size(), {});
        for (std::size_t g = 0; g < gates_.size(); ++g) {
            for (std::size_t p = 0; p < gates_[g].children.size(); ++p) {
                int id = static_cast<int>(edges_.size());
                edges_.push_back({static_cast<int>(g), static_cast<int>(p), gates_[g].children[p]});
                in_edges_[g].push_back(id);
                out_edges_[gates_[g].children[p]].push_back(id);
            }
        }
    }

    std::vector<Gate> gates_;
    int root_ = -1;
    std::vector<std::string> attrs_;
    std::vector<Edge> edges_;
    std::vector<std::vector<int>> out_edges_;
    std::vector<std::vector<int>> in_edges_;
};

//! Gate ids in an order where every child precedes its parents. Throws if
//! the gate graph has a cycle.
inline std::vector<int> topo_order(const Circuit& c) {
    std::vector<int> remaining(c.num_gates());
    std::vector<int> order;
    order.reserve(c.num_gates());
    std::vector<int> queue;
    for (std::size_t g = 0; g < c.num_gates(); ++g) {
        remaining[g] = static_cast<int>(c.gate(static_cast<int>(g)).children.size());
        if (remaining[g] == 0) queue.push_back(static_cast<int>(g));
    }
    while (!queue.empty()) {
        int g = queue.back();
        queue.pop_back();
        order.push_back(g);
        for (int e : c.out_edges(g)) {
            int p = c.edge(e).parent;
            if (--remaining[p] == 0) queue.push_back(p);
        }
    }
    if (order.size() != c.num_gates())
        throw validation_error("circuit contains a cycle");
    return order;
}

//! Attribute set of each gate: {attr} at inputs, the union over children
//! elsewhere.
inline std::vector<std::set<std::string>> gate_vars(const Circuit& c) {
    std::vector<std::set<std::string>> vars(c.num_gates());
    for (int g : topo_order(c)) {
        const Gate& gate = c.gate(g);
        if (gate.kind == GateKind::Input) {
            vars[g].insert(gate.attr);
        } else {
            for (int ch : gate.children) vars[g].insert(vars[ch].begin(), vars[ch].end());
        }
    }
    return vars;
}

namespace detail {

inline Relation enumerate_into(const Circuit& c, int g, std::vector<std::optional<Relation>>& memo) {
    if (memo[g]) return *memo[g];
    const Gate& gate = c.gate(g);
    std::optional<Relation> out;
    switch (gate.kind) {
        case GateKind::Input: {
            Relation r({gate.attr});
            r.insert_row({gate.value});
            out = std::move(r);
            break;
        }
        case GateKind::Union: {
            for (int ch : gate.children) {
                Relation sub = enumerate_into(c, ch, memo);
                if (!out) {
                    out = sub;
                } else {
                    if (out->attribute_set() != sub.attribute_set())
                        throw validation_error("union gate " + std::to_string(g) +
                                               " mixes different attribute sets");
                    for (const auto& t : sub.tuples()) out->insert(t);
                }
            }
            break;
        }
        case GateKind::Product: {
            for (int ch : gate.children) {
                Relation sub = enumerate_into(c, ch, memo);
                if (!out) {
                    out = sub;
                } else {
                    if (!out->attribute_set().empty()) {
                        std::set<std::string> inter;
                        for (const auto& a : sub.attributes())
                            if (out->has_attribute(a)) inter.insert(a);
                        if (!inter.empty())
                            throw validation_error("product gate " + std::to_string(g) +
                                                   " has overlapping children");
                    }
                    out = natural_join(*out, sub);
                }
            }
            break;
        }
    }
    if (!out) throw validation_error("gate " + std::to_string(g) + " has no children");
    memo[g] = std::move(out);
    return *memo[g];
}

} // namespace detail

//! All tuples denoted by a gate, materialized. Exponential in general;
//! meant for tests, examples and point debugging.
inline Relation enumerate_gate(const Circuit& c, int g) {
    topo_order(c); // reject cyclic inputs before recursing
    std::vector<std::optional<Relation>> memo(c.num_gates());
    return detail::enumerate_into(c, g, memo);
}

//! The answer set of the whole circuit.
inline Relation enumerate(const Circuit& c) {
    if (c.empty()) return Relation(c.attributes()); // throws if no schema is known
    Relation r = enumerate_gate(c, c.root());
    if (!c.declared_attributes().empty()) {
        std::set<std::string> declared(c.declared_attributes().begin(),
                                       c.declared_attributes().end());
        if (declared != r.attribute_set())
            throw schema_error("declared circuit attributes do not match the root gate");
    }
    return r;
}

//! Number of denoted tuples, computed in one linear pass. Correct when
//! every union in the circuit is disjoint; overflow raises instead of
//! wrapping.
inline unsigned long long count_tuples(const Circuit& c) {
    if (c.empty()) return 0;
    std::vector<unsigned long long> n(c.num_gates(), 0);
    for (int g : topo_order(c)) {
        const Gate& gate = c.gate(g);
        switch (gate.kind) {
            case GateKind::Input:
                n[g] = 1;
                break;
            case GateKind::Union: {
                unsigned long long total = 0;
                for (int ch : gate.children)
                    if (__builtin_add_overflow(total, n[ch], &total))
                        throw numeric_error("tuple count overflow at gate " + std::to_string(g));
                n[g] = total;
                break;
            }
            case GateKind::Product: {
                unsigned long long total = 1;
                for (int ch : gate.children)
                    if (__builtin_mul_overflow(total, n[ch], &total))
                        throw numeric_error("tuple count overflow at gate " + std::to_string(g));
                n[g] = total;
                break;
            }
        }
    }
    return n[c.root()];
}

namespace detail {

//! accepts[g] = whether the restriction of t to the gate's attributes is
//! one of the gate's tuples.
inline std::vector<char> acceptance(const Circuit& c, const Tuple& t) {
    std::vector<char> accepts(c.num_gates(), false);
    for (int g : topo_order(c)) {
        const Gate& gate = c.gate(g);
        switch (gate.kind) {
            case GateKind::Input: {
                auto it = t.find(gate.attr);
                if (it == t.end())
                    throw schema_error("tuple is missing attribute '" + gate.attr + "'");
                accepts[g] = (it->second == gate.value);
                break;
            }
            case GateKind::Union: {
                bool any = false;
                for (int ch : gate.children) any = any || accepts[ch];
                accepts[g] = any;
                break;
            }
            case GateKind::Product: {
                bool all = true;
                for (int ch : gate.children) all = all && accepts[ch];
                accepts[g] = all;
                break;
            }
        }
    }
    return accepts;
}

} // namespace detail

//! Membership of a tuple in the circuit's answer set. The tuple must
//! cover every attribute mentioned by an input gate.
inline bool contains(const Circuit& c, const Tuple& t) {
    if (c.empty()) return false;
    return detail::acceptance(c, t)[c.root()];
}

//! Normal form: a unary union on top (its single in-edge is the output
//! edge), fan-in at most two everywhere, and at most one input gate per
//! attribute/value pair. The empty circuit counts as normalized.
inline bool is_normalized(const Circuit& c) {
    if (c.empty()) return true;
    const Gate& root = c.gate(c.root());
    if (root.kind != GateKind::Union || root.children.size() != 1) return false;
    std::set<std::pair<std::string, std::string>> inputs;
    for (const auto& g : c.gates()) {
        if (g.children.size() > 2) return false;
        if (g.kind == GateKind::Input && !inputs.emplace(g.attr, g.value).second) return false;
    }
    return true;
}

//! The edge feeding the root of a normalized circuit.
inline int output_edge(const Circuit& c) {
    if (c.empty()) throw validation_error("the empty circuit has no output edge");
    if (!is_normalized(c)) throw validation_error("output_edge needs a normalized circuit");
    return c.in_edges(c.root()).front();
}

//! Outcome of rewriting a circuit into normal form. edge_remap maps every
//! old edge id to the id of the edge playing its role afterwards.
struct NormalizeResult {
    Circuit circuit;
    std::vector<int> edge_remap;
};

//! Rewrite into normal form: duplicate input gates are merged, wide gates
//! are split into left-deep two-child chains of the same kind, and a unary
//! union is put on top unless one is already there. Denoted tuples are
//! unchanged; on a normalized circuit this is the identity.
inline NormalizeResult normalize(const Circuit& c) {
    if (is_normalized(c)) {
        std::vector<int> identity(c.num_edges());
        for (std::size_t i = 0; i < identity.size(); ++i) identity[i] = static_cast<int>(i);
        return {c, std::move(identity)};
    }

    std::vector<Gate> ws = c.gates();
    // Where each original edge currently lives: (workspace parent, slot).
    std::vector<std::pair<int, int>> loc(c.num_edges());
    for (std::size_t e = 0; e < c.num_edges(); ++e)
        loc[e] = {c.edge(static_cast<int>(e)).parent, c.edge(static_cast<int>(e)).pos};

    // Merge duplicate inputs into the smallest-id representative.
    std::map<std::pair<std::string, std::string>, int> rep;
    std::vector<int> target(ws.size());
    for (std::size_t g = 0; g < ws.size(); ++g) {
        target[g] = static_cast<int>(g);
        if (ws[g].kind == GateKind::Input) {
            auto [it, inserted] = rep.emplace(std::make_pair(ws[g].attr, ws[g].value), g);
            if (!inserted) target[g] = it->second;
        }
    }
    for (auto& g : ws)
        for (int& ch : g.children) ch = target[ch];
    int root = target[c.root()];

    // Split gates with more than two children into chains.
    const std::size_t n_orig = ws.size();
    for (std::size_t g = 0; g < n_orig; ++g) {
        const std::size_t k = ws[g].children.size();
        if (k <= 2) continue;
        std::vector<int> kids = ws[g].children;
        std::vector<int> slot_parent(k), slot_pos(k);
        int below = -1;
        for (std::size_t j = 0; j + 1 < k - 1; ++j) {
            Gate aux;
            aux.kind = ws[g].kind;
            aux.children = (j == 0) ? std::vector<int>{kids[0], kids[1]}
                                    : std::vector<int>{below, kids[j + 1]};
            int aux_id = static_cast<int>(ws.size());
            ws.push_back(std::move(aux));
            if (j == 0) {
                slot_parent[0] = aux_id;
                slot_pos[0] = 0;
                slot_parent[1] = aux_id;
                slot_pos[1] = 1;
            } else {
                slot_parent[j + 1] = aux_id;
                slot_pos[j + 1] = 1;
            }
            below = aux_id;
        }
        ws[g].children = {below, kids[k - 1]};
        slot_parent[k - 1] = static_cast<int>(g);
        slot_pos[k - 1] = 1;
        for (auto& l : loc) {
            if (l.first != static_cast<int>(g)) continue;
            l = {slot_parent[l.second], slot_pos[l.second]};
        }
    }

    // Sentinel output union, unless the root already is one.
    if (!(ws[root].kind == GateKind::Union && ws[root].children.size() == 1)) {
        Gate sentinel;
        sentinel.kind = GateKind::Union;
        sentinel.children = {root};
        root = static_cast<int>(ws.size());
        ws.push_back(std::move(sentinel));
    }

    // Drop gates that became unreachable (merged-away inputs) and compact.
    std::vector<char> reach(ws.size(), false);
    std::vector<int> stack{root};
    reach[root] = true;
    while (!stack.empty()) {
        int g = stack.back();
        stack.pop_back();
        for (int ch : ws[g].children)
            if (!reach[ch]) {
                reach[ch] = true;
                stack.push_back(ch);
            }
    }
    std::vector<int> new_id(ws.size(), -1);
    std::vector<Gate> out_gates;
    for (std::size_t g = 0; g < ws.size(); ++g) {
        if (!reach[g]) continue;
        new_id[g] = static_cast<int>(out_gates.size());
        out_gates.push_back(ws[g]);
    }
    for (auto& g : out_gates)
        for (int& ch : g.children) ch = new_id[ch];

    Circuit result(std::move(out_gates), new_id[root], c.declared_attributes());

    std::map<std::pair<int, int>, int> edge_at;
    for (std::size_t e = 0; e < result.num_edges(); ++e)
        edge_at[{result.edge(static_cast<int>(e)).parent, result.edge(static_cast<int>(e)).pos}] =
            static_cast<int>(e);
    std::vector<int> remap(c.num_edges(), -1);
    for (std::size_t e = 0; e < c.num_edges(); ++e) {
        auto [p, pos] = loc[e];
        if (new_id[p] >= 0) remap[e] = edge_at.at({new_id[p], pos});
    }
    return {std::move(result), std::move(remap)};
}

//! One structural problem found by validate().
struct Violation {
    std::string rule;
    int gate = -1;
    std::string message;
};

struct ValidationReport {
    bool ok = true;
    std::vector<Violation> violations;
    //! Set only when the semantic disjointness check was requested.
    std::optional<bool> disjoint_unions;

    void add(std::string rule, int gate, std::string message) {
        ok = false;
        violations.push_back({std::move(rule), gate, std::move(message)});
    }
};

//! Structural checks: acyclicity, a single sink (the root), input gates
//! without children, nonempty fan-in elsewhere, equal child attribute
//! sets under unions and pairwise disjoint ones under products. With
//! `check_disjointness` the union children are additionally enumerated
//! and intersected, which is exponential and off by default.
inline ValidationReport validate(const Circuit& c, bool check_disjointness = false) {
    ValidationReport report;
    if (c.empty()) {
        if (check_disjointness) report.disjoint_unions = true;
        return report;
    }

    try {
        topo_order(c);
    } catch (const validation_error&) {
        report.add("acyclic", -1, "the gate graph contains a cycle");
        return report;
    }

    for (std::size_t g = 0; g < c.num_gates(); ++g) {
        const Gate& gate = c.gate(static_cast<int>(g));
        if (gate.kind == GateKind::Input) {
            if (!gate.children.empty())
                report.add("input-leaf", static_cast<int>(g), "input gate has children");
            if (gate.attr.empty())
                report.add("input-attr", static_cast<int>(g), "input gate without an attribute");
        } else if (gate.children.empty()) {
            report.add("fan-in", static_cast<int>(g),
                       gate_kind_to_string(gate.kind) + " gate has no children");
        }
        bool is_root = static_cast<int>(g) == c.root();
        if (c.out_edges(static_cast<int>(g)).empty() != is_root)
            report.add("single-sink", static_cast<int>(g),
                       is_root ? "the root gate has outgoing edges"
                               : "gate is a sink but not the root");
    }
    if (!report.ok) return report;

    auto vars = gate_vars(c);
    for (std::size_t g = 0; g < c.num_gates(); ++g) {
        const Gate& gate = c.gate(static_cast<int>(g));
        if (gate.kind == GateKind::Union) {
            for (int ch : gate.children)
                if (vars[ch] != vars[g])
                    report.add("union-vars", static_cast<int>(g),
                               "union children must share one attribute set");
        } else if (gate.kind == GateKind::Product) {
            std::set<std::string> seen;
            for (int ch : gate.children) {
                for (const auto& a : vars[ch]) {
                    if (!seen.insert(a).second)
                        report.add("product-vars", static_cast<int>(g),
                                   "product children overlap on attribute '" + a + "'");
                }
            }
        }
    }

    if (check_disjointness && report.ok) {
        bool disjoint = true;
        for (std::size_t g = 0; g < c.num_gates() && disjoint; ++g) {
            const Gate& gate = c.gate(static_cast<int>(g));
            if (gate.kind != GateKind::Union || gate.children.size() < 2) continue;
            std::set<Tuple> seen;
            for (int ch : gate.children) {
                Relation sub = enumerate_gate(c, ch);
                for (const auto& t : sub.tuples()) {
                    if (!seen.insert(t).second) {
                        report.add("disjoint-union", static_cast<int>(g),
                                   "children overlap on tuple " + tuple_to_string(t));
                        disjoint = false;
                        break;
                    }
                }
                if (!disjoint) break;
            }
        }
        report.disjoint_unions = disjoint;
    }
    return report;
}

//! The witness subgraph for one member tuple: the root, every accepting
//! child of a member gate, and the edges between them.
struct ProofTree {
    std::set<int> gates;
    std::set<int> edges;
};

//! Top-down witness construction. Requires a normalized circuit and a
//! member tuple.
inline ProofTree proof_tree(const Circuit& c, const Tuple& t) {
    if (!is_normalized(c)) throw validation_error("proof trees need a normalized circuit");
    if (c.empty() || !contains(c, t))
        throw membership_error("tuple " + tuple_to_string(t) + " is not in the circuit");
    auto accepts = detail::acceptance(c, t);
    ProofTree p;
    std::vector<int> queue{c.root()};
    p.gates.insert(c.root());
    while (!queue.empty()) {
        int g = queue.back();
        queue.pop_back();
        for (int e : c.in_edges(g)) {
            int ch = c.edge(e).child;
            if (!accepts[ch]) continue;
            p.edges.insert(e);
            if (p.gates.insert(ch).second) queue.push_back(ch);
        }
    }
    return p;
}

//! The tuples whose proof tree uses a given edge. Materializes the full
//! answer set; test-scale only.
inline Relation edge_relation(const Circuit& c, int e) {
    c.edge(e);
    Relation all = enumerate(c);
    Relation out(all.attributes());
    for (const auto& t : all.tuples())
        if (proof_tree(c, t).edges.count(e)) out.insert(t);
    return out;
}

//! JSON form:
//! {"attributes": [...], "gates": [{"id":0,"kind":"input","attr":"x",
//!  "value":"1"}, {"id":1,"kind":"union","children":[0]}], "root": 1}
//! Ids may be arbitrary distinct integers on input; the array order
//! defines the internal numbering. On output ids equal array positions.
inline nlohmann::json circuit_to_json(const Circuit& c) {
    nlohmann::json j;
    j["attributes"] = c.attributes();
    auto gates = nlohmann::json::array();
    for (std::size_t g = 0; g < c.num_gates(); ++g) {
        const Gate& gate = c.gate(static_cast<int>(g));
        nlohmann::json jg;
        jg["id"] = g;
        jg["kind"] = gate_kind_to_string(gate.kind);
        if (gate.kind == GateKind::Input) {
            jg["attr"] = gate.attr;
            jg["value"] = gate.value;
        } else {
            jg["children"] = gate.children;
        }
        gates.push_back(std::move(jg));
    }
    j["gates"] = std::move(gates);
    if (c.empty())
        j["root"] = nullptr;
    else
        j["root"] = c.root();
    return j;
}

inline Circuit circuit_from_json(const nlohmann::json& j) try {
    if (!j.is_object() || !j.contains("gates") || !j.contains("root"))
        throw parse_error("circuit JSON needs \"gates\" and \"root\"");
    std::vector<std::string> attrs;
    if (j.contains("attributes"))
        for (const auto& a : j.at("attributes")) attrs.push_back(a.get<std::string>());

    std::map<long long, int> index_of;
    std::vector<std::vector<long long>> child_ids;
    std::vector<Gate> gates;
    for (const auto& jg : j.at("gates")) {
        std::string where = "gate #" + std::to_string(gates.size());
        if (!jg.contains("id") || !jg.at("id").is_number_integer())
            throw parse_error(where + ": missing integer \"id\"");
        long long id = jg.at("id").get<long long>();
        if (!index_of.emplace(id, static_cast<int>(gates.size())).second)
            throw parse_error(where + ": duplicate gate id " + std::to_string(id));
        Gate g;
        g.kind = gate_kind_from_string(jg.value("kind", ""));
        std::vector<long long> kids;
        if (g.kind == GateKind::Input) {
            if (!jg.contains("attr") || !jg.contains("value"))
                throw parse_error(where + ": input gates need \"attr\" and \"value\"");
            g.attr = jg.at("attr").get<std::string>();
            g.value = detail::json_value_token(jg.at("value"), where);
            if (jg.contains("children") && !jg.at("children").empty())
                throw parse_error(where + ": input gates cannot have children");
        } else {
            if (!jg.contains("children") || !jg.at("children").is_array())
                throw parse_error(where + ": " + gate_kind_to_string(g.kind) +
                                  " gates need a \"children\" array");
            for (const auto& ch : jg.at("children")) {
                if (!ch.is_number_integer())
                    throw parse_error(where + ": children must be gate ids");
                kids.push_back(ch.get<long long>());
            }
        }
        child_ids.push_back(std::move(kids));
        gates.push_back(std::move(g));
    }
    for (std::size_t g = 0; g < gates.size(); ++g) {
        for (long long id : child_ids[g]) {
            auto it = index_of.find(id);
            if (it == index_of.end())
                throw parse_error("gate #" + std::to_string(g) + ": unknown child id " +
                                  std::to_string(id));
            gates[g].children.push_back(it->second);
        }
    }

    int root = -1;
    if (!j.at("root").is_null()) {
        long long root_id = j.at("root").get<long long>();
        auto it = index_of.find(root_id);
        if (it == index_of.end())
            throw parse_error("root id " + std::to_string(root_id) + " does not name a gate");
        root = it->second;
    } else if (!gates.empty()) {
        throw parse_error("\"root\" may only be null for a circuit without gates");
    }
    return Circuit(std::move(gates), root, std::move(attrs));
} catch (const nlohmann::json::exception& e) {
    throw parse_error(std::string("malformed circuit JSON: ") + e.what());
}

} // namespace factlp
