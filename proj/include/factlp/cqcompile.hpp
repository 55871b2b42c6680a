#pragma once

#include <algorithm>
#include <cctype>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "factlp/circuit.hpp"
#include "factlp/errors.hpp"
#include "factlp/relational.hpp"

namespace factlp {

//! One body atom: a relation name applied to variables. Variables may
//! repeat within an atom, which acts as an equality filter.
struct Atom {
    std::string relation;
    std::vector<std::string> vars;

    std::set<std::string> var_set() const { return {vars.begin(), vars.end()}; }

    std::string to_string() const {
        std::string s = relation + "(";
        for (std::size_t i = 0; i < vars.size(); ++i) {
            if (i) s += ", ";
            s += vars[i];
        }
        return s + ")";
    }
};

//! A conjunctive query. Body variables missing from the head are
//! existentially quantified.
struct ConjunctiveQuery {
    std::string name;
    std::vector<std::string> head;
    std::vector<Atom> atoms;

    //! All body variables in order of first occurrence.
    std::vector<std::string> variables() const {
        std::vector<std::string> out;
        std::set<std::string> seen;
        for (const auto& a : atoms)
            for (const auto& v : a.vars)
                if (seen.insert(v).second) out.push_back(v);
        return out;
    }

    std::set<std::string> existential_variables() const {
        std::set<std::string> out;
        std::set<std::string> head_set(head.begin(), head.end());
        for (const auto& v : variables())
            if (!head_set.count(v)) out.insert(v);
        return out;
    }

    void validate() const {
        if (name.empty()) throw validation_error("query needs a name");
        if (atoms.empty()) throw validation_error("query needs at least one body atom");
        if (head.empty()) throw validation_error("query head needs at least one variable");
        std::set<std::string> head_seen;
        for (const auto& v : head)
            if (!head_seen.insert(v).second)
                throw validation_error("head variable '" + v + "' repeats");
        std::set<std::string> body;
        for (const auto& a : atoms) {
            if (a.vars.empty())
                throw validation_error("atom " + a.relation + " has no variables");
            for (const auto& v : a.vars) body.insert(v);
        }
        for (const auto& v : head)
            if (!body.count(v))
                throw validation_error("head variable '" + v + "' does not occur in the body");
    }
};

namespace detail {

//! Character-level scanner that tracks positions for error messages.
class QueryScanner {
public:
    explicit QueryScanner(std::string_view text) : text_(text) {}

    std::string where() const {
        return "line " + std::to_string(line_) + ", col " + std::to_string(col_);
    }

    void skip_ws() {
        while (pos_ < text_.size() &&
               (text_[pos_] == ' ' || text_[pos_] == '\t' || text_[pos_] == '\n' ||
                text_[pos_] == '\r'))
            advance();
    }

    bool eof() {
        skip_ws();
        return pos_ >= text_.size();
    }

    bool try_consume(char c) {
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == c) {
            advance();
            return true;
        }
        return false;
    }

    void expect(char c) {
        skip_ws();
        if (pos_ >= text_.size())
            throw parse_error(where() + ": expected '" + std::string(1, c) + "', found end of input");
        if (text_[pos_] != c)
            throw parse_error(where() + ": expected '" + std::string(1, c) + "', found '" +
                              std::string(1, text_[pos_]) + "'");
        advance();
    }

    void expect_implies() {
        skip_ws();
        if (pos_ + 1 >= text_.size() || text_[pos_] != ':' || text_[pos_ + 1] != '-')
            throw parse_error(where() + ": expected ':-' between head and body");
        advance();
        advance();
    }

    std::string identifier(const std::string& what) {
        skip_ws();
        if (pos_ >= text_.size())
            throw parse_error(where() + ": expected " + what + ", found end of input");
        char c = text_[pos_];
        if (!std::isalpha(static_cast<unsigned char>(c)) && c != '_')
            throw parse_error(where() + ": expected " + what + ", found '" + std::string(1, c) +
                              "'");
        std::string out;
        while (pos_ < text_.size() &&
               (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
            out += text_[pos_];
            advance();
        }
        return out;
    }

private:
    void advance() {
        if (text_[pos_] == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        ++pos_;
    }

    std::string_view text_;
    std::size_t pos_ = 0;
    int line_ = 1, col_ = 1;
};

} // namespace detail

//! Parse "Q(p, r) :- edge(p, x), node(x, r)." with an optional final dot.
inline ConjunctiveQuery parse_query(const std::string& text) {
    detail::QueryScanner s(text);
    ConjunctiveQuery q;
    q.name = s.identifier("a query name");
    s.expect('(');
    if (!s.try_consume(')')) {
        do {
            q.head.push_back(s.identifier("a head variable"));
        } while (s.try_consume(','));
        s.expect(')');
    }
    s.expect_implies();
    do {
        Atom a;
        a.relation = s.identifier("a relation name");
        s.expect('(');
        if (!s.try_consume(')')) {
            do {
                a.vars.push_back(s.identifier("a variable"));
            } while (s.try_consume(','));
            s.expect(')');
        }
        q.atoms.push_back(std::move(a));
    } while (s.try_consume(','));
    s.try_consume('.');
    if (!s.eof()) throw parse_error(s.where() + ": trailing input after the query");
    q.validate();
    return q;
}

//! The query's hypergraph: body variables as vertices, atom variable sets
//! as hyperedges.
struct Hypergraph {
    std::vector<std::string> vertices;
    std::vector<std::set<std::string>> edges;
};

inline Hypergraph hypergraph(const ConjunctiveQuery& q) {
    Hypergraph h;
    h.vertices = q.variables();
    for (const auto& a : q.atoms) h.edges.push_back(a.var_set());
    return h;
}

//! A rooted tree over the body atoms (one node per atom index).
struct JoinTree {
    int root = -1;
    std::vector<int> parent; // -1 at the root
};

//! Every variable must induce a connected subtree.
inline bool has_running_intersection(const ConjunctiveQuery& q, const JoinTree& t) {
    if (t.parent.size() != q.atoms.size()) return false;
    for (const auto& v : hypergraph(q).vertices) {
        int nodes = 0, inner_edges = 0;
        std::vector<char> holds(q.atoms.size(), false);
        for (std::size_t i = 0; i < q.atoms.size(); ++i)
            if (q.atoms[i].var_set().count(v)) {
                holds[i] = true;
                ++nodes;
            }
        for (std::size_t i = 0; i < q.atoms.size(); ++i)
            if (holds[i] && t.parent[i] >= 0 && holds[t.parent[i]]) ++inner_edges;
        if (nodes - inner_edges != 1) return false;
    }
    return true;
}

//! Ear removal. Atoms whose non-exclusive variables fit inside another
//! atom are removed one by one and recorded as children of their witness;
//! both choices take the smallest index, so the tree is deterministic.
//! Throws not_acyclic_error with the irreducible atoms when stuck.
inline JoinTree gyo_join_tree(const ConjunctiveQuery& q) {
    q.validate();
    const std::size_t n = q.atoms.size();
    std::vector<std::set<std::string>> vars(n);
    for (std::size_t i = 0; i < n; ++i) vars[i] = q.atoms[i].var_set();

    JoinTree t;
    t.parent.assign(n, -1);
    std::vector<char> alive(n, true);
    std::size_t remaining = n;
    bool changed = true;
    while (remaining > 1 && changed) {
        changed = false;
        for (std::size_t e = 0; e < n && remaining > 1; ++e) {
            if (!alive[e]) continue;
            std::set<std::string> shared;
            for (const auto& v : vars[e]) {
                for (std::size_t o = 0; o < n; ++o) {
                    if (o == e || !alive[o]) continue;
                    if (vars[o].count(v)) {
                        shared.insert(v);
                        break;
                    }
                }
            }
            for (std::size_t w = 0; w < n; ++w) {
                if (w == e || !alive[w]) continue;
                if (std::includes(vars[w].begin(), vars[w].end(), shared.begin(), shared.end())) {
                    t.parent[e] = static_cast<int>(w);
                    alive[e] = false;
                    --remaining;
                    changed = true;
                    break;
                }
            }
        }
    }
    if (remaining > 1) {
        std::vector<std::string> residual;
        for (std::size_t i = 0; i < n; ++i)
            if (alive[i]) residual.push_back(q.atoms[i].to_string());
        throw not_acyclic_error("query is not alpha-acyclic; ear removal got stuck with " +
                                    std::to_string(residual.size()) + " atoms",
                                residual);
    }
    for (std::size_t i = 0; i < n; ++i)
        if (alive[i]) t.root = static_cast<int>(i);
    return t;
}

namespace detail {

//! The atom's relation with columns renamed to the atom's variables.
//! Repeated variables filter rows and collapse to one column.
inline Relation bind_atom(const Atom& atom, const Database& db) {
    if (!db.has(atom.relation))
        throw compile_error("unknown relation '" + atom.relation + "' in atom " + atom.to_string());
    const Relation& rel = db.get(atom.relation);
    if (rel.attributes().size() != atom.vars.size())
        throw compile_error("atom " + atom.to_string() + " has arity " +
                            std::to_string(atom.vars.size()) + " but relation '" + atom.relation +
                            "' has arity " + std::to_string(rel.attributes().size()));
    std::vector<std::string> unique_vars;
    for (const auto& v : atom.vars)
        if (std::find(unique_vars.begin(), unique_vars.end(), v) == unique_vars.end())
            unique_vars.push_back(v);
    Relation out(unique_vars);
    for (const auto& t : rel.tuples()) {
        Tuple bound;
        bool ok = true;
        for (std::size_t p = 0; p < atom.vars.size() && ok; ++p) {
            const Value& val = t.at(rel.attributes()[p]);
            auto [it, inserted] = bound.emplace(atom.vars[p], val);
            if (!inserted && it->second != val) ok = false;
        }
        if (ok) out.insert(std::move(bound));
    }
    return out;
}

//! Keep the rows of `a` that agree with some row of `b` on the shared
//! attributes.
inline Relation semijoin(const Relation& a, const Relation& b) {
    std::set<std::string> shared;
    for (const auto& x : a.attributes())
        if (b.has_attribute(x)) shared.insert(x);
    Relation out(a.attributes());
    std::set<Tuple> keys;
    for (const auto& t : b.tuples()) keys.insert(tuple_restrict(t, shared));
    for (const auto& t : a.tuples())
        if (keys.count(tuple_restrict(t, shared))) out.insert(t);
    return out;
}

inline void check_join_tree(const ConjunctiveQuery& q, const JoinTree& t) {
    const std::size_t n = q.atoms.size();
    if (t.parent.size() != n)
        throw compile_error("join tree has " + std::to_string(t.parent.size()) +
                            " nodes for a query with " + std::to_string(n) + " atoms");
    if (t.root < 0 || t.root >= static_cast<int>(n) || t.parent[t.root] != -1)
        throw compile_error("join tree root is not a parentless node");
    for (std::size_t i = 0; i < n; ++i) {
        if (t.parent[i] == -1 && static_cast<int>(i) != t.root)
            throw compile_error("join tree has a second root at atom " + std::to_string(i));
        if (t.parent[i] < -1 || t.parent[i] >= static_cast<int>(n))
            throw compile_error("join tree parent of atom " + std::to_string(i) +
                                " is out of range");
    }
    // With parents in range and a unique root, walking up can only fail by
    // looping, which the step counter catches.
    for (std::size_t i = 0; i < n; ++i) {
        int steps = 0;
        for (int a = static_cast<int>(i); a != t.root; a = t.parent[a])
            if (++steps > static_cast<int>(n))
                throw compile_error("join tree contains a cycle");
    }
    if (!has_running_intersection(q, t))
        throw compile_error("join tree violates the running intersection property");
}

} // namespace detail

//! Join all bound atoms and project the existential variables away.
//! The reference evaluator: always correct, never factorized.
inline Relation eval_naive(const ConjunctiveQuery& q, const Database& db) {
    q.validate();
    std::optional<Relation> acc;
    for (const auto& a : q.atoms) {
        Relation bound = detail::bind_atom(a, db);
        acc = acc ? natural_join(*acc, bound) : std::move(bound);
    }
    auto exist = q.existential_variables();
    if (exist.empty()) return *acc;
    return project_out(*acc, exist);
}

//! Compile the query against the database into a circuit over all body
//! variables whose answer set is the full (unprojected) join. The tuples
//! come out grouped along the join tree: one branch per root-bag tuple,
//! with subtrees shared between branches that agree on the connecting
//! key. Dangling rows are removed by a full semijoin reduction first, so
//! every branch really contributes answers.
inline Circuit compile(const ConjunctiveQuery& q, const Database& db, const JoinTree& t) {
    q.validate();
    detail::check_join_tree(q, t);
    const std::size_t n = q.atoms.size();

    std::vector<Relation> bags;
    bags.reserve(n);
    for (const auto& a : q.atoms) bags.push_back(detail::bind_atom(a, db));

    std::vector<std::vector<int>> children(n);
    for (std::size_t i = 0; i < n; ++i)
        if (t.parent[i] >= 0) children[t.parent[i]].push_back(static_cast<int>(i));

    // Parents-first order; reversed, it gives children before parents.
    std::vector<int> order;
    std::vector<int> stack{t.root};
    while (!stack.empty()) {
        int a = stack.back();
        stack.pop_back();
        order.push_back(a);
        for (int c : children[a]) stack.push_back(c);
    }

    // Yannakakis reduction: bottom-up, then top-down.
    for (auto it = order.rbegin(); it != order.rend(); ++it)
        if (t.parent[*it] >= 0)
            bags[t.parent[*it]] = detail::semijoin(bags[t.parent[*it]], bags[*it]);
    for (int a : order)
        for (int c : children[a]) bags[c] = detail::semijoin(bags[c], bags[a]);

    if (bags[t.root].empty()) return Circuit({}, -1, q.variables());

    // Connecting keys and the variables each subtree is responsible for.
    std::vector<std::set<std::string>> key(n), subtree_vars(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (t.parent[i] >= 0) {
            for (const auto& v : bags[i].attributes())
                if (bags[t.parent[i]].has_attribute(v)) key[i].insert(v);
        }
        subtree_vars[i] = bags[i].attribute_set();
    }
    for (auto it = order.rbegin(); it != order.rend(); ++it)
        if (t.parent[*it] >= 0)
            subtree_vars[t.parent[*it]].insert(subtree_vars[*it].begin(),
                                               subtree_vars[*it].end());

    // Rows of each bag grouped by their key assignment.
    std::vector<std::map<Tuple, std::vector<Tuple>>> by_key(n);
    for (std::size_t i = 0; i < n; ++i)
        for (const auto& row : bags[i].tuples())
            by_key[i][tuple_restrict(row, key[i])].push_back(row);

    std::vector<Gate> gates;
    std::map<std::pair<std::string, std::string>, int> input_of;
    auto input_gate = [&](const std::string& attr, const Value& v) {
        auto [it, inserted] = input_of.emplace(std::make_pair(attr, v), gates.size());
        if (inserted) gates.push_back(Gate::input(attr, v));
        return it->second;
    };

    // One gate per (atom, key assignment), built on demand.
    std::map<std::pair<int, Tuple>, int> memo;
    auto build = [&](auto&& self, int atom, const Tuple& key_val) -> int {
        auto found = memo.find({atom, key_val});
        if (found != memo.end()) return found->second;
        auto rows = by_key[atom].find(key_val);
        if (rows == by_key[atom].end())
            throw compile_error("internal: reduction left a dangling key at atom " +
                                std::to_string(atom));
        std::vector<int> branches;
        for (const Tuple& row : rows->second) {
            std::vector<int> parts;
            for (const auto& v : bags[atom].attributes())
                if (!key[atom].count(v)) parts.push_back(input_gate(v, row.at(v)));
            for (int c : children[atom]) {
                std::set<std::string> contributes;
                for (const auto& v : subtree_vars[c])
                    if (!key[c].count(v)) contributes.insert(v);
                if (contributes.empty()) continue; // pure filter, already applied
                parts.push_back(self(self, c, tuple_restrict(row, key[c])));
            }
            int branch = parts.size() == 1 ? parts.front() : [&] {
                gates.push_back(Gate::product(parts));
                return static_cast<int>(gates.size()) - 1;
            }();
            branches.push_back(branch);
        }
        int g = branches.size() == 1 ? branches.front() : [&] {
            gates.push_back(Gate::gate_union(branches));
            return static_cast<int>(gates.size()) - 1;
        }();
        memo.emplace(std::make_pair(atom, key_val), g);
        return g;
    };
    int root_gate = build(build, t.root, Tuple{});
    return Circuit(std::move(gates), root_gate, q.variables());
}

inline Circuit compile(const ConjunctiveQuery& q, const Database& db) {
    return compile(q, db, gyo_join_tree(q));
}

} // namespace factlp
