#pragma once

#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "factlp/circuit.hpp"
#include "factlp/errors.hpp"
#include "factlp/numeric.hpp"
#include "factlp/relational.hpp"

namespace factlp {

//! A weight per answer tuple. Tuples absent from the map carry weight 0.
using TupleWeighting = std::map<Tuple, double>;

//! A weight per circuit edge, indexed by canonical edge id.
using EdgeWeighting = std::vector<double>;

struct SoundnessReport {
    bool sound = true;
    int gate = -1;
    std::string message;
};

//! An edge weighting is sound when it is nonnegative and conserves flow:
//! at every non-output union the in-flow equals the out-flow, at every
//! non-output product all in-edges carry the out-flow, and at an output
//! product the in-edges still agree with each other. Sound weightings are
//! exactly the ones that arise by spreading tuple weights along proof
//! trees.
inline SoundnessReport check_soundness(const Circuit& c, const EdgeWeighting& w,
                                       double tol = kFlowTol) {
    if (w.size() != c.num_edges())
        throw index_error("edge weighting has " + std::to_string(w.size()) + " entries, circuit has " +
                          std::to_string(c.num_edges()) + " edges");
    SoundnessReport report;
    auto fail = [&](int gate, std::string message) {
        report.sound = false;
        report.gate = gate;
        report.message = std::move(message);
        return report;
    };
    for (std::size_t e = 0; e < w.size(); ++e) {
        if (!std::isfinite(w[e]))
            throw numeric_error("edge e" + std::to_string(e) + " has a non-finite weight");
        if (w[e] < -tol)
            return fail(c.edge(static_cast<int>(e)).parent,
                        "edge e" + std::to_string(e) + " is negative");
    }
    for (std::size_t g = 0; g < c.num_gates(); ++g) {
        const Gate& gate = c.gate(static_cast<int>(g));
        if (gate.kind == GateKind::Input) continue;
        bool is_output = static_cast<int>(g) == c.root();
        const auto& in = c.in_edges(static_cast<int>(g));
        double out_flow = 0.0;
        for (int e : c.out_edges(static_cast<int>(g))) out_flow += w[e];
        if (gate.kind == GateKind::Union) {
            if (is_output) continue;
            double in_flow = 0.0;
            for (int e : in) in_flow += w[e];
            if (!nearly_equal(in_flow, out_flow, tol))
                return fail(static_cast<int>(g), "union gate " + std::to_string(g) +
                                                     " does not conserve flow");
        } else {
            for (std::size_t p = 0; p + 1 < in.size(); ++p)
                if (!nearly_equal(w[in[p]], w[in[p + 1]], tol))
                    return fail(static_cast<int>(g), "product gate " + std::to_string(g) +
                                                         " has unequal in-edges");
            if (!is_output && !nearly_equal(w[in.front()], out_flow, tol))
                return fail(static_cast<int>(g), "product gate " + std::to_string(g) +
                                                     " does not conserve flow");
        }
    }
    return report;
}

inline bool is_sound(const Circuit& c, const EdgeWeighting& w, double tol = kFlowTol) {
    return check_soundness(c, w, tol).sound;
}

//! Push tuple weights down into the circuit: each edge receives the total
//! weight of the tuples whose proof tree uses it. The result is always
//! sound. Requires a normalized circuit; every weighted tuple must be a
//! member. Slightly negative weights (solver noise) are clamped to zero.
inline EdgeWeighting induce_edge_weighting(const Circuit& c, const TupleWeighting& omega) {
    if (!is_normalized(c))
        throw validation_error("inducing an edge weighting needs a normalized circuit");
    EdgeWeighting w(c.num_edges(), 0.0);
    for (const auto& [t, weight] : omega) {
        if (!std::isfinite(weight))
            throw numeric_error("tuple " + tuple_to_string(t) + " has a non-finite weight");
        if (weight < -kFlowTol)
            throw validation_error("tuple " + tuple_to_string(t) + " has a negative weight");
        ProofTree p = proof_tree(c, t); // throws membership_error for non-members
        double v = weight < 0.0 ? 0.0 : weight;
        for (int e : p.edges) w[e] += v;
    }
    return w;
}

namespace detail {

//! ω[e](τ) for one proof-tree path, given the values already computed for
//! the in-edges of the gate below e. `denominator` guards against dead
//! branches: below kZeroTol the whole branch carries no weight.
struct EdgeTableBuilder {
    const Circuit& c;
    const EdgeWeighting& w;

    //! Per-gate member tuples, discovered bottom-up alongside the tables.
    std::vector<std::vector<Tuple>> members;
    std::vector<std::set<std::string>> vars;
    //! tables[e] maps each member tuple of edge e's lower gate to ω[e].
    std::map<int, TupleWeighting> tables;

    explicit EdgeTableBuilder(const Circuit& circuit, const EdgeWeighting& weights)
        : c(circuit), w(weights), members(circuit.num_gates()), vars(gate_vars(circuit)) {}

    void build() {
        for (int g : topo_order(c)) {
            fill_members(g);
            for (int e : c.out_edges(g)) fill_table(g, e);
        }
    }

  private:
    void fill_members(int g) {
        const Gate& gate = c.gate(g);
        if (gate.kind == GateKind::Input) {
            members[g].push_back({{gate.attr, gate.value}});
        } else if (gate.kind == GateKind::Union) {
            std::set<Tuple> seen;
            for (int ch : gate.children)
                for (const auto& t : members[ch])
                    if (seen.insert(t).second) members[g].push_back(t);
        } else {
            std::vector<Tuple> acc{Tuple{}};
            for (int ch : gate.children) {
                std::vector<Tuple> next;
                for (const auto& base : acc)
                    for (const auto& t : members[ch]) next.push_back(tuple_merge(base, t));
                acc = std::move(next);
            }
            members[g] = std::move(acc);
        }
    }

    void fill_table(int g, int e) {
        const Gate& gate = c.gate(g);
        TupleWeighting table;
        if (gate.kind == GateKind::Input) {
            table[members[g].front()] = w[e];
        } else if (gate.kind == GateKind::Union) {
            double denom = 0.0;
            const auto& in = c.in_edges(g);
            for (int f : in) denom += w[f];
            for (const auto& t : members[g]) {
                double value = 0.0;
                if (denom > kZeroTol) {
                    for (int f : in) {
                        auto it = tables[f].find(t);
                        if (it != tables[f].end()) {
                            value = w[e] * it->second / denom;
                            break;
                        }
                    }
                }
                table[t] = value;
            }
        } else {
            const auto& in = c.in_edges(g);
            bool dead = false;
            for (int f : in)
                if (w[f] <= kZeroTol) dead = true;
            for (const auto& t : members[g]) {
                double value = 0.0;
                if (!dead) {
                    value = w[e];
                    for (int f : in) {
                        int ch = c.edge(f).child;
                        value *= tables[f].at(tuple_restrict(t, vars[ch])) / w[f];
                    }
                }
                table[t] = value;
            }
        }
        tables[e] = std::move(table);
    }
};

inline double tuple_weight_unchecked(const Circuit& c, const EdgeWeighting& w, const Tuple& t) {
    ProofTree p = proof_tree(c, t);
    std::map<int, double> val; // ω value carried on each proof-tree gate's out-edge
    for (int g : topo_order(c)) {
        if (!p.gates.count(g) || g == c.root()) continue;
        int out = -1;
        for (int e : c.out_edges(g))
            if (p.edges.count(e)) out = e;
        const Gate& gate = c.gate(g);
        double v = 0.0;
        if (gate.kind == GateKind::Input) {
            v = w[out];
        } else if (gate.kind == GateKind::Union) {
            double denom = 0.0;
            for (int f : c.in_edges(g)) denom += w[f];
            if (denom > kZeroTol) {
                for (int f : c.in_edges(g))
                    if (p.edges.count(f)) v = w[out] * val.at(c.edge(f).child) / denom;
            }
        } else {
            bool dead = false;
            for (int f : c.in_edges(g))
                if (w[f] <= kZeroTol) dead = true;
            if (!dead) {
                v = w[out];
                for (int f : c.in_edges(g)) v *= val.at(c.edge(f).child) / w[f];
            }
        }
        val[g] = v;
    }
    return val.at(c.edge(output_edge(c)).child);
}

} // namespace detail

//! The full per-edge weight tables of a sound weighting: tables[e] maps
//! every member tuple of the gate below e to its share of w[e]. The table
//! at the output edge is the reconstructed tuple weighting. Exponential
//! in general; test scale only.
inline std::map<int, TupleWeighting> reconstruct_table(const Circuit& c, const EdgeWeighting& w,
                                                       double tol = kFlowTol) {
    if (!is_normalized(c))
        throw validation_error("reconstruction needs a normalized circuit");
    SoundnessReport report = check_soundness(c, w, tol);
    if (!report.sound) throw soundness_error(report.message);
    detail::EdgeTableBuilder builder(c, w);
    builder.build();
    return std::move(builder.tables);
}

//! The reconstructed weight of one member tuple, computed along its proof
//! tree in time linear in the circuit.
inline double tuple_weight(const Circuit& c, const EdgeWeighting& w, const Tuple& t,
                           double tol = kFlowTol) {
    if (!is_normalized(c))
        throw validation_error("reconstruction needs a normalized circuit");
    SoundnessReport report = check_soundness(c, w, tol);
    if (!report.sound) throw soundness_error(report.message);
    return detail::tuple_weight_unchecked(c, w, t);
}

//! The reconstructed weight of every member tuple. Inducing the result
//! back onto the edges returns exactly the input weighting (up to
//! rounding): reconstruction inverts induce_edge_weighting on sound
//! weightings.
inline TupleWeighting reconstruct_all(const Circuit& c, const EdgeWeighting& w,
                                      double tol = kFlowTol) {
    if (!is_normalized(c))
        throw validation_error("reconstruction needs a normalized circuit");
    SoundnessReport report = check_soundness(c, w, tol);
    if (!report.sound) throw soundness_error(report.message);
    TupleWeighting out;
    Relation all = enumerate(c);
    for (const auto& t : all.tuples()) out[t] = detail::tuple_weight_unchecked(c, w, t);
    return out;
}

//! Sum tuple weights over the attributes in `removed`: the weighting of
//! the existential projection. Every weighted tuple must carry exactly
//! the same scope and contain all removed attributes.
inline TupleWeighting project_weighting(const TupleWeighting& omega,
                                        const std::set<std::string>& removed) {
    TupleWeighting out;
    for (const auto& [t, weight] : omega) {
        std::set<std::string> keep;
        for (const auto& [a, v] : t) {
            if (!removed.count(a)) keep.insert(a);
        }
        for (const auto& a : removed)
            if (!t.count(a))
                throw schema_error("tuple " + tuple_to_string(t) + " lacks projected attribute '" +
                                   a + "'");
        if (keep.empty())
            throw schema_error("projection would remove every attribute");
        out[tuple_restrict(t, keep)] += weight;
    }
    return out;
}

//! Undo a projection against concrete data: spread each projected weight
//! uniformly over the tuples of `r` that extend it. Keys of `omega` must
//! be projections of tuples of `r`; the result sums to the same total and
//! projects back to `omega`.
inline TupleWeighting lift_weighting(const TupleWeighting& omega, const Relation& r,
                                     const std::set<std::string>& removed) {
    std::set<std::string> keep;
    for (const auto& a : r.attributes()) {
        if (!removed.count(a)) keep.insert(a);
    }
    for (const auto& a : removed)
        if (!r.has_attribute(a))
            throw schema_error("relation lacks projected attribute '" + a + "'");
    if (keep.empty()) throw schema_error("projection would remove every attribute");

    std::map<Tuple, std::size_t> group_size;
    for (const auto& t : r.tuples()) group_size[tuple_restrict(t, keep)] += 1;
    for (const auto& [t, weight] : omega)
        if (!group_size.count(t))
            throw membership_error("tuple " + tuple_to_string(t) +
                                   " is not a projection of any relation tuple");

    TupleWeighting out;
    for (const auto& t : r.tuples()) {
        Tuple key = tuple_restrict(t, keep);
        auto it = omega.find(key);
        double w = (it == omega.end()) ? 0.0 : it->second;
        out[t] = w / static_cast<double>(group_size.at(key));
    }
    return out;
}

//! JSON form: [{"tuple": {"x": "1", ...}, "weight": 0.5}, ...]
inline nlohmann::json tuple_weighting_to_json(const TupleWeighting& omega) {
    auto arr = nlohmann::json::array();
    for (const auto& [t, w] : omega) {
        nlohmann::json jt = nlohmann::json::object();
        for (const auto& [a, v] : t) jt[a] = v;
        arr.push_back({{"tuple", std::move(jt)}, {"weight", w}});
    }
    return arr;
}

inline TupleWeighting tuple_weighting_from_json(const nlohmann::json& j) try {
    if (!j.is_array()) throw parse_error("tuple weighting JSON must be an array");
    TupleWeighting out;
    for (const auto& entry : j) {
        Tuple t;
        for (const auto& [a, v] : entry.at("tuple").items())
            t[a] = detail::json_value_token(v, "tuple value of '" + a + "'");
        double w = entry.at("weight").get<double>();
        if (!out.emplace(std::move(t), w).second)
            throw parse_error("tuple weighting repeats a tuple");
    }
    return out;
} catch (const nlohmann::json::exception& e) {
    throw parse_error(std::string("malformed tuple weighting JSON: ") + e.what());
}

//! JSON form: [{"edge": 0, "weight": 1.5}, ...]; edges left out are zero.
inline nlohmann::json edge_weighting_to_json(const EdgeWeighting& w) {
    auto arr = nlohmann::json::array();
    for (std::size_t e = 0; e < w.size(); ++e)
        arr.push_back({{"edge", e}, {"weight", w[e]}});
    return arr;
}

inline EdgeWeighting edge_weighting_from_json(const nlohmann::json& j, std::size_t num_edges) try {
    if (!j.is_array()) throw parse_error("edge weighting JSON must be an array");
    EdgeWeighting w(num_edges, 0.0);
    std::set<std::size_t> seen;
    for (const auto& entry : j) {
        auto e = entry.at("edge").get<long long>();
        if (e < 0 || static_cast<std::size_t>(e) >= num_edges)
            throw parse_error("edge id " + std::to_string(e) + " is out of range");
        if (!seen.insert(static_cast<std::size_t>(e)).second)
            throw parse_error("edge weighting repeats edge " + std::to_string(e));
        w[static_cast<std::size_t>(e)] = entry.at("weight").get<double>();
    }
    return w;
} catch (const nlohmann::json::exception& e) {
    throw parse_error(std::string("malformed edge weighting JSON: ") + e.what());
}

} // namespace factlp
