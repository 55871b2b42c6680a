#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "factlp/circuit.hpp"
#include "factlp/errors.hpp"
#include "factlp/linprog.hpp"
#include "factlp/relational.hpp"

namespace factlp {

//! The canonical LP variable name for the answers with value `value` on
//! `attr`. Injective as long as names stay clear of the delimiters,
//! which validate() enforces.
inline std::string cas_var_name(const std::string& attr, const Value& value) {
    return "S[" + attr + "=" + value + "]";
}

//! One objective or constraint term: coef * S[attr=value]. The value "*"
//! is a wildcard: inside a constraint quantified over the same attribute
//! it binds to the quantified value, everywhere else it abbreviates the
//! sum over the attribute's whole domain.
struct CasTerm {
    std::string attr;
    std::string value;
    double coef = 1.0;
};

struct CasConstraint {
    std::vector<CasTerm> terms;
    Rel rel = Rel::LessEq;
    double bound = 0.0;
    //! When set, the constraint is replicated once per domain value of
    //! this attribute.
    std::optional<std::string> forall;
};

//! A linear program whose variables are the per-value answer sums
//! S[attr=value] of some answer set. It stays symbolic until it is
//! grounded over a relation or rewritten over a circuit; the domain is
//! either spelled out per attribute or taken from the data ("auto").
struct CasLp {
    std::vector<std::string> attributes;
    bool auto_domain = true;
    std::map<std::string, std::vector<std::string>> domain;
    Sense sense = Sense::Maximize;
    std::vector<CasTerm> objective;
    std::vector<CasConstraint> constraints;

    void validate() const {
        if (attributes.empty()) throw validation_error("program needs at least one attribute");
        std::set<std::string> attrs;
        auto check_token = [](const std::string& s, const std::string& what) {
            if (s.empty()) throw validation_error(what + " must not be empty");
            if (s.find_first_of("[]=") != std::string::npos)
                throw validation_error(what + " '" + s + "' contains one of '[', ']', '='");
        };
        for (const auto& a : attributes) {
            check_token(a, "attribute");
            if (!attrs.insert(a).second)
                throw validation_error("attribute '" + a + "' repeats");
        }
        if (!auto_domain) {
            for (const auto& [a, values] : domain) {
                if (!attrs.count(a))
                    throw validation_error("domain lists unknown attribute '" + a + "'");
                std::set<std::string> seen;
                for (const auto& v : values) {
                    check_token(v, "domain value");
                    if (v == "*") throw validation_error("'*' cannot be a domain value");
                    if (!seen.insert(v).second)
                        throw validation_error("domain value '" + v + "' repeats under '" + a + "'");
                }
            }
        }
        auto check_terms = [&](const std::vector<CasTerm>& terms, const std::string& where) {
            for (const auto& t : terms) {
                if (!attrs.count(t.attr))
                    throw validation_error(where + " mentions unknown attribute '" + t.attr + "'");
                if (t.value != "*") check_token(t.value, where + " value");
                if (!std::isfinite(t.coef))
                    throw numeric_error(where + " has a non-finite coefficient");
            }
        };
        check_terms(objective, "objective");
        for (std::size_t i = 0; i < constraints.size(); ++i) {
            std::string where = "constraint #" + std::to_string(i);
            check_terms(constraints[i].terms, where);
            if (!std::isfinite(constraints[i].bound))
                throw numeric_error(where + " has a non-finite bound");
            if (constraints[i].forall && !attrs.count(*constraints[i].forall))
                throw validation_error(where + " quantifies over unknown attribute '" +
                                       *constraints[i].forall + "'");
        }
    }
};

//! The program with quantifiers and wildcards spelled out: plain linear
//! constraints over the S[attr=value] variables.
struct ExpandedCasLp {
    std::vector<std::string> attributes;
    std::map<std::string, std::vector<std::string>> domain; // concrete, sorted
    Sense sense = Sense::Maximize;
    std::vector<std::string> variables; // S[a=v] by attribute order, then value
    LinearForm objective;
    std::vector<LinearConstraint> constraints;

    std::size_t num_constraints() const { return constraints.size(); }
};

//! Instantiate quantified constraints and wildcard terms against a
//! concrete domain. For auto-domain programs the fallback (the active
//! domain of the data at hand) is used; values named explicitly in terms
//! are always added on top.
inline ExpandedCasLp expand(const CasLp& lp,
                            const std::map<std::string, std::vector<std::string>>& fallback) {
    lp.validate();
    ExpandedCasLp out;
    out.attributes = lp.attributes;
    out.sense = lp.sense;

    std::map<std::string, std::set<std::string>> dom;
    for (const auto& a : lp.attributes) {
        if (lp.auto_domain) {
            auto it = fallback.find(a);
            if (it != fallback.end()) dom[a].insert(it->second.begin(), it->second.end());
        } else {
            auto it = lp.domain.find(a);
            if (it != lp.domain.end()) dom[a].insert(it->second.begin(), it->second.end());
        }
    }
    auto add_named_values = [&](const std::vector<CasTerm>& terms) {
        for (const auto& t : terms)
            if (t.value != "*") dom[t.attr].insert(t.value);
    };
    add_named_values(lp.objective);
    for (const auto& c : lp.constraints) add_named_values(c.terms);

    for (const auto& a : lp.attributes) {
        out.domain[a] = {dom[a].begin(), dom[a].end()};
        for (const auto& v : out.domain[a]) out.variables.push_back(cas_var_name(a, v));
    }

    auto expand_terms = [&](const std::vector<CasTerm>& terms,
                            const std::optional<std::string>& bound_attr,
                            const std::string& bound_value) {
        LinearForm f;
        for (const auto& t : terms) {
            if (t.value == "*") {
                if (bound_attr && t.attr == *bound_attr) {
                    f[cas_var_name(t.attr, bound_value)] += t.coef;
                } else {
                    for (const auto& v : out.domain[t.attr]) f[cas_var_name(t.attr, v)] += t.coef;
                }
            } else {
                f[cas_var_name(t.attr, t.value)] += t.coef;
            }
        }
        return f;
    };

    out.objective = expand_terms(lp.objective, std::nullopt, "");
    for (const auto& c : lp.constraints) {
        if (c.forall) {
            for (const auto& v : out.domain[*c.forall])
                out.constraints.push_back({expand_terms(c.terms, c.forall, v), c.rel, c.bound});
        } else {
            out.constraints.push_back({expand_terms(c.terms, std::nullopt, ""), c.rel, c.bound});
        }
    }
    return out;
}

namespace detail {

//! Substitute each S[attr=value] for the linear form in `columns` (absent
//! entries mean the empty sum, i.e. zero).
inline LinearForm substitute(const LinearForm& f, const std::map<std::string, LinearForm>& columns) {
    LinearForm out;
    for (const auto& [casvar, coef] : f) {
        auto it = columns.find(casvar);
        if (it == columns.end()) continue;
        for (const auto& [v, c] : it->second) out[v] += coef * c;
    }
    return out;
}

//! Flow-conservation rows for every inner gate, in gate id order: union
//! gates balance in-flow against out-flow, product gates force all
//! in-edges equal and (below the output gate) tie them to the out-flow.
inline void append_flow_rows(const Circuit& c, const std::vector<std::string>& edge_var,
                             std::vector<LinearConstraint>& rows) {
    for (std::size_t g = 0; g < c.num_gates(); ++g) {
        const Gate& gate = c.gate(static_cast<int>(g));
        if (gate.kind == GateKind::Input) continue;
        bool is_output = static_cast<int>(g) == c.root();
        const auto& in = c.in_edges(static_cast<int>(g));
        if (gate.kind == GateKind::Union) {
            if (is_output) continue;
            LinearForm f;
            for (int e : in) f[edge_var[e]] += 1.0;
            for (int e : c.out_edges(static_cast<int>(g))) f[edge_var[e]] -= 1.0;
            rows.push_back({std::move(f), Rel::Eq, 0.0});
        } else {
            for (std::size_t p = 0; p + 1 < in.size(); ++p) {
                LinearForm f;
                f[edge_var[in[p]]] += 1.0;
                f[edge_var[in[p + 1]]] -= 1.0;
                rows.push_back({std::move(f), Rel::Eq, 0.0});
            }
            if (!is_output) {
                LinearForm f;
                f[edge_var[in.front()]] += 1.0;
                for (int e : c.out_edges(static_cast<int>(g))) f[edge_var[e]] -= 1.0;
                rows.push_back({std::move(f), Rel::Eq, 0.0});
            }
        }
    }
}

} // namespace detail

//! Ground the program over a concrete relation: one LP variable per
//! tuple, S[a=v] replaced by the sum of the matching tuples, plus a
//! nonnegativity row per tuple.
inline LinearProgram ground(const CasLp& lp, const Relation& r) {
    lp.validate();
    for (const auto& a : lp.attributes)
        if (!r.has_attribute(a))
            throw schema_error("relation has no attribute '" + a + "'");

    std::map<std::string, std::vector<std::string>> fallback;
    if (lp.auto_domain) {
        for (const auto& a : lp.attributes) {
            std::set<std::string> vals;
            for (const auto& t : r.tuples()) vals.insert(t.at(a));
            fallback[a] = {vals.begin(), vals.end()};
        }
    }
    ExpandedCasLp e = expand(lp, fallback);

    LinearProgram out;
    out.sense = e.sense;
    std::map<std::string, LinearForm> columns;
    {
        std::size_t i = 0;
        for (const auto& t : r.tuples()) {
            std::string name = "t" + std::to_string(i++);
            out.variables.push_back(name);
            for (const auto& a : lp.attributes) {
                const auto& dom = e.domain.at(a);
                if (!std::binary_search(dom.begin(), dom.end(), t.at(a)))
                    throw schema_error("domain of '" + a + "' does not cover value '" + t.at(a) +
                                       "'");
                columns[cas_var_name(a, t.at(a))][name] += 1.0;
            }
        }
    }
    out.objective = detail::substitute(e.objective, columns);
    for (const auto& c : e.constraints)
        out.constraints.push_back({detail::substitute(c.form, columns), c.rel, c.bound});
    for (const auto& v : out.variables)
        out.constraints.push_back({{{v, 1.0}}, Rel::GreaterEq, 0.0});
    return out;
}

//! Rewrite the program over a normalized circuit: one LP variable per
//! edge, S[a=v] replaced by the out-flow of the matching input gate,
//! nonnegativity on every edge, and flow conservation at every inner
//! gate. The feasible objective values coincide with those of the
//! grounded program over the circuit's answer set.
inline LinearProgram rewrite(const CasLp& lp, const Circuit& c) {
    lp.validate();
    if (!is_normalized(c))
        throw validation_error("rewrite needs a normalized circuit");
    {
        auto attrs = c.attributes();
        std::set<std::string> have(attrs.begin(), attrs.end());
        for (const auto& a : lp.attributes)
            if (!have.count(a))
                throw schema_error("circuit has no attribute '" + a + "'");
    }

    std::map<std::string, std::vector<std::string>> fallback;
    if (lp.auto_domain) {
        std::map<std::string, std::set<std::string>> vals;
        for (const auto& g : c.gates())
            if (g.kind == GateKind::Input) vals[g.attr].insert(g.value);
        for (const auto& a : lp.attributes) fallback[a] = {vals[a].begin(), vals[a].end()};
    }
    ExpandedCasLp e = expand(lp, fallback);

    LinearProgram out;
    out.sense = e.sense;
    std::vector<std::string> edge_var(c.num_edges());
    for (std::size_t i = 0; i < c.num_edges(); ++i) {
        edge_var[i] = "e" + std::to_string(i);
        out.variables.push_back(edge_var[i]);
    }

    std::map<std::string, LinearForm> columns;
    std::set<std::string> lp_attrs(lp.attributes.begin(), lp.attributes.end());
    for (std::size_t g = 0; g < c.num_gates(); ++g) {
        const Gate& gate = c.gate(static_cast<int>(g));
        if (gate.kind != GateKind::Input) continue;
        if (lp_attrs.count(gate.attr)) {
            const auto& dom = e.domain.at(gate.attr);
            if (!std::binary_search(dom.begin(), dom.end(), gate.value))
                throw schema_error("domain of '" + gate.attr + "' does not cover value '" +
                                   gate.value + "'");
        }
        LinearForm& col = columns[cas_var_name(gate.attr, gate.value)];
        for (int edge : c.out_edges(static_cast<int>(g))) col[edge_var[edge]] += 1.0;
    }

    out.objective = detail::substitute(e.objective, columns);
    for (const auto& v : out.variables)
        out.constraints.push_back({{{v, 1.0}}, Rel::GreaterEq, 0.0});
    detail::append_flow_rows(c, edge_var, out.constraints);
    for (const auto& con : e.constraints)
        out.constraints.push_back({detail::substitute(con.form, columns), con.rel, con.bound});
    return out;
}

//! max sum of tuple weights subject to weights in [0,1]-style caps: every
//! per-value answer class may carry at most total weight one. Grounded
//! form, one variable per tuple.
inline LinearProgram dwc_ground(const Relation& r) {
    LinearProgram out;
    std::vector<std::string> names;
    for (std::size_t i = 0; i < r.size(); ++i) names.push_back("t" + std::to_string(i));
    out.variables = names;
    for (const auto& v : names) out.objective[v] = 1.0;
    for (const auto& v : names) out.constraints.push_back({{{v, 1.0}}, Rel::GreaterEq, 0.0});
    for (const auto& a : r.attributes()) {
        std::map<std::string, LinearForm> groups;
        std::size_t i = 0;
        for (const auto& t : r.tuples()) groups[t.at(a)][names[i++]] += 1.0;
        for (auto& [value, form] : groups)
            out.constraints.push_back({std::move(form), Rel::LessEq, 1.0});
    }
    return out;
}

//! The same program over circuit edges: maximize the flow into the output
//! gate subject to flow conservation and unit capacity on the out-flow of
//! every input gate.
inline LinearProgram dwc_circuit(const Circuit& c) {
    if (!is_normalized(c))
        throw validation_error("the edge-capacity program needs a normalized circuit");
    LinearProgram out;
    if (c.empty()) return out;

    std::vector<std::string> edge_var(c.num_edges());
    for (std::size_t i = 0; i < c.num_edges(); ++i) {
        edge_var[i] = "e" + std::to_string(i);
        out.variables.push_back(edge_var[i]);
    }
    out.objective[edge_var[output_edge(c)]] = 1.0;
    for (const auto& v : out.variables)
        out.constraints.push_back({{{v, 1.0}}, Rel::GreaterEq, 0.0});
    detail::append_flow_rows(c, edge_var, out.constraints);
    for (std::size_t g = 0; g < c.num_gates(); ++g) {
        if (c.gate(static_cast<int>(g)).kind != GateKind::Input) continue;
        LinearForm f;
        for (int e : c.out_edges(static_cast<int>(g))) f[edge_var[e]] += 1.0;
        out.constraints.push_back({std::move(f), Rel::LessEq, 1.0});
    }
    return out;
}

//! JSON form:
//! {"attributes": [...], "domain": "auto" | {attr: [values]},
//!  "sense": "max", "objective": [{"attr":..,"value":..,"coef":..}, ...],
//!  "constraints": [{"terms": [...], "rel": "<=", "bound": ..,
//!                   "forall": attr?}, ...]}
//! Minimization programs are refused unless allow_min is set.
inline CasLp caslp_from_json(const nlohmann::json& j, bool allow_min = false) try {
    if (!j.is_object()) throw parse_error("program JSON must be an object");
    CasLp lp;
    lp.attributes = j.at("attributes").get<std::vector<std::string>>();
    if (j.contains("domain") && !(j.at("domain").is_string() && j.at("domain") == "auto")) {
        if (!j.at("domain").is_object())
            throw parse_error("\"domain\" must be \"auto\" or an object");
        lp.auto_domain = false;
        for (const auto& [attr, values] : j.at("domain").items()) {
            std::vector<std::string> vals;
            for (const auto& v : values)
                vals.push_back(detail::json_value_token(v, "domain of '" + attr + "'"));
            lp.domain[attr] = std::move(vals);
        }
    }
    std::string sense = j.value("sense", "max");
    if (sense == "max") {
        lp.sense = Sense::Maximize;
    } else if (sense == "min") {
        if (!allow_min)
            throw parse_error("minimization programs are disabled; pass --allow-min to accept them");
        lp.sense = Sense::Minimize;
    } else {
        throw parse_error("unknown sense '" + sense + "'");
    }
    auto parse_terms = [](const nlohmann::json& arr, const std::string& where) {
        std::vector<CasTerm> terms;
        if (!arr.is_array()) throw parse_error(where + " must be an array of terms");
        for (const auto& t : arr) {
            CasTerm term;
            term.attr = t.at("attr").get<std::string>();
            term.value = detail::json_value_token(t.at("value"), where);
            term.coef = t.value("coef", 1.0);
            terms.push_back(std::move(term));
        }
        return terms;
    };
    lp.objective = parse_terms(j.value("objective", nlohmann::json::array()), "objective");
    for (const auto& c : j.value("constraints", nlohmann::json::array())) {
        CasConstraint con;
        con.terms = parse_terms(c.at("terms"), "constraint terms");
        std::string rel = c.at("rel").get<std::string>();
        if (rel == "<" || rel == ">")
            throw parse_error("strict inequalities are not supported; use <= or >=");
        con.rel = rel_from_string(rel);
        con.bound = c.at("bound").get<double>();
        if (c.contains("forall")) con.forall = c.at("forall").get<std::string>();
        lp.constraints.push_back(std::move(con));
    }
    lp.validate();
    return lp;
} catch (const nlohmann::json::exception& e) {
    throw parse_error(std::string("malformed program JSON: ") + e.what());
}

inline nlohmann::json caslp_to_json(const CasLp& lp) {
    nlohmann::json j;
    j["attributes"] = lp.attributes;
    if (lp.auto_domain) {
        j["domain"] = "auto";
    } else {
        nlohmann::json d = nlohmann::json::object();
        for (const auto& [a, vals] : lp.domain) d[a] = vals;
        j["domain"] = std::move(d);
    }
    j["sense"] = (lp.sense == Sense::Maximize) ? "max" : "min";
    auto terms_json = [](const std::vector<CasTerm>& terms) {
        auto arr = nlohmann::json::array();
        for (const auto& t : terms)
            arr.push_back({{"attr", t.attr}, {"value", t.value}, {"coef", t.coef}});
        return arr;
    };
    j["objective"] = terms_json(lp.objective);
    auto cons = nlohmann::json::array();
    for (const auto& c : lp.constraints) {
        nlohmann::json jc{{"terms", terms_json(c.terms)},
                          {"rel", rel_to_string(c.rel)},
                          {"bound", c.bound}};
        if (c.forall) jc["forall"] = *c.forall;
        cons.push_back(std::move(jc));
    }
    j["constraints"] = std::move(cons);
    return j;
}

} // namespace factlp
