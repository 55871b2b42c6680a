#pragma once

// Hand-built inputs shared across the test binaries.

#include <initializer_list>
#include <string>
#include <utility>

#include "factlp/circuit.hpp"
#include "factlp/relational.hpp"

namespace factlp::testing {

inline Tuple mk(std::initializer_list<std::pair<const std::string, Value>> kv) {
    return Tuple(kv);
}

//! Five rows over (x, y, z).
inline Relation sample_relation() {
    Relation r({"x", "y", "z"});
    r.insert_row({"1", "1", "0"});
    r.insert_row({"1", "0", "1"});
    r.insert_row({"0", "1", "1"});
    r.insert_row({"0", "1", "0"});
    r.insert_row({"1", "1", "1"});
    return r;
}

//! The three pairwise-overlapping rows used in the weighted-count example;
//! every attribute pair appears with every combination exactly once short
//! of a hitting set, which pins the optimum of the capacity program at 1.5.
inline Relation overlap3_relation() {
    Relation r({"x", "y", "z"});
    r.insert_row({"1", "1", "0"});
    r.insert_row({"1", "0", "1"});
    r.insert_row({"0", "1", "1"});
    return r;
}

//! A circuit denoting sample_relation(), with one shared subcircuit
//! (gate 7 feeds both gate 9 and gate 11).
inline Circuit figure_circuit() {
    std::vector<Gate> g;
    g.push_back(Gate::input("x", "1"));         // 0
    g.push_back(Gate::input("x", "0"));         // 1
    g.push_back(Gate::input("y", "1"));         // 2
    g.push_back(Gate::input("y", "0"));         // 3
    g.push_back(Gate::input("z", "0"));         // 4
    g.push_back(Gate::input("z", "1"));         // 5
    g.push_back(Gate::gate_union({4, 5}));      // 6: z in {0,1}
    g.push_back(Gate::product({2, 6}));         // 7: y=1 x (z in {0,1})
    g.push_back(Gate::product({3, 5}));         // 8: y=0, z=1
    g.push_back(Gate::gate_union({7, 8}));      // 9
    g.push_back(Gate::product({0, 9}));         // 10: x=1 branch
    g.push_back(Gate::product({1, 7}));         // 11: x=0 branch
    g.push_back(Gate::gate_union({10, 11}));    // 12: root
    return Circuit(std::move(g), 12, {"x", "y", "z"});
}

//! Three tables about who could staff which project.
inline Database motivating_database() {
    Relation projects({"p", "f", "l"});
    projects.insert_row({"p1", "ML", "Python"});
    projects.insert_row({"p2", "DBs", "Python"});
    Relation researchers({"r", "f"});
    researchers.insert_row({"Alice", "ML"});
    researchers.insert_row({"Bob", "ML"});
    researchers.insert_row({"Carol", "ML"});
    researchers.insert_row({"David", "DBs"});
    Relation developers({"d", "l"});
    developers.insert_row({"Eve", "Python"});
    developers.insert_row({"Frida", "Python"});
    developers.insert_row({"Guy", "Python"});
    Database db;
    db.add("projects", std::move(projects));
    db.add("researchers", std::move(researchers));
    db.add("developers", std::move(developers));
    return db;
}

inline const char* motivating_query_text() {
    return "Q(p, r, d, f, l) :- projects(p, f, l), researchers(r, f), developers(d, l).";
}

} // namespace factlp::testing
