#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace factlp {

//! Base class for all errors thrown by this library.
class error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

//! Malformed schemas: duplicate/empty attribute names, attribute lookups
//! that miss, projections that would empty a schema, domain mismatches.
class schema_error : public error {
public:
    using error::error;
};

//! Syntax errors in any of the textual input formats. Messages carry
//! line/column positions where the source offers them.
class parse_error : public error {
public:
    using error::error;
};

//! Structural rule violations in circuits and join trees.
class validation_error : public error {
public:
    using error::error;
};

//! A tuple was required to be in a circuit's answer set but is not.
class membership_error : public error {
public:
    using error::error;
};

//! An edge weighting violates a flow-conservation rule.
class soundness_error : public error {
public:
    using error::error;
};

//! Numeric trouble: non-finite coefficients, counter overflow.
class numeric_error : public error {
public:
    using error::error;
};

//! An id (gate, edge, tuple index) is out of range.
class index_error : public error {
public:
    using error::error;
};

//! A linear form was evaluated against an assignment missing a variable.
class eval_error : public error {
public:
    using error::error;
};

//! Query-to-circuit compilation failures: unknown relations, arity
//! mismatches, join trees that do not fit the query.
class compile_error : public error {
public:
    using error::error;
};

//! The query hypergraph is not alpha-acyclic. Carries the atoms left
//! over when ear removal got stuck, which form a witness core.
class not_acyclic_error : public error {
public:
    not_acyclic_error(const std::string& msg, std::vector<std::string> residual)
        : error(msg), residual_atoms(std::move(residual)) {}

    std::vector<std::string> residual_atoms;
};

} // namespace factlp
