#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "factlp/errors.hpp"
#include "factlp/numeric.hpp"

namespace factlp {

//! Sparse linear expression over named variables.
using LinearForm = std::map<std::string, double>;

enum class Rel { LessEq, Eq, GreaterEq };

inline std::string rel_to_string(Rel r) {
    switch (r) {
        case Rel::LessEq: return "<=";
        case Rel::Eq: return "=";
        case Rel::GreaterEq: return ">=";
    }
    return "?";
}

inline Rel rel_from_string(const std::string& s) {
    if (s == "<=") return Rel::LessEq;
    if (s == "=" || s == "==") return Rel::Eq;
    if (s == ">=") return Rel::GreaterEq;
    throw parse_error("unknown comparison '" + s + "' (expected <=, = or >=)");
}

enum class Sense { Maximize, Minimize };

struct LinearConstraint {
    LinearForm form;
    Rel rel = Rel::LessEq;
    double bound = 0.0;
};

//! A linear program over named, unrestricted variables. Sign restrictions
//! are expressed as ordinary constraints; the solver spots single-variable
//! rows like x >= 0 and turns them back into bounds internally.
struct LinearProgram {
    std::vector<std::string> variables;
    Sense sense = Sense::Maximize;
    LinearForm objective;
    std::vector<LinearConstraint> constraints;

    std::size_t num_variables() const { return variables.size(); }
    std::size_t num_constraints() const { return constraints.size(); }

    void validate() const {
        std::map<std::string, int> seen;
        for (const auto& v : variables) {
            if (v.empty()) throw schema_error("LP variable with empty name");
            if (++seen[v] > 1) throw schema_error("duplicate LP variable '" + v + "'");
        }
        auto check_form = [&](const LinearForm& f, const std::string& where) {
            for (const auto& [v, c] : f) {
                if (!seen.count(v))
                    throw schema_error(where + " mentions undeclared variable '" + v + "'");
                if (!std::isfinite(c))
                    throw numeric_error(where + " has a non-finite coefficient on '" + v + "'");
            }
        };
        check_form(objective, "objective");
        for (std::size_t i = 0; i < constraints.size(); ++i) {
            check_form(constraints[i].form, "constraint #" + std::to_string(i));
            if (!std::isfinite(constraints[i].bound))
                throw numeric_error("constraint #" + std::to_string(i) + " has a non-finite bound");
        }
    }
};

enum class SolveStatus { Optimal, Infeasible, Unbounded };

inline std::string status_to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::Optimal: return "optimal";
        case SolveStatus::Infeasible: return "infeasible";
        case SolveStatus::Unbounded: return "unbounded";
    }
    return "?";
}

inline SolveStatus status_from_string(const std::string& s) {
    if (s == "optimal") return SolveStatus::Optimal;
    if (s == "infeasible") return SolveStatus::Infeasible;
    if (s == "unbounded") return SolveStatus::Unbounded;
    throw parse_error("unknown solve status '" + s + "'");
}

//! Objective value and assignment are meaningful only when status is
//! Optimal.
struct Solution {
    SolveStatus status = SolveStatus::Infeasible;
    double objective_value = 0.0;
    std::map<std::string, double> assignment;
};

//! Evaluate a linear form against a total assignment.
inline double evaluate(const LinearForm& form, const std::map<std::string, double>& assignment) {
    double total = 0.0;
    for (const auto& [v, c] : form) {
        auto it = assignment.find(v);
        if (it == assignment.end())
            throw eval_error("assignment is missing variable '" + v + "'");
        total += c * it->second;
    }
    return total;
}

namespace detail {

//! Dense two-phase primal simplex. Rows are kept with nonnegative right
//! hand sides; the basis is maintained explicitly and reduced costs are
//! recomputed from the tableau, which is robust at the sizes handled here.
class SimplexTableau {
public:
    SimplexTableau(std::size_t cols) : n_(cols) {}

    void add_row(std::vector<double> row, double rhs, int basic_col) {
        rows_.push_back(std::move(row));
        rhs_.push_back(rhs);
        basis_.push_back(basic_col);
        active_.push_back(true);
    }

    std::size_t cols() const { return n_; }

    //! Maximize cost'x from the current basis. Columns at or beyond
    //! `forbidden_from` never enter. Returns false when unbounded.
    bool optimize(const std::vector<double>& cost, std::size_t forbidden_from) {
        const std::size_t m = rows_.size();
        for (long iter = 0; iter < kMaxIterations; ++iter) {
            // Bland's rule: first column with a positive reduced cost.
            std::size_t entering = n_;
            for (std::size_t j = 0; j < std::min(n_, forbidden_from); ++j) {
                double d = cost[j];
                for (std::size_t i = 0; i < m; ++i)
                    if (active_[i]) d -= cost[basis_[i]] * rows_[i][j];
                if (d > kPivotTol) {
                    entering = j;
                    break;
                }
            }
            if (entering == n_) return true;

            std::size_t leave = m;
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < m; ++i) {
                if (!active_[i] || rows_[i][entering] <= kPivotTol) continue;
                double ratio = rhs_[i] / rows_[i][entering];
                if (ratio < best - kPivotTol ||
                    (ratio < best + kPivotTol && (leave == m || basis_[i] < basis_[leave]))) {
                    best = ratio;
                    leave = i;
                }
            }
            if (leave == m) return false;
            pivot(leave, entering);
        }
        throw numeric_error("simplex iteration limit exceeded");
    }

    void pivot(std::size_t row, std::size_t col) {
        double p = rows_[row][col];
        for (double& v : rows_[row]) v /= p;
        rhs_[row] /= p;
        rows_[row][col] = 1.0; // kill roundoff on the pivot itself
        for (std::size_t i = 0; i < rows_.size(); ++i) {
            if (i == row || !active_[i]) continue;
            double f = rows_[i][col];
            if (f == 0.0) continue;
            for (std::size_t j = 0; j < n_; ++j) rows_[i][j] -= f * rows_[row][j];
            rows_[i][col] = 0.0;
            rhs_[i] -= f * rhs_[row];
        }
        basis_[row] = static_cast<int>(col);
    }

    //! Drive artificial columns (>= art_begin) out of the basis; rows that
    //! cannot be repaired are redundant and get deactivated.
    void expel_artificials(std::size_t art_begin) {
        for (std::size_t i = 0; i < rows_.size(); ++i) {
            if (!active_[i] || basis_[i] < static_cast<int>(art_begin)) continue;
            std::size_t j = art_begin;
            for (std::size_t k = 0; k < art_begin; ++k) {
                if (std::fabs(rows_[i][k]) > kPivotTol) {
                    j = k;
                    break;
                }
            }
            if (j < art_begin)
                pivot(i, j);
            else
                active_[i] = false;
        }
    }

    double basic_value_sum(std::size_t from_col) const {
        double s = 0.0;
        for (std::size_t i = 0; i < rows_.size(); ++i)
            if (active_[i] && basis_[i] >= static_cast<int>(from_col)) s += rhs_[i];
        return s;
    }

    //! Value of column j in the current basic solution.
    double column_value(std::size_t j) const {
        for (std::size_t i = 0; i < rows_.size(); ++i)
            if (active_[i] && basis_[i] == static_cast<int>(j)) return rhs_[i];
        return 0.0;
    }

private:
    static constexpr long kMaxIterations = 200000;

    std::size_t n_;
    std::vector<std::vector<double>> rows_;
    std::vector<double> rhs_;
    std::vector<int> basis_;
    std::vector<char> active_;
};

inline LinearForm strip_zeros(const LinearForm& f) {
    LinearForm out;
    for (const auto& [v, c] : f)
        if (c != 0.0) out.emplace(v, c);
    return out;
}

} // namespace detail

//! Solve with a self-contained two-phase primal simplex (Bland's rule, so
//! it terminates on degenerate programs). Variables are free unless a
//! constraint pins their sign; free variables are split internally.
inline Solution solve(const LinearProgram& lp) {
    lp.validate();

    std::map<std::string, std::size_t> var_index;
    for (std::size_t i = 0; i < lp.variables.size(); ++i) var_index[lp.variables[i]] = i;
    const std::size_t nvars = lp.variables.size();

    LinearForm objective = detail::strip_zeros(lp.objective);
    if (lp.sense == Sense::Minimize)
        for (auto& [v, c] : objective) c = -c;

    // Pass 1 over the constraints: fold single-variable sign rows into
    // bounds, check constant rows directly, keep the rest.
    std::vector<char> nonneg(nvars, false);
    struct Row {
        LinearForm form;
        Rel rel;
        double bound;
    };
    std::vector<Row> rows;
    for (const auto& c : lp.constraints) {
        LinearForm f = detail::strip_zeros(c.form);
        if (f.empty()) {
            double lhs = 0.0;
            bool ok = (c.rel == Rel::LessEq && lhs <= c.bound + kFeasibilityTol) ||
                      (c.rel == Rel::GreaterEq && lhs >= c.bound - kFeasibilityTol) ||
                      (c.rel == Rel::Eq && std::fabs(lhs - c.bound) <= kFeasibilityTol);
            if (!ok) return {SolveStatus::Infeasible, 0.0, {}};
            continue;
        }
        if (f.size() == 1 && c.bound == 0.0) {
            auto [v, coef] = *f.begin();
            if ((c.rel == Rel::GreaterEq && coef > 0.0) || (c.rel == Rel::LessEq && coef < 0.0)) {
                nonneg[var_index[v]] = true;
                continue;
            }
        }
        rows.push_back({std::move(f), c.rel, c.bound});
    }

    if (nvars == 0) {
        // All rows were constant and passed their checks.
        return {SolveStatus::Optimal, 0.0, {}};
    }

    // Column layout: one column per nonnegative variable, a (+,-) pair per
    // free variable, then slack/surplus columns, then artificials.
    std::vector<std::size_t> col_pos(nvars), col_neg(nvars, SIZE_MAX);
    std::size_t ncols = 0;
    for (std::size_t i = 0; i < nvars; ++i) {
        col_pos[i] = ncols++;
        if (!nonneg[i]) col_neg[i] = ncols++;
    }
    const std::size_t struct_cols = ncols;
    // One slack/surplus slot and one artificial slot per row; unused slots
    // stay at zero and never enter the basis.
    const std::size_t slack_begin = struct_cols;
    const std::size_t art_begin = slack_begin + rows.size();
    const std::size_t total_cols = art_begin + rows.size();

    detail::SimplexTableau tab(total_cols);
    bool any_artificial = false;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        std::vector<double> row(total_cols, 0.0);
        for (const auto& [v, coef] : rows[r].form) {
            std::size_t i = var_index[v];
            row[col_pos[i]] += coef;
            if (col_neg[i] != SIZE_MAX) row[col_neg[i]] -= coef;
        }
        double b = rows[r].bound;
        Rel rel = rows[r].rel;
        if (b < 0.0) {
            for (double& v : row) v = -v;
            b = -b;
            if (rel == Rel::LessEq)
                rel = Rel::GreaterEq;
            else if (rel == Rel::GreaterEq)
                rel = Rel::LessEq;
        }
        int basic;
        if (rel == Rel::LessEq) {
            row[slack_begin + r] = 1.0;
            basic = static_cast<int>(slack_begin + r);
        } else {
            if (rel == Rel::GreaterEq) row[slack_begin + r] = -1.0;
            row[art_begin + r] = 1.0;
            basic = static_cast<int>(art_begin + r);
            any_artificial = true;
        }
        tab.add_row(std::move(row), b, basic);
    }

    if (any_artificial) {
        std::vector<double> phase1(total_cols, 0.0);
        for (std::size_t j = art_begin; j < total_cols; ++j) phase1[j] = -1.0;
        if (!tab.optimize(phase1, total_cols))
            throw numeric_error("phase 1 reported unbounded, which cannot happen");
        if (tab.basic_value_sum(art_begin) > kFeasibilityTol)
            return {SolveStatus::Infeasible, 0.0, {}};
        tab.expel_artificials(art_begin);
    }

    std::vector<double> phase2(total_cols, 0.0);
    for (const auto& [v, c] : objective) {
        std::size_t i = var_index[v];
        phase2[col_pos[i]] += c;
        if (col_neg[i] != SIZE_MAX) phase2[col_neg[i]] -= c;
    }
    if (!tab.optimize(phase2, art_begin))
        return {SolveStatus::Unbounded, 0.0, {}};

    Solution sol;
    sol.status = SolveStatus::Optimal;
    for (std::size_t i = 0; i < nvars; ++i) {
        double x = tab.column_value(col_pos[i]);
        if (col_neg[i] != SIZE_MAX) x -= tab.column_value(col_neg[i]);
        sol.assignment[lp.variables[i]] = x;
    }
    sol.objective_value = evaluate(lp.objective, sol.assignment);
    return sol;
}

//! Result of rendering an LP as text: the document plus the renaming that
//! was applied when original names are not legal in the format.
struct LpExport {
    std::string text;
    std::map<std::string, std::string> renamed;
};

namespace detail {

inline bool lp_name_safe(const std::string& s) {
    if (s.empty()) return false;
    if (!std::isalpha(static_cast<unsigned char>(s[0])) && s[0] != '_') return false;
    for (char c : s)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') return false;
    // An initial e/E followed by a digit reads as an exponent in LP files.
    if ((s[0] == 'e' || s[0] == 'E') && s.size() > 1 &&
        std::isdigit(static_cast<unsigned char>(s[1])))
        return false;
    return true;
}

} // namespace detail

//! Render in the classic LP text format (Maximize / Subject To / Bounds /
//! End). All variables are declared free since sign restrictions travel as
//! explicit rows. If any variable name would be illegal in the format,
//! every variable is renamed to x1..xn and the mapping is returned.
inline LpExport export_lp_text(const LinearProgram& lp) {
    lp.validate();
    if (lp.variables.empty())
        throw validation_error("cannot export an LP without variables");

    LpExport out;
    bool rename = false;
    for (const auto& v : lp.variables)
        if (!detail::lp_name_safe(v)) rename = true;
    std::map<std::string, std::string> name;
    for (std::size_t i = 0; i < lp.variables.size(); ++i) {
        name[lp.variables[i]] = rename ? "x" + std::to_string(i + 1) : lp.variables[i];
        if (rename) out.renamed[lp.variables[i]] = name[lp.variables[i]];
    }

    auto render_form = [&](const LinearForm& f) {
        std::string s;
        bool first = true;
        for (const auto& v : lp.variables) {
            auto it = f.find(v);
            if (it == f.end() || it->second == 0.0) continue;
            double c = it->second;
            if (first) {
                if (c < 0) s += "- ";
            } else {
                s += (c < 0) ? " - " : " + ";
            }
            s += format_number(std::fabs(c)) + " " + name[v];
            first = false;
        }
        if (first) s = "0 " + name[lp.variables.front()];
        return s;
    };

    std::string t;
    t += (lp.sense == Sense::Maximize) ? "Maximize\n" : "Minimize\n";
    t += " obj: " + render_form(lp.objective) + "\n";
    t += "Subject To\n";
    for (std::size_t i = 0; i < lp.constraints.size(); ++i) {
        const auto& c = lp.constraints[i];
        t += " c" + std::to_string(i + 1) + ": " + render_form(c.form) + " " +
             rel_to_string(c.rel) + " " + format_number(c.bound) + "\n";
    }
    t += "Bounds\n";
    for (const auto& v : lp.variables) t += " " + name[v] + " free\n";
    t += "End\n";
    out.text = std::move(t);
    return out;
}

//! JSON mirrors of LinearProgram and Solution.
inline nlohmann::json lp_to_json(const LinearProgram& lp) {
    nlohmann::json j;
    j["variables"] = lp.variables;
    j["sense"] = (lp.sense == Sense::Maximize) ? "max" : "min";
    j["objective"] = lp.objective;
    auto cons = nlohmann::json::array();
    for (const auto& c : lp.constraints)
        cons.push_back({{"form", c.form}, {"rel", rel_to_string(c.rel)}, {"bound", c.bound}});
    j["constraints"] = std::move(cons);
    return j;
}

inline LinearProgram lp_from_json(const nlohmann::json& j) {
    LinearProgram lp;
    try {
        lp.variables = j.at("variables").get<std::vector<std::string>>();
        std::string sense = j.value("sense", "max");
        if (sense == "max")
            lp.sense = Sense::Maximize;
        else if (sense == "min")
            lp.sense = Sense::Minimize;
        else
            throw parse_error("unknown sense '" + sense + "'");
        lp.objective = j.at("objective").get<LinearForm>();
        for (const auto& c : j.value("constraints", nlohmann::json::array())) {
            LinearConstraint lc;
            lc.form = c.at("form").get<LinearForm>();
            lc.rel = rel_from_string(c.at("rel").get<std::string>());
            lc.bound = c.at("bound").get<double>();
            lp.constraints.push_back(std::move(lc));
        }
    } catch (const nlohmann::json::exception& e) {
        throw parse_error(std::string("malformed LP JSON: ") + e.what());
    }
    lp.validate();
    return lp;
}

inline nlohmann::json solution_to_json(const Solution& s) {
    nlohmann::json j;
    j["status"] = status_to_string(s.status);
    if (s.status == SolveStatus::Optimal) {
        j["objective"] = s.objective_value;
        j["assignment"] = s.assignment;
    }
    return j;
}

inline Solution solution_from_json(const nlohmann::json& j) {
    Solution s;
    try {
        s.status = status_from_string(j.at("status").get<std::string>());
        if (s.status == SolveStatus::Optimal) {
            s.objective_value = j.at("objective").get<double>();
            s.assignment = j.value("assignment", std::map<std::string, double>{});
        }
    } catch (const nlohmann::json::exception& e) {
        throw parse_error(std::string("malformed solution JSON: ") + e.what());
    }
    return s;
}

} // namespace factlp
