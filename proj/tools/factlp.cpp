// factlp: compile acyclic join queries into circuits, rewrite answer-sum
// programs onto circuit edges, solve them, and reconstruct per-tuple
// weights.
//
// Exit codes: 0 success, 2 usage, 3 bad input data, 4 cyclic query,
// 5 solver/numeric failure, 6 verification mismatch.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "factlp/caslp.hpp"
#include "factlp/circuit.hpp"
#include "factlp/cqcompile.hpp"
#include "factlp/errors.hpp"
#include "factlp/linprog.hpp"
#include "factlp/numeric.hpp"
#include "factlp/reconstruct.hpp"
#include "factlp/relational.hpp"

namespace {

using namespace factlp;

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitCyclic = 4;
constexpr int kExitSolver = 5;
constexpr int kExitMismatch = 6;

struct CliError {
    int code;
    std::string message;
};

double ms_between(std::chrono::steady_clock::time_point a,
                  std::chrono::steady_clock::time_point b) {
    return std::chrono::duration<double, std::milli>(b - a).count();
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    if (!in.good()) throw CliError{kExitData, "cannot read '" + path + "'"};
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void spill(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    if (!out.good()) throw CliError{kExitData, "cannot write '" + path + "'"};
    out << content;
}

nlohmann::json parse_json_file(const std::string& path) {
    try {
        return nlohmann::json::parse(slurp(path));
    } catch (const nlohmann::json::exception& e) {
        throw parse_error("'" + path + "' is not valid JSON: " + e.what());
    }
}

Database load_tables(const std::vector<std::string>& entries) {
    Database db;
    for (const auto& entry : entries) {
        auto eq = entry.find('=');
        if (eq == std::string::npos || eq == 0)
            throw CliError{kExitUsage, "--table expects NAME=FILE, got '" + entry + "'"};
        std::string name = entry.substr(0, eq);
        std::string path = entry.substr(eq + 1);
        std::ifstream in(path);
        if (!in.good()) throw CliError{kExitData, "cannot read table file '" + path + "'"};
        CsvOptions opts;
        opts.header = true;
        db.add(name, load_relation(in, {}, opts));
    }
    return db;
}

Circuit load_circuit_file(const std::string& path) {
    Circuit c = circuit_from_json(parse_json_file(path));
    ValidationReport report = validate(c);
    if (!report.ok) {
        std::string msg = "circuit '" + path + "' is invalid:";
        for (const auto& v : report.violations) msg += "\n  [" + v.rule + "] " + v.message;
        throw CliError{kExitData, msg};
    }
    return c;
}

//! Shared way for commands to get their circuit: either a circuit JSON
//! file, or a query compiled against CSV tables.
struct CircuitSource {
    std::string circuit_path;
    std::string query_path;
    std::string query_text;
    std::vector<std::string> tables;

    void add_options(CLI::App* cmd) {
        cmd->add_option("--circuit", circuit_path, "circuit JSON file");
        cmd->add_option("--query", query_path, "query file, e.g. \"Q(x,y) :- R(x), S(x,y).\"");
        cmd->add_option("--query-text", query_text, "query given inline");
        cmd->add_option("--table", tables, "table as NAME=FILE (CSV with a header line)");
    }

    bool has_query() const { return !query_path.empty() || !query_text.empty(); }

    Circuit obtain(bool normalized, std::optional<ConjunctiveQuery>* query_out = nullptr) const {
        if (!circuit_path.empty() && has_query())
            throw CliError{kExitUsage, "pass either --circuit or a query, not both"};
        Circuit c({}, -1, {"none"});
        if (!circuit_path.empty()) {
            c = load_circuit_file(circuit_path);
        } else if (has_query()) {
            ConjunctiveQuery q =
                parse_query(query_text.empty() ? slurp(query_path) : query_text);
            Database db = load_tables(tables);
            c = compile(q, db);
            if (query_out) *query_out = q;
        } else {
            throw CliError{kExitUsage, "need --circuit FILE, or --query/--query-text with --table"};
        }
        if (normalized && !is_normalized(c)) c = normalize(c).circuit;
        return c;
    }
};

bool g_json = false;

void emit(const nlohmann::json& j, const std::string& text) {
    if (g_json)
        std::cout << j.dump(2) << "\n";
    else
        std::cout << text;
}

//! Run `cmd <lp-file>` and read an objective value back from its output.
//! Accepts lines like "obj = 1.5", "objective: 1.5" or "Optimal - objective value 1.5".
double run_external_solver(const std::string& cmd, const LinearProgram& lp) {
    LpExport e = export_lp_text(lp);
    std::string text = e.text;
    if (!e.renamed.empty()) {
        std::string names = "\\ variable renaming:\n";
        for (const auto& [from, to] : e.renamed) names += "\\   " + from + " = " + to + "\n";
        text = names + text;
    }
    auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
    std::filesystem::path path =
        std::filesystem::temp_directory_path() / ("factlp_" + std::to_string(stamp) + ".lp");
    spill(path.string(), text);

    std::string full = cmd + " '" + path.string() + "'";
    FILE* pipe = popen(full.c_str(), "r");
    if (!pipe) {
        std::filesystem::remove(path);
        throw CliError{kExitMismatch, "cannot run external solver '" + cmd + "'"};
    }
    std::string output;
    char buf[512];
    while (fgets(buf, sizeof buf, pipe)) output += buf;
    int rc = pclose(pipe);
    std::filesystem::remove(path);
    if (rc != 0)
        throw CliError{kExitMismatch,
                       "external solver exited with a failure:\n" + output};
    static const std::regex pattern(
        R"((?:objective value|objective|obj)\s*[:=]?\s*(-?[0-9]+(?:\.[0-9]+)?(?:[eE][+-]?[0-9]+)?))",
        std::regex::icase);
    std::smatch m;
    if (!std::regex_search(output, m, pattern))
        throw CliError{kExitMismatch, "no objective value in external solver output:\n" + output};
    return std::stod(m[1].str());
}

EdgeWeighting weights_from_solution(const Circuit& c, const Solution& s) {
    EdgeWeighting w(c.num_edges(), 0.0);
    for (std::size_t i = 0; i < c.num_edges(); ++i) {
        auto it = s.assignment.find("e" + std::to_string(i));
        if (it == s.assignment.end())
            throw numeric_error("solution is missing edge variable e" + std::to_string(i));
        w[i] = it->second > 0.0 ? it->second : 0.0;
        if (it->second < -kFlowTol)
            throw numeric_error("solution has a negative flow on e" + std::to_string(i));
    }
    return w;
}

void check_match(const std::string& what, double expected, double got) {
    if (!nearly_equal(expected, got, kObjectiveRelTol))
        throw CliError{kExitMismatch, what + ": expected " + format_number(expected) + ", got " +
                                          format_number(got)};
}

// --------------------------------------------------------------------------

struct CompileArgs {
    CircuitSource source;
    bool do_normalize = false;
    std::string out_path;
};

void cmd_compile(const CompileArgs& a) {
    std::optional<ConjunctiveQuery> q;
    Circuit c = a.source.obtain(false, &q);
    if (a.do_normalize && !is_normalized(c)) c = normalize(c).circuit;
    unsigned long long n = count_tuples(c);

    nlohmann::json j{{"command", "compile"},
                     {"gates", c.num_gates()},
                     {"edges", c.num_edges()},
                     {"answers", n},
                     {"normalized", is_normalized(c)},
                     {"attributes", c.attributes()}};
    std::string text;
    text += "gates: " + std::to_string(c.num_gates()) + "\n";
    text += "edges: " + std::to_string(c.num_edges()) + "\n";
    text += "answers: " + std::to_string(n) + "\n";
    text += std::string("normalized: ") + (is_normalized(c) ? "yes" : "no") + "\n";
    if (!a.out_path.empty()) {
        spill(a.out_path, circuit_to_json(c).dump(2) + "\n");
        j["circuit_file"] = a.out_path;
        text += "circuit written to " + a.out_path + "\n";
    }
    emit(j, text);
}

struct CountArgs {
    CircuitSource source;
    bool do_enumerate = false;
    bool check = false;
};

void cmd_count(const CountArgs& a) {
    Circuit c = a.source.obtain(false);
    unsigned long long n = count_tuples(c);
    nlohmann::json j{{"command", "count"}, {"count", n}};
    std::string text = "count: " + std::to_string(n) + "\n";
    if (a.do_enumerate || a.check) {
        Relation r = enumerate(c);
        if (a.check && r.size() != n)
            throw CliError{kExitMismatch,
                           "count " + std::to_string(n) + " does not match the " +
                               std::to_string(r.size()) + " enumerated answers"};
        if (a.do_enumerate) {
            j["answers"] = relation_to_json(r);
            for (const auto& t : r.tuples()) text += tuple_to_string(t) + "\n";
        }
    }
    emit(j, text);
}

struct SolveArgs {
    CircuitSource source;
    std::string program_path;
    bool allow_min = false;
    bool compare = false;
    bool project_head = false;
    std::string out_lp;
    std::string out_weights;
    std::string external;
};

void cmd_solve(const SolveArgs& a) {
    CasLp lp = caslp_from_json(parse_json_file(a.program_path), a.allow_min);
    std::optional<ConjunctiveQuery> q;
    Circuit c = a.source.obtain(true, &q);
    if (a.project_head && !q)
        throw CliError{kExitUsage, "--project-head needs a query, not a raw circuit"};

    auto t0 = std::chrono::steady_clock::now();
    LinearProgram rewritten = rewrite(lp, c);
    Solution s = solve(rewritten);
    double rewrite_ms = ms_between(t0, std::chrono::steady_clock::now());

    nlohmann::json j{{"command", "solve"},
                     {"status", status_to_string(s.status)},
                     {"variables", rewritten.variables.size()},
                     {"constraints", rewritten.constraints.size()},
                     {"rewrite_ms", rewrite_ms}};
    std::string text = "status: " + status_to_string(s.status) + "\n";
    if (s.status == SolveStatus::Optimal) {
        j["objective"] = s.objective_value;
        text += "objective: " + format_number(s.objective_value) + "\n";
    }
    text += "edge variables: " + std::to_string(rewritten.variables.size()) + "\n";
    text += "constraints: " + std::to_string(rewritten.constraints.size()) + "\n";

    if (!a.out_lp.empty()) {
        LpExport e = export_lp_text(rewritten);
        std::string content;
        if (!e.renamed.empty()) {
            content += "\\ variable renaming:\n";
            for (const auto& [from, to] : e.renamed)
                content += "\\   " + from + " = " + to + "\n";
        }
        content += e.text;
        spill(a.out_lp, content);
        j["lp_file"] = a.out_lp;
        text += "lp written to " + a.out_lp + "\n";
    }

    if (a.compare) {
        Relation answers = enumerate(c);
        LinearProgram grounded = ground(lp, answers);
        Solution gs = solve(grounded);
        j["ground_variables"] = grounded.variables.size();
        j["ground_status"] = status_to_string(gs.status);
        text += "ground variables: " + std::to_string(grounded.variables.size()) + "\n";
        if (gs.status != s.status)
            throw CliError{kExitMismatch, "rewrite solved to " + status_to_string(s.status) +
                                              " but the grounded program is " +
                                              status_to_string(gs.status)};
        if (s.status == SolveStatus::Optimal) {
            j["ground_objective"] = gs.objective_value;
            check_match("grounded objective", gs.objective_value, s.objective_value);
            text += "ground objective: " + format_number(gs.objective_value) + " (match)\n";
        }
    }

    if (!a.external.empty()) {
        if (s.status != SolveStatus::Optimal)
            throw CliError{kExitUsage, "--external-solver needs an optimal solution to compare"};
        double v = run_external_solver(a.external, rewritten);
        check_match("external objective", v, s.objective_value);
        j["external_objective"] = v;
        text += "external objective: " + format_number(v) + " (match)\n";
    }

    if (!a.out_weights.empty()) {
        if (s.status != SolveStatus::Optimal)
            throw CliError{kExitSolver, "cannot reconstruct weights: the program solved to " +
                                            status_to_string(s.status)};
        EdgeWeighting w = weights_from_solution(c, s);
        TupleWeighting omega = reconstruct_all(c, w);
        if (a.project_head && q) {
            auto removed = q->existential_variables();
            if (!removed.empty()) omega = project_weighting(omega, removed);
        }
        spill(a.out_weights, tuple_weighting_to_json(omega).dump(2) + "\n");
        j["weights_file"] = a.out_weights;
        text += "weights written to " + a.out_weights + "\n";
    }
    emit(j, text);
}

struct DwcArgs {
    CircuitSource source;
    bool compare = false;
    std::string out_weights;
    std::string external;
};

void cmd_dwc(const DwcArgs& a) {
    Circuit c = a.source.obtain(true);
    LinearProgram clp = dwc_circuit(c);
    Solution s = solve(clp);
    if (s.status != SolveStatus::Optimal)
        throw CliError{kExitSolver,
                       "capacity program solved to " + status_to_string(s.status)};

    nlohmann::json j{{"command", "dwc"},
                     {"dwc", s.objective_value},
                     {"variables", clp.variables.size()}};
    std::string text = "dwc: " + format_number(s.objective_value) + "\n";

    if (a.compare) {
        Relation answers = enumerate(c);
        Solution gs = solve(dwc_ground(answers));
        if (gs.status != SolveStatus::Optimal)
            throw CliError{kExitMismatch, "grounded capacity program solved to " +
                                              status_to_string(gs.status)};
        check_match("grounded weighted count", gs.objective_value, s.objective_value);
        j["ground_dwc"] = gs.objective_value;
        text += "ground dwc: " + format_number(gs.objective_value) + " (match)\n";
    }

    if (!a.external.empty()) {
        double v = run_external_solver(a.external, clp);
        check_match("external weighted count", v, s.objective_value);
        j["external_dwc"] = v;
        text += "external dwc: " + format_number(v) + " (match)\n";
    }

    if (!a.out_weights.empty()) {
        EdgeWeighting w = weights_from_solution(c, s);
        TupleWeighting omega = reconstruct_all(c, w);
        spill(a.out_weights, tuple_weighting_to_json(omega).dump(2) + "\n");
        j["weights_file"] = a.out_weights;
        text += "weights written to " + a.out_weights + "\n";
    }
    emit(j, text);
}

struct ReconstructArgs {
    std::string circuit_path;
    std::string weights_path;
    bool induce = false;
    std::string out_path;
};

void cmd_reconstruct(const ReconstructArgs& a) {
    Circuit c = load_circuit_file(a.circuit_path);
    if (!is_normalized(c))
        throw CliError{kExitData,
                       "the circuit is not normalized; recompile with 'compile --normalize'"};
    nlohmann::json in = parse_json_file(a.weights_path);
    nlohmann::json out;
    std::string text;
    if (a.induce) {
        TupleWeighting omega = tuple_weighting_from_json(in);
        EdgeWeighting w = induce_edge_weighting(c, omega);
        out = edge_weighting_to_json(w);
        for (std::size_t e = 0; e < w.size(); ++e)
            text += "e" + std::to_string(e) + ": " + format_number(w[e]) + "\n";
    } else {
        EdgeWeighting w = edge_weighting_from_json(in, c.num_edges());
        TupleWeighting omega = reconstruct_all(c, w);
        out = tuple_weighting_to_json(omega);
        for (const auto& [t, v] : omega)
            text += tuple_to_string(t) + ": " + format_number(v) + "\n";
    }
    if (!a.out_path.empty()) {
        spill(a.out_path, out.dump(2) + "\n");
        emit(nlohmann::json{{"command", "reconstruct"}, {"out_file", a.out_path}},
             "weights written to " + a.out_path + "\n");
    } else {
        emit(out, text);
    }
}

struct ValidateArgs {
    std::string circuit_path;
    std::string query_path;
    std::string program_path;
    bool disjoint = false;
};

void cmd_validate(const ValidateArgs& a) {
    if (a.circuit_path.empty() && a.query_path.empty() && a.program_path.empty())
        throw CliError{kExitUsage, "nothing to validate: pass --circuit, --query or --program"};
    nlohmann::json j{{"command", "validate"}};
    std::string text;

    if (!a.circuit_path.empty()) {
        Circuit c = circuit_from_json(parse_json_file(a.circuit_path));
        ValidationReport report = validate(c, a.disjoint);
        j["circuit_ok"] = report.ok;
        j["normalized"] = is_normalized(c);
        if (report.disjoint_unions) j["disjoint_unions"] = *report.disjoint_unions;
        auto violations = nlohmann::json::array();
        for (const auto& v : report.violations) {
            violations.push_back({{"rule", v.rule}, {"gate", v.gate}, {"message", v.message}});
            text += "violation [" + v.rule + "] gate " + std::to_string(v.gate) + ": " +
                    v.message + "\n";
        }
        j["violations"] = violations;
        text += std::string("circuit: ") + (report.ok ? "ok" : "invalid") + "\n";
        if (!report.ok) {
            emit(j, text);
            throw CliError{kExitData, "circuit validation failed"};
        }
        if (report.disjoint_unions && !*report.disjoint_unions) {
            emit(j, text + "unions overlap\n");
            throw CliError{kExitData, "circuit unions are not disjoint"};
        }
    }
    if (!a.query_path.empty()) {
        ConjunctiveQuery q = parse_query(slurp(a.query_path));
        JoinTree t = gyo_join_tree(q); // throws not_acyclic_error -> exit 4
        j["query_ok"] = true;
        j["join_tree_root"] = t.root;
        j["join_tree_parents"] = t.parent;
        text += "query: ok (acyclic, " + std::to_string(q.atoms.size()) + " atoms)\n";
    }
    if (!a.program_path.empty()) {
        CasLp lp = caslp_from_json(parse_json_file(a.program_path), true);
        j["program_ok"] = true;
        j["program_constraints"] = lp.constraints.size();
        text += "program: ok (" + std::to_string(lp.constraints.size()) + " constraints)\n";
    }
    emit(j, text);
}

struct BenchArgs {
    std::vector<int> sizes{5, 10, 20};
    double cap = 100.0;
    std::string out_path;
};

//! Star-schema scaling benchmark: N projects share one field and one
//! language with N researchers and N developers, so the full join has N^3
//! answers while the circuit stays linear in N. Both paths must agree on
//! the optimum cap * N.
void cmd_bench(const BenchArgs& a) {
    CasLp lp;
    lp.attributes = {"p", "r", "d"};
    lp.objective = {{"p", "*", 1.0}};
    lp.constraints.push_back({{{"r", "*", 1.0}}, Rel::LessEq, a.cap, std::string("r")});
    lp.constraints.push_back({{{"d", "*", 1.0}}, Rel::LessEq, a.cap, std::string("d")});
    ConjunctiveQuery q = parse_query(
        "Q(p, r, d, f, l) :- projects(p, f, l), researchers(r, f), developers(d, l).");

    std::string csv = "n,ground_vars,rewrite_vars,ground_ms,rewrite_ms\n";
    auto rows = nlohmann::json::array();
    for (int n : a.sizes) {
        if (n < 1) throw CliError{kExitUsage, "--sizes entries must be positive"};
        Database db;
        {
            Relation projects({"p", "f", "l"});
            Relation researchers({"r", "f"});
            Relation developers({"d", "l"});
            for (int i = 0; i < n; ++i) {
                projects.insert_row({"p" + std::to_string(i), "F0", "L0"});
                researchers.insert_row({"r" + std::to_string(i), "F0"});
                developers.insert_row({"d" + std::to_string(i), "L0"});
            }
            db.add("projects", std::move(projects));
            db.add("researchers", std::move(researchers));
            db.add("developers", std::move(developers));
        }
        double expected = a.cap * n;

        auto g0 = std::chrono::steady_clock::now();
        Relation answers = eval_naive(q, db);
        LinearProgram grounded = ground(lp, answers);
        Solution gs = solve(grounded);
        double ground_ms = ms_between(g0, std::chrono::steady_clock::now());
        if (gs.status != SolveStatus::Optimal)
            throw CliError{kExitMismatch, "grounded benchmark program did not solve"};
        check_match("grounded benchmark optimum", expected, gs.objective_value);
        std::size_t want = static_cast<std::size_t>(n);
        if (grounded.variables.size() != want * want * want)
            throw CliError{kExitMismatch, "grounded program should have n^3 variables"};

        auto r0 = std::chrono::steady_clock::now();
        Circuit c = normalize(compile(q, db)).circuit;
        LinearProgram rewritten = rewrite(lp, c);
        Solution rs = solve(rewritten);
        double rewrite_ms = ms_between(r0, std::chrono::steady_clock::now());
        if (rs.status != SolveStatus::Optimal)
            throw CliError{kExitMismatch, "rewritten benchmark program did not solve"};
        check_match("rewritten benchmark optimum", expected, rs.objective_value);

        char line[160];
        std::snprintf(line, sizeof line, "%d,%zu,%zu,%.2f,%.2f\n", n,
                      grounded.variables.size(), rewritten.variables.size(), ground_ms,
                      rewrite_ms);
        csv += line;
        rows.push_back({{"n", n},
                        {"ground_vars", grounded.variables.size()},
                        {"rewrite_vars", rewritten.variables.size()},
                        {"ground_ms", ground_ms},
                        {"rewrite_ms", rewrite_ms},
                        {"objective", rs.objective_value}});
    }
    if (!a.out_path.empty()) spill(a.out_path, csv);
    emit(nlohmann::json{{"command", "bench"}, {"rows", rows}}, csv);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"factorized circuits and linear programs over query answers"};
    app.require_subcommand(1);
    std::string format = "text";
    app.add_option("--format", format, "output format: text or json")
        ->check(CLI::IsMember({"text", "json"}));

    CompileArgs compile_args;
    auto* compile_cmd = app.add_subcommand("compile", "compile a query into a circuit");
    compile_args.source.add_options(compile_cmd);
    compile_cmd->add_flag("--normalize", compile_args.do_normalize,
                          "rewrite the circuit into normal form");
    compile_cmd->add_option("--out", compile_args.out_path, "write the circuit JSON here");

    CountArgs count_args;
    auto* count_cmd = app.add_subcommand("count", "count the answers of a circuit or query");
    count_args.source.add_options(count_cmd);
    count_cmd->add_flag("--enumerate", count_args.do_enumerate, "also list every answer");
    count_cmd->add_flag("--check", count_args.check,
                        "verify the count against full enumeration");

    SolveArgs solve_args;
    auto* solve_cmd =
        app.add_subcommand("solve", "rewrite an answer-sum program onto circuit edges and solve");
    solve_args.source.add_options(solve_cmd);
    solve_cmd->add_option("--program", solve_args.program_path, "program JSON file")->required();
    solve_cmd->add_flag("--allow-min", solve_args.allow_min, "accept minimization programs");
    solve_cmd->add_flag("--compare", solve_args.compare,
                        "also solve the grounded program and verify the results agree");
    solve_cmd->add_flag("--project-head", solve_args.project_head,
                        "sum reconstructed weights onto the query head variables");
    solve_cmd->add_option("--out-lp", solve_args.out_lp, "write the rewritten program as LP text");
    solve_cmd->add_option("--out-weights", solve_args.out_weights,
                          "reconstruct per-answer weights into this JSON file");
    solve_cmd->add_option("--external-solver", solve_args.external,
                          "verify against `CMD file.lp`; it must print an objective value");

    DwcArgs dwc_args;
    auto* dwc_cmd = app.add_subcommand(
        "dwc", "maximum total answer weight with unit capacity per attribute value");
    dwc_args.source.add_options(dwc_cmd);
    dwc_cmd->add_flag("--compare", dwc_args.compare, "verify against the grounded program");
    dwc_cmd->add_option("--out-weights", dwc_args.out_weights,
                        "reconstruct an optimal weighting into this JSON file");
    dwc_cmd->add_option("--external-solver", dwc_args.external,
                        "verify against `CMD file.lp`; it must print an objective value");

    ReconstructArgs rec_args;
    auto* rec_cmd = app.add_subcommand(
        "reconstruct", "turn a sound edge weighting into per-answer weights (or back)");
    rec_cmd->add_option("--circuit", rec_args.circuit_path, "normalized circuit JSON")->required();
    rec_cmd->add_option("--weights", rec_args.weights_path, "weighting JSON file")->required();
    rec_cmd->add_flag("--induce", rec_args.induce,
                      "read tuple weights and induce edge weights instead");
    rec_cmd->add_option("--out", rec_args.out_path, "write the resulting weighting here");

    ValidateArgs val_args;
    auto* val_cmd = app.add_subcommand("validate", "check circuits, queries or programs");
    val_cmd->add_option("--circuit", val_args.circuit_path, "circuit JSON to check");
    val_cmd->add_flag("--disjoint", val_args.disjoint,
                      "also verify unions are disjoint (enumerates, slow)");
    val_cmd->add_option("--query", val_args.query_path, "query file to parse and test");
    val_cmd->add_option("--program", val_args.program_path, "program JSON to check");

    BenchArgs bench_args;
    auto* bench_cmd =
        app.add_subcommand("bench", "star-schema scaling: grounded vs rewritten program");
    bench_cmd->add_option("--sizes", bench_args.sizes, "independent table sizes to run")
        ->delimiter(',');
    bench_cmd->add_option("--cap", bench_args.cap, "capacity per researcher/developer");
    bench_cmd->add_option("--out", bench_args.out_path, "also write the CSV here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : kExitUsage;
    }
    g_json = format == "json";

    try {
        if (app.got_subcommand(compile_cmd)) cmd_compile(compile_args);
        if (app.got_subcommand(count_cmd)) cmd_count(count_args);
        if (app.got_subcommand(solve_cmd)) cmd_solve(solve_args);
        if (app.got_subcommand(dwc_cmd)) cmd_dwc(dwc_args);
        if (app.got_subcommand(rec_cmd)) cmd_reconstruct(rec_args);
        if (app.got_subcommand(val_cmd)) cmd_validate(val_args);
        if (app.got_subcommand(bench_cmd)) cmd_bench(bench_args);
        return 0;
    } catch (const CliError& e) {
        std::cerr << "error: " << e.message << "\n";
        return e.code;
    } catch (const not_acyclic_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        for (const auto& atom : e.residual_atoms) std::cerr << "  residual: " << atom << "\n";
        return kExitCyclic;
    } catch (const numeric_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitSolver;
    } catch (const factlp::error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kExitSolver;
    }
}
