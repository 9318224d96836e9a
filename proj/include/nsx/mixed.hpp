#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "nsx/ast.hpp"
#include "nsx/nnet.hpp"
#include "nsx/symsolv.hpp"

namespace nsx {

enum class ComponentClass { PureSymbolic, PureNeural, Mixed };
const char* component_class_name(ComponentClass c);

struct Component {
    ComponentClass cls = ComponentClass::PureSymbolic;
    std::vector<int> symbolic;     // indices into ConstraintFile::symbolic
    std::vector<int> neural;       // indices into ConstraintFile::neural
    std::vector<std::string> vars; // sorted variable names of the component
};

// Bipartite constraint-variable graph partitioned into connected components
// by breadth-first traversal.
struct ConstraintGraph {
    std::vector<Component> components;
};

ConstraintGraph build_graph(const ConstraintFile& cf);

enum class Verdict { Sat, Unsat, Unknown };
const char* verdict_name(Verdict v);

struct SolverConfig {
    uint64_t seed = 1;
    int max_trial1 = 10;  // NeuSolv restarts per partial assignment
    int max_trial2 = 100; // Mixed-I conflict-clause iterations
    int m_t = 10;         // Mixed-II trials
    int max_enum = 10000; // enumerations per NeuSolv trial (M_e)
    double learning_rate = 0.1;
    double alpha = 0.5;
    double beta = 0.5;
    bool compat_unsat = false; // two-valued mode: UNKNOWN collapses to UNSAT
    int jobs = 1;
    std::string smt_solver; // external bridge command for SymSolv (empty: internal)
};

struct ComponentReport {
    ComponentClass cls = ComponentClass::PureSymbolic;
    std::string solved_by; // "symsolv" | "forward" | "mixed1" | "mixed2" | ""
    int mixed1_iterations = 0;
    int mixed1_rejections = 0;
    std::vector<Assignment> proposals; // Mixed-I symbolic picks, in order
    int neusolv_trials = 0;            // trials used by the successful search
    int mixed2_trials = 0;
    double best_loss = std::numeric_limits<double>::infinity();
};

struct SolveDiagnostics {
    long long model_evaluations = 0; // forward passes; 0 until pure-symbolic stage passes
    std::vector<ComponentReport> components;
    std::string message;
    long long wall_ms = 0;
};

struct SolveResult {
    Verdict verdict = Verdict::Unknown;
    Assignment assignment;
    SolveDiagnostics diag;
};

// Models keyed by the path string used in `neural` declarations.
using ModelRegistry = std::map<std::string, MlpModel>;

// Full pipeline: pure symbolic components first (any UNSAT exits before a
// single model evaluation), then pure neural by forward evaluation, then
// mixed components via conflict-clause backtracking (Mixed I) and the
// loss-encoded joint search (Mixed II). Any SAT is globally re-verified.
SolveResult solve(const ConstraintFile& cf, const ModelRegistry& models, const SolverConfig& cfg);

// Single-component entry points, exposed for instrumented tests.
SolveResult mixed_solve_I(const ConstraintFile& cf, const Component& comp,
                          const ModelRegistry& models, const SolverConfig& cfg, int comp_index,
                          std::vector<ConflictClause>& conflict_db, ComponentReport& report,
                          long long* model_evals);
SolveResult mixed_solve_II(const ConstraintFile& cf, const Component& comp,
                           const ModelRegistry& models, const SolverConfig& cfg, int comp_index,
                           ComponentReport& report, long long* model_evals);

// SAT soundness gate: symbolic constraints by check_sat, neural constraints
// within the output tolerance (integer outputs round; reals 1e-2 relative).
bool verify_solution(const ConstraintFile& cf, const ModelRegistry& models, const Assignment& a,
                     std::string* why = nullptr);

// Line-oriented key=value record of a solve.
std::string format_report(const SolveResult& r);

} // namespace nsx
