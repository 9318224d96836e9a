#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "nsx/ast.hpp"
#include "nsx/dataset.hpp"
#include "nsx/mixed.hpp"
#include "nsx/nnet.hpp"

namespace nsx {

// One observation per loop-head visit: cnt counts completed iterations, the
// values align with TargetProgram::observed.
struct ObsRow {
    int cnt = 0;
    std::vector<double> values;
};

struct Trace {
    std::vector<ObsRow> rows;
    bool rejected = false;  // input failed the program's own validation
    bool truncated = false; // stopped at the step limit with the guard still true
    bool overflow = false;  // vulnerable programs: the overflow flag fired
};

struct ProgramInput {
    std::string name;
    Kind kind = Kind::Int; // Int or Str
    long long lo = 0, hi = 0;        // sampling domain (Int) or length range (Str)
    std::string length_column;       // dataset column name for Str inputs
};

// A black-box target program: sampled inputs in, per-iteration observations
// out. `run` must be a total deterministic function of the prepared inputs.
struct TargetProgram {
    std::string name;
    std::string description;
    std::vector<ProgramInput> inputs;
    std::vector<std::string> observed;
    std::string guard_text;  // loop guard over observed (and input) variables
    std::string guard_class; // T1 (>=/<=), T2 (>/<), T3 (==/!=), T4 (&&/||)
    int step_limit = 256;
    int default_samples = 2000;
    // Enforces the program's input format on raw inputs (e.g. protocol
    // markers inside sampled strings); must preserve string lengths.
    std::function<Assignment(const Assignment&)> prepare;
    std::function<Trace(const Assignment&, int step_limit)> run;

    std::vector<VarDecl> input_decls() const;     // solver-facing declarations
    ConstraintPtr guard(const std::vector<VarDecl>& decls) const;
};

const std::vector<TargetProgram>& builtin_loop_suite();
const TargetProgram& builtin_exploit_program();
// nullptr when unknown; searches the loop suite and the exploit program.
const TargetProgram* find_program(const std::string& name);

// Wraps an external command as a TargetProgram. The command line gets each
// input substituted for {name} placeholders (and exported as NSX_IN_<NAME>);
// observations are read from stdout lines of the form
//   OBS cnt=<int> <name>=<value>...
TargetProgram external_program(const std::string& name, const std::string& command,
                               std::vector<ProgramInput> inputs,
                               std::vector<std::string> observed, std::string guard_text);

struct SampleStats {
    int runs = 0;
    int rejected = 0;
    int truncated = 0;
};

// Draws n input tuples uniformly (seeded), executes the program and flattens
// every observation row; string inputs contribute length columns. Rejected
// executions contribute no rows and are counted in stats.
Dataset sample(const TargetProgram& p, int n, uint64_t seed, SampleStats* stats = nullptr);

// Seeded shuffle, then split into (train, held_out); disjoint and exhaustive.
std::pair<Dataset, Dataset> split(const Dataset& d, double ratio, uint64_t seed);

struct TaskConfig {
    int samples = -1; // -1: the program's default
    double split_ratio = 0.8;
    TrainConfig train;
    SolverConfig solver;
    int max_attempts = 6; // re-solve attempts until a witness validates
    uint64_t seed = 1;
};

struct TaskReport {
    std::string program;
    std::string guard_class;
    Verdict verdict = Verdict::Unknown;
    int t_ns = 0;     // NeuSolv trials used by the successful solve
    int t_ne = 0;     // trials accumulated until a concretely validated witness
    double accuracy = 0.0;
    bool validated = false;
    bool model_relative_only = false; // SAT witness never passed concrete execution
    Assignment witness;
    std::string solved_by;
    int attempts = 0;
    long long wall_ms = 0;
    TrainReport train_report;
};

// Loop-invariant task: sample, split, train N: inputs+cnt -> observed,
// solve N && !guard, then validate any witness by executing the program and
// checking !guard on the observed state at the witness cnt. Witnesses that
// fail concrete validation are reported model-relative-only, never as task
// successes.
TaskReport run_loop_task(const TargetProgram& p, const TaskConfig& cfg);

// Exploit task against the built-in vulnerable parser: learns
// {uri_length, ver_length} -> {ptr}, solves the field-length constraints
// plus ptr > 99, materializes a concrete request and checks that executing
// it fires the overflow flag.
TaskReport run_exploit_task(const TargetProgram& p, const TaskConfig& cfg);

// key=value report block for one task.
std::string format_report(const TaskReport& r);

} // namespace nsx
