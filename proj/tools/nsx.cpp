// nsx: neuro-symbolic constraint toolkit command line.
//
// Subcommands: check, train, sample, solve, bench, explain.
// Exit codes: 0 SAT/success, 1 UNSAT, 2 UNKNOWN, 64 usage error,
// 65 input format error, 70 internal error.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "nsx/error.hpp"
#include "nsx/harness.hpp"
#include "nsx/mixed.hpp"
#include "nsx/nnet.hpp"
#include "nsx/parser.hpp"
#include "nsx/rng.hpp"
#include "nsx/symsolv.hpp"

namespace {

constexpr int kExitSat = 0;
constexpr int kExitUnsat = 1;
constexpr int kExitUnknown = 2;
constexpr int kExitUsage = 64;
constexpr int kExitFormat = 65;
constexpr int kExitInternal = 70;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw nsx::FileFormatError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string dir_of(const std::string& path) {
    const auto slash = path.find_last_of('/');
    return slash == std::string::npos ? std::string() : path.substr(0, slash + 1);
}

std::vector<std::string> split_names(const std::string& csv) {
    std::vector<std::string> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(item);
    return out;
}

void write_or_print(const std::string& path, const std::string& text) {
    if (path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(path);
    if (!out) throw nsx::FileFormatError("cannot write '" + path + "'");
    out << text;
}

struct BenchRow {
    nsx::TaskReport report;
};

std::string bench_table(const std::vector<nsx::TaskReport>& rows) {
    std::string out;
    char line[256];
    std::snprintf(line, sizeof line, "%-12s %-5s %5s %5s %9s %10s\n", "program", "type", "T_NS",
                  "T_NE", "accuracy", "validated");
    out += line;
    int sat = 0, sat3 = 0, valid = 0, acc80 = 0;
    for (const auto& r : rows) {
        std::snprintf(line, sizeof line, "%-12s %-5s %5d %5d %9.4f %10s\n", r.program.c_str(),
                      r.guard_class.c_str(), r.t_ns, r.t_ne, r.accuracy,
                      r.validated ? "yes" : (r.model_relative_only ? "model-only" : "no"));
        out += line;
        if (r.verdict == nsx::Verdict::Sat) ++sat;
        if (r.verdict == nsx::Verdict::Sat && r.t_ns <= 3) ++sat3;
        if (r.validated) ++valid;
        if (r.accuracy >= 0.8) ++acc80;
    }
    std::snprintf(line, sizeof line,
                  "suite: programs=%zu sat=%d sat_within_3=%d validated=%d acc_ge_0.8=%d\n",
                  rows.size(), sat, sat3, valid, acc80);
    out += line;
    return out;
}

int cmd_check(const std::string& file, bool print_ast) {
    const nsx::ConstraintFile cf = nsx::parse(read_file(file));
    if (print_ast) {
        std::cout << nsx::print(cf);
    } else {
        std::cout << "ok: " << cf.decls.size() << " declarations, " << cf.symbolic.size()
                  << " constraints, " << cf.neural.size() << " neural\n";
    }
    return kExitSat;
}

int cmd_train(const std::string& data_path, const std::string& in_csv, const std::string& out_csv,
              const std::string& model_path, nsx::TrainConfig tc, double ratio, uint64_t seed) {
    const nsx::Dataset data = nsx::load_csv(data_path);
    auto [train_ds, held] = nsx::split(data, ratio, seed);
    tc.seed = seed;
    auto [model, report] = nsx::train(train_ds, split_names(in_csv), split_names(out_csv), tc);
    const double held_acc = nsx::accuracy(model, held);
    if (!model_path.empty()) nsx::save(model, model_path);
    std::printf("rows=%zu train=%zu held_out=%zu\n", data.rows.size(), train_ds.rows.size(),
                held.rows.size());
    std::printf("epochs=%d stopped_early=%s final_train_loss=%.6g\n", report.epochs_run,
                report.stopped_early ? "yes" : "no", report.final_train_loss);
    std::printf("accuracy=%.4f\n", held_acc);
    if (!model_path.empty()) std::printf("model=%s\n", model_path.c_str());
    return kExitSat;
}

int cmd_sample(const std::string& program, int n, uint64_t seed, const std::string& out_path) {
    const nsx::TargetProgram* p = nsx::find_program(program);
    if (!p) {
        std::fprintf(stderr, "unknown program '%s'\n", program.c_str());
        return kExitUsage;
    }
    nsx::SampleStats stats;
    const nsx::Dataset d = nsx::sample(*p, n, seed, &stats);
    nsx::save_csv(d, out_path);
    std::printf("rows=%zu runs=%d rejected=%d truncated=%d out=%s\n", d.rows.size(), stats.runs,
                stats.rejected, stats.truncated, out_path.c_str());
    return kExitSat;
}

int cmd_solve(const std::string& file, nsx::SolverConfig cfg, const std::string& report_path) {
    const nsx::ConstraintFile cf = nsx::parse(read_file(file));
    nsx::ModelRegistry models;
    const std::string dir = dir_of(file);
    for (const auto& nd : cf.neural) {
        if (models.count(nd.model_path)) continue;
        std::string path = nd.model_path;
        std::ifstream probe(path);
        if (!probe && !dir.empty()) path = dir + nd.model_path;
        models.emplace(nd.model_path, nsx::load(path));
    }
    const nsx::SolveResult r = nsx::solve(cf, models, cfg);
    if (!report_path.empty()) write_or_print(report_path, nsx::format_report(r));
    switch (r.verdict) {
    case nsx::Verdict::Sat: {
        std::string line = "SAT";
        for (const auto& [name, value] : r.assignment) line += " " + name + "=" + to_string(value);
        std::cout << line << "\n";
        return kExitSat;
    }
    case nsx::Verdict::Unsat:
        std::cout << "UNSAT\n";
        return kExitUnsat;
    case nsx::Verdict::Unknown:
        std::cout << "UNKNOWN" << (r.diag.message.empty() ? "" : " # " + r.diag.message) << "\n";
        return kExitUnknown;
    }
    return kExitInternal;
}

int cmd_bench(const std::string& suite, const std::string& program, nsx::TaskConfig cfg,
              const std::string& out_path, const std::string& report_path) {
    std::vector<nsx::TaskReport> rows;
    std::string reports;
    auto run_one = [&](const nsx::TargetProgram& p, bool exploit) {
        nsx::TaskConfig c = cfg;
        c.seed = nsx::mix_seed(cfg.seed, std::hash<std::string>{}(p.name));
        nsx::TaskReport r = exploit ? nsx::run_exploit_task(p, c) : nsx::run_loop_task(p, c);
        reports += nsx::format_report(r) + "\n";
        rows.push_back(std::move(r));
    };
    if (!program.empty()) {
        const nsx::TargetProgram* p = nsx::find_program(program);
        if (!p) {
            std::fprintf(stderr, "unknown program '%s'\n", program.c_str());
            return kExitUsage;
        }
        run_one(*p, p->guard_class == "EXP");
    } else if (suite == "loops") {
        for (const auto& p : nsx::builtin_loop_suite()) run_one(p, false);
    } else if (suite == "exploit") {
        run_one(nsx::builtin_exploit_program(), true);
    } else {
        std::fprintf(stderr, "unknown suite '%s' (use: loops, exploit)\n", suite.c_str());
        return kExitUsage;
    }
    write_or_print(out_path, bench_table(rows));
    if (!report_path.empty()) write_or_print(report_path, reports);
    for (const auto& r : rows)
        if (!r.validated) return kExitUnknown;
    return kExitSat;
}

int cmd_explain(const std::string& model_path) {
    const nsx::MlpModel m = nsx::load(model_path);
    for (const auto& [name, score] : nsx::explain(m))
        std::printf("%-24s %.6g\n", name.c_str(), score);
    return kExitSat;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"nsx: neuro-symbolic constraint solving toolkit"};
    app.require_subcommand(1);

    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());

    // check
    auto* check = app.add_subcommand("check", "parse and type-check a constraint file");
    std::string check_file;
    bool print_ast = false;
    check->add_option("file", check_file)->required();
    check->add_flag("--print-ast", print_ast, "echo the canonical form");

    // train
    auto* train = app.add_subcommand("train", "train a model from a dataset CSV");
    std::string train_data, train_in, train_out, train_model;
    nsx::TrainConfig tc;
    double train_ratio = 0.8;
    uint64_t train_seed = 1;
    std::vector<int> hidden;
    train->add_option("data", train_data)->required();
    train->add_option("--in", train_in, "comma-separated input columns")->required();
    train->add_option("--out", train_out, "comma-separated output columns")->required();
    train->add_option("--model", train_model, "output model file");
    train->add_option("--seed", train_seed);
    train->add_option("--epochs", tc.max_epochs);
    train->add_option("--batch", tc.batch_size);
    train->add_option("--lr", tc.learning_rate);
    train->add_option("--patience", tc.patience);
    train->add_option("--hidden", hidden, "hidden layer widths");
    train->add_option("--split", train_ratio, "train fraction (default 0.8)");

    // sample
    auto* samplec = app.add_subcommand("sample", "sample a built-in program into a CSV");
    std::string sample_prog, sample_out = "sample.csv";
    int sample_n = 1000;
    uint64_t sample_seed = 1;
    samplec->add_option("--program", sample_prog)->required();
    samplec->add_option("--n", sample_n);
    samplec->add_option("--seed", sample_seed);
    samplec->add_option("--out", sample_out);

    // solve
    auto* solvec = app.add_subcommand("solve", "solve a neuro-symbolic constraint file");
    std::string solve_file, solve_report;
    nsx::SolverConfig sc;
    sc.jobs = int(hw);
    solvec->add_option("file", solve_file)->required();
    solvec->add_option("--seed", sc.seed);
    solvec->add_option("--max-enum", sc.max_enum, "NeuSolv enumerations per trial");
    solvec->add_option("--trials", sc.m_t, "Mixed-II trial budget");
    solvec->add_option("--max-trial1", sc.max_trial1, "NeuSolv restarts per partial assignment");
    solvec->add_option("--max-trial2", sc.max_trial2, "Mixed-I iteration budget");
    solvec->add_option("--alpha", sc.alpha);
    solvec->add_option("--beta", sc.beta);
    solvec->add_option("--lr", sc.learning_rate);
    solvec->add_flag("--compat-unsat", sc.compat_unsat, "report UNKNOWN as UNSAT");
    solvec->add_option("--jobs", sc.jobs);
    solvec->add_option("--smt-solver", sc.smt_solver,
                       "external SMT solver command (default: env NSX_SMT_SOLVER)");
    solvec->add_option("--report", solve_report, "write a key=value report");

    // bench
    auto* bench = app.add_subcommand("bench", "run the built-in benchmark suite");
    std::string bench_suite = "loops", bench_prog, bench_out, bench_report;
    nsx::TaskConfig bc;
    bc.solver.jobs = int(hw);
    bench->add_option("--suite", bench_suite, "loops | exploit");
    bench->add_option("--program", bench_prog, "run a single program");
    bench->add_option("--seed", bc.seed);
    bench->add_option("--samples", bc.samples, "override per-program sample count");
    bench->add_option("--jobs", bc.solver.jobs);
    bench->add_option("--out", bench_out, "write the table to a file");
    bench->add_option("--report", bench_report, "write per-task key=value reports");

    // explain
    auto* explainc = app.add_subcommand("explain", "rank model inputs by influence");
    std::string explain_model;
    explainc->add_option("--model", explain_model)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e); // --help
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (*check) return cmd_check(check_file, print_ast);
        if (*train) {
            if (!hidden.empty()) tc.hidden = hidden;
            return cmd_train(train_data, train_in, train_out, train_model, tc, train_ratio,
                             train_seed);
        }
        if (*samplec) return cmd_sample(sample_prog, sample_n, sample_seed, sample_out);
        if (*solvec) {
            if (sc.smt_solver.empty())
                if (const char* env = std::getenv("NSX_SMT_SOLVER")) sc.smt_solver = env;
            return cmd_solve(solve_file, sc, solve_report);
        }
        if (*bench) return cmd_bench(bench_suite, bench_prog, bc, bench_out, bench_report);
        if (*explainc) return cmd_explain(explain_model);
    } catch (const nsx::ParseError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitFormat;
    } catch (const nsx::FileFormatError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitFormat;
    } catch (const nsx::SolveError& e) {
        std::fprintf(stderr, "solver error: %s\n", e.what());
        return kExitInternal;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "internal error: %s\n", e.what());
        return kExitInternal;
    }
    return kExitUsage;
}
