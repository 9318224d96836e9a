#include "nsx/harness.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "nsx/error.hpp"
#include "nsx/eval.hpp"
#include "nsx/parser.hpp"
#include "nsx/rng.hpp"

namespace nsx {

std::vector<VarDecl> TargetProgram::input_decls() const {
    std::vector<VarDecl> out;
    for (const auto& in : inputs) {
        VarDecl d;
        d.name = in.name;
        d.kind = in.kind;
        if (in.kind == Kind::Str) {
            d.has_maxlen = true;
            d.maxlen = in.hi;
        } else {
            d.has_domain = true;
            d.lo = double(in.lo);
            d.hi = double(in.hi);
        }
        out.push_back(d);
    }
    return out;
}

ConstraintPtr TargetProgram::guard(const std::vector<VarDecl>& decls) const {
    return parse_constraint_text(guard_text, decls);
}

// ---------------------------------------------------------------------------
// Sampling

namespace {

Assignment draw_inputs(const TargetProgram& p, Rng& rng) {
    Assignment a;
    for (const auto& in : p.inputs) {
        if (in.kind == Kind::Str) {
            const long long len = rng.uniform_int(in.lo, in.hi);
            std::string s(size_t(len), 'a');
            for (auto& ch : s) ch = char('a' + rng.uniform_int(0, 25));
            a[in.name] = TypedValue::of_str(std::move(s));
        } else {
            a[in.name] = TypedValue::of_int(rng.uniform_int(in.lo, in.hi));
        }
    }
    return a;
}

} // namespace

Dataset sample(const TargetProgram& p, int n, uint64_t seed, SampleStats* stats) {
    if (n < 1) throw Error("sample: n must be >= 1");
    Dataset d;
    for (const auto& in : p.inputs) {
        Dataset::Column c;
        c.name = in.kind == Kind::Str ? in.length_column : in.name;
        c.kind = Kind::Int;
        d.columns.push_back(c);
    }
    d.columns.push_back({"cnt", Kind::Int});
    for (const auto& obs : p.observed) d.columns.push_back({obs, Kind::Int});

    SampleStats local;
    for (int i = 0; i < n; ++i) {
        Rng rng(mix_seed(seed, uint64_t(i)));
        Assignment raw = draw_inputs(p, rng);
        Assignment prepared = p.prepare ? p.prepare(raw) : raw;
        Trace tr;
        try {
            tr = p.run(prepared, p.step_limit);
        } catch (...) {
            ++local.rejected;
            continue;
        }
        ++local.runs;
        if (tr.rejected) {
            ++local.rejected;
            continue;
        }
        if (tr.truncated) ++local.truncated;
        for (const auto& row : tr.rows) {
            std::vector<double> r;
            r.reserve(d.columns.size());
            for (const auto& in : p.inputs) {
                const TypedValue& v = prepared.at(in.name);
                r.push_back(v.kind == Kind::Str ? double(v.s.size()) : double(v.i));
            }
            r.push_back(double(row.cnt));
            for (double v : row.values) r.push_back(v);
            if (r.size() != d.columns.size()) throw Error("sample: observation arity mismatch");
            d.rows.push_back(std::move(r));
        }
    }
    if (stats) *stats = local;
    d.validate();
    return d;
}

std::pair<Dataset, Dataset> split(const Dataset& d, double ratio, uint64_t seed) {
    if (!(ratio > 0.0 && ratio < 1.0)) throw Error("split: ratio must be in (0, 1)");
    if (d.rows.size() < 2) throw Error("split: need at least 2 rows");
    std::vector<size_t> idx(d.rows.size());
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    Rng rng(mix_seed(seed, 0x5b11));
    for (size_t i = idx.size(); i > 1; --i)
        std::swap(idx[i - 1], idx[size_t(rng.uniform_int(0, (long long)i - 1))]);
    size_t cut = size_t(std::llround(double(d.rows.size()) * ratio));
    cut = std::min(std::max<size_t>(cut, 1), d.rows.size() - 1);
    Dataset train, held;
    train.columns = held.columns = d.columns;
    for (size_t i = 0; i < idx.size(); ++i)
        (i < cut ? train : held).rows.push_back(d.rows[idx[i]]);
    return {std::move(train), std::move(held)};
}

// ---------------------------------------------------------------------------
// Loop-invariant task

namespace {

struct TrainedTask {
    Dataset data;
    Dataset held_out;
    MlpModel model;
    TrainReport train_report;
    double held_accuracy = 0.0;
    std::vector<std::string> model_inputs;
    std::vector<std::string> model_outputs;
};

TrainedTask sample_and_train(const TargetProgram& p, const TaskConfig& cfg) {
    TrainedTask t;
    const int n = cfg.samples > 0 ? cfg.samples : p.default_samples;
    t.data = sample(p, n, cfg.seed);
    if (t.data.rows.size() < 20)
        throw Error("task: too few observation rows sampled from '" + p.name + "'");
    auto [train_ds, held] = split(t.data, cfg.split_ratio, mix_seed(cfg.seed, 2));
    t.held_out = std::move(held);

    for (const auto& in : p.inputs)
        t.model_inputs.push_back(in.kind == Kind::Str ? in.length_column : in.name);
    t.model_inputs.push_back("cnt");
    t.model_outputs = p.observed;

    TrainConfig tc = cfg.train;
    tc.seed = mix_seed(cfg.seed, 3);
    auto [model, report] = train(train_ds, t.model_inputs, t.model_outputs, tc);
    t.model = std::move(model);
    t.train_report = std::move(report);
    t.held_accuracy = accuracy(t.model, t.held_out);
    return t;
}

// Observed-variable declarations with domains taken from the sampled data
// (small margin), so the solver proposes values the model has seen.
std::vector<VarDecl> observed_decls(const TargetProgram& p, const Dataset& data) {
    std::vector<VarDecl> out;
    for (const auto& obs : p.observed) {
        const int c = data.column_index(obs);
        double lo = 0, hi = 0;
        bool first = true;
        for (const auto& row : data.rows) {
            lo = first ? row[c] : std::min(lo, row[c]);
            hi = first ? row[c] : std::max(hi, row[c]);
            first = false;
        }
        const double margin = std::max(5.0, 0.1 * (hi - lo));
        VarDecl d;
        d.name = obs;
        d.kind = Kind::Int;
        d.has_domain = true;
        d.lo = std::floor(lo - margin);
        d.hi = std::ceil(hi + margin);
        out.push_back(d);
    }
    return out;
}

int trials_used(const SolveResult& r) {
    int t = 0;
    for (const auto& c : r.diag.components) {
        if (c.solved_by == "mixed1") t = std::max(t, std::max(1, c.neusolv_trials));
        if (c.solved_by == "mixed2") t = std::max(t, std::max(1, c.mixed2_trials));
    }
    return std::max(t, 1);
}

std::string solved_by(const SolveResult& r) {
    for (const auto& c : r.diag.components)
        if (c.cls == ComponentClass::Mixed && !c.solved_by.empty()) return c.solved_by;
    return "";
}

} // namespace

TaskReport run_loop_task(const TargetProgram& p, const TaskConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    TaskReport rep;
    rep.program = p.name;
    rep.guard_class = p.guard_class;

    TrainedTask t = sample_and_train(p, cfg);
    rep.accuracy = t.held_accuracy;
    rep.train_report = t.train_report;

    // Constraint file: N(inputs, cnt -> observed) && !guard. The cnt domain
    // is the observed range; the model has no support beyond it.
    ConstraintFile cf;
    cf.decls = p.input_decls();
    {
        const int cnt_col = t.data.column_index("cnt");
        double max_cnt = 0;
        for (const auto& row : t.data.rows) max_cnt = std::max(max_cnt, row[cnt_col]);
        VarDecl cnt;
        cnt.name = "cnt";
        cnt.kind = Kind::Int;
        cnt.has_domain = true;
        cnt.lo = 0;
        cnt.hi = max_cnt;
        cf.decls.push_back(cnt);
    }
    for (const auto& d : observed_decls(p, t.data)) cf.decls.push_back(d);

    const ConstraintPtr guard = p.guard(cf.decls);
    cf.symbolic.push_back(negate(guard));
    NeuralDecl nd;
    nd.model_path = "mem:" + p.name;
    nd.inputs = t.model_inputs;
    nd.outputs = t.model_outputs;
    cf.neural.push_back(nd);
    validate(cf);

    ModelRegistry models;
    models.emplace(nd.model_path, t.model);

    for (int attempt = 0; attempt < cfg.max_attempts; ++attempt) {
        rep.attempts = attempt + 1;
        SolverConfig sc = cfg.solver;
        sc.seed = mix_seed(cfg.seed, 0x7a50 + uint64_t(attempt));
        const SolveResult r = solve(cf, models, sc);
        if (r.verdict == Verdict::Unsat) {
            rep.verdict = Verdict::Unsat;
            break;
        }
        if (r.verdict != Verdict::Sat) {
            rep.verdict = Verdict::Unknown;
            continue;
        }
        if (attempt == 0 || rep.t_ns == 0) rep.t_ns = trials_used(r);
        rep.t_ne += trials_used(r);
        rep.verdict = Verdict::Sat;
        rep.witness = r.assignment;
        rep.solved_by = solved_by(r);

        // Concrete validation: execute the program with the witness inputs
        // and check !guard on the observed state at the witness cnt.
        Assignment prog_inputs;
        for (const auto& in : p.inputs) prog_inputs[in.name] = r.assignment.at(in.name);
        const Assignment prepared = p.prepare ? p.prepare(prog_inputs) : prog_inputs;
        const Trace tr = p.run(prepared, p.step_limit);
        const long long want_cnt = r.assignment.at("cnt").i;
        const ObsRow* found = nullptr;
        for (const auto& row : tr.rows)
            if (row.cnt == want_cnt) {
                found = &row;
                break;
            }
        if (found && !tr.rejected) {
            Assignment concrete = prepared;
            concrete["cnt"] = TypedValue::of_int(want_cnt);
            for (size_t i = 0; i < p.observed.size(); ++i)
                concrete[p.observed[i]] = TypedValue::of_int((long long)found->values[i]);
            // guard is over numeric variables; string inputs only matter
            // through their length columns
            for (const auto& in : p.inputs)
                if (in.kind == Kind::Str)
                    concrete[in.length_column] =
                        TypedValue::of_int((long long)prepared.at(in.name).s.size());
            if (eval_constraint(*negate(guard), concrete)) {
                rep.validated = true;
                break;
            }
        }
        rep.model_relative_only = true;
        // The execution refuted this witness: exclude the (inputs, cnt)
        // tuple so the next attempt proposes something else.
        ConstraintPtr excl;
        for (const auto& in : p.inputs) {
            if (in.kind == Kind::Str) continue;
            auto atom = make_atom(CmpOp::Ne, make_var(in.name),
                                  make_num(double(r.assignment.at(in.name).i)));
            excl = excl ? make_or(excl, atom) : atom;
        }
        {
            auto atom = make_atom(CmpOp::Ne, make_var("cnt"), make_num(double(want_cnt)));
            excl = excl ? make_or(excl, atom) : atom;
        }
        cf.symbolic.push_back(excl);
    }
    if (rep.validated) rep.model_relative_only = false;

    rep.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                      std::chrono::steady_clock::now() - t0)
                      .count();
    return rep;
}

// ---------------------------------------------------------------------------
// Exploit task

TaskReport run_exploit_task(const TargetProgram& p, const TaskConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    TaskReport rep;
    rep.program = p.name;
    rep.guard_class = p.guard_class;

    TrainedTask t = [&] {
        TrainedTask tt;
        const int n = cfg.samples > 0 ? cfg.samples : p.default_samples;
        tt.data = sample(p, n, cfg.seed);
        if (tt.data.rows.size() < 20) throw Error("exploit task: too few accepted samples");
        auto [train_ds, held] = split(tt.data, cfg.split_ratio, mix_seed(cfg.seed, 2));
        tt.held_out = std::move(held);
        for (const auto& in : p.inputs)
            tt.model_inputs.push_back(in.kind == Kind::Str ? in.length_column : in.name);
        tt.model_outputs = p.observed;
        TrainConfig tc = cfg.train;
        tc.seed = mix_seed(cfg.seed, 3);
        auto [model, report] = train(train_ds, tt.model_inputs, tt.model_outputs, tc);
        tt.model = std::move(model);
        tt.train_report = std::move(report);
        tt.held_accuracy = accuracy(tt.model, tt.held_out);
        return tt;
    }();
    rep.accuracy = t.held_accuracy;
    rep.train_report = t.train_report;

    // The field-length constraints plus the vulnerable condition:
    //   uri_length == strlen(input_uri)
    //   ver_length == strlen(input_version)
    //   ptr > 99
    //   N: {uri_length, ver_length} -> {ptr}
    ConstraintFile cf;
    for (const auto& in : p.inputs) {
        VarDecl s;
        s.name = in.name;
        s.kind = Kind::Str;
        s.has_maxlen = true;
        s.maxlen = in.hi;
        cf.decls.push_back(s);
        VarDecl l;
        l.name = in.length_column;
        l.kind = Kind::Int;
        l.has_domain = true;
        l.lo = double(in.lo);
        l.hi = double(in.hi);
        cf.decls.push_back(l);
    }
    {
        VarDecl ptr;
        ptr.name = "ptr";
        ptr.kind = Kind::Int;
        ptr.has_domain = true;
        ptr.lo = 0;
        ptr.hi = 300;
        cf.decls.push_back(ptr);
    }
    for (const auto& in : p.inputs)
        cf.symbolic.push_back(
            make_atom(CmpOp::Eq, make_var(in.length_column), make_strlen(make_var(in.name))));
    cf.symbolic.push_back(make_atom(CmpOp::Gt, make_var("ptr"), make_num(99)));
    NeuralDecl nd;
    nd.model_path = "mem:" + p.name;
    nd.inputs = t.model_inputs;
    nd.outputs = t.model_outputs;
    cf.neural.push_back(nd);
    validate(cf);

    ModelRegistry models;
    models.emplace(nd.model_path, t.model);

    for (int attempt = 0; attempt < cfg.max_attempts; ++attempt) {
        rep.attempts = attempt + 1;
        SolverConfig sc = cfg.solver;
        sc.seed = mix_seed(cfg.seed, 0xe791 + uint64_t(attempt));
        const SolveResult r = solve(cf, models, sc);
        if (r.verdict == Verdict::Unsat) {
            rep.verdict = Verdict::Unsat;
            break;
        }
        if (r.verdict != Verdict::Sat) {
            rep.verdict = Verdict::Unknown;
            continue;
        }
        if (attempt == 0 || rep.t_ns == 0) rep.t_ns = trials_used(r);
        rep.t_ne += trials_used(r);
        rep.verdict = Verdict::Sat;
        rep.witness = r.assignment;
        rep.solved_by = solved_by(r);

        // Materialize the concrete request and execute the target.
        Assignment prog_inputs;
        for (const auto& in : p.inputs) prog_inputs[in.name] = r.assignment.at(in.name);
        const Assignment prepared = p.prepare ? p.prepare(prog_inputs) : prog_inputs;
        const Trace tr = p.run(prepared, p.step_limit);
        if (!tr.rejected && tr.overflow) {
            rep.validated = true;
            break;
        }
        rep.model_relative_only = true;
    }
    if (rep.validated) rep.model_relative_only = false;

    rep.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                      std::chrono::steady_clock::now() - t0)
                      .count();
    return rep;
}

std::string format_report(const TaskReport& r) {
    std::string out;
    out += "program=" + r.program + "\n";
    out += "guard_class=" + r.guard_class + "\n";
    out += std::string("verdict=") + verdict_name(r.verdict) + "\n";
    out += "t_ns=" + std::to_string(r.t_ns) + "\n";
    out += "t_ne=" + std::to_string(r.t_ne) + "\n";
    char acc[32];
    std::snprintf(acc, sizeof acc, "%.4f", r.accuracy);
    out += std::string("accuracy=") + acc + "\n";
    out += std::string("validated=") + (r.validated ? "yes" : "no") + "\n";
    if (r.model_relative_only) out += "model_relative_only=yes\n";
    if (!r.solved_by.empty()) out += "solved_by=" + r.solved_by + "\n";
    out += "attempts=" + std::to_string(r.attempts) + "\n";
    for (const auto& [name, value] : r.witness) out += "witness." + name + "=" + to_string(value) + "\n";
    return out;
}

// ---------------------------------------------------------------------------
// External-program mode

namespace {

std::string shell_quote(const std::string& s) {
    std::string out = "'";
    for (char c : s) {
        if (c == '\'')
            out += "'\\''";
        else
            out += c;
    }
    out += "'";
    return out;
}

} // namespace

TargetProgram external_program(const std::string& name, const std::string& command,
                               std::vector<ProgramInput> inputs,
                               std::vector<std::string> observed, std::string guard_text) {
    TargetProgram p;
    p.name = name;
    p.description = "external command: " + command;
    p.inputs = std::move(inputs);
    p.observed = std::move(observed);
    p.guard_text = std::move(guard_text);
    p.guard_class = "T1";
    const std::vector<ProgramInput> ins = p.inputs;
    const std::vector<std::string> obs = p.observed;
    p.run = [command, ins, obs](const Assignment& a, int /*step_limit*/) {
        std::string cmd = command;
        for (const auto& in : ins) {
            const TypedValue& v = a.at(in.name);
            const std::string val = v.kind == Kind::Str ? v.s : std::to_string(v.i);
            const std::string ph = "{" + in.name + "}";
            for (size_t pos = cmd.find(ph); pos != std::string::npos; pos = cmd.find(ph))
                cmd.replace(pos, ph.size(), shell_quote(val));
            std::string env_name = "NSX_IN_" + in.name;
            for (auto& ch : env_name) ch = char(std::toupper((unsigned char)ch));
            setenv(env_name.c_str(), val.c_str(), 1);
        }
        FILE* pipe = popen((cmd + " 2>/dev/null").c_str(), "r");
        if (!pipe) throw Error("external program: cannot spawn '" + cmd + "'");
        std::string output;
        char buf[4096];
        size_t got;
        while ((got = fread(buf, 1, sizeof buf, pipe)) > 0) output.append(buf, got);
        const int rc = pclose(pipe);

        Trace tr;
        std::istringstream lines(output);
        std::string line;
        while (std::getline(lines, line)) {
            if (line.rfind("OBS ", 0) != 0) continue;
            std::istringstream fields(line.substr(4));
            std::string field;
            ObsRow row;
            std::map<std::string, double> vals;
            bool have_cnt = false;
            while (fields >> field) {
                const auto eq = field.find('=');
                if (eq == std::string::npos)
                    throw FileFormatError("external program: bad OBS field '" + field + "'");
                const std::string key = field.substr(0, eq);
                const std::string raw = field.substr(eq + 1);
                double val = 0.0;
                auto [p, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), val);
                if (ec != std::errc() || p != raw.data() + raw.size())
                    throw FileFormatError("external program: bad value '" + raw + "'");
                if (key == "cnt") {
                    row.cnt = int(val);
                    have_cnt = true;
                } else {
                    vals[key] = val;
                }
            }
            if (!have_cnt) throw FileFormatError("external program: OBS line without cnt");
            for (const auto& o : obs) {
                auto it = vals.find(o);
                if (it == vals.end())
                    throw FileFormatError("external program: OBS line missing '" + o + "'");
                row.values.push_back(it->second);
            }
            tr.rows.push_back(std::move(row));
        }
        if (rc != 0 && tr.rows.empty()) tr.rejected = true;
        return tr;
    };
    return p;
}

} // namespace nsx
