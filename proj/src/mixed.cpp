#include "nsx/mixed.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <set>

#include "nsx/error.hpp"
#include "nsx/loss.hpp"
#include "nsx/neusolv.hpp"
#include "nsx/parser.hpp"
#include "nsx/rng.hpp"
#include "nsx/smt.hpp"

namespace nsx {

const char* component_class_name(ComponentClass c) {
    switch (c) {
    case ComponentClass::PureSymbolic: return "pure-symbolic";
    case ComponentClass::PureNeural: return "pure-neural";
    case ComponentClass::Mixed: return "mixed";
    }
    return "?";
}

const char* verdict_name(Verdict v) {
    switch (v) {
    case Verdict::Sat: return "SAT";
    case Verdict::Unsat: return "UNSAT";
    case Verdict::Unknown: return "UNKNOWN";
    }
    return "?";
}

// ---------------------------------------------------------------------------
// Constraint graph

namespace {

struct Dsu {
    std::vector<int> parent;
    explicit Dsu(int n) : parent(n) {
        for (int i = 0; i < n; ++i) parent[i] = i;
    }
    int find(int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    }
    void unite(int a, int b) { parent[find(a)] = find(b); }
};

} // namespace

ConstraintGraph build_graph(const ConstraintFile& cf) {
    validate(cf);
    const int ns = int(cf.symbolic.size());
    const int nn = int(cf.neural.size());
    Dsu dsu(ns + nn);
    std::map<std::string, int> var_node; // variable -> first constraint node seen

    auto touch = [&](int node, const std::string& var) {
        auto [it, fresh] = var_node.emplace(var, node);
        if (!fresh) dsu.unite(node, it->second);
    };
    for (int i = 0; i < ns; ++i)
        for (const auto& v : free_vars(*cf.symbolic[i])) touch(i, v);
    for (int i = 0; i < nn; ++i) {
        for (const auto& v : cf.neural[i].inputs) touch(ns + i, v);
        for (const auto& v : cf.neural[i].outputs) touch(ns + i, v);
    }

    std::map<int, Component> by_root;
    std::map<int, int> first_node;
    for (int i = 0; i < ns + nn; ++i) {
        const int r = dsu.find(i);
        auto& c = by_root[r];
        if (!first_node.count(r)) first_node[r] = i;
        if (i < ns)
            c.symbolic.push_back(i);
        else
            c.neural.push_back(i - ns);
    }
    for (auto& [root, c] : by_root) {
        std::set<std::string> vars;
        for (int i : c.symbolic) collect_free_vars(*cf.symbolic[i], vars);
        for (int i : c.neural) {
            vars.insert(cf.neural[i].inputs.begin(), cf.neural[i].inputs.end());
            vars.insert(cf.neural[i].outputs.begin(), cf.neural[i].outputs.end());
        }
        c.vars.assign(vars.begin(), vars.end());
        c.cls = c.neural.empty()    ? ComponentClass::PureSymbolic
                : c.symbolic.empty() ? ComponentClass::PureNeural
                                     : ComponentClass::Mixed;
    }

    ConstraintGraph g;
    std::vector<std::pair<int, Component>> ordered;
    for (auto& [root, c] : by_root) ordered.push_back({first_node[root], std::move(c)});
    std::sort(ordered.begin(), ordered.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    for (auto& [k, c] : ordered) g.components.push_back(std::move(c));
    return g;
}

// ---------------------------------------------------------------------------
// Shared helpers

namespace {

std::vector<VarDecl> decls_for(const ConstraintFile& cf, const std::set<std::string>& vars) {
    std::vector<VarDecl> out;
    for (const auto& d : cf.decls)
        if (vars.count(d.name)) out.push_back(d);
    return out;
}

const VarDecl& decl_of(const ConstraintFile& cf, const std::string& name) {
    const VarDecl* d = cf.find_decl(name);
    if (!d) throw Error("undeclared variable '" + name + "'");
    return *d;
}

TypedValue typed_value(const VarDecl& d, double v) {
    return d.kind == Kind::Int ? TypedValue::of_int((long long)std::llround(v))
                               : TypedValue::of_real(v);
}

std::pair<double, double> search_domain(const VarDecl& d) {
    if (d.has_domain) return {d.lo, d.hi};
    return {kDefaultNumericLo, kDefaultNumericHi};
}

SymVerdict sym_solve(const std::vector<ConstraintPtr>& constraints,
                     const std::vector<ConflictClause>& conflicts,
                     const std::vector<VarDecl>& decls, const SolverConfig& cfg) {
    if (!cfg.smt_solver.empty())
        return solve_external(constraints, conflicts, decls, cfg.smt_solver);
    return solve(constraints, conflicts, decls);
}

// Topological order of the component's neural constraints (a feeds b when an
// output of a is an input of b).
std::vector<int> topo_neural(const ConstraintFile& cf, const std::vector<int>& neural) {
    const int n = int(neural.size());
    std::vector<std::set<int>> succ(n);
    std::vector<int> indeg(n, 0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            const auto& a = cf.neural[neural[i]];
            const auto& b = cf.neural[neural[j]];
            for (const auto& out : a.outputs)
                if (std::find(b.inputs.begin(), b.inputs.end(), out) != b.inputs.end()) {
                    if (succ[i].insert(j).second) ++indeg[j];
                    break;
                }
        }
    std::vector<int> order;
    std::vector<int> ready;
    for (int i = 0; i < n; ++i)
        if (indeg[i] == 0) ready.push_back(i);
    while (!ready.empty()) {
        const int i = ready.front();
        ready.erase(ready.begin());
        order.push_back(i);
        for (int j : succ[i])
            if (--indeg[j] == 0) ready.push_back(j);
    }
    if (int(order.size()) != n)
        throw SolveError("neural constraints form a cycle; the dependency graph must be acyclic");
    std::vector<int> out;
    for (int i : order) out.push_back(neural[i]);
    return out;
}

struct Chain {
    const ConstraintFile* cf;
    const ModelRegistry* models;
    std::vector<int> order;               // neural indices, topological
    std::set<std::string> output_vars;    // every model output in the chain

    const MlpModel& model(int idx) const {
        const auto& decl = cf->neural[idx];
        auto it = models->find(decl.model_path);
        if (it == models->end())
            throw Error("model '" + decl.model_path + "' is not loaded");
        return it->second;
    }

    // Forward-evaluates every model; `base` supplies non-realized values.
    std::map<std::string, double> realize(const std::function<double(const std::string&)>& base,
                                          long long* evals) const {
        std::map<std::string, double> out;
        for (int idx : order) {
            const auto& decl = cf->neural[idx];
            const MlpModel& m = model(idx);
            std::vector<double> x(decl.inputs.size());
            for (size_t i = 0; i < decl.inputs.size(); ++i) {
                auto it = out.find(decl.inputs[i]);
                x[i] = it != out.end() ? it->second : base(decl.inputs[i]);
            }
            const std::vector<double> y = predict_raw(m, x);
            if (evals) ++*evals;
            for (size_t j = 0; j < decl.outputs.size(); ++j) out[decl.outputs[j]] = y[j];
        }
        return out;
    }

    // Reverse sweep: adjoints on output variables flow back to base
    // variables (and through chained models).
    std::map<std::string, double> backprop(const std::function<double(const std::string&)>& base,
                                           const std::map<std::string, double>& realized,
                                           std::map<std::string, double> adjoint,
                                           long long* evals) const {
        for (auto it = order.rbegin(); it != order.rend(); ++it) {
            const auto& decl = cf->neural[*it];
            const MlpModel& m = model(*it);
            std::vector<double> downstream(decl.outputs.size(), 0.0);
            bool any = false;
            for (size_t j = 0; j < decl.outputs.size(); ++j) {
                auto a = adjoint.find(decl.outputs[j]);
                if (a != adjoint.end() && a->second != 0.0) {
                    downstream[j] = a->second;
                    any = true;
                }
            }
            if (!any) continue;
            std::vector<double> x(decl.inputs.size());
            for (size_t i = 0; i < decl.inputs.size(); ++i) {
                auto r = realized.find(decl.inputs[i]);
                x[i] = r != realized.end() ? r->second : base(decl.inputs[i]);
            }
            const std::vector<double> ig = input_gradient(m, x, downstream);
            if (evals) ++*evals;
            for (size_t i = 0; i < decl.inputs.size(); ++i)
                adjoint[decl.inputs[i]] += ig[i];
        }
        return adjoint;
    }
};

Chain make_chain(const ConstraintFile& cf, const ModelRegistry& models,
                 const std::vector<int>& neural) {
    Chain ch;
    ch.cf = &cf;
    ch.models = &models;
    ch.order = topo_neural(cf, neural);
    for (int idx : ch.order)
        ch.output_vars.insert(cf.neural[idx].outputs.begin(), cf.neural[idx].outputs.end());
    return ch;
}

// Objective over the free inputs: either squared distance to required output
// values (Mixed I) or an encoded symbolic loss composed with the models
// (Mixed II).
class ComposedObjective : public Objective {
public:
    std::vector<std::string> search_vars;
    std::map<std::string, size_t> search_index;
    const Chain* chain = nullptr;
    Assignment fixed;                                    // numeric fixed bindings
    std::vector<std::pair<std::string, double>> targets; // Mixed I mode
    const LossFunction* loss = nullptr;                  // Mixed II mode
    long long* evals = nullptr;

    const std::vector<std::string>& vars() const override { return search_vars; }

    double base_value(const std::vector<double>& x, const std::string& name) const {
        auto it = search_index.find(name);
        if (it != search_index.end()) return x[it->second];
        auto f = fixed.find(name);
        if (f != fixed.end()) return f->second.num();
        throw Error("composed objective: unbound variable '" + name + "'");
    }

    double eval(const std::vector<double>& x) const override {
        auto base = [&](const std::string& n) { return base_value(x, n); };
        const auto realized = chain->realize(base, evals);
        if (loss) {
            std::vector<double> full(loss->vars().size());
            for (size_t i = 0; i < loss->vars().size(); ++i) {
                auto r = realized.find(loss->vars()[i]);
                full[i] = r != realized.end() ? r->second : base(loss->vars()[i]);
            }
            return loss->eval(full);
        }
        double acc = 0.0;
        for (const auto& [name, want] : targets) {
            const double d = realized.at(name) - want;
            acc += d * d;
        }
        return acc;
    }

    void grad(const std::vector<double>& x, std::vector<double>& g) const override {
        auto base = [&](const std::string& n) { return base_value(x, n); };
        const auto realized = chain->realize(base, evals);
        g.assign(search_vars.size(), 0.0);
        std::map<std::string, double> adjoint;
        if (loss) {
            std::vector<double> full(loss->vars().size());
            for (size_t i = 0; i < loss->vars().size(); ++i) {
                auto r = realized.find(loss->vars()[i]);
                full[i] = r != realized.end() ? r->second : base(loss->vars()[i]);
            }
            std::vector<double> lg;
            loss->grad(full, lg);
            for (size_t i = 0; i < loss->vars().size(); ++i) {
                const std::string& name = loss->vars()[i];
                if (realized.count(name)) {
                    adjoint[name] += lg[i];
                } else {
                    auto it = search_index.find(name);
                    if (it != search_index.end()) g[it->second] += lg[i];
                }
            }
        } else {
            for (const auto& [name, want] : targets)
                adjoint[name] += 2.0 * (realized.at(name) - want);
        }
        const auto back = chain->backprop(base, realized, std::move(adjoint), evals);
        for (const auto& [name, a] : back) {
            auto it = search_index.find(name);
            if (it != search_index.end()) g[it->second] += a;
        }
    }
};

SearchConfig make_search_config(const ConstraintFile& cf, const std::vector<std::string>& vars,
                                const SolverConfig& cfg, uint64_t seed) {
    SearchConfig sc;
    sc.max_enumerations = cfg.max_enum;
    sc.learning_rate = cfg.learning_rate;
    sc.seed = seed;
    sc.jobs = cfg.jobs;
    for (const auto& v : vars) {
        const VarDecl& d = decl_of(cf, v);
        sc.domains.push_back(search_domain(d));
        sc.integer.push_back(d.kind == Kind::Int);
    }
    return sc;
}

bool assignments_equal_on(const Assignment& a, const Assignment& b,
                          const std::vector<std::string>& vars) {
    for (const auto& v : vars) {
        auto ia = a.find(v);
        auto ib = b.find(v);
        if (ia == a.end() || ib == b.end() || ia->second != ib->second) return false;
    }
    return true;
}

// String lowering for Mixed II: strlen(s) becomes a fresh integer length
// variable; content-level atoms make the component ineligible for Mixed II.
struct LenLowering {
    std::map<std::string, std::string> len_name;
    std::vector<VarDecl> extra_decls;
    bool unsupported = false;

    std::string name_for(const std::string& var, const ConstraintFile& cf) {
        auto it = len_name.find(var);
        if (it != len_name.end()) return it->second;
        std::string n = "len_" + var;
        while (cf.find_decl(n) || [&] {
            for (const auto& [k, v] : len_name)
                if (v == n) return true;
            return false;
        }())
            n += "_";
        len_name[var] = n;
        VarDecl d;
        d.name = n;
        d.kind = Kind::Int;
        d.has_domain = true;
        d.lo = 0;
        const VarDecl* sd = cf.find_decl(var);
        d.hi = double(sd && sd->has_maxlen ? sd->maxlen : kDefaultStrMaxlen);
        extra_decls.push_back(d);
        return n;
    }

    ExprPtr lower_len(const Expr& e, const ConstraintFile& cf) {
        switch (e.node) {
        case Expr::Node::ConstStr:
            return make_num(double(e.str.size()));
        case Expr::Node::VarRef:
            return make_var(name_for(e.name, cf));
        case Expr::Node::Concat:
            return make_arith(ArithOp::Add, lower_len(*e.a, cf), lower_len(*e.b, cf));
        default:
            unsupported = true;
            return make_num(0);
        }
    }

    ExprPtr rewrite(const ExprPtr& e, const ConstraintFile& cf) {
        switch (e->node) {
        case Expr::Node::StrLen:
            return lower_len(*e->a, cf);
        case Expr::Node::StrStr:
            unsupported = true;
            return e;
        case Expr::Node::Arith:
            return make_arith(e->op, rewrite(e->a, cf), rewrite(e->b, cf));
        default:
            return e;
        }
    }

    ConstraintPtr rewrite(const ConstraintPtr& c, const ConstraintFile& cf) {
        switch (c->node) {
        case Constraint::Node::And:
            return make_and(rewrite(c->a, cf), rewrite(c->b, cf));
        case Constraint::Node::Or:
            return make_or(rewrite(c->a, cf), rewrite(c->b, cf));
        case Constraint::Node::Contains:
            unsupported = true;
            return c;
        case Constraint::Node::Atom: {
            // content-level string comparison cannot be encoded
            auto is_str = [&](const ExprPtr& e) {
                if (e->node == Expr::Node::ConstStr || e->node == Expr::Node::Concat) return true;
                if (e->node == Expr::Node::VarRef) {
                    const VarDecl* d = cf.find_decl(e->name);
                    return d && d->kind == Kind::Str;
                }
                return false;
            };
            if (is_str(c->lhs) || is_str(c->rhs)) {
                unsupported = true;
                return c;
            }
            return make_atom(c->cmp, rewrite(c->lhs, cf), rewrite(c->rhs, cf));
        }
        }
        return c;
    }
};

} // namespace

// ---------------------------------------------------------------------------
// Mixed Constraint Solving I: conflict-clause backtracking

SolveResult mixed_solve_I(const ConstraintFile& cf, const Component& comp,
                          const ModelRegistry& models, const SolverConfig& cfg, int comp_index,
                          std::vector<ConflictClause>& conflict_db, ComponentReport& report,
                          long long* model_evals) {
    SolveResult res;
    std::vector<ConstraintPtr> sym;
    std::set<std::string> sym_vars;
    for (int i : comp.symbolic) {
        sym.push_back(cf.symbolic[i]);
        collect_free_vars(*cf.symbolic[i], sym_vars);
    }
    const std::vector<VarDecl> sym_decls = decls_for(cf, sym_vars);
    const std::vector<std::string> sym_var_list(sym_vars.begin(), sym_vars.end());
    const Chain chain = make_chain(cf, models, comp.neural);

    for (int iter = 0; iter < cfg.max_trial2; ++iter) {
        report.mixed1_iterations = iter + 1;
        SymVerdict sv;
        try {
            sv = sym_solve(sym, conflict_db, sym_decls, cfg);
        } catch (const SolveError& e) {
            res.verdict = Verdict::Unknown;
            res.diag.message = std::string("mixed-I symbolic solve failed: ") + e.what();
            return res;
        }
        if (!sv.sat) {
            if (conflict_db.empty()) {
                res.verdict = Verdict::Unsat;
                res.diag.message = "mixed component symbolic part is unsatisfiable";
                return res;
            }
            // Conflict clauses exclude only rejected candidates, whose
            // rejection was budget-limited, so this is exhaustion, not a
            // proof about the original constraints.
            res.verdict = Verdict::Unknown;
            res.diag.message = "mixed-I candidate space exhausted";
            return res;
        }
        Assignment proposal;
        for (const auto& v : sym_var_list) proposal[v] = sv.assignment.at(v);
        for (const auto& prior : report.proposals)
            if (assignments_equal_on(prior, proposal, sym_var_list))
                throw Error("internal error: SymSolv re-proposed a conflict-excluded assignment");
        report.proposals.push_back(proposal);

        // Partial assignment: fix symbolically bound inputs/outputs.
        Assignment fixed;
        for (const auto& [k, v] : proposal)
            if (v.kind != Kind::Str) fixed[k] = v;

        std::vector<std::string> free_inputs;
        std::vector<std::pair<std::string, double>> bound_outputs;
        std::set<std::string> seen_free;
        for (int idx : chain.order) {
            const auto& nd = cf.neural[idx];
            for (const auto& in : nd.inputs)
                if (!fixed.count(in) && !chain.output_vars.count(in) && !seen_free.count(in)) {
                    seen_free.insert(in);
                    free_inputs.push_back(in);
                }
            for (const auto& out : nd.outputs)
                if (fixed.count(out)) bound_outputs.push_back({out, fixed.at(out).num()});
        }

        auto finish = [&](const std::vector<double>& free_vals,
                          const std::map<std::string, double>& realized) {
            Assignment full = proposal;
            for (size_t i = 0; i < free_inputs.size(); ++i)
                full[free_inputs[i]] = typed_value(decl_of(cf, free_inputs[i]), free_vals[i]);
            for (const auto& [name, value] : realized)
                if (!full.count(name)) full[name] = typed_value(decl_of(cf, name), value);
            res.verdict = Verdict::Sat;
            res.assignment = std::move(full);
            report.solved_by = "mixed1";
            return res;
        };

        if (free_inputs.empty()) {
            auto base = [&](const std::string& n) { return fixed.at(n).num(); };
            const auto realized = chain.realize(base, model_evals);
            bool ok = true;
            for (const auto& [name, want] : bound_outputs)
                if (!value_matches(decl_of(cf, name).kind, realized.at(name), want)) {
                    ok = false;
                    break;
                }
            if (ok) return finish({}, realized);
        } else {
            ComposedObjective obj;
            obj.search_vars = free_inputs;
            for (size_t i = 0; i < free_inputs.size(); ++i) obj.search_index[free_inputs[i]] = i;
            obj.chain = &chain;
            obj.fixed = fixed;
            obj.targets = bound_outputs;
            obj.evals = model_evals;

            auto accept = [&](const std::vector<double>& x) {
                auto base = [&](const std::string& n) { return obj.base_value(x, n); };
                const auto realized = chain.realize(base, model_evals);
                for (const auto& [name, want] : bound_outputs)
                    if (!value_matches(decl_of(cf, name).kind, realized.at(name), want))
                        return false;
                return true;
            };
            const SearchConfig sc = make_search_config(
                cf, free_inputs, cfg, mix_seed(cfg.seed, 0x101u * (comp_index + 1) + iter));
            const SearchOutcome out = search_multi(obj, accept, sc, cfg.max_trial1);
            report.best_loss = std::min(report.best_loss, out.best_loss);
            if (out.found) {
                report.neusolv_trials = out.trials_run;
                auto base = [&](const std::string& n) { return obj.base_value(out.x, n); };
                return finish(out.x, chain.realize(base, model_evals));
            }
        }

        // Rejected: learn a conflict clause over the symbolic assignment.
        ConflictClause clause;
        for (const auto& v : sym_var_list) clause.disjuncts.push_back({v, proposal.at(v)});
        clause.validate();
        conflict_db.push_back(std::move(clause));
        ++report.mixed1_rejections;
    }
    res.verdict = Verdict::Unknown;
    res.diag.message = "mixed-I iteration budget exhausted";
    return res;
}

// ---------------------------------------------------------------------------
// Mixed Constraint Solving II: loss-encoded joint search

SolveResult mixed_solve_II(const ConstraintFile& cf, const Component& comp,
                           const ModelRegistry& models, const SolverConfig& cfg, int comp_index,
                           ComponentReport& report, long long* model_evals) {
    SolveResult res;
    res.verdict = Verdict::Unknown;

    LenLowering low;
    std::vector<ConstraintPtr> lowered;
    std::vector<ConstraintPtr> original;
    for (int i : comp.symbolic) {
        original.push_back(cf.symbolic[i]);
        lowered.push_back(low.rewrite(cf.symbolic[i], cf));
    }
    if (low.unsupported) {
        res.diag.message =
            "mixed-II skipped: component contains string-content atoms (symsolv-only)";
        return res;
    }

    const Chain chain = make_chain(cf, models, comp.neural);

    // Conjunction of the lowered symbolic constraints.
    ConstraintPtr conj = lowered.empty() ? make_atom(CmpOp::Le, make_num(0), make_num(0))
                                         : lowered.front();
    for (size_t i = 1; i < lowered.size(); ++i) conj = make_and(conj, lowered[i]);

    // Declarations: component numeric vars, synthesized length vars, and any
    // chain variables.
    std::set<std::string> all_vars = free_vars(*conj);
    for (int idx : comp.neural) {
        all_vars.insert(cf.neural[idx].inputs.begin(), cf.neural[idx].inputs.end());
        all_vars.insert(cf.neural[idx].outputs.begin(), cf.neural[idx].outputs.end());
    }
    std::vector<VarDecl> decls_ext;
    for (const auto& d : cf.decls)
        if (all_vars.count(d.name) && d.kind != Kind::Str) decls_ext.push_back(d);
    for (const auto& d : low.extra_decls) decls_ext.push_back(d);

    EncodeConfig ec;
    ec.alpha = cfg.alpha;
    ec.beta = cfg.beta;
    LossFunction lf;
    try {
        lf = encode(conj, decls_ext, ec);
    } catch (const SolveError& e) {
        res.diag.message = std::string("mixed-II skipped: ") + e.what();
        return res;
    }

    // Search space: every numeric/len variable that is not realized by a model.
    std::vector<std::string> search_vars;
    for (const auto& d : decls_ext)
        if (!chain.output_vars.count(d.name)) search_vars.push_back(d.name);
    if (search_vars.empty()) {
        res.diag.message = "mixed-II skipped: no free variables to search";
        return res;
    }

    ConstraintFile cf_ext = cf; // decl lookups for typed values and domains
    for (const auto& d : low.extra_decls) cf_ext.decls.push_back(d);

    ComposedObjective obj;
    obj.search_vars = search_vars;
    for (size_t i = 0; i < search_vars.size(); ++i) obj.search_index[search_vars[i]] = i;
    obj.chain = &chain;
    obj.loss = &lf;
    obj.evals = model_evals;

    // Component string variables, materialized from their length variables.
    std::vector<std::pair<std::string, std::string>> strings; // var -> len var
    for (const auto& [svar, lname] : low.len_name) strings.push_back({svar, lname});

    auto realize_assignment = [&](const std::vector<double>& x) {
        auto base = [&](const std::string& n) { return obj.base_value(x, n); };
        const auto realized = chain.realize(base, model_evals);
        Assignment a;
        for (size_t i = 0; i < search_vars.size(); ++i)
            a[search_vars[i]] = typed_value(decl_of(cf_ext, search_vars[i]), x[i]);
        for (const auto& [name, value] : realized)
            a[name] = typed_value(decl_of(cf_ext, name), value);
        for (const auto& [svar, lname] : strings) {
            const long long len = a.at(lname).i;
            a[svar] = TypedValue::of_str(std::string(size_t(std::max(0LL, len)), 'a'));
        }
        return a;
    };

    auto accept = [&](const std::vector<double>& x) {
        const Assignment a = realize_assignment(x);
        try {
            return check_sat(a, original);
        } catch (const EvalError&) {
            return false;
        }
    };

    const SearchConfig sc =
        make_search_config(cf_ext, search_vars, cfg, mix_seed(cfg.seed, 0x211u * (comp_index + 1)));
    const SearchOutcome out = search_multi(obj, accept, sc, cfg.m_t);
    report.best_loss = std::min(report.best_loss, out.best_loss);
    report.mixed2_trials = out.trials_run;
    if (!out.found) {
        res.diag.message = "mixed-II trials exhausted";
        return res;
    }
    Assignment full = realize_assignment(out.x);
    // Drop synthesized length variables from the public assignment.
    for (const auto& [svar, lname] : strings) full.erase(lname);
    res.verdict = Verdict::Sat;
    res.assignment = std::move(full);
    report.solved_by = "mixed2";
    report.neusolv_trials = out.trials_run;
    return res;
}

// ---------------------------------------------------------------------------
// Full pipeline

bool verify_solution(const ConstraintFile& cf, const ModelRegistry& models, const Assignment& a,
                     std::string* why) {
    try {
        if (!check_sat(a, cf.symbolic)) {
            if (why) *why = "a symbolic constraint is violated";
            return false;
        }
    } catch (const EvalError& e) {
        if (why) *why = e.what();
        return false;
    }
    for (const auto& nd : cf.neural) {
        auto it = models.find(nd.model_path);
        if (it == models.end()) {
            if (why) *why = "model '" + nd.model_path + "' is not loaded";
            return false;
        }
        std::vector<double> x(nd.inputs.size());
        for (size_t i = 0; i < nd.inputs.size(); ++i) {
            auto b = a.find(nd.inputs[i]);
            if (b == a.end()) {
                if (why) *why = "unbound neural input '" + nd.inputs[i] + "'";
                return false;
            }
            x[i] = b->second.num();
        }
        const std::vector<double> y = predict_raw(it->second, x);
        for (size_t j = 0; j < nd.outputs.size(); ++j) {
            auto b = a.find(nd.outputs[j]);
            if (b == a.end()) {
                if (why) *why = "unbound neural output '" + nd.outputs[j] + "'";
                return false;
            }
            if (!value_matches(decl_of(cf, nd.outputs[j]).kind, y[j], b->second.num())) {
                if (why)
                    *why = "neural output '" + nd.outputs[j] + "' outside tolerance";
                return false;
            }
        }
    }
    return true;
}

namespace {
SolveResult solve_impl(const ConstraintFile& cf, const ModelRegistry& models,
                       const SolverConfig& cfg) {
    validate(cf);
    for (const auto& nd : cf.neural) {
        auto it = models.find(nd.model_path);
        if (it == models.end())
            throw FileFormatError("model '" + nd.model_path + "' is not loaded");
        const MlpModel& m = it->second;
        if (m.input_names != nd.inputs || m.output_names != nd.outputs)
            throw FileFormatError("model '" + nd.model_path +
                                  "' arity/name mismatch with its declaration");
    }

    SolveResult res;
    const ConstraintGraph graph = build_graph(cf);
    res.diag.components.resize(graph.components.size());
    Assignment merged;

    // Stage 1: every pure symbolic component; any UNSAT is a global UNSAT
    // and no model is evaluated.
    for (size_t k = 0; k < graph.components.size(); ++k) {
        const Component& comp = graph.components[k];
        ComponentReport& rep = res.diag.components[k];
        rep.cls = comp.cls;
        if (comp.cls != ComponentClass::PureSymbolic) continue;
        std::vector<ConstraintPtr> cs;
        std::set<std::string> vars;
        for (int i : comp.symbolic) {
            cs.push_back(cf.symbolic[i]);
            collect_free_vars(*cf.symbolic[i], vars);
        }
        const SymVerdict v = sym_solve(cs, {}, decls_for(cf, vars), cfg);
        if (!v.sat) {
            res.verdict = Verdict::Unsat;
            res.diag.message = "pure symbolic component unsatisfiable: " + v.note;
            return res;
        }
        rep.solved_by = "symsolv";
        for (const auto& [name, value] : v.assignment) merged[name] = value;
    }

    // Stage 2: pure neural components by forward evaluation on seeded
    // in-domain inputs.
    for (size_t k = 0; k < graph.components.size(); ++k) {
        const Component& comp = graph.components[k];
        if (comp.cls != ComponentClass::PureNeural) continue;
        const Chain chain = make_chain(cf, models, comp.neural);
        Rng rng(mix_seed(cfg.seed, 0x500 + k));
        Assignment inputs;
        for (int idx : chain.order)
            for (const auto& in : cf.neural[idx].inputs) {
                if (chain.output_vars.count(in) || inputs.count(in)) continue;
                const VarDecl& d = decl_of(cf, in);
                const auto [lo, hi] = search_domain(d);
                inputs[in] = d.kind == Kind::Int
                                 ? TypedValue::of_int(rng.uniform_int((long long)std::ceil(lo),
                                                                      (long long)std::floor(hi)))
                                 : TypedValue::of_real(rng.uniform(lo, hi));
            }
        auto base = [&](const std::string& n) { return inputs.at(n).num(); };
        const auto realized = chain.realize(base, &res.diag.model_evaluations);
        for (const auto& [name, value] : inputs) merged[name] = value;
        for (const auto& [name, value] : realized)
            merged[name] = typed_value(decl_of(cf, name), value);
        res.diag.components[k].solved_by = "forward";
    }

    // Stage 3: mixed components, Mixed I then Mixed II.
    bool any_unknown = false;
    for (size_t k = 0; k < graph.components.size(); ++k) {
        const Component& comp = graph.components[k];
        if (comp.cls != ComponentClass::Mixed) continue;
        ComponentReport& rep = res.diag.components[k];
        std::vector<ConflictClause> conflict_db;
        SolveResult r1 = mixed_solve_I(cf, comp, models, cfg, int(k), conflict_db, rep,
                                       &res.diag.model_evaluations);
        if (r1.verdict == Verdict::Unsat) {
            res.verdict = Verdict::Unsat;
            res.diag.message = r1.diag.message;
            return res;
        }
        if (r1.verdict == Verdict::Sat) {
            for (const auto& [name, value] : r1.assignment) merged[name] = value;
            continue;
        }
        SolveResult r2 =
            mixed_solve_II(cf, comp, models, cfg, int(k), rep, &res.diag.model_evaluations);
        if (r2.verdict == Verdict::Sat) {
            for (const auto& [name, value] : r2.assignment) merged[name] = value;
            continue;
        }
        any_unknown = true;
        res.diag.message = r1.diag.message + "; " + r2.diag.message;
    }

    if (any_unknown) {
        res.verdict = cfg.compat_unsat ? Verdict::Unsat : Verdict::Unknown;
        return res;
    }

    std::string why;
    if (!verify_solution(cf, models, merged, &why)) {
        res.verdict = Verdict::Unknown;
        res.diag.message = "final verification failed: " + why;
        return res;
    }
    res.verdict = Verdict::Sat;
    res.assignment = std::move(merged);
    return res;
}

} // namespace

SolveResult solve(const ConstraintFile& cf, const ModelRegistry& models, const SolverConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    SolveResult r = solve_impl(cf, models, cfg);
    r.diag.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                         std::chrono::steady_clock::now() - t0)
                         .count();
    return r;
}

std::string format_report(const SolveResult& r) {
    std::string out;
    out += "verdict=";
    out += verdict_name(r.verdict);
    out += "\n";
    for (const auto& [name, value] : r.assignment)
        out += "var." + name + "=" + to_string(value) + "\n";
    out += "model_evals=" + std::to_string(r.diag.model_evaluations) + "\n";
    out += "wall_ms=" + std::to_string(r.diag.wall_ms) + "\n";
    for (size_t k = 0; k < r.diag.components.size(); ++k) {
        const auto& c = r.diag.components[k];
        const std::string p = "component." + std::to_string(k) + ".";
        out += p + "class=" + component_class_name(c.cls) + "\n";
        if (!c.solved_by.empty()) out += p + "solved_by=" + c.solved_by + "\n";
        if (c.mixed1_iterations)
            out += p + "mixed1_iterations=" + std::to_string(c.mixed1_iterations) + "\n";
        if (c.mixed1_rejections)
            out += p + "mixed1_rejections=" + std::to_string(c.mixed1_rejections) + "\n";
        if (c.neusolv_trials) out += p + "neusolv_trials=" + std::to_string(c.neusolv_trials) + "\n";
        if (c.mixed2_trials) out += p + "mixed2_trials=" + std::to_string(c.mixed2_trials) + "\n";
    }
    if (!r.diag.message.empty()) out += "message=" + r.diag.message + "\n";
    return out;
}

} // namespace nsx
