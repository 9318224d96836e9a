// Independent test oracles. Everything in this header is deliberately
// written without reusing the implementation paths it checks: the constraint
// evaluator is a separate tree walk, gradients come from central finite
// differences, and the loop oracles execute the reference bodies directly.
#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nsx/ast.hpp"
#include "nsx/rng.hpp"
#include "nsx/value.hpp"

namespace oracle {

// ---------------------------------------------------------------------------
// Independent big-step evaluator (all-double arithmetic, NaN on failure).

inline std::optional<double> num_of(const nsx::Expr& e, const nsx::Assignment& a);

inline std::optional<std::string> str_of(const nsx::Expr& e, const nsx::Assignment& a) {
    using N = nsx::Expr::Node;
    switch (e.node) {
    case N::ConstStr:
        return e.str;
    case N::VarRef: {
        auto it = a.find(e.name);
        if (it == a.end() || it->second.kind != nsx::Kind::Str) return std::nullopt;
        return it->second.s;
    }
    case N::Concat: {
        auto l = str_of(*e.a, a);
        auto r = str_of(*e.b, a);
        if (!l || !r) return std::nullopt;
        return *l + *r;
    }
    default:
        return std::nullopt;
    }
}

inline std::optional<double> num_of(const nsx::Expr& e, const nsx::Assignment& a) {
    using N = nsx::Expr::Node;
    switch (e.node) {
    case N::ConstNum:
        return e.num;
    case N::VarRef: {
        auto it = a.find(e.name);
        if (it == a.end() || it->second.kind == nsx::Kind::Str) return std::nullopt;
        return it->second.kind == nsx::Kind::Int ? double(it->second.i) : it->second.r;
    }
    case N::Arith: {
        auto l = num_of(*e.a, a);
        auto r = num_of(*e.b, a);
        if (!l || !r) return std::nullopt;
        double v = 0;
        switch (e.op) {
        case nsx::ArithOp::Add: v = *l + *r; break;
        case nsx::ArithOp::Sub: v = *l - *r; break;
        case nsx::ArithOp::Mul: v = *l * *r; break;
        case nsx::ArithOp::Div:
            if (*r == 0.0) return std::nullopt;
            v = *l / *r;
            break;
        }
        if (!std::isfinite(v)) return std::nullopt;
        return v;
    }
    case N::StrLen: {
        auto s = str_of(*e.a, a);
        if (!s) return std::nullopt;
        return double(s->size());
    }
    case N::StrStr: {
        auto h = str_of(*e.a, a);
        auto n = str_of(*e.b, a);
        if (!h || !n) return std::nullopt;
        auto pos = h->find(*n);
        return pos == std::string::npos ? -1.0 : double(pos);
    }
    default:
        return std::nullopt;
    }
}

// truth of one constraint; failed operand evaluation makes an atom false
inline bool holds(const nsx::Constraint& c, const nsx::Assignment& a) {
    using N = nsx::Constraint::Node;
    switch (c.node) {
    case N::And:
        return holds(*c.a, a) && holds(*c.b, a);
    case N::Or:
        return holds(*c.a, a) || holds(*c.b, a);
    case N::Contains: {
        auto h = str_of(*c.lhs, a);
        auto n = str_of(*c.rhs, a);
        return h && n && h->find(*n) != std::string::npos;
    }
    case N::Atom: {
        auto ls = str_of(*c.lhs, a);
        auto rs = str_of(*c.rhs, a);
        if (ls && rs) {
            if (c.cmp == nsx::CmpOp::Eq) return *ls == *rs;
            if (c.cmp == nsx::CmpOp::Ne) return *ls != *rs;
            return false;
        }
        auto l = num_of(*c.lhs, a);
        auto r = num_of(*c.rhs, a);
        if (!l || !r) return false;
        switch (c.cmp) {
        case nsx::CmpOp::Eq: return *l == *r;
        case nsx::CmpOp::Ne: return *l != *r;
        case nsx::CmpOp::Gt: return *l > *r;
        case nsx::CmpOp::Ge: return *l >= *r;
        case nsx::CmpOp::Lt: return *l < *r;
        case nsx::CmpOp::Le: return *l <= *r;
        }
        return false;
    }
    }
    return false;
}

inline bool holds_all(const std::vector<nsx::ConstraintPtr>& cs, const nsx::Assignment& a) {
    for (const auto& c : cs)
        if (!holds(*c, a)) return false;
    return true;
}

// ---------------------------------------------------------------------------
// Central finite differences.

inline std::vector<double> fd_gradient(const std::function<double(const std::vector<double>&)>& f,
                                       std::vector<double> x, double h = 1e-4) {
    std::vector<double> g(x.size());
    for (size_t i = 0; i < x.size(); ++i) {
        const double keep = x[i];
        x[i] = keep + h;
        const double up = f(x);
        x[i] = keep - h;
        const double dn = f(x);
        x[i] = keep;
        g[i] = (up - dn) / (2.0 * h);
    }
    return g;
}

inline double rel_err(double a, double b) {
    const double scale = std::max({std::fabs(a), std::fabs(b), 1e-8});
    return std::fabs(a - b) / scale;
}

// ---------------------------------------------------------------------------
// Reference loop executions.

struct RaceRow {
    long long cnt, c, d;
};

// while (c > d) { c = c + d + 1; d = d + 1; }
inline std::vector<RaceRow> race_trace(long long a, long long b, int limit = 256) {
    std::vector<RaceRow> rows;
    long long c = a, d = b, cnt = 0;
    for (;;) {
        rows.push_back({cnt, c, d});
        if (!(c > d)) break;
        if (cnt + 1 >= limit) break;
        c = c + d + 1;
        d = d + 1;
        ++cnt;
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Random AST generation (deterministic via nsx::Rng).

struct GenCtx {
    nsx::Rng rng;
    std::vector<std::string> num_vars;
    std::vector<std::string> str_vars;
    explicit GenCtx(uint64_t seed) : rng(seed) {}
};

inline nsx::ExprPtr gen_num_expr(GenCtx& g, int depth) {
    const int pick = int(g.rng.uniform_int(0, depth <= 0 ? 1 : 4));
    switch (pick) {
    case 0:
        return nsx::make_num(double(g.rng.uniform_int(-6, 6)));
    case 1:
        if (!g.num_vars.empty())
            return nsx::make_var(g.num_vars[size_t(
                g.rng.uniform_int(0, (long long)g.num_vars.size() - 1))]);
        return nsx::make_num(double(g.rng.uniform_int(-6, 6)));
    case 2: {
        const nsx::ArithOp ops[] = {nsx::ArithOp::Add, nsx::ArithOp::Sub, nsx::ArithOp::Mul};
        return nsx::make_arith(ops[g.rng.uniform_int(0, 2)], gen_num_expr(g, depth - 1),
                               gen_num_expr(g, depth - 1));
    }
    case 3:
        // division by a non-zero constant keeps evaluation total
        return nsx::make_arith(nsx::ArithOp::Div, gen_num_expr(g, depth - 1),
                               nsx::make_num(double(g.rng.uniform_int(1, 4))));
    default:
        if (!g.str_vars.empty() && g.rng.uniform01() < 0.5) {
            const auto& v =
                g.str_vars[size_t(g.rng.uniform_int(0, (long long)g.str_vars.size() - 1))];
            return nsx::make_strlen(nsx::make_var(v));
        }
        return nsx::make_num(double(g.rng.uniform_int(-6, 6)));
    }
}

inline nsx::ExprPtr gen_str_expr(GenCtx& g, int depth) {
    if (depth <= 0 || g.str_vars.empty() || g.rng.uniform01() < 0.4) {
        std::string s;
        const int len = int(g.rng.uniform_int(0, 3));
        for (int i = 0; i < len; ++i) s += char('a' + g.rng.uniform_int(0, 3));
        if (!g.str_vars.empty() && g.rng.uniform01() < 0.5)
            return nsx::make_var(
                g.str_vars[size_t(g.rng.uniform_int(0, (long long)g.str_vars.size() - 1))]);
        return nsx::make_str(s);
    }
    return nsx::make_concat(gen_str_expr(g, depth - 1), gen_str_expr(g, depth - 1));
}

inline nsx::CmpOp gen_cmp(GenCtx& g) {
    const nsx::CmpOp ops[] = {nsx::CmpOp::Eq, nsx::CmpOp::Ne, nsx::CmpOp::Gt,
                              nsx::CmpOp::Ge, nsx::CmpOp::Lt, nsx::CmpOp::Le};
    return ops[g.rng.uniform_int(0, 5)];
}

inline nsx::ConstraintPtr gen_constraint(GenCtx& g, int depth, bool allow_strings) {
    const double roll = g.rng.uniform01();
    if (depth > 0 && roll < 0.35) {
        auto a = gen_constraint(g, depth - 1, allow_strings);
        auto b = gen_constraint(g, depth - 1, allow_strings);
        return g.rng.uniform01() < 0.5 ? nsx::make_and(a, b) : nsx::make_or(a, b);
    }
    if (allow_strings && !g.str_vars.empty() && roll > 0.9)
        return nsx::make_contains(gen_str_expr(g, 0), nsx::make_str("a"));
    return nsx::make_atom(gen_cmp(g), gen_num_expr(g, depth), gen_num_expr(g, depth));
}

} // namespace oracle
