#include "nsx/eval.hpp"

#include <cmath>

#include "nsx/error.hpp"

namespace nsx {

namespace {

std::optional<NumValue> arith(ArithOp op, const NumValue& l, const NumValue& r) {
    if (op == ArithOp::Div) {
        const double denom = r.as_double();
        if (denom == 0.0) return std::nullopt;
        const double v = l.as_double() / denom;
        if (!std::isfinite(v)) return std::nullopt;
        return NumValue::of_real(v);
    }
    if (l.is_int && r.is_int) {
        long long out = 0;
        bool overflow = false;
        switch (op) {
        case ArithOp::Add: overflow = __builtin_add_overflow(l.i, r.i, &out); break;
        case ArithOp::Sub: overflow = __builtin_sub_overflow(l.i, r.i, &out); break;
        case ArithOp::Mul: overflow = __builtin_mul_overflow(l.i, r.i, &out); break;
        case ArithOp::Div: break;
        }
        if (!overflow) return NumValue::of_int(out);
        // fall through to double arithmetic on overflow
    }
    double v = 0.0;
    switch (op) {
    case ArithOp::Add: v = l.as_double() + r.as_double(); break;
    case ArithOp::Sub: v = l.as_double() - r.as_double(); break;
    case ArithOp::Mul: v = l.as_double() * r.as_double(); break;
    case ArithOp::Div: break;
    }
    if (!std::isfinite(v)) return std::nullopt;
    return NumValue::of_real(v);
}

const TypedValue& lookup(const Assignment& a, const std::string& name) {
    auto it = a.find(name);
    if (it == a.end()) throw EvalError("unbound variable '" + name + "'");
    return it->second;
}

} // namespace

std::optional<NumValue> eval_num(const Expr& e, const Assignment& a) {
    switch (e.node) {
    case Expr::Node::ConstNum: {
        const double v = e.num;
        // Integral literals behave as integers.
        if (v == std::floor(v) && std::fabs(v) <= 9.0e15) return NumValue::of_int((long long)v);
        return NumValue::of_real(v);
    }
    case Expr::Node::ConstStr:
        throw EvalError("string literal used as number");
    case Expr::Node::VarRef: {
        const TypedValue& v = lookup(a, e.name);
        if (v.kind == Kind::Str) throw EvalError("string variable '" + e.name + "' used as number");
        return v.kind == Kind::Int ? NumValue::of_int(v.i) : NumValue::of_real(v.r);
    }
    case Expr::Node::Arith: {
        auto l = eval_num(*e.a, a);
        if (!l) return std::nullopt;
        auto r = eval_num(*e.b, a);
        if (!r) return std::nullopt;
        return arith(e.op, *l, *r);
    }
    case Expr::Node::StrLen:
        return NumValue::of_int((long long)eval_str(*e.a, a).size());
    case Expr::Node::StrStr: {
        const std::string h = eval_str(*e.a, a);
        const std::string n = eval_str(*e.b, a);
        const auto pos = h.find(n);
        return NumValue::of_int(pos == std::string::npos ? -1 : (long long)pos);
    }
    case Expr::Node::Concat:
        throw EvalError("string concatenation used as number");
    }
    throw EvalError("bad expression node");
}

std::string eval_str(const Expr& e, const Assignment& a) {
    switch (e.node) {
    case Expr::Node::ConstStr:
        return e.str;
    case Expr::Node::VarRef: {
        const TypedValue& v = lookup(a, e.name);
        if (v.kind != Kind::Str) throw EvalError("numeric variable '" + e.name + "' used as string");
        return v.s;
    }
    case Expr::Node::Concat:
        return eval_str(*e.a, a) + eval_str(*e.b, a);
    default:
        throw EvalError("numeric expression used as string");
    }
}

bool cmp_holds(CmpOp op, const NumValue& l, const NumValue& r) {
    if (l.is_int && r.is_int) {
        switch (op) {
        case CmpOp::Eq: return l.i == r.i;
        case CmpOp::Ne: return l.i != r.i;
        case CmpOp::Gt: return l.i > r.i;
        case CmpOp::Ge: return l.i >= r.i;
        case CmpOp::Lt: return l.i < r.i;
        case CmpOp::Le: return l.i <= r.i;
        }
    }
    const double a = l.as_double();
    const double b = r.as_double();
    switch (op) {
    case CmpOp::Eq: return a == b;
    case CmpOp::Ne: return a != b;
    case CmpOp::Gt: return a > b;
    case CmpOp::Ge: return a >= b;
    case CmpOp::Lt: return a < b;
    case CmpOp::Le: return a <= b;
    }
    return false;
}

namespace {

bool is_string_expr(const Expr& e, const Assignment& a) {
    switch (e.node) {
    case Expr::Node::ConstStr:
    case Expr::Node::Concat:
        return true;
    case Expr::Node::VarRef: {
        auto it = a.find(e.name);
        if (it == a.end()) throw EvalError("unbound variable '" + e.name + "'");
        return it->second.kind == Kind::Str;
    }
    default:
        return false;
    }
}

} // namespace

bool eval_constraint(const Constraint& c, const Assignment& a) {
    switch (c.node) {
    case Constraint::Node::Atom: {
        // String equality is decided on content (the internal solver lowers
        // it to lengths plus positional equality; semantics agree).
        if (is_string_expr(*c.lhs, a) || is_string_expr(*c.rhs, a)) {
            const std::string l = eval_str(*c.lhs, a);
            const std::string r = eval_str(*c.rhs, a);
            if (c.cmp == CmpOp::Eq) return l == r;
            if (c.cmp == CmpOp::Ne) return l != r;
            throw EvalError("ordered comparison over string expressions");
        }
        auto l = eval_num(*c.lhs, a);
        if (!l) return false;
        auto r = eval_num(*c.rhs, a);
        if (!r) return false;
        return cmp_holds(c.cmp, *l, *r);
    }
    case Constraint::Node::Contains: {
        const std::string h = eval_str(*c.lhs, a);
        const std::string n = eval_str(*c.rhs, a);
        return h.find(n) != std::string::npos;
    }
    case Constraint::Node::And:
        return eval_constraint(*c.a, a) && eval_constraint(*c.b, a);
    case Constraint::Node::Or:
        return eval_constraint(*c.a, a) || eval_constraint(*c.b, a);
    }
    throw EvalError("bad constraint node");
}

bool check_sat(const Assignment& a, const std::vector<ConstraintPtr>& constraints) {
    for (const auto& c : constraints)
        if (!eval_constraint(*c, a)) return false;
    return true;
}

} // namespace nsx
