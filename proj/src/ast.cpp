#include "nsx/ast.hpp"

#include <algorithm>
#include <unordered_map>
#include <unordered_set>

#include "nsx/error.hpp"

namespace nsx {

const char* arith_op_name(ArithOp op) {
    switch (op) {
    case ArithOp::Add: return "+";
    case ArithOp::Sub: return "-";
    case ArithOp::Mul: return "*";
    case ArithOp::Div: return "/";
    }
    return "?";
}

const char* cmp_op_name(CmpOp op) {
    switch (op) {
    case CmpOp::Eq: return "==";
    case CmpOp::Ne: return "!=";
    case CmpOp::Gt: return ">";
    case CmpOp::Ge: return ">=";
    case CmpOp::Lt: return "<";
    case CmpOp::Le: return "<=";
    }
    return "?";
}

CmpOp dual_cmp(CmpOp op) {
    switch (op) {
    case CmpOp::Eq: return CmpOp::Ne;
    case CmpOp::Ne: return CmpOp::Eq;
    case CmpOp::Gt: return CmpOp::Le;
    case CmpOp::Ge: return CmpOp::Lt;
    case CmpOp::Lt: return CmpOp::Ge;
    case CmpOp::Le: return CmpOp::Gt;
    }
    return op;
}

ExprPtr make_num(double v) {
    auto e = std::make_shared<Expr>();
    e->node = Expr::Node::ConstNum;
    e->num = v;
    return e;
}

ExprPtr make_str(std::string v) {
    auto e = std::make_shared<Expr>();
    e->node = Expr::Node::ConstStr;
    e->str = std::move(v);
    return e;
}

ExprPtr make_var(std::string name) {
    auto e = std::make_shared<Expr>();
    e->node = Expr::Node::VarRef;
    e->name = std::move(name);
    return e;
}

ExprPtr make_arith(ArithOp op, ExprPtr a, ExprPtr b) {
    auto e = std::make_shared<Expr>();
    e->node = Expr::Node::Arith;
    e->op = op;
    e->a = std::move(a);
    e->b = std::move(b);
    return e;
}

ExprPtr make_strlen(ExprPtr a) {
    auto e = std::make_shared<Expr>();
    e->node = Expr::Node::StrLen;
    e->a = std::move(a);
    return e;
}

ExprPtr make_strstr(ExprPtr haystack, ExprPtr needle) {
    auto e = std::make_shared<Expr>();
    e->node = Expr::Node::StrStr;
    e->a = std::move(haystack);
    e->b = std::move(needle);
    return e;
}

ExprPtr make_concat(ExprPtr a, ExprPtr b) {
    auto e = std::make_shared<Expr>();
    e->node = Expr::Node::Concat;
    e->a = std::move(a);
    e->b = std::move(b);
    return e;
}

ConstraintPtr make_atom(CmpOp cmp, ExprPtr lhs, ExprPtr rhs) {
    auto c = std::make_shared<Constraint>();
    c->node = Constraint::Node::Atom;
    c->cmp = cmp;
    c->lhs = std::move(lhs);
    c->rhs = std::move(rhs);
    return c;
}

ConstraintPtr make_contains(ExprPtr haystack, ExprPtr needle) {
    auto c = std::make_shared<Constraint>();
    c->node = Constraint::Node::Contains;
    c->lhs = std::move(haystack);
    c->rhs = std::move(needle);
    return c;
}

ConstraintPtr make_and(ConstraintPtr a, ConstraintPtr b) {
    auto c = std::make_shared<Constraint>();
    c->node = Constraint::Node::And;
    c->a = std::move(a);
    c->b = std::move(b);
    return c;
}

ConstraintPtr make_or(ConstraintPtr a, ConstraintPtr b) {
    auto c = std::make_shared<Constraint>();
    c->node = Constraint::Node::Or;
    c->a = std::move(a);
    c->b = std::move(b);
    return c;
}

ConstraintPtr negate(const ConstraintPtr& c) {
    switch (c->node) {
    case Constraint::Node::Atom:
        return make_atom(dual_cmp(c->cmp), c->lhs, c->rhs);
    case Constraint::Node::And:
        return make_or(negate(c->a), negate(c->b));
    case Constraint::Node::Or:
        return make_and(negate(c->a), negate(c->b));
    case Constraint::Node::Contains:
        throw SolveError("contains has no dual form and cannot be negated");
    }
    throw SolveError("bad constraint node");
}

const VarDecl* ConstraintFile::find_decl(const std::string& name) const {
    for (const auto& d : decls)
        if (d.name == name) return &d;
    return nullptr;
}

void collect_free_vars(const Expr& e, std::set<std::string>& out) {
    switch (e.node) {
    case Expr::Node::ConstNum:
    case Expr::Node::ConstStr:
        return;
    case Expr::Node::VarRef:
        out.insert(e.name);
        return;
    case Expr::Node::StrLen:
        collect_free_vars(*e.a, out);
        return;
    case Expr::Node::Arith:
    case Expr::Node::StrStr:
    case Expr::Node::Concat:
        collect_free_vars(*e.a, out);
        collect_free_vars(*e.b, out);
        return;
    }
}

void collect_free_vars(const Constraint& c, std::set<std::string>& out) {
    switch (c.node) {
    case Constraint::Node::Atom:
    case Constraint::Node::Contains:
        collect_free_vars(*c.lhs, out);
        collect_free_vars(*c.rhs, out);
        return;
    case Constraint::Node::And:
    case Constraint::Node::Or:
        collect_free_vars(*c.a, out);
        collect_free_vars(*c.b, out);
        return;
    }
}

std::set<std::string> free_vars(const Constraint& c) {
    std::set<std::string> out;
    collect_free_vars(c, out);
    return out;
}

std::set<std::string> free_vars(const ConstraintFile& cf) {
    std::set<std::string> out;
    for (const auto& c : cf.symbolic) collect_free_vars(*c, out);
    for (const auto& n : cf.neural) {
        out.insert(n.inputs.begin(), n.inputs.end());
        out.insert(n.outputs.begin(), n.outputs.end());
    }
    return out;
}

bool struct_eq(const Expr& a, const Expr& b) {
    if (a.node != b.node) return false;
    switch (a.node) {
    case Expr::Node::ConstNum:
        return a.num == b.num;
    case Expr::Node::ConstStr:
        return a.str == b.str;
    case Expr::Node::VarRef:
        return a.name == b.name;
    case Expr::Node::Arith:
        return a.op == b.op && struct_eq(*a.a, *b.a) && struct_eq(*a.b, *b.b);
    case Expr::Node::StrLen:
        return struct_eq(*a.a, *b.a);
    case Expr::Node::StrStr:
    case Expr::Node::Concat:
        return struct_eq(*a.a, *b.a) && struct_eq(*a.b, *b.b);
    }
    return false;
}

bool struct_eq(const Constraint& a, const Constraint& b) {
    if (a.node != b.node) return false;
    switch (a.node) {
    case Constraint::Node::Atom:
        return a.cmp == b.cmp && struct_eq(*a.lhs, *b.lhs) && struct_eq(*a.rhs, *b.rhs);
    case Constraint::Node::Contains:
        return struct_eq(*a.lhs, *b.lhs) && struct_eq(*a.rhs, *b.rhs);
    case Constraint::Node::And:
    case Constraint::Node::Or:
        return struct_eq(*a.a, *b.a) && struct_eq(*a.b, *b.b);
    }
    return false;
}

bool struct_eq(const ConstraintFile& a, const ConstraintFile& b) {
    if (a.decls.size() != b.decls.size() || a.symbolic.size() != b.symbolic.size() ||
        a.neural.size() != b.neural.size())
        return false;
    for (size_t i = 0; i < a.decls.size(); ++i) {
        const auto& x = a.decls[i];
        const auto& y = b.decls[i];
        if (x.name != y.name || x.kind != y.kind || x.has_domain != y.has_domain ||
            x.has_maxlen != y.has_maxlen)
            return false;
        if (x.has_domain && (x.lo != y.lo || x.hi != y.hi)) return false;
        if (x.has_maxlen && x.maxlen != y.maxlen) return false;
    }
    for (size_t i = 0; i < a.symbolic.size(); ++i)
        if (!struct_eq(*a.symbolic[i], *b.symbolic[i])) return false;
    for (size_t i = 0; i < a.neural.size(); ++i) {
        const auto& x = a.neural[i];
        const auto& y = b.neural[i];
        if (x.model_path != y.model_path || x.inputs != y.inputs || x.outputs != y.outputs)
            return false;
    }
    return true;
}

namespace {

[[noreturn]] void type_error(const std::string& msg, const Expr& e) {
    throw ParseError(msg, e.line, e.col);
}

} // namespace

ExprType type_check(const Expr& e, const std::vector<VarDecl>& decls) {
    switch (e.node) {
    case Expr::Node::ConstNum:
        return ExprType::Num;
    case Expr::Node::ConstStr:
        return ExprType::Str;
    case Expr::Node::VarRef: {
        for (const auto& d : decls)
            if (d.name == e.name) return d.kind == Kind::Str ? ExprType::Str : ExprType::Num;
        type_error("undeclared variable '" + e.name + "'", e);
    }
    case Expr::Node::Arith:
        if (type_check(*e.a, decls) != ExprType::Num || type_check(*e.b, decls) != ExprType::Num)
            type_error("arithmetic over non-numeric operand", e);
        return ExprType::Num;
    case Expr::Node::StrLen:
        if (type_check(*e.a, decls) != ExprType::Str)
            type_error("strlen of a non-string expression", e);
        return ExprType::Num;
    case Expr::Node::StrStr:
        if (type_check(*e.a, decls) != ExprType::Str || type_check(*e.b, decls) != ExprType::Str)
            type_error("strstr of a non-string expression", e);
        return ExprType::Num;
    case Expr::Node::Concat:
        if (type_check(*e.a, decls) != ExprType::Str || type_check(*e.b, decls) != ExprType::Str)
            type_error("concat of a non-string expression", e);
        return ExprType::Str;
    }
    type_error("bad expression node", e);
}

namespace {

void check_constraint(const Constraint& c, const std::vector<VarDecl>& decls) {
    switch (c.node) {
    case Constraint::Node::Atom: {
        const ExprType lt = type_check(*c.lhs, decls);
        const ExprType rt = type_check(*c.rhs, decls);
        if (lt != rt)
            throw ParseError("comparison between string and numeric expressions", c.line, c.col);
        if (lt == ExprType::Str && c.cmp != CmpOp::Eq && c.cmp != CmpOp::Ne)
            throw ParseError("ordered comparison over string expressions", c.line, c.col);
        return;
    }
    case Constraint::Node::Contains:
        if (type_check(*c.lhs, decls) != ExprType::Str ||
            type_check(*c.rhs, decls) != ExprType::Str)
            throw ParseError("contains over non-string expressions", c.line, c.col);
        return;
    case Constraint::Node::And:
    case Constraint::Node::Or:
        check_constraint(*c.a, decls);
        check_constraint(*c.b, decls);
        return;
    }
}

} // namespace

void validate(const ConstraintFile& cf) {
    std::unordered_set<std::string> seen;
    for (const auto& d : cf.decls) {
        if (!seen.insert(d.name).second)
            throw ParseError("duplicate declaration of '" + d.name + "'", 0, 0);
        if (d.has_domain && d.lo > d.hi)
            throw ParseError("empty domain for '" + d.name + "' (lower bound above upper)", 0, 0);
        if (d.has_maxlen && d.maxlen < 0)
            throw ParseError("negative maxlen for '" + d.name + "'", 0, 0);
    }
    for (const auto& c : cf.symbolic) check_constraint(*c, cf.decls);
    for (const auto& n : cf.neural) {
        std::unordered_set<std::string> ins(n.inputs.begin(), n.inputs.end());
        for (const auto& o : n.outputs)
            if (ins.count(o))
                throw ParseError("variable '" + o + "' is both input and output of a neural constraint",
                                 n.line, n.col);
        for (const auto& lists : {&n.inputs, &n.outputs})
            for (const auto& v : *lists) {
                const VarDecl* d = cf.find_decl(v);
                if (!d) throw ParseError("undeclared variable '" + v + "' in neural constraint",
                                         n.line, n.col);
                if (d->kind == Kind::Str)
                    throw ParseError("string variable '" + v +
                                         "' cannot appear in a neural constraint; use its length",
                                     n.line, n.col);
            }
        if (n.inputs.empty() || n.outputs.empty())
            throw ParseError("neural constraint needs at least one input and one output", n.line,
                             n.col);
    }
}

} // namespace nsx
