#include "nsx/symsolv.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <optional>

#include "nsx/error.hpp"
#include "nsx/parser.hpp"

namespace nsx {

void ConflictClause::validate() const {
    if (disjuncts.empty()) throw Error("conflict clause must be non-empty");
    for (size_t i = 0; i < disjuncts.size(); ++i)
        for (size_t j = i + 1; j < disjuncts.size(); ++j)
            if (disjuncts[i].first == disjuncts[j].first)
                throw Error("conflict clause names must be pairwise distinct");
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------
// Intervals with open/closed endpoints (reals keep strictness; integer
// variables are normalized to closed bounds eagerly).

struct Ivl {
    double lo = -kInf, hi = kInf;
    bool lo_strict = false, hi_strict = false;

    bool empty() const { return lo > hi || (lo == hi && (lo_strict || hi_strict)); }
    bool pinned() const { return lo == hi && !lo_strict && !hi_strict; }
};

long long int_floor(double v, bool strict) {
    // greatest integer satisfying x <= v (or x < v when strict)
    if (strict) return (long long)std::ceil(v - 1e-9) - 1;
    return (long long)std::floor(v + 1e-9);
}

long long int_ceil(double v, bool strict) {
    if (strict) return (long long)std::floor(v + 1e-9) + 1;
    return (long long)std::ceil(v - 1e-9);
}

// ---------------------------------------------------------------------------
// Lowered representation

struct LVar {
    std::string name;
    bool is_int = true;
    Ivl dom;
    bool defaulted = false; // started unbounded; default box applied later
    int str_index = -1;     // >=0: length variable of that string
    bool is_occ = false;    // strstr occurrence variable (prefers -1 = absent)
};

struct NExpr;
using NE = std::shared_ptr<const NExpr>;

struct NExpr {
    enum class K { Const, Var, Add, Sub, Mul, Div };
    K k = K::Const;
    double c = 0.0;
    int v = -1;
    NE a, b;
};

NE ne_const(double c) {
    auto e = std::make_shared<NExpr>();
    e->k = NExpr::K::Const;
    e->c = c;
    return e;
}
NE ne_var(int v) {
    auto e = std::make_shared<NExpr>();
    e->k = NExpr::K::Var;
    e->v = v;
    return e;
}
NE ne_bin(NExpr::K k, NE a, NE b) {
    auto e = std::make_shared<NExpr>();
    e->k = k;
    e->a = std::move(a);
    e->b = std::move(b);
    return e;
}

struct LinForm {
    std::map<int, double> coef;
    double cst = 0.0;
};

// Linearization of lhs - rhs; nullopt for non-linear shapes.
std::optional<LinForm> linearize(const NE& e) {
    switch (e->k) {
    case NExpr::K::Const:
        return LinForm{{}, e->c};
    case NExpr::K::Var: {
        LinForm f;
        f.coef[e->v] = 1.0;
        return f;
    }
    case NExpr::K::Add:
    case NExpr::K::Sub: {
        auto l = linearize(e->a);
        if (!l) return std::nullopt;
        auto r = linearize(e->b);
        if (!r) return std::nullopt;
        const double s = e->k == NExpr::K::Add ? 1.0 : -1.0;
        for (const auto& [v, c] : r->coef) {
            l->coef[v] += s * c;
            if (l->coef[v] == 0.0) l->coef.erase(v);
        }
        l->cst += s * r->cst;
        return l;
    }
    case NExpr::K::Mul: {
        auto l = linearize(e->a);
        auto r = linearize(e->b);
        if (l && l->coef.empty() && r) {
            for (auto& [v, c] : r->coef) c *= l->cst;
            r->cst *= l->cst;
            // drop zeroed coefficients
            for (auto it = r->coef.begin(); it != r->coef.end();)
                it = it->second == 0.0 ? r->coef.erase(it) : std::next(it);
            return r;
        }
        if (r && r->coef.empty() && l) {
            for (auto& [v, c] : l->coef) c *= r->cst;
            l->cst *= r->cst;
            for (auto it = l->coef.begin(); it != l->coef.end();)
                it = it->second == 0.0 ? l->coef.erase(it) : std::next(it);
            return l;
        }
        return std::nullopt;
    }
    case NExpr::K::Div: {
        auto r = linearize(e->b);
        if (!r || !r->coef.empty() || r->cst == 0.0) return std::nullopt;
        auto l = linearize(e->a);
        if (!l) return std::nullopt;
        for (auto& [v, c] : l->coef) c /= r->cst;
        l->cst /= r->cst;
        return l;
    }
    }
    return std::nullopt;
}

struct LAtom {
    CmpOp cmp = CmpOp::Eq;
    NE diff;                     // lhs - rhs
    std::optional<LinForm> lin; // linearized diff when available
};

struct LNode;
using LNodePtr = std::shared_ptr<const LNode>;

struct LNode {
    enum class K { Atom, And, Or, True };
    K k = K::True;
    int atom = -1;
    LNodePtr a, b;
};

LNodePtr lnode_atom(int idx) {
    auto n = std::make_shared<LNode>();
    n->k = LNode::K::Atom;
    n->atom = idx;
    return n;
}
LNodePtr lnode_true() {
    auto n = std::make_shared<LNode>();
    n->k = LNode::K::True;
    return n;
}
LNodePtr lnode_bin(LNode::K k, LNodePtr a, LNodePtr b) {
    auto n = std::make_shared<LNode>();
    n->k = k;
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
}

struct Placement {
    std::string needle;
    int occ_var; // solved occurrence (-1 in a solution means absent)
};

struct StrVar {
    std::string name;
    long long maxlen = kDefaultStrMaxlen;
    int len_var = -1;
    std::vector<Placement> placements;
    int parent = -1; // union-find over string variables
    bool has_const = false;
    std::string const_content; // class representative content (on roots)
};

struct Exclusion {
    std::vector<std::pair<int, double>> items; // lowered var -> excluded value
    const ConflictClause* orig = nullptr;
};

struct Lowered {
    std::vector<LVar> vars;
    std::vector<StrVar> strs;
    std::vector<LAtom> atoms;
    std::vector<LNodePtr> tops; // implicit conjunction
    std::vector<std::pair<ExprPtr, ExprPtr>> ne_obligations;
    std::vector<Exclusion> exclusions;
    std::map<std::string, int> num_id; // declared numeric name -> var
    std::map<std::string, int> str_id; // declared string name -> strs index
    bool trivially_unsat = false;
    bool content_atoms = false;

    int find_class(int s) const {
        while (strs[s].parent != s) s = strs[s].parent;
        return s;
    }
    // Returns false on a proven content contradiction (distinct constants).
    bool merge_class(int a, int b) {
        a = find_class(a);
        b = find_class(b);
        if (a == b) return true;
        if (strs[a].has_const && strs[b].has_const)
            return strs[a].const_content == strs[b].const_content;
        if (strs[b].has_const) std::swap(a, b);
        strs[b].parent = a;
        return true;
    }
    bool anchor_const(int s, const std::string& content) {
        s = find_class(s);
        if (strs[s].has_const) return strs[s].const_content == content;
        strs[s].has_const = true;
        strs[s].const_content = content;
        return true;
    }
};

// ---------------------------------------------------------------------------
// Lowering

struct LowerCtx {
    Lowered& out;
    const std::vector<VarDecl>& decls;

    const VarDecl* decl(const std::string& name) const {
        for (const auto& d : decls)
            if (d.name == name) return &d;
        return nullptr;
    }

    int num_var(const std::string& name) {
        auto it = out.num_id.find(name);
        if (it != out.num_id.end()) return it->second;
        const VarDecl* d = decl(name);
        LVar v;
        v.name = name;
        v.is_int = d->kind == Kind::Int;
        if (d->has_domain) {
            v.dom.lo = v.is_int ? double(int_ceil(d->lo, false)) : d->lo;
            v.dom.hi = v.is_int ? double(int_floor(d->hi, false)) : d->hi;
        } else {
            v.defaulted = true;
        }
        out.vars.push_back(v);
        const int id = int(out.vars.size()) - 1;
        out.num_id[name] = id;
        return id;
    }

    int str_var(const std::string& name) {
        auto it = out.str_id.find(name);
        if (it != out.str_id.end()) return it->second;
        const VarDecl* d = decl(name);
        StrVar s;
        s.name = name;
        s.maxlen = d->has_maxlen ? d->maxlen : kDefaultStrMaxlen;
        LVar lv;
        lv.name = "strlen(" + name + ")";
        lv.is_int = true;
        lv.dom.lo = 0;
        lv.dom.hi = double(s.maxlen);
        out.vars.push_back(lv);
        s.len_var = int(out.vars.size()) - 1;
        s.parent = int(out.strs.size());
        out.strs.push_back(s);
        const int id = int(out.strs.size()) - 1;
        out.vars[s.len_var].str_index = id;
        out.str_id[name] = id;
        return id;
    }

    int add_atom(CmpOp cmp, NE lhs, NE rhs) {
        LAtom a;
        a.cmp = cmp;
        a.diff = ne_bin(NExpr::K::Sub, std::move(lhs), std::move(rhs));
        a.lin = linearize(a.diff);
        out.atoms.push_back(std::move(a));
        return int(out.atoms.size()) - 1;
    }

    bool is_string_expr(const Expr& e) const {
        switch (e.node) {
        case Expr::Node::ConstStr:
        case Expr::Node::Concat:
            return true;
        case Expr::Node::VarRef: {
            const VarDecl* d = decl(e.name);
            return d && d->kind == Kind::Str;
        }
        default:
            return false;
        }
    }

    // Constant-folds a string expression when possible.
    std::optional<std::string> fold_str(const Expr& e) const {
        switch (e.node) {
        case Expr::Node::ConstStr:
            return e.str;
        case Expr::Node::Concat: {
            auto a = fold_str(*e.a);
            if (!a) return std::nullopt;
            auto b = fold_str(*e.b);
            if (!b) return std::nullopt;
            return *a + *b;
        }
        default:
            return std::nullopt;
        }
    }

    // Length of a string expression as a numeric expression.
    NE lower_strlen(const Expr& e) {
        switch (e.node) {
        case Expr::Node::ConstStr:
            return ne_const(double(e.str.size()));
        case Expr::Node::VarRef:
            return ne_var(out.strs[str_var(e.name)].len_var);
        case Expr::Node::Concat:
            return ne_bin(NExpr::K::Add, lower_strlen(*e.a), lower_strlen(*e.b));
        default:
            throw SolveError("strlen of a non-string expression");
        }
    }

    // Shared occurrence variable for strstr/contains over (string var, const
    // needle); creates the side constraint occ = -1 or occ + |n| <= len(h).
    int occ_var(const Expr& haystack, const Expr& needle) {
        if (haystack.node != Expr::Node::VarRef)
            throw SolveError("strstr/contains haystack must be a string variable internally");
        auto n = fold_str(needle);
        if (!n) throw SolveError("strstr/contains needle must be a constant string internally");
        const int s = str_var(haystack.name);
        const auto key = std::make_pair(s, *n);
        auto it = occ_cache_.find(key);
        if (it != occ_cache_.end()) return it->second;

        LVar ov;
        ov.name = "strstr(" + haystack.name + ", \"" + *n + "\")";
        ov.is_int = true;
        ov.is_occ = true;
        ov.dom.lo = -1;
        ov.dom.hi = double(out.strs[s].maxlen);
        out.vars.push_back(ov);
        const int ov_id = int(out.vars.size()) - 1;
        occ_cache_[key] = ov_id;
        out.strs[s].placements.push_back({*n, ov_id});
        out.content_atoms = true;

        if (n->empty()) {
            // find("") is 0
            out.tops.push_back(lnode_atom(add_atom(CmpOp::Eq, ne_var(ov_id), ne_const(0))));
        } else {
            const int absent = add_atom(CmpOp::Eq, ne_var(ov_id), ne_const(-1));
            const int fits =
                add_atom(CmpOp::Le, ne_bin(NExpr::K::Add, ne_var(ov_id), ne_const(double(n->size()))),
                         ne_var(out.strs[s].len_var));
            const int nonneg = add_atom(CmpOp::Ge, ne_var(ov_id), ne_const(0));
            out.tops.push_back(lnode_bin(LNode::K::Or, lnode_atom(absent),
                                         lnode_bin(LNode::K::And, lnode_atom(nonneg),
                                                   lnode_atom(fits))));
        }
        return ov_id;
    }

    NE lower_expr(const Expr& e) {
        switch (e.node) {
        case Expr::Node::ConstNum:
            return ne_const(e.num);
        case Expr::Node::VarRef: {
            const VarDecl* d = decl(e.name);
            if (d->kind == Kind::Str) throw SolveError("string variable in numeric position");
            return ne_var(num_var(e.name));
        }
        case Expr::Node::Arith: {
            NExpr::K k = NExpr::K::Add;
            switch (e.op) {
            case ArithOp::Add: k = NExpr::K::Add; break;
            case ArithOp::Sub: k = NExpr::K::Sub; break;
            case ArithOp::Mul: k = NExpr::K::Mul; break;
            case ArithOp::Div: k = NExpr::K::Div; break;
            }
            return ne_bin(k, lower_expr(*e.a), lower_expr(*e.b));
        }
        case Expr::Node::StrLen:
            return lower_strlen(*e.a);
        case Expr::Node::StrStr: {
            auto h = fold_str(*e.a);
            auto n = fold_str(*e.b);
            if (h && n) {
                const auto pos = h->find(*n);
                return ne_const(pos == std::string::npos ? -1.0 : double(pos));
            }
            return ne_var(occ_var(*e.a, *e.b));
        }
        default:
            throw SolveError("string expression in numeric position");
        }
    }

    LNodePtr lower_constraint(const Constraint& c, bool under_or) {
        switch (c.node) {
        case Constraint::Node::And:
            return lnode_bin(LNode::K::And, lower_constraint(*c.a, under_or),
                             lower_constraint(*c.b, under_or));
        case Constraint::Node::Or:
            return lnode_bin(LNode::K::Or, lower_constraint(*c.a, true),
                             lower_constraint(*c.b, true));
        case Constraint::Node::Contains: {
            out.content_atoms = true;
            const int ov = occ_var(*c.lhs, *c.rhs);
            return lnode_atom(add_atom(CmpOp::Ge, ne_var(ov), ne_const(0)));
        }
        case Constraint::Node::Atom: {
            const bool ls = is_string_expr(*c.lhs);
            const bool rs = is_string_expr(*c.rhs);
            if (!ls && !rs)
                return lnode_atom(add_atom(c.cmp, lower_expr(*c.lhs), lower_expr(*c.rhs)));

            // String equality/disequality.
            out.content_atoms = true;
            if (under_or)
                throw SolveError(
                    "string content atoms under a disjunction are not supported internally");
            if (c.cmp == CmpOp::Eq) {
                auto lc = fold_str(*c.lhs);
                auto rc = fold_str(*c.rhs);
                if (lc && rc) {
                    if (*lc == *rc) return lnode_true();
                    out.trivially_unsat = true;
                    return lnode_true();
                }
                const Expr* var_side = nullptr;
                const Expr* other = nullptr;
                if (c.lhs->node == Expr::Node::VarRef) {
                    var_side = c.lhs.get();
                    other = c.rhs.get();
                } else if (c.rhs->node == Expr::Node::VarRef) {
                    var_side = c.rhs.get();
                    other = c.lhs.get();
                }
                if (!var_side)
                    throw SolveError("string equality over concatenations is not supported "
                                     "internally; use an external solver");
                const int sv = str_var(var_side->name);
                if (other->node == Expr::Node::VarRef) {
                    if (!out.merge_class(sv, str_var(other->name))) out.trivially_unsat = true;
                } else if (auto oc = fold_str(*other)) {
                    if (!out.anchor_const(sv, *oc)) out.trivially_unsat = true;
                } else {
                    throw SolveError("string equality over concatenations is not supported "
                                     "internally; use an external solver");
                }
                // length equality travels through the numeric system
                return lnode_atom(
                    add_atom(CmpOp::Eq, lower_strlen(*c.lhs), lower_strlen(*c.rhs)));
            }
            if (c.cmp == CmpOp::Ne) {
                out.ne_obligations.push_back({c.lhs, c.rhs});
                return lnode_true(); // no numeric relaxation; checked at materialization
            }
            throw SolveError("ordered comparison over strings");
        }
        }
        throw SolveError("bad constraint node");
    }

    std::map<std::pair<int, std::string>, int> occ_cache_;
};

// ---------------------------------------------------------------------------
// Interval arithmetic over NExpr (closed approximation; strictness is only
// tracked for variable domains and linear tightening).

struct Range {
    double lo, hi;
};

double mul_guard(double a, double b) {
    if (a == 0.0 || b == 0.0) return 0.0;
    return a * b;
}

Range ne_range(const NE& e, const std::vector<Ivl>& dom) {
    switch (e->k) {
    case NExpr::K::Const:
        return {e->c, e->c};
    case NExpr::K::Var:
        return {dom[e->v].lo, dom[e->v].hi};
    case NExpr::K::Add: {
        const Range a = ne_range(e->a, dom);
        const Range b = ne_range(e->b, dom);
        return {a.lo + b.lo, a.hi + b.hi};
    }
    case NExpr::K::Sub: {
        const Range a = ne_range(e->a, dom);
        const Range b = ne_range(e->b, dom);
        return {a.lo - b.hi, a.hi - b.lo};
    }
    case NExpr::K::Mul: {
        const Range a = ne_range(e->a, dom);
        const Range b = ne_range(e->b, dom);
        const double p1 = mul_guard(a.lo, b.lo), p2 = mul_guard(a.lo, b.hi);
        const double p3 = mul_guard(a.hi, b.lo), p4 = mul_guard(a.hi, b.hi);
        return {std::min(std::min(p1, p2), std::min(p3, p4)),
                std::max(std::max(p1, p2), std::max(p3, p4))};
    }
    case NExpr::K::Div: {
        const Range a = ne_range(e->a, dom);
        const Range b = ne_range(e->b, dom);
        if (b.lo <= 0.0 && b.hi >= 0.0) return {-kInf, kInf};
        const double p1 = a.lo / b.lo, p2 = a.lo / b.hi;
        const double p3 = a.hi / b.lo, p4 = a.hi / b.hi;
        return {std::min(std::min(p1, p2), std::min(p3, p4)),
                std::max(std::max(p1, p2), std::max(p3, p4))};
    }
    }
    return {-kInf, kInf};
}

// Exact evaluation when every variable in e is pinned; nullopt on division
// by zero.
std::optional<double> ne_exact(const NE& e, const std::vector<Ivl>& dom) {
    switch (e->k) {
    case NExpr::K::Const:
        return e->c;
    case NExpr::K::Var:
        return dom[e->v].pinned() ? std::optional<double>(dom[e->v].lo) : std::nullopt;
    case NExpr::K::Add:
    case NExpr::K::Sub:
    case NExpr::K::Mul:
    case NExpr::K::Div: {
        auto a = ne_exact(e->a, dom);
        if (!a) return std::nullopt;
        auto b = ne_exact(e->b, dom);
        if (!b) return std::nullopt;
        switch (e->k) {
        case NExpr::K::Add: return *a + *b;
        case NExpr::K::Sub: return *a - *b;
        case NExpr::K::Mul: return *a * *b;
        case NExpr::K::Div:
            if (*b == 0.0) return std::nullopt;
            return *a / *b;
        default: return std::nullopt;
        }
    }
    }
    return std::nullopt;
}

bool all_pinned(const NE& e, const std::vector<Ivl>& dom) {
    switch (e->k) {
    case NExpr::K::Const:
        return true;
    case NExpr::K::Var:
        return dom[e->v].pinned();
    default:
        return all_pinned(e->a, dom) && all_pinned(e->b, dom);
    }
}

enum class Tri { True, False, Unknown };

Tri atom_status(const LAtom& a, const std::vector<Ivl>& dom) {
    if (all_pinned(a.diff, dom)) {
        auto v = ne_exact(a.diff, dom);
        if (!v) return Tri::False; // division by zero: evaluation failure
        switch (a.cmp) {
        case CmpOp::Lt: return *v < 0 ? Tri::True : Tri::False;
        case CmpOp::Le: return *v <= 0 ? Tri::True : Tri::False;
        case CmpOp::Gt: return *v > 0 ? Tri::True : Tri::False;
        case CmpOp::Ge: return *v >= 0 ? Tri::True : Tri::False;
        case CmpOp::Eq: return *v == 0 ? Tri::True : Tri::False;
        case CmpOp::Ne: return *v != 0 ? Tri::True : Tri::False;
        }
    }
    const Range r = ne_range(a.diff, dom);
    switch (a.cmp) {
    case CmpOp::Lt:
        if (r.hi < 0) return Tri::True;
        if (r.lo >= 0) return Tri::False;
        return Tri::Unknown;
    case CmpOp::Le:
        if (r.hi <= 0) return Tri::True;
        if (r.lo > 0) return Tri::False;
        return Tri::Unknown;
    case CmpOp::Gt:
        if (r.lo > 0) return Tri::True;
        if (r.hi <= 0) return Tri::False;
        return Tri::Unknown;
    case CmpOp::Ge:
        if (r.lo >= 0) return Tri::True;
        if (r.hi < 0) return Tri::False;
        return Tri::Unknown;
    case CmpOp::Eq:
        if (r.lo == 0 && r.hi == 0) return Tri::True;
        if (r.lo > 0 || r.hi < 0) return Tri::False;
        return Tri::Unknown;
    case CmpOp::Ne:
        if (r.lo > 0 || r.hi < 0) return Tri::True;
        if (r.lo == 0 && r.hi == 0) return Tri::False;
        return Tri::Unknown;
    }
    return Tri::Unknown;
}

// ---------------------------------------------------------------------------
// Search state

struct State {
    std::vector<Ivl> dom;
    std::vector<std::vector<double>> forbidden;
    std::vector<LNodePtr> active;
};

Tri node_status(const LNodePtr& n, const Lowered& L, const std::vector<Ivl>& dom) {
    switch (n->k) {
    case LNode::K::True:
        return Tri::True;
    case LNode::K::Atom:
        return atom_status(L.atoms[n->atom], dom);
    case LNode::K::And: {
        const Tri a = node_status(n->a, L, dom);
        if (a == Tri::False) return Tri::False;
        const Tri b = node_status(n->b, L, dom);
        if (b == Tri::False) return Tri::False;
        return (a == Tri::True && b == Tri::True) ? Tri::True : Tri::Unknown;
    }
    case LNode::K::Or: {
        const Tri a = node_status(n->a, L, dom);
        if (a == Tri::True) return Tri::True;
        const Tri b = node_status(n->b, L, dom);
        if (b == Tri::True) return Tri::True;
        return (a == Tri::False && b == Tri::False) ? Tri::False : Tri::Unknown;
    }
    }
    return Tri::Unknown;
}

bool is_forbidden(const State& s, int var, double v) {
    for (double f : s.forbidden[var])
        if (f == v) return true;
    return false;
}

// Applies `value ⊗ bound` tightening to a variable; returns false on empty.
bool apply_upper(State& s, int var, double bound, bool strict, const std::vector<LVar>& vars,
                 bool& changed) {
    Ivl& d = s.dom[var];
    if (vars[var].is_int) {
        const double nb = double(int_floor(bound, strict));
        if (nb < d.hi - 0.5) {
            d.hi = nb;
            changed = true;
        }
    } else {
        if (bound < d.hi - 1e-12 * (1.0 + std::fabs(d.hi)) ||
            (bound <= d.hi && strict && !d.hi_strict && bound == d.hi)) {
            d.hi = bound;
            d.hi_strict = strict;
            changed = true;
        } else if (bound == d.hi && strict && !d.hi_strict) {
            d.hi_strict = true;
            changed = true;
        }
    }
    return !d.empty();
}

bool apply_lower(State& s, int var, double bound, bool strict, const std::vector<LVar>& vars,
                 bool& changed) {
    Ivl& d = s.dom[var];
    if (vars[var].is_int) {
        const double nb = double(int_ceil(bound, strict));
        if (nb > d.lo + 0.5) {
            d.lo = nb;
            changed = true;
        }
    } else {
        if (bound > d.lo + 1e-12 * (1.0 + std::fabs(d.lo))) {
            d.lo = bound;
            d.lo_strict = strict;
            changed = true;
        } else if (bound == d.lo && strict && !d.lo_strict) {
            d.lo_strict = true;
            changed = true;
        }
    }
    return !d.empty();
}

// Linear tightening of one atom (diff ⊗ 0). Returns false on conflict.
bool tighten_linear(State& s, const LAtom& a, const std::vector<LVar>& vars, bool& changed) {
    if (!a.lin) return true;
    const LinForm& f = *a.lin;
    if (a.cmp == CmpOp::Ne) {
        // Single-variable disequality feeds the forbidden set.
        if (f.coef.size() == 1) {
            const auto& [v, c] = *f.coef.begin();
            const double excl = -f.cst / c;
            if (vars[v].is_int && std::fabs(excl - std::round(excl)) > 1e-9) return true;
            const double ev = vars[v].is_int ? std::round(excl) : excl;
            if (s.dom[v].pinned() && s.dom[v].lo == ev) return false;
            if (!is_forbidden(s, v, ev)) {
                s.forbidden[v].push_back(ev);
                changed = true;
            }
        }
        return true;
    }

    // Upper-bound family: diff <= 0 (Le), < 0 (Lt), and equality gives both.
    const bool has_upper = a.cmp == CmpOp::Lt || a.cmp == CmpOp::Le || a.cmp == CmpOp::Eq;
    const bool has_lower = a.cmp == CmpOp::Gt || a.cmp == CmpOp::Ge || a.cmp == CmpOp::Eq;
    const bool strict = a.cmp == CmpOp::Lt || a.cmp == CmpOp::Gt;

    for (const auto& [v, c] : f.coef) {
        // rest = f - c*v
        double rest_lo = f.cst, rest_hi = f.cst;
        bool rest_lo_strict = false, rest_hi_strict = false;
        bool unbounded_lo = false, unbounded_hi = false;
        for (const auto& [u, cu] : f.coef) {
            if (u == v) continue;
            const Ivl& du = s.dom[u];
            double tlo, thi;
            bool tlos, this_;
            if (cu > 0) {
                tlo = mul_guard(cu, du.lo);
                thi = mul_guard(cu, du.hi);
                tlos = du.lo_strict;
                this_ = du.hi_strict;
            } else {
                tlo = mul_guard(cu, du.hi);
                thi = mul_guard(cu, du.lo);
                tlos = du.hi_strict;
                this_ = du.lo_strict;
            }
            if (tlo == -kInf) unbounded_lo = true;
            if (thi == kInf) unbounded_hi = true;
            rest_lo += tlo;
            rest_hi += thi;
            rest_lo_strict = rest_lo_strict || tlos;
            rest_hi_strict = rest_hi_strict || this_;
        }
        if (has_upper && !unbounded_lo && std::isfinite(rest_lo)) {
            // c*v <= -rest_lo
            const double b = -rest_lo / c;
            const bool bs = strict || rest_lo_strict;
            if (c > 0) {
                if (!apply_upper(s, v, b, bs, vars, changed)) return false;
            } else {
                if (!apply_lower(s, v, b, bs, vars, changed)) return false;
            }
        }
        if (has_lower && !unbounded_hi && std::isfinite(rest_hi)) {
            // c*v >= -rest_hi
            const double b = -rest_hi / c;
            const bool bs = strict || rest_hi_strict;
            if (c > 0) {
                if (!apply_lower(s, v, b, bs, vars, changed)) return false;
            } else {
                if (!apply_upper(s, v, b, bs, vars, changed)) return false;
            }
        }
    }
    return true;
}

// Interval propagation to fixpoint. Returns false on conflict.
bool propagate(State& s, const Lowered& L) {
    for (int pass = 0; pass < 1000; ++pass) {
        bool changed = false;
        std::vector<LNodePtr> next;
        next.reserve(s.active.size());
        bool conflict = false;
        for (const auto& n : s.active) {
            if (conflict) break;
            switch (n->k) {
            case LNode::K::True:
                changed = true;
                break;
            case LNode::K::And:
                next.push_back(n->a);
                next.push_back(n->b);
                changed = true;
                break;
            case LNode::K::Atom: {
                const LAtom& a = L.atoms[n->atom];
                const Tri st = atom_status(a, s.dom);
                if (st == Tri::False) {
                    conflict = true;
                    break;
                }
                if (st == Tri::True) {
                    changed = true;
                    break; // discharged
                }
                if (!tighten_linear(s, a, L.vars, changed)) {
                    conflict = true;
                    break;
                }
                next.push_back(n);
                break;
            }
            case LNode::K::Or: {
                const Tri st = node_status(n, L, s.dom);
                if (st == Tri::True) {
                    changed = true;
                    break;
                }
                if (st == Tri::False) {
                    conflict = true;
                    break;
                }
                // Unit rule: a certainly-false disjunct forces the other.
                const Tri sa = node_status(n->a, L, s.dom);
                const Tri sb = node_status(n->b, L, s.dom);
                if (sa == Tri::False) {
                    next.push_back(n->b);
                    changed = true;
                } else if (sb == Tri::False) {
                    next.push_back(n->a);
                    changed = true;
                } else {
                    next.push_back(n);
                }
                break;
            }
            }
        }
        if (conflict) return false;
        s.active.swap(next);

        // Pinned-value vs forbidden values.
        for (size_t v = 0; v < s.dom.size(); ++v)
            if (s.dom[v].pinned() && is_forbidden(s, int(v), s.dom[v].lo)) return false;

        // Conflict-clause unit rule over the numeric projection: when all but
        // one variable sit on the excluded tuple, forbid the last value; when
        // all of them do, the state is conflicting.
        for (const auto& ex : L.exclusions) {
            int undecided = -1;
            double undecided_val = 0.0;
            bool satisfied = false;
            for (const auto& [v, val] : ex.items) {
                const Ivl& d = s.dom[v];
                if (d.pinned()) {
                    if (d.lo != val) {
                        satisfied = true;
                        break;
                    }
                } else if (val < d.lo || val > d.hi || is_forbidden(s, v, val)) {
                    satisfied = true;
                    break;
                } else if (undecided == -1) {
                    undecided = v;
                    undecided_val = val;
                } else {
                    undecided = -2; // more than one open variable: no unit
                }
            }
            if (satisfied) continue;
            if (undecided == -1) return false;
            if (undecided >= 0 && !is_forbidden(s, undecided, undecided_val)) {
                s.forbidden[undecided].push_back(undecided_val);
                changed = true;
            }
        }
        if (!changed) return true;
    }
    return true; // fixpoint cap reached; sound to stop tightening
}

// ---------------------------------------------------------------------------
// Difference-constraint closure (x - y <= k edges; negative cycle => UNSAT).

bool difference_cycle(const Lowered& L) {
    // Collect top-level conjunct atoms only.
    std::vector<const LAtom*> atoms;
    std::vector<LNodePtr> stack(L.tops.begin(), L.tops.end());
    while (!stack.empty()) {
        LNodePtr n = stack.back();
        stack.pop_back();
        if (n->k == LNode::K::And) {
            stack.push_back(n->a);
            stack.push_back(n->b);
        } else if (n->k == LNode::K::Atom) {
            atoms.push_back(&L.atoms[n->atom]);
        }
    }
    const size_t nv = L.vars.size();
    struct W {
        double k = kInf;
        bool strict = false;
    };
    std::vector<std::vector<W>> d(nv, std::vector<W>(nv));
    bool any = false;
    auto add_edge = [&](int x, int y, double k, bool strict) {
        // x - y <= k (strict: <)
        if (L.vars[x].is_int && L.vars[y].is_int) {
            if (strict) k = std::floor(k + 1e-9) - (k == std::floor(k) ? 1.0 : 0.0);
            if (k != std::floor(k)) k = std::floor(k);
            strict = false;
        }
        W& w = d[x][y];
        if (k < w.k || (k == w.k && strict && !w.strict)) {
            w.k = k;
            w.strict = strict;
            any = true;
        }
    };
    for (const LAtom* a : atoms) {
        if (!a->lin || a->lin->coef.size() != 2) continue;
        auto it = a->lin->coef.begin();
        const auto [v1, c1] = *it;
        const auto [v2, c2] = *std::next(it);
        if (c1 != -c2 || std::fabs(c1) != 1.0) continue;
        const int pos = c1 > 0 ? v1 : v2;
        const int neg = c1 > 0 ? v2 : v1;
        const double k = -a->lin->cst; // pos - neg + cst ⊗ 0  =>  pos - neg ⊗ -cst
        switch (a->cmp) {
        case CmpOp::Le: add_edge(pos, neg, k, false); break;
        case CmpOp::Lt: add_edge(pos, neg, k, true); break;
        case CmpOp::Ge: add_edge(neg, pos, -k, false); break;
        case CmpOp::Gt: add_edge(neg, pos, -k, true); break;
        case CmpOp::Eq:
            add_edge(pos, neg, k, false);
            add_edge(neg, pos, -k, false);
            break;
        default: break;
        }
    }
    if (!any) return false;
    for (size_t m = 0; m < nv; ++m)
        for (size_t i = 0; i < nv; ++i) {
            if (d[i][m].k == kInf) continue;
            for (size_t j = 0; j < nv; ++j) {
                if (d[m][j].k == kInf) continue;
                const double k = d[i][m].k + d[m][j].k;
                const bool strict = d[i][m].strict || d[m][j].strict;
                if (k < d[i][j].k || (k == d[i][j].k && strict && !d[i][j].strict)) {
                    d[i][j].k = k;
                    d[i][j].strict = strict;
                }
            }
        }
    for (size_t i = 0; i < nv; ++i)
        if (d[i][i].k < 0 || (d[i][i].k == 0 && d[i][i].strict)) return true;
    return false;
}

// ---------------------------------------------------------------------------
// String materialization

struct MatResult {
    bool ok = false;
    bool gave_up = false; // content-level freedom not fully explored
    Assignment assignment;
};

// Builds the content of one class: filler + needle placements.
std::optional<std::string> build_content(long long len, char filler,
                                         const std::vector<std::pair<long long, std::string>>& puts) {
    std::string s(size_t(len), filler);
    for (const auto& [at, needle] : puts) {
        if (at < 0 || at + (long long)needle.size() > len) return std::nullopt;
        for (size_t i = 0; i < needle.size(); ++i) {
            char& c = s[size_t(at) + i];
            if (c != filler && c != needle[i]) return std::nullopt; // overlapping conflict
            c = needle[i];
        }
    }
    return s;
}

MatResult materialize(const Lowered& L, const std::vector<VarDecl>& decls,
                      const std::vector<double>& value) {
    MatResult res;

    // Group string variables into classes and collect placements (members of
    // a class share content, so placements apply class-wide).
    std::map<int, std::vector<int>> classes;
    for (size_t s = 0; s < L.strs.size(); ++s) classes[L.find_class(int(s))].push_back(int(s));

    std::map<int, std::string> content; // class root -> content
    for (auto& [root, members] : classes) {
        const long long len = (long long)std::llround(value[L.strs[members[0]].len_var]);
        std::vector<std::pair<long long, std::string>> puts;
        std::vector<std::pair<long long, std::string>> absents;
        for (int m : members) {
            if ((long long)std::llround(value[L.strs[m].len_var]) != len) return res;
            for (const auto& p : L.strs[m].placements) {
                const long long occ = (long long)std::llround(value[p.occ_var]);
                if (occ >= 0)
                    puts.push_back({occ, p.needle});
                else
                    absents.push_back({-1, p.needle});
            }
        }
        auto verify = [&](const std::string& s) {
            for (const auto& [at, needle] : puts)
                if ((long long)s.find(needle) != at) return false;
            for (const auto& [at, needle] : absents)
                if (s.find(needle) != std::string::npos) return false;
            return true;
        };
        if (L.strs[root].has_const) {
            const std::string& s = L.strs[root].const_content;
            if ((long long)s.size() != len) return res;
            if (!verify(s)) return res; // content fully forced: sound rejection
            content[root] = s;
            continue;
        }
        bool built = false;
        for (char filler : std::string("abcdefgh")) {
            auto s = build_content(len, filler, puts);
            if (s && verify(*s)) {
                content[root] = *s;
                built = true;
                break;
            }
        }
        if (!built) {
            res.gave_up = !puts.empty() || !absents.empty();
            return res;
        }
    }

    auto str_value = [&](int s) { return content[L.find_class(s)]; };

    Assignment a;
    for (const auto& d : decls) {
        if (d.kind == Kind::Str) {
            auto it = L.str_id.find(d.name);
            a[d.name] = TypedValue::of_str(it != L.str_id.end() ? str_value(it->second)
                                                                : std::string());
        } else {
            auto it = L.num_id.find(d.name);
            const double v = it != L.num_id.end() ? value[it->second] : 0.0;
            a[d.name] = d.kind == Kind::Int ? TypedValue::of_int((long long)std::llround(v))
                                            : TypedValue::of_real(v);
        }
    }

    // Disequality obligations: adjust a free side's filler when violated.
    for (const auto& [lhs, rhs] : L.ne_obligations) {
        const std::string lv = eval_str(*lhs, a);
        const std::string rv = eval_str(*rhs, a);
        if (lv != rv) continue;
        bool fixed = false;
        for (const ExprPtr& side : {lhs, rhs}) {
            if (side->node != Expr::Node::VarRef) continue;
            const int sv = L.str_id.at(side->name);
            const int root = L.find_class(sv);
            if (L.strs[root].has_const) continue;
            // rebuild with alternative fillers until all obligations pass
            std::vector<std::pair<long long, std::string>> puts;
            const long long len = (long long)content[root].size();
            for (auto& [r2, members] : classes) {
                if (r2 != root) continue;
                for (int m : members)
                    for (const auto& p : L.strs[m].placements) {
                        const long long occ = (long long)std::llround(value[p.occ_var]);
                        if (occ >= 0) puts.push_back({occ, p.needle});
                    }
            }
            for (char filler : std::string("bcdefghijklmnop")) {
                auto s2 = build_content(len, filler, puts);
                if (!s2 || *s2 == content[root]) continue;
                content[root] = *s2;
                for (const auto& dd : decls)
                    if (dd.kind == Kind::Str && L.str_id.count(dd.name))
                        a[dd.name] = TypedValue::of_str(str_value(L.str_id.at(dd.name)));
                if (eval_str(*lhs, a) != eval_str(*rhs, a)) {
                    fixed = true;
                    break;
                }
            }
            if (fixed) break;
        }
        if (!fixed) {
            res.gave_up = true;
            return res;
        }
    }

    res.ok = true;
    res.assignment = std::move(a);
    return res;
}

// ---------------------------------------------------------------------------
// Probing search (DPLL over Or nodes + value splitting)

struct SearchCtx {
    const Lowered* L;
    const std::vector<VarDecl>* decls;
    const std::vector<ConstraintPtr>* constraints;
    long long budget = 0;
    bool budget_hit = false;
    bool incomplete_leaf = false; // some leaf exhausted an incomplete candidate set
    bool mat_gave_up = false;
    std::optional<Assignment> found;
};

bool clause_excluded(const ConflictClause& cl, const Assignment& a) {
    for (const auto& [name, excl] : cl.disjuncts) {
        auto it = a.find(name);
        if (it == a.end() || it->second != excl) return false;
    }
    return true;
}

bool try_candidate_assignment(SearchCtx& ctx, const std::vector<double>& values) {
    MatResult m = materialize(*ctx.L, *ctx.decls, values);
    if (m.gave_up) ctx.mat_gave_up = true;
    if (!m.ok) return false;
    for (const auto& ex : ctx.L->exclusions)
        if (clause_excluded(*ex.orig, m.assignment)) return false;
    try {
        if (!check_sat(m.assignment, *ctx.constraints)) return false;
    } catch (const EvalError&) {
        return false;
    }
    ctx.found = std::move(m.assignment);
    return true;
}

// Candidate values for one variable; `complete` reports whether the spiral
// covered the whole remaining domain.
std::vector<double> int_candidates(const State& s, const Lowered& L, int var, bool& complete) {
    const Ivl& d = s.dom[var];
    const long long lo = (long long)d.lo;
    const long long hi = (long long)d.hi;
    std::vector<double> out;
    auto push = [&](long long v) {
        if (v < lo || v > hi) return;
        const double dv = double(v);
        if (is_forbidden(s, var, dv)) return;
        for (double e : out)
            if (e == dv) return;
        out.push_back(dv);
    };
    const long long width = hi - lo + 1;
    const long long anchor = std::clamp<long long>(L.vars[var].is_occ ? -1 : 0, lo, hi);
    if (width <= 49) {
        for (long long k = 0; k < width; ++k) {
            push(anchor + k);
            push(anchor - k);
        }
        complete = true;
        return out;
    }
    complete = false;
    for (long long k = 0; k <= 24; ++k) {
        push(anchor + k);
        push(anchor - k);
    }
    // Boundary values harvested from linear atoms whose other variables are
    // pinned (equalities propagate exactly; this catches the rest).
    for (const auto& a : L.atoms) {
        if (!a.lin) continue;
        auto it = a.lin->coef.find(var);
        if (it == a.lin->coef.end()) continue;
        double rest = a.lin->cst;
        bool ok = true;
        for (const auto& [u, cu] : a.lin->coef) {
            if (u == var) continue;
            if (!s.dom[u].pinned()) {
                ok = false;
                break;
            }
            rest += cu * s.dom[u].lo;
        }
        if (!ok) continue;
        const double b = -rest / it->second;
        const long long ib = (long long)std::llround(b);
        for (long long v : {ib - 1, ib, ib + 1}) push(v);
    }
    for (long long k = 0; k < 4; ++k) {
        push(lo + k);
        push(hi - k);
    }
    push((lo + hi) / 2);
    return out;
}

std::vector<double> real_candidates(const State& s, const Lowered& L, int var) {
    const Ivl& d = s.dom[var];
    std::vector<double> out;
    const double span = d.hi - d.lo;
    auto interior = [&](double v, bool from_lo) {
        if (v == d.lo && d.lo_strict) v += std::isfinite(span) ? std::min(1.0, span * 0.25) : 1.0;
        if (v == d.hi && d.hi_strict) v -= std::isfinite(span) ? std::min(1.0, span * 0.25) : 1.0;
        (void)from_lo;
        return v;
    };
    auto push = [&](double v) {
        if (v < d.lo || v > d.hi) return;
        if ((v == d.lo && d.lo_strict) || (v == d.hi && d.hi_strict)) return;
        if (is_forbidden(s, var, v)) return;
        for (double e : out)
            if (e == v) return;
        out.push_back(v);
    };
    push(interior(std::clamp(0.0, d.lo, d.hi), true));
    // Equality-style boundaries from linear atoms with everything else pinned.
    for (const auto& a : L.atoms) {
        if (!a.lin) continue;
        auto it = a.lin->coef.find(var);
        if (it == a.lin->coef.end()) continue;
        double rest = a.lin->cst;
        bool ok = true;
        for (const auto& [u, cu] : a.lin->coef) {
            if (u == var) continue;
            if (!s.dom[u].pinned()) {
                ok = false;
                break;
            }
            rest += cu * s.dom[u].lo;
        }
        if (ok) push(-rest / it->second);
    }
    if (std::isfinite(span)) push(d.lo + span / 2);
    push(interior(d.lo, true));
    push(interior(d.hi, false));
    return out;
}

bool probe(SearchCtx& ctx, State s);

bool branch_on(SearchCtx& ctx, const State& s, int var) {
    bool complete = false;
    std::vector<double> cands;
    if (ctx.L->vars[var].is_int) {
        cands = int_candidates(s, *ctx.L, var, complete);
    } else {
        cands = real_candidates(s, *ctx.L, var);
    }
    for (double v : cands) {
        if (ctx.budget-- <= 0) {
            ctx.budget_hit = true;
            return false;
        }
        State child = s;
        child.dom[var].lo = child.dom[var].hi = v;
        child.dom[var].lo_strict = child.dom[var].hi_strict = false;
        if (probe(ctx, std::move(child))) return true;
        if (ctx.budget_hit) return false;
    }
    if (!complete) ctx.incomplete_leaf = true;
    return false;
}

bool probe(SearchCtx& ctx, State s) {
    if (!propagate(s, *ctx.L)) return false; // refuted
    if (ctx.found) return true;

    // Split on the first remaining Or node (DPLL-style).
    for (size_t i = 0; i < s.active.size(); ++i) {
        if (s.active[i]->k != LNode::K::Or) continue;
        const LNodePtr orn = s.active[i];
        for (const LNodePtr& disj : {orn->a, orn->b}) {
            if (ctx.budget-- <= 0) {
                ctx.budget_hit = true;
                return false;
            }
            State child = s;
            child.active[i] = disj;
            if (probe(ctx, std::move(child))) return true;
            if (ctx.budget_hit) return false;
        }
        return false;
    }

    // Value splitting: prefer variables that occur in active constraints.
    int pick = -1;
    for (const auto& n : s.active) {
        std::vector<LNodePtr> stack{n};
        while (!stack.empty() && pick == -1) {
            LNodePtr cur = stack.back();
            stack.pop_back();
            if (cur->k == LNode::K::Atom) {
                std::vector<NE> es{ctx.L->atoms[cur->atom].diff};
                while (!es.empty() && pick == -1) {
                    NE e = es.back();
                    es.pop_back();
                    if (e->k == NExpr::K::Var && !s.dom[e->v].pinned())
                        pick = e->v;
                    else if (e->a) {
                        es.push_back(e->a);
                        if (e->b) es.push_back(e->b);
                    }
                }
            } else if (cur->a) {
                stack.push_back(cur->a);
                if (cur->b) stack.push_back(cur->b);
            }
        }
        if (pick != -1) break;
    }
    if (pick == -1)
        for (size_t v = 0; v < s.dom.size(); ++v)
            if (!s.dom[v].pinned()) {
                pick = int(v);
                break;
            }

    if (pick == -1) {
        // Everything pinned and no constraint refuted: candidate solution.
        std::vector<double> values(s.dom.size());
        for (size_t v = 0; v < values.size(); ++v) values[v] = s.dom[v].lo;
        if (try_candidate_assignment(ctx, values)) return true;
        ctx.incomplete_leaf = true; // the numeric point failed final checks
        return false;
    }
    return branch_on(ctx, s, pick);
}

// ---------------------------------------------------------------------------
// Bounded enumeration fallback (complete for integer/string instances).

SymVerdict enumerate_all(SearchCtx& ctx, const State& root, bool any_default, long long limit) {
    std::vector<int> free_vars;
    double tuples = 1.0;
    for (size_t v = 0; v < root.dom.size(); ++v) {
        if (root.dom[v].pinned()) continue;
        if (!ctx.L->vars[v].is_int)
            throw SolveError("unsupported instance: real-valued search space is not enumerable "
                             "(nonlinear over reals or division by a non-constant denominator)");
        if (!std::isfinite(root.dom[v].lo) || !std::isfinite(root.dom[v].hi))
            throw SolveError("unsupported instance: unbounded integer after propagation");
        tuples *= root.dom[v].hi - root.dom[v].lo + 1;
        free_vars.push_back(int(v));
    }
    if (tuples > double(limit))
        throw SolveError("domain too large for bounded enumeration (" +
                         std::to_string((long long)tuples) + " tuples)");

    std::vector<double> values(root.dom.size());
    for (size_t v = 0; v < values.size(); ++v) values[v] = root.dom[v].lo;
    std::vector<long long> cur(free_vars.size());
    for (size_t i = 0; i < free_vars.size(); ++i) cur[i] = (long long)root.dom[free_vars[i]].lo;

    ctx.mat_gave_up = false;
    for (;;) {
        for (size_t i = 0; i < free_vars.size(); ++i) values[free_vars[i]] = double(cur[i]);
        bool skip = false;
        for (size_t i = 0; i < free_vars.size() && !skip; ++i)
            skip = is_forbidden(root, free_vars[i], values[free_vars[i]]);
        if (!skip && try_candidate_assignment(ctx, values)) {
            SymVerdict v;
            v.sat = true;
            v.assignment = *ctx.found;
            return v;
        }
        size_t k = 0;
        while (k < free_vars.size()) {
            if (cur[k] < (long long)root.dom[free_vars[k]].hi) {
                ++cur[k];
                break;
            }
            cur[k] = (long long)root.dom[free_vars[k]].lo;
            ++k;
        }
        if (k == free_vars.size()) break;
        if (free_vars.empty()) break;
    }
    if (ctx.mat_gave_up)
        throw SolveError("string content reasoning exhausted the deterministic materializer");
    SymVerdict v;
    v.sat = false;
    v.bounded = any_default;
    v.note = any_default ? "unsat within default domains (bounded enumeration)"
                         : "unsat (bounded enumeration over declared domains)";
    return v;
}

} // namespace

// ---------------------------------------------------------------------------

SymVerdict solve(const std::vector<ConstraintPtr>& constraints,
                 const std::vector<ConflictClause>& conflicts, const std::vector<VarDecl>& decls,
                 const SymSolveOptions& opt) {
    // Well-formedness of inputs.
    {
        ConstraintFile cf;
        cf.decls = decls;
        cf.symbolic = constraints;
        validate(cf);
    }
    for (const auto& cl : conflicts) cl.validate();

    Lowered L;
    LowerCtx ctx{L, decls, {}};
    for (const auto& c : constraints) L.tops.push_back(ctx.lower_constraint(*c, false));
    // Ensure every declared variable exists in the lowered space so the
    // final assignment binds it.
    for (const auto& d : decls) {
        if (d.kind == Kind::Str)
            ctx.str_var(d.name);
        else
            ctx.num_var(d.name);
    }
    for (const auto& cl : conflicts) {
        Exclusion ex;
        ex.orig = &cl;
        for (const auto& [name, val] : cl.disjuncts) {
            const VarDecl* d = nullptr;
            for (const auto& dd : decls)
                if (dd.name == name) d = &dd;
            if (!d) throw Error("conflict clause references undeclared variable '" + name + "'");
            if (d->kind == Kind::Str) {
                if (val.kind != Kind::Str) throw Error("conflict clause kind mismatch");
                // Numeric projection: exclude by length (conservative).
                ex.items.push_back({L.strs[ctx.str_var(name)].len_var, double(val.s.size())});
            } else {
                ex.items.push_back({ctx.num_var(name), val.num()});
            }
        }
        L.exclusions.push_back(std::move(ex));
    }

    SymVerdict verdict;
    if (L.trivially_unsat) {
        verdict.note = "unsat: contradictory string equalities";
        return verdict;
    }

    State root;
    root.dom.resize(L.vars.size());
    root.forbidden.resize(L.vars.size());
    for (size_t v = 0; v < L.vars.size(); ++v) root.dom[v] = L.vars[v].dom;
    root.active = L.tops;

    // Phase 1: propagation with declared/unbounded domains; an UNSAT here is
    // independent of any default box.
    if (!propagate(root, L)) {
        verdict.note = "unsat by interval propagation";
        return verdict;
    }
    if (difference_cycle(L)) {
        verdict.note = "unsat by difference-constraint closure";
        return verdict;
    }

    // Phase 2: clamp unbounded numerics to the default box.
    bool any_default = false;
    for (size_t v = 0; v < L.vars.size(); ++v) {
        Ivl& d = root.dom[v];
        if (!std::isfinite(d.lo)) {
            d.lo = kDefaultNumericLo;
            d.lo_strict = false;
            any_default = any_default || L.vars[v].defaulted;
        }
        if (!std::isfinite(d.hi)) {
            d.hi = kDefaultNumericHi;
            d.hi_strict = false;
            any_default = any_default || L.vars[v].defaulted;
        }
    }
    if (!propagate(root, L)) {
        verdict.bounded = any_default;
        verdict.note = "unsat by interval propagation over default domains";
        return verdict;
    }

    SearchCtx sctx;
    sctx.L = &L;
    sctx.decls = &decls;
    sctx.constraints = &constraints;
    sctx.budget = opt.probe_budget;

    if (probe(sctx, root)) {
        verdict.sat = true;
        verdict.assignment = *sctx.found;
        // Soundness is asserted on every solve.
        if (!check_sat(verdict.assignment, constraints))
            throw Error("internal error: SAT verdict failed check_sat");
        for (const auto& cl : conflicts)
            if (clause_excluded(cl, verdict.assignment))
                throw Error("internal error: SAT verdict matches a conflict clause");
        return verdict;
    }

    if (!sctx.budget_hit && !sctx.incomplete_leaf && !sctx.mat_gave_up) {
        // Every branch was closed by propagation or complete candidate
        // coverage: a genuine refutation.
        verdict.bounded = any_default;
        verdict.note = "unsat by case analysis";
        return verdict;
    }

    return enumerate_all(sctx, root, any_default, opt.enum_limit);
}

SymVerdict brute_force(const std::vector<ConstraintPtr>& constraints,
                       const std::vector<VarDecl>& decls, const BruteBounds& bounds) {
    {
        ConstraintFile cf;
        cf.decls = decls;
        cf.symbolic = constraints;
        validate(cf);
    }
    struct Dim {
        const VarDecl* decl;
        std::vector<TypedValue> values;
    };
    std::vector<Dim> dims;
    double tuples = 1.0;
    for (const auto& d : decls) {
        Dim dim;
        dim.decl = &d;
        if (d.kind == Kind::Real)
            throw SolveError("brute_force: real variables are not enumerable");
        if (d.kind == Kind::Int) {
            long long lo = bounds.lo, hi = bounds.hi;
            if (d.has_domain) {
                lo = std::max(lo, (long long)std::ceil(d.lo));
                hi = std::min(hi, (long long)std::floor(d.hi));
            }
            if (lo > hi) throw SolveError("brute_force: empty integer range for '" + d.name + "'");
            for (long long v = lo; v <= hi; ++v) dim.values.push_back(TypedValue::of_int(v));
        } else {
            long long maxlen = bounds.str_maxlen;
            if (d.has_maxlen) maxlen = std::min(maxlen, d.maxlen);
            if (bounds.alphabet.empty()) throw SolveError("brute_force: empty alphabet");
            std::vector<std::string> cur{""};
            dim.values.push_back(TypedValue::of_str(""));
            for (long long l = 1; l <= maxlen; ++l) {
                std::vector<std::string> next;
                for (const auto& p : cur)
                    for (char ch : bounds.alphabet) {
                        next.push_back(p + ch);
                        dim.values.push_back(TypedValue::of_str(p + ch));
                        if (dim.values.size() > 20000000)
                            throw SolveError("brute_force: domain too large");
                    }
                cur = std::move(next);
            }
        }
        tuples *= double(dim.values.size());
        if (tuples > 1e7) throw SolveError("brute_force: domain too large (> 1e7 tuples)");
        dims.push_back(std::move(dim));
    }

    std::vector<size_t> idx(dims.size(), 0);
    SymVerdict v;
    for (;;) {
        Assignment a;
        for (size_t i = 0; i < dims.size(); ++i) a[dims[i].decl->name] = dims[i].values[idx[i]];
        if (check_sat(a, constraints)) {
            v.sat = true;
            v.assignment = std::move(a);
            return v;
        }
        size_t k = 0;
        while (k < dims.size()) {
            if (++idx[k] < dims[k].values.size()) break;
            idx[k] = 0;
            ++k;
        }
        if (k == dims.size() || dims.empty()) break;
    }
    v.sat = false;
    v.note = "unsat by exhaustive enumeration";
    return v;
}

} // namespace nsx
