#include "nsx/loss.hpp"

#include <cmath>
#include <limits>
#include <unordered_map>

#include "nsx/error.hpp"
#include "nsx/eval.hpp"

namespace nsx {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double sign0(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

struct Ctx {
    const std::vector<double>* x;
    const std::unordered_map<std::string, size_t>* index;
    double alpha;
    double beta;
};

// Forward-mode expression evaluation; NaN marks an evaluation failure.
double expr_val(const Expr& e, const Ctx& c) {
    switch (e.node) {
    case Expr::Node::ConstNum:
        return e.num;
    case Expr::Node::VarRef:
        return (*c.x)[c.index->at(e.name)];
    case Expr::Node::Arith: {
        const double a = expr_val(*e.a, c);
        const double b = expr_val(*e.b, c);
        switch (e.op) {
        case ArithOp::Add: return a + b;
        case ArithOp::Sub: return a - b;
        case ArithOp::Mul: return a * b;
        case ArithOp::Div: return b == 0.0 ? std::nan("") : a / b;
        }
        return std::nan("");
    }
    default:
        // encode() rejects string expressions up front.
        return std::nan("");
    }
}

double expr_val_grad(const Expr& e, const Ctx& c, std::vector<double>& d) {
    switch (e.node) {
    case Expr::Node::ConstNum:
        std::fill(d.begin(), d.end(), 0.0);
        return e.num;
    case Expr::Node::VarRef: {
        std::fill(d.begin(), d.end(), 0.0);
        const size_t i = c.index->at(e.name);
        d[i] = 1.0;
        return (*c.x)[i];
    }
    case Expr::Node::Arith: {
        std::vector<double> db(d.size());
        const double a = expr_val_grad(*e.a, c, d);
        const double b = expr_val_grad(*e.b, c, db);
        switch (e.op) {
        case ArithOp::Add:
            for (size_t i = 0; i < d.size(); ++i) d[i] += db[i];
            return a + b;
        case ArithOp::Sub:
            for (size_t i = 0; i < d.size(); ++i) d[i] -= db[i];
            return a - b;
        case ArithOp::Mul:
            for (size_t i = 0; i < d.size(); ++i) d[i] = d[i] * b + a * db[i];
            return a * b;
        case ArithOp::Div:
            if (b == 0.0) return std::nan("");
            for (size_t i = 0; i < d.size(); ++i) d[i] = (d[i] * b - a * db[i]) / (b * b);
            return a / b;
        }
        return std::nan("");
    }
    default:
        return std::nan("");
    }
}

double atom_loss(CmpOp cmp, double a, double b, const Ctx& c) {
    if (!std::isfinite(a) || !std::isfinite(b)) return kInf;
    switch (cmp) {
    case CmpOp::Lt: return std::max(a - b + c.alpha, 0.0);
    case CmpOp::Gt: return std::max(b - a + c.alpha, 0.0);
    case CmpOp::Le: return std::max(a - b, 0.0);
    case CmpOp::Ge: return std::max(b - a, 0.0);
    case CmpOp::Eq: return std::fabs(a - b);
    case CmpOp::Ne: return std::max(-1.0, -std::fabs(a - b + c.beta));
    }
    return kInf;
}

double loss_val(const Constraint& cn, const Ctx& c) {
    switch (cn.node) {
    case Constraint::Node::Atom:
        return atom_loss(cn.cmp, expr_val(*cn.lhs, c), expr_val(*cn.rhs, c), c);
    case Constraint::Node::And:
        return loss_val(*cn.a, c) + loss_val(*cn.b, c);
    case Constraint::Node::Or:
        return std::min(loss_val(*cn.a, c), loss_val(*cn.b, c));
    case Constraint::Node::Contains:
        return kInf; // rejected by encode()
    }
    return kInf;
}

double loss_grad(const Constraint& cn, const Ctx& c, std::vector<double>& g) {
    switch (cn.node) {
    case Constraint::Node::Atom: {
        std::vector<double> da(g.size()), db(g.size());
        const double a = expr_val_grad(*cn.lhs, c, da);
        const double b = expr_val_grad(*cn.rhs, c, db);
        std::fill(g.begin(), g.end(), 0.0);
        if (!std::isfinite(a) || !std::isfinite(b)) return kInf;
        switch (cn.cmp) {
        case CmpOp::Lt:
        case CmpOp::Le: {
            const double u = cn.cmp == CmpOp::Lt ? a - b + c.alpha : a - b;
            if (u > 0.0)
                for (size_t i = 0; i < g.size(); ++i) g[i] = da[i] - db[i];
            return std::max(u, 0.0);
        }
        case CmpOp::Gt:
        case CmpOp::Ge: {
            const double u = cn.cmp == CmpOp::Gt ? b - a + c.alpha : b - a;
            if (u > 0.0)
                for (size_t i = 0; i < g.size(); ++i) g[i] = db[i] - da[i];
            return std::max(u, 0.0);
        }
        case CmpOp::Eq: {
            const double t = a - b;
            const double s = sign0(t);
            for (size_t i = 0; i < g.size(); ++i) g[i] = s * (da[i] - db[i]);
            return std::fabs(t);
        }
        case CmpOp::Ne: {
            const double t = a - b + c.beta;
            const double inner = -std::fabs(t);
            if (inner > -1.0) {
                const double s = -sign0(t);
                for (size_t i = 0; i < g.size(); ++i) g[i] = s * (da[i] - db[i]);
            }
            return std::max(-1.0, inner);
        }
        }
        return kInf;
    }
    case Constraint::Node::And: {
        std::vector<double> gb(g.size());
        const double va = loss_grad(*cn.a, c, g);
        const double vb = loss_grad(*cn.b, c, gb);
        for (size_t i = 0; i < g.size(); ++i) g[i] += gb[i];
        return va + vb;
    }
    case Constraint::Node::Or: {
        // Gradient flows only through the current minimum child; ties pick
        // the lowest-index child.
        std::vector<double> gb(g.size());
        const double va = loss_grad(*cn.a, c, g);
        const double vb = loss_grad(*cn.b, c, gb);
        if (vb < va) {
            g = gb;
            return vb;
        }
        return va;
    }
    case Constraint::Node::Contains:
        return kInf;
    }
    return kInf;
}

double kink_dist(const Constraint& cn, const Ctx& c) {
    switch (cn.node) {
    case Constraint::Node::Atom: {
        const double a = expr_val(*cn.lhs, c);
        const double b = expr_val(*cn.rhs, c);
        if (!std::isfinite(a) || !std::isfinite(b)) return 0.0;
        switch (cn.cmp) {
        case CmpOp::Lt: return std::fabs(a - b + c.alpha);
        case CmpOp::Gt: return std::fabs(b - a + c.alpha);
        case CmpOp::Le: return std::fabs(a - b);
        case CmpOp::Ge: return std::fabs(b - a);
        case CmpOp::Eq: return std::fabs(a - b);
        case CmpOp::Ne: {
            const double t = a - b + c.beta;
            // abs kink at t == 0 and the clip kink at |t| == 1.
            return std::min(std::fabs(t), std::fabs(1.0 - std::fabs(t)));
        }
        }
        return 0.0;
    }
    case Constraint::Node::And:
        return std::min(kink_dist(*cn.a, c), kink_dist(*cn.b, c));
    case Constraint::Node::Or: {
        const double va = loss_val(*cn.a, c);
        const double vb = loss_val(*cn.b, c);
        double d = std::min(kink_dist(*cn.a, c), kink_dist(*cn.b, c));
        if (std::isfinite(va) && std::isfinite(vb)) d = std::min(d, std::fabs(va - vb));
        return d;
    }
    case Constraint::Node::Contains:
        return 0.0;
    }
    return 0.0;
}

void reject_strings(const Constraint& cn, const std::vector<VarDecl>& decls) {
    switch (cn.node) {
    case Constraint::Node::Atom:
        if (type_check(*cn.lhs, decls) == ExprType::Str ||
            type_check(*cn.rhs, decls) == ExprType::Str)
            throw SolveError("string atom reached the loss encoder; lower strings to lengths first");
        return;
    case Constraint::Node::Contains:
        throw SolveError("contains cannot be encoded as a loss; it is solved symbolically");
    case Constraint::Node::And:
    case Constraint::Node::Or:
        reject_strings(*cn.a, decls);
        reject_strings(*cn.b, decls);
        return;
    }
}

} // namespace

double LossFunction::eval(const std::vector<double>& x) const {
    if (x.size() != vars_.size()) throw Error("loss eval: dimension mismatch");
    Ctx c{&x, &index_, cfg_.alpha, cfg_.beta};
    return loss_val(*root_, c);
}

void LossFunction::grad(const std::vector<double>& x, std::vector<double>& g) const {
    if (x.size() != vars_.size()) throw Error("loss grad: dimension mismatch");
    g.assign(vars_.size(), 0.0);
    Ctx c{&x, &index_, cfg_.alpha, cfg_.beta};
    loss_grad(*root_, c, g);
}

double LossFunction::kink_distance(const std::vector<double>& x) const {
    Ctx c{&x, &index_, cfg_.alpha, cfg_.beta};
    if (!std::isfinite(loss_val(*root_, c))) return 0.0;
    return kink_dist(*root_, c);
}

LossFunction encode(const ConstraintPtr& c, const std::vector<VarDecl>& decls,
                    const EncodeConfig& cfg) {
    if (!(cfg.alpha > 0.0)) throw Error("encode: alpha must be positive");
    if (!(std::fabs(cfg.beta) < 1.0)) throw Error("encode: |beta| must be < 1");
    reject_strings(*c, decls);

    LossFunction lf;
    lf.root_ = c;
    lf.cfg_ = cfg;
    const auto fv = free_vars(*c);
    for (const auto& d : decls)
        if (fv.count(d.name)) lf.vars_.push_back(d.name);
    if (lf.vars_.size() != fv.size())
        throw SolveError("encode: constraint references undeclared variables");
    for (size_t i = 0; i < lf.vars_.size(); ++i) lf.index_.emplace(lf.vars_[i], i);
    return lf;
}

GridCheck minimum_implies_sat_check(const ConstraintPtr& c, const LossFunction& lf,
                                    const std::vector<std::pair<long long, long long>>& bounds) {
    const auto& vars = lf.vars();
    if (bounds.size() != vars.size())
        throw Error("minimum_implies_sat_check: bounds/vars mismatch");

    double cells = 1.0;
    for (const auto& [lo, hi] : bounds) {
        if (lo > hi) throw Error("minimum_implies_sat_check: empty range");
        cells *= double(hi - lo + 1);
    }
    if (cells > 1e7) throw SolveError("minimum_implies_sat_check: grid too large");

    std::vector<long long> point(vars.size());
    std::vector<double> x(vars.size());

    auto for_each_point = [&](auto&& fn) {
        for (size_t i = 0; i < vars.size(); ++i) point[i] = bounds[i].first;
        for (;;) {
            for (size_t i = 0; i < vars.size(); ++i) x[i] = double(point[i]);
            if (!fn()) return;
            size_t k = 0;
            while (k < vars.size()) {
                if (point[k] < bounds[k].second) {
                    ++point[k];
                    break;
                }
                point[k] = bounds[k].first;
                ++k;
            }
            if (k == vars.size()) return;
        }
    };

    GridCheck res;
    res.min_loss = kInf;

    // Pass 1: global minimum and satisfiability.
    for_each_point([&] {
        const double v = lf.eval(x);
        if (v < res.min_loss) res.min_loss = v;
        Assignment a;
        for (size_t i = 0; i < vars.size(); ++i) a[vars[i]] = TypedValue::of_int(point[i]);
        if (eval_constraint(*c, a)) ++res.sat_count;
        return true;
    });
    res.satisfiable = res.sat_count > 0;

    // Pass 2: every minimizer must satisfy c (only meaningful when c is
    // satisfiable on the grid; minimizers are still counted for diagnostics).
    res.passed = true;
    for_each_point([&] {
        if (lf.eval(x) != res.min_loss) return true;
        ++res.minimizer_count;
        if (!res.satisfiable) return true;
        Assignment a;
        for (size_t i = 0; i < vars.size(); ++i) a[vars[i]] = TypedValue::of_int(point[i]);
        if (!eval_constraint(*c, a)) {
            res.passed = false;
            res.counterexample = point;
            return false;
        }
        return true;
    });
    return res;
}

} // namespace nsx
