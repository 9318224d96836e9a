#pragma once

#include <memory>
#include <unordered_map>
#include <vector>

#include "nsx/ast.hpp"
#include "nsx/neusolv.hpp"

namespace nsx {

struct EncodeConfig {
    double alpha = 0.5; // margin for strict inequalities; must be > 0
    double beta = 0.5;  // shift for the != encoding; |beta| must be < 1
};

// Differentiable encoding of a symbolic constraint:
//
//   a <  b  ->  max(a - b + alpha, 0)
//   a >  b  ->  max(b - a + alpha, 0)
//   a <= b  ->  max(a - b, 0)
//   a >= b  ->  max(b - a, 0)
//   a == b  ->  abs(a - b)
//   a != b  ->  max(-1, -abs(a - b + beta))
//   c && d  ->  L_c + L_d
//   c || d  ->  min(L_c, L_d)
//
// Subgradients: max(u, c) contributes 0 at u == c; abs uses sign with
// sign(0) = 0; an Or node routes the gradient through its current minimum
// child (ties: lowest index). Division by zero inside an expression makes
// the enclosing atom evaluate to +infinity.
class LossFunction : public Objective {
public:
    const std::vector<std::string>& vars() const override { return vars_; }
    double eval(const std::vector<double>& x) const override;
    void grad(const std::vector<double>& x, std::vector<double>& g) const override;

    // Distance from x to the nearest non-smooth point (max/abs kink or Or
    // switch). 0 when the loss is non-finite at x.
    double kink_distance(const std::vector<double>& x) const;

    double alpha() const { return cfg_.alpha; }
    double beta() const { return cfg_.beta; }
    const ConstraintPtr& constraint() const { return root_; }

private:
    friend LossFunction encode(const ConstraintPtr&, const std::vector<VarDecl>&,
                               const EncodeConfig&);
    ConstraintPtr root_;
    std::vector<std::string> vars_;
    std::unordered_map<std::string, size_t> index_;
    EncodeConfig cfg_;
};

// Builds the loss for a constraint whose atoms are all numeric (string atoms
// must be lowered to length variables upstream; reaching encode with one is
// an error). Variable order follows the declaration order. Throws Error on
// invalid config (alpha <= 0 or |beta| >= 1) and SolveError on string atoms.
LossFunction encode(const ConstraintPtr& c, const std::vector<VarDecl>& decls,
                    const EncodeConfig& cfg = {});

// Exhaustive-grid check that minimizing the loss solves the constraint:
// passes iff every global minimizer of lf over the integer grid satisfies c,
// whenever c is satisfiable on the grid (vacuously true otherwise).
struct GridCheck {
    bool passed = false;
    bool satisfiable = false;     // c holds somewhere on the grid
    double min_loss = 0.0;
    long long minimizer_count = 0;
    long long sat_count = 0;
    std::vector<long long> counterexample; // a minimizer violating c, if any
};

GridCheck minimum_implies_sat_check(const ConstraintPtr& c, const LossFunction& lf,
                                    const std::vector<std::pair<long long, long long>>& bounds);

} // namespace nsx
