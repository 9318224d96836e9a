#pragma once

#include <optional>
#include <vector>

#include "nsx/ast.hpp"
#include "nsx/value.hpp"

namespace nsx {

// Numeric result of big-step expression evaluation. Integer-valued
// subexpressions stay exact; division always produces a real.
struct NumValue {
    bool is_int = true;
    long long i = 0;
    double d = 0.0;

    double as_double() const { return is_int ? double(i) : d; }
    static NumValue of_int(long long v) { return {true, v, 0.0}; }
    static NumValue of_real(double v) { return {false, 0, v}; }
};

// Evaluates a numeric expression. Returns nullopt on evaluation failure
// (division by zero, non-finite result). Throws EvalError for structural
// problems: unbound variable, string where a number is required.
std::optional<NumValue> eval_num(const Expr& e, const Assignment& a);

// Evaluates a string expression. Throws EvalError on structural problems.
std::string eval_str(const Expr& e, const Assignment& a);

// Big-step truth of a constraint under an assignment. An atom whose operand
// fails to evaluate (division by zero) is false; the failure does not
// propagate past the atom.
bool eval_constraint(const Constraint& c, const Assignment& a);

// True iff every constraint in the list evaluates to true. Throws EvalError
// if the assignment leaves a free variable unbound.
bool check_sat(const Assignment& a, const std::vector<ConstraintPtr>& constraints);

bool cmp_holds(CmpOp op, const NumValue& l, const NumValue& r);

} // namespace nsx
