#pragma once

#include <memory>
#include <set>
#include <string>
#include <vector>

#include "nsx/value.hpp"

namespace nsx {

// ---------------------------------------------------------------------------
// Declarations

struct VarDecl {
    std::string name;
    Kind kind = Kind::Int;
    // Closed numeric domain; meaningful only when has_domain is set.
    bool has_domain = false;
    double lo = 0.0;
    double hi = 0.0;
    // Maximum length for Str variables; meaningful only when has_maxlen.
    bool has_maxlen = false;
    long long maxlen = 0;
};

// Solver-wide defaults for variables declared without a domain.
inline constexpr double kDefaultNumericLo = -1e6;
inline constexpr double kDefaultNumericHi = 1e6;
inline constexpr long long kDefaultStrMaxlen = 4096;

// ---------------------------------------------------------------------------
// Expressions

enum class ArithOp { Add, Sub, Mul, Div };
enum class CmpOp { Eq, Ne, Gt, Ge, Lt, Le };

const char* arith_op_name(ArithOp op);
const char* cmp_op_name(CmpOp op);
CmpOp dual_cmp(CmpOp op); // Eq<->Ne, Lt<->Ge, Gt<->Le

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
    enum class Node { ConstNum, ConstStr, VarRef, Arith, StrLen, StrStr, Concat };

    Node node = Node::ConstNum;
    double num = 0.0;     // ConstNum
    std::string str;      // ConstStr
    std::string name;     // VarRef
    ArithOp op = ArithOp::Add;
    ExprPtr a, b;         // children: Arith/StrStr/Concat use both, StrLen uses a

    int line = 0, col = 0;
};

ExprPtr make_num(double v);
ExprPtr make_str(std::string v);
ExprPtr make_var(std::string name);
ExprPtr make_arith(ArithOp op, ExprPtr a, ExprPtr b);
ExprPtr make_strlen(ExprPtr a);
ExprPtr make_strstr(ExprPtr haystack, ExprPtr needle);
ExprPtr make_concat(ExprPtr a, ExprPtr b);

// ---------------------------------------------------------------------------
// Constraints

struct Constraint;
using ConstraintPtr = std::shared_ptr<const Constraint>;

struct Constraint {
    enum class Node { Atom, Contains, And, Or };

    Node node = Node::Atom;
    CmpOp cmp = CmpOp::Eq; // Atom
    ExprPtr lhs, rhs;      // Atom / Contains (haystack, needle)
    ConstraintPtr a, b;    // And / Or

    int line = 0, col = 0;
};

ConstraintPtr make_atom(CmpOp cmp, ExprPtr lhs, ExprPtr rhs);
ConstraintPtr make_contains(ExprPtr haystack, ExprPtr needle);
ConstraintPtr make_and(ConstraintPtr a, ConstraintPtr b);
ConstraintPtr make_or(ConstraintPtr a, ConstraintPtr b);

// Dualize a constraint: NOT c expressed without a negation operator.
// And/Or via De Morgan, atoms via the dual comparison. Throws SolveError for
// `contains`, which has no dual in the grammar.
ConstraintPtr negate(const ConstraintPtr& c);

// ---------------------------------------------------------------------------
// Neural declarations and files

struct NeuralDecl {
    std::string model_path;
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
    int line = 0, col = 0;
};

struct ConstraintFile {
    std::vector<VarDecl> decls;
    std::vector<ConstraintPtr> symbolic; // implicit conjunction
    std::vector<NeuralDecl> neural;

    const VarDecl* find_decl(const std::string& name) const;
};

// ---------------------------------------------------------------------------
// Analysis helpers

void collect_free_vars(const Expr& e, std::set<std::string>& out);
void collect_free_vars(const Constraint& c, std::set<std::string>& out);
std::set<std::string> free_vars(const Constraint& c);
std::set<std::string> free_vars(const ConstraintFile& cf);

// Structural equality (ignores source locations).
bool struct_eq(const Expr& a, const Expr& b);
bool struct_eq(const Constraint& a, const Constraint& b);
bool struct_eq(const ConstraintFile& a, const ConstraintFile& b);

// Expression types for checking: numeric or string.
enum class ExprType { Num, Str };

// Infers the type of an expression and checks child typing rules against the
// declarations. Throws ParseError on violations (undeclared variable, string
// arithmetic, strlen of a number, ...).
ExprType type_check(const Expr& e, const std::vector<VarDecl>& decls);

// Full well-formedness check of a file: unique declaration names, ordered
// domains, all referenced variables declared, atoms type-correct, neural
// inputs/outputs disjoint and declared. Throws ParseError.
void validate(const ConstraintFile& cf);

} // namespace nsx
