#pragma once

#include <string>
#include <vector>

#include "nsx/ast.hpp"

namespace nsx {

// Parses a constraint file. Grammar (line comments start with '#'):
//
//   file  := (decl | assert | neural)*
//   decl  := ("int" | "real") NAME ["in" NUM ".." NUM] ";"
//          | "str" NAME ["maxlen" NUM] ";"
//   assert:= "assert" constraint ";"
//   neural:= "neural" STRING "(" names ")" "->" "(" names ")" ";"
//
//   constraint := conj ("||" conj)*
//   conj       := prim ("&&" prim)*
//   prim       := "contains" "(" expr "," expr ")"
//              | expr CMP expr
//              | "(" constraint ")"
//   expr       := term (("+"|"-") term)*
//   term       := factor (("*"|"/") factor)*
//   factor     := NUM | STRING | NAME | "-" factor | "(" expr ")"
//              | "strlen" "(" expr ")" | "strstr" "(" expr "," expr ")"
//              | "concat" "(" expr "," expr ")"
//
// The result is validated (types, declarations). Throws ParseError with a
// 1-based line/column on any syntax or type problem.
ConstraintFile parse(const std::string& text);

// Parses a single constraint (no trailing ';') against existing declarations.
ConstraintPtr parse_constraint_text(const std::string& text, const std::vector<VarDecl>& decls);

// Canonical printing; parse(print(cf)) is structurally equal to cf.
std::string print(const ConstraintFile& cf);
std::string print(const Constraint& c);
std::string print(const Expr& e);
std::string print_number(double v);

} // namespace nsx
