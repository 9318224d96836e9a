#pragma once

#include <map>
#include <string>
#include <vector>

#include "nsx/ast.hpp"
#include "nsx/symsolv.hpp"

namespace nsx {

// SMT-LIB v2 text for the constraint set: integer/real arithmetic, with
// string atoms lowered to fresh length variables (len_<name>, strlen
// eliminated). contains/strstr and content equality are not exportable.
// `len_names` (optional out) maps each string variable to its length symbol.
std::string export_smt(const std::vector<ConstraintPtr>& constraints,
                       const std::vector<VarDecl>& decls,
                       const std::vector<ConflictClause>& conflicts = {},
                       std::map<std::string, std::string>* len_names = nullptr);

// Parsed response of an external solver: "sat" plus a model, or "unsat".
struct SmtResult {
    enum class Status { Sat, Unsat, Unknown };
    Status status = Status::Unknown;
    std::map<std::string, double> model;
};

SmtResult parse_smt_output(const std::string& text);

// Runs `solver_cmd <script>` as a child process, parses its output and
// reconstructs a verdict (strings materialized from solved lengths, then the
// whole assignment re-checked). Access to the child process is serialized.
SymVerdict solve_external(const std::vector<ConstraintPtr>& constraints,
                          const std::vector<ConflictClause>& conflicts,
                          const std::vector<VarDecl>& decls, const std::string& solver_cmd);

} // namespace nsx
