#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nsx/ast.hpp"
#include "nsx/eval.hpp"
#include "nsx/value.hpp"

namespace nsx {

// Disjunction of (variable != excluded value): rules out one previously
// rejected assignment, DPLL-style.
struct ConflictClause {
    std::vector<std::pair<std::string, TypedValue>> disjuncts;
    void validate() const; // non-empty, names pairwise distinct
};

struct SymVerdict {
    bool sat = false;
    Assignment assignment; // meaningful when sat
    // UNSAT only: the proof relied on the default domains substituted for
    // variables declared without bounds (UNSAT-within-domain).
    bool bounded = false;
    std::string note;
};

struct SymSolveOptions {
    long long probe_budget = 200000;    // value-probing search nodes
    long long enum_limit = 10000000;    // bounded-enumeration ceiling (tuples)
};

// Decides a conjunction of symbolic constraints against the declarations,
// honoring conflict clauses (a SAT assignment never matches an excluded
// tuple on all of its variables).
//
// Procedure: strings are lowered to length variables (content handled by a
// deterministic materializer: filler characters, leftmost needle placement);
// atoms are normalized to linear forms where possible and decided by
// interval propagation plus DPLL-style case splitting over Or nodes, with
// bounded enumeration over the declared domains as the fallback for
// nonlinear atoms. Variables without declared domains get the defaults
// (numeric [-1e6, 1e6], strings maxlen 4096); an UNSAT that relies on those
// defaults is flagged `bounded`.
//
// Every SAT verdict is re-checked with check_sat before being returned.
// Throws SolveError when the instance is outside the supported fragment
// (e.g. division by a non-constant denominator with a non-enumerable
// domain, or string-content reasoning beyond lengths + placement).
SymVerdict solve(const std::vector<ConstraintPtr>& constraints,
                 const std::vector<ConflictClause>& conflicts,
                 const std::vector<VarDecl>& decls, const SymSolveOptions& opt = {});

// check_sat lives in eval.hpp; symsolv re-exports it as part of its surface.
using nsx::check_sat;

// Finite domains for exhaustive enumeration: integers in [lo, hi] (clipped
// by declared domains), strings up to max_len over the given alphabet.
struct BruteBounds {
    long long lo = -6;
    long long hi = 6;
    int str_maxlen = 2;
    std::string alphabet = "ab";
};

// Exhaustive test oracle: enumerates every tuple and reports SAT iff some
// tuple passes check_sat. Refuses domains above 1e7 tuples and real-typed
// variables (not enumerable). Conflict clauses are not consulted.
SymVerdict brute_force(const std::vector<ConstraintPtr>& constraints,
                       const std::vector<VarDecl>& decls, const BruteBounds& bounds);

} // namespace nsx
