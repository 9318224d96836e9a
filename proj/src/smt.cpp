#include "nsx/smt.hpp"

#include <algorithm>
#include <charconv>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <sstream>
#include <unistd.h>

#include "nsx/error.hpp"
#include "nsx/parser.hpp"

namespace nsx {

namespace {

enum class Sort { Int, Real };

struct Emitter {
    const std::vector<VarDecl>& decls;
    std::map<std::string, std::string> len_of; // string var -> length symbol
    std::map<std::string, Sort> sorts;         // symbol -> sort

    const VarDecl* decl(const std::string& name) const {
        for (const auto& d : decls)
            if (d.name == name) return &d;
        return nullptr;
    }

    static std::string num_literal(double v, Sort s) {
        if (s == Sort::Int) {
            const long long i = (long long)std::llround(v);
            if (i < 0) return "(- " + std::to_string(-i) + ")";
            return std::to_string(i);
        }
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.17g", std::fabs(v));
        std::string body(buf);
        // SMT-LIB reals want a decimal point
        if (body.find('.') == std::string::npos && body.find('e') == std::string::npos)
            body += ".0";
        if (body.find('e') != std::string::npos) {
            // expand scientific notation via a quotient of decimals
            std::snprintf(buf, sizeof buf, "%.17f", std::fabs(v));
            body = buf;
        }
        return v < 0 ? "(- " + body + ")" : body;
    }

    std::string coerce(std::pair<Sort, std::string> term, Sort want) const {
        if (term.first == want) return term.second;
        if (term.first == Sort::Int && want == Sort::Real) return "(to_real " + term.second + ")";
        throw SolveError("export_smt: cannot narrow a real term to an integer");
    }

    std::pair<Sort, std::string> strlen_term(const Expr& e) {
        switch (e.node) {
        case Expr::Node::ConstStr:
            return {Sort::Int, std::to_string(e.str.size())};
        case Expr::Node::VarRef: {
            auto it = len_of.find(e.name);
            if (it == len_of.end()) throw SolveError("export_smt: unknown string variable");
            return {Sort::Int, it->second};
        }
        case Expr::Node::Concat: {
            auto a = strlen_term(*e.a);
            auto b = strlen_term(*e.b);
            return {Sort::Int, "(+ " + a.second + " " + b.second + ")"};
        }
        default:
            throw SolveError("export_smt: strlen of a non-string expression");
        }
    }

    std::pair<Sort, std::string> expr_term(const Expr& e) {
        switch (e.node) {
        case Expr::Node::ConstNum: {
            const bool integral = e.num == std::floor(e.num) && std::fabs(e.num) <= 9.0e15;
            const Sort s = integral ? Sort::Int : Sort::Real;
            return {s, num_literal(e.num, s)};
        }
        case Expr::Node::VarRef: {
            const VarDecl* d = decl(e.name);
            if (!d || d->kind == Kind::Str)
                throw SolveError("export_smt: string variable in numeric position");
            return {d->kind == Kind::Int ? Sort::Int : Sort::Real, e.name};
        }
        case Expr::Node::StrLen:
            return strlen_term(*e.a);
        case Expr::Node::Arith: {
            auto a = expr_term(*e.a);
            auto b = expr_term(*e.b);
            if (e.op == ArithOp::Div) {
                // division is real division
                return {Sort::Real, "(/ " + coerce(a, Sort::Real) + " " + coerce(b, Sort::Real) +
                                        ")"};
            }
            const Sort s =
                (a.first == Sort::Real || b.first == Sort::Real) ? Sort::Real : Sort::Int;
            const char* op = e.op == ArithOp::Add ? "+" : e.op == ArithOp::Sub ? "-" : "*";
            return {s, std::string("(") + op + " " + coerce(a, s) + " " + coerce(b, s) + ")"};
        }
        case Expr::Node::StrStr:
            throw SolveError("export_smt: strstr is unsupported for the selected logic");
        default:
            throw SolveError("export_smt: unsupported construct for the selected logic");
        }
    }

    std::string constraint_term(const Constraint& c) {
        switch (c.node) {
        case Constraint::Node::And:
            return "(and " + constraint_term(*c.a) + " " + constraint_term(*c.b) + ")";
        case Constraint::Node::Or:
            return "(or " + constraint_term(*c.a) + " " + constraint_term(*c.b) + ")";
        case Constraint::Node::Contains:
            throw SolveError("export_smt: contains is unsupported for the selected logic");
        case Constraint::Node::Atom: {
            const bool string_atom = is_string(*c.lhs) || is_string(*c.rhs);
            if (string_atom) {
                // lowered to length equality; content is resolved on import
                if (c.cmp != CmpOp::Eq)
                    throw SolveError("export_smt: only string equality can be lowered to lengths");
                auto a = strlen_term(*c.lhs);
                auto b = strlen_term(*c.rhs);
                return "(= " + a.second + " " + b.second + ")";
            }
            auto a = expr_term(*c.lhs);
            auto b = expr_term(*c.rhs);
            const Sort s =
                (a.first == Sort::Real || b.first == Sort::Real) ? Sort::Real : Sort::Int;
            const std::string l = coerce(a, s), r = coerce(b, s);
            switch (c.cmp) {
            case CmpOp::Eq: return "(= " + l + " " + r + ")";
            case CmpOp::Ne: return "(not (= " + l + " " + r + "))";
            case CmpOp::Gt: return "(> " + l + " " + r + ")";
            case CmpOp::Ge: return "(>= " + l + " " + r + ")";
            case CmpOp::Lt: return "(< " + l + " " + r + ")";
            case CmpOp::Le: return "(<= " + l + " " + r + ")";
            }
            break;
        }
        }
        throw SolveError("export_smt: bad constraint node");
    }

    bool is_string(const Expr& e) const {
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
};

} // namespace

std::string export_smt(const std::vector<ConstraintPtr>& constraints,
                       const std::vector<VarDecl>& decls,
                       const std::vector<ConflictClause>& conflicts,
                       std::map<std::string, std::string>* len_names) {
    Emitter em{decls, {}, {}};
    std::string out = "(set-logic ALL)\n";

    // Declarations; string variables become fresh integer length symbols.
    auto taken = [&](const std::string& n) {
        for (const auto& d : decls)
            if (d.name == n) return true;
        for (const auto& [k, v] : em.len_of)
            if (v == n) return true;
        return false;
    };
    for (const auto& d : decls) {
        if (d.kind == Kind::Str) {
            std::string ln = "len_" + d.name;
            while (taken(ln)) ln += "_";
            em.len_of[d.name] = ln;
            out += "(declare-const " + ln + " Int)\n";
            out += "(assert (>= " + ln + " 0))\n";
            if (d.has_maxlen)
                out += "(assert (<= " + ln + " " + std::to_string(d.maxlen) + "))\n";
        } else {
            const bool is_int = d.kind == Kind::Int;
            out += "(declare-const " + d.name + (is_int ? " Int)\n" : " Real)\n");
            if (d.has_domain) {
                const Sort s = is_int ? Sort::Int : Sort::Real;
                out += "(assert (>= " + d.name + " " + Emitter::num_literal(d.lo, s) + "))\n";
                out += "(assert (<= " + d.name + " " + Emitter::num_literal(d.hi, s) + "))\n";
            }
        }
    }
    for (const auto& c : constraints) out += "(assert " + em.constraint_term(*c) + ")\n";

    for (const auto& cl : conflicts) {
        cl.validate();
        std::string clause;
        for (const auto& [name, val] : cl.disjuncts) {
            std::string term;
            const VarDecl* d = em.decl(name);
            if (!d) throw Error("export_smt: conflict clause references undeclared variable");
            if (d->kind == Kind::Str) {
                term = "(not (= " + em.len_of.at(name) + " " + std::to_string(val.s.size()) + "))";
            } else {
                const Sort s = d->kind == Kind::Int ? Sort::Int : Sort::Real;
                term = "(not (= " + name + " " + Emitter::num_literal(val.num(), s) + "))";
            }
            clause = clause.empty() ? term : clause + " " + term;
        }
        out += cl.disjuncts.size() == 1 ? "(assert " + clause + ")\n"
                                        : "(assert (or " + clause + "))\n";
    }

    out += "(check-sat)\n(get-model)\n";
    if (len_names) *len_names = em.len_of;
    return out;
}

// ---------------------------------------------------------------------------
// Result parsing: a tiny s-expression reader over the solver's stdout.

namespace {

struct Sexp {
    bool atom = true;
    std::string text;
    std::vector<Sexp> kids;
};

struct SexpParser {
    const std::string& s;
    size_t pos = 0;

    void skip() {
        while (pos < s.size()) {
            if (std::isspace((unsigned char)s[pos])) {
                ++pos;
            } else if (s[pos] == ';') {
                while (pos < s.size() && s[pos] != '\n') ++pos;
            } else {
                break;
            }
        }
    }
    bool done() {
        skip();
        return pos >= s.size();
    }
    Sexp next() {
        skip();
        Sexp e;
        if (pos >= s.size()) return e;
        if (s[pos] == '(') {
            ++pos;
            e.atom = false;
            for (;;) {
                skip();
                if (pos >= s.size()) break;
                if (s[pos] == ')') {
                    ++pos;
                    break;
                }
                e.kids.push_back(next());
            }
            return e;
        }
        const size_t start = pos;
        while (pos < s.size() && !std::isspace((unsigned char)s[pos]) && s[pos] != '(' &&
               s[pos] != ')')
            ++pos;
        e.text = s.substr(start, pos - start);
        return e;
    }
};

double value_of(const Sexp& e) {
    if (e.atom) {
        double v = 0.0;
        auto [p, ec] = std::from_chars(e.text.data(), e.text.data() + e.text.size(), v);
        if (ec != std::errc() || p != e.text.data() + e.text.size())
            throw FileFormatError("smt model: bad numeric literal '" + e.text + "'");
        return v;
    }
    if (!e.kids.empty() && e.kids[0].atom) {
        if (e.kids[0].text == "-" && e.kids.size() == 2) return -value_of(e.kids[1]);
        if (e.kids[0].text == "/" && e.kids.size() == 3)
            return value_of(e.kids[1]) / value_of(e.kids[2]);
    }
    throw FileFormatError("smt model: unsupported value form");
}

} // namespace

SmtResult parse_smt_output(const std::string& text) {
    SmtResult res;
    SexpParser p{text};
    bool saw_status = false;
    while (!p.done()) {
        Sexp e = p.next();
        if (e.atom) {
            if (e.text == "sat") {
                res.status = SmtResult::Status::Sat;
                saw_status = true;
            } else if (e.text == "unsat") {
                res.status = SmtResult::Status::Unsat;
                saw_status = true;
            } else if (e.text == "unknown") {
                res.status = SmtResult::Status::Unknown;
                saw_status = true;
            }
            continue;
        }
        // (model (define-fun x () Int 5) ...) or ((x 5) ...)
        for (const Sexp& kid : e.kids) {
            if (kid.atom) continue;
            if (kid.kids.size() >= 5 && kid.kids[0].atom && kid.kids[0].text == "define-fun")
                res.model[kid.kids[1].text] = value_of(kid.kids[4]);
            else if (kid.kids.size() == 2 && kid.kids[0].atom)
                res.model[kid.kids[0].text] = value_of(kid.kids[1]);
        }
        if (e.kids.size() >= 5 && e.kids[0].atom && e.kids[0].text == "define-fun")
            res.model[e.kids[1].text] = value_of(e.kids[4]);
    }
    if (!saw_status) throw FileFormatError("smt output: no sat/unsat status found");
    return res;
}

namespace {
std::mutex bridge_mutex;
int bridge_counter = 0;
} // namespace

SymVerdict solve_external(const std::vector<ConstraintPtr>& constraints,
                          const std::vector<ConflictClause>& conflicts,
                          const std::vector<VarDecl>& decls, const std::string& solver_cmd) {
    std::map<std::string, std::string> len_names;
    const std::string script = export_smt(constraints, decls, conflicts, &len_names);

    std::lock_guard<std::mutex> lock(bridge_mutex);
    const std::string path =
        "/tmp/nsx_smt_" + std::to_string(getpid()) + "_" + std::to_string(bridge_counter++) +
        ".smt2";
    {
        std::ofstream out(path);
        if (!out) throw Error("smt bridge: cannot write " + path);
        out << script;
    }
    const std::string cmd = solver_cmd + " " + path + " 2>/dev/null";
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) {
        std::remove(path.c_str());
        throw Error("smt bridge: cannot spawn '" + solver_cmd + "'");
    }
    std::string output;
    char buf[4096];
    size_t got;
    while ((got = fread(buf, 1, sizeof buf, pipe)) > 0) output.append(buf, got);
    pclose(pipe);
    std::remove(path.c_str());

    const SmtResult res = parse_smt_output(output);
    SymVerdict v;
    if (res.status == SmtResult::Status::Unsat) {
        v.sat = false;
        v.note = "unsat (external solver)";
        return v;
    }
    if (res.status == SmtResult::Status::Unknown)
        throw SolveError("external solver returned unknown");

    for (const auto& d : decls) {
        if (d.kind == Kind::Str) {
            const auto it = res.model.find(len_names.at(d.name));
            const long long len =
                it != res.model.end() ? (long long)std::llround(it->second) : 0;
            v.assignment[d.name] = TypedValue::of_str(std::string(size_t(std::max(0LL, len)), 'a'));
        } else {
            const auto it = res.model.find(d.name);
            double val = it != res.model.end() ? it->second : 0.0;
            if (it == res.model.end() && d.has_domain) val = std::clamp(0.0, d.lo, d.hi);
            v.assignment[d.name] = d.kind == Kind::Int
                                       ? TypedValue::of_int((long long)std::llround(val))
                                       : TypedValue::of_real(val);
        }
    }
    if (!check_sat(v.assignment, constraints))
        throw SolveError("external solver model failed verification (content-level constraints "
                         "beyond the exported length fragment?)");
    for (const auto& cl : conflicts) {
        bool excluded = true;
        for (const auto& [name, excl] : cl.disjuncts) {
            auto it = v.assignment.find(name);
            if (it == v.assignment.end() || it->second != excl) {
                excluded = false;
                break;
            }
        }
        if (excluded) throw SolveError("external solver model violates a conflict clause");
    }
    v.sat = true;
    v.note = "sat (external solver)";
    return v;
}

} // namespace nsx
