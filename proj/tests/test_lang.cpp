#include <doctest.h>

#include "nsx/ast.hpp"
#include "nsx/error.hpp"
#include "nsx/parser.hpp"
#include "oracles.hpp"

using namespace nsx;

namespace {

const char* kFieldLengths = R"(
int uri_length;
int ver_length;
int ptr;
str input_uri;
str input_version;
assert uri_length == strlen(input_uri);
assert ver_length == strlen(input_version);
assert ptr > 99;
)";

} // namespace

TEST_SUITE("lang") {

TEST_CASE("a comparison parses to the expected atom") {
    const ConstraintFile cf = parse("int ptr; assert ptr > 99;");
    REQUIRE(cf.symbolic.size() == 1);
    const Constraint& c = *cf.symbolic[0];
    CHECK(c.node == Constraint::Node::Atom);
    CHECK(c.cmp == CmpOp::Gt);
    CHECK(c.lhs->node == Expr::Node::VarRef);
    CHECK(c.lhs->name == "ptr");
    CHECK(c.rhs->node == Expr::Node::ConstNum);
    CHECK(c.rhs->num == 99.0);
}

TEST_CASE("strlen parses inside an equality") {
    const ConstraintFile cf = parse("str u; int L; assert L == strlen(u);");
    REQUIRE(cf.symbolic.size() == 1);
    const Constraint& c = *cf.symbolic[0];
    CHECK(c.cmp == CmpOp::Eq);
    CHECK(c.lhs->name == "L");
    CHECK(c.rhs->node == Expr::Node::StrLen);
    CHECK(c.rhs->a->name == "u");
}

TEST_CASE("a missing operand is a syntax error with a position") {
    try {
        parse("int a; assert a < ;");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line == 1);
        CHECK(e.col == 19); // the ';' where the operand should be
    }
}

TEST_CASE("type errors are rejected") {
    CHECK_THROWS_AS(parse("int a; assert strlen(a) > 0;"), ParseError);
    CHECK_THROWS_AS(parse("int a; assert b > 0;"), ParseError);         // undeclared
    CHECK_THROWS_AS(parse("str s; assert s > 3;"), ParseError);         // string vs num
    CHECK_THROWS_AS(parse("str s; str t; assert s < t;"), ParseError);  // ordered strings
    CHECK_THROWS_AS(parse("int a; int a; assert a > 0;"), ParseError);  // duplicate
    CHECK_THROWS_AS(parse("int a in 5..1; assert a > 0;"), ParseError); // empty domain
    CHECK_THROWS_AS(parse("str s; assert contains(s, 3);"), ParseError);
    CHECK_THROWS_AS(parse("str s; int a; neural \"m\" (s) -> (a);"), ParseError);
    CHECK_THROWS_AS(parse("int a; neural \"m\" (a) -> (a);"), ParseError); // in/out overlap
    // well-typed forms of each production are accepted
    CHECK_NOTHROW(parse("str s; str t; int a; real r in -1.5..2.5;"
                        "assert strstr(s, \"ab\") >= 0;"
                        "assert contains(concat(s, t), \"x\");"
                        "assert strlen(concat(s, \"y\")) + a * 2 <= 10 / r;"
                        "assert s == t && s != \"q\" || a == 1;"));
}

TEST_CASE("arithmetic and boolean precedence") {
    const ConstraintFile cf = parse("int a; int b; int c;"
                                    "assert a + b * c == 1;"
                                    "assert a < 1 && b < 2 || c < 3;");
    const Constraint& sum = *cf.symbolic[0];
    CHECK(sum.lhs->node == Expr::Node::Arith);
    CHECK(sum.lhs->op == ArithOp::Add);
    CHECK(sum.lhs->b->op == ArithOp::Mul); // b*c binds tighter
    const Constraint& orc = *cf.symbolic[1];
    CHECK(orc.node == Constraint::Node::Or);
    CHECK(orc.a->node == Constraint::Node::And); // && binds tighter than ||
    // parenthesized constraint flips the shape
    const ConstraintFile cf2 = parse("int a; int b; int c;"
                                     "assert a < 1 && (b < 2 || c < 3);");
    CHECK(cf2.symbolic[0]->node == Constraint::Node::And);
    CHECK(cf2.symbolic[0]->b->node == Constraint::Node::Or);
}

TEST_CASE("print round-trips the field-length conjunction") {
    const ConstraintFile cf = parse(kFieldLengths);
    const ConstraintFile again = parse(print(cf));
    CHECK(struct_eq(cf, again));
}

TEST_CASE("a file with declarations only prints and reparses") {
    const ConstraintFile cf = parse("int a in -3..7; str s maxlen 12; real r;");
    CHECK(cf.symbolic.empty());
    const ConstraintFile again = parse(print(cf));
    CHECK(struct_eq(cf, again));
    CHECK(again.decls[0].has_domain);
    CHECK(again.decls[1].maxlen == 12);
}

TEST_CASE("neural declarations round-trip") {
    const ConstraintFile cf =
        parse("int a; int b; int c; neural \"models/m1.nsxmodel\" (a, b) -> (c);");
    REQUIRE(cf.neural.size() == 1);
    CHECK(cf.neural[0].inputs == std::vector<std::string>{"a", "b"});
    CHECK(cf.neural[0].outputs == std::vector<std::string>{"c"});
    CHECK(struct_eq(cf, parse(print(cf))));
}

TEST_CASE("randomly generated files round-trip (1000 cases)") {
    for (int i = 0; i < 1000; ++i) {
        oracle::GenCtx g(mix_seed(2024, i));
        ConstraintFile cf;
        for (int v = 0; v < 3; ++v) {
            VarDecl d;
            d.name = std::string("n") + char('0' + v);
            d.kind = v == 2 ? Kind::Real : Kind::Int;
            if (i % 3 == 0) {
                d.has_domain = true;
                d.lo = -6;
                d.hi = 6;
            }
            cf.decls.push_back(d);
            g.num_vars.push_back(d.name);
        }
        {
            VarDecl d;
            d.name = "s0";
            d.kind = Kind::Str;
            if (i % 2 == 0) {
                d.has_maxlen = true;
                d.maxlen = 8;
            }
            cf.decls.push_back(d);
            g.str_vars.push_back(d.name);
        }
        cf.symbolic.push_back(oracle::gen_constraint(g, 3, true));
        if (i % 4 == 0)
            cf.symbolic.push_back(
                make_atom(CmpOp::Eq, oracle::gen_str_expr(g, 2), oracle::gen_str_expr(g, 2)));
        validate(cf);
        const std::string text = print(cf);
        const ConstraintFile again = parse(text);
        REQUIRE_MESSAGE(struct_eq(cf, again), text);
        // parse(print(parse(t))) == parse(t)
        CHECK(struct_eq(again, parse(print(again))));
    }
}

TEST_CASE("grammar closure: every production is constructible and parseable") {
    // one instance of each production at depth <= 3
    const char* text =
        "int a in -10..10; real r; str s maxlen 6; str t;"
        "assert a + 1 - 2 * 3 / 4 == -5;"
        "assert strlen(s) >= a;"
        "assert strstr(s, \"ab\") != -1;"
        "assert contains(concat(s, t), \"xy\");"
        "assert s == concat(t, \"z\");"
        "assert s != t;"
        "assert a < 1 || a > 2 && r <= 0.5 || r >= -0.25;"
        "neural \"m\" (a) -> (r);";
    const ConstraintFile cf = parse(text);
    CHECK(cf.symbolic.size() == 7);
    CHECK(struct_eq(cf, parse(print(cf))));
}

TEST_CASE("free_vars") {
    const ConstraintFile one = parse("int ptr; assert ptr > 99;");
    CHECK(free_vars(*one.symbolic[0]) == std::set<std::string>{"ptr"});

    const ConstraintFile uni = parse("int a; int b; int c; int d; assert a < b && c < d;");
    CHECK(free_vars(*uni.symbolic[0]) == std::set<std::string>{"a", "b", "c", "d"});

    const ConstraintFile eq5 = parse(kFieldLengths);
    CHECK(free_vars(eq5) == std::set<std::string>{"uri_length", "input_uri", "ver_length",
                                                  "input_version", "ptr"});
}

TEST_CASE("negation dualizes comparisons and applies De Morgan") {
    const std::vector<VarDecl> decls = parse("int c; int d; int x;").decls;
    const ConstraintPtr g = parse_constraint_text("c > d", decls);
    CHECK(print(*negate(g)) == "c <= d");
    const ConstraintPtr both = parse_constraint_text("c > d && x == 0", decls);
    CHECK(print(*negate(both)) == "c <= d || x != 0");
    const ConstraintPtr either = parse_constraint_text("c >= d || x != 0", decls);
    CHECK(print(*negate(either)) == "c < d && x == 0");
}

TEST_CASE("string escapes survive the round trip") {
    ConstraintFile cf;
    VarDecl d;
    d.name = "s";
    d.kind = Kind::Str;
    cf.decls.push_back(d);
    cf.symbolic.push_back(
        make_atom(CmpOp::Eq, make_var("s"), make_str(std::string("a\"b\\c\n\t\x01z", 8))));
    const ConstraintFile again = parse(print(cf));
    CHECK(struct_eq(cf, again));
}

} // TEST_SUITE
