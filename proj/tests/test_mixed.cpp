#include <doctest.h>

#include <cmath>

#include "nsx/error.hpp"
#include "nsx/mixed.hpp"
#include "nsx/parser.hpp"
#include "oracles.hpp"

using namespace nsx;

namespace {

// y = slope * x + shift, exactly, as a 1x1 identity-activation model.
MlpModel linear_model(double slope, double shift, const std::string& in, const std::string& out) {
    MlpModel m;
    m.layer_sizes = {1, 1};
    m.weights = {{slope}};
    m.biases = {{shift}};
    m.input_names = {in};
    m.output_names = {out};
    m.input_stats = {{0.0, 1.0}};
    m.output_stats = {{0.0, 1.0}};
    m.validate();
    return m;
}

SolverConfig quiet_cfg(uint64_t seed = 5) {
    SolverConfig cfg;
    cfg.seed = seed;
    cfg.max_enum = 2000;
    return cfg;
}

} // namespace

TEST_SUITE("mixed") {

TEST_CASE("the constraint graph splits into pure and mixed components") {
    // S1(v1,v2); N1: v3 -> v4; S2(v5,v6); N2: (v6,v7) -> v8; S3(v8,v9)
    const ConstraintFile cf = parse(
        "int v1; int v2; int v3; int v4; int v5; int v6; int v7; int v8; int v9;"
        "assert v1 < v2;"
        "assert v5 < v6;"
        "assert v8 < v9;"
        "neural \"n1\" (v3) -> (v4);"
        "neural \"n2\" (v6, v7) -> (v8);");
    const ConstraintGraph g = build_graph(cf);
    REQUIRE(g.components.size() == 3);
    CHECK(g.components[0].cls == ComponentClass::PureSymbolic); // {S1}
    CHECK(g.components[0].vars == std::vector<std::string>{"v1", "v2"});
    CHECK(g.components[1].cls == ComponentClass::Mixed); // {S2, S3, N2}
    CHECK(g.components[1].symbolic.size() == 2);
    CHECK(g.components[1].neural.size() == 1);
    CHECK(g.components[1].vars == std::vector<std::string>{"v5", "v6", "v7", "v8", "v9"});
    CHECK(g.components[2].cls == ComponentClass::PureNeural); // {N1}
}

TEST_CASE("singleton and disjoint constraints map to their own components") {
    const ConstraintFile one = parse("int x; assert x > 0;");
    CHECK(build_graph(one).components.size() == 1);
    CHECK(build_graph(one).components[0].cls == ComponentClass::PureSymbolic);
    const ConstraintFile two = parse("int x; int y; assert x > 0; assert y > 0;");
    CHECK(build_graph(two).components.size() == 2);
}

TEST_CASE("a pure symbolic UNSAT exits before any model evaluation") {
    const ConstraintFile cf = parse("int ptr; int x in 0..9; int y in 0..9;"
                                    "assert ptr > 99; assert ptr < 50;"
                                    "neural \"m\" (x) -> (y);");
    ModelRegistry models;
    models.emplace("m", linear_model(2.0, 0.0, "x", "y"));
    const SolveResult r = solve(cf, models, quiet_cfg());
    CHECK(r.verdict == Verdict::Unsat);
    CHECK(r.diag.model_evaluations == 0);
}

TEST_CASE("pure neural components bind consistent values by forward evaluation") {
    const ConstraintFile cf = parse("int x in 0..10; int y in -100..100; neural \"m\" (x) -> (y);");
    ModelRegistry models;
    models.emplace("m", linear_model(2.0, 0.0, "x", "y"));
    const SolveResult r = solve(cf, models, quiet_cfg());
    REQUIRE(r.verdict == Verdict::Sat);
    CHECK(r.assignment.at("y").i == 2 * r.assignment.at("x").i);
    CHECK(r.diag.model_evaluations > 0);
}

TEST_CASE("mixed I inverts the network for the remaining free input") {
    const ConstraintFile cf = parse("int x in 0..20; int y in 0..40;"
                                    "assert y >= 6; assert y <= 6;"
                                    "neural \"m\" (x) -> (y);");
    ModelRegistry models;
    models.emplace("m", linear_model(2.0, 0.0, "x", "y"));
    const SolveResult r = solve(cf, models, quiet_cfg());
    REQUIRE(r.verdict == Verdict::Sat);
    CHECK(r.assignment.at("x").i == 3);
    CHECK(r.assignment.at("y").i == 6);
    REQUIRE(r.diag.components.size() == 1);
    CHECK(r.diag.components[0].solved_by == "mixed1");
}

TEST_CASE("a fully assigned neural constraint is checked without any search") {
    const ConstraintFile cf = parse("int x in 0..20; int y in 0..40;"
                                    "assert x == 4; assert y == 8;"
                                    "neural \"m\" (x) -> (y);");
    ModelRegistry models;
    models.emplace("m", linear_model(2.0, 0.0, "x", "y"));
    const SolveResult r = solve(cf, models, quiet_cfg());
    REQUIRE(r.verdict == Verdict::Sat);
    CHECK(r.diag.components[0].solved_by == "mixed1");
    CHECK(r.diag.components[0].neusolv_trials == 0);
    CHECK(r.diag.components[0].proposals.size() == 1);
}

TEST_CASE("rejected picks become conflict clauses; no pick repeats (instrumented)") {
    // y = 4x with x in [3, 10]: proposals y = 7..11 are all rejected, y = 12
    // is the first invertible value.
    const ConstraintFile cf = parse("int x in 3..10; int y in 7..20;"
                                    "assert y >= 7; assert y <= 20;"
                                    "neural \"m\" (x) -> (y);");
    ModelRegistry models;
    models.emplace("m", linear_model(4.0, 0.0, "x", "y"));
    ComponentReport rep;
    std::vector<ConflictClause> db;
    long long evals = 0;
    const ConstraintGraph g = build_graph(cf);
    REQUIRE(g.components.size() == 1);
    const SolveResult r =
        mixed_solve_I(cf, g.components[0], models, quiet_cfg(), 0, db, rep, &evals);
    REQUIRE(r.verdict == Verdict::Sat);
    CHECK(r.assignment.at("y").i == 12);
    CHECK(r.assignment.at("x").i == 3);
    CHECK(rep.mixed1_rejections == 5);
    CHECK(db.size() == 5);
    REQUIRE(rep.proposals.size() == 6);
    for (int i = 0; i < 5; ++i) CHECK(rep.proposals[i].at("y").i == 7 + i);
    // pairwise distinct proposals
    for (size_t i = 0; i < rep.proposals.size(); ++i)
        for (size_t j = i + 1; j < rep.proposals.size(); ++j)
            CHECK_FALSE(rep.proposals[i] == rep.proposals[j]);
}

TEST_CASE("mixed II composes the loss with the network end to end") {
    // force mixed II by disabling mixed-I iterations
    const ConstraintFile cf = parse("int x in 0..20; int y in -100..100;"
                                    "assert y <= 4;"
                                    "neural \"m\" (x) -> (y);");
    ModelRegistry models;
    models.emplace("m", linear_model(2.0, 0.0, "x", "y"));
    SolverConfig cfg = quiet_cfg();
    cfg.max_trial2 = 0;
    const SolveResult r = solve(cf, models, cfg);
    REQUIRE(r.verdict == Verdict::Sat);
    CHECK(r.diag.components[0].solved_by == "mixed2");
    CHECK(r.diag.components[0].mixed2_trials >= 1);
    CHECK(r.assignment.at("y").i <= 4);
    CHECK(r.assignment.at("y").i == 2 * r.assignment.at("x").i);
}

TEST_CASE("a constant-true symbolic side solves instantly under mixed II") {
    const ConstraintFile cf = parse("int x in 0..10; int y in -100..100;"
                                    "assert 0 <= 1;"
                                    "neural \"m\" (x) -> (y);");
    // 0 <= 1 has no variables: it forms its own pure symbolic component and
    // the neural part is pure neural; both stages must succeed.
    ModelRegistry models;
    models.emplace("m", linear_model(2.0, 0.0, "x", "y"));
    const SolveResult r = solve(cf, models, quiet_cfg());
    CHECK(r.verdict == Verdict::Sat);
}

TEST_CASE("exhausted searches return UNKNOWN, and compat mode collapses it") {
    // y = 2x can never hit an odd target
    const ConstraintFile cf = parse("int x in 0..10; int y in 0..20;"
                                    "assert y == 7;"
                                    "neural \"m\" (x) -> (y);");
    ModelRegistry models;
    models.emplace("m", linear_model(2.0, 0.0, "x", "y"));
    SolverConfig cfg = quiet_cfg();
    cfg.max_trial2 = 15; // the 11 x-candidates exhaust quickly
    const SolveResult r = solve(cf, models, cfg);
    CHECK(r.verdict == Verdict::Unknown);
    CHECK_FALSE(r.diag.message.empty());
    cfg.compat_unsat = true;
    CHECK(solve(cf, models, cfg).verdict == Verdict::Unsat);
}

TEST_CASE("chained neural constraints realize through topological order") {
    // x -> y (2x), y -> z (y + 1); constraint pins z = 9, so x = 4.
    const ConstraintFile cf = parse("int x in 0..20; int y in -100..100; int z in -100..100;"
                                    "assert z == 9;"
                                    "neural \"m1\" (x) -> (y);"
                                    "neural \"m2\" (y) -> (z);");
    ModelRegistry models;
    models.emplace("m1", linear_model(2.0, 0.0, "x", "y"));
    models.emplace("m2", linear_model(1.0, 1.0, "y", "z"));
    const SolveResult r = solve(cf, models, quiet_cfg());
    REQUIRE(r.verdict == Verdict::Sat);
    CHECK(r.assignment.at("x").i == 4);
    CHECK(r.assignment.at("y").i == 8);
    CHECK(r.assignment.at("z").i == 9);
}

TEST_CASE("verification gate rejects assignments outside the tolerance") {
    const ConstraintFile cf = parse("int x in 0..10; int y in 0..40; assert y >= 0;"
                                    "neural \"m\" (x) -> (y);");
    ModelRegistry models;
    models.emplace("m", linear_model(2.0, 0.0, "x", "y"));
    Assignment good{{"x", TypedValue::of_int(3)}, {"y", TypedValue::of_int(6)}};
    CHECK(verify_solution(cf, models, good));
    Assignment bad{{"x", TypedValue::of_int(3)}, {"y", TypedValue::of_int(7)}};
    std::string why;
    CHECK_FALSE(verify_solution(cf, models, bad, &why));
    CHECK(why.find("tolerance") != std::string::npos);
    Assignment unsat_sym{{"x", TypedValue::of_int(3)}, {"y", TypedValue::of_int(-2)}};
    CHECK_FALSE(verify_solution(cf, models, unsat_sym));
}

TEST_CASE("component order does not change the verdict") {
    const char* variant_a = "int x in 0..9; int y in -50..50; int p; "
                            "assert p > 3; assert p < 5; assert y >= 4;"
                            "neural \"m\" (x) -> (y);";
    const char* variant_b = "int x in 0..9; int y in -50..50; int p; "
                            "assert y >= 4; assert p < 5; assert p > 3;"
                            "neural \"m\" (x) -> (y);";
    ModelRegistry models;
    models.emplace("m", linear_model(2.0, 0.0, "x", "y"));
    const SolveResult ra = solve(parse(variant_a), models, quiet_cfg());
    const SolveResult rb = solve(parse(variant_b), models, quiet_cfg());
    REQUIRE(ra.verdict == Verdict::Sat);
    REQUIRE(rb.verdict == Verdict::Sat);
    CHECK(ra.assignment.at("p").i == 4);
    CHECK(rb.assignment.at("p").i == 4);
}

TEST_CASE("model registry mismatches are input format errors") {
    const ConstraintFile cf = parse("int x in 0..9; int y; neural \"missing\" (x) -> (y);");
    CHECK_THROWS_AS(solve(cf, {}, quiet_cfg()), FileFormatError);
    ModelRegistry wrong;
    wrong.emplace("missing", linear_model(1.0, 0.0, "a", "b")); // name mismatch
    CHECK_THROWS_AS(solve(cf, wrong, quiet_cfg()), FileFormatError);
}

TEST_CASE("the report format is line-oriented key=value") {
    const ConstraintFile cf = parse("int x in 0..5; assert x > 3;");
    const SolveResult r = solve(cf, {}, quiet_cfg());
    const std::string rep = format_report(r);
    CHECK(rep.find("verdict=SAT\n") != std::string::npos);
    CHECK(rep.find("var.x=4\n") != std::string::npos);
    CHECK(rep.find("model_evals=0\n") != std::string::npos);
    CHECK(rep.find("component.0.class=pure-symbolic\n") != std::string::npos);
}

} // TEST_SUITE

TEST_SUITE("mixed") {

TEST_CASE("independent mixed components merge into one assignment") {
    const ConstraintFile cf = parse("int x1 in 0..20; int y1 in 0..40;"
                                    "int x2 in 0..20; int y2 in 0..60;"
                                    "assert y1 >= 6; assert y1 <= 6;"
                                    "assert y2 >= 9; assert y2 <= 9;"
                                    "neural \"m2\" (x1) -> (y1);"
                                    "neural \"m3\" (x2) -> (y2);");
    MlpModel m2;
    m2.layer_sizes = {1, 1};
    m2.weights = {{2.0}};
    m2.biases = {{0.0}};
    m2.input_names = {"x1"};
    m2.output_names = {"y1"};
    m2.input_stats = {{0.0, 1.0}};
    m2.output_stats = {{0.0, 1.0}};
    MlpModel m3 = m2;
    m3.weights = {{3.0}};
    m3.input_names = {"x2"};
    m3.output_names = {"y2"};
    ModelRegistry models;
    models.emplace("m2", std::move(m2));
    models.emplace("m3", std::move(m3));
    SolverConfig cfg;
    cfg.seed = 8;
    const SolveResult r = solve(cf, models, cfg);
    REQUIRE(r.verdict == Verdict::Sat);
    CHECK(r.assignment.at("x1").i == 3);
    CHECK(r.assignment.at("y1").i == 6);
    CHECK(r.assignment.at("x2").i == 3);
    CHECK(r.assignment.at("y2").i == 9);
    const ConstraintGraph g = build_graph(cf);
    CHECK(g.components.size() == 2);
}

} // TEST_SUITE

TEST_SUITE("mixed") {

TEST_CASE("a constant-zero loss accepts at trial 1, enumeration 1 under mixed II") {
    // x >= x is always true, so the encoded loss is identically zero; the
    // first fixed-point enumeration must already pass the accept check.
    const ConstraintFile cf = parse("int x in 0..10; int y in -100..100;"
                                    "assert x >= x;"
                                    "neural \"m\" (x) -> (y);");
    MlpModel m;
    m.layer_sizes = {1, 1};
    m.weights = {{2.0}};
    m.biases = {{0.0}};
    m.input_names = {"x"};
    m.output_names = {"y"};
    m.input_stats = {{0.0, 1.0}};
    m.output_stats = {{0.0, 1.0}};
    ModelRegistry models;
    models.emplace("m", std::move(m));
    SolverConfig cfg;
    cfg.seed = 3;
    cfg.max_trial2 = 0; // route straight to mixed II
    const SolveResult r = solve(cf, models, cfg);
    REQUIRE(r.verdict == Verdict::Sat);
    REQUIRE(r.diag.components.size() == 1);
    CHECK(r.diag.components[0].solved_by == "mixed2");
    CHECK(r.diag.components[0].mixed2_trials == 1);
    CHECK(r.assignment.at("y").i == 2 * r.assignment.at("x").i);
}

} // TEST_SUITE
