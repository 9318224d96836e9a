#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <set>

#include "nsx/error.hpp"
#include "nsx/harness.hpp"
#include "nsx/parser.hpp"
#include "oracles.hpp"

using namespace nsx;

TEST_SUITE("harness") {

TEST_CASE("accel_race records the loop-head states the reference trace predicts") {
    const TargetProgram& p = *find_program("accel_race");
    Assignment in{{"a", TypedValue::of_int(5)}, {"b", TypedValue::of_int(2)}};
    const Trace tr = p.run(in, p.step_limit);
    REQUIRE(tr.rows.size() >= 3);
    CHECK(tr.rows[0].cnt == 0);
    CHECK(tr.rows[0].values == std::vector<double>{5, 2});
    CHECK(tr.rows[1].values == std::vector<double>{8, 3});
    CHECK(tr.rows[2].values == std::vector<double>{12, 4});
    CHECK(tr.truncated); // 5 > 2 diverges

    // full agreement with the independent oracle
    const auto want = oracle::race_trace(5, 2, p.step_limit);
    REQUIRE(tr.rows.size() == want.size());
    for (size_t i = 0; i < want.size(); ++i) {
        CHECK(tr.rows[i].cnt == want[i].cnt);
        CHECK((long long)tr.rows[i].values[0] == want[i].c);
        CHECK((long long)tr.rows[i].values[1] == want[i].d);
    }
}

TEST_CASE("a false guard at entry yields the single cnt=0 row") {
    const TargetProgram& p = *find_program("accel_race");
    Assignment in{{"a", TypedValue::of_int(2)}, {"b", TypedValue::of_int(5)}};
    const Trace tr = p.run(in, p.step_limit);
    REQUIRE(tr.rows.size() == 1);
    CHECK(tr.rows[0].cnt == 0);
    CHECK(tr.rows[0].values == std::vector<double>{2, 5});
    CHECK_FALSE(tr.truncated);
}

TEST_CASE("sampling is reproducible and bounded by n * step_limit rows") {
    const TargetProgram& p = *find_program("accel_race");
    const Dataset a = sample(p, 40, 7);
    const Dataset b = sample(p, 40, 7);
    CHECK(a.rows == b.rows);
    CHECK(a.rows.size() <= size_t(40 * p.step_limit));
    const Dataset c = sample(p, 40, 8);
    CHECK(a.rows != c.rows);
}

TEST_CASE("split is a seeded shuffle partition") {
    Dataset d;
    d.columns = {{"x", Kind::Int}};
    for (int i = 0; i < 100; ++i) d.rows.push_back({double(i)});
    auto [train, held] = split(d, 0.8, 3);
    CHECK(train.rows.size() == 80);
    CHECK(held.rows.size() == 20);
    std::multiset<double> all;
    for (const auto& r : train.rows) all.insert(r[0]);
    for (const auto& r : held.rows) all.insert(r[0]);
    CHECK(all.size() == 100);
    for (int i = 0; i < 100; ++i) CHECK(all.count(double(i)) == 1);

    auto [t2, h2] = split(d, 0.8, 3);
    CHECK(train.rows == t2.rows);
    CHECK(held.rows == h2.rows);

    CHECK_THROWS_AS(split(d, 0.0, 1), Error);
    CHECK_THROWS_AS(split(d, 1.0, 1), Error);
    Dataset tiny;
    tiny.columns = d.columns;
    tiny.rows = {{1.0}};
    CHECK_THROWS_AS(split(tiny, 0.5, 1), Error);
}

TEST_CASE("the suite has at least 20 programs covering T1 through T4") {
    const auto& suite = builtin_loop_suite();
    CHECK(suite.size() >= 20);
    std::map<std::string, int> by_class;
    for (const auto& p : suite) {
        ++by_class[p.guard_class];
        // guard parses against the program's own declarations
        std::vector<VarDecl> decls = p.input_decls();
        for (const auto& obs : p.observed) {
            VarDecl d;
            d.name = obs;
            d.kind = Kind::Int;
            decls.push_back(d);
        }
        CHECK_NOTHROW(p.guard(decls));
    }
    CHECK(by_class["T1"] >= 1);
    CHECK(by_class["T2"] >= 1);
    CHECK(by_class["T3"] >= 1);
    CHECK(by_class["T4"] >= 1);
}

TEST_CASE("every suite program terminates or truncates within the step limit") {
    for (const auto& p : builtin_loop_suite()) {
        Rng rng(42);
        for (int i = 0; i < 20; ++i) {
            Assignment in;
            for (const auto& spec : p.inputs)
                in[spec.name] = TypedValue::of_int(rng.uniform_int(spec.lo, spec.hi));
            const Trace tr = p.run(in, p.step_limit);
            CHECK(tr.rows.size() <= size_t(p.step_limit) + 1);
            int prev = -1;
            for (const auto& row : tr.rows) {
                CHECK(row.cnt == prev + 1); // strictly increasing from 0
                prev = row.cnt;
                CHECK(row.values.size() == p.observed.size());
            }
        }
    }
}

TEST_CASE("the request parser rejects short or unmarked versions") {
    const TargetProgram& p = builtin_exploit_program();
    auto run_lens = [&](size_t ulen, size_t vlen) {
        Assignment in{{"input_uri", TypedValue::of_str(std::string(ulen, 'x'))},
                      {"input_version", TypedValue::of_str(std::string(vlen, 'x'))}};
        return p.run(p.prepare(in), p.step_limit);
    };
    CHECK(run_lens(10, 7).rejected);  // version shorter than 8
    CHECK(run_lens(10, 0).rejected);
    CHECK_FALSE(run_lens(10, 8).rejected); // prepare marks version[5]

    // without the protocol marker the parser bails out
    Assignment raw{{"input_uri", TypedValue::of_str("abc")},
                   {"input_version", TypedValue::of_str("xxxxxxxxxx")}};
    CHECK(p.run(raw, p.step_limit).rejected);
}

TEST_CASE("the write index is uri_len + ver_len + 1 and flags past 99") {
    const TargetProgram& p = builtin_exploit_program();
    for (long long u : {0, 10, 50, 80, 98})
        for (long long v : {8, 20, 49, 60}) {
            Assignment in{{"input_uri", TypedValue::of_str(std::string(size_t(u), 'q'))},
                          {"input_version", TypedValue::of_str(std::string(size_t(v), 'q'))}};
            const Trace tr = p.run(p.prepare(in), p.step_limit);
            REQUIRE_FALSE(tr.rejected);
            REQUIRE(tr.rows.size() == 1);
            CHECK((long long)tr.rows[0].values[0] == u + v + 1);
            CHECK(tr.overflow == (u + v + 1 > 99));
        }
}

TEST_CASE("rejected executions contribute no rows and are counted") {
    const TargetProgram& p = builtin_exploit_program();
    SampleStats stats;
    const Dataset d = sample(p, 300, 5, &stats);
    CHECK(stats.rejected > 0);
    CHECK(d.rows.size() + size_t(stats.rejected) == 300);
    // length columns carry the string lengths
    CHECK(d.column_index("uri_length") >= 0);
    CHECK(d.column_index("ver_length") >= 0);
    CHECK(d.column_index("ptr") >= 0);
    for (const auto& row : d.rows)
        CHECK(row[size_t(d.column_index("ptr"))] ==
              row[size_t(d.column_index("uri_length"))] +
                  row[size_t(d.column_index("ver_length"))] + 1);
}

TEST_CASE("run_loop_task solves and concretely validates a quick program") {
    TaskConfig cfg;
    cfg.seed = 21;
    cfg.samples = 500;
    const TaskReport rep = run_loop_task(*find_program("count_up"), cfg);
    CHECK(rep.verdict == Verdict::Sat);
    CHECK(rep.validated);
    CHECK_FALSE(rep.model_relative_only);
    CHECK(rep.t_ns >= 1);
    CHECK(rep.t_ne >= rep.t_ns);
    CHECK(rep.accuracy > 0.5);
    // the witness satisfies the negated guard under real execution
    const TargetProgram& p = *find_program("count_up");
    const Trace tr = p.run({{"n", rep.witness.at("n")}}, p.step_limit);
    const long long cnt = rep.witness.at("cnt").i;
    bool found = false;
    for (const auto& row : tr.rows)
        if (row.cnt == cnt) {
            found = true;
            CHECK((long long)row.values[0] >= rep.witness.at("n").i); // i >= n
        }
    CHECK(found);
}

TEST_CASE("run_exploit_task produces a request that fires the overflow flag") {
    TaskConfig cfg;
    cfg.seed = 33;
    cfg.samples = 4000;
    const TaskReport rep = run_exploit_task(builtin_exploit_program(), cfg);
    REQUIRE(rep.verdict == Verdict::Sat);
    CHECK(rep.validated);
    const long long u = rep.witness.at("uri_length").i;
    const long long v = rep.witness.at("ver_length").i;
    CHECK(u + v + 1 > 99);
    CHECK((long long)rep.witness.at("input_uri").s.size() == u);
    CHECK((long long)rep.witness.at("input_version").s.size() == v);
}

TEST_CASE("task reports are line-oriented key=value blocks") {
    TaskConfig cfg;
    cfg.seed = 21;
    cfg.samples = 400;
    const TaskReport rep = run_loop_task(*find_program("sq_cap"), cfg);
    const std::string text = format_report(rep);
    CHECK(text.find("program=sq_cap\n") != std::string::npos);
    CHECK(text.find("verdict=") != std::string::npos);
    CHECK(text.find("t_ns=") != std::string::npos);
    CHECK(text.find("validated=") != std::string::npos);
}

TEST_CASE("external programs run through the command template and OBS lines") {
    const std::string dir = NSX_TEST_TMP;
    const std::string script = dir + "/ext_prog.sh";
    {
        std::ofstream out(script);
        out << "#!/bin/sh\n"
               "x=$1\n"
               "echo \"OBS cnt=0 y=$((x * 2))\"\n"
               "echo \"OBS cnt=1 y=$((x * 2 + 1))\"\n";
    }
    const int rc_chmod = std::system(("chmod +x " + script).c_str());
    REQUIRE(rc_chmod == 0);
    ProgramInput xin;
    xin.name = "x";
    xin.kind = Kind::Int;
    xin.lo = 0;
    xin.hi = 5;
    const TargetProgram p =
        external_program("ext", "sh " + script + " {x}", {xin}, {"y"}, "y >= 0");
    Assignment in{{"x", TypedValue::of_int(3)}};
    const Trace tr = p.run(in, 16);
    REQUIRE(tr.rows.size() == 2);
    CHECK(tr.rows[0].values[0] == 6.0);
    CHECK(tr.rows[1].values[0] == 7.0);
    const Dataset d = sample(p, 4, 9);
    CHECK(d.rows.size() == 8);
    CHECK(d.column_index("y") >= 0);
}

} // TEST_SUITE
