#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "nsx/nnet.hpp"

namespace {

const std::string kBin = NSX_BIN_PATH;
const std::string kTmp = NSX_TEST_TMP;

struct RunResult {
    int code = -1;
    std::string out;
};

RunResult run(const std::string& args) {
    static int counter = 0;
    const std::string out_path = kTmp + "/cli_out_" + std::to_string(counter++) + ".txt";
    const int rc = std::system((kBin + " " + args + " > " + out_path + " 2>&1").c_str());
    RunResult r;
    r.code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
    std::ifstream in(out_path);
    std::ostringstream ss;
    ss << in.rdbuf();
    r.out = ss.str();
    return r;
}

std::string write_file(const std::string& name, const std::string& text) {
    const std::string path = kTmp + "/" + name;
    std::ofstream out(path);
    out << text;
    return path;
}

} // namespace

TEST_SUITE("cli") {

TEST_CASE("check accepts valid files and reports syntax errors at 65") {
    const std::string good = write_file("ok.nsx", "int x in 0..5;\nassert x > 1;\n");
    CHECK(run("check " + good).code == 0);
    const RunResult ast = run("check " + good + " --print-ast");
    CHECK(ast.code == 0);
    CHECK(ast.out.find("assert x > 1;") != std::string::npos);

    const std::string bad = write_file("bad.nsx", "int x;\nassert x < ;\n");
    const RunResult r = run("check " + bad);
    CHECK(r.code == 65);
    CHECK(r.out.find("2:") != std::string::npos); // line of the error
}

TEST_CASE("solve exit codes follow the verdict") {
    const std::string sat = write_file("sat.nsx", "int x in 0..10; assert x > 3; assert x < 5;");
    const RunResult rs = run("solve " + sat);
    CHECK(rs.code == 0);
    CHECK(rs.out == "SAT x=4\n");

    const std::string unsat = write_file("unsat.nsx", "int ptr; assert ptr > 99; assert ptr < 50;");
    const RunResult ru = run("solve " + unsat);
    CHECK(ru.code == 1);
    CHECK(ru.out == "UNSAT\n");
}

TEST_CASE("an exhausted neural search is UNKNOWN (2) or UNSAT under compat") {
    // y = 2x cannot hit 7; build the model file directly
    nsx::MlpModel m;
    m.layer_sizes = {1, 1};
    m.weights = {{2.0}};
    m.biases = {{0.0}};
    m.input_names = {"x"};
    m.output_names = {"y"};
    m.input_stats = {{0.0, 1.0}};
    m.output_stats = {{0.0, 1.0}};
    nsx::save(m, kTmp + "/double.nsxmodel");
    const std::string file = write_file("odd.nsx",
                                        "int x in 0..10;\nint y in 0..20;\nassert y == 7;\n"
                                        "neural \"double.nsxmodel\" (x) -> (y);\n");
    CHECK(run("solve " + file + " --seed 4 --max-trial2 15").code == 2);
    CHECK(run("solve " + file + " --seed 4 --max-trial2 15 --compat-unsat").code == 1);
}

TEST_CASE("model paths resolve relative to the constraint file") {
    const std::string file = write_file("rel.nsx",
                                        "int x in 0..10;\nint y in 0..40;\n"
                                        "assert y >= 6; assert y <= 6;\n"
                                        "neural \"double.nsxmodel\" (x) -> (y);\n");
    const RunResult r = run("solve " + file + " --seed 4");
    CHECK(r.code == 0);
    CHECK(r.out == "SAT x=3 y=6\n");
}

TEST_CASE("usage errors exit with 64") {
    CHECK(run("").code == 64);
    CHECK(run("frobnicate").code == 64);
    CHECK(run("sample --program does_not_exist --n 3 --out " + kTmp + "/x.csv").code == 64);
    CHECK(run("bench --suite bogus").code == 64);
}

TEST_CASE("format errors exit with 65") {
    CHECK(run("solve " + kTmp + "/definitely_missing.nsx").code == 65);
    const std::string trunc = write_file("trunc.nsxmodel", "nsxmodel v1\nlayer_sizes 1 1\n");
    const std::string file = write_file("truncated_model.nsx",
                                        "int x in 0..5;\nint y in 0..5;\nassert y >= 0;\n"
                                        "neural \"trunc.nsxmodel\" (x) -> (y);\n");
    CHECK(run("solve " + file).code == 65);
}

TEST_CASE("sample output is byte-identical for a fixed seed") {
    const std::string a = kTmp + "/s1.csv";
    const std::string b = kTmp + "/s2.csv";
    CHECK(run("sample --program race --n 60 --seed 9 --out " + a).code == 0);
    CHECK(run("sample --program race --n 60 --seed 9 --out " + b).code == 0);
    std::ifstream fa(a), fb(b);
    std::stringstream sa, sb;
    sa << fa.rdbuf();
    sb << fb.rdbuf();
    CHECK(sa.str() == sb.str());
    CHECK(sa.str().rfind("a:int,b:int,cnt:int,x:int,y:int", 0) == 0);
}

TEST_CASE("train writes a model and a fixed seed fixes it bitwise") {
    const std::string csv = kTmp + "/train.csv";
    REQUIRE(run("sample --program count_up --n 80 --seed 3 --out " + csv).code == 0);
    const RunResult r1 = run("train " + csv + " --in n,cnt --out i,s --seed 5 --epochs 15 --model " +
                             kTmp + "/m1.nsxmodel");
    CHECK(r1.code == 0);
    CHECK(r1.out.find("accuracy=") != std::string::npos);
    const RunResult r2 = run("train " + csv + " --in n,cnt --out i,s --seed 5 --epochs 15 --model " +
                             kTmp + "/m2.nsxmodel");
    CHECK(r2.code == 0);
    std::ifstream fa(kTmp + "/m1.nsxmodel"), fb(kTmp + "/m2.nsxmodel");
    std::stringstream sa, sb;
    sa << fa.rdbuf();
    sb << fb.rdbuf();
    CHECK(sa.str() == sb.str());
    CHECK(run("train " + csv + " --in n,missing --out i --seed 5").code == 65);
}

TEST_CASE("explain prints a ranked influence line per input") {
    const RunResult r = run("explain --model " + kTmp + "/double.nsxmodel");
    CHECK(r.code == 0);
    CHECK(r.out.find("x") != std::string::npos);
}

TEST_CASE("solve --report writes the key=value record") {
    const std::string sat = write_file("rep.nsx", "int x in 0..10; assert x > 3; assert x < 5;");
    const std::string rep = kTmp + "/solve_report.txt";
    CHECK(run("solve " + sat + " --report " + rep).code == 0);
    std::ifstream in(rep);
    std::stringstream ss;
    ss << in.rdbuf();
    CHECK(ss.str().find("verdict=SAT") != std::string::npos);
    CHECK(ss.str().find("var.x=4") != std::string::npos);
}

TEST_CASE("identical flags produce identical solve output") {
    const std::string file = write_file("det.nsx",
                                        "int x in 0..10;\nint y in 0..40;\n"
                                        "assert y >= 6; assert y <= 8;\n"
                                        "neural \"double.nsxmodel\" (x) -> (y);\n");
    const RunResult a = run("solve " + file + " --seed 12");
    const RunResult b = run("solve " + file + " --seed 12");
    CHECK(a.code == 0);
    CHECK(a.out == b.out);
}

} // TEST_SUITE
