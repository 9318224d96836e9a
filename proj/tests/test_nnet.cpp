#include <doctest.h>

#include <cmath>

#include "nsx/error.hpp"
#include "nsx/kernels.hpp"
#include "nsx/nnet.hpp"
#include "nsx/rng.hpp"
#include "oracles.hpp"

using namespace nsx;

namespace {

MlpModel tiny_model(std::vector<int> sizes, Rng* rng = nullptr) {
    MlpModel m;
    m.layer_sizes = std::move(sizes);
    for (size_t l = 0; l + 1 < m.layer_sizes.size(); ++l) {
        const size_t rows = size_t(m.layer_sizes[l + 1]);
        const size_t cols = size_t(m.layer_sizes[l]);
        std::vector<double> w(rows * cols, 0.0);
        std::vector<double> b(rows, 0.0);
        if (rng)
            for (auto& x : w) x = rng->uniform(-1.0, 1.0);
        if (rng)
            for (auto& x : b) x = rng->uniform(-0.5, 0.5);
        m.weights.push_back(std::move(w));
        m.biases.push_back(std::move(b));
    }
    for (int i = 0; i < m.layer_sizes.front(); ++i) {
        m.input_names.push_back("x" + std::to_string(i));
        m.input_stats.push_back({0.0, 1.0});
    }
    for (int i = 0; i < m.layer_sizes.back(); ++i) {
        m.output_names.push_back("y" + std::to_string(i));
        m.output_stats.push_back({0.0, 1.0});
    }
    return m;
}

// y = slope * x as a single linear layer (identity output, no hidden layer)
MlpModel linear_model(double slope, const std::string& in, const std::string& out) {
    MlpModel m = tiny_model({1, 1});
    m.weights[0][0] = slope;
    m.input_names = {in};
    m.output_names = {out};
    return m;
}

Dataset line_dataset(int n, uint64_t seed, double lo, double hi,
                     const std::function<double(double)>& f) {
    Dataset d;
    d.columns = {{"x", Kind::Real}, {"y", Kind::Real}};
    Rng rng(seed);
    for (int i = 0; i < n; ++i) {
        const double x = rng.uniform(lo, hi);
        d.rows.push_back({x, f(x)});
    }
    return d;
}

} // namespace

TEST_SUITE("nnet") {

TEST_CASE("an all-zero network predicts zero everywhere") {
    const MlpModel m = tiny_model({2, 3, 2});
    const std::vector<double> y = predict_raw(m, {4.2, -7.0});
    CHECK(y[0] == 0.0);
    CHECK(y[1] == 0.0);
}

TEST_CASE("an identity layer composed with standardization is the identity") {
    MlpModel m = tiny_model({1, 1});
    m.weights[0][0] = 1.0;
    m.input_stats[0] = {2.0, 3.0};
    m.output_stats[0] = {2.0, 3.0};
    for (double x : {-5.0, 0.0, 2.0, 11.5}) CHECK(predict_raw(m, {x})[0] == doctest::Approx(x));
}

TEST_CASE("predict binds outputs and rejects missing inputs") {
    const MlpModel m = linear_model(2.0, "a", "b");
    Assignment in{{"a", TypedValue::of_int(21)}};
    const Assignment out = predict(m, in);
    CHECK(out.at("b").r == doctest::Approx(42.0));
    CHECK_THROWS_AS(predict(m, Assignment{}), EvalError);
}

TEST_CASE("training y = x reaches held-out accuracy 0.99") {
    auto make_rows = [](int n, uint64_t seed) {
        Dataset d;
        d.columns = {{"x", Kind::Int}, {"y", Kind::Int}};
        Rng rng(seed);
        for (int i = 0; i < n; ++i) {
            const double x = double(rng.uniform_int(-10, 10));
            d.rows.push_back({x, x}); // the generating function is the oracle
        }
        return d;
    };
    const Dataset d = make_rows(1000, 404);
    TrainConfig tc;
    tc.seed = 7;
    auto [model, report] = train(d, {"x"}, {"y"}, tc);
    const Dataset held = make_rows(300, 505); // fresh points, not training rows
    CHECK(accuracy(model, held) >= 0.99);
    CHECK(report.accuracy >= 0.99);
}

TEST_CASE("training on loop executions learns the accelerating race") {
    // dataset straight from the independent trace oracle
    Dataset d;
    d.columns = {{"a", Kind::Int}, {"b", Kind::Int}, {"cnt", Kind::Int},
                 {"c", Kind::Int}, {"d", Kind::Int}};
    Rng rng(88);
    while (d.rows.size() < 10000) {
        const long long a = rng.uniform_int(-5, 5);
        const long long b = rng.uniform_int(-5, 5);
        for (const auto& row : oracle::race_trace(a, b, 4))
            d.rows.push_back({double(a), double(b), double(row.cnt), double(row.c), double(row.d)});
    }
    TrainConfig tc;
    tc.seed = 11;
    auto [model, report] = train(d, {"a", "b", "cnt"}, {"c", "d"}, tc);
    CHECK(report.accuracy >= 0.8);

    // the derived point: executing the loop from (5, 2) gives c=12, d=4 at cnt=2
    const auto trace = oracle::race_trace(5, 2, 4);
    REQUIRE(trace.size() > 2);
    CHECK(trace[2].c == 12);
    CHECK(trace[2].d == 4);
    const std::vector<double> y = predict_raw(model, {5.0, 2.0, 2.0});
    CHECK(std::fabs(y[0] - 12.0) <= 1.5); // c ~= 12 at a domain corner
    CHECK(std::fabs(y[1] - 4.0) <= 0.75); // d = b + cnt is learned almost exactly
}

TEST_CASE("degenerate requests are rejected up front") {
    const Dataset d = line_dataset(100, 1, 0, 1, [](double x) { return x; });
    CHECK_THROWS_AS(train(d, {}, {"y"}, {}), Error);
    CHECK_THROWS_AS(train(d, {"x"}, {"x"}, {}), Error);
    const Dataset tiny = line_dataset(5, 1, 0, 1, [](double x) { return x; });
    CHECK_THROWS_AS(train(tiny, {"x"}, {"y"}, {}), Error);
    // constant outputs still train
    const Dataset flat = line_dataset(50, 2, 0, 1, [](double) { return 3.0; });
    CHECK_NOTHROW(train(flat, {"x"}, {"y"}, {}));
}

TEST_CASE("input_gradient matches finite differences on random models") {
    int checked = 0;
    for (int i = 0; checked < 100 && i < 300; ++i) {
        Rng rng(mix_seed(4242, i));
        MlpModel m = tiny_model({3, 16, 2}, &rng);
        for (auto& s : m.input_stats) s = {rng.uniform(-1, 1), rng.uniform(0.5, 2.0)};
        for (auto& s : m.output_stats) s = {rng.uniform(-1, 1), rng.uniform(0.5, 2.0)};
        const std::vector<double> x{rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2)};
        const std::vector<double> down{rng.uniform(-1, 1), rng.uniform(-1, 1)};

        // stay away from rectifier kinks
        std::vector<double> xs(3);
        for (int k = 0; k < 3; ++k) xs[k] = (x[k] - m.input_stats[k].mean) / m.input_stats[k].stdev;
        std::vector<double> pre(16);
        kern::matvec(m.weights[0].data(), 16, 3, xs.data(), m.biases[0].data(), pre.data());
        bool near_kink = false;
        for (double p : pre) near_kink = near_kink || std::fabs(p) < 1e-3;
        if (near_kink) continue;

        const std::vector<double> ga = input_gradient(m, x, down);
        const auto f = [&](const std::vector<double>& p) {
            const std::vector<double> y = predict_raw(m, p);
            return down[0] * y[0] + down[1] * y[1];
        };
        const std::vector<double> gn = oracle::fd_gradient(f, x);
        for (int k = 0; k < 3; ++k)
            if (std::fabs(ga[k]) > 1e-7 || std::fabs(gn[k]) > 1e-7)
                CHECK(oracle::rel_err(ga[k], gn[k]) < 1e-4);
        ++checked;
    }
    CHECK(checked == 100);
}

TEST_CASE("a zero downstream vector gives a zero gradient") {
    Rng rng(5);
    const MlpModel m = tiny_model({2, 8, 2}, &rng);
    for (double g : input_gradient(m, {0.3, -0.4}, {0.0, 0.0})) CHECK(g == 0.0);
}

TEST_CASE("the rectifier kink uses subgradient zero") {
    MlpModel m = tiny_model({1, 1, 1});
    m.weights[0][0] = 1.0; // pre-activation equals the input
    m.weights[1][0] = 1.0;
    const std::vector<double> g = input_gradient(m, {0.0}, {1.0}); // pre-activation exactly 0
    CHECK(g[0] == 0.0);
}

TEST_CASE("accuracy is M_R / M under the rounding rule") {
    // constant predictor: 160 matching integer rows out of 200
    MlpModel m = tiny_model({1, 1});
    m.output_stats[0] = {7.0, 1.0}; // predicts 7 everywhere
    Dataset d;
    d.columns = {{"x0", Kind::Int}, {"y0", Kind::Int}};
    for (int i = 0; i < 200; ++i) d.rows.push_back({double(i), i < 160 ? 7.0 : 9.0});
    CHECK(accuracy(m, d) == 0.8);

    // real-kind outputs use the 1e-2 relative tolerance instead
    Dataset r = d;
    r.columns[1].kind = Kind::Real;
    for (auto& row : r.rows) row[1] = row[1] == 7.0 ? 7.05 : 9.0;
    CHECK(accuracy(m, r) == 0.8);

    CHECK_THROWS_AS(accuracy(m, Dataset{{{"x0", Kind::Int}, {"y0", Kind::Int}}, {}}), Error);
}

TEST_CASE("value_matches rule") {
    CHECK(value_matches(Kind::Int, 6.6, 7.0));
    CHECK_FALSE(value_matches(Kind::Int, 6.4, 7.0));
    CHECK(value_matches(Kind::Real, 100.5, 100.0));
    CHECK_FALSE(value_matches(Kind::Real, 102.0, 100.0));
    CHECK(value_matches(Kind::Real, 0.005, 0.0)); // absolute near zero
}

TEST_CASE("a perfect model scores accuracy 1 on its own generator") {
    const MlpModel m = linear_model(3.0, "x0", "y0");
    Dataset d;
    d.columns = {{"x0", Kind::Int}, {"y0", Kind::Int}};
    for (int i = -20; i <= 20; ++i) d.rows.push_back({double(i), double(3 * i)});
    CHECK(accuracy(m, d) == 1.0);
}

TEST_CASE("explain ranks inputs by absolute weight paths") {
    // single layer: scores are the column L1 norms
    MlpModel m = tiny_model({3, 2});
    m.weights[0] = {1.0, 0.0, -2.0,
                    3.0, 0.0, 1.0};
    m.input_names = {"a", "b", "c"};
    const auto scores = explain(m);
    REQUIRE(scores.size() == 3);
    CHECK(scores[0].first == "a"); // |1| + |3| = 4
    CHECK(scores[0].second == doctest::Approx(4.0));
    CHECK(scores[1].first == "c"); // |-2| + |1| = 3
    CHECK(scores[2].first == "b"); // all-zero column ranks last with score 0
    CHECK(scores[2].second == 0.0);

    // two layers: the dominant path dominates the score
    Rng rng(3);
    MlpModel deep = tiny_model({2, 4, 1}, &rng);
    for (size_t r = 0; r < 4; ++r) deep.weights[0][r * 2 + 1] = 0.0; // cut input 1 entirely
    const auto ds = explain(deep);
    CHECK(ds[1].first == "x1");
    CHECK(ds[1].second == 0.0);
}

TEST_CASE("save/load round-trips predictions bit-exactly") {
    Rng rng(606);
    MlpModel m = tiny_model({3, 8, 2}, &rng);
    for (auto& s : m.input_stats) s = {rng.uniform(-1, 1), rng.uniform(0.5, 2.0)};
    for (auto& s : m.output_stats) s = {rng.uniform(-1, 1), rng.uniform(0.5, 2.0)};
    const std::string text = save_to_string(m);
    const MlpModel back = load_from_string(text);
    for (int i = 0; i < 100; ++i) {
        const std::vector<double> x{rng.uniform(-9, 9), rng.uniform(-9, 9), rng.uniform(-9, 9)};
        const auto y1 = predict_raw(m, x);
        const auto y2 = predict_raw(back, x);
        CHECK(y1[0] == y2[0]); // bitwise
        CHECK(y1[1] == y2[1]);
    }
    CHECK(save_to_string(back) == text);
}

TEST_CASE("malformed model files are rejected") {
    Rng rng(607);
    const MlpModel m = tiny_model({2, 4, 1}, &rng);
    const std::string text = save_to_string(m);
    CHECK_THROWS_AS(load_from_string(text.substr(0, text.size() / 2)), FileFormatError);
    CHECK_THROWS_AS(load_from_string("not a model"), FileFormatError);
    // corrupt the declared shape of layer 0
    std::string bad = text;
    const auto pos = bad.find("layer 0 4 2");
    REQUIRE(pos != std::string::npos);
    bad.replace(pos, 11, "layer 0 4 3");
    CHECK_THROWS_AS(load_from_string(bad), FileFormatError);
}

TEST_CASE("training is bitwise deterministic for a fixed seed") {
    const Dataset d = line_dataset(400, 99, -5, 5, [](double x) { return 2 * x + 1; });
    TrainConfig tc;
    tc.seed = 1234;
    tc.max_epochs = 30;
    auto [m1, r1] = train(d, {"x"}, {"y"}, tc);
    auto [m2, r2] = train(d, {"x"}, {"y"}, tc);
    CHECK(save_to_string(m1) == save_to_string(m2));
    CHECK(r1.val_curve == r2.val_curve);
}

TEST_CASE("the returned model carries the best validation loss seen") {
    const Dataset d = line_dataset(60, 3, -5, 5, [](double x) { return x * x; });
    TrainConfig tc;
    tc.seed = 5;
    auto [model, report] = train(d, {"x"}, {"y"}, tc);
    REQUIRE_FALSE(report.val_curve.empty());
    double best = report.val_curve[0];
    for (double v : report.val_curve) best = std::min(best, v);
    CHECK(best <= report.val_curve.back());
    CHECK(report.epochs_run == (int)report.val_curve.size());
    if (report.stopped_early) CHECK(report.epochs_run < tc.max_epochs);
}

TEST_CASE("standardization makes training invariant to column rescaling") {
    TrainConfig tc;
    tc.seed = 21;
    const Dataset raw = line_dataset(600, 77, -5, 5, [](double x) { return 2 * x + 1; });
    Dataset scaled = raw;
    for (auto& row : scaled.rows) row[0] *= 1000.0; // x' = 1000x, same targets
    auto [m1, r1] = train(raw, {"x"}, {"y"}, tc);
    auto [m2, r2] = train(scaled, {"x"}, {"y"}, tc);
    for (double x : {-4.0, -1.0, 0.0, 2.5, 4.0}) {
        const double y1 = predict_raw(m1, {x})[0];
        const double y2 = predict_raw(m2, {1000.0 * x})[0];
        CHECK(value_matches(Kind::Real, y2, y1));
    }
}

} // TEST_SUITE
