#include <doctest.h>

#include <cmath>
#include <vector>

#include "nsx/kernels.hpp"
#include "nsx/rng.hpp"

using namespace nsx;

namespace {

std::vector<double> random_vec(Rng& rng, size_t n, double scale = 2.0) {
    std::vector<double> v(n);
    for (auto& x : v) x = rng.uniform(-scale, scale);
    return v;
}

// Run fn under each available ISA; fn compares against the scalar reference.
template <typename Fn>
void for_each_isa(Fn fn) {
    const kern::Isa isas[] = {kern::Isa::Scalar, kern::Isa::Avx2, kern::Isa::Neon};
    const kern::Isa before = kern::active_isa();
    for (kern::Isa isa : isas) {
        if (!kern::set_isa(isa)) continue;
        INFO("isa = ", kern::isa_name(isa));
        fn();
    }
    kern::set_isa(before);
}

const size_t kSizes[] = {0, 1, 2, 3, 4, 5, 7, 8, 9, 15, 16, 17, 63, 64, 65, 127, 128, 1000};

} // namespace

TEST_SUITE("kernels") {

TEST_CASE("dot matches the scalar reference on every ISA") {
    Rng rng(101);
    for (size_t n : kSizes) {
        const auto a = random_vec(rng, n);
        const auto b = random_vec(rng, n);
        const double want = kern::detail::scalar_table().dot(a.data(), b.data(), n);
        for_each_isa([&] {
            const double got = kern::dot(a.data(), b.data(), n);
            CHECK(std::fabs(got - want) <= 1e-12 * (1.0 + std::fabs(want)) * double(n + 1));
        });
    }
}

TEST_CASE("axpy matches the scalar reference") {
    Rng rng(102);
    for (size_t n : kSizes) {
        const auto x = random_vec(rng, n);
        const auto y0 = random_vec(rng, n);
        auto want = y0;
        kern::detail::scalar_table().axpy(0.37, x.data(), want.data(), n);
        for_each_isa([&] {
            auto got = y0;
            kern::axpy(0.37, x.data(), got.data(), n);
            for (size_t i = 0; i < n; ++i) CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-13));
        });
    }
}

TEST_CASE("matvec and matvec_t match the scalar reference") {
    Rng rng(103);
    for (size_t rows : {1u, 2u, 5u, 64u})
        for (size_t cols : {1u, 3u, 8u, 33u}) {
            const auto w = random_vec(rng, rows * cols);
            const auto x = random_vec(rng, cols);
            const auto b = random_vec(rng, rows);
            const auto xt = random_vec(rng, rows);
            std::vector<double> want_y(rows), want_t(cols);
            kern::detail::scalar_table().matvec(w.data(), rows, cols, x.data(), b.data(),
                                                want_y.data());
            kern::detail::scalar_table().matvec_t(w.data(), rows, cols, xt.data(), want_t.data());
            for_each_isa([&] {
                std::vector<double> y(rows), t(cols);
                kern::matvec(w.data(), rows, cols, x.data(), b.data(), y.data());
                kern::matvec_t(w.data(), rows, cols, xt.data(), t.data());
                for (size_t i = 0; i < rows; ++i)
                    CHECK(y[i] == doctest::Approx(want_y[i]).epsilon(1e-12));
                for (size_t i = 0; i < cols; ++i)
                    CHECK(t[i] == doctest::Approx(want_t[i]).epsilon(1e-12));
            });
        }
}

TEST_CASE("ger matches the scalar reference") {
    Rng rng(104);
    const size_t rows = 7, cols = 13;
    const auto w0 = random_vec(rng, rows * cols);
    const auto u = random_vec(rng, rows);
    const auto v = random_vec(rng, cols);
    auto want = w0;
    kern::detail::scalar_table().ger(want.data(), rows, cols, u.data(), v.data(), -0.21);
    for_each_isa([&] {
        auto got = w0;
        kern::ger(got.data(), rows, cols, u.data(), v.data(), -0.21);
        for (size_t i = 0; i < got.size(); ++i)
            CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-13));
    });
}

TEST_CASE("relu and relu_mask implement the exact subgradient rule") {
    Rng rng(105);
    for (size_t n : kSizes) {
        auto pre = random_vec(rng, n);
        if (n > 2) pre[n / 2] = 0.0; // the kink: gradient must be masked to 0
        const auto g0 = random_vec(rng, n);
        for_each_isa([&] {
            auto x = pre;
            kern::relu(x.data(), n);
            for (size_t i = 0; i < n; ++i) CHECK(x[i] == std::max(pre[i], 0.0));
            auto g = g0;
            kern::relu_mask(pre.data(), g.data(), n);
            for (size_t i = 0; i < n; ++i) CHECK(g[i] == (pre[i] > 0.0 ? g0[i] : 0.0));
        });
    }
}

TEST_CASE("sumsq_diff matches the scalar reference") {
    Rng rng(106);
    for (size_t n : kSizes) {
        const auto a = random_vec(rng, n);
        const auto b = random_vec(rng, n);
        const double want = kern::detail::scalar_table().sumsq_diff(a.data(), b.data(), n);
        for_each_isa([&] {
            const double got = kern::sumsq_diff(a.data(), b.data(), n);
            CHECK(std::fabs(got - want) <= 1e-12 * (1.0 + want) * double(n + 1));
        });
    }
}

TEST_CASE("forcing an unavailable ISA is rejected") {
    const kern::Isa before = kern::active_isa();
    CHECK(kern::set_isa(kern::Isa::Scalar));
#if !defined(__aarch64__)
    CHECK_FALSE(kern::set_isa(kern::Isa::Neon));
#endif
#if !(defined(__x86_64__) || defined(_M_X64))
    CHECK_FALSE(kern::set_isa(kern::Isa::Avx2));
#endif
    CHECK(kern::set_isa(before));
}

} // TEST_SUITE
