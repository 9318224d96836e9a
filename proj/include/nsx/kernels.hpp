#pragma once

#include <cstddef>

// Numeric inner loops used by network training/inference and the gradient
// search. Every kernel has a scalar reference implementation plus SIMD
// variants (AVX2 on x86-64, NEON on aarch64) selected once at startup; the
// selection can be forced with the NSX_KERNELS environment variable
// ("scalar", "avx2", "neon", "auto") or programmatically for tests.
//
// SIMD variants are equivalence-tested against the scalar reference; they
// may differ from it only by floating-point reassociation in reductions.

namespace nsx::kern {

enum class Isa { Scalar, Avx2, Neon };

namespace detail {
struct KernelTable {
    double (*dot)(const double*, const double*, std::size_t);
    void (*axpy)(double, const double*, double*, std::size_t);
    void (*matvec)(const double*, std::size_t, std::size_t, const double*, const double*, double*);
    void (*matvec_t)(const double*, std::size_t, std::size_t, const double*, double*);
    void (*ger)(double*, std::size_t, std::size_t, const double*, const double*, double);
    void (*relu)(double*, std::size_t);
    void (*relu_mask)(const double*, double*, std::size_t);
    double (*sumsq_diff)(const double*, const double*, std::size_t);
};
const KernelTable& active();
const KernelTable& scalar_table();
#if defined(__x86_64__) || defined(_M_X64)
const KernelTable& avx2_table();
#endif
#if defined(__aarch64__)
const KernelTable& neon_table();
#endif
} // namespace detail

// Currently active instruction set.
Isa active_isa();
const char* isa_name(Isa isa);

// Force a specific ISA; returns false (and leaves the selection unchanged)
// when the requested ISA is not available on this machine.
bool set_isa(Isa isa);

// sum_i a[i]*b[i]
inline double dot(const double* a, const double* b, std::size_t n) {
    return detail::active().dot(a, b, n);
}

// y += alpha * x
inline void axpy(double alpha, const double* x, double* y, std::size_t n) {
    detail::active().axpy(alpha, x, y, n);
}

// y = W x + bias  (W is rows x cols, row-major; bias may be null)
inline void matvec(const double* w, std::size_t rows, std::size_t cols, const double* x,
                   const double* bias, double* y) {
    detail::active().matvec(w, rows, cols, x, bias, y);
}

// y = W^T x  (W is rows x cols, row-major; x has rows entries, y has cols)
inline void matvec_t(const double* w, std::size_t rows, std::size_t cols, const double* x,
                     double* y) {
    detail::active().matvec_t(w, rows, cols, x, y);
}

// W += alpha * u v^T  (rank-one update; u has rows entries, v has cols)
inline void ger(double* w, std::size_t rows, std::size_t cols, const double* u, const double* v,
                double alpha) {
    detail::active().ger(w, rows, cols, u, v, alpha);
}

// x = max(x, 0) elementwise
inline void relu(double* x, std::size_t n) { detail::active().relu(x, n); }

// g[i] = pre[i] > 0 ? g[i] : 0   (rectifier subgradient at 0 is 0)
inline void relu_mask(const double* pre, double* g, std::size_t n) {
    detail::active().relu_mask(pre, g, n);
}

// sum_i (a[i]-b[i])^2
inline double sumsq_diff(const double* a, const double* b, std::size_t n) {
    return detail::active().sumsq_diff(a, b, n);
}

} // namespace nsx::kern
