#if defined(__aarch64__)

#include "nsx/kernels.hpp"

#include <arm_neon.h>

// NEON variants, 2 doubles per vector.

namespace nsx::kern {
namespace {

double dot_neon(const double* a, const double* b, std::size_t n) {
    float64x2_t acc0 = vdupq_n_f64(0.0);
    float64x2_t acc1 = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 3 < n; i += 4) {
        acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
        acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
    }
    for (; i + 1 < n; i += 2) acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
    double acc = vaddvq_f64(acc0) + vaddvq_f64(acc1);
    for (; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

void axpy_neon(double alpha, const double* x, double* y, std::size_t n) {
    const float64x2_t va = vdupq_n_f64(alpha);
    std::size_t i = 0;
    for (; i + 1 < n; i += 2)
        vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
    for (; i < n; ++i) y[i] += alpha * x[i];
}

void matvec_neon(const double* w, std::size_t rows, std::size_t cols, const double* x,
                 const double* bias, double* y) {
    for (std::size_t r = 0; r < rows; ++r) {
        double acc = dot_neon(w + r * cols, x, cols);
        y[r] = bias ? acc + bias[r] : acc;
    }
}

void matvec_t_neon(const double* w, std::size_t rows, std::size_t cols, const double* x,
                   double* y) {
    for (std::size_t c = 0; c < cols; ++c) y[c] = 0.0;
    for (std::size_t r = 0; r < rows; ++r) axpy_neon(x[r], w + r * cols, y, cols);
}

void ger_neon(double* w, std::size_t rows, std::size_t cols, const double* u, const double* v,
              double alpha) {
    for (std::size_t r = 0; r < rows; ++r) axpy_neon(alpha * u[r], v, w + r * cols, cols);
}

void relu_neon(double* x, std::size_t n) {
    const float64x2_t zero = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 1 < n; i += 2) vst1q_f64(x + i, vmaxq_f64(vld1q_f64(x + i), zero));
    for (; i < n; ++i)
        if (x[i] < 0.0) x[i] = 0.0;
}

void relu_mask_neon(const double* pre, double* g, std::size_t n) {
    const float64x2_t zero = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 1 < n; i += 2) {
        const uint64x2_t mask = vcgtq_f64(vld1q_f64(pre + i), zero);
        const uint64x2_t gv = vreinterpretq_u64_f64(vld1q_f64(g + i));
        vst1q_f64(g + i, vreinterpretq_f64_u64(vandq_u64(gv, mask)));
    }
    for (; i < n; ++i)
        if (pre[i] <= 0.0) g[i] = 0.0;
}

double sumsq_diff_neon(const double* a, const double* b, std::size_t n) {
    float64x2_t acc = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 1 < n; i += 2) {
        const float64x2_t d = vsubq_f64(vld1q_f64(a + i), vld1q_f64(b + i));
        acc = vfmaq_f64(acc, d, d);
    }
    double s = vaddvq_f64(acc);
    for (; i < n; ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

} // namespace

namespace detail {
const KernelTable& neon_table() {
    static const KernelTable t = {dot_neon,  axpy_neon,      matvec_neon,
                                  matvec_t_neon, ger_neon,   relu_neon,
                                  relu_mask_neon, sumsq_diff_neon};
    return t;
}
} // namespace detail

} // namespace nsx::kern

#endif // __aarch64__
