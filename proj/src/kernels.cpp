#include "nsx/kernels.hpp"

#include <cstdlib>
#include <cstring>

namespace nsx::kern {

namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void matvec_scalar(const double* w, std::size_t rows, std::size_t cols, const double* x,
                   const double* bias, double* y) {
    for (std::size_t r = 0; r < rows; ++r) {
        double acc = bias ? bias[r] : 0.0;
        const double* wr = w + r * cols;
        for (std::size_t c = 0; c < cols; ++c) acc += wr[c] * x[c];
        y[r] = acc;
    }
}

void matvec_t_scalar(const double* w, std::size_t rows, std::size_t cols, const double* x,
                     double* y) {
    for (std::size_t c = 0; c < cols; ++c) y[c] = 0.0;
    for (std::size_t r = 0; r < rows; ++r) {
        const double* wr = w + r * cols;
        const double xr = x[r];
        for (std::size_t c = 0; c < cols; ++c) y[c] += xr * wr[c];
    }
}

void ger_scalar(double* w, std::size_t rows, std::size_t cols, const double* u, const double* v,
                double alpha) {
    for (std::size_t r = 0; r < rows; ++r) {
        double* wr = w + r * cols;
        const double au = alpha * u[r];
        for (std::size_t c = 0; c < cols; ++c) wr[c] += au * v[c];
    }
}

void relu_scalar(double* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i)
        if (x[i] < 0.0) x[i] = 0.0;
}

void relu_mask_scalar(const double* pre, double* g, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i)
        if (pre[i] <= 0.0) g[i] = 0.0;
}

double sumsq_diff_scalar(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return acc;
}

bool isa_available(Isa isa) {
    switch (isa) {
    case Isa::Scalar:
        return true;
    case Isa::Avx2:
#if defined(__x86_64__) || defined(_M_X64)
        return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
        return false;
#endif
    case Isa::Neon:
#if defined(__aarch64__)
        return true;
#else
        return false;
#endif
    }
    return false;
}

const detail::KernelTable& table_for(Isa isa) {
    switch (isa) {
#if defined(__x86_64__) || defined(_M_X64)
    case Isa::Avx2:
        return detail::avx2_table();
#endif
#if defined(__aarch64__)
    case Isa::Neon:
        return detail::neon_table();
#endif
    default:
        return detail::scalar_table();
    }
}

Isa pick_initial() {
    if (const char* env = std::getenv("NSX_KERNELS")) {
        if (std::strcmp(env, "scalar") == 0) return Isa::Scalar;
        if (std::strcmp(env, "avx2") == 0 && isa_available(Isa::Avx2)) return Isa::Avx2;
        if (std::strcmp(env, "neon") == 0 && isa_available(Isa::Neon)) return Isa::Neon;
        // "auto" or unknown fall through to detection
    }
    if (isa_available(Isa::Avx2)) return Isa::Avx2;
    if (isa_available(Isa::Neon)) return Isa::Neon;
    return Isa::Scalar;
}

struct State {
    Isa isa;
    const detail::KernelTable* table;
    State() : isa(pick_initial()), table(&table_for(isa)) {}
};

State& state() {
    static State s;
    return s;
}

} // namespace

namespace detail {

const KernelTable& scalar_table() {
    static const KernelTable t = {dot_scalar,  axpy_scalar,      matvec_scalar,
                                  matvec_t_scalar, ger_scalar,   relu_scalar,
                                  relu_mask_scalar, sumsq_diff_scalar};
    return t;
}

const KernelTable& active() { return *state().table; }

} // namespace detail

Isa active_isa() { return state().isa; }

const char* isa_name(Isa isa) {
    switch (isa) {
    case Isa::Scalar: return "scalar";
    case Isa::Avx2: return "avx2";
    case Isa::Neon: return "neon";
    }
    return "?";
}

bool set_isa(Isa isa) {
    if (!isa_available(isa)) return false;
    state().isa = isa;
    state().table = &table_for(isa);
    return true;
}

} // namespace nsx::kern
