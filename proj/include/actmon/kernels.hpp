#pragma once

#include <cstddef>
#include <vector>

namespace actmon::kern {

// Double-precision inner-loop kernels behind the LSTM math and the batch
// statistics. Each entry has a scalar reference implementation and, on x86,
// an AVX2 variant; the active table is chosen once at startup.
//
// axpy/adam_step/min_max are pure element-wise traversals and produce
// bit-identical results across backends. dot/sum/sum_sq are reductions whose
// lane-blocked accumulation order differs from the scalar left-to-right sum,
// so cross-backend comparisons are tolerance-based; within one backend all
// results are deterministic.
struct Ops {
    const char* name;

    double (*dot)(const double* x, const double* y, std::size_t n);
    // y += a * x
    void (*axpy)(double a, const double* x, double* y, std::size_t n);
    double (*sum)(const double* x, std::size_t n);
    double (*sum_sq)(const double* x, std::size_t n);
    void (*min_max)(const double* x, std::size_t n, double* lo, double* hi);
    // Bias-corrected Adam moment update over a flat parameter block:
    //   m = b1*m + (1-b1)*g;  v = b2*v + (1-b2)*g^2
    //   p -= lr * (m / (1-b1_pow)) / (sqrt(v / (1-b2_pow)) + eps)
    void (*adam_step)(double* p, const double* g, double* m, double* v, std::size_t n, double lr,
                      double beta1, double beta2, double eps, double beta1_pow, double beta2_pow);
};

const Ops& scalar_ops();

// Non-null when an AVX2 build of the kernels is compiled in; callers must
// still check avx2_supported() before using it.
const Ops* avx2_ops();
bool avx2_supported();

// Backend picked at first use: AVX2 when compiled in and supported by the
// CPU, else scalar. Environment variable ACTMON_KERNELS=scalar|avx2|auto
// overrides (requesting an unavailable backend falls back to scalar).
const Ops& active();

// Every compiled-in backend, for equivalence tests.
std::vector<const Ops*> all_backends();

}  // namespace actmon::kern
