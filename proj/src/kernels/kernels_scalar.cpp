#include <cmath>
#include <cstddef>

#include "actmon/kernels.hpp"

namespace actmon::kern {
namespace {

double dot_scalar(const double* x, const double* y, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
    return acc;
}

void axpy_scalar(double a, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

double sum_scalar(const double* x, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i];
    return acc;
}

double sum_sq_scalar(const double* x, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i] * x[i];
    return acc;
}

void min_max_scalar(const double* x, std::size_t n, double* lo, double* hi) {
    double mn = x[0], mx = x[0];
    for (std::size_t i = 1; i < n; ++i) {
        if (x[i] < mn) mn = x[i];
        if (x[i] > mx) mx = x[i];
    }
    *lo = mn;
    *hi = mx;
}

void adam_step_scalar(double* p, const double* g, double* m, double* v, std::size_t n, double lr,
                      double beta1, double beta2, double eps, double beta1_pow, double beta2_pow) {
    const double mc = 1.0 / (1.0 - beta1_pow);
    const double vc = 1.0 / (1.0 - beta2_pow);
    for (std::size_t i = 0; i < n; ++i) {
        m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
        v[i] = beta2 * v[i] + (1.0 - beta2) * (g[i] * g[i]);
        p[i] -= lr * (m[i] * mc) / (std::sqrt(v[i] * vc) + eps);
    }
}

}  // namespace

const Ops& scalar_ops() {
    static const Ops ops{
        "scalar",        dot_scalar,     axpy_scalar,
        sum_scalar,      sum_sq_scalar,  min_max_scalar,
        adam_step_scalar,
    };
    return ops;
}

}  // namespace actmon::kern
