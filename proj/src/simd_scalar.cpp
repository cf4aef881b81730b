// Scalar reference backend. Elementwise kernels replicate the AVX2 operation
// DAG exactly (same multiplies, same fma placement) so the two backends agree
// bit for bit; reductions use a plain sequential fma accumulator.

#include "homtom/simd.hpp"

#include <cmath>

namespace homtom::simd {
namespace {

void recurrence_step_scalar(std::size_t n, const double* x, const double* wj,
                            const double* wjm1, double b, double c, double* out) {
    for (std::size_t i = 0; i < n; ++i)
        out[i] = std::fma(2.0 * x[i], wj[i], -(b * wjm1[i])) * c;
}

void kernel_row_scalar(std::size_t n, const double* x, const double* um,
                       const double* um1, const double* vmd, const double* vmd1,
                       double a, double b, double* out) {
    for (std::size_t i = 0; i < n; ++i) {
        double r0 = ((4.0 * x[i]) * um[i]) * vmd[i];
        double r1 = (a * um1[i]) * vmd[i];
        double r2 = (b * um[i]) * vmd1[i];
        out[i] = (r0 - r1) - r2;
    }
}

void mul_scalar(std::size_t n, const double* a, const double* b, double* out) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

double dot_scalar(std::size_t n, const double* a, const double* b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc = std::fma(a[i], b[i], acc);
    return acc;
}

double dot_sq_scalar(std::size_t n, const double* a, const double* b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc = std::fma(a[i], b[i] * b[i], acc);
    return acc;
}

double sum_scalar(std::size_t n, const double* a) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i];
    return acc;
}

double sum_sq_scalar(std::size_t n, const double* a) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc = std::fma(a[i], a[i], acc);
    return acc;
}

}  // namespace

const Ops& scalar_ops() {
    static const Ops ops = {recurrence_step_scalar, kernel_row_scalar, mul_scalar,
                            dot_scalar, dot_sq_scalar, sum_scalar, sum_sq_scalar,
                            "scalar"};
    return ops;
}

}  // namespace homtom::simd
