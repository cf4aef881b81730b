#ifndef HOMTOM_SIMD_H_
#define HOMTOM_SIMD_H_

#include <cstddef>
#include <string_view>

namespace homtom::simd {

// Vector primitives shared by the table builders and the integrators.
//
// Elementwise kernels are pinned to an exact operation DAG (noted next to each
// pointer) so every backend produces bit-identical outputs; reductions are free
// to reassociate and are compared against the scalar backend with tolerances.
struct Ops {
    // out[i] = fma(2*x[i], wj[i], -(b*wjm1[i])) * c
    // One step of the three-term recurrence w_{j+1} = (2x w_j - sqrt(j) w_{j-1}) / sqrt(j+1).
    void (*recurrence_step)(std::size_t n, const double* x, const double* wj,
                            const double* wjm1, double b, double c, double* out);

    // out[i] = ((4*x[i])*um[i])*vmd[i] - (a*um1[i])*vmd[i] - (b*um[i])*vmd1[i]
    // Row of the factorized kernel; multiplies only, so lane order is irrelevant.
    void (*kernel_row)(std::size_t n, const double* x, const double* um,
                       const double* um1, const double* vmd, const double* vmd1,
                       double a, double b, double* out);

    // out[i] = a[i] * b[i]
    void (*mul)(std::size_t n, const double* a, const double* b, double* out);

    // sum_i a[i]*b[i]
    double (*dot)(std::size_t n, const double* a, const double* b);

    // sum_i a[i]*b[i]*b[i]  (second moments against a weight vector)
    double (*dot_sq)(std::size_t n, const double* a, const double* b);

    // sum_i a[i]
    double (*sum)(std::size_t n, const double* a);

    // sum_i a[i]*a[i]
    double (*sum_sq)(std::size_t n, const double* a);

    const char* name;
};

const Ops& scalar_ops();
const Ops& avx2_ops();   // only valid when avx2_available()
bool avx2_available();

// Runtime-selected backend: AVX2 when the CPU supports it, scalar otherwise.
const Ops& active();

// "auto", "scalar" or "avx2"; throws std::invalid_argument on unknown names
// and std::runtime_error when the requested ISA is not available.
void force_isa(std::string_view name);

}  // namespace homtom::simd

#endif
