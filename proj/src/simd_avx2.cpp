// AVX2+FMA backend. Compiled with -mavx2 -mfma; only reached after the runtime
// CPU check in simd_dispatch.cpp. Tail elements reuse the same per-lane DAG.

#include "homtom/simd.hpp"

#include <cmath>
#include <immintrin.h>

namespace homtom::simd {
namespace {

void recurrence_step_avx2(std::size_t n, const double* x, const double* wj,
                          const double* wjm1, double b, double c, double* out) {
    const __m256d bv = _mm256_set1_pd(b);
    const __m256d cv = _mm256_set1_pd(c);
    const __m256d two = _mm256_set1_pd(2.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d xv = _mm256_loadu_pd(x + i);
        __m256d wv = _mm256_loadu_pd(wj + i);
        __m256d pv = _mm256_loadu_pd(wjm1 + i);
        __m256d tx = _mm256_mul_pd(two, xv);
        __m256d sub = _mm256_mul_pd(bv, pv);
        __m256d t = _mm256_fmsub_pd(tx, wv, sub);
        _mm256_storeu_pd(out + i, _mm256_mul_pd(t, cv));
    }
    for (; i < n; ++i)
        out[i] = std::fma(2.0 * x[i], wj[i], -(b * wjm1[i])) * c;
}

void kernel_row_avx2(std::size_t n, const double* x, const double* um,
                     const double* um1, const double* vmd, const double* vmd1,
                     double a, double b, double* out) {
    const __m256d av = _mm256_set1_pd(a);
    const __m256d bv = _mm256_set1_pd(b);
    const __m256d four = _mm256_set1_pd(4.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d xv = _mm256_loadu_pd(x + i);
        __m256d umv = _mm256_loadu_pd(um + i);
        __m256d um1v = _mm256_loadu_pd(um1 + i);
        __m256d vmdv = _mm256_loadu_pd(vmd + i);
        __m256d vmd1v = _mm256_loadu_pd(vmd1 + i);
        __m256d r0 = _mm256_mul_pd(_mm256_mul_pd(_mm256_mul_pd(four, xv), umv), vmdv);
        __m256d r1 = _mm256_mul_pd(_mm256_mul_pd(av, um1v), vmdv);
        __m256d r2 = _mm256_mul_pd(_mm256_mul_pd(bv, umv), vmd1v);
        _mm256_storeu_pd(out + i, _mm256_sub_pd(_mm256_sub_pd(r0, r1), r2));
    }
    for (; i < n; ++i) {
        double r0 = ((4.0 * x[i]) * um[i]) * vmd[i];
        double r1 = (a * um1[i]) * vmd[i];
        double r2 = (b * um[i]) * vmd1[i];
        out[i] = (r0 - r1) - r2;
    }
}

void mul_avx2(std::size_t n, const double* a, const double* b, double* out) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(out + i,
                         _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    for (; i < n; ++i) out[i] = a[i] * b[i];
}

double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double dot_avx2(std::size_t n, const double* a, const double* b) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc);
    double r = hsum(acc);
    for (; i < n; ++i) r = std::fma(a[i], b[i], r);
    return r;
}

double dot_sq_avx2(std::size_t n, const double* a, const double* b) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d bv = _mm256_loadu_pd(b + i);
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_mul_pd(bv, bv), acc);
    }
    double r = hsum(acc);
    for (; i < n; ++i) r = std::fma(a[i], b[i] * b[i], r);
    return r;
}

double sum_avx2(std::size_t n, const double* a) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(a + i));
    double r = hsum(acc);
    for (; i < n; ++i) r += a[i];
    return r;
}

double sum_sq_avx2(std::size_t n, const double* a) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d av = _mm256_loadu_pd(a + i);
        acc = _mm256_fmadd_pd(av, av, acc);
    }
    double r = hsum(acc);
    for (; i < n; ++i) r = std::fma(a[i], a[i], r);
    return r;
}

}  // namespace

const Ops& avx2_ops() {
    static const Ops ops = {recurrence_step_avx2, kernel_row_avx2, mul_avx2,
                            dot_avx2, dot_sq_avx2, sum_avx2, sum_sq_avx2, "avx2"};
    return ops;
}

}  // namespace homtom::simd
