#include "kernel_oracle_f128.hpp"

#include <quadmath.h>

#include <algorithm>
#include <cmath>
#include <vector>

namespace {

struct GaussRuleF128 {
    std::vector<__float128> node, weight;
};

GaussRuleF128 gauss_legendre_f128(int n) {
    GaussRuleF128 g;
    g.node.resize(n);
    g.weight.resize(n);
    for (int i = 0; i < n; ++i) {
        __float128 t = cosq(M_PIq * (4 * i + 3) / (4 * n + 2));
        __float128 dp = 1;
        for (int it = 0; it < 64; ++it) {
            __float128 p0 = 1, p1 = t;
            for (int k = 2; k <= n; ++k) {
                const __float128 p2 = ((2 * k - 1) * t * p1 - (k - 1) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (t * p1 - p0) / (t * t - 1);
            const __float128 dt = p1 / dp;
            t -= dt;
            if (fabsq(dt) < 1e-33Q) break;
        }
        g.node[i] = t;
        g.weight[i] = 2 / ((1 - t * t) * dp * dp);
    }
    return g;
}

__float128 laguerre_f128(int m, int d, __float128 xi) {
    if (m == 0) return 1;
    __float128 lp = 1, lc = 1 + d - xi;
    for (int k = 1; k < m; ++k) {
        const __float128 ln = ((2 * k + d + 1 - xi) * lc - (k + d) * lp) / (k + 1);
        lp = lc;
        lc = ln;
    }
    return lc;
}

// 2 (-1)^{floor(d/2)} sqrt(m!/(m+d)!) int_0^shi s^{d+1} L_m^d(s^2)
//   e^{-s^2/(2 chi^2)} T_d(2 s x) ds  at one panel width
__float128 kint_f128(int m, int d, __float128 x, __float128 chi, __float128 width) {
    static const GaussRuleF128 gl = gauss_legendre_f128(12);
    const __float128 one = 1;
    const __float128 s_hi = (sqrtq(4.0Q * (m + d) + 2.0Q) + 12.0Q) * std::max(chi, one);
    const int panels = static_cast<int>(ceilq(s_hi / width));
    __float128 acc = 0;
    for (int p = 0; p < panels; ++p) {
        const __float128 a = p * width;
        const __float128 b = std::min(a + width, s_hi);
        const __float128 mid = (a + b) / 2, half = (b - a) / 2;
        for (std::size_t i = 0; i < gl.node.size(); ++i) {
            const __float128 s = mid + half * gl.node[i];
            const __float128 xi = s * s;
            __float128 sp = 1;
            for (int j = 0; j <= d; ++j) sp *= s;
            const __float128 env =
                half * gl.weight[i] * sp * laguerre_f128(m, d, xi) * expq(-xi / (2 * chi * chi));
            acc += env * (d % 2 == 0 ? cosq(2 * s * x) : sinq(2 * s * x));
        }
    }
    const __float128 pref = 2.0Q * (((d / 2) % 2) ? -1.0Q : 1.0Q) *
                            expq(-0.5Q * (lgammaq(m + d + 1) - lgammaq(m + 1)));
    return pref * acc;
}

}  // namespace

double kernel_oracle_f128(int m, int d, double x, double eta, double* residual) {
    const __float128 chi =
        (eta == 1.0) ? 1.0Q : sqrtq(static_cast<__float128>(eta) / (2.0Q * eta - 1.0Q));
    const double w = 5.0 * std::min(M_PI / (8.0 * std::max(2.0 * std::abs(x), 1.0)), 0.12);
    const __float128 coarse = kint_f128(m, d, x, chi, w);
    const __float128 fine = kint_f128(m, d, x, chi, w / 1.6);
    if (residual) *residual = static_cast<double>(fabsq(fine - coarse));
    return static_cast<double>(fine);
}
