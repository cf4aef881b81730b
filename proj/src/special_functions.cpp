#include "homtom/special_functions.hpp"

#include "homtom/simd.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace homtom {
namespace {

constexpr double kInvSqrtPi = std::numbers::inv_sqrtpi;

// Maclaurin series: D(y) = sum_k (-1)^k 2^k y^{2k+1} / (2k+1)!!, |y| <= 1.
double dawson_series(double y) {
    const double y2 = y * y;
    double term = y, sum = y;
    for (int k = 1; k < 40; ++k) {
        term *= -2.0 * y2 / (2.0 * k + 1.0);
        sum += term;
        if (std::abs(term) < 1e-18 * std::abs(sum)) break;
    }
    return sum;
}

// Sampling expansion over odd lattice points (h = 0.2); the discretization
// error is e^{-pi^2/(4h^2)} ~ 2e-27, so roundoff of the ~70-term sum dominates.
double dawson_rybicki(double y) {
    constexpr double h = 0.2;
    const int n_lo_raw = static_cast<int>(std::floor((y - 6.5) / h));
    const int n_hi_raw = static_cast<int>(std::ceil((y + 6.5) / h));
    int n = (n_lo_raw % 2 == 0) ? n_lo_raw + 1 : n_lo_raw;
    double sum = 0.0;
    for (; n <= n_hi_raw; n += 2) {
        const double t = y - n * h;
        sum += std::exp(-t * t) / n;
    }
    return kInvSqrtPi * sum;
}

// Asymptotic series D(y) ~ 1/(2y) sum_k (2k-1)!!/(2y^2)^k, |y| > 7.
double dawson_asymptotic(double y) {
    const double r = 1.0 / (2.0 * y * y);
    double term = 1.0, sum = 1.0;
    for (int k = 1; k < 60; ++k) {
        term *= (2.0 * k - 1.0) * r;
        sum += term;
        if (std::abs(term) < 1e-17 * std::abs(sum)) break;
    }
    return sum / (2.0 * y);
}

}  // namespace

double dawson(double y) {
    const double ay = std::abs(y);
    double r;
    if (ay <= 1.0)
        r = dawson_series(ay);
    else if (ay <= 7.0)
        r = dawson_rybicki(ay);
    else
        r = dawson_asymptotic(ay);
    return y < 0.0 ? -r : r;
}

EigenfunctionTable build_eigenfunction_table(int j_max, std::vector<double> x_grid) {
    if (j_max < 0) throw std::invalid_argument("j_max must be >= 0");
    const std::size_t nx = x_grid.size();
    for (double x : x_grid) {
        if (!std::isfinite(x)) throw std::invalid_argument("non-finite grid abscissa");
        // v_0 carries e^{x^2}; refuse grids whose edge is not representable.
        if (x * x > 700.0)
            throw std::overflow_error("e^{x^2} overflows double at |x| = " + std::to_string(std::abs(x)) +
                                      "; shrink the grid extent");
    }

    EigenfunctionTable t;
    t.j_max = j_max;
    t.x_grid = std::move(x_grid);
    const std::size_t rows = static_cast<std::size_t>(j_max) + 1;
    t.u.assign(rows * nx, 0.0);
    t.v.assign(rows * nx, 0.0);

    const double cu = std::pow(2.0 / std::numbers::pi, 0.25);
    const double ce = std::pow(2.0 * std::numbers::pi, 0.25);
    const auto& ops = simd::active();

    auto urow = [&](int j) { return t.u.data() + static_cast<std::size_t>(j) * nx; };
    auto vrow = [&](int j) { return t.v.data() + static_cast<std::size_t>(j) * nx; };

    std::vector<double> bigE(nx);
    for (std::size_t i = 0; i < nx; ++i) {
        const double x = t.x_grid[i];
        urow(0)[i] = cu * std::exp(-x * x);
        bigE[i] = ce * std::exp(x * x);
        vrow(0)[i] = bigE[i] * dawson(std::numbers::sqrt2 * x);
    }
    if (j_max >= 1) {
        for (std::size_t i = 0; i < nx; ++i) {
            const double x = t.x_grid[i];
            urow(1)[i] = 2.0 * x * urow(0)[i];
            // v_1 = (x - d/dx / 2) v_0 = 2x v_0 - E/sqrt(2); the closed form of
            // v_0' collapses the dawson term.
            vrow(1)[i] = 2.0 * x * vrow(0)[i] - bigE[i] / std::numbers::sqrt2;
        }
    }

    // u: upward recurrence is benign everywhere in the tabulated range.
    for (int j = 1; j < j_max; ++j)
        ops.recurrence_step(nx, t.x_grid.data(), urow(j), urow(j - 1),
                            std::sqrt(static_cast<double>(j)),
                            1.0 / std::sqrt(static_cast<double>(j + 1)), urow(j + 1));

    // v: upward on the contiguous |x| <= 3 block only.
    std::size_t lo = nx, hi = nx;
    for (std::size_t i = 0; i < nx; ++i)
        if (std::abs(t.x_grid[i]) <= 3.0) { lo = i; break; }
    if (lo < nx) {
        hi = lo;
        while (hi < nx && std::abs(t.x_grid[hi]) <= 3.0) ++hi;
        for (int j = 1; j < j_max; ++j)
            ops.recurrence_step(hi - lo, t.x_grid.data() + lo, vrow(j) + lo, vrow(j - 1) + lo,
                                std::sqrt(static_cast<double>(j)),
                                1.0 / std::sqrt(static_cast<double>(j + 1)), vrow(j + 1) + lo);
    }

    // v beyond |x| = 3: seeded downward pass normalized on v_0. Start well above
    // both j_max and the classical turning index so the wanted solution dominates.
    std::vector<double> w;
    for (std::size_t i = 0; i < nx; ++i) {
        const double x = t.x_grid[i];
        if (std::abs(x) <= 3.0 || j_max < 2) continue;
        const int jt = static_cast<int>(std::floor((x * x - 1.0) / 2.0));
        const int top = std::max(j_max, jt) + 10;
        w.assign(static_cast<std::size_t>(top) + 2, 0.0);
        w[top] = 1.0;
        for (int j = top; j >= 1; --j)
            w[j - 1] = (2.0 * x * w[j] - std::sqrt(j + 1.0) * w[j + 1]) / std::sqrt(static_cast<double>(j));
        const double scale = vrow(0)[i] / w[0];
        if (!std::isfinite(scale))
            throw std::overflow_error("irregular-solution normalization overflowed");
        for (int j = 1; j <= j_max; ++j) vrow(j)[i] = scale * w[j];
    }

    return t;
}

std::complex<double> parabolic_cylinder_neg(int p, double chix) {
    if (p < 1) throw std::invalid_argument("order must be >= 1");
    const double g = chix * chix;
    if (g > 700.0) throw std::overflow_error("e^{(chi x)^2} overflows double");

    // z = -2i chi x; D_0(z) = e^{-z^2/4} = e^{+g};
    // D_{-1}(z) = sqrt(pi/2) e^{z^2/4} erfc(z/sqrt(2)) splits into a decaying
    // real part and a growing imaginary dawson part at imaginary argument.
    const std::complex<double> z(0.0, -2.0 * chix);
    const double w = std::numbers::sqrt2 * chix;
    const double sqrt_half_pi = std::sqrt(std::numbers::pi / 2.0);
    std::complex<double> d_prev(std::exp(g), 0.0);  // order 0
    std::complex<double> d_cur(sqrt_half_pi * std::exp(-g), std::numbers::sqrt2 * std::exp(g) * dawson(w));

    constexpr double eps = 2.2e-16;
    double e_prev = eps * std::abs(d_prev);
    double e_cur = eps * std::abs(d_cur);
    const double az = std::abs(z);

    // D_{-k-1} = (D_{-k+1} - z D_{-k}) / k, with the roundoff bound propagated
    // through the same recurrence.
    for (int k = 1; k < p; ++k) {
        const std::complex<double> d_next = (d_prev - z * d_cur) / static_cast<double>(k);
        const double e_next = (e_prev + az * e_cur) / k + eps * std::abs(d_next);
        d_prev = d_cur;
        d_cur = d_next;
        e_prev = e_cur;
        e_cur = e_next;
    }
    if (e_cur > 1e-6 * std::abs(d_cur))
        throw precision_loss("parabolic cylinder recurrence lost accuracy at order -" +
                             std::to_string(p) + ", chi*x = " + std::to_string(chix));
    return d_cur;
}

}  // namespace homtom
