#include "homtom/kernels.hpp"

#include "homtom/quadrature.hpp"
#include "homtom/simd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <utility>

namespace homtom {
namespace {

using cplx = std::complex<double>;

constexpr double kPi = std::numbers::pi;

// Route acceptance: the estimated absolute roundoff must stay well below the
// 1e-6 agreement level the smeared kernels are certified against.
constexpr double kAbsErrLimit = 5e-8;

// ln((m+d)!/m!)
double ln_factorial_ratio(int m, int d) {
    return std::lgamma(static_cast<double>(m + d + 1)) - std::lgamma(static_cast<double>(m + 1));
}

double binom(int n, int k) {
    if (k < 0 || k > n) return 0.0;
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r *= static_cast<double>(n - k + i) / static_cast<double>(i);
    return r;
}

cplx unit_phase(int d, double phi) { return std::polar(1.0, d * phi); }

// L_m^d(xi) by the upward recurrence; stable for the xi ranges the damped
// integrands visit.
double laguerre_md(int m, int d, double xi) {
    if (m == 0) return 1.0;
    double lp = 1.0;
    double lc = 1.0 + d - xi;
    for (int k = 1; k < m; ++k) {
        const double ln = ((2.0 * k + d + 1.0 - xi) * lc - (k + d) * lp) / (k + 1.0);
        lp = lc;
        lc = ln;
    }
    return lc;
}

// Node set for the half-line integral: the oscillator support ends near
// sqrt(4 j + 2); the +8 margin and the chi scaling keep the truncated tail
// below 1e-16 of the peak for every efficiency in the domain. Spacing
// resolves the fastest trig factor at >= 8 nodes per period.
QuadratureGrid kint_nodes(int j_top, double x_max, double chi) {
    const double s_hi = (std::sqrt(4.0 * j_top + 2.0) + 8.0) * std::max(1.0, chi);
    const double width = 10.0 * std::min(kPi / (8.0 * std::max(2.0 * x_max, 1.0)), 0.12);
    return panel_grid(0.0, s_hi, width, 12);
}

struct RouteValue {
    double value = 0.0;
    double abs_err = 0.0;  // estimated absolute roundoff
};

// K(m,d,x) = (-1)^{floor(d/2)} sqrt(m!/(m+d)!) * 2 *
//            int_0^inf s^{d+1} L_m^d(s^2) e^{-s^2/(2 chi^2)} T_d(2 s x) ds
// with T_d = cos for even d, sin for odd d.
RouteValue kint_point(int m, int d, double x, double chi) {
    const auto g = kint_nodes(m + d, std::abs(x), chi);
    const double pref =
        2.0 * (((d / 2) % 2) ? -1.0 : 1.0) * std::exp(-0.5 * ln_factorial_ratio(m, d));
    double acc = 0.0;
    double acc_abs = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double s = g.x[i];
        const double xi = s * s;
        const double env = g.w[i] * std::pow(s, d + 1) * laguerre_md(m, d, xi) *
                           std::exp(-xi / (2.0 * chi * chi));
        acc += env * ((d % 2 == 0) ? std::cos(2.0 * s * x) : std::sin(2.0 * s * x));
        acc_abs += std::abs(env);
    }
    RouteValue r;
    r.value = pref * acc;
    r.abs_err = std::numeric_limits<double>::epsilon() * std::abs(pref) * acc_abs;
    return r;
}

// I_p(y) = int_0^inf t^{p-1} e^{-t^2/2 + i y t} dt for p = 2 nu + d + 2,
// returned for all nu = 0..m at once. Evaluated on a rotated contour: the
// segment running up to the saddle contributes i^p A_p, the rotated ray
// e^{-3y^2/8} B_p; both pieces are O(1)-conditioned relative to |I_p|,
// unlike the p-recurrence, which amplifies along the dominant solution.
std::vector<cplx> ip_family(int m, int d, double y) {
    std::vector<cplx> out(static_cast<std::size_t>(m) + 1);
    if (y < 0.0) {
        out = ip_family(m, d, -y);
        for (auto& z : out) z = std::conj(z);
        return out;
    }
    if (y == 0.0) {
        for (int nu = 0; nu <= m; ++nu) {
            const double p = 2.0 * nu + d + 2.0;
            out[static_cast<std::size_t>(nu)] = std::exp2(0.5 * p - 1.0) * std::tgamma(0.5 * p);
        }
        return out;
    }
    const int p_max = 2 * m + d + 2;
    std::vector<double> A(static_cast<std::size_t>(m) + 1, 0.0);
    {
        const auto g = panel_grid(0.0, 0.5 * y, 0.2, 12);
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double s = g.x[i];
            const double s2 = s * s;
            double base = g.w[i] * std::pow(s, d + 1) * std::exp(0.5 * s2 - y * s);
            for (int nu = 0; nu <= m; ++nu) {
                A[static_cast<std::size_t>(nu)] += base;
                base *= s2;
            }
        }
    }
    std::vector<cplx> B(static_cast<std::size_t>(m) + 1, cplx(0.0, 0.0));
    {
        const double tau_max = std::sqrt(static_cast<double>(p_max)) + 9.0;
        const auto g = panel_grid(0.0, tau_max, std::min(0.5, kPi / (2.0 * y)), 12);
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double tau = g.x[i];
            const cplx z(tau, 0.5 * y);
            const cplx z2 = z * z;
            cplx base = g.w[i] * std::pow(z, d + 1) * std::exp(cplx(-0.5 * tau * tau, 0.5 * y * tau));
            for (int nu = 0; nu <= m; ++nu) {
                B[static_cast<std::size_t>(nu)] += base;
                base *= z2;
            }
        }
    }
    const double damp = std::exp(-0.375 * y * y);
    static constexpr cplx kIPow[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
    cplx ip = kIPow[(d + 2) % 4];  // i^{2 nu + d + 2} = i^{d+2} (-1)^nu
    for (int nu = 0; nu <= m; ++nu) {
        out[static_cast<std::size_t>(nu)] = ip * A[static_cast<std::size_t>(nu)] +
                                            damp * B[static_cast<std::size_t>(nu)];
        ip = -ip;
    }
    return out;
}

// Closed-form ladder sum:
// K = 2 chi^{d+2} sqrt(m!/(m+d)!) sum_nu (-1)^nu/nu! C(m+d, m-nu) chi^{2 nu}
//     Re{(-i)^d I_{2 nu + d + 2}(2 chi x)}.
// The factorial of the textbook parabolic-cylinder form is absorbed into I_p.
RouteValue nu_sum_point(int m, int d, double x, double chi) {
    const auto I = ip_family(m, d, 2.0 * chi * x);
    const int dm = d % 4;
    const auto re_part = [dm](cplx z) {
        switch (dm) {
            case 0: return z.real();
            case 1: return z.imag();
            case 2: return -z.real();
            default: return -z.imag();
        }
    };
    const double pref = 2.0 * std::pow(chi, d + 2) * std::exp(-0.5 * ln_factorial_ratio(m, d));
    double c = binom(m + d, m);
    double acc = 0.0;
    double mx = 0.0;
    for (int nu = 0; nu <= m; ++nu) {
        const double term = c * re_part(I[static_cast<std::size_t>(nu)]);
        acc += term;
        mx = std::max(mx, std::abs(term));
        c *= -(chi * chi) * static_cast<double>(m - nu) / ((nu + 1.0) * (d + nu + 1.0));
    }
    RouteValue r;
    r.value = pref * acc;
    r.abs_err = std::numeric_limits<double>::epsilon() * std::abs(pref) * mx *
                std::sqrt(static_cast<double>(m) + 1.0);
    if (!std::isfinite(r.value)) {
        r.value = 0.0;
        r.abs_err = std::numeric_limits<double>::infinity();
    }
    return r;
}

void check_indices(int m, int d, int n_max, const char* who) {
    if (m < 0 || d < 0) throw std::out_of_range(std::string(who) + ": negative index");
    if (m + d > n_max) throw std::out_of_range(std::string(who) + ": m + d exceeds n_max");
}

// One resolution pass of the independent full-line oracle integral.
cplx oracle_pass(int m, int d, double x, double chi, double width_scale, double hi_scale) {
    const double k_hi =
        2.0 * (std::sqrt(4.0 * (m + d) + 2.0) + 8.0) * std::max(1.0, chi) * hi_scale;
    const double width =
        20.0 * std::min(kPi / (8.0 * std::max(2.0 * std::abs(x), 1.0)), 0.12) * width_scale;
    const auto g = symmetric_panel_grid(k_hi, width, 12);
    static constexpr cplx kMinusIPow[4] = {{1, 0}, {0, -1}, {-1, 0}, {0, 1}};
    const double pref = std::exp(-0.5 * ln_factorial_ratio(m, d));
    cplx acc(0.0, 0.0);
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double k = g.x[i];
        const double xi = 0.25 * k * k;
        double halfk_d = 1.0;  // (k/2)^d
        for (int j = 0; j < d; ++j) halfk_d *= 0.5 * k;
        const double mag = g.w[i] * 0.25 * std::abs(k) * halfk_d * laguerre_md(m, d, xi) *
                           std::exp(-xi / (2.0 * chi * chi));
        acc += mag * cplx(std::cos(k * x), std::sin(k * x));
    }
    return pref * kMinusIPow[d % 4] * acc;
}

}  // namespace

quadrature_not_converged::quadrature_not_converged(double r)
    : std::runtime_error("quadrature did not converge; estimated residual " + std::to_string(r)),
      residual(r) {}

void KernelSpec::validate() const {
    if (!(eta > 0.5) || eta > 1.0)
        throw std::domain_error("KernelSpec: eta must lie in (0.5, 1]");
    if (n_max < 0) throw std::invalid_argument("KernelSpec: n_max must be >= 0");
    if (std::abs(chi - std::sqrt(eta / (2.0 * eta - 1.0))) > 1e-15)
        throw std::invalid_argument("KernelSpec: chi inconsistent with eta");
    if (method == KernelMethod::factorized && eta != 1.0)
        throw std::invalid_argument("KernelSpec: factorized method requires eta = 1");
}

KernelSpec make_kernel_spec(double eta, int n_max, KernelMethod method) {
    KernelSpec s;
    s.eta = eta;
    s.chi = (eta == 1.0) ? 1.0 : std::sqrt(eta / (2.0 * eta - 1.0));
    s.n_max = n_max;
    s.method = method;
    s.validate();
    return s;
}

KernelSpec make_kernel_spec(double eta, int n_max) {
    return make_kernel_spec(
        eta, n_max, eta == 1.0 ? KernelMethod::factorized : KernelMethod::closed_form);
}

std::complex<double> kernel_eta1(int m, int d, double x, double phi,
                                 const EigenfunctionTable& table) {
    if (m < 0 || d < 0) throw std::out_of_range("kernel_eta1: negative index");
    if (m + d + 1 > table.j_max)
        throw std::out_of_range("kernel_eta1: table rows end below m + d + 1");
    std::size_t ix = table.nx();
    for (std::size_t i = 0; i < table.nx(); ++i)
        if (std::abs(table.x_grid[i] - x) <= 1e-9) {
            ix = i;
            break;
        }
    if (ix == table.nx())
        throw std::invalid_argument("kernel_eta1: x does not lie on the table grid");
    const double k = 4.0 * x * table.u_at(m, ix) * table.v_at(m + d, ix) -
                     2.0 * std::sqrt(m + 1.0) * table.u_at(m + 1, ix) * table.v_at(m + d, ix) -
                     2.0 * std::sqrt(m + d + 1.0) * table.u_at(m, ix) * table.v_at(m + d + 1, ix);
    return unit_phase(d, phi) * k;
}

std::complex<double> kernel_eta_lt1(int m, int d, double x, double phi,
                                    const KernelSpec& spec) {
    spec.validate();
    if (spec.eta >= 1.0)
        throw std::invalid_argument(
            "kernel_eta_lt1: defined for eta < 1 only; use the factorized path at eta = 1");
    check_indices(m, d, spec.n_max, "kernel_eta_lt1");
    RouteValue r = nu_sum_point(m, d, x, spec.chi);
    if (r.abs_err > kAbsErrLimit) {
        const RouteValue f = kint_point(m, d, x, spec.chi);
        if (f.abs_err > kAbsErrLimit)
            throw precision_loss("kernel_eta_lt1: both evaluation routes lose precision at m=" +
                                 std::to_string(m) + " d=" + std::to_string(d) +
                                 " x=" + std::to_string(x) + " eta=" + std::to_string(spec.eta));
        r = f;
    }
    return unit_phase(d, phi) * r.value;
}

std::complex<double> kernel_oracle(int m, int d, double x, const KernelSpec& spec) {
    spec.validate();
    check_indices(m, d, spec.n_max, "kernel_oracle");
    const cplx a = oracle_pass(m, d, x, spec.chi, 1.0, 1.0);
    const cplx b = oracle_pass(m, d, x, spec.chi, 1.0 / 1.5, 1.2);
    if (std::abs(a - b) <= 1e-9) return b;
    const cplx c = oracle_pass(m, d, x, spec.chi, 1.0 / 2.25, 1.44);
    const double residual = std::abs(b - c);
    if (residual <= 1e-9) return c;
    throw quadrature_not_converged(residual);
}

std::complex<double> kernel_point(const KernelSpec& spec, int m, int d, double x, double phi) {
    spec.validate();
    check_indices(m, d, spec.n_max, "kernel_point");
    switch (spec.method) {
        case KernelMethod::factorized: {
            const auto table = build_eigenfunction_table(m + d + 1, {x});
            return kernel_eta1(m, d, x, phi, table);
        }
        case KernelMethod::closed_form:
            return kernel_eta_lt1(m, d, x, phi, spec);
        case KernelMethod::quadrature_oracle:
            return unit_phase(d, phi) * kernel_oracle(m, d, x, spec);
    }
    throw std::logic_error("kernel_point: unhandled method");
}

KernelTable build_kernel_table(const KernelSpec& spec, std::vector<double> x_grid) {
    spec.validate();
    if (x_grid.empty()) throw std::invalid_argument("build_kernel_table: empty x grid");
    KernelTable t;
    t.spec = spec;
    t.x = std::move(x_grid);
    const int n_top = spec.n_max;
    const std::size_t nx = t.x.size();
    t.block.reserve(static_cast<std::size_t>(n_top) + 1);
    for (int d = 0; d <= n_top; ++d) t.block.emplace_back(n_top + 1 - d, static_cast<int>(nx));

    std::vector<std::size_t> near;
    std::vector<std::size_t> far;
    for (std::size_t i = 0; i < nx; ++i)
        (spec.eta == 1.0 && std::abs(t.x[i]) <= kFactorizedXMax ? near : far).push_back(i);

    const auto& ops = simd::active();

    if (!near.empty()) {
        std::vector<double> xn(near.size());
        for (std::size_t i = 0; i < near.size(); ++i) xn[i] = t.x[near[i]];
        const auto ef = build_eigenfunction_table(n_top + 1, xn);
        std::vector<double> row(xn.size());
        for (int d = 0; d <= n_top; ++d) {
            auto& blk = t.block[static_cast<std::size_t>(d)];
            for (int m = 0; m + d <= n_top; ++m) {
                ops.kernel_row(xn.size(), xn.data(), ef.u_row(m), ef.u_row(m + 1),
                               ef.v_row(m + d), ef.v_row(m + d + 1), 2.0 * std::sqrt(m + 1.0),
                               2.0 * std::sqrt(m + d + 1.0), row.data());
                for (std::size_t i = 0; i < near.size(); ++i)
                    blk(m, static_cast<int>(near[i])) = row[i];
            }
        }
    }

    if (!far.empty()) {
        double x_max = 0.0;
        for (const auto i : far) x_max = std::max(x_max, std::abs(t.x[i]));
        const auto g = kint_nodes(n_top, x_max, spec.chi);
        const std::size_t nn = g.size();
        // Per-column trig factors so the node contraction is a plain dot.
        std::vector<double> tcos(far.size() * nn);
        std::vector<double> tsin(far.size() * nn);
        for (std::size_t i = 0; i < far.size(); ++i)
            for (std::size_t k = 0; k < nn; ++k) {
                const double arg = 2.0 * g.x[k] * t.x[far[i]];
                tcos[i * nn + k] = std::cos(arg);
                tsin[i * nn + k] = std::sin(arg);
            }
        std::vector<double> xi(nn), damp(nn), spow(nn), base(nn), core(nn);
        std::vector<double> lprev(nn), lcur(nn), lnext(nn);
        for (std::size_t k = 0; k < nn; ++k) {
            xi[k] = g.x[k] * g.x[k];
            damp[k] = std::exp(-xi[k] / (2.0 * spec.chi * spec.chi));
            spow[k] = g.x[k];
        }
        const double eps = std::numeric_limits<double>::epsilon();
        for (int d = 0; d <= n_top; ++d) {
            for (std::size_t k = 0; k < nn; ++k) {
                base[k] = g.w[k] * spow[k] * damp[k];
                lprev[k] = 1.0;              // L_0
                lcur[k] = 1.0 + d - xi[k];   // L_1
            }
            double lg = 0.0;  // ln((m+d)!/m!), starting at ln(d!)
            for (int k = 1; k <= d; ++k) lg += std::log(static_cast<double>(k));
            const double sgn = ((d / 2) % 2) ? -1.0 : 1.0;
            auto& blk = t.block[static_cast<std::size_t>(d)];
            const auto& trig = (d % 2 == 0) ? tcos : tsin;
            for (int m = 0; m + d <= n_top; ++m) {
                const double* lag = (m == 0) ? lprev.data() : lcur.data();
                ops.mul(nn, lag, base.data(), core.data());
                const double pref = 2.0 * sgn * std::exp(-0.5 * lg);
                double core_abs = 0.0;
                for (std::size_t k = 0; k < nn; ++k) core_abs += std::abs(core[k]);
                t.integration_error =
                    std::max(t.integration_error, eps * std::abs(pref) * core_abs);
                for (std::size_t i = 0; i < far.size(); ++i)
                    blk(m, static_cast<int>(far[i])) =
                        pref * ops.dot(nn, core.data(), &trig[i * nn]);
                lg += std::log(m + 1.0 + d) - std::log(m + 1.0);
                if (m >= 1 && m + 1 + d <= n_top) {
                    for (std::size_t k = 0; k < nn; ++k)
                        lnext[k] =
                            ((2.0 * m + d + 1.0 - xi[k]) * lcur[k] - (m + d) * lprev[k]) /
                            (m + 1.0);
                    std::swap(lprev, lcur);
                    std::swap(lcur, lnext);
                }
            }
            for (std::size_t k = 0; k < nn; ++k) spow[k] *= g.x[k];
        }
    }
    return t;
}

namespace {

// Products u_0 v_d and their derivatives close over pairs (P, Q) with
// F = P(x) G + Q(x), G = u_0 v_0 = sqrt(2) D(sqrt(2) x): the seed satisfies
// G' = -4 x G + 2 (u_0 E = sqrt(2) identically), so
// (-1/2 d/dx): (P, Q) -> (-(P' - 4 x P)/2, -(2 P + Q')/2).
struct PolyPair {
    std::vector<double> p, q;
};

PolyPair half_neg_derivative(const PolyPair& f) {
    PolyPair out;
    out.p.assign(f.p.size() + 1, 0.0);
    out.q.assign(std::max(f.p.size(), f.q.size()), 0.0);
    for (std::size_t k = 0; k < out.p.size(); ++k) {
        const double dp = (k + 1 < f.p.size()) ? (k + 1.0) * f.p[k + 1] : 0.0;
        const double xp = (k >= 1) ? 4.0 * f.p[k - 1] : 0.0;
        out.p[k] = -0.5 * (dp - xp);
    }
    for (std::size_t k = 0; k < out.q.size(); ++k) {
        const double pk = (k < f.p.size()) ? f.p[k] : 0.0;
        const double dq = (k + 1 < f.q.size()) ? (k + 1.0) * f.q[k + 1] : 0.0;
        out.q[k] = -0.5 * (2.0 * pk + dq);
    }
    return out;
}

double eval_poly(const std::vector<double>& c, double x) {
    double r = 0.0;
    for (auto it = c.rbegin(); it != c.rend(); ++it) r = r * x + *it;
    return r;
}

}  // namespace

IdentityReport verify_appendix_identities(int nu_max, int d_max) {
    if (nu_max < 0 || d_max < 0 || nu_max > 4 || d_max > 4)
        throw std::invalid_argument("verify_appendix_identities: nu_max, d_max must be in [0, 4]");
    std::vector<double> grid;
    for (double x = -3.0; x <= 3.0 + 1e-12; x += 0.05) grid.push_back(x);
    const auto ef = build_eigenfunction_table(nu_max + d_max + 1, grid);

    const int steps = 2 * nu_max + d_max;
    std::vector<PolyPair> der(static_cast<std::size_t>(steps) + 1);
    der[0] = PolyPair{{1.0}, {0.0}};
    for (int k = 1; k <= steps; ++k)
        der[static_cast<std::size_t>(k)] = half_neg_derivative(der[static_cast<std::size_t>(k - 1)]);

    const auto eval_pair = [&](const PolyPair& f, double x) {
        const double seed = std::numbers::sqrt2 * dawson(std::numbers::sqrt2 * x);
        return eval_poly(f.p, x) * seed + eval_poly(f.q, x);
    };

    IdentityReport rep;
    rep.nu_max = nu_max;
    rep.d_max = d_max;
    rep.residual = RealMatrix(nu_max + 1, d_max + 1);
    for (int d = 0; d <= d_max; ++d) {
        const double sqrt_dfact = std::exp(0.5 * std::lgamma(d + 1.0));
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const double lhs = eval_pair(der[static_cast<std::size_t>(d)], grid[i]);
            const double rhs = sqrt_dfact * ef.u_at(0, i) * ef.v_at(d, i);
            rep.max_seed_residual = std::max(rep.max_seed_residual, std::abs(lhs - rhs));
        }
        double nu_fact = 1.0;
        for (int nu = 0; nu <= nu_max; ++nu) {
            if (nu > 0) nu_fact *= nu;
            double worst = 0.0;
            for (std::size_t i = 0; i < grid.size(); ++i) {
                // lhs carries 1/nu!: (1/nu!) (-d/2)^{2 nu} u0 v_d
                const double lhs =
                    eval_pair(der[static_cast<std::size_t>(2 * nu + d)], grid[i]) /
                    (sqrt_dfact * nu_fact);
                double rhs = 0.0;
                for (int j = 0; j <= nu; ++j) {
                    const double cj = std::sqrt(binom(j + d, j)) *
                                      (((nu - j) % 2) ? -1.0 : 1.0) * binom(nu + d, j + d);
                    rhs += cj * ef.u_at(j, i) * ef.v_at(j + d, i);
                }
                worst = std::max(worst, std::abs(lhs - rhs));
            }
            rep.residual(nu, d) = worst;
            rep.max_residual = std::max(rep.max_residual, worst);
        }
    }
    return rep;
}

}  // namespace homtom
