#ifndef HOMTOM_KERNELS_H_
#define HOMTOM_KERNELS_H_

#include "homtom/matrix.hpp"
#include "homtom/special_functions.hpp"

#include <complex>
#include <stdexcept>
#include <vector>

namespace homtom {

enum class KernelMethod { factorized, closed_form, quadrature_oracle };

// Raised when quadrature refinement cannot certify the requested residual.
struct quadrature_not_converged : std::runtime_error {
    double residual;
    explicit quadrature_not_converged(double r);
};

// chi^2 = eta / (2 eta - 1) is the effective Gaussian width of the smeared
// kernel integral; it diverges as eta -> 1/2, which bounds the domain below.
struct KernelSpec {
    double eta = 1.0;
    double chi = 1.0;
    int n_max = 0;
    KernelMethod method = KernelMethod::factorized;

    void validate() const;
};

KernelSpec make_kernel_spec(double eta, int n_max, KernelMethod method);
// Default routing: factorized at eta = 1, closed form below.
KernelSpec make_kernel_spec(double eta, int n_max);

// Largest |x| at which the factorized product of tabulated eigenfunctions
// holds ~1e-9 absolute accuracy in doubles; beyond it the table values are
// dominated by roundoff seeded at e^{2x^2} scale and the integral route takes
// over.
inline constexpr double kFactorizedXMax = 3.0;

// <m+d| K_phi(x) |m> = e^{i d phi} [4x u_m v_{m+d} - 2 sqrt(m+1) u_{m+1} v_{m+d}
//                                   - 2 sqrt(m+d+1) u_m v_{m+d+1}], unit efficiency.
// x must coincide with a grid point of the table (within 1e-9).
std::complex<double> kernel_eta1(int m, int d, double x, double phi,
                                 const EigenfunctionTable& table);

// Efficiency-smeared kernel, 0.5 < eta < 1: binomial sum over oscillator
// ladder terms, each an analytically continued Gaussian moment integral.
// Falls back to the direct integral route when the sum cancels catastrophically
// and throws precision_loss when both routes are unusable.
std::complex<double> kernel_eta_lt1(int m, int d, double x, double phi,
                                    const KernelSpec& spec);

// Slow independent reference: complex full-line k-integration with step and
// cutoff refinement, target 1e-8 absolute. Test use only.
std::complex<double> kernel_oracle(int m, int d, double x, const KernelSpec& spec);

// Routes to the method selected in the spec.
std::complex<double> kernel_point(const KernelSpec& spec, int m, int d, double x,
                                  double phi);

// Precomputed kernel values on an x grid, organized per diagonal for the
// phase-average contractions: block[d](m, ix) holds the real factor of
// <m+d| K_phi(x_ix) |m> with the e^{i d phi} carrier stripped.
struct KernelTable {
    KernelSpec spec;
    std::vector<double> x;
    std::vector<RealMatrix> block;
    // Worst-case absolute roundoff scale of the integral route, measured as
    // eps * sum |w f| over the quadrature; 0 when only the factorized route ran.
    double integration_error = 0.0;

    std::size_t nx() const { return x.size(); }
    double value(int m, int d, std::size_t ix) const {
        return block[static_cast<std::size_t>(d)](static_cast<std::size_t>(m), ix);
    }
};

KernelTable build_kernel_table(const KernelSpec& spec, std::vector<double> x_grid);

// Checks the ladder identities behind the factorized kernel: repeated
// application of -d/dx / 2 to the seed product u_0 v_0 must reproduce the
// binomial combinations of u_j v_{j+d} generated by the recurrence tables.
struct IdentityReport {
    int nu_max = 0;
    int d_max = 0;
    double max_residual = 0.0;       // worst |lhs - rhs| over all (nu, d) and x
    double max_seed_residual = 0.0;  // worst |(-d/2)^d u0 v0 - sqrt(d!) u0 v_d|
    RealMatrix residual;             // per (nu, d)

    bool pass(double tol) const { return max_residual < tol && max_seed_residual < tol; }
};

IdentityReport verify_appendix_identities(int nu_max, int d_max);

}  // namespace homtom

#endif
