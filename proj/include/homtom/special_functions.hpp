#ifndef HOMTOM_SPECIAL_FUNCTIONS_H_
#define HOMTOM_SPECIAL_FUNCTIONS_H_

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace homtom {

// Raised when a guarded evaluation cannot meet its accuracy contract; callers
// either fall back to a quadrature route or surface the failure.
struct precision_loss : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// D(y) = e^{-y^2} \int_0^y e^{t^2} dt; relative accuracy 1e-12 for |y| <= 50.
double dawson(double y);

// Oscillator eigenfunctions tabulated on a fixed grid: u_j normalizable
// (decays like e^{-x^2}), v_j irregular (grows like e^{x^2}); their products
// stay O(1), which is what the factorized kernels consume. Row j is contiguous.
struct EigenfunctionTable {
    std::vector<double> x_grid;
    std::vector<double> u;  // (j_max+1) x nx
    std::vector<double> v;  // (j_max+1) x nx
    int j_max = 0;

    std::size_t nx() const { return x_grid.size(); }
    const double* u_row(int j) const { return u.data() + static_cast<std::size_t>(j) * nx(); }
    const double* v_row(int j) const { return v.data() + static_cast<std::size_t>(j) * nx(); }
    double u_at(int j, std::size_t i) const { return u_row(j)[i]; }
    double v_at(int j, std::size_t i) const { return v_row(j)[i]; }
};

// Seeds u_0, v_0 analytically and fills rows by the three-term recurrence
// 2x w_j = sqrt(j+1) w_{j+1} + sqrt(j) w_{j-1}. The u family recurses upward
// everywhere; the v family recurses upward only for |x| <= 3 and switches to
// a seeded downward (Miller) pass normalized on v_0 beyond, where upward
// recursion loses all accuracy to roundoff seeded at e^{2x^2} scale.
// Throws std::overflow_error when e^{x^2} is not representable at the grid edge.
EigenfunctionTable build_eigenfunction_table(int j_max, std::vector<double> x_grid);

// D_{-p}(-2i*chi*x) built downward from D_0 and D_{-1} through the three-term
// recurrence, with the imaginary-argument erfc expressed via dawson. Tracks a
// propagated roundoff bound and throws precision_loss when the estimated
// relative error exceeds 1e-6 (large p together with large |chi*x|).
std::complex<double> parabolic_cylinder_neg(int p, double chix);

}  // namespace homtom

#endif
