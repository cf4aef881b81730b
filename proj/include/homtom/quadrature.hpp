#ifndef HOMTOM_QUADRATURE_H_
#define HOMTOM_QUADRATURE_H_

#include <cstddef>
#include <vector>

namespace homtom {

// Gauss-Legendre nodes and weights on [-1, 1], computed by Newton iteration
// on the Legendre polynomial; accurate to a few ulps for n <= 64.
struct GaussRule {
    std::vector<double> node;
    std::vector<double> weight;
};
GaussRule gauss_legendre(int n);

// Composite quadrature grid: ordered abscissas with matching weights.
struct QuadratureGrid {
    std::vector<double> x;
    std::vector<double> w;
    std::size_t size() const { return x.size(); }
};

// Composite Gauss-Legendre panels covering [lo, hi]; the last panel is
// shortened to land exactly on hi.
QuadratureGrid panel_grid(double lo, double hi, double panel_width, int nodes_per_panel);

// Symmetric grid on [-extent, extent] built by mirroring positive panels, so
// abscissas come in exact +/- pairs (parity-friendly).
QuadratureGrid symmetric_panel_grid(double extent, double panel_width, int nodes_per_panel);

// Default panel width for integrands carrying oscillator index j_max:
// >= 8 nodes per oscillation period, capped so low indexes still get panels
// fine enough for the Gaussian weight itself.
double default_panel_width(int j_max);

}  // namespace homtom

#endif
