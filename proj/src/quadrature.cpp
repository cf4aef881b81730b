#include "homtom/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace homtom {

GaussRule gauss_legendre(int n) {
    if (n < 1) throw std::invalid_argument("rule order must be >= 1");
    GaussRule r;
    r.node.assign(n, 0.0);
    r.weight.assign(n, 0.0);
    const int half = (n + 1) / 2;
    for (int i = 0; i < half; ++i) {
        // Chebyshev-like first guess, then Newton on P_n.
        double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
            }
            pp = n * (z * p0 - p1) / (z * z - 1.0);
            const double dz = p0 / pp;
            z -= dz;
            if (std::abs(dz) < 1e-15) break;
        }
        r.node[i] = -z;
        r.node[n - 1 - i] = z;
        r.weight[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        r.weight[n - 1 - i] = r.weight[i];
    }
    if (n % 2 == 1) r.node[n / 2] = 0.0;
    return r;
}

QuadratureGrid panel_grid(double lo, double hi, double panel_width, int nodes_per_panel) {
    if (!(hi > lo) || !(panel_width > 0.0)) throw std::invalid_argument("bad panel geometry");
    const GaussRule rule = gauss_legendre(nodes_per_panel);
    QuadratureGrid g;
    double a = lo;
    while (a < hi - 1e-12 * (hi - lo)) {
        const double b = std::min(a + panel_width, hi);
        const double c = 0.5 * (a + b), h = 0.5 * (b - a);
        for (int k = 0; k < nodes_per_panel; ++k) {
            g.x.push_back(c + h * rule.node[k]);
            g.w.push_back(h * rule.weight[k]);
        }
        a = b;
    }
    return g;
}

QuadratureGrid symmetric_panel_grid(double extent, double panel_width, int nodes_per_panel) {
    QuadratureGrid pos = panel_grid(0.0, extent, panel_width, nodes_per_panel);
    QuadratureGrid g;
    g.x.reserve(2 * pos.size());
    g.w.reserve(2 * pos.size());
    for (std::size_t i = pos.size(); i-- > 0;) {
        g.x.push_back(-pos.x[i]);
        g.w.push_back(pos.w[i]);
    }
    g.x.insert(g.x.end(), pos.x.begin(), pos.x.end());
    g.w.insert(g.w.end(), pos.w.begin(), pos.w.end());
    return g;
}

double default_panel_width(int j_max) {
    const double spacing = std::numbers::pi / (8.0 * std::sqrt(2.0 * std::max(1, j_max)));
    return std::min(10.0 * spacing, 0.75);
}

}  // namespace homtom
