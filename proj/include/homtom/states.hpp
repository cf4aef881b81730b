#ifndef HOMTOM_STATES_H_
#define HOMTOM_STATES_H_

#include <complex>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "homtom/matrix.hpp"

namespace homtom {

enum class StateKind { coherent, squeezed, fock };

// Single-mode radiation state under study. Vacuum is coherent with zero mean
// photon number. For squeezed states the displacement energy is
// |alpha|^2 = mean_photons - sinh^2(squeeze_r) and must be non-negative.
struct StateSpec {
    StateKind kind = StateKind::coherent;
    double mean_photons = 0.0;
    double squeeze_r = 0.0;
    double squeeze_angle = 0.0;  // orientation theta of the squeezing ellipse
    double alpha_phase = 0.0;    // arg(alpha) of the displacement
    int fock_n = 0;

    static StateSpec coherent(double nbar, double alpha_ph = 0.0);
    static StateSpec squeezed(double nbar, double r, double theta = 0.0, double alpha_ph = 0.0);
    static StateSpec fock(int n);
    static StateSpec vacuum() { return coherent(0.0); }

    void validate() const;      // throws std::invalid_argument on bad field combos
    double alpha_mod() const;   // |alpha|
    std::complex<double> alpha() const;
};

// Gaussian quadrature-outcome law p_eta(x, phi): mean and standard deviation
// as functions of the local-oscillator phase. Detector efficiency eta < 1
// adds the convolution variance (1-eta)/(4*eta) on top of the ideal state
// variance (quadrature convention: vacuum variance 1/4).
struct QuadratureDistribution {
    std::function<double(double)> mean;
    std::function<double(double)> std_dev;
    double eta = 1.0;
};

// Throws std::domain_error for eta <= 0.5 (no valid smearing) and for fock
// states, whose non-Gaussian pdf is served by fock_quadrature_pdf instead.
QuadratureDistribution quadrature_pdf(const StateSpec& state, double eta);

// Extension: exact number-state quadrature pdf u_n(x)^2, unit efficiency only.
double fock_quadrature_pdf(int n, double x);

struct TheoreticalDensityMatrix {
    ComplexMatrix elements;  // rho_t(n, m), n, m = 0..n_max
    int n_max = 0;

    double trace() const;
    double truncation_tail() const { return 1.0 - trace(); }
};

TheoreticalDensityMatrix theoretical_dm(const StateSpec& state, int n_max);

// Fock amplitudes <n|state> for the pure states handled here, normalized over
// a tail long enough that the discarded weight is below 1e-12 of unity.
std::vector<std::complex<double>> state_amplitudes(const StateSpec& state, int n_max);

// One Gaussian draw of the quadrature at phase phi.
double sample_quadrature(const QuadratureDistribution& dist, double phi, std::mt19937_64& rng);

// Deterministic stream splitting: a distinct, reproducible engine per
// (seed, phase index, replicate) triple.
std::mt19937_64 make_stream(std::uint64_t seed, std::uint32_t phase_index, std::uint32_t replicate = 0);

}  // namespace homtom

#endif
