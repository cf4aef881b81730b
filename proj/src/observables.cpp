#include "homtom/observables.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "homtom/quadrature.hpp"

namespace homtom {
namespace {

const double kPi = 3.14159265358979323846;

void require_unit_efficiency(double eta) {
    if (eta != 1.0)
        throw std::domain_error("observable kernels require unit detector efficiency");
}

struct KernelMoments {
    double f = 0.0;   // mean of the photon-number kernel
    double ff = 0.0;  // mean of its square
    double g = 0.0;   // mean of the photon-square kernel
};

ObservableSummary summarize(const KernelMoments& m, long n_samples) {
    ObservableSummary s;
    s.mean = m.f;
    s.sigma = std::sqrt(std::max(0.0, m.ff - m.f * m.f));
    s.variance = m.g - m.f * m.f;
    s.precision = std::sqrt(std::max(0.0, s.sigma * s.sigma - s.variance));
    s.n_samples = n_samples;
    if (n_samples > 0) s.std_error = s.sigma / std::sqrt(static_cast<double>(n_samples));
    return s;
}

// Exact first two photon-number moments. Gaussian states: <x^2> and <x^4>
// follow from the pdf mean and width, and their phase dependence is a trig
// polynomial of degree 4, so an 8-point uniform phase average is exact.
std::pair<double, double> exact_photon_moments(const StateSpec& state) {
    if (state.kind == StateKind::fock)
        return {static_cast<double>(state.fock_n), 0.0};
    const auto dist = quadrature_pdf(state, 1.0);
    double fsum = 0.0, gsum = 0.0;
    for (int k = 0; k < 8; ++k) {
        const double phi = k * kPi / 8.0;
        const double mu = dist.mean(phi);
        const double s2 = dist.std_dev(phi) * dist.std_dev(phi);
        const double m2 = mu * mu + s2;
        const double m4 = mu * mu * mu * mu + 6.0 * mu * mu * s2 + 3.0 * s2 * s2;
        fsum += 2.0 * m2 - 0.5;
        gsum += (8.0 / 3.0) * m4 - 2.0 * m2;
    }
    const double mean = fsum / 8.0;
    return {mean, gsum / 8.0 - mean * mean};
}

}  // namespace

ObservableKernel photon_number_kernel() {
    return {"photon_number", [](double x, double) { return 2.0 * x * x - 0.5; }};
}

ObservableKernel photon_square_kernel() {
    return {"photon_square", [](double x, double) {
                const double x2 = x * x;
                return (8.0 / 3.0) * x2 * x2 - 2.0 * x2;
            }};
}

ObservableSummary measure_observables(const StateSpec& state, double eta) {
    state.validate();
    require_unit_efficiency(eta);
    const auto fk = photon_number_kernel();
    const auto gk = photon_square_kernel();
    KernelMoments m;

    if (state.kind == StateKind::fock) {
        // The number-state pdf and both kernels are phase independent.
        const int n = state.fock_n;
        const double extent = std::sqrt(2.0 * n + 1.0) + 4.0;
        const auto grid = symmetric_panel_grid(extent, default_panel_width(n), 10);
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const double p = grid.w[i] * fock_quadrature_pdf(n, grid.x[i]);
            const double fv = fk.f_of_x_phi(grid.x[i], 0.0);
            m.f += p * fv;
            m.ff += p * fv * fv;
            m.g += p * gk.f_of_x_phi(grid.x[i], 0.0);
        }
        return summarize(m, 0);
    }

    const auto dist = quadrature_pdf(state, eta);
    // Phase content of the Gaussian x-moments tops out at the 4th harmonic,
    // so 16 uniform phases average them exactly.
    const int f = 16;
    double extent = 0.0, s_min = dist.std_dev(0.0);
    for (int k = 0; k <= 720; ++k) {
        const double phi = k * kPi / 720.0;
        const double s = dist.std_dev(phi);
        extent = std::max(extent, std::abs(dist.mean(phi)) + 10.0 * s + 1.0);
        s_min = std::min(s_min, s);
    }
    const auto grid = symmetric_panel_grid(extent, std::min(0.5, 4.0 * s_min), 10);
    for (int k = 0; k < f; ++k) {
        const double phi = k * kPi / f;
        const double mu = dist.mean(phi);
        const double s = dist.std_dev(phi);
        const double norm = 1.0 / (s * std::sqrt(2.0 * kPi));
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const double z = (grid.x[i] - mu) / s;
            const double p = grid.w[i] * norm * std::exp(-0.5 * z * z) / f;
            const double fv = fk.f_of_x_phi(grid.x[i], phi);
            m.f += p * fv;
            m.ff += p * fv * fv;
            m.g += p * gk.f_of_x_phi(grid.x[i], phi);
        }
    }
    return summarize(m, 0);
}

ObservableSummary measure_observables(const HomodyneDataset& dataset) {
    dataset.state.validate();
    require_unit_efficiency(dataset.eta);
    if (dataset.records.empty())
        throw std::invalid_argument("dataset holds no records");
    const auto fk = photon_number_kernel();
    const auto gk = photon_square_kernel();
    KernelMoments m;
    for (const auto& rec : dataset.records) {
        const double fv = fk.f_of_x_phi(rec.x, rec.phi);
        m.f += fv;
        m.ff += fv * fv;
        m.g += gk.f_of_x_phi(rec.x, rec.phi);
    }
    const double n = static_cast<double>(dataset.records.size());
    m.f /= n;
    m.ff /= n;
    m.g /= n;
    return summarize(m, static_cast<long>(dataset.records.size()));
}

ObservableSummary measure_observables_mc(const StateSpec& state, double eta,
                                         long n_samples, std::uint64_t seed) {
    state.validate();
    require_unit_efficiency(eta);
    if (n_samples < 1) throw std::invalid_argument("n_samples must be >= 1");
    const auto dist = quadrature_pdf(state, eta);
    const auto fk = photon_number_kernel();
    const auto gk = photon_square_kernel();
    auto rng = make_stream(seed, 0);
    std::uniform_real_distribution<double> uniform_phase(0.0, kPi);
    KernelMoments m;
    for (long i = 0; i < n_samples; ++i) {
        const double phi = uniform_phase(rng);
        const double x = sample_quadrature(dist, phi, rng);
        const double fv = fk.f_of_x_phi(x, phi);
        m.f += fv;
        m.ff += fv * fv;
        m.g += gk.f_of_x_phi(x, phi);
    }
    const double n = static_cast<double>(n_samples);
    m.f /= n;
    m.ff /= n;
    m.g /= n;
    return summarize(m, n_samples);
}

std::pair<double, double> mean_photon_estimate(const StateSpec& state, double eta,
                                               ScanMode mode, long n_samples,
                                               std::uint64_t seed) {
    const auto s = mode == ScanMode::deterministic
                       ? measure_observables(state, eta)
                       : measure_observables_mc(state, eta, n_samples, seed);
    return {s.mean, s.sigma};
}

std::pair<double, double> mean_photon_estimate(const HomodyneDataset& dataset) {
    const auto s = measure_observables(dataset);
    return {s.mean, s.sigma};
}

double photon_variance_estimate(const StateSpec& state, double eta, ScanMode mode,
                                long n_samples, std::uint64_t seed) {
    const auto s = mode == ScanMode::deterministic
                       ? measure_observables(state, eta)
                       : measure_observables_mc(state, eta, n_samples, seed);
    return s.variance;
}

double photon_variance_estimate(const HomodyneDataset& dataset) {
    return measure_observables(dataset).variance;
}

double homodyne_precision(const StateSpec& state) {
    state.validate();
    const auto [mean, variance] = exact_photon_moments(state);
    return std::sqrt(0.5 * (variance + mean * mean + mean + 1.0));
}

}  // namespace homtom
