#ifndef HOMTOM_OBSERVABLES_H_
#define HOMTOM_OBSERVABLES_H_

#include <cstdint>
#include <functional>
#include <string>
#include <utility>

#include "homtom/reconstruction.hpp"
#include "homtom/states.hpp"

namespace homtom {

// Function of one homodyne record whose statistical average over p(x, phi)
// equals an operator expectation value. Valid at unit detector efficiency
// only; there is no smeared variant here.
struct ObservableKernel {
    std::string name;
    std::function<double(double x, double phi)> f_of_x_phi;
};

// 2x^2 - 1/2: averages to the mean photon number. Depends on x only.
ObservableKernel photon_number_kernel();
// (8/3)x^4 - 2x^2: averages to the second moment of the photon number.
ObservableKernel photon_square_kernel();

// Photon statistics assembled from kernel averages over homodyne data.
struct ObservableSummary {
    double mean = 0.0;       // mean photon number
    double sigma = 0.0;      // single-record spread of the mean-photon kernel
    double variance = 0.0;   // intrinsic photon-number variance
    double precision = 0.0;  // added measurement noise sqrt(sigma^2 - variance)
    double std_error = 0.0;  // sigma / sqrt(N); 0 on the deterministic path
    long n_samples = 0;      // records averaged; 0 on the deterministic path
};

// Deterministic homodyning: integrates the kernels against p(x, phi) over a
// uniform phase scan. Throws std::domain_error unless eta == 1.
ObservableSummary measure_observables(const StateSpec& state, double eta = 1.0);

// Averages the kernels over recorded data. The dataset must hold eta = 1
// records; anything else throws std::domain_error.
ObservableSummary measure_observables(const HomodyneDataset& dataset);

// Draws n_samples records at uniformly random phases on [0, pi) and
// averages. Reproducible via the shared stream-splitting scheme.
ObservableSummary measure_observables_mc(const StateSpec& state, double eta,
                                         long n_samples, std::uint64_t seed);

// Mean photon number and the spread of its single-record estimator.
std::pair<double, double> mean_photon_estimate(const StateSpec& state, double eta,
                                               ScanMode mode, long n_samples = 0,
                                               std::uint64_t seed = 0);
std::pair<double, double> mean_photon_estimate(const HomodyneDataset& dataset);

// Intrinsic photon-number variance.
double photon_variance_estimate(const StateSpec& state, double eta, ScanMode mode,
                                long n_samples = 0, std::uint64_t seed = 0);
double photon_variance_estimate(const HomodyneDataset& dataset);

// Closed-form precision for homodyning the photon number:
// sqrt((variance + mean^2 + mean + 1) / 2), from exact state moments.
double homodyne_precision(const StateSpec& state);

}  // namespace homtom

#endif
