#ifndef HOMTOM_RECONSTRUCTION_H_
#define HOMTOM_RECONSTRUCTION_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "homtom/matrix.hpp"
#include "homtom/states.hpp"

namespace homtom {

enum class ScanMode { deterministic, monte_carlo };

// x-integration scheme: composite Gauss-Legendre panels on [-extent, extent].
// Zero fields are resolved per state: the panel width from the kernel
// oscillation at n_max, the extent from the widest quadrature pdf.
struct XQuadrature {
    int nodes_per_panel = 10;
    int refined_nodes = 12;   // refinement order backing the residual estimate
    double panel_width = 0.0;
    double extent = 0.0;
};

struct ScanConfig {
    int f = 1;                // number of scanning phases phi_k = k pi / f
    int n_max = 47;
    XQuadrature x_quadrature;
    ScanMode mode = ScanMode::deterministic;
    long long samples_per_phase = 0;  // Monte Carlo mode only
    int threads = 1;

    void validate() const;  // throws std::invalid_argument
};

// rho(n, m) measured by averaging kernel functions, with the absolute
// deviation from the theoretical matrix and the per-element x-integration
// residual (difference between the base and refined quadratures; entries
// above 1e-8 indicate a non-converged integral).
struct DensityMatrixEstimate {
    ComplexMatrix elements;
    RealMatrix deviation;
    ScanConfig config;
    StateSpec state;
    double eta = 1.0;
    RealMatrix quad_residual;
    double max_quad_residual = 0.0;

    double max_deviation() const;
};

// Statistical errors sigma(n, m) of the kernel averages: one standard
// deviation of the per-record kernel value under p_eta(x, phi). The
// experimental error for N records is sigma / sqrt(N); that rescaling is a
// reporting convention and is never applied to the stored matrices.
struct ErrorMatrix {
    RealMatrix sigma;     // |sigma(n,m)| = sqrt(re^2 + im^2)
    RealMatrix re_sigma;
    RealMatrix im_sigma;  // exactly zero on the diagonal
    std::string n_data_scaling =
        "divide by sqrt(N) for the experimental error of N homodyne records";
    RealMatrix quad_residual;
    double max_quad_residual = 0.0;
};

// Phase-scanned measurement of the density matrix: for each of the f phases
// phi_k = k pi / f the quadrature pdf is integrated against the kernels over
// x, then the phases are averaged with uniform weights 1/f. The Monte Carlo
// mode delegates to mc_experiment with seed 0. Fock states require eta = 1.
DensityMatrixEstimate reconstruct(const StateSpec& state, double eta, const ScanConfig& cfg);

// Smallest f <= f_search_max whose maximum deviation stays below the
// threshold at both f and f+1 (a single crossing can be accidental);
// nullopt when no such f exists in range. Deterministic quadrature only.
std::optional<int> min_phases(const StateSpec& state, double eta, double threshold = 1e-4,
                              int f_search_max = 128, int n_max = 47, int threads = 1);

// Deviation eps(n, m) of one element as a function of f.
std::vector<std::pair<int, double>> deviation_curve(const StateSpec& state, double eta, int n,
                                                    int m, const std::vector<int>& f_list,
                                                    int n_max = 47, int threads = 1);

// Second moments of the kernels under p_eta by deterministic quadrature;
// meaningful once cfg.f exceeds the state's f0 (the errors are then
// f-independent).
ErrorMatrix statistical_errors(const StateSpec& state, double eta, const ScanConfig& cfg);

// One homodyne record: outcome x measured at scanning phase phi_k.
struct HomodyneRecord {
    int phase_index = 0;
    double phi = 0.0;
    double x = 0.0;
};

struct HomodyneDataset {
    StateSpec state;
    double eta = 1.0;
    int f = 1;
    long long n_records = 0;
    std::uint64_t seed = 0;
    std::vector<HomodyneRecord> records;
};

// Simulated homodyne experiment: per-phase reproducible sample streams,
// kernel values interpolated from a dense table, per-element empirical
// standard errors of the mean (pooled over phases, matching the sigma
// convention). Reduction order is fixed by phase index, so results are
// bit-identical for any thread count. Keep_records retains the raw samples
// for persisting as a HomodyneDataset.
struct McExperiment {
    DensityMatrixEstimate estimate;
    RealMatrix std_error;     // sqrt(se_re^2 + se_im^2)
    RealMatrix std_error_re;
    RealMatrix std_error_im;
    long long n_records = 0;
    std::uint64_t seed = 0;
    HomodyneDataset dataset;  // records empty unless requested
};

McExperiment mc_experiment(const StateSpec& state, double eta, const ScanConfig& cfg,
                           std::uint64_t seed, bool keep_records = false);

// Dataset file: one JSON header line {state, eta, f, N, seed} followed by
// CSV rows phase_index,phi,x at full precision.
void write_dataset(const HomodyneDataset& ds, const std::filesystem::path& path);
HomodyneDataset read_dataset(const std::filesystem::path& path);

// Kernel averaging over recorded samples grouped by phase; phases are
// weighted uniformly regardless of per-phase record counts.
DensityMatrixEstimate reconstruct_from_dataset(const HomodyneDataset& ds, int n_max);

}  // namespace homtom

#endif
