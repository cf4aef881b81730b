#include "homtom/reconstruction.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <exception>
#include <functional>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <thread>

#include "homtom/kernels.hpp"
#include "homtom/quadrature.hpp"
#include "homtom/simd.hpp"

namespace homtom {
namespace {

constexpr double kPi = std::numbers::pi;

// Runs fn(0..n-1) on up to `threads` workers; any slot assignment is
// per-index, so callers that reduce slots in index order stay deterministic.
void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
    threads = std::clamp(threads, 1, n);
    if (threads <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (;;) {
            const int i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

const double* table_row(const KernelTable& t, int m, int d) {
    return &t.block[static_cast<std::size_t>(d)].a[static_cast<std::size_t>(m) * t.nx()];
}

double widest_pdf_reach(const QuadratureDistribution& dist, double n_std) {
    double reach = 0.0;
    for (int i = 0; i <= 720; ++i) {
        const double phi = kPi * i / 720.0;
        reach = std::max(reach, std::abs(dist.mean(phi)) + n_std * dist.std_dev(phi));
    }
    return reach;
}

// Deterministic scan state: the kernel tables are built once per (state,
// eta, n_max) and shared by every f in a search or sweep.
struct Engine {
    StateSpec state;
    double eta = 1.0;
    int n_max = 0;
    int threads = 1;
    XQuadrature resolved;
    QuadratureGrid base, fine;
    KernelTable tbase, tfine;
    std::vector<double> fock_pw_base, fock_pw_fine;  // fock pdf is phase independent
    std::optional<QuadratureDistribution> dist;

    int nd() const { return n_max + 1; }
};

Engine make_engine(const StateSpec& state, double eta, int n_max, const XQuadrature& xq,
                   int threads) {
    state.validate();
    if (!(eta > 0.5) || eta > 1.0) throw std::domain_error("eta must lie in (0.5, 1]");
    if (state.kind == StateKind::fock && eta != 1.0)
        throw std::domain_error("number states have no smeared pdf; eta must be 1");

    Engine e;
    e.state = state;
    e.eta = eta;
    e.n_max = n_max;
    e.threads = std::max(1, threads);
    e.resolved = xq;

    double need;
    if (state.kind == StateKind::fock) {
        need = 3.0 * std::sqrt(2.0 * state.fock_n + 1.0);
    } else {
        e.dist = quadrature_pdf(state, eta);
        need = widest_pdf_reach(*e.dist, 6.0);
    }
    if (e.resolved.extent == 0.0) {
        e.resolved.extent = need + 1.0;
    } else if (e.resolved.extent < need) {
        throw std::invalid_argument("x extent does not cover mean +/- 6 std of the pdf");
    }
    if (e.resolved.panel_width == 0.0) e.resolved.panel_width = default_panel_width(n_max);

    e.base = symmetric_panel_grid(e.resolved.extent, e.resolved.panel_width,
                                  e.resolved.nodes_per_panel);
    e.fine = symmetric_panel_grid(e.resolved.extent, e.resolved.panel_width,
                                  e.resolved.refined_nodes);
    const auto spec = make_kernel_spec(eta, n_max);
    e.tbase = build_kernel_table(spec, e.base.x);
    e.tfine = build_kernel_table(spec, e.fine.x);

    if (state.kind == StateKind::fock) {
        const auto fill = [&](const QuadratureGrid& g, std::vector<double>& pw) {
            pw.resize(g.size());
            for (std::size_t i = 0; i < g.size(); ++i)
                pw[i] = fock_quadrature_pdf(state.fock_n, g.x[i]) * g.w[i];
        };
        fill(e.base, e.fock_pw_base);
        fill(e.fine, e.fock_pw_fine);
    }
    return e;
}

void pdf_times_weights(const Engine& e, const QuadratureGrid& g, bool fine, double phi,
                       std::vector<double>& pw) {
    if (e.state.kind == StateKind::fock) {
        pw = fine ? e.fock_pw_fine : e.fock_pw_base;
        return;
    }
    const double mu = e.dist->mean(phi);
    const double sd = e.dist->std_dev(phi);
    const double norm = 1.0 / (sd * std::sqrt(2.0 * kPi));
    pw.resize(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double z = (g.x[i] - mu) / sd;
        pw[i] = norm * std::exp(-0.5 * z * z) * g.w[i];
    }
}

// x-integrals of p * K (and optionally p * K^2) for one phase, indexed (d, m).
void phase_moments(const Engine& e, const KernelTable& t, const QuadratureGrid& g, bool fine,
                   double phi, RealMatrix& first, RealMatrix* second) {
    const auto& ops = simd::active();
    std::vector<double> pw;
    pdf_times_weights(e, g, fine, phi, pw);
    const std::size_t nx = t.nx();
    for (int d = 0; d <= e.n_max; ++d)
        for (int m = 0; m + d <= e.n_max; ++m) {
            const double* row = table_row(t, m, d);
            first(d, m) = ops.dot(nx, pw.data(), row);
            if (second) (*second)(d, m) = ops.dot_sq(nx, pw.data(), row);
        }
}

struct MomentSet {
    std::vector<RealMatrix> first;   // per phase, (d, m)
    std::vector<RealMatrix> second;  // empty unless requested
};

MomentSet all_phase_moments(const Engine& e, const KernelTable& t, const QuadratureGrid& g,
                            bool fine, int f, bool want_second) {
    MomentSet ms;
    ms.first.assign(f, RealMatrix(e.nd(), e.nd()));
    if (want_second) ms.second.assign(f, RealMatrix(e.nd(), e.nd()));
    parallel_for(f, e.threads, [&](int k) {
        const double phi = k * kPi / f;
        phase_moments(e, t, g, fine, phi, ms.first[k], want_second ? &ms.second[k] : nullptr);
    });
    return ms;
}

// Uniform phase average with the e^{i d phi} carrier restored, Hermitian fill.
ComplexMatrix assemble_rho(const Engine& e, int f, const std::vector<RealMatrix>& first) {
    ComplexMatrix rho(e.nd(), e.nd());
    for (int k = 0; k < f; ++k) {
        const double phi = k * kPi / f;
        for (int d = 0; d <= e.n_max; ++d) {
            const auto carrier = std::polar(1.0, d * phi);
            for (int m = 0; m + d <= e.n_max; ++m) rho(m + d, m) += carrier * first[k](d, m);
        }
    }
    const double inv_f = 1.0 / f;
    for (int d = 0; d <= e.n_max; ++d)
        for (int m = 0; m + d <= e.n_max; ++m) {
            rho(m + d, m) *= inv_f;
            if (d > 0) rho(m, m + d) = std::conj(rho(m + d, m));
        }
    return rho;
}

RealMatrix deviation_from(const ComplexMatrix& rho, const StateSpec& state, int n_max) {
    const auto truth = theoretical_dm(state, n_max);
    RealMatrix dev(n_max + 1, n_max + 1);
    for (int n = 0; n <= n_max; ++n)
        for (int m = 0; m <= n_max; ++m) dev(n, m) = std::abs(rho(n, m) - truth.elements(n, m));
    return dev;
}

ScanConfig echo_config(const Engine& e, const ScanConfig& cfg) {
    ScanConfig out = cfg;
    out.x_quadrature = e.resolved;
    return out;
}

DensityMatrixEstimate deterministic_estimate(const Engine& e, const ScanConfig& cfg) {
    const auto mb = all_phase_moments(e, e.tbase, e.base, false, cfg.f, false);
    const auto mf = all_phase_moments(e, e.tfine, e.fine, true, cfg.f, false);
    const auto rho_b = assemble_rho(e, cfg.f, mb.first);
    const auto rho_f = assemble_rho(e, cfg.f, mf.first);

    DensityMatrixEstimate est;
    est.elements = rho_f;
    est.state = e.state;
    est.eta = e.eta;
    est.config = echo_config(e, cfg);
    est.quad_residual = RealMatrix(e.nd(), e.nd());
    for (int n = 0; n <= e.n_max; ++n)
        for (int m = 0; m <= e.n_max; ++m) {
            est.quad_residual(n, m) = std::abs(rho_f(n, m) - rho_b(n, m));
            est.max_quad_residual = std::max(est.max_quad_residual, est.quad_residual(n, m));
        }
    est.deviation = deviation_from(rho_f, e.state, e.n_max);
    return est;
}

// Monte Carlo support: a dense uniform-step kernel table read through
// Catmull-Rom interpolation, so samples landing anywhere (including the
// |x| > 3 region where the recurrences degrade) use table-quality values.
struct DenseKernel {
    KernelTable table;
    double x0 = 0.0, h = 0.0;
    int cols = 0;
    int n_max = 0;

    const double* row(int m, int d) const { return table_row(table, m, d); }

    void locate(double x, int& cell, double w[4]) const {
        double t = (x - x0) / h;
        t = std::clamp(t, 1.0, static_cast<double>(cols - 3));
        cell = std::min(static_cast<int>(t), cols - 4);
        const double u = t - cell;
        const double u2 = u * u, u3 = u2 * u;
        w[0] = -0.5 * u3 + u2 - 0.5 * u;
        w[1] = 1.5 * u3 - 2.5 * u2 + 1.0;
        w[2] = -1.5 * u3 + 2.0 * u2 + 0.5 * u;
        w[3] = 0.5 * u3 - 0.5 * u2;
    }

    double value(int m, int d, int cell, const double w[4]) const {
        const double* r = row(m, d) + (cell - 1);
        return w[0] * r[0] + w[1] * r[1] + w[2] * r[2] + w[3] * r[3];
    }
};

DenseKernel build_dense_kernel(double eta, int n_max, double extent) {
    DenseKernel dk;
    dk.n_max = n_max;
    dk.h = std::min(0.01, kPi / (32.0 * std::sqrt(4.0 * n_max + 2.0)));
    dk.cols = 2 * static_cast<int>(std::ceil(extent / dk.h)) + 5;
    dk.x0 = -0.5 * (dk.cols - 1) * dk.h;
    std::vector<double> xs(static_cast<std::size_t>(dk.cols));
    for (int i = 0; i < dk.cols; ++i) xs[static_cast<std::size_t>(i)] = dk.x0 + i * dk.h;
    dk.table = build_kernel_table(make_kernel_spec(eta, n_max), std::move(xs));
    return dk;
}

}  // namespace

void ScanConfig::validate() const {
    if (f < 1) throw std::invalid_argument("f must be >= 1");
    if (n_max < 0) throw std::invalid_argument("n_max must be >= 0");
    if (threads < 1) throw std::invalid_argument("threads must be >= 1");
    if (x_quadrature.nodes_per_panel < 2 || x_quadrature.refined_nodes < 2)
        throw std::invalid_argument("panel rules need at least 2 nodes");
    if (x_quadrature.panel_width < 0.0 || x_quadrature.extent < 0.0)
        throw std::invalid_argument("panel width and extent must be non-negative");
    if (mode == ScanMode::monte_carlo && samples_per_phase < 1)
        throw std::invalid_argument("monte carlo mode needs samples_per_phase >= 1");
}

double DensityMatrixEstimate::max_deviation() const {
    double mx = 0.0;
    for (const double d : deviation.a) mx = std::max(mx, d);
    return mx;
}

DensityMatrixEstimate reconstruct(const StateSpec& state, double eta, const ScanConfig& cfg) {
    cfg.validate();
    if (cfg.mode == ScanMode::monte_carlo) return mc_experiment(state, eta, cfg, 0).estimate;
    const Engine e = make_engine(state, eta, cfg.n_max, cfg.x_quadrature, cfg.threads);
    return deterministic_estimate(e, cfg);
}

std::optional<int> min_phases(const StateSpec& state, double eta, double threshold,
                              int f_search_max, int n_max, int threads) {
    if (threshold <= 0.0) throw std::invalid_argument("threshold must be positive");
    if (f_search_max < 1) throw std::invalid_argument("f_search_max must be >= 1");
    const Engine e = make_engine(state, eta, n_max, XQuadrature{}, threads);
    const auto truth = theoretical_dm(state, n_max);

    const auto max_dev_at = [&](int f) {
        const auto ms = all_phase_moments(e, e.tfine, e.fine, true, f, false);
        const auto rho = assemble_rho(e, f, ms.first);
        double mx = 0.0;
        for (int n = 0; n <= n_max; ++n)
            for (int m = 0; m <= n_max; ++m)
                mx = std::max(mx, std::abs(rho(n, m) - truth.elements(n, m)));
        return mx;
    };

    double dev_next = max_dev_at(1);
    for (int f = 1; f <= f_search_max; ++f) {
        const double dev_f = dev_next;
        dev_next = max_dev_at(f + 1);
        if (dev_f < threshold && dev_next < threshold) return f;
    }
    return std::nullopt;
}

std::vector<std::pair<int, double>> deviation_curve(const StateSpec& state, double eta, int n,
                                                    int m, const std::vector<int>& f_list,
                                                    int n_max, int threads) {
    if (n < 0 || m < 0 || n > n_max || m > n_max)
        throw std::out_of_range("element indexes exceed n_max");
    if (f_list.empty()) throw std::invalid_argument("f_list must be non-empty");
    for (const int f : f_list)
        if (f < 1) throw std::invalid_argument("f must be >= 1");

    const Engine e = make_engine(state, eta, n_max, XQuadrature{}, threads);
    const auto truth = theoretical_dm(state, n_max);
    std::vector<std::pair<int, double>> curve;
    curve.reserve(f_list.size());
    for (const int f : f_list) {
        const auto ms = all_phase_moments(e, e.tfine, e.fine, true, f, false);
        const auto rho = assemble_rho(e, f, ms.first);
        curve.emplace_back(f, std::abs(rho(n, m) - truth.elements(n, m)));
    }
    return curve;
}

ErrorMatrix statistical_errors(const StateSpec& state, double eta, const ScanConfig& cfg) {
    cfg.validate();
    if (cfg.mode != ScanMode::deterministic)
        throw std::invalid_argument("statistical_errors uses deterministic quadrature");
    const Engine e = make_engine(state, eta, cfg.n_max, cfg.x_quadrature, cfg.threads);

    // sigma from second moments minus the same-f first moments, per grid;
    // the grid-to-grid difference is the quadrature residual.
    const auto sigma_on = [&](const KernelTable& t, const QuadratureGrid& g, bool fine,
                              ErrorMatrix& out) {
        const auto ms = all_phase_moments(e, t, g, fine, cfg.f, true);
        const auto rho = assemble_rho(e, cfg.f, ms.first);
        out.re_sigma = RealMatrix(e.nd(), e.nd());
        out.im_sigma = RealMatrix(e.nd(), e.nd());
        out.sigma = RealMatrix(e.nd(), e.nd());
        for (int d = 0; d <= e.n_max; ++d)
            for (int m = 0; m + d <= e.n_max; ++m) {
                double re2 = 0.0, im2 = 0.0;
                for (int k = 0; k < cfg.f; ++k) {
                    const double dphi = d * (k * kPi / cfg.f);
                    const double c = std::cos(dphi), s = std::sin(dphi);
                    re2 += c * c * ms.second[k](d, m);
                    im2 += s * s * ms.second[k](d, m);
                }
                re2 /= cfg.f;
                im2 /= cfg.f;
                const auto mean = rho(m + d, m);
                const double vr = std::max(0.0, re2 - mean.real() * mean.real());
                const double vi = std::max(0.0, im2 - mean.imag() * mean.imag());
                const int n = m + d;
                out.re_sigma(n, m) = out.re_sigma(m, n) = std::sqrt(vr);
                out.im_sigma(n, m) = out.im_sigma(m, n) = std::sqrt(vi);
                out.sigma(n, m) = out.sigma(m, n) = std::sqrt(vr + vi);
            }
    };

    ErrorMatrix coarse, out;
    sigma_on(e.tbase, e.base, false, coarse);
    sigma_on(e.tfine, e.fine, true, out);
    out.quad_residual = RealMatrix(e.nd(), e.nd());
    for (int n = 0; n <= e.n_max; ++n)
        for (int m = 0; m <= e.n_max; ++m) {
            out.quad_residual(n, m) = std::abs(out.sigma(n, m) - coarse.sigma(n, m));
            out.max_quad_residual = std::max(out.max_quad_residual, out.quad_residual(n, m));
        }
    return out;
}

McExperiment mc_experiment(const StateSpec& state, double eta, const ScanConfig& cfg,
                           std::uint64_t seed, bool keep_records) {
    cfg.validate();
    if (cfg.mode != ScanMode::monte_carlo)
        throw std::invalid_argument("mc_experiment requires monte_carlo mode");
    state.validate();
    if (state.kind == StateKind::fock)
        throw std::invalid_argument("no sampler for number states");
    const auto dist = quadrature_pdf(state, eta);  // validates eta

    const int f = cfg.f;
    const long long S = cfg.samples_per_phase;
    const long long N = f * S;
    const int n_max = cfg.n_max;

    // 10 sigma of headroom; rarer samples are clamped to the table edge.
    const double extent = widest_pdf_reach(dist, 10.0) + 1.0;
    const DenseKernel dk = build_dense_kernel(eta, n_max, extent);

    const int nd = n_max + 1;
    std::vector<RealMatrix> s1(static_cast<std::size_t>(f), RealMatrix(nd, nd));
    std::vector<RealMatrix> s2(static_cast<std::size_t>(f), RealMatrix(nd, nd));
    std::vector<HomodyneRecord> records;
    if (keep_records) records.resize(static_cast<std::size_t>(N));

    parallel_for(f, cfg.threads, [&](int k) {
        auto rng = make_stream(seed, static_cast<std::uint32_t>(k));
        const double phi = k * kPi / f;
        auto& a1 = s1[static_cast<std::size_t>(k)];
        auto& a2 = s2[static_cast<std::size_t>(k)];
        double w[4];
        for (long long s = 0; s < S; ++s) {
            const double x = sample_quadrature(dist, phi, rng);
            if (keep_records)
                records[static_cast<std::size_t>(k) * S + s] = {k, phi, x};
            int cell;
            dk.locate(x, cell, w);
            for (int d = 0; d <= n_max; ++d)
                for (int m = 0; m + d <= n_max; ++m) {
                    const double v = dk.value(m, d, cell, w);
                    a1(d, m) += v;
                    a2(d, m) += v * v;
                }
        }
    });

    // fixed reduction order over phases keeps results thread-count invariant
    McExperiment out;
    out.seed = seed;
    out.n_records = N;
    out.estimate.elements = ComplexMatrix(nd, nd);
    out.std_error = RealMatrix(nd, nd);
    out.std_error_re = RealMatrix(nd, nd);
    out.std_error_im = RealMatrix(nd, nd);
    for (int d = 0; d <= n_max; ++d)
        for (int m = 0; m + d <= n_max; ++m) {
            double mre = 0.0, mim = 0.0, re2 = 0.0, im2 = 0.0;
            for (int k = 0; k < f; ++k) {
                const double dphi = d * (k * kPi / f);
                const double c = std::cos(dphi), s = std::sin(dphi);
                mre += c * s1[static_cast<std::size_t>(k)](d, m);
                mim += s * s1[static_cast<std::size_t>(k)](d, m);
                re2 += c * c * s2[static_cast<std::size_t>(k)](d, m);
                im2 += s * s * s2[static_cast<std::size_t>(k)](d, m);
            }
            mre /= N;
            mim /= N;
            re2 /= N;
            im2 /= N;
            const int n = m + d;
            out.estimate.elements(n, m) = {mre, mim};
            if (d > 0) out.estimate.elements(m, n) = {mre, -mim};
            const double ser = std::sqrt(std::max(0.0, re2 - mre * mre) / N);
            const double sei = std::sqrt(std::max(0.0, im2 - mim * mim) / N);
            out.std_error_re(n, m) = out.std_error_re(m, n) = ser;
            out.std_error_im(n, m) = out.std_error_im(m, n) = sei;
            out.std_error(n, m) = out.std_error(m, n) = std::sqrt(ser * ser + sei * sei);
        }

    out.estimate.state = state;
    out.estimate.eta = eta;
    out.estimate.config = cfg;
    out.estimate.deviation = deviation_from(out.estimate.elements, state, n_max);
    out.estimate.quad_residual = RealMatrix(nd, nd);

    out.dataset.state = state;
    out.dataset.eta = eta;
    out.dataset.f = f;
    out.dataset.n_records = N;
    out.dataset.seed = seed;
    out.dataset.records = std::move(records);
    return out;
}

DensityMatrixEstimate reconstruct_from_dataset(const HomodyneDataset& ds, int n_max) {
    if (ds.f < 1) throw std::invalid_argument("dataset has no phases");
    if (ds.records.empty()) throw std::invalid_argument("dataset has no records");
    if (n_max < 0) throw std::invalid_argument("n_max must be >= 0");
    ds.state.validate();

    double max_abs_x = 0.0;
    std::vector<long long> count(static_cast<std::size_t>(ds.f), 0);
    std::vector<double> phase_phi(static_cast<std::size_t>(ds.f), 0.0);
    for (const auto& r : ds.records) {
        if (r.phase_index < 0 || r.phase_index >= ds.f)
            throw std::invalid_argument("record phase index out of range");
        auto& n = count[static_cast<std::size_t>(r.phase_index)];
        if (n == 0)
            phase_phi[static_cast<std::size_t>(r.phase_index)] = r.phi;
        else if (std::abs(phase_phi[static_cast<std::size_t>(r.phase_index)] - r.phi) > 1e-12)
            throw std::invalid_argument("mixed phi values within one phase index");
        ++n;
        max_abs_x = std::max(max_abs_x, std::abs(r.x));
    }
    for (long long n : count)
        if (n == 0) throw std::invalid_argument("dataset is missing a scanning phase");

    const DenseKernel dk = build_dense_kernel(ds.eta, n_max, max_abs_x + 0.5);
    const int nd = n_max + 1;
    std::vector<RealMatrix> s1(static_cast<std::size_t>(ds.f), RealMatrix(nd, nd));
    double w[4];
    for (const auto& r : ds.records) {
        int cell;
        dk.locate(r.x, cell, w);
        auto& a1 = s1[static_cast<std::size_t>(r.phase_index)];
        for (int d = 0; d <= n_max; ++d)
            for (int m = 0; m + d <= n_max; ++m) a1(d, m) += dk.value(m, d, cell, w);
    }

    DensityMatrixEstimate est;
    est.elements = ComplexMatrix(nd, nd);
    for (int d = 0; d <= n_max; ++d)
        for (int m = 0; m + d <= n_max; ++m) {
            std::complex<double> acc = 0.0;
            for (int k = 0; k < ds.f; ++k)
                acc += std::polar(1.0, d * phase_phi[static_cast<std::size_t>(k)]) *
                       (s1[static_cast<std::size_t>(k)](d, m) /
                        static_cast<double>(count[static_cast<std::size_t>(k)]));
            est.elements(m + d, m) = acc / static_cast<double>(ds.f);
            if (d > 0) est.elements(m, m + d) = std::conj(est.elements(m + d, m));
        }

    est.state = ds.state;
    est.eta = ds.eta;
    est.config.f = ds.f;
    est.config.n_max = n_max;
    est.config.mode = ScanMode::monte_carlo;
    est.config.samples_per_phase = *std::max_element(count.begin(), count.end());
    est.deviation = deviation_from(est.elements, ds.state, n_max);
    est.quad_residual = RealMatrix(nd, nd);
    return est;
}

}  // namespace homtom
