#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <vector>

#include "homtom/reconstruction.hpp"
#include "homtom/states.hpp"

using namespace homtom;

namespace {

const double kPi = 3.14159265358979323846;

ScanConfig mc_config(int f, int n_max, long samples) {
    ScanConfig cfg;
    cfg.f = f;
    cfg.n_max = n_max;
    cfg.mode = ScanMode::monte_carlo;
    cfg.samples_per_phase = samples;
    return cfg;
}

}  // namespace

TEST_CASE("simulated experiments are reproducible bit for bit") {
    auto cfg = mc_config(8, 4, 1000);
    auto state = StateSpec::coherent(2.0);
    auto a = mc_experiment(state, 1.0, cfg, 42);
    auto b = mc_experiment(state, 1.0, cfg, 42);
    for (int n = 0; n <= 4; ++n)
        for (int m = 0; m <= 4; ++m) {
            CHECK(a.estimate.elements(n, m) == b.estimate.elements(n, m));
            CHECK(a.std_error(n, m) == b.std_error(n, m));
        }

    auto c = mc_experiment(state, 1.0, cfg, 43);
    CHECK(a.estimate.elements(0, 0) != c.estimate.elements(0, 0));
}

TEST_CASE("thread count does not change the sampled records") {
    auto cfg = mc_config(8, 5, 2000);
    auto state = StateSpec::squeezed(4.0, 1.0);
    cfg.threads = 1;
    auto a = mc_experiment(state, 0.9, cfg, 7);
    cfg.threads = 4;
    auto b = mc_experiment(state, 0.9, cfg, 7);
    for (int n = 0; n <= 5; ++n)
        for (int m = 0; m <= 5; ++m) {
            CHECK(a.estimate.elements(n, m) == b.estimate.elements(n, m));
            CHECK(a.std_error(n, m) == b.std_error(n, m));
        }
}

TEST_CASE("per-phase streams never collide") {
    // Regression guard: nearby seeds combined with small stream ids used to
    // alias each other's generators.
    std::vector<std::mt19937_64> engines;
    for (std::uint64_t seed = 1000; seed < 1032; ++seed)
        for (std::uint32_t phase = 0; phase < 16; ++phase)
            for (std::uint32_t rep = 0; rep < 2; ++rep)
                engines.push_back(make_stream(seed, phase, rep));
    int collisions = 0;
    for (std::size_t i = 0; i < engines.size(); ++i)
        for (std::size_t j = i + 1; j < engines.size(); ++j)
            if (engines[i] == engines[j]) ++collisions;
    CHECK(collisions == 0);
}

TEST_CASE("pooled standard error matches the single-record spread") {
    // se(n,m) ~= sigma(n,m)/sqrt(N) with N the total record count.
    const long samples = 20000;
    auto cfg = mc_config(16, 6, samples);
    auto state = StateSpec::coherent(4.0);
    auto exp = mc_experiment(state, 1.0, cfg, 11);
    const double n_total = 16.0 * samples;

    ScanConfig det;
    det.f = 16;
    det.n_max = 6;
    auto em = statistical_errors(state, 1.0, det);

    CHECK(exp.n_records == static_cast<long>(n_total));
    CHECK(exp.std_error(5, 5) * std::sqrt(n_total) ==
          doctest::Approx(em.sigma(5, 5)).epsilon(0.02));
    CHECK(exp.std_error(3, 1) * std::sqrt(n_total) ==
          doctest::Approx(em.sigma(3, 1)).epsilon(0.02));

    // Diagonal elements are exactly real, so their error is all in Re.
    for (int n = 0; n <= 6; ++n) {
        CHECK(exp.std_error_im(n, n) == 0.0);
        CHECK(exp.estimate.elements(n, n).imag() == 0.0);
        CHECK(exp.std_error(n, n) == exp.std_error_re(n, n));
    }
}

TEST_CASE("estimates land within a few standard errors of the truth") {
    auto cfg = mc_config(16, 6, 50000);
    auto state = StateSpec::coherent(4.0);
    auto exp = mc_experiment(state, 1.0, cfg, 2026);
    for (int n = 0; n <= 6; ++n)
        for (int m = 0; m <= n; ++m)
            CHECK(exp.estimate.deviation(n, m) <
                  5.0 * std::max(exp.std_error(n, m), 1e-12));
}

TEST_CASE("empirical error shrinks as 1/sqrt(N)") {
    const long sizes[] = {625, 6250, 62500};  // f=16 -> N = 1e4, 1e5, 1e6
    const int replicates = 12;
    auto state = StateSpec::coherent(4.0);
    std::vector<double> log_n, log_sd;
    for (const long samples : sizes) {
        auto cfg = mc_config(16, 5, samples);
        std::vector<double> vals;
        for (int r = 0; r < replicates; ++r)
            vals.push_back(
                mc_experiment(state, 1.0, cfg, 1000 + r).estimate.elements(5, 5).real());
        double mean = 0.0;
        for (const double v : vals) mean += v;
        mean /= replicates;
        double var = 0.0;
        for (const double v : vals) var += (v - mean) * (v - mean);
        var /= replicates - 1;
        log_n.push_back(std::log(16.0 * samples));
        log_sd.push_back(0.5 * std::log(var));
    }
    // Least-squares slope of log(sd) vs log(N).
    double mx = 0.0, my = 0.0;
    for (int i = 0; i < 3; ++i) {
        mx += log_n[i] / 3.0;
        my += log_sd[i] / 3.0;
    }
    double sxy = 0.0, sxx = 0.0;
    for (int i = 0; i < 3; ++i) {
        sxy += (log_n[i] - mx) * (log_sd[i] - my);
        sxx += (log_n[i] - mx) * (log_n[i] - mx);
    }
    const double slope = sxy / sxx;
    CHECK(slope == doctest::Approx(-0.5).epsilon(0.2));
}

TEST_CASE("record keeping fills a well-formed dataset") {
    auto cfg = mc_config(5, 3, 40);
    auto state = StateSpec::coherent(1.0);

    auto off = mc_experiment(state, 1.0, cfg, 1);
    CHECK(off.dataset.records.empty());
    CHECK(off.dataset.n_records == 5 * 40);

    auto on = mc_experiment(state, 1.0, cfg, 1, true);
    REQUIRE(on.dataset.records.size() == 5u * 40u);
    CHECK(on.dataset.f == 5);
    CHECK(on.dataset.seed == 1u);
    CHECK(on.dataset.eta == 1.0);
    for (int k = 0; k < 5; ++k)
        for (int s = 0; s < 40; ++s) {
            const auto& rec = on.dataset.records[static_cast<std::size_t>(k) * 40 + s];
            CHECK(rec.phase_index == k);
            CHECK(rec.phi == k * kPi / 5.0);
        }

    // Keeping records does not perturb the estimate.
    for (int n = 0; n <= 3; ++n)
        for (int m = 0; m <= 3; ++m)
            CHECK(on.estimate.elements(n, m) == off.estimate.elements(n, m));
}

TEST_CASE("mc_experiment rejects unsupported inputs") {
    auto cfg = mc_config(4, 3, 100);
    CHECK_THROWS_AS(mc_experiment(StateSpec::fock(2), 1.0, cfg, 0), std::invalid_argument);

    ScanConfig det;
    det.f = 4;
    det.n_max = 3;
    CHECK_THROWS_AS(mc_experiment(StateSpec::coherent(1.0), 1.0, det, 0),
                    std::invalid_argument);

    CHECK_THROWS_AS(mc_experiment(StateSpec::coherent(1.0), 0.5, cfg, 0),
                    std::domain_error);
}
