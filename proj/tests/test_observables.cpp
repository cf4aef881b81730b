#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "homtom/kernels.hpp"
#include "homtom/observables.hpp"
#include "homtom/special_functions.hpp"
#include "homtom/states.hpp"

using namespace homtom;

namespace {

// Sum_n n z^n K(n,n,x) from the Laguerre generating function, in terms of
// the Dawson integral. As z -> 1 this resums to the photon-number kernel.
double weighted_diagonal_sum(double z, double x) {
    const double a = (1.0 + z) / (8.0 * (1.0 - z));
    const double y = x * std::sqrt(2.0 * (1.0 - z) / (1.0 + z));
    const double D = dawson(y);
    const double t1 = (1.0 - 2.0 * y * D) / (2.0 * a);
    const double t2 = (1.0 - 3.0 * y * D - y * y + 2.0 * y * y * y * D) /
                      (8.0 * a * a * (1.0 - z));
    return z / (2.0 * (1.0 - z) * (1.0 - z)) * (t1 - t2);
}

}  // namespace

TEST_CASE("kernel values at reference points") {
    auto fk = photon_number_kernel();
    CHECK(fk.f_of_x_phi(0.0, 0.0) == -0.5);
    CHECK(fk.f_of_x_phi(1.0, 0.0) == 1.5);
    // Phase independence.
    CHECK(fk.f_of_x_phi(0.7, 0.0) == fk.f_of_x_phi(0.7, 2.1));

    auto gk = photon_square_kernel();
    CHECK(gk.f_of_x_phi(0.0, 0.0) == 0.0);
    CHECK(gk.f_of_x_phi(1.0, 0.5) == doctest::Approx(8.0 / 3.0 - 2.0).epsilon(1e-15));
}

TEST_CASE("vacuum photon statistics") {
    auto s = measure_observables(StateSpec::vacuum());
    CHECK(std::abs(s.mean) < 1e-10);
    CHECK(std::abs(s.variance) < 1e-10);
    CHECK(s.sigma == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-9));
    CHECK(s.precision == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-9));
    CHECK(s.n_samples == 0);
    CHECK(s.std_error == 0.0);
    CHECK(homodyne_precision(StateSpec::vacuum()) ==
          doctest::Approx(0.70711).epsilon(1e-5));
}

TEST_CASE("coherent state photon statistics") {
    auto state = StateSpec::coherent(4.0);
    auto s = measure_observables(state);
    CHECK(s.mean == doctest::Approx(4.0).epsilon(1e-8));
    CHECK(s.variance == doctest::Approx(4.0).epsilon(1e-8));
    // sigma^2 = <F^2> - <n>^2 = 16.5 for this state.
    CHECK(s.sigma * s.sigma == doctest::Approx(16.5).epsilon(1e-8));
    CHECK(s.precision == doctest::Approx(5.0 / std::sqrt(2.0)).epsilon(1e-9));

    // Consistency triangle: sigma^2 = variance + precision^2.
    CHECK(s.sigma * s.sigma ==
          doctest::Approx(s.variance + s.precision * s.precision).epsilon(1e-10));

    // Closed form agrees with the integrated moments.
    CHECK(homodyne_precision(state) ==
          doctest::Approx(5.0 / std::sqrt(2.0)).epsilon(1e-12));

    auto [mean, sigma] = mean_photon_estimate(state, 1.0, ScanMode::deterministic);
    CHECK(mean == s.mean);
    CHECK(sigma == s.sigma);
    CHECK(photon_variance_estimate(state, 1.0, ScanMode::deterministic) == s.variance);
}

TEST_CASE("squeezed state variance matches the number-basis sums") {
    auto state = StateSpec::squeezed(4.0, 1.0);
    auto s = measure_observables(state);

    auto dm = theoretical_dm(state, 120);
    REQUIRE(dm.truncation_tail() < 1e-9);
    double n1 = 0.0, n2 = 0.0;
    for (int n = 0; n <= 120; ++n) {
        n1 += n * dm.elements(n, n).real();
        n2 += static_cast<double>(n) * n * dm.elements(n, n).real();
    }
    CHECK(s.mean == doctest::Approx(n1).epsilon(1e-7));
    CHECK(s.variance == doctest::Approx(n2 - n1 * n1).epsilon(1e-6));

    // Triangle and closed form hold here too.
    CHECK(s.sigma * s.sigma ==
          doctest::Approx(s.variance + s.precision * s.precision).epsilon(1e-10));
    CHECK(homodyne_precision(state) == doctest::Approx(s.precision).epsilon(1e-8));
}

TEST_CASE("number states have zero photon-number variance") {
    auto s = measure_observables(StateSpec::fock(5));
    CHECK(s.mean == doctest::Approx(5.0).epsilon(1e-8));
    CHECK(std::abs(s.variance) < 1e-7);
    // All estimator noise is added noise: epsilon^2 = (n^2 + n + 1)/2.
    CHECK(s.precision == doctest::Approx(std::sqrt(15.5)).epsilon(1e-8));
    CHECK(homodyne_precision(StateSpec::fock(5)) ==
          doctest::Approx(std::sqrt(15.5)).epsilon(1e-12));
}

TEST_CASE("sub-unit efficiency is rejected everywhere") {
    CHECK_THROWS_AS(measure_observables(StateSpec::coherent(4.0), 0.9),
                    std::domain_error);
    CHECK_THROWS_AS(measure_observables_mc(StateSpec::coherent(4.0), 0.99, 100, 0),
                    std::domain_error);
    HomodyneDataset ds;
    ds.state = StateSpec::coherent(1.0);
    ds.eta = 0.9;
    ds.records = {{0, 0.0, 0.5}};
    ds.n_records = 1;
    CHECK_THROWS_AS(measure_observables(ds), std::domain_error);

    CHECK_THROWS_AS(measure_observables_mc(StateSpec::coherent(1.0), 1.0, 0, 0),
                    std::invalid_argument);
    // Number states have no Gaussian sampler.
    CHECK_THROWS_AS(measure_observables_mc(StateSpec::fock(2), 1.0, 100, 0),
                    std::domain_error);
}

TEST_CASE("dataset averages match a hand computation") {
    HomodyneDataset ds;
    ds.state = StateSpec::coherent(1.0);
    ds.eta = 1.0;
    ds.f = 1;
    ds.records = {{0, 0.0, 0.0}, {0, 0.0, 1.0}};
    ds.n_records = 2;
    auto s = measure_observables(ds);
    CHECK(s.mean == doctest::Approx(0.5).epsilon(1e-15));          // (-1/2 + 3/2)/2
    CHECK(s.sigma == doctest::Approx(1.0).epsilon(1e-15));         // <F^2>=5/4
    CHECK(s.variance == doctest::Approx(1.0 / 12.0).epsilon(1e-12));
    CHECK(s.n_samples == 2);
    CHECK(s.std_error == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));

    auto [mean, sigma] = mean_photon_estimate(ds);
    CHECK(mean == s.mean);
    CHECK(sigma == s.sigma);
    CHECK(photon_variance_estimate(ds) == s.variance);

    ds.records.clear();
    CHECK_THROWS_AS(measure_observables(ds), std::invalid_argument);
}

TEST_CASE("sampled estimates agree with the deterministic moments") {
    auto state = StateSpec::coherent(4.0);
    const long n = 200000;
    auto mc = measure_observables_mc(state, 1.0, n, 99);
    auto det = measure_observables(state);

    CHECK(mc.n_samples == n);
    CHECK(mc.std_error == doctest::Approx(mc.sigma / std::sqrt(double(n))).epsilon(1e-12));
    CHECK(std::abs(mc.mean - det.mean) < 5.0 * mc.std_error);
    CHECK(mc.sigma == doctest::Approx(det.sigma).epsilon(0.03));

    // Bit reproducibility, and a different seed gives a different draw.
    auto again = measure_observables_mc(state, 1.0, n, 99);
    CHECK(again.mean == mc.mean);
    CHECK(again.sigma == mc.sigma);
    CHECK(measure_observables_mc(state, 1.0, n, 100).mean != mc.mean);
}

TEST_CASE("records from a simulated run reproduce the state moments") {
    ScanConfig cfg;
    cfg.f = 16;
    cfg.n_max = 3;
    cfg.mode = ScanMode::monte_carlo;
    cfg.samples_per_phase = 10000;
    auto exp = mc_experiment(StateSpec::coherent(4.0), 1.0, cfg, 5, true);
    auto s = measure_observables(exp.dataset);
    CHECK(std::abs(s.mean - 4.0) < 5.0 * s.std_error);
    CHECK(s.variance == doctest::Approx(4.0).epsilon(0.2));
}

TEST_CASE("diagonal kernel sums resum to the photon-number kernel") {
    auto spec = make_kernel_spec(1.0, 40);

    // K(n,n,0) alternates as 2(-1)^n, the seed of the resummation.
    for (int n : {0, 1, 2, 7})
        CHECK(kernel_point(spec, n, 0, 0.0, 0.0).real() ==
              doctest::Approx(2.0 * ((n % 2) ? -1.0 : 1.0)).epsilon(1e-12));

    // Partial sums of n z^n K(n,n,x) against the generating-function value;
    // the n > 30 tail is a few times 1e-5 at z = 0.65.
    for (double x : {0.0, 0.5, 1.0}) {
        double sum = 0.0;
        for (int n = 1; n <= 30; ++n)
            sum += n * std::pow(0.65, n) * kernel_point(spec, n, 0, x, 0.0).real();
        CHECK(sum == doctest::Approx(weighted_diagonal_sum(0.65, x)).epsilon(1e-3));
    }

    // z -> 1 limit of the generating function is F(x) = 2x^2 - 1/2.
    for (double x : {0.0, 0.7, 1.3})
        CHECK(weighted_diagonal_sum(1.0 - 1e-6, x) ==
              doctest::Approx(2.0 * x * x - 0.5).epsilon(1e-4));
}
