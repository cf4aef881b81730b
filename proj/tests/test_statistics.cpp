#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "homtom/reconstruction.hpp"
#include "homtom/states.hpp"

using namespace homtom;

namespace {

double spearman(const std::vector<double>& v) {
    const int n = static_cast<int>(v.size());
    std::vector<double> rank(n);
    for (int i = 0; i < n; ++i) {
        double r = 1.0;
        for (int j = 0; j < n; ++j)
            if (v[j] < v[i] || (v[j] == v[i] && j < i)) r += 1.0;
        rank[i] = r;
    }
    double d2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double d = rank[i] - (i + 1);
        d2 += d * d;
    }
    return 1.0 - 6.0 * d2 / (n * (double(n) * n - 1.0));
}

ErrorMatrix errors_for(const StateSpec& state, double eta, int f, int n_max) {
    ScanConfig cfg;
    cfg.f = f;
    cfg.n_max = n_max;
    return statistical_errors(state, eta, cfg);
}

}  // namespace

TEST_CASE("single-record spread of selected elements") {
    auto coh = errors_for(StateSpec::coherent(4.0), 1.0, 64, 10);
    CHECK(coh.sigma(5, 5) == doctest::Approx(1.349278).epsilon(2e-6));
    auto sq = errors_for(StateSpec::squeezed(4.0, 1.0), 1.0, 64, 10);
    CHECK(sq.sigma(5, 5) == doctest::Approx(1.320714).epsilon(2e-6));
    CHECK(coh.max_quad_residual < 1e-4);
    CHECK(sq.max_quad_residual < 1e-4);
    CHECK(coh.n_data_scaling.find("sqrt(N)") != std::string::npos);
}

TEST_CASE("diagonal error parts are exactly real") {
    auto em = errors_for(StateSpec::coherent(4.0), 1.0, 16, 8);
    for (int n = 0; n <= 8; ++n) {
        CHECK(em.im_sigma(n, n) == 0.0);
        CHECK(em.re_sigma(n, n) > 0.0);
        CHECK(em.sigma(n, n) == em.re_sigma(n, n));
    }
    // The matrix of total spreads is symmetric and non-negative.
    for (int n = 0; n <= 8; ++n)
        for (int m = 0; m <= 8; ++m) {
            CHECK(em.sigma(n, m) == em.sigma(m, n));
            CHECK(em.sigma(n, m) >= 0.0);
        }
}

TEST_CASE("diagonal errors saturate at sqrt(2) for large n") {
    const double root2 = std::sqrt(2.0);
    for (auto state : {StateSpec::coherent(4.0), StateSpec::squeezed(4.0, 1.0)}) {
        auto em = errors_for(state, 1.0, 64, 47);
        for (int n = 30; n <= 47; ++n)
            CHECK(std::abs(em.sigma(n, n) / root2 - 1.0) < 0.05);
        // Far from saturation the spread is visibly smaller.
        CHECK(em.sigma(0, 0) < 1.1);
    }
}

TEST_CASE("off-diagonal errors grow with distance from the diagonal") {
    auto em = errors_for(StateSpec::coherent(4.0), 1.0, 64, 25);
    std::vector<double> vals;
    for (int d = 0; d <= 20; ++d) vals.push_back(em.sigma(5 + d, 5));
    CHECK(spearman(vals) >= 0.9);
    CHECK(em.sigma(18, 5) == doctest::Approx(1.658582).epsilon(2e-6));
}

TEST_CASE("errors grow as the detector efficiency drops") {
    const double etas[] = {1.0, 0.99, 0.97, 0.95, 0.9};
    const double frozen[] = {1.349278, 1.454724, 1.708849, 2.037384, 3.394534};
    double prev = 0.0;
    for (int i = 0; i < 5; ++i) {
        auto em = errors_for(StateSpec::coherent(4.0), etas[i], 64, 10);
        const double s = em.sigma(5, 5);
        CHECK(s == doctest::Approx(frozen[i]).epsilon(2e-4));
        CHECK(s > prev);
        prev = s;
    }
}

TEST_CASE("near-unit efficiency removes the saturation plateau") {
    auto em = errors_for(StateSpec::coherent(4.0), 0.99, 64, 47);
    const int ns[] = {0, 15, 30, 47};
    const double frozen[] = {0.7003, 1.8514, 2.5066, 3.5338};
    double prev = 0.0;
    for (int i = 0; i < 4; ++i) {
        const double s = em.sigma(ns[i], ns[i]);
        CHECK(s == doctest::Approx(frozen[i]).epsilon(2e-3));
        CHECK(s > prev);
        prev = s;
    }
    // At eta=1 the same span is flat to within 0.1; at 0.99 it keeps rising.
    CHECK(em.sigma(47, 47) - em.sigma(30, 30) > 0.1);
}

TEST_CASE("the spread is insensitive to f once the scan has converged") {
    // f0 = 14 for this state and cutoff; compare f0+5 against 2*f0.
    auto a = errors_for(StateSpec::coherent(4.0), 1.0, 19, 10);
    auto b = errors_for(StateSpec::coherent(4.0), 1.0, 28, 10);
    for (int n = 0; n <= 10; ++n)
        for (int m = 0; m <= n; ++m) {
            const double s = std::max(a.sigma(n, m), 1e-12);
            CHECK(std::abs(a.sigma(n, m) - b.sigma(n, m)) / s < 0.01);
        }
}

TEST_CASE("statistical_errors rejects monte carlo configs") {
    ScanConfig cfg;
    cfg.f = 8;
    cfg.n_max = 4;
    cfg.mode = ScanMode::monte_carlo;
    cfg.samples_per_phase = 100;
    CHECK_THROWS_AS(statistical_errors(StateSpec::coherent(4.0), 1.0, cfg),
                    std::invalid_argument);
}
