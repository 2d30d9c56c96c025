// Round-count rules and slack schedules. The closed-form ceilings are
// validated against the exact predicate they are supposed to satisfy
// (minimality included), and the schedule formulas against plug-back
// identities through the theory module.

#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "hfl/control.hpp"
#include "hfl/theory.hpp"

using namespace hfl;

namespace {

SystemConsts consts_125() {
    SystemConsts c;
    c.mu = 0.1;
    c.eta = 10.0;
    c.d_total = 60000.0;
    c.phi = 31.0;
    c.layer_nodes = {1.0, 5.0, 25.0, 125.0};
    return c;
}

bool predicate(const ClusterStats& c, double sigma, double chi, int theta) {
    const double spread = c.size * c.size * c.size * c.divergence * c.divergence;
    return std::pow(c.lambda, 2.0 * theta) * spread <= chi * sigma;
}

}  // namespace

TEST_SUITE("control") {

TEST_CASE("worked round count, frozen") {
    ClusterStats c{5.0, 0.5, 1.0};
    const int theta = rounds_for_tolerance(c, 1.0, 1.0, 500);
    CHECK(theta == 4);
    CHECK(predicate(c, 1.0, 1.0, 4));
    CHECK_FALSE(predicate(c, 1.0, 1.0, 3));
}

TEST_CASE("loose slack or no spread yields zero rounds") {
    CHECK(rounds_for_tolerance({5.0, 0.5, 1.0}, 125.0, 1.0, 500) == 0);   // slack == spread
    CHECK(rounds_for_tolerance({5.0, 0.5, 1.0}, 1000.0, 1.0, 500) == 0);  // slack above spread
    CHECK(rounds_for_tolerance({5.0, 0.5, 0.0}, 1e-9, 1.0, 500) == 0);    // identical params
    CHECK(rounds_for_tolerance({5.0, 0.0, 1.0}, 1e-9, 1.0, 500) == 1);    // one exact round
    CHECK(rounds_for_tolerance({5.0, 0.0, 1.0}, 200.0, 1.0, 500) == 0);
}

TEST_CASE("nonpositive slack saturates at the cap") {
    CHECK(rounds_for_tolerance({5.0, 0.5, 1.0}, 0.0, 1.0, 500) == 500);
    CHECK(rounds_for_tolerance({5.0, 0.5, 1.0}, -3.0, 1.0, 77) == 77);
}

TEST_CASE("input validation") {
    CHECK_THROWS_AS(rounds_for_tolerance({5.0, 1.0, 1.0}, 1.0, 1.0, 500), std::invalid_argument);
    CHECK_THROWS_AS(rounds_for_tolerance({5.0, -0.1, 1.0}, 1.0, 1.0, 500), std::invalid_argument);
    CHECK_THROWS_AS(rounds_for_tolerance({5.0, 0.5, -1.0}, 1.0, 1.0, 500), std::invalid_argument);
    CHECK_THROWS_AS(rounds_for_tolerance({5.0, 0.5, 1.0}, 1.0, 0.5, 500), std::invalid_argument);
    CHECK_THROWS_AS(rounds_for_tolerance({5.0, 0.5, 1.0}, 1.0, 1.0, -1), std::invalid_argument);
}

TEST_CASE("returned count is minimal and sufficient over random instances") {
    Rng rng(41);
    int nonzero = 0;
    for (int trial = 0; trial < 500; ++trial) {
        ClusterStats c;
        c.size = 2.0 + static_cast<double>(rng.integer(24));
        c.lambda = 0.05 + 0.9 * rng.uniform();
        c.divergence = std::exp(6.0 * rng.uniform() - 3.0);
        const double chi = 1.0 + 14.0 * rng.uniform();
        const double spread = c.size * c.size * c.size * c.divergence * c.divergence;
        const double sigma = spread * std::exp(4.0 * rng.uniform() - 3.5);
        const int theta = rounds_for_tolerance(c, sigma, chi, 500);
        REQUIRE(theta >= 0);
        REQUIRE(theta <= 500);
        if (theta < 500) REQUIRE(predicate(c, sigma, chi, theta));
        if (theta > 0) {
            REQUIRE_FALSE(predicate(c, sigma, chi, theta - 1));
            ++nonzero;
        }
    }
    CHECK(nonzero > 150);
}

TEST_CASE("chi widens the tolerance and never raises the count") {
    Rng rng(43);
    for (int trial = 0; trial < 100; ++trial) {
        ClusterStats c{3.0 + static_cast<double>(rng.integer(10)), 0.1 + 0.8 * rng.uniform(),
                       std::exp(2.0 * rng.uniform() - 1.0)};
        const double sigma = std::exp(4.0 * rng.uniform() - 2.0);
        CHECK(rounds_for_tolerance(c, sigma, 15.0, 500) <= rounds_for_tolerance(c, sigma, 1.0, 500));
    }
}

TEST_CASE("fixed policy ignores cluster state") {
    PolicyConfig p;
    p.kind = PolicyConfig::Kind::Fixed;
    p.fixed_theta = 9;
    CHECK(choose_theta(p, {5.0, 0.5, 100.0}, 0.0) == 9);
    CHECK(choose_theta(p, {5.0, 0.5, 0.0}, 1e9) == 9);
}

TEST_CASE("gap-target schedule hits the target exactly when plugged back") {
    const auto c = consts_125();
    const double f0 = 0.7;
    const double eps = 0.55;
    const int kappa = 30;
    const auto sigma = sigma_for_gap_target(c, eps, kappa, f0);
    REQUIRE(static_cast<int>(sigma.size()) == 3);

    // equalized products
    CHECK(1.0 * sigma[0] == doctest::Approx(5.0 * sigma[1]).epsilon(1e-12));
    CHECK(5.0 * sigma[1] == doctest::Approx(25.0 * sigma[2]).epsilon(1e-12));

    const double r_k = damping_power(c, kappa);
    const double bound_at_kappa = r_k * f0 + (1.0 - r_k) * asymptotic_gap(c, sigma);
    CHECK(bound_at_kappa == doctest::Approx(eps).epsilon(1e-9));
}

TEST_CASE("gap-target feasibility window") {
    const auto c = consts_125();
    const double f0 = 0.7;
    const double r_k = damping_power(c, 30);
    CHECK_THROWS_AS(sigma_for_gap_target(c, r_k * f0 * 0.99, 30, f0), std::invalid_argument);
    CHECK_THROWS_AS(sigma_for_gap_target(c, f0, 30, f0), std::invalid_argument);
    CHECK_THROWS_AS(sigma_for_gap_target(c, 0.55, 0, f0), std::invalid_argument);
    CHECK_THROWS_AS(sigma_for_gap_target(c, 0.55, 30, 0.0), std::invalid_argument);

    // the lower edge itself is feasible and gives an all-zero schedule
    const auto zero = sigma_for_gap_target(c, r_k * f0, 30, f0);
    for (double s : zero) CHECK(s == doctest::Approx(0.0));
}

TEST_CASE("gap-target schedule approaches the asymptotic solution as kappa grows") {
    const auto c = consts_125();
    const double f0 = 0.7;
    const double eps = 0.2;
    const auto far = sigma_for_gap_target(c, eps, 20000, f0);
    // kappa -> infinity limit: eps * 2 mu D^2 / (eta^2 phi N_{j-1} L)
    const int L = c.layers();
    for (int j = 1; j <= L; ++j) {
        const double expect = eps * 2.0 * c.mu * c.d_total * c.d_total /
                              (c.eta * c.eta * c.phi * c.layer_nodes[static_cast<std::size_t>(j - 1)] * L);
        CHECK(far[static_cast<std::size_t>(j - 1)] == doctest::Approx(expect).epsilon(1e-6));
    }
}

TEST_CASE("contraction schedule: identity, endpoints, estimator proportionality") {
    const auto c = consts_125();
    const double g = 1.7;
    const double delta = 0.004;
    const auto sigma = sigma_for_linear_rate(c, delta, g);
    REQUIRE(sigma.size() == 3);

    // weighted total matches the closed form
    double weighted = 0.0;
    for (std::size_t j = 0; j < sigma.size(); ++j) weighted += c.layer_nodes[j] * sigma[j];
    const double expect = c.d_total * c.d_total * c.mu * (c.mu - delta * c.eta) * g * g /
                          (std::pow(c.eta, 4.0) * c.phi);
    CHECK(weighted == doctest::Approx(expect).epsilon(1e-12));

    // delta at mu/eta zeroes the slack
    for (double s : sigma_for_linear_rate(c, c.mu / c.eta, g)) CHECK(s == 0.0);

    // sigma scales with the squared estimate
    const auto half = sigma_for_linear_rate(c, delta, g / 2.0);
    CHECK(half[0] == doctest::Approx(sigma[0] / 4.0).epsilon(1e-12));

    CHECK_THROWS_AS(sigma_for_linear_rate(c, 0.0, g), std::invalid_argument);
    CHECK_THROWS_AS(sigma_for_linear_rate(c, 0.011, g), std::invalid_argument);
    CHECK_THROWS_AS(sigma_for_linear_rate(c, 0.004, -1.0), std::invalid_argument);
}

TEST_CASE("error-budget schedule caps the weighted composite at psi D^2 / phi") {
    const auto c = consts_125();
    const double psi = 1e3;
    const auto sigma = sigma_for_error_budget(c, psi);
    REQUIRE(sigma.size() == 3);
    double weighted = 0.0;
    for (std::size_t j = 0; j < sigma.size(); ++j) weighted += c.layer_nodes[j] * sigma[j];
    CHECK(weighted == doctest::Approx(psi * c.d_total * c.d_total / c.phi).epsilon(1e-12));
    CHECK_THROWS_AS(sigma_for_error_budget(c, 0.0), std::invalid_argument);

    // halving psi halves every slack, so no round count can decrease
    const auto tighter = sigma_for_error_budget(c, psi / 2.0);
    Rng rng(44);
    for (int trial = 0; trial < 100; ++trial) {
        ClusterStats s{5.0, 0.1 + 0.8 * rng.uniform(), std::exp(8.0 * rng.uniform())};
        for (std::size_t j = 0; j < sigma.size(); ++j)
            CHECK(rounds_for_tolerance(s, tighter[j], 1.0, 500) >=
                  rounds_for_tolerance(s, sigma[j], 1.0, 500));
    }
}

TEST_CASE("layer dispatch per policy") {
    const auto c = consts_125();
    PolicyConfig p;
    p.kind = PolicyConfig::Kind::GapTarget;
    p.sigma = {9.0, 3.0, 1.0};
    CHECK(layer_sigmas(p, c, 0.0) == p.sigma);
    p.sigma = {1.0, 2.0};
    CHECK_THROWS_AS(layer_sigmas(p, c, 0.0), std::invalid_argument);

    PolicyConfig b;
    b.kind = PolicyConfig::Kind::LinearRate;
    b.delta = 0.005;
    CHECK(layer_sigmas(b, c, 2.0) == sigma_for_linear_rate(c, 0.005, 2.0));

    PolicyConfig e;
    e.kind = PolicyConfig::Kind::ErrorBudget;
    e.psi = 1e5;
    CHECK(layer_sigmas(e, c, 0.0) == sigma_for_error_budget(c, 1e5));

    PolicyConfig fixed;
    CHECK_THROWS_AS(layer_sigmas(fixed, c, 0.0), std::logic_error);
}

TEST_CASE("larger slack never needs more rounds across layers") {
    // equalized schedule: sigma_1 >= sigma_2 >= sigma_3, so with identical
    // cluster stats the chosen counts are ordered top <= bottom
    const auto c = consts_125();
    const auto sigma = sigma_for_gap_target(c, 0.55, 30, 0.7);
    CHECK(sigma[0] >= sigma[1]);
    CHECK(sigma[1] >= sigma[2]);
    const ClusterStats same{5.0, 0.5, 40.0};
    const int t1 = rounds_for_tolerance(same, sigma[0], 1.0, 500);
    const int t2 = rounds_for_tolerance(same, sigma[1], 1.0, 500);
    const int t3 = rounds_for_tolerance(same, sigma[2], 1.0, 500);
    CHECK(t1 <= t2);
    CHECK(t2 <= t3);
    CHECK(t3 > 0);
}

TEST_CASE("gradient-norm estimator") {
    ParamVector a = ParamVector::Zero(4);
    ParamVector b(4);
    b << 3.0, 0.0, 4.0, 0.0;
    CHECK(estimate_grad_norm(a, b, 0.5, 2.0) == doctest::Approx(5.0).epsilon(1e-15));
    CHECK(estimate_grad_norm(a, a, 0.5, 2.0) == 0.0);
    CHECK_THROWS_AS(estimate_grad_norm(a, b, 0.0, 2.0), std::invalid_argument);
    CHECK_THROWS_AS(estimate_grad_norm(a, b, 0.5, 1.0), std::invalid_argument);

    Rng rng(9);
    for (int i = 0; i < 20; ++i) {
        const double v = initial_grad_norm_guess(rng);
        CHECK(v >= 0.5);
        CHECK(v < 1.5);
    }
}

TEST_CASE("contraction target derivation and clamping") {
    const auto pick = delta_for_target(0.35, 0.7, 10, 0.01);
    // 1 - (0.5)^(1/10), well above mu/eta: clamped
    CHECK(pick.clamped);
    CHECK(pick.delta == doctest::Approx(0.01).epsilon(1e-15));

    const auto free = delta_for_target(0.699, 0.7, 1000, 0.01);
    CHECK_FALSE(free.clamped);
    CHECK(free.delta == doctest::Approx(1.0 - std::pow(0.699 / 0.7, 1.0 / 1000.0)).epsilon(1e-12));
    CHECK(free.delta <= 0.01);

    CHECK_THROWS_AS(delta_for_target(0.8, 0.7, 10, 0.01), std::invalid_argument);
    CHECK_THROWS_AS(delta_for_target(0.1, 0.0, 10, 0.01), std::invalid_argument);
}

}  // TEST_SUITE
