#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "hwp/classical.hpp"
#include "hwp/errors.hpp"
#include "hwp/spectral.hpp"

using namespace hwp;
using std::numbers::pi;

TEST_SUITE("classical") {

TEST_CASE("builtin potentials have consistent derivatives") {
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> ux(-3.0, 3.0), ut(0.0, 5.0);
    const std::vector<PotentialSpec> pots = {PotentialSpec::zero(), PotentialSpec::linear(1.5),
                                             PotentialSpec::harmonic(2.0), PotentialSpec::inverted_harmonic(1.0),
                                             PotentialSpec::cosine(0.7, 1.3)};
    for (const auto& p : pots) {
        double hess_max = 0.0;
        for (int i = 0; i < 50; ++i) {
            const double t = ut(rng), x = ux(rng), h = 1e-4;
            const double g_fd = (p.eval(t, x + h) - p.eval(t, x - h)) / (2 * h);
            const double h_fd = (p.grad(t, x + h) - p.grad(t, x - h)) / (2 * h);
            CHECK(std::abs(p.grad(t, x) - g_fd) <= 1e-6 * (1 + std::abs(g_fd)));
            CHECK(std::abs(p.hess(t, x) - h_fd) <= 1e-6 * (1 + std::abs(h_fd)));
            hess_max = std::max(hess_max, std::abs(p.hess(t, x)));
        }
        CHECK(hess_max <= 4.0);
    }
}

TEST_CASE("potential strings") {
    CHECK(PotentialSpec::parse("harmonic:2").describe() == "harmonic:2");
    CHECK(PotentialSpec::parse("cos:1,1").eval(0.0, 0.0) == 1.0);
    CHECK(PotentialSpec::parse("zero").eval(1.0, 3.0) == 0.0);
    CHECK_THROWS_AS(PotentialSpec::parse("quartic:1"), ConfigError);
    CHECK_THROWS_AS(PotentialSpec::parse("harmonic:x"), ConfigError);
}

TEST_CASE("free motion") {
    const auto p = solve_trajectory(PotentialSpec::zero(), 0.0, 1.0, 2.0, 1e-3);
    CHECK(p.times.back() == doctest::Approx(2.0));
    CHECK(std::abs(p.x.back() - 2.0) < 1e-12);
    CHECK(std::abs(p.xi.back() - 1.0) < 1e-12);
    const auto s = accumulate_action(p, PotentialSpec::zero());
    for (std::size_t i = 0; i < s.size(); i += 100) CHECK(std::abs(s.S[i] - 0.5 * s.times[i]) < 1e-12);
}

TEST_CASE("harmonic oscillator closed form") {
    const auto pot = PotentialSpec::harmonic(1.0);
    const auto p = accumulate_action(solve_trajectory(pot, 1.0, 0.0, pi / 2, 1e-3), pot);
    CHECK(std::abs(p.x.back()) < 1e-8);
    CHECK(std::abs(p.xi.back() + 1.0) < 1e-8);
    double worst = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i)
        worst = std::max(worst, std::abs(p.S[i] + std::sin(2 * p.times[i]) / 4));
    CHECK(worst < 1e-8);
    CHECK(p.S.front() == 0.0);
}

TEST_CASE("inverted oscillator grows like cosh") {
    const auto p = solve_trajectory(PotentialSpec::inverted_harmonic(1.0), 1.0, 0.0, 3.0, 1e-3);
    CHECK(p.x.back() == doctest::Approx(std::cosh(3.0)).epsilon(1e-9));
    CHECK(std::abs(p.x.back() - 10.0677) < 1e-4);
    const auto fit = trajectory_growth(p);
    CHECK(std::isfinite(fit.rate));
    CHECK(fit.rate == doctest::Approx(1.0).epsilon(0.1));
    for (std::size_t i = 0; i < p.size(); ++i)
        CHECK(std::abs(p.x[i]) + std::abs(p.xi[i]) <= fit.C * std::exp(fit.rate * p.times[i]) * (1 + 1e-12));
}

TEST_CASE("linear potential action against a quadrature oracle") {
    const auto pot = PotentialSpec::linear(1.0);
    const auto p = accumulate_action(solve_trajectory(pot, 0.0, 0.0, 2.0, 1e-3), pot);
    CHECK(std::abs(p.x.back() + 2.0) < 1e-12);
    CHECK(std::abs(p.xi.back() + 2.0) < 1e-12);
    for (double t : {0.5, 1.3, 2.0}) {
        // Lagrangian along x = -s^2/2, xi = -s: s^2/2 + s^2/2
        const double oracle = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
            [](double s) { return 0.5 * s * s - (-0.5 * s * s); }, 0.0, t);
        CHECK(std::abs(p.at(t).S - oracle) < 1e-10);
    }
}

TEST_CASE("RK4 is fourth order") {
    const auto pot = PotentialSpec::cosine(1.0, 1.0);
    const auto ref = solve_trajectory(pot, 0.3, 1.1, 4.0, 1e-4);
    const auto a = solve_trajectory(pot, 0.3, 1.1, 4.0, 0.04);
    const auto b = solve_trajectory(pot, 0.3, 1.1, 4.0, 0.02);
    const double ea = std::hypot(a.x.back() - ref.x.back(), a.xi.back() - ref.xi.back());
    const double eb = std::hypot(b.x.back() - ref.x.back(), b.xi.back() - ref.xi.back());
    const double ratio = ea / eb;
    CHECK(ratio >= 12.0);
    CHECK(ratio <= 20.0);
}

TEST_CASE("energy conservation") {
    for (const auto& pot : {PotentialSpec::harmonic(1.0), PotentialSpec::cosine(1.0, 1.0),
                            PotentialSpec::linear(0.5), PotentialSpec::inverted_harmonic(0.3)}) {
        const auto p = solve_trajectory(pot, 0.2, 0.9, 20.0, 1e-3);
        const auto e = trajectory_energy(p, pot);
        for (double v : e) CHECK(std::abs(v - e.front()) <= 1e-8 * (1 + std::abs(e.front())));
    }
}

TEST_CASE("action is additive along the flow") {
    const auto pot = PotentialSpec::cosine(1.0, 1.0);
    const double t1 = 1.2, t2 = 0.8;
    const auto whole = accumulate_action(solve_trajectory(pot, 0.1, 0.7, t1 + t2, 1e-3), pot);
    const auto first = accumulate_action(solve_trajectory(pot, 0.1, 0.7, t1, 1e-3), pot);
    const auto mid = first.at(t1);
    const auto second = accumulate_action(solve_trajectory(pot, mid.x, mid.xi, t2, 1e-3), pot);
    CHECK(std::abs(whole.S.back() - (first.S.back() + second.S.back())) < 1e-10);
}

TEST_CASE("modified action") {
    const auto pot = PotentialSpec::zero();
    const auto p = accumulate_action(solve_trajectory(pot, 0.0, 0.0, 1.0, 1e-3), pot);
    const auto m0 = modified_action(p, KernelSpec::gaussian(1.0), 1.0, ActionRegime::alpha0);
    REQUIRE(m0.S_mod.has_value());
    for (std::size_t i = 0; i < p.size(); i += 50) CHECK(std::abs((*m0.S_mod)[i] + p.times[i]) < 1e-14);
    const auto pc = accumulate_action(solve_trajectory(PotentialSpec::cosine(1, 1), 0.0, 1.0, 1.0, 1e-3),
                                      PotentialSpec::cosine(1, 1));
    const auto mh = modified_action(pc, KernelSpec::gaussian(1.0), 1.0, ActionRegime::alpha_half, 1.0 / 64);
    for (std::size_t i = 0; i < pc.size(); i += 50)
        CHECK(std::abs((*mh.S_mod)[i] - (pc.S[i] - pc.times[i] / 8)) < 1e-14);
    const auto mz = modified_action(pc, KernelSpec::zero(), 1.0, ActionRegime::alpha0);
    for (std::size_t i = 0; i < pc.size(); ++i) CHECK((*mz.S_mod)[i] == pc.S[i]);
    CHECK_THROWS_AS(modified_action(pc, KernelSpec::power_law(1, 0.5), 1.0, ActionRegime::alpha0), RegimeError);
    CHECK(mh.at(0.5, true).S == doctest::Approx(pc.at(0.5).S - 0.5 / 8).epsilon(1e-12));
}

TEST_CASE("trajectory interpolation and bounds") {
    const auto pot = PotentialSpec::harmonic(1.0);
    const auto p = solve_trajectory(pot, 1.0, 0.0, 2.0, 1e-2);
    for (double t : {0.013, 0.77, 1.999}) {
        CHECK(std::abs(p.at(t).x - std::cos(t)) < 1e-9);
        CHECK(std::abs(p.at(t).xi + std::sin(t)) < 1e-9);
    }
    CHECK_THROWS_AS(p.at(2.5), ConfigError);
    for (std::size_t i = 1; i < p.size(); ++i) CHECK(p.times[i] > p.times[i - 1]);
    CHECK_THROWS_AS(solve_trajectory(pot, 0, 0, 1.0, 0.0), ConfigError);
    CHECK_THROWS_AS(solve_trajectory(pot, 0, 0, -1.0, 1e-3), ConfigError);
}

TEST_CASE("divergent flow reports the last valid time") {
    const auto blowup = PotentialSpec::custom([](double, double x) { return -x * x * x * x; },
                                              [](double, double x) { return -4 * x * x * x; },
                                              [](double, double x) { return -12 * x * x; });
    try {
        solve_trajectory(blowup, 1.0, 0.0, 10.0, 1e-3);
        FAIL("expected divergence");
    } catch (const DivergenceError& e) {
        CHECK(e.last_valid_time() > 0.0);
        CHECK(e.last_valid_time() < 10.0);
    }
}

}  // TEST_SUITE
