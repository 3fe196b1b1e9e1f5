#include <cmath>
#include <numbers>

#include "doctest.h"
#include "hwp/classical.hpp"
#include "hwp/envelope.hpp"
#include "hwp/errors.hpp"
#include "hwp/packet.hpp"

using namespace hwp;
using std::numbers::pi;

namespace {

std::function<cplx(double)> gauss(double center = 0.0, double momentum = 0.0) {
    return [=](double y) {
        return std::pow(pi, -0.25) * std::exp(cplx(-0.5 * (y - center) * (y - center), momentum * y));
    };
}

StepOptions options(double t_end, double dt, std::size_t stride = 10) {
    StepOptions o;
    o.t_end = t_end;
    o.dt = dt;
    o.stride = stride;
    return o;
}

double max_abs(const Field& f) {
    double m = 0.0;
    for (const auto& z : f.values) m = std::max(m, std::abs(z));
    return m;
}

}  // namespace

TEST_SUITE("envelope") {

TEST_CASE("free Gaussian spreading") {
    const Grid1D g(512, 12.0);
    const auto a = Field::from_function(g, gauss());
    const auto run = solve_linear_envelope(a, QuadraticPotentialTrace::constant(0.0, 1.0, 1e-3), options(1.0, 1e-3));
    const double expected = std::pow(2.0, -0.25) * std::pow(pi, -0.25);
    CHECK(std::abs(max_abs(run.fields.back()) - expected) / expected < 1e-6);
    CHECK(run.max_mass_drift() < 1e-8);
}

TEST_CASE("harmonic ground state only rotates its phase") {
    const Grid1D g(512, 12.0);
    const auto a = Field::from_function(g, gauss());
    const auto run = solve_linear_envelope(a, QuadraticPotentialTrace::constant(1.0, 1.0, 1e-3), options(1.0, 1e-3));
    CHECK(l2_distance(run.fields.back(), std::polar(1.0, -0.5) * a) < 1e-6);
}

TEST_CASE("zero data stays zero") {
    const Grid1D g(128, 8.0);
    const auto run =
        solve_hartree_envelope(Field(g), QuadraticPotentialTrace::constant(1.0, 1.0, 1e-2),
                               KernelSpec::power_law(1.0, 0.5), options(1.0, 1e-2));
    for (const auto& f : run.fields) CHECK(max_abs(f) == 0.0);
}

TEST_CASE("Hartree envelope with lambda = 0 is the linear envelope") {
    const Grid1D g(256, 12.0);
    const auto a = Field::from_function(g, gauss(0.5, 0.3));
    const auto Q = QuadraticPotentialTrace::from_function([](double t) { return std::cos(t); }, 2.0, 1e-3);
    const auto lin = solve_linear_envelope(a, Q, options(2.0, 1e-3));
    const auto har = solve_hartree_envelope(a, Q, KernelSpec::power_law(0.0, 0.5), options(2.0, 1e-3));
    REQUIRE(lin.fields.size() == har.fields.size());
    for (std::size_t s = 0; s < lin.fields.size(); ++s) CHECK(l2_distance(lin.fields[s], har.fields[s]) < 1e-10);
}

TEST_CASE("Hartree envelope conserves mass and its Sigma norms grow at most exponentially") {
    const Grid1D g(4096, 128.0);
    const auto a = Field::from_function(g, gauss());
    auto o = options(8.0, 2e-3, 50);
    const auto run = solve_hartree_envelope(a, QuadraticPotentialTrace::constant(0.0, 8.0, 2e-3),
                                            KernelSpec::power_law(1.0, 0.5), o);
    CHECK(run.warnings.empty());
    double drift = 0.0;
    const double m0 = std::sqrt(run.mass.front());
    for (std::size_t i = 0; i < run.step_times.size() && run.step_times[i] <= 5.0 + 1e-9; ++i)
        drift = std::max(drift, std::abs(std::sqrt(run.mass[i]) - m0));
    CHECK(drift < 1e-8);
    std::vector<double> s1;
    for (const auto& s : run.sigma) s1.push_back(s[1]);
    const auto fit = fit_exponential_envelope(run.times, s1);
    CHECK(std::isfinite(fit.C));
    CHECK(std::isfinite(fit.rate));
    CHECK(fit.C > 0.0);
    CHECK(fit.rate >= 0.0);
}

TEST_CASE("alpha = 1 phase shift") {
    const Grid1D g(256, 10.0);
    const auto a = Field::from_function(g, gauss(0.0, 0.4));
    const auto lin = solve_linear_envelope(a, QuadraticPotentialTrace::constant(0.5, pi, 1e-3), options(pi, 1e-3, 100));
    const auto same = alpha1_envelope(lin, 0.0, 1.0);
    for (std::size_t s = 0; s < lin.fields.size(); ++s) CHECK(l2_distance(same.fields[s], lin.fields[s]) == 0.0);
    const auto shifted = alpha1_envelope(lin, 1.0, 1.0);
    for (std::size_t s = 0; s < lin.fields.size(); ++s)
        for (std::size_t j = 0; j < g.n(); ++j)
            CHECK(std::abs(std::abs(shifted.fields[s][j]) - std::abs(lin.fields[s][j])) <= 1e-14 * std::abs(lin.fields[s][j]));
    REQUIRE(lin.times.back() == doctest::Approx(pi));
    CHECK(l2_distance(shifted.fields.back(), cplx(-1.0) * lin.fields.back()) < 1e-12);
}

TEST_CASE("supercritical envelope with a flat jet is the linear envelope") {
    const Grid1D g(256, 12.0);
    const auto a = Field::from_function(g, gauss(0.7, 0.2));
    const auto Q = QuadraticPotentialTrace::constant(0.3, 2.0, 1e-3);
    const auto lin = solve_linear_envelope(a, Q, options(2.0, 1e-3));
    for (auto regime : {SupercriticalRegime::alpha0, SupercriticalRegime::alpha_half}) {
        const auto run = solve_smooth_supercritical_envelope(a, Q, KernelJet{1.0, 0.0, 0.0}, 1.0, regime, options(2.0, 1e-3));
        for (double th : run.gauge_theta) CHECK(th == 0.0);
        for (std::size_t s = 0; s < lin.fields.size(); ++s) CHECK(l2_distance(run.fields[s], lin.fields[s]) < 1e-12);
    }
}

TEST_CASE("even real data keeps a zero first moment") {
    const Grid1D g(256, 12.0);
    const auto a = Field::from_function(g, gauss());
    const auto Q = QuadraticPotentialTrace::constant(1.0, 2.0, 1e-3);
    const auto run = solve_smooth_supercritical_envelope(a, Q, KernelSpec::gaussian(-1.0), 1.0,
                                                         SupercriticalRegime::alpha0, options(2.0, 1e-3));
    for (double G : run.moment_G) CHECK(std::abs(G) < 1e-8);
}

// a repulsive Gaussian (hess0 = +2) keeps M = 2 + Q confining, so the envelope stays on the grid
TEST_CASE("first moment oscillates as cos t for harmonic Q") {
    const Grid1D g(512, 16.0);
    const auto a = Field::from_function(g, gauss(1.0));
    const auto Q = QuadraticPotentialTrace::constant(1.0, 2 * pi, 1e-3);
    const auto run = solve_smooth_supercritical_envelope(a, Q, KernelSpec::gaussian(-1.0), 1.0,
                                                         SupercriticalRegime::alpha0, options(2 * pi, 1e-3));
    double worst = 0.0;
    for (std::size_t i = 0; i < run.moment_G.size(); ++i)
        worst = std::max(worst, std::abs(run.moment_G[i] - std::cos(run.step_times[i])));
    CHECK(worst < 1e-4);
    CHECK(moment_ode_residual(run, Q) < 1e-3);
    CHECK(run.max_mass_drift() < 1e-8);
}

TEST_CASE("free first-moment motion is linear in time") {
    const Grid1D g(512, 16.0);
    const double p = 0.6;
    const auto a = Field::from_function(g, gauss(0.0, p));
    const auto Q = QuadraticPotentialTrace::constant(0.0, 2.0, 1e-3);
    const auto run = solve_smooth_supercritical_envelope(a, Q, KernelSpec::lorentzian(-1.0), 1.0,
                                                         SupercriticalRegime::alpha0, options(2.0, 1e-3));
    CHECK(moment_ode_residual(run, Q) < 1e-6);
    CHECK(run.moment_G.back() == doctest::Approx(p * 2.0).epsilon(1e-6));
}

TEST_CASE("moment residual of a vanishing moment") {
    EnvelopeRun run;
    run.dt = 0.1;
    run.step_times = {0.0, 0.1, 0.2, 0.3};
    run.moment_G = {0.0, 0.0, 0.0, 0.0};
    CHECK(moment_ode_residual(run, QuadraticPotentialTrace::constant(2.0, 0.3, 0.1)) == 0.0);
    run.moment_G = {0.0, 0.0};
    run.step_times = {0.0, 0.1};
    CHECK_THROWS_AS(moment_ode_residual(run, QuadraticPotentialTrace::constant(2.0, 0.3, 0.1)), ConfigError);
}

TEST_CASE("Hartree force has zero mean: G'' + Q G = 0") {
    const Grid1D g(1024, 32.0);
    const auto a = Field::from_function(g, gauss(1.0, 0.2));
    const auto Q = QuadraticPotentialTrace::constant(1.0, 3.0, 1e-3);
    const auto run = solve_hartree_envelope(a, Q, KernelSpec::power_law(1.0, 0.5), options(3.0, 1e-3));
    CHECK(moment_ode_residual(run, Q) < 1e-3);
}

TEST_CASE("Strang splitting is second order") {
    const Grid1D g(256, 16.0);
    const auto a = Field::from_function(g, gauss(0.3, 0.5));
    const auto pot = PotentialSpec::cosine(1.0, 1.0);
    const auto path = solve_trajectory(pot, 0.0, 1.0, 1.2, 1e-3);
    auto final_field = [&](double dt) {
        const auto Q = QuadraticPotentialTrace::from_path(path, pot, 1.0, dt);
        auto o = options(1.0, dt, 1000000);
        return solve_hartree_envelope(a, Q, KernelSpec::power_law(1.0, 0.5), o).fields.back();
    };
    const auto u1 = final_field(0.04), u2 = final_field(0.02), u3 = final_field(0.01);
    const double ratio = l2_distance(u1, u2) / l2_distance(u2, u3);
    CHECK(ratio >= 3.5);
    CHECK(ratio <= 4.5);
}

TEST_CASE("consistency residual of stored envelopes") {
    const Grid1D g(256, 12.0);
    SUBCASE("linear harmonic ground state") {
        const auto a = Field::from_function(g, gauss());
        const auto Q = QuadraticPotentialTrace::constant(1.0, 0.5, 1e-3);
        const auto run = solve_linear_envelope(a, Q, options(0.5, 1e-3, 1));
        CHECK(residual_b2(run, Q, KernelSpec::zero(), 1.0).max() < 1e-4);
    }
    SUBCASE("zero field") {
        const auto Q = QuadraticPotentialTrace::constant(1.0, 0.1, 1e-3);
        const auto run = solve_linear_envelope(Field(g), Q, options(0.1, 1e-3, 1));
        CHECK(residual_b2(run, Q, KernelSpec::zero(), 1.0).max() == 0.0);
    }
    SUBCASE("critical Hartree") {
        const auto a = Field::from_function(g, gauss());
        const auto Q = QuadraticPotentialTrace::constant(0.0, 0.5, 1e-3);
        const auto k = KernelSpec::power_law(1.0, 0.5);
        const auto run = solve_hartree_envelope(a, Q, k, options(0.5, 1e-3, 1));
        CHECK(residual_b2(run, Q, k, 1.0).max() < 1e-3);
    }
    SUBCASE("alpha0 with gauge") {
        const auto a = Field::from_function(g, gauss(0.5, 0.2));
        const auto Q = QuadraticPotentialTrace::constant(0.5, 0.5, 1e-3);
        const auto k = KernelSpec::gaussian(0.5);
        const auto run = solve_smooth_supercritical_envelope(a, Q, k, 1.0, SupercriticalRegime::alpha0, options(0.5, 1e-3, 1));
        CHECK(residual_b2(run, Q, k, 1.0).max() < 1e-3);
    }
    SUBCASE("alpha_half with gauge") {
        const auto a = Field::from_function(g, gauss(0.5, 0.2));
        const auto Q = QuadraticPotentialTrace::constant(0.5, 0.5, 1e-3);
        const auto k = KernelSpec::smooth_custom(1.0, 0.5, -1.0, [](double y) { return std::exp(0.5 * y - 0.625 * y * y); });
        const auto run =
            solve_smooth_supercritical_envelope(a, Q, k, 1.0, SupercriticalRegime::alpha_half, options(0.5, 1e-3, 1));
        CHECK(residual_b2(run, Q, k, 1.0).max() < 1e-3);
    }
}

TEST_CASE("every envelope solver conserves mass") {
    const Grid1D g(256, 14.0);
    const auto a = Field::from_function(g, gauss(0.4, 0.3));
    const auto Q = QuadraticPotentialTrace::constant(0.7, 2.0, 1e-3);
    const auto o = options(2.0, 1e-3);
    CHECK(solve_linear_envelope(a, Q, o).max_mass_drift() < 1e-8);
    CHECK(solve_hartree_envelope(a, Q, KernelSpec::power_law(1.0, 0.5), o).max_mass_drift() < 1e-8);
    CHECK(solve_smooth_supercritical_envelope(a, Q, KernelSpec::gaussian(), 1.0, SupercriticalRegime::alpha0, o)
              .max_mass_drift() < 1e-8);
    CHECK(solve_smooth_supercritical_envelope(a, Q, KernelSpec::lorentzian(), 1.0, SupercriticalRegime::alpha_half, o)
              .max_mass_drift() < 1e-8);
}

TEST_CASE("regime errors and names") {
    const Grid1D g(64, 8.0);
    const auto a = Field::from_function(g, gauss());
    const auto Q = QuadraticPotentialTrace::constant(0.0, 0.1, 1e-2);
    CHECK_THROWS_AS(solve_smooth_supercritical_envelope(a, Q, KernelSpec::power_law(1, 0.5), 1.0,
                                                        SupercriticalRegime::alpha0, options(0.1, 1e-2)),
                    RegimeError);
    CHECK_THROWS_AS(solve_hartree_envelope(a, Q, KernelSpec::gaussian(), options(0.1, 1e-2)), RegimeError);
    CHECK_THROWS_AS(solve_smooth_supercritical_envelope(a, Q, KernelJet{1.0, 0.5, -1.0}, 1.0,
                                                        SupercriticalRegime::alpha0, options(0.1, 1e-2)),
                    RegimeError);
    for (auto r : {EnvelopeRegime::linear, EnvelopeRegime::critical, EnvelopeRegime::alpha1, EnvelopeRegime::alpha_half,
                   EnvelopeRegime::alpha0})
        CHECK(parse_envelope_regime(to_string(r)) == r);
    CHECK(parse_envelope_regime("alpha-half") == EnvelopeRegime::alpha_half);
    CHECK_THROWS_AS(parse_envelope_regime("alpha2"), ConfigError);
}

TEST_CASE("edge warning") {
    const Grid1D g(64, 3.0);
    const auto a = Field::from_function(g, gauss());
    const auto run = solve_linear_envelope(a, QuadraticPotentialTrace::constant(0.0, 2.0, 1e-2), options(2.0, 1e-2));
    CHECK_FALSE(run.warnings.empty());
}

}  // TEST_SUITE
