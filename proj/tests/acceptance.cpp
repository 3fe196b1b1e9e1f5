// Acceptance harness: one PASS/FAIL line per criterion, nonzero exit on any failure.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "hwp/direct.hpp"
#include "hwp/envelope.hpp"
#include "hwp/experiments.hpp"
#include "hwp/packet.hpp"

using namespace hwp;
using nlohmann::json;

namespace {

// tolerances, fixed here so that a failing run cannot be tuned into passing
constexpr double kC1Lo = 0.35, kC1Hi = 0.65, kC1R2 = 0.95;
constexpr double kC2aLo = 0.15, kC2aHi = 0.35;
constexpr double kC2bLo = 0.35, kC2bHi = 0.65;
constexpr double kC3Corrected = 0.05, kC3Naive = 1.5;
constexpr double kC4Lo = 0.35, kC4Hi = 0.65, kC4Residual = 1e-3;
constexpr double kC5Lo = 0.07, kC5Hi = 0.27, kC5Measure = 0.2;
constexpr double kC6R2 = 0.9;
constexpr double kC7 = 1e-5;
constexpr double kMass = 1e-8, kUnitary = 1e-6, kIntertwine = 1e-6, kPadded = 1e-10;
constexpr double kStrangLo = 3.5, kStrangHi = 4.5;

struct Verdict {
    bool pass = false;
    std::string detail;
};

unsigned jobs() { return std::max(1u, std::thread::hardware_concurrency()); }

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

ExperimentConfig config(json j) {
    auto c = ExperimentConfig::from_json(j);
    c.jobs = jobs();
    return c;
}

bool in(double v, double lo, double hi) { return v >= lo && v <= hi; }

Verdict c1() {
    const auto r = run_convergence(config({{"potential", "cos:1,1"},
                                           {"kernel", "power_law:1,0.5"},
                                           {"alpha", "critical"},
                                           {"packets", {{{"x0", 0.0}, {"xi0", 1.0}}}},
                                           {"t_fit", 1.0},
                                           {"eps_k", {4, 5, 6, 7, 8, 9, 10}},
                                           {"norm", "l2"}}));
    const auto& f = r.fit;
    return {f.valid && in(f.slope, kC1Lo, kC1Hi) && f.r_squared > kC1R2,
            fmt("critical L2 slope %.3f in [%.2f, %.2f], r2 %.4f > %.2f", f.slope, kC1Lo, kC1Hi, f.r_squared, kC1R2)};
}

Verdict c2() {
    auto run = [](const char* alpha) {
        return run_convergence(config({{"potential", "cos:1,1"},
                                       {"kernel", "power_law:1,0.5"},
                                       {"alpha", alpha},
                                       {"t_fit", 1.0},
                                       {"eps_k", {4, 5, 6, 7, 8, 9, 10}},
                                       {"norm", "h"}}))
            .fit;
    };
    const auto a = run("critical+0.25");
    const auto b = run("critical+1");
    return {a.valid && b.valid && in(a.slope, kC2aLo, kC2aHi) && in(b.slope, kC2bLo, kC2bHi),
            fmt("H slope %.3f at alpha_c+0.25 (in [%.2f, %.2f]), %.3f at alpha_c+1 (in [%.2f, %.2f])", a.slope,
                kC2aLo, kC2aHi, b.slope, kC2bLo, kC2bHi)};
}

Verdict c3() {
    const auto r = run_alpha1_phase_discrimination(config({{"kind", "phase-check"},
                                                           {"potential", "harmonic:1"},
                                                           {"kernel", "gaussian:1"},
                                                           {"alpha", 1.0},
                                                           {"packets", {{{"x0", 0.0}, {"xi0", 1.0}}}},
                                                           {"t_fit", std::numbers::pi},
                                                           {"eps_k", {8}}}));
    const auto& row = r.rows.front();
    const double k0m = r.k0 * r.mass_sq;
    return {std::abs(k0m - 1.0) < 1e-6 && row.corrected < kC3Corrected * r.norm_a && row.naive > kC3Naive * r.norm_a,
            fmt("t = pi, eps = 2^-8, k0 m = %.6f: corrected %.4f < %.2f ||a||, naive %.4f > %.1f ||a||", k0m,
                row.corrected, kC3Corrected, row.naive, kC3Naive)};
}

Verdict c4() {
    const json base{{"potential", "cos:1,1"},
                    {"kernel", "gaussian:0.25"},
                    {"alpha", 0.0},
                    {"packets", {{{"x0", 1.0}, {"xi0", 1.0}}}},
                    {"t_fit", 1.0},
                    {"dt", 1e-3},
                    {"eps_k", {4, 5, 6, 7, 8, 9}},
                    {"norm", "l2"}};
    const auto r = run_convergence(config(base));
    auto mj = base;
    mj["kind"] = "moment-check";
    const auto m = run_moment_check(config(mj));
    const auto& f = r.fit;
    return {r.regime == "alpha0" && f.valid && in(f.slope, kC4Lo, kC4Hi) && m.residual < kC4Residual,
            fmt("alpha = 0 L2 slope %.3f in [%.2f, %.2f] (r2 %.4f), G-ODE residual %.2e < %.0e", f.slope, kC4Lo, kC4Hi,
                f.r_squared, m.residual, kC4Residual)};
}

Verdict c5() {
    const auto r = run_superposition(config({{"kind", "superpose"},
                                             {"potential", "zero"},
                                             {"kernel", "power_law:1,0.5"},
                                             {"alpha", "critical"},
                                             {"packets", {{{"x0", -3.0}, {"xi0", 1.0}}, {{"x0", 3.0}, {"xi0", -1.0}}}},
                                             {"t_fit", 6.0},
                                             {"dt", 1e-3},
                                             {"grid", {{"n", 2048}, {"L", 96}}},
                                             {"eps_k", {3, 4, 5, 6, 7}},
                                             {"norm", "sigma_eps"}}));
    double worst = 0.0;
    for (const auto& row : r.interaction) worst = std::max(worst, row.relative_error);
    const auto& f = r.fit;
    return {f.valid && in(f.slope, kC5Lo, kC5Hi) && worst <= kC5Measure,
            fmt("Sigma_eps slope %.3f in [%.2f, %.2f] (target %.4f, r2 %.4f), |I(T)| worst relative error %.2e <= %.1f",
                f.slope, kC5Lo, kC5Hi, f.target_slope, f.r_squared, worst, kC5Measure)};
}

Verdict c6() {
    const auto r = run_ehrenfest(config({{"kind", "ehrenfest"},
                                         {"potential", "cos:1,1"},
                                         {"kernel", "power_law:1,0.5"},
                                         {"alpha", "critical"},
                                         {"packets", {{{"x0", 0.0}, {"xi0", 1.0}}}},
                                         {"horizon", 2.0},
                                         {"grid", {{"n", 2048}, {"L", 32}}},
                                         {"eps_k", {4, 5, 6, 7, 8, 9, 10}}}));
    std::size_t censored = 0;
    for (const auto& p : r.points) censored += p.t_star ? 0 : 1;
    return {r.valid && r.fit.slope > 0.0 && r.fit.r_squared > kC6R2,
            fmt("T* = %.3f ln(1/eps) + %.3f, r2 %.4f > %.1f, %zu of %zu censored", r.fit.slope, r.fit.intercept,
                r.fit.r_squared, kC6R2, censored, r.points.size())};
}

Verdict c7() {
    const auto pot = PotentialSpec::harmonic(1.0);
    const auto kernel = KernelSpec::power_law(0.0, 0.5);
    const Grid1D g(512, 16.0);
    const auto a = Field::from_function(g, gaussian_profile());
    StepOptions o;
    o.t_end = 5.0;
    o.dt = 1e-3;
    o.stride = 50;
    o.sigma_diagnostics = false;
    const auto path = accumulate_action(solve_trajectory(pot, 0.0, 1.0, 5.1, 1e-3), pot);
    const auto env = solve_linear_envelope(a, QuadraticPotentialTrace::from_path(path, pot, 5.05, 1e-3), o);
    std::vector<double> worst(7, 0.0);
    parallel_for(worst.size(), jobs(), [&](std::size_t i) {
        const double eps = std::ldexp(1.0, -static_cast<int>(i) - 4);
        const auto run = solve_rescaled(a, eps, critical_exponent(kernel), pot, path, kernel, o);
        const auto s = error_series(run, env, NormSelection{true, true}, "linear");
        for (const char* n : {"l2", "h", "sigma_eps"})
            for (double v : s.series(n)) worst[i] = std::max(worst[i], v);
    });
    double w = 0.0;
    for (double v : worst) w = std::max(w, v);
    return {w < kC7, fmt("quadratic V, lambda = 0: max L2/H/Sigma_eps error over t in [0, 5], eps = 2^-4..2^-10 is %.2e < %.0e",
                         w, kC7)};
}

Verdict c8() {
    std::vector<std::string> failed;
    std::ostringstream detail;
    auto note = [&](const std::string& name, bool ok, const std::string& text) {
        if (!ok) failed.push_back(name);
        detail << name << " " << text << "; ";
    };

    // mass across every solver
    {
        const Grid1D g(512, 24.0);
        const auto a = Field::from_function(g, gaussian_profile(0.3, 0.4));
        const auto pot = PotentialSpec::cosine(1.0, 1.0);
        const auto path = accumulate_action(solve_trajectory(pot, 0.5, 1.0, 2.1, 1e-3), pot);
        const auto Q = QuadraticPotentialTrace::from_path(path, pot, 2.05, 1e-3);
        StepOptions o;
        o.t_end = 2.0;
        o.dt = 1e-3;
        o.sigma_diagnostics = false;
        const auto gk = KernelSpec::gaussian(0.5);
        const auto pk = KernelSpec::power_law(1.0, 0.5);
        double m = 0.0;
        m = std::max(m, solve_linear_envelope(a, Q, o).max_mass_drift());
        m = std::max(m, solve_hartree_envelope(a, Q, pk, o).max_mass_drift());
        m = std::max(m, solve_smooth_supercritical_envelope(a, Q, gk, 1.0, SupercriticalRegime::alpha0, o).max_mass_drift());
        m = std::max(m,
                     solve_smooth_supercritical_envelope(a, Q, gk, 1.0, SupercriticalRegime::alpha_half, o).max_mass_drift());
        m = std::max(m, solve_rescaled(a, 1.0 / 64, 1.25, pot, path, pk, o).max_mass_drift());
        m = std::max(m, solve_rescaled(a, 1.0 / 64, 0.0, pot, modified_action(path, gk, 1.0, ActionRegime::alpha0), gk, o)
                            .max_mass_drift());
        const std::vector<PacketSpec> packets{{gaussian_profile(), -1.0, 1.0, 1.0}, {gaussian_profile(), 1.0, -1.0, 1.0}};
        const auto grid = physical_grid(packets, pot, 1.0 / 16, 2.0, 2.0);
        o.stride = 100;
        m = std::max(m, solve_physical(packets, 1.0 / 16, 1.25, pot, pk, grid, o).max_mass_drift());
        note("mass", m < kMass, fmt("%.1e < %.0e", m, kMass));
    }

    // assembly and the moving-frame operators
    {
        const double eps = 1.0 / 32;
        const auto pot = PotentialSpec::zero();
        const PacketFrame frame(eps, accumulate_action(solve_trajectory(pot, 0.3, -0.8, 1.0, 1e-3), pot));
        const Grid1D yg(256, 12.0);
        const Grid1D xg(4096, 6.0);
        const auto u = Field::from_function(yg, gaussian_profile(0.2, 0.5, 0.9));
        const double t = 0.4;
        const auto phi = assemble(u, frame, t, xg);
        const double unit = std::abs(l2_norm(phi) - l2_norm(u));
        Field yu = u;
        for (std::size_t j = 0; j < u.size(); ++j) yu[j] *= yg.point(j);
        const double ia = l2_distance(apply_A(phi, frame, t), assemble(derivative(u, 1), frame, t, xg));
        const double ib = l2_distance(apply_B(phi, frame, t), assemble(yu, frame, t, xg));
        note("unitarity", unit < kUnitary, fmt("%.1e < %.0e", unit, kUnitary));
        note("intertwining", std::max(ia, ib) < kIntertwine, fmt("A %.1e, B %.1e < %.0e", ia, ib, kIntertwine));
    }

    // padded FFT convolution against an O(n^2) sum of independently evaluated kernel values
    {
        const std::size_t n = 256;
        const Grid1D g(n, 6.0);
        std::vector<double> f(n);
        for (std::size_t j = 0; j < n; ++j) f[j] = std::exp(-g.point(j) * g.point(j)) * (1.0 + 0.3 * g.point(j));
        const double h = g.spacing();
        double worst = 0.0;
        const std::vector<std::pair<KernelSpec, std::function<double(double)>>> cases{
            {KernelSpec::power_law(1.0, 0.5), [h](double y) { return power_law_cell_average(y, h, 0.5); }},
            {KernelSpec::gaussian(1.0), [](double y) { return std::exp(-y * y); }}};
        for (const auto& [kernel, k] : cases) {
            const auto fast = ConvolutionOperator::for_kernel(g, kernel).apply(f);
            double err = 0.0, scale = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                double acc = 0.0;
                for (std::size_t j = 0; j < n; ++j) acc += k((double(i) - double(j)) * h) * f[j];
                acc *= h;
                err = std::max(err, std::abs(fast[i] - acc));
                scale = std::max(scale, std::abs(acc));
            }
            worst = std::max(worst, err / scale);
        }
        note("padded", worst < kPadded, fmt("%.1e < %.0e", worst, kPadded));
    }

    // Strang order
    {
        const Grid1D g(256, 16.0);
        const auto a = Field::from_function(g, gaussian_profile(0.3, 0.5));
        const auto pot = PotentialSpec::cosine(1.0, 1.0);
        const auto path = accumulate_action(solve_trajectory(pot, 0.0, 1.2, 1.1, 1e-4), pot);
        const auto kernel = KernelSpec::power_law(1.0, 0.5);
        auto at_one = [&](double dt) {
            StepOptions o;
            o.t_end = 1.0;
            o.dt = dt;
            o.stride = 1000000;
            o.sigma_diagnostics = false;
            return solve_rescaled(a, 1.0 / 16, 1.25, pot, path, kernel, o).fields.back();
        };
        const auto u1 = at_one(0.04), u2 = at_one(0.02), u3 = at_one(0.01);
        const double ratio = l2_distance(u1, u2) / l2_distance(u2, u3);
        note("strang", in(ratio, kStrangLo, kStrangHi), fmt("ratio %.3f in [%.1f, %.1f]", ratio, kStrangLo, kStrangHi));
    }

    // exponential Sigma^k envelope of the critical Hartree envelope on [0, 8]
    {
        const Grid1D g(4096, 128.0);
        const auto a = Field::from_function(g, gaussian_profile());
        const auto pot = PotentialSpec::cosine(1.0, 1.0);
        const auto path = accumulate_action(solve_trajectory(pot, 0.0, 1.0, 8.1, 2e-3), pot);
        StepOptions o;
        o.t_end = 8.0;
        o.dt = 2e-3;
        o.stride = 50;
        const auto run =
            solve_hartree_envelope(a, QuadraticPotentialTrace::from_path(path, pot, 8.05, 2e-3), KernelSpec::power_law(1, 0.5), o);
        bool finite = run.warnings.empty();
        std::ostringstream fits;
        for (std::size_t k = 1; k <= 4; ++k) {
            std::vector<double> s;
            for (const auto& row : run.sigma) s.push_back(row[k]);
            const auto fit = fit_exponential_envelope(run.times, s);
            finite = finite && std::isfinite(fit.C) && std::isfinite(fit.rate);
            fits << (k > 1 ? ", " : "") << "k=" << k << " C " << fmt("%.3g", fit.C) << " rate " << fmt("%.3g", fit.rate);
        }
        note("sigma-envelope", finite, fits.str());
    }

    std::string d = detail.str();
    d.resize(d.size() - 2);
    if (!failed.empty()) {
        d += "; ";
        d += "failed:";
        for (const auto& f : failed) d += " " + f;
    }
    return {failed.empty(), d};
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria{
        {"C1 critical rate", c1},      {"C2 subcritical rate", c2}, {"C3 alpha=1 phase", c3},
        {"C4 alpha=0 smooth", c4},     {"C5 superposition", c5},    {"C6 Ehrenfest scaling", c6},
        {"C7 exactness oracle", c7},   {"C8 invariants", c8}};
    int failures = 0;
    for (const auto& [name, check] : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = check();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("%s %s: %s [%.1f s]\n", v.pass ? "PASS" : "FAIL", name, v.detail.c_str(), secs);
        std::fflush(stdout);
        failures += v.pass ? 0 : 1;
    }
    return failures == 0 ? 0 : 1;
}
