#include "hwp/direct.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>

#include "hwp/errors.hpp"
#include "hwp/split_step.hpp"

namespace hwp {

double critical_exponent(const KernelSpec& kernel) {
    return kernel.is_homogeneous() ? 1.0 + 0.5 * kernel.homogeneous().gamma : 1.0;
}

double DirectRun::max_mass_drift() const {
    if (mass.empty()) return 0.0;
    const double m0 = std::sqrt(mass.front());
    double drift = 0.0;
    for (double m : mass) drift = std::max(drift, std::abs(std::sqrt(m) - m0));
    return m0 > 0.0 ? drift / m0 : drift;
}

std::optional<std::size_t> DirectRun::snapshot_index(double t) const {
    const double tol = 1e-9 * std::max(1.0, std::abs(t));
    auto it = std::lower_bound(times.begin(), times.end(), t - tol);
    if (it != times.end() && std::abs(*it - t) <= tol) return static_cast<std::size_t>(it - times.begin());
    return std::nullopt;
}

namespace {

void check_eps(double eps) {
    if (!(eps > 0.0 && eps <= 1.0)) throw ConfigError("eps must lie in (0, 1]");
}

DirectRun run_direct(Field u0, double kinetic, const StepOptions& opts, StrangStepper::PotentialFn potential,
                     bool nonlinear, DirectRun run) {
    if (opts.stride == 0) throw ConfigError("snapshot stride must be positive");
    const TimeGrid tg(opts.t_end, opts.dt);
    run.dt = tg.dt;
    run.step_times.reserve(tg.steps + 1);
    run.mass.reserve(tg.steps + 1);
    StrangStepper stepper(u0.grid, kinetic, tg.dt, std::move(potential), nonlinear);
    bool edge_warned = false;
    integrate(std::move(u0), tg, stepper, [&](std::size_t n, double t, const Field& u) {
        run.step_times.push_back(t);
        run.mass.push_back(l2_norm_sq(u));
        if (opts.observer) opts.observer(n, t, u);
        if (n % opts.stride != 0 && n != tg.steps) return;
        if (!edge_warned && std::max(std::abs(u.values.front()), std::abs(u.values.back())) > 1e-8) {
            run.warnings.push_back("solution reaches the grid edge at t = " + std::to_string(t));
            edge_warned = true;
        }
        run.times.push_back(t);
        if (opts.keep_fields) run.fields.push_back(u);
    });
    return run;
}

}  // namespace

DirectRun solve_rescaled(const Field& a, double eps, double alpha, const PotentialSpec& pot,
                         const TrajectoryPath& path, const KernelSpec& kernel, const StepOptions& opts) {
    check_eps(eps);
    if (!(alpha >= 0.0)) throw ConfigError("alpha must be nonnegative");
    if (path.size() == 0 || path.t_end() < opts.t_end - 1e-9 * std::max(1.0, opts.t_end))
        throw ConfigError("trajectory does not cover [0, t_end]");

    const Grid1D& grid = a.grid;
    const double se = std::sqrt(eps);
    std::shared_ptr<const ConvolutionOperator> conv;
    if (kernel.is_homogeneous()) {
        const auto& hk = kernel.homogeneous();
        const double coefficient = hk.lambda * std::pow(eps, alpha - critical_exponent(kernel));
        if (coefficient != 0.0)
            conv = std::make_shared<ConvolutionOperator>(ConvolutionOperator::power_law(grid, hk.gamma, coefficient));
    } else {
        const auto& sk = kernel.smooth();
        const double subtract = alpha < 1.0 ? sk.k0 : 0.0;
        auto op = ConvolutionOperator::scaled_smooth(grid, sk, se, std::pow(eps, alpha - 1.0), subtract);
        const auto& s = op.samples();
        if (std::any_of(s.begin(), s.end(), [](double v) { return v != 0.0; }))
            conv = std::make_shared<ConvolutionOperator>(std::move(op));
    }

    const auto y = grid.points();
    auto potential = [&pot, &path, y, se, eps, conv](double t, const Field& u, std::vector<double>& w) {
        const double x = path.at(t).x;
        const double v0 = pot.eval(t, x);
        const double g = pot.grad(t, x);
        for (std::size_t j = 0; j < y.size(); ++j)
            w[j] = (pot.eval(t, x + se * y[j]) - v0 - se * y[j] * g) / eps;
        if (!conv) return;
        const auto h = conv->apply(abs2(u));
        for (std::size_t j = 0; j < y.size(); ++j) w[j] += h[j];
    };

    DirectRun run;
    run.eps = eps;
    run.alpha = alpha;
    run.frame = Frame::rescaled;
    run.path = path;
    return run_direct(a, 1.0, opts, potential, conv != nullptr, std::move(run));
}

std::function<cplx(double)> gaussian_profile(double center, double momentum, double width) {
    const double norm = std::pow(std::numbers::pi * width * width, -0.25);
    return [=](double y) {
        const double d = (y - center) / width;
        return norm * std::exp(cplx(-0.5 * d * d, momentum * y));
    };
}

Field physical_initial_data(const std::vector<PacketSpec>& packets, double eps, const Grid1D& grid) {
    check_eps(eps);
    const double se = std::sqrt(eps);
    const double amp = std::pow(eps, -0.25);
    Field psi(grid);
    for (const auto& p : packets) {
        for (std::size_t j = 0; j < grid.n(); ++j) {
            const double dx = grid.point(j) - p.x0;
            psi[j] += amp * p.profile(dx / se) * std::polar(1.0, dx * p.xi0 / eps);
        }
    }
    return psi;
}

double required_physical_spacing(const std::vector<PacketSpec>& packets, const PotentialSpec& pot, double eps,
                                 double t_end) {
    double xi_max = 0.0;
    double w_min = std::numeric_limits<double>::infinity();
    for (const auto& p : packets) {
        const auto path = solve_trajectory(pot, p.x0, p.xi0, t_end, 1e-3);
        for (double xi : path.xi) xi_max = std::max(xi_max, std::abs(xi));
        w_min = std::min(w_min, p.width);
    }
    double h = std::sqrt(eps) * w_min / 8.0;
    if (xi_max > 0.0) h = std::min(h, eps / (4.0 * xi_max));
    return h;
}

Grid1D physical_grid(const std::vector<PacketSpec>& packets, const PotentialSpec& pot, double eps, double t_end,
                     double margin, double y_reach) {
    check_eps(eps);
    double reach = 0.0;
    for (const auto& p : packets) {
        const auto path = solve_trajectory(pot, p.x0, p.xi0, t_end, 1e-3);
        const double spread = std::sqrt(eps) * (y_reach > 0.0 ? y_reach : 6.0 * p.width * std::sqrt(1.0 + t_end * t_end));
        for (double x : path.x) reach = std::max(reach, std::abs(x) + spread);
    }
    const double L = std::ceil(reach + margin);
    const double h = required_physical_spacing(packets, pot, eps, t_end);
    std::size_t n = 16;
    while (2.0 * L / static_cast<double>(n) > h) n *= 2;
    return Grid1D(n, L);
}

DirectRun solve_physical(const std::vector<PacketSpec>& packets, double eps, double alpha, const PotentialSpec& pot,
                         const KernelSpec& kernel, const Grid1D& grid, const StepOptions& opts) {
    check_eps(eps);
    if (packets.empty()) throw ConfigError("physical solve needs at least one packet");
    if (!(alpha >= 0.0)) throw ConfigError("alpha must be nonnegative");
    const double h_req = required_physical_spacing(packets, pot, eps, opts.t_end);
    if (grid.spacing() > h_req * (1.0 + 1e-12)) {
        std::size_t n = grid.n();
        while (2.0 * grid.half_width() / static_cast<double>(n) > h_req) n *= 2;
        throw ConfigError("physical grid under-resolved: spacing " + std::to_string(grid.spacing()) +
                          " exceeds " + std::to_string(h_req) + "; need n >= " + std::to_string(n) +
                          " for L = " + std::to_string(grid.half_width()));
    }

    const double coefficient = std::pow(eps, alpha - 1.0);
    std::shared_ptr<const ConvolutionOperator> conv;
    if (kernel.is_homogeneous()) {
        const auto& hk = kernel.homogeneous();
        if (hk.lambda != 0.0)
            conv = std::make_shared<ConvolutionOperator>(
                ConvolutionOperator::power_law(grid, hk.gamma, hk.lambda * coefficient));
    } else {
        auto op = ConvolutionOperator::scaled_smooth(grid, kernel.smooth(), 1.0, coefficient, 0.0);
        const auto& s = op.samples();
        if (std::any_of(s.begin(), s.end(), [](double v) { return v != 0.0; }))
            conv = std::make_shared<ConvolutionOperator>(std::move(op));
    }

    const auto x = grid.points();
    std::vector<double> frozen;
    if (pot.time_independent) {
        frozen.resize(x.size());
        for (std::size_t j = 0; j < x.size(); ++j) frozen[j] = pot.eval(0.0, x[j]) / eps;
    }
    auto potential = [&pot, x, frozen, eps, conv](double t, const Field& u, std::vector<double>& w) {
        if (frozen.empty()) {
            for (std::size_t j = 0; j < x.size(); ++j) w[j] = pot.eval(t, x[j]) / eps;
        } else {
            std::copy(frozen.begin(), frozen.end(), w.begin());
        }
        if (!conv) return;
        const auto h = conv->apply(abs2(u));
        for (std::size_t j = 0; j < x.size(); ++j) w[j] += h[j];
    };

    DirectRun run;
    run.eps = eps;
    run.alpha = alpha;
    run.frame = Frame::physical;
    return run_direct(physical_initial_data(packets, eps, grid), eps, opts, potential, conv != nullptr,
                      std::move(run));
}

}  // namespace hwp
