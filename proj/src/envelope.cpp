#include "hwp/envelope.hpp"

#include <algorithm>
#include <cmath>

#include "hwp/errors.hpp"
#include "hwp/split_step.hpp"

namespace hwp {

std::string to_string(EnvelopeRegime r) {
    switch (r) {
        case EnvelopeRegime::linear: return "linear";
        case EnvelopeRegime::critical: return "critical";
        case EnvelopeRegime::alpha1: return "alpha1";
        case EnvelopeRegime::alpha_half: return "alpha-half";
        case EnvelopeRegime::alpha0: return "alpha0";
    }
    return "unknown";
}

EnvelopeRegime parse_envelope_regime(const std::string& s) {
    if (s == "linear") return EnvelopeRegime::linear;
    if (s == "critical") return EnvelopeRegime::critical;
    if (s == "alpha1") return EnvelopeRegime::alpha1;
    if (s == "alpha-half" || s == "alpha_half") return EnvelopeRegime::alpha_half;
    if (s == "alpha0") return EnvelopeRegime::alpha0;
    throw ConfigError("unknown envelope regime '" + s + "'");
}

// ---------------------------------------------------------------------------

namespace {

double sample_at(const std::vector<double>& v, double spacing, double t) {
    if (v.empty()) return 0.0;
    if (v.size() == 1 || spacing <= 0.0) return v.front();
    const double s = t / spacing;
    const double r = std::round(s);
    if (std::abs(s - r) < 1e-6) {
        const auto i = static_cast<std::size_t>(std::clamp(r, 0.0, static_cast<double>(v.size() - 1)));
        return v[i];
    }
    const double clamped = std::clamp(s, 0.0, static_cast<double>(v.size() - 1));
    const auto i = std::min(static_cast<std::size_t>(clamped), v.size() - 2);
    const double w = clamped - static_cast<double>(i);
    return (1.0 - w) * v[i] + w * v[i + 1];
}

}  // namespace

double QuadraticPotentialTrace::Q_at(double t) const { return sample_at(Q, spacing, t); }
double QuadraticPotentialTrace::linear_at(double t) const { return sample_at(linear_term, spacing, t); }
double QuadraticPotentialTrace::scalar_at(double t) const { return sample_at(scalar_term, spacing, t); }

QuadraticPotentialTrace QuadraticPotentialTrace::from_function(const std::function<double(double)>& q,
                                                               double t_end, double dt) {
    const TimeGrid tg(t_end, dt);
    QuadraticPotentialTrace trace;
    trace.spacing = 0.5 * tg.dt;
    const std::size_t m = 2 * tg.steps + 1;
    trace.Q.resize(m);
    for (std::size_t i = 0; i < m; ++i) trace.Q[i] = q(trace.spacing * static_cast<double>(i));
    return trace;
}

QuadraticPotentialTrace QuadraticPotentialTrace::constant(double q, double t_end, double dt) {
    return from_function([q](double) { return q; }, t_end, dt);
}

QuadraticPotentialTrace QuadraticPotentialTrace::from_path(const TrajectoryPath& path, const PotentialSpec& pot,
                                                           double t_end, double dt) {
    return from_function([&](double t) { return pot.hess(t, path.at(t).x); }, t_end, dt);
}

// ---------------------------------------------------------------------------

std::optional<std::size_t> EnvelopeRun::snapshot_index(double t) const {
    auto it = std::lower_bound(times.begin(), times.end(), t - 1e-9 * std::max(1.0, std::abs(t)));
    if (it != times.end() && std::abs(*it - t) <= 1e-9 * std::max(1.0, std::abs(t)))
        return static_cast<std::size_t>(it - times.begin());
    return std::nullopt;
}

Field EnvelopeRun::at_time(double t) const {
    if (fields.empty()) throw ConfigError("envelope run kept no fields");
    if (auto i = snapshot_index(t)) return fields[*i];
    if (t < times.front() || t > times.back())
        throw ConfigError("time " + std::to_string(t) + " outside envelope run");
    const auto hi = static_cast<std::size_t>(std::upper_bound(times.begin(), times.end(), t) - times.begin());
    const std::size_t lo = hi - 1;
    const double w = (t - times[lo]) / (times[hi] - times[lo]);
    Field out = fields[lo];
    for (std::size_t j = 0; j < out.size(); ++j) out[j] = (1.0 - w) * fields[lo][j] + w * fields[hi][j];
    return out;
}

double EnvelopeRun::max_mass_drift() const {
    if (mass.empty()) return 0.0;
    double drift = 0.0;
    for (double m : mass) drift = std::max(drift, std::abs(std::sqrt(m) - std::sqrt(mass.front())));
    return mass.front() > 0.0 ? drift / std::sqrt(mass.front()) : drift;
}

namespace {

using ThetaRate = std::function<double(double, const Field&)>;

EnvelopeRun run_envelope(const Field& a, EnvelopeRegime regime, const StepOptions& opts,
                         StrangStepper::PotentialFn potential, bool nonlinear, const ThetaRate& theta_rate) {
    if (!a.finite()) throw ConfigError("initial envelope is not finite");
    if (opts.stride == 0) throw ConfigError("snapshot stride must be positive");
    const TimeGrid tg(opts.t_end, opts.dt);

    EnvelopeRun run;
    run.regime = regime;
    run.dt = tg.dt;
    run.stride = opts.stride;
    run.step_times.reserve(tg.steps + 1);
    run.moment_G.reserve(tg.steps + 1);
    run.gauge_theta.reserve(tg.steps + 1);
    run.mass.reserve(tg.steps + 1);

    StrangStepper stepper(a.grid, 1.0, tg.dt, std::move(potential), nonlinear);
    double theta = 0.0;
    double prev_rate = 0.0;
    bool edge_warned = false;

    integrate(a, tg, stepper, [&](std::size_t n, double t, const Field& v) {
        const double rate = theta_rate ? theta_rate(t, v) : 0.0;
        if (n > 0) theta += 0.5 * tg.dt * (prev_rate + rate);
        prev_rate = rate;

        run.step_times.push_back(t);
        run.moment_G.push_back(first_moment(v));
        run.gauge_theta.push_back(theta);
        run.mass.push_back(l2_norm_sq(v));

        const bool snapshot = n % opts.stride == 0 || n == tg.steps;
        if (!snapshot && !opts.observer) return;
        Field u = v;
        if (theta != 0.0) u *= std::polar(1.0, theta);
        if (opts.observer) opts.observer(n, t, u);
        if (!snapshot) return;

        if (!edge_warned && std::max(std::abs(u.values.front()), std::abs(u.values.back())) > 1e-8) {
            run.warnings.push_back("envelope reaches the grid edge at t = " + std::to_string(t));
            edge_warned = true;
        }
        run.times.push_back(t);
        if (opts.sigma_diagnostics) run.sigma.push_back(grid_norms(u).sigma);
        if (opts.keep_fields) run.fields.push_back(std::move(u));
    });
    return run;
}

}  // namespace

EnvelopeRun solve_linear_envelope(const Field& a, const QuadraticPotentialTrace& Q, const StepOptions& opts) {
    const auto y = a.grid.points();
    auto potential = [&Q, y](double t, const Field&, std::vector<double>& w) {
        const double q = Q.Q_at(t);
        const double b = Q.linear_at(t);
        const double c = Q.scalar_at(t);
        for (std::size_t j = 0; j < y.size(); ++j) w[j] = 0.5 * q * y[j] * y[j] + b * y[j] + c;
    };
    return run_envelope(a, EnvelopeRegime::linear, opts, potential, false, {});
}

EnvelopeRun solve_hartree_envelope(const Field& a, const QuadraticPotentialTrace& Q, const KernelSpec& kernel,
                                   const StepOptions& opts) {
    const auto& hk = kernel.homogeneous();
    const auto conv = ConvolutionOperator::power_law(a.grid, hk.gamma, hk.lambda);
    const auto y = a.grid.points();
    const bool nonlinear = hk.lambda != 0.0;
    auto potential = [&Q, y, conv, nonlinear](double t, const Field& u, std::vector<double>& w) {
        const double q = Q.Q_at(t);
        const double b = Q.linear_at(t);
        const double c = Q.scalar_at(t);
        for (std::size_t j = 0; j < y.size(); ++j) w[j] = 0.5 * q * y[j] * y[j] + b * y[j] + c;
        if (!nonlinear) return;
        const auto h = conv.apply(abs2(u));
        for (std::size_t j = 0; j < y.size(); ++j) w[j] += h[j];
    };
    auto run = run_envelope(a, EnvelopeRegime::critical, opts, potential, nonlinear, {});
    return run;
}

EnvelopeRun alpha1_envelope(const EnvelopeRun& u_lin_run, double k0, double mass_sq) {
    EnvelopeRun run = u_lin_run;
    run.regime = EnvelopeRegime::alpha1;
    const double rate = k0 * mass_sq;
    for (std::size_t i = 0; i < run.step_times.size(); ++i)
        run.gauge_theta[i] = u_lin_run.gauge_theta[i] - rate * run.step_times[i];
    for (std::size_t i = 0; i < run.fields.size(); ++i) run.fields[i] *= std::polar(1.0, -rate * run.times[i]);
    return run;
}

EnvelopeRun solve_smooth_supercritical_envelope(const Field& a, const QuadraticPotentialTrace& Q,
                                                const KernelJet& jet, double mass_sq,
                                                SupercriticalRegime regime, const StepOptions& opts) {
    const auto y = a.grid.points();
    if (regime == SupercriticalRegime::alpha0) {
        // a nonzero K'(0) would leave an O(eps^-1/2) term in b_1
        if (jet.grad0 != 0.0) throw RegimeError("the alpha = 0 envelope needs K'(0) = 0");
        const double hess0 = jet.hess0;
        auto potential = [&Q, y, hess0, mass_sq](double t, const Field& v, std::vector<double>& w) {
            const double m = mass_sq * hess0 + Q.Q_at(t);
            const double g = hess0 != 0.0 ? first_moment(v) : 0.0;
            const double b = Q.linear_at(t);
            for (std::size_t j = 0; j < y.size(); ++j) w[j] = 0.5 * m * y[j] * y[j] - hess0 * g * y[j] + b * y[j];
        };
        auto theta_rate = [hess0](double, const Field& v) { return -0.5 * hess0 * second_moment(v); };
        return run_envelope(a, EnvelopeRegime::alpha0, opts, potential, hess0 != 0.0, theta_rate);
    }
    const double grad0 = jet.grad0;
    auto potential = [&Q, y, grad0, mass_sq](double t, const Field&, std::vector<double>& w) {
        const double q = Q.Q_at(t);
        const double b = Q.linear_at(t) + mass_sq * grad0;
        for (std::size_t j = 0; j < y.size(); ++j) w[j] = 0.5 * q * y[j] * y[j] + b * y[j];
    };
    auto theta_rate = [grad0](double, const Field& v) { return grad0 * first_moment(v); };
    return run_envelope(a, EnvelopeRegime::alpha_half, opts, potential, false, theta_rate);
}

EnvelopeRun solve_smooth_supercritical_envelope(const Field& a, const QuadraticPotentialTrace& Q,
                                                const KernelSpec& kernel, double mass_sq,
                                                SupercriticalRegime regime, const StepOptions& opts) {
    if (!kernel.is_smooth())
        throw RegimeError("supercritical envelopes are only defined for smooth kernels");
    return solve_smooth_supercritical_envelope(a, Q, taylor_kernel_coefficients(kernel), mass_sq, regime, opts);
}

double moment_ode_residual(const EnvelopeRun& run, const QuadraticPotentialTrace& Q) {
    const auto& G = run.moment_G;
    if (G.size() < 3) throw ConfigError("moment residual needs at least 3 samples");
    const double dt2 = run.dt * run.dt;
    double worst = 0.0;
    for (std::size_t n = 1; n + 1 < G.size(); ++n) {
        const double gdd = (G[n + 1] - 2.0 * G[n] + G[n - 1]) / dt2;
        worst = std::max(worst, std::abs(gdd + Q.Q_at(run.step_times[n]) * G[n]));
    }
    return worst;
}

}  // namespace hwp
