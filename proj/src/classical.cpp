#include "hwp/classical.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "hwp/errors.hpp"

namespace hwp {

namespace {

constexpr double kOverflowGuard = 1e150;

std::vector<double> parse_numbers(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        try {
            out.push_back(std::stod(item));
        } catch (const std::exception&) {
            throw ConfigError("cannot parse number '" + item + "'");
        }
    }
    return out;
}

}  // namespace

PotentialSpec PotentialSpec::zero() {
    PotentialSpec p;
    p.eval = [](double, double) { return 0.0; };
    p.grad = [](double, double) { return 0.0; };
    p.hess = [](double, double) { return 0.0; };
    p.tag = Tag::zero;
    return p;
}

PotentialSpec PotentialSpec::linear(double kappa) {
    PotentialSpec p;
    p.eval = [kappa](double, double x) { return kappa * x; };
    p.grad = [kappa](double, double) { return kappa; };
    p.hess = [](double, double) { return 0.0; };
    p.tag = Tag::linear;
    p.params = {kappa};
    return p;
}

PotentialSpec PotentialSpec::harmonic(double omega) {
    const double w2 = omega * omega;
    PotentialSpec p;
    p.eval = [w2](double, double x) { return 0.5 * w2 * x * x; };
    p.grad = [w2](double, double x) { return w2 * x; };
    p.hess = [w2](double, double) { return w2; };
    p.tag = Tag::harmonic;
    p.params = {omega};
    return p;
}

PotentialSpec PotentialSpec::inverted_harmonic(double omega) {
    const double w2 = omega * omega;
    PotentialSpec p;
    p.eval = [w2](double, double x) { return -0.5 * w2 * x * x; };
    p.grad = [w2](double, double x) { return -w2 * x; };
    p.hess = [w2](double, double) { return -w2; };
    p.tag = Tag::inverted_harmonic;
    p.params = {omega};
    return p;
}

PotentialSpec PotentialSpec::cosine(double amplitude, double wavenumber) {
    const double a = amplitude;
    const double k = wavenumber;
    PotentialSpec p;
    p.eval = [a, k](double, double x) { return a * std::cos(k * x); };
    p.grad = [a, k](double, double x) { return -a * k * std::sin(k * x); };
    p.hess = [a, k](double, double x) { return -a * k * k * std::cos(k * x); };
    p.tag = Tag::cosine;
    p.params = {amplitude, wavenumber};
    return p;
}

PotentialSpec PotentialSpec::custom(std::function<double(double, double)> eval,
                                    std::function<double(double, double)> grad,
                                    std::function<double(double, double)> hess,
                                    bool time_independent) {
    PotentialSpec p;
    p.eval = std::move(eval);
    p.grad = std::move(grad);
    p.hess = std::move(hess);
    p.tag = Tag::custom;
    p.time_independent = time_independent;
    return p;
}

PotentialSpec PotentialSpec::parse(const std::string& text) {
    const auto colon = text.find(':');
    const std::string name = text.substr(0, colon);
    const auto args = colon == std::string::npos ? std::vector<double>{} : parse_numbers(text.substr(colon + 1));
    auto arg = [&](std::size_t i, double fallback) { return i < args.size() ? args[i] : fallback; };
    if (name == "zero" || name == "free") return zero();
    if (name == "linear") return linear(arg(0, 1.0));
    if (name == "harmonic") return harmonic(arg(0, 1.0));
    if (name == "inverted_harmonic") return inverted_harmonic(arg(0, 1.0));
    if (name == "cos" || name == "cosine") return cosine(arg(0, 1.0), arg(1, 1.0));
    throw ConfigError("unknown potential '" + text + "'");
}

std::string PotentialSpec::describe() const {
    std::ostringstream os;
    os.precision(17);
    switch (tag) {
        case Tag::zero: return "zero";
        case Tag::linear: os << "linear:" << params[0]; break;
        case Tag::harmonic: os << "harmonic:" << params[0]; break;
        case Tag::inverted_harmonic: os << "inverted_harmonic:" << params[0]; break;
        case Tag::cosine: os << "cos:" << params[0] << "," << params[1]; break;
        case Tag::custom: return "custom";
    }
    return os.str();
}

// ---------------------------------------------------------------------------

TrajectoryPath::State TrajectoryPath::at(double t, bool modified) const {
    if (times.empty()) throw ConfigError("empty trajectory");
    const double t0 = times.front();
    const double t1 = times.back();
    const double slack = 1e-9 * std::max(1.0, std::abs(t1));
    if (t < t0 - slack || t > t1 + slack)
        throw ConfigError("trajectory does not cover t = " + std::to_string(t));
    const bool with_action = !S.empty();
    if (times.size() == 1) return {x[0], xi[0], with_action ? S[0] : 0.0};

    const double h = times[1] - times[0];
    auto i = static_cast<std::size_t>(std::clamp((t - t0) / h, 0.0, static_cast<double>(times.size() - 2)));
    const double s = std::clamp((t - times[i]) / h, 0.0, 1.0);

    const double s2 = s * s;
    const double s3 = s2 * s;
    const double h00 = 2 * s3 - 3 * s2 + 1;
    const double h10 = s3 - 2 * s2 + s;
    const double h01 = -2 * s3 + 3 * s2;
    const double h11 = s3 - s2;
    auto hermite = [&](double p0, double p1, double m0, double m1) {
        return h00 * p0 + h10 * h * m0 + h01 * p1 + h11 * h * m1;
    };
    State out{};
    out.x = hermite(x[i], x[i + 1], xi[i], xi[i + 1]);
    out.xi = hermite(xi[i], xi[i + 1], force[i], force[i + 1]);
    out.S = with_action ? hermite(S[i], S[i + 1], lagrangian[i], lagrangian[i + 1]) : 0.0;
    if (modified) {
        if (!S_mod) throw ConfigError("modified action requested but not filled");
        out.S -= action_shift_rate * t;
    }
    return out;
}

TrajectoryPath solve_trajectory(const PotentialSpec& pot, double x0, double xi0, double t_end, double dt) {
    if (!(dt > 0.0)) throw ConfigError("trajectory step must be positive");
    if (!(t_end >= 0.0)) throw ConfigError("trajectory end time must be nonnegative");

    const auto steps = static_cast<std::size_t>(std::ceil(t_end / dt - 1e-9));
    const double h = steps > 0 ? t_end / static_cast<double>(steps) : 0.0;

    TrajectoryPath path;
    path.times.reserve(steps + 1);
    path.x.reserve(steps + 1);
    path.xi.reserve(steps + 1);

    auto accel = [&](double t, double x) { return -pot.grad(t, x); };

    double t = 0.0;
    double x = x0;
    double p = xi0;
    auto record = [&](double tt) {
        path.times.push_back(tt);
        path.x.push_back(x);
        path.xi.push_back(p);
        path.force.push_back(accel(tt, x));
        path.lagrangian.push_back(0.5 * p * p - pot.eval(tt, x));
    };
    record(0.0);
    for (std::size_t n = 0; n < steps; ++n) {
        const double k1x = p;
        const double k1p = accel(t, x);
        const double k2x = p + 0.5 * h * k1p;
        const double k2p = accel(t + 0.5 * h, x + 0.5 * h * k1x);
        const double k3x = p + 0.5 * h * k2p;
        const double k3p = accel(t + 0.5 * h, x + 0.5 * h * k2x);
        const double k4x = p + h * k3p;
        const double k4p = accel(t + h, x + h * k3x);
        const double xn = x + h / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x);
        const double pn = p + h / 6.0 * (k1p + 2 * k2p + 2 * k3p + k4p);
        if (!std::isfinite(xn) || !std::isfinite(pn) || std::abs(xn) > kOverflowGuard ||
            std::abs(pn) > kOverflowGuard)
            throw DivergenceError("trajectory diverged", t);
        x = xn;
        p = pn;
        t = static_cast<double>(n + 1) * h;
        record(t);
    }
    return path;
}

TrajectoryPath accumulate_action(TrajectoryPath path, const PotentialSpec& pot) {
    const std::size_t n = path.size();
    if (n == 0 || path.x.size() != n || path.xi.size() != n)
        throw ConfigError("trajectory samples missing");
    auto& f = path.lagrangian;
    f.resize(n);
    for (std::size_t i = 0; i < n; ++i) f[i] = 0.5 * path.xi[i] * path.xi[i] - pot.eval(path.times[i], path.x[i]);

    path.S.assign(n, 0.0);
    if (n == 1) return path;
    const double h = path.times[1] - path.times[0];
    if (n == 2) {
        path.S[1] = 0.5 * h * (f[0] + f[1]);
        return path;
    }
    path.S[1] = h / 12.0 * (5.0 * f[0] + 8.0 * f[1] - f[2]);
    for (std::size_t i = 2; i < n; ++i) {
        if (i % 2 == 0)
            path.S[i] = path.S[i - 2] + h / 3.0 * (f[i - 2] + 4.0 * f[i - 1] + f[i]);
        else
            path.S[i] = path.S[i - 1] + h / 12.0 * (-f[i - 2] + 8.0 * f[i - 1] + 5.0 * f[i]);
    }
    return path;
}

TrajectoryPath modified_action(TrajectoryPath path, const KernelSpec& kernel, double mass_sq,
                               ActionRegime regime, double eps) {
    if (!kernel.is_smooth())
        throw RegimeError("modified action is only defined for smooth kernels");
    if (path.S.size() != path.size()) throw ConfigError("classical action must be accumulated first");
    double coefficient = 1.0;
    if (regime == ActionRegime::alpha_half) {
        if (!(eps > 0.0 && eps <= 1.0)) throw ConfigError("eps must lie in (0, 1]");
        coefficient = std::sqrt(eps);
    }
    const double rate = coefficient * kernel.smooth().k0 * mass_sq;
    std::vector<double> smod(path.size());
    for (std::size_t i = 0; i < path.size(); ++i) smod[i] = path.S[i] - rate * path.times[i];
    path.S_mod = std::move(smod);
    path.action_shift_rate = rate;
    path.action_regime = regime == ActionRegime::alpha0 ? "alpha0" : "alpha_half";
    return path;
}

std::vector<double> trajectory_energy(const TrajectoryPath& path, const PotentialSpec& pot) {
    std::vector<double> e(path.size());
    for (std::size_t i = 0; i < path.size(); ++i)
        e[i] = 0.5 * path.xi[i] * path.xi[i] + pot.eval(path.times[i], path.x[i]);
    return e;
}

GrowthFit fit_exponential_envelope(const std::vector<double>& times, const std::vector<double>& values) {
    if (times.size() != values.size() || times.empty()) throw ConfigError("growth fit needs samples");
    const double tiny = 1e-300;
    double st = 0, sl = 0, stt = 0, stl = 0;
    const auto m = static_cast<double>(times.size());
    for (std::size_t i = 0; i < times.size(); ++i) {
        const double l = std::log(std::max(std::abs(values[i]), tiny));
        st += times[i];
        sl += l;
        stt += times[i] * times[i];
        stl += times[i] * l;
    }
    const double denom = m * stt - st * st;
    double rate = denom > 0 ? (m * stl - st * sl) / denom : 0.0;
    rate = std::max(rate, 0.0);
    double C = 0.0;
    for (std::size_t i = 0; i < times.size(); ++i) C = std::max(C, std::abs(values[i]) * std::exp(-rate * times[i]));
    return {C, rate};
}

GrowthFit trajectory_growth(const TrajectoryPath& path) {
    std::vector<double> v(path.size());
    for (std::size_t i = 0; i < path.size(); ++i) v[i] = std::abs(path.x[i]) + std::abs(path.xi[i]);
    return fit_exponential_envelope(path.times, v);
}

}  // namespace hwp
