#include "hwp/experiments.hpp"

#include <fftw3.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <filesystem>
#include <limits>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "hwp/direct.hpp"
#include "hwp/errors.hpp"
#include "hwp/io.hpp"

namespace hwp {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Configuration

double AlphaChoice::resolve(const KernelSpec& kernel) const {
    switch (kind) {
        case Kind::value: return value;
        case Kind::critical: return critical_exponent(kernel);
        case Kind::critical_plus: return critical_exponent(kernel) + value;
    }
    return value;
}

json AlphaChoice::to_json() const {
    switch (kind) {
        case Kind::value: return value;
        case Kind::critical: return "critical";
        case Kind::critical_plus: return json{{"critical_plus", value}};
    }
    return value;
}

AlphaChoice AlphaChoice::from_json(const json& j) {
    AlphaChoice a;
    if (j.is_number()) {
        a.kind = Kind::value;
        a.value = j.get<double>();
        return a;
    }
    if (j.is_object() && j.contains("critical_plus") && j.size() == 1) {
        a.kind = Kind::critical_plus;
        a.value = j.at("critical_plus").get<double>();
        return a;
    }
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "critical") return a;
        if (s.rfind("critical+", 0) == 0) {
            a.kind = Kind::critical_plus;
            try {
                a.value = std::stod(s.substr(9));
            } catch (const std::exception&) {
                throw ConfigError("cannot parse alpha '" + s + "'");
            }
            return a;
        }
        try {
            std::size_t used = 0;
            a.value = std::stod(s, &used);
            if (used != s.size()) throw ConfigError("");
            a.kind = Kind::value;
            return a;
        } catch (const std::exception&) {
        }
    }
    throw ConfigError("alpha must be a number, \"critical\", \"critical+d\" or {\"critical_plus\": d}");
}

std::string to_string(ExperimentKind k) {
    switch (k) {
        case ExperimentKind::converge: return "converge";
        case ExperimentKind::ehrenfest: return "ehrenfest";
        case ExperimentKind::superpose: return "superpose";
        case ExperimentKind::phase_check: return "phase-check";
        case ExperimentKind::moment_check: return "moment-check";
    }
    return "converge";
}

ExperimentKind parse_experiment_kind(const std::string& s) {
    if (s == "converge") return ExperimentKind::converge;
    if (s == "ehrenfest") return ExperimentKind::ehrenfest;
    if (s == "superpose") return ExperimentKind::superpose;
    if (s == "phase-check" || s == "phase_check") return ExperimentKind::phase_check;
    if (s == "moment-check" || s == "moment_check") return ExperimentKind::moment_check;
    throw ConfigError("unknown experiment kind '" + s + "'");
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("experiment config must be a JSON object");
    static const std::set<std::string> known = {
        "kind",   "potential", "kernel",       "packets",   "eps",  "eps_k", "alpha",  "regime", "norm",
        "t_fit",  "horizon",   "threshold",    "sigma",     "target_slope", "tolerance", "grid", "dt",
        "stride", "margin",    "out",          "jobs"};
    for (const auto& [key, value] : j.items())
        if (!known.count(key)) throw ConfigError("unknown config key '" + key + "'");

    ExperimentConfig c;
    try {
        if (j.contains("kind")) c.kind = parse_experiment_kind(j.at("kind").get<std::string>());
        if (j.contains("potential")) c.potential = j.at("potential").get<std::string>();
        if (j.contains("kernel")) c.kernel = j.at("kernel").get<std::string>();
        if (j.contains("packets")) {
            c.packets.clear();
            for (const auto& p : j.at("packets")) {
                PacketConfig pc;
                pc.x0 = p.value("x0", 0.0);
                pc.xi0 = p.value("xi0", 1.0);
                pc.width = p.value("width", 1.0);
                c.packets.push_back(pc);
            }
        }
        if (j.contains("eps") && j.contains("eps_k")) throw ConfigError("give either eps or eps_k, not both");
        if (j.contains("eps")) c.eps = j.at("eps").get<std::vector<double>>();
        if (j.contains("eps_k"))
            for (int k : j.at("eps_k").get<std::vector<int>>()) c.eps.push_back(std::ldexp(1.0, -k));
        if (j.contains("alpha")) c.alpha = AlphaChoice::from_json(j.at("alpha"));
        if (j.contains("regime")) c.regime = j.at("regime").get<std::string>();
        if (j.contains("norm")) c.norm = j.at("norm").get<std::string>();
        if (j.contains("t_fit")) c.t_fit = j.at("t_fit").get<double>();
        if (j.contains("horizon")) c.horizon = j.at("horizon").get<double>();
        if (j.contains("threshold")) c.threshold = j.at("threshold").get<double>();
        if (j.contains("sigma")) c.sigma = j.at("sigma").get<double>();
        if (j.contains("target_slope")) c.target_slope = j.at("target_slope").get<double>();
        if (j.contains("tolerance")) c.tolerance = j.at("tolerance").get<double>();
        if (j.contains("grid")) {
            const auto& g = j.at("grid");
            c.grid_n = g.value("n", c.grid_n);
            c.grid_L = g.value("L", c.grid_L);
        }
        if (j.contains("dt")) c.dt = j.at("dt").get<double>();
        if (j.contains("stride")) c.stride = j.at("stride").get<std::size_t>();
        if (j.contains("margin")) c.margin = j.at("margin").get<double>();
        if (j.contains("out")) c.out_dir = j.at("out").get<std::string>();
        if (j.contains("jobs")) c.jobs = j.at("jobs").get<unsigned>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad config value: ") + e.what());
    }
    return c;
}

json ExperimentConfig::to_json() const {
    json packets_json = json::array();
    for (const auto& p : packets) packets_json.push_back({{"x0", p.x0}, {"xi0", p.xi0}, {"width", p.width}});
    json j = {{"kind", to_string(kind)},
              {"potential", potential},
              {"kernel", kernel},
              {"packets", packets_json},
              {"eps", eps},
              {"alpha", alpha.to_json()},
              {"t_fit", t_fit},
              {"horizon", horizon},
              {"grid", {{"n", grid_n}, {"L", grid_L}}},
              {"dt", dt},
              {"stride", stride},
              {"margin", margin},
              {"jobs", jobs}};
    if (!regime.empty()) j["regime"] = regime;
    if (!norm.empty()) j["norm"] = norm;
    if (threshold) j["threshold"] = *threshold;
    if (sigma) j["sigma"] = *sigma;
    if (target_slope) j["target_slope"] = *target_slope;
    if (tolerance) j["tolerance"] = *tolerance;
    if (!out_dir.empty()) j["out"] = out_dir;
    return j;
}

void ExperimentConfig::validate() {
    const bool physical = kind == ExperimentKind::superpose;
    if (eps.empty()) {
        const int k0 = physical ? 3 : 4;
        const int k1 = physical ? 7 : 10;
        for (int k = k0; k <= k1; ++k) eps.push_back(std::ldexp(1.0, -k));
    }
    for (double e : eps)
        if (!(e > 0.0 && e <= 1.0)) throw ConfigError("eps values must lie in (0, 1], got " + std::to_string(e));
    if (std::set<double>(eps.begin(), eps.end()).size() != eps.size()) throw ConfigError("eps values must be distinct");
    const bool fits = kind == ExperimentKind::converge || kind == ExperimentKind::ehrenfest ||
                      kind == ExperimentKind::superpose;
    if (fits && eps.size() < 4) throw ConfigError("a rate fit needs at least 4 eps values");
    if (!(dt > 0.0)) throw ConfigError("dt must be positive");
    if (!(t_fit > 0.0)) throw ConfigError("t_fit must be positive");
    if (kind == ExperimentKind::ehrenfest && !(horizon > 0.0)) throw ConfigError("horizon must be positive");
    if (threshold && !(*threshold > 0.0)) throw ConfigError("threshold must be positive");
    if (packets.empty()) throw ConfigError("at least one packet is required");
    if (physical && packets.size() != 2) throw ConfigError("superposition needs exactly two packets");
    for (const auto& p : packets)
        if (!(p.width > 0.0)) throw ConfigError("packet width must be positive");
    if (jobs == 0) jobs = 1;
    if (stride == 0) stride = physical ? 100 : 10;
    (void)PotentialSpec::parse(potential);
    (void)KernelSpec::parse(kernel);
    (void)Grid1D(grid_n, grid_L);
}

void parallel_for(std::size_t count, unsigned jobs, const std::function<void(std::size_t)>& f) {
    const auto workers = static_cast<std::size_t>(std::max(1u, jobs));
    if (workers == 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) f(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < std::min(workers, count); ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) {
                try {
                    f(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

std::string library_version() { return "1.0.0"; }

// ---------------------------------------------------------------------------
// Shared single-packet setup

namespace {

constexpr double kAlphaMatch = 1e-12;

bool same(double a, double b) { return std::abs(a - b) <= kAlphaMatch; }

EnvelopeRegime select_regime(const KernelSpec& kernel, double alpha, const std::string& requested) {
    if (!requested.empty()) return parse_envelope_regime(requested);
    if (kernel.is_homogeneous()) {
        const double ac = critical_exponent(kernel);
        if (same(alpha, ac)) return EnvelopeRegime::critical;
        if (alpha > ac) return EnvelopeRegime::linear;
        throw RegimeError("alpha below the critical exponent is not covered for homogeneous kernels");
    }
    if (alpha > 1.0 + kAlphaMatch) return EnvelopeRegime::linear;
    if (same(alpha, 1.0)) return EnvelopeRegime::alpha1;
    if (same(alpha, 0.5)) return EnvelopeRegime::alpha_half;
    if (same(alpha, 0.0)) return EnvelopeRegime::alpha0;
    throw RegimeError("smooth kernels are covered for alpha > 1 and alpha in {0, 1/2, 1}, got " +
                      std::to_string(alpha));
}

/// Target slope and tolerance of a convergence fit.
std::pair<double, double> default_target(const KernelSpec& kernel, double alpha, EnvelopeRegime regime) {
    if (regime == EnvelopeRegime::linear) {
        const double excess = alpha - critical_exponent(kernel);
        // the rate saturates at 1/2, where the quadratic remainder takes over
        if (excess >= 0.5) return {0.5, 0.15};
        return {excess, kernel.is_homogeneous() ? 0.1 : 0.15};
    }
    return {0.5, 0.15};
}

std::string default_norm(const KernelSpec& kernel, EnvelopeRegime regime) {
    return kernel.is_homogeneous() && regime == EnvelopeRegime::linear ? "h" : "l2";
}

struct Setup {
    explicit Setup(const Grid1D& grid) : a(grid) {}

    PotentialSpec pot;
    KernelSpec kernel;
    double alpha = 0.0;
    EnvelopeRegime regime = EnvelopeRegime::linear;
    Field a;
    double mass_sq = 0.0;
    TrajectoryPath base_path;
    QuadraticPotentialTrace Q;
    StepOptions opts;
    EnvelopeRun envelope;

    TrajectoryPath path_for(double eps) const {
        if (!kernel.is_smooth() || !(alpha < 1.0)) return base_path;
        const auto r = regime == EnvelopeRegime::alpha_half ? ActionRegime::alpha_half : ActionRegime::alpha0;
        return modified_action(base_path, kernel, mass_sq, r, eps);
    }
};

EnvelopeRun solve_envelope(EnvelopeRegime regime, const Field& a, const QuadraticPotentialTrace& Q,
                           const KernelSpec& kernel, double mass_sq, const StepOptions& opts) {
    switch (regime) {
        case EnvelopeRegime::linear: return solve_linear_envelope(a, Q, opts);
        case EnvelopeRegime::critical: return solve_hartree_envelope(a, Q, kernel, opts);
        case EnvelopeRegime::alpha1:
            return alpha1_envelope(solve_linear_envelope(a, Q, opts), kernel.smooth().k0, mass_sq);
        case EnvelopeRegime::alpha_half:
            return solve_smooth_supercritical_envelope(a, Q, kernel, mass_sq, SupercriticalRegime::alpha_half, opts);
        case EnvelopeRegime::alpha0:
            return solve_smooth_supercritical_envelope(a, Q, kernel, mass_sq, SupercriticalRegime::alpha0, opts);
    }
    throw RegimeError("unknown envelope regime");
}

Setup make_setup(const ExperimentConfig& cfg, const PacketConfig& packet, double t_end, EnvelopeRegime regime) {
    const Grid1D grid(cfg.grid_n, cfg.grid_L);
    Setup s(grid);
    s.pot = PotentialSpec::parse(cfg.potential);
    s.kernel = KernelSpec::parse(cfg.kernel);
    s.alpha = cfg.alpha.resolve(s.kernel);
    s.regime = regime;
    s.a = Field::from_function(grid, gaussian_profile(0.0, 0.0, packet.width));
    s.mass_sq = l2_norm_sq(s.a);
    const double pad = 10.0 * cfg.dt;
    s.base_path = accumulate_action(solve_trajectory(s.pot, packet.x0, packet.xi0, t_end + 2.0 * pad, cfg.dt), s.pot);
    s.Q = QuadraticPotentialTrace::from_path(s.base_path, s.pot, t_end + pad, cfg.dt);
    s.opts.t_end = t_end;
    s.opts.dt = cfg.dt;
    s.opts.stride = cfg.stride;
    s.opts.sigma_diagnostics = false;
    s.envelope = solve_envelope(regime, s.a, s.Q, s.kernel, s.mass_sq, s.opts);
    return s;
}

template <class T>
void sort_by_eps(std::vector<T>& v) {
    std::sort(v.begin(), v.end(), [](const T& a, const T& b) { return a.eps < b.eps; });
}

std::string eps_label(double eps) {
    std::ostringstream os;
    os.precision(6);
    os << eps;
    return os.str();
}

}  // namespace

// ---------------------------------------------------------------------------

ConvergenceResult run_convergence(const ExperimentConfig& cfg_in) {
    ExperimentConfig cfg = cfg_in;
    cfg.validate();
    const auto kernel = KernelSpec::parse(cfg.kernel);
    const double alpha = cfg.alpha.resolve(kernel);
    const auto regime = select_regime(kernel, alpha, cfg.regime);
    const Setup s = make_setup(cfg, cfg.packets.front(), cfg.t_fit, regime);

    ConvergenceResult out;
    out.regime = to_string(regime);
    out.alpha = alpha;
    out.norm = cfg.norm.empty() ? default_norm(kernel, regime) : cfg.norm;
    const auto [target, tol] = default_target(kernel, alpha, regime);
    const NormSelection norms{out.norm == "h", out.norm == "sigma_eps"};
    out.warnings = s.envelope.warnings;

    std::vector<std::optional<ErrorSeries>> series(cfg.eps.size());
    std::vector<std::string> failures(cfg.eps.size());
    std::vector<std::vector<std::string>> run_warnings(cfg.eps.size());
    parallel_for(cfg.eps.size(), cfg.jobs, [&](std::size_t i) {
        const double eps = cfg.eps[i];
        try {
            const auto run = solve_rescaled(s.a, eps, alpha, s.pot, s.path_for(eps), s.kernel, s.opts);
            series[i] = error_series(run, s.envelope, norms, out.regime);
            run_warnings[i] = run.warnings;
        } catch (const std::exception& e) {
            failures[i] = "eps = " + eps_label(eps) + ": " + e.what();
        }
    });

    std::vector<std::pair<double, double>> points;
    bool all_ok = true;
    for (std::size_t i = 0; i < cfg.eps.size(); ++i) {
        for (const auto& w : run_warnings[i]) out.warnings.push_back("eps = " + eps_label(cfg.eps[i]) + ": " + w);
        if (!series[i]) {
            all_ok = false;
            out.warnings.push_back(failures[i]);
            continue;
        }
        points.emplace_back(cfg.eps[i], series[i]->at(cfg.t_fit, out.norm));
        out.series.push_back(std::move(*series[i]));
    }
    sort_by_eps(out.series);
    out.fit = fit_rate(points, cfg.target_slope.value_or(target), cfg.tolerance.value_or(tol));
    if (!all_ok) {
        out.fit.valid = false;
        out.fit.pass = false;
        out.fit.note = "one or more runs aborted";
    }
    return out;
}

PhaseCheckResult run_alpha1_phase_discrimination(const ExperimentConfig& cfg_in) {
    ExperimentConfig cfg = cfg_in;
    cfg.validate();
    const auto kernel = KernelSpec::parse(cfg.kernel);
    if (!kernel.is_smooth()) throw RegimeError("the alpha = 1 phase check needs a smooth kernel");
    const Setup s = make_setup(cfg, cfg.packets.front(), cfg.t_fit, EnvelopeRegime::linear);
    const double k0 = kernel.smooth().k0;
    const auto shifted = alpha1_envelope(s.envelope, k0, s.mass_sq);

    PhaseCheckResult out;
    out.k0 = k0;
    out.mass_sq = s.mass_sq;
    out.norm_a = std::sqrt(s.mass_sq);
    out.naive_prediction = 2.0 * std::abs(std::sin(0.5 * cfg.t_fit * k0 * s.mass_sq)) * out.norm_a;
    out.rows.resize(cfg.eps.size());
    parallel_for(cfg.eps.size(), cfg.jobs, [&](std::size_t i) {
        const double eps = cfg.eps[i];
        const auto run = solve_rescaled(s.a, eps, 1.0, s.pot, s.base_path, kernel, s.opts);
        PhaseCheckRow row;
        row.eps = eps;
        row.t = cfg.t_fit;
        row.corrected = error_series(run, shifted, {}, "alpha1").at(cfg.t_fit);
        row.naive = error_series(run, s.envelope, {}, "linear").at(cfg.t_fit);
        row.ratio = row.naive > 0.0 ? row.corrected / row.naive : 1.0;
        out.rows[i] = row;
    });
    sort_by_eps(out.rows);
    return out;
}

std::optional<double> first_crossing(const std::vector<double>& times, const std::vector<double>& values,
                                     double threshold) {
    if (times.size() != values.size()) throw ConfigError("first_crossing: size mismatch");
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!(values[i] > threshold)) continue;
        if (i == 0) return times[0];
        const double v0 = values[i - 1];
        const double v1 = values[i];
        const double w = (threshold - v0) / (v1 - v0);
        return times[i - 1] + w * (times[i] - times[i - 1]);
    }
    return std::nullopt;
}

EhrenfestResult run_ehrenfest(const ExperimentConfig& cfg_in) {
    ExperimentConfig cfg = cfg_in;
    cfg.validate();
    const auto kernel = KernelSpec::parse(cfg.kernel);
    const double alpha = cfg.alpha.resolve(kernel);
    const auto regime = select_regime(kernel, alpha, cfg.regime);
    const Setup s = make_setup(cfg, cfg.packets.front(), cfg.horizon, regime);
    const std::string norm = cfg.norm.empty() ? "l2" : cfg.norm;
    const NormSelection norms{norm == "h", norm == "sigma_eps"};

    EhrenfestResult out;
    out.threshold = cfg.threshold.value_or(0.1 * std::sqrt(s.mass_sq));
    out.warnings = s.envelope.warnings;
    out.points.resize(cfg.eps.size());
    std::vector<std::string> failures(cfg.eps.size());
    parallel_for(cfg.eps.size(), cfg.jobs, [&](std::size_t i) {
        const double eps = cfg.eps[i];
        out.points[i].eps = eps;
        try {
            const auto run = solve_rescaled(s.a, eps, alpha, s.pot, s.path_for(eps), s.kernel, s.opts);
            const auto es = error_series(run, s.envelope, norms, to_string(regime));
            out.points[i].t_star = first_crossing(es.times, es.series(norm), out.threshold);
        } catch (const DivergenceError& e) {
            // a blow-up marks the end of validity; the error is unbounded from there
            out.points[i].t_star = e.last_valid_time();
            failures[i] = "eps = " + eps_label(eps) + ": diverged, T* set to last valid time";
        }
    });
    sort_by_eps(out.points);

    std::vector<double> lx, ty;
    for (const auto& p : out.points) {
        if (!p.t_star) {
            out.warnings.push_back("eps = " + eps_label(p.eps) + ": threshold not crossed before " +
                                   eps_label(cfg.horizon) + ", censored");
            continue;
        }
        lx.push_back(std::log(1.0 / p.eps));
        ty.push_back(*p.t_star);
    }
    for (const auto& f : failures)
        if (!f.empty()) out.warnings.push_back(f);
    if (lx.size() >= 2) {
        out.fit = least_squares(lx, ty);
        out.valid = true;
        out.pass = out.fit.slope > 0.0;
    } else {
        out.warnings.push_back("fewer than two uncensored runs, no fit");
    }
    return out;
}

double interaction_measure(const TrajectoryPath& p1, const TrajectoryPath& p2, double r, double T) {
    if (p1.size() < 2 || p2.size() < 2) throw ConfigError("interaction measure needs sampled trajectories");
    if (p1.t_end() < T - 1e-9 || p2.t_end() < T - 1e-9) throw ConfigError("trajectories do not cover [0, T]");
    // sample on the finer of the two step sizes
    const double h = std::min(p1.times[1] - p1.times[0], p2.times[1] - p2.times[0]);
    const auto steps = static_cast<std::size_t>(std::ceil(T / h - 1e-9));
    const double dt = T / static_cast<double>(steps);
    auto f = [&](double t) { return std::abs(p1.at(t).x - p2.at(t).x) - r; };
    double measure = 0.0;
    double t0 = 0.0;
    double f0 = f(0.0);
    for (std::size_t k = 1; k <= steps; ++k) {
        const double t1 = std::min(T, static_cast<double>(k) * dt);
        const double f1 = f(t1);
        if (f0 <= 0.0 && f1 <= 0.0) {
            measure += t1 - t0;
        } else if (f0 <= 0.0 || f1 <= 0.0) {
            const double tc = t0 + (t1 - t0) * f0 / (f0 - f1);
            measure += f0 <= 0.0 ? tc - t0 : t1 - tc;
        }
        t0 = t1;
        f0 = f1;
    }
    return measure;
}

SuperpositionResult run_superposition(const ExperimentConfig& cfg_in) {
    ExperimentConfig cfg = cfg_in;
    cfg.validate();
    const auto kernel = KernelSpec::parse(cfg.kernel);
    if (!kernel.is_homogeneous()) throw RegimeError("the superposition rate is defined for homogeneous kernels");
    const double gamma = kernel.homogeneous().gamma;
    const double alpha = cfg.alpha.resolve(kernel);
    const auto regime = select_regime(kernel, alpha, cfg.regime);
    const double T = cfg.t_fit;
    const std::string norm = cfg.norm.empty() ? "sigma_eps" : cfg.norm;

    SuperpositionResult out;
    const double target = gamma / (2.0 * (1.0 + gamma));
    out.sigma = cfg.sigma.value_or(target);

    std::vector<Setup> setups;
    double y_reach = 0.0;
    for (const auto& p : cfg.packets) {
        setups.push_back(make_setup(cfg, p, T, regime));
        const auto& env = setups.back().envelope;
        for (const auto& w : env.warnings) out.warnings.push_back("envelope: " + w);
        for (const auto& f : env.fields)
            for (std::size_t j = 0; j < f.size(); ++j)
                if (std::abs(f[j]) > 1e-10) y_reach = std::max(y_reach, std::abs(f.grid.point(j)));
    }

    std::vector<PacketSpec> packets;
    for (const auto& p : cfg.packets) packets.push_back({gaussian_profile(0.0, 0.0, p.width), p.x0, p.xi0, p.width});
    {
        // overlap of the initial packets at the coarsest eps
        const double eps = *std::max_element(cfg.eps.begin(), cfg.eps.end());
        const auto grid = physical_grid(packets, setups[0].pot, eps, cfg.dt, cfg.margin);
        const auto f1 = physical_initial_data({packets[0]}, eps, grid);
        const auto f2 = physical_initial_data({packets[1]}, eps, grid);
        double overlap = 0.0;
        for (std::size_t j = 0; j < grid.n(); ++j) overlap += std::abs(f1[j]) * std::abs(f2[j]);
        overlap *= grid.spacing();
        if (overlap > 1e-6)
            out.warnings.push_back("initial packets overlap: int |phi1||phi2| = " + eps_label(overlap) +
                                   " at eps = " + eps_label(eps));
    }

    const std::size_t m = cfg.eps.size();
    std::vector<std::optional<ErrorSeries>> series(m);
    std::vector<std::string> failures(m);
    std::vector<std::vector<std::string>> run_warnings(m);
    out.grid_sizes.assign(m, 0);
    parallel_for(m, cfg.jobs, [&](std::size_t i) {
        const double eps = cfg.eps[i];
        try {
            const auto grid = physical_grid(packets, setups[0].pot, eps, T, cfg.margin, y_reach);
            out.grid_sizes[i] = grid.n();
            StepOptions opts = setups[0].opts;
            const auto run = solve_physical(packets, eps, alpha, setups[0].pot, kernel, grid, opts);
            std::vector<std::pair<const EnvelopeRun*, PacketFrame>> approx;
            for (const auto& s : setups) approx.emplace_back(&s.envelope, PacketFrame(eps, s.base_path));
            series[i] = error_series(run, approx, {norm == "h", norm == "sigma_eps"}, "superpose");
            run_warnings[i] = run.warnings;
        } catch (const std::exception& e) {
            failures[i] = "eps = " + eps_label(eps) + ": " + e.what();
        }
    });

    std::vector<std::pair<double, double>> points;
    bool all_ok = true;
    for (std::size_t i = 0; i < m; ++i) {
        for (const auto& w : run_warnings[i]) out.warnings.push_back("eps = " + eps_label(cfg.eps[i]) + ": " + w);
        if (!series[i]) {
            all_ok = false;
            out.warnings.push_back(failures[i]);
            continue;
        }
        points.emplace_back(cfg.eps[i], series[i]->at(T, norm));
        out.series.push_back(std::move(*series[i]));
    }
    sort_by_eps(out.series);
    out.fit = fit_rate(points, cfg.target_slope.value_or(target), cfg.tolerance.value_or(0.1));
    if (!all_ok) {
        out.fit.valid = false;
        out.fit.pass = false;
        out.fit.note = "one or more runs aborted";
    }

    const double dxi = std::abs(cfg.packets[0].xi0 - cfg.packets[1].xi0);
    for (double eps : cfg.eps) {
        InteractionRow row;
        row.eps = eps;
        row.radius = std::pow(eps, out.sigma);
        row.measured = interaction_measure(setups[0].base_path, setups[1].base_path, row.radius, T);
        row.predicted = dxi > 0.0 ? 2.0 * row.radius / dxi : std::numeric_limits<double>::infinity();
        row.relative_error = std::isfinite(row.predicted) ? std::abs(row.measured - row.predicted) / row.predicted
                                                          : std::numeric_limits<double>::infinity();
        out.interaction.push_back(row);
    }
    sort_by_eps(out.interaction);
    return out;
}

MomentCheckResult run_moment_check(const ExperimentConfig& cfg_in) {
    ExperimentConfig cfg = cfg_in;
    cfg.validate();
    const auto kernel = KernelSpec::parse(cfg.kernel);
    if (!kernel.is_smooth()) throw RegimeError("the moment check needs a smooth kernel");
    const Setup s = make_setup(cfg, cfg.packets.front(), cfg.t_fit, EnvelopeRegime::alpha0);
    MomentCheckResult out;
    out.residual = moment_ode_residual(s.envelope, s.Q);
    out.max_mass_drift = s.envelope.max_mass_drift();
    out.times = s.envelope.step_times;
    out.G = s.envelope.moment_G;
    return out;
}

// ---------------------------------------------------------------------------
// Persistence

namespace {

json points_json(const std::vector<std::pair<double, double>>& pts) {
    json a = json::array();
    for (const auto& [e, v] : pts) a.push_back({{"eps", e}, {"error", v}});
    return a;
}

json rate_json(const RateFit& f) {
    json j = {{"slope", f.slope},
              {"intercept", f.intercept},
              {"r_squared", f.r_squared},
              {"target", f.target_slope},
              {"tolerance", f.tolerance},
              {"verdict", !f.valid ? "invalid" : (f.pass ? "pass" : "fail")},
              {"points", points_json(f.points)}};
    if (!f.note.empty()) j["note"] = f.note;
    return j;
}

std::string fftw_version_string() { return fftw_version; }

}  // namespace

json run_experiment(const ExperimentConfig& cfg_in) {
    ExperimentConfig cfg = cfg_in;
    cfg.validate();
    const bool write = !cfg.out_dir.empty();
    const std::filesystem::path dir(cfg.out_dir);
    if (write) std::filesystem::create_directories(dir);
    std::vector<std::string> outputs;
    auto emit_series = [&](const std::vector<ErrorSeries>& series) {
        if (!write) return;
        for (const auto& s : series) {
            const auto name = error_csv_name(s.regime, s.eps);
            write_error_csv(s, (dir / name).string());
            outputs.push_back(name);
        }
    };

    json summary;
    switch (cfg.kind) {
        case ExperimentKind::converge: {
            const auto r = run_convergence(cfg);
            emit_series(r.series);
            summary = rate_json(r.fit);
            summary["regime"] = r.regime;
            summary["norm"] = r.norm;
            summary["alpha"] = r.alpha;
            summary["t_fit"] = cfg.t_fit;
            summary["warnings"] = r.warnings;
            break;
        }
        case ExperimentKind::ehrenfest: {
            const auto r = run_ehrenfest(cfg);
            json pts = json::array();
            for (const auto& p : r.points)
                pts.push_back({{"eps", p.eps},
                               {"t_star", p.t_star ? json(*p.t_star) : json(nullptr)},
                               {"censored", !p.t_star.has_value()}});
            summary = {{"slope", r.fit.slope},
                       {"intercept", r.fit.intercept},
                       {"r_squared", r.fit.r_squared},
                       {"target", "slope > 0"},
                       {"verdict", !r.valid ? "invalid" : (r.pass ? "pass" : "fail")},
                       {"threshold", r.threshold},
                       {"horizon", cfg.horizon},
                       {"points", pts},
                       {"warnings", r.warnings}};
            break;
        }
        case ExperimentKind::superpose: {
            const auto r = run_superposition(cfg);
            emit_series(r.series);
            summary = rate_json(r.fit);
            json rows = json::array();
            for (const auto& row : r.interaction)
                rows.push_back({{"eps", row.eps},
                                {"radius", row.radius},
                                {"measured", row.measured},
                                {"predicted", row.predicted},
                                {"relative_error", row.relative_error}});
            summary["sigma"] = r.sigma;
            summary["interaction"] = rows;
            summary["grid_sizes"] = r.grid_sizes;
            summary["T"] = cfg.t_fit;
            summary["warnings"] = r.warnings;
            break;
        }
        case ExperimentKind::phase_check: {
            const auto r = run_alpha1_phase_discrimination(cfg);
            json rows = json::array();
            std::vector<std::pair<double, double>> corrected;
            for (const auto& row : r.rows) {
                rows.push_back({{"eps", row.eps},
                                {"t", row.t},
                                {"corrected", row.corrected},
                                {"naive", row.naive},
                                {"ratio", row.ratio}});
                corrected.emplace_back(row.eps, row.corrected);
            }
            summary = {{"k0", r.k0},
                       {"mass_sq", r.mass_sq},
                       {"norm_a", r.norm_a},
                       {"naive_prediction", r.naive_prediction},
                       {"rows", rows}};
            if (corrected.size() >= 2) {
                const auto f = fit_rate(corrected, 0.5, 0.15);
                summary["slope"] = f.slope;
                summary["intercept"] = f.intercept;
                summary["r_squared"] = f.r_squared;
            }
            summary["target"] = "corrected error decreasing in eps";
            const bool decreasing = std::is_sorted(r.rows.begin(), r.rows.end(), [](const auto& a, const auto& b) {
                return a.corrected < b.corrected;
            });
            summary["verdict"] = decreasing ? "pass" : "fail";
            break;
        }
        case ExperimentKind::moment_check: {
            const auto r = run_moment_check(cfg);
            summary = {{"residual", r.residual},
                       {"max_mass_drift", r.max_mass_drift},
                       {"target", "residual < 1e-3"},
                       {"verdict", r.residual < 1e-3 ? "pass" : "fail"}};
            if (write) {
                std::ostringstream os;
                os.precision(17);
                os << "t,G\n";
                for (std::size_t i = 0; i < r.times.size(); ++i) os << r.times[i] << "," << r.G[i] << "\n";
                write_text((dir / "moment_G.csv").string(), os.str());
                outputs.push_back("moment_G.csv");
            }
            break;
        }
    }

    if (write) {
        write_text((dir / "fit.json").string(), summary.dump(2) + "\n");
        outputs.push_back("fit.json");
        const json manifest = {{"config", cfg.to_json()},
                               {"versions",
                                {{"hwp", library_version()},
                                 {"fftw", fftw_version_string()},
                                 {"compiler", __VERSION__},
                                 {"cxx_standard", static_cast<long>(__cplusplus)}}},
                               {"outputs", outputs}};
        write_text((dir / "manifest.json").string(), manifest.dump(2) + "\n");
    }
    return summary;
}

}  // namespace hwp
