#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "hwp/classical.hpp"
#include "hwp/envelope.hpp"
#include "hwp/fit.hpp"
#include "hwp/packet.hpp"
#include "hwp/spectral.hpp"

namespace hwp {

/// alpha given numerically or relative to the critical exponent.
struct AlphaChoice {
    enum class Kind { value, critical, critical_plus };
    Kind kind = Kind::critical;
    double value = 0.0;  ///< alpha itself, or the offset for critical_plus

    double resolve(const KernelSpec& kernel) const;
    nlohmann::json to_json() const;
    /// Accepts a number, "critical", "critical+0.25" or {"critical_plus": 0.25}.
    static AlphaChoice from_json(const nlohmann::json& j);
};

struct PacketConfig {
    double x0 = 0.0;
    double xi0 = 1.0;
    double width = 1.0;  ///< Gaussian profile width
};

enum class ExperimentKind { converge, ehrenfest, superpose, phase_check, moment_check };
std::string to_string(ExperimentKind k);
ExperimentKind parse_experiment_kind(const std::string& s);

struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::converge;
    std::string potential = "cos:1,1";
    std::string kernel = "power_law:1,0.5";
    std::vector<PacketConfig> packets{PacketConfig{}};
    std::vector<double> eps;  ///< empty: 2^-4..2^-10 (rescaled) or 2^-3..2^-7 (physical)
    AlphaChoice alpha;
    std::string regime;  ///< envelope regime; empty selects it from kernel and alpha
    std::string norm;    ///< l2, h or sigma_eps; empty selects the regime default

    double t_fit = 1.0;
    double horizon = 2.0;              ///< Ehrenfest search window
    std::optional<double> threshold;   ///< Ehrenfest delta; default 0.1 ||a||
    std::optional<double> sigma;       ///< interaction-set exponent override
    std::optional<double> target_slope;
    std::optional<double> tolerance;

    std::size_t grid_n = 512;  ///< rescaled / envelope grid
    double grid_L = 16.0;
    double dt = 1e-3;
    std::size_t stride = 0;  ///< snapshot stride; 0 means 10 (rescaled) or 100 (physical)
    double margin = 2.0;  ///< physical domain margin

    std::string out_dir;  ///< empty: nothing written
    unsigned jobs = 1;

    static ExperimentConfig from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
    /// Fills defaults and checks invariants (eps in (0, 1], distinct, >= 4 for fits).
    void validate();
};

/// Runs f(0..count-1) on `jobs` worker threads. Results land at their own
/// index, so output order does not depend on scheduling.
void parallel_for(std::size_t count, unsigned jobs, const std::function<void(std::size_t)>& f);

struct ConvergenceResult {
    std::string regime;
    std::string norm;
    double alpha = 0.0;
    RateFit fit;
    std::vector<ErrorSeries> series;  ///< sorted by eps; failed runs are absent
    std::vector<std::string> warnings;
};
ConvergenceResult run_convergence(const ExperimentConfig& cfg);

struct PhaseCheckRow {
    double eps = 0.0;
    double t = 0.0;
    double corrected = 0.0;  ///< error against u_lin exp(-i t k0 m)
    double naive = 0.0;      ///< error against u_lin
    double ratio = 0.0;      ///< corrected / naive
};
struct PhaseCheckResult {
    double k0 = 0.0;
    double mass_sq = 0.0;
    double norm_a = 0.0;
    double naive_prediction = 0.0;  ///< 2 |sin(t k0 m / 2)| ||a||
    std::vector<PhaseCheckRow> rows;
};
PhaseCheckResult run_alpha1_phase_discrimination(const ExperimentConfig& cfg);

/// First time the linearly interpolated series exceeds `threshold`.
std::optional<double> first_crossing(const std::vector<double>& times, const std::vector<double>& values,
                                     double threshold);

struct EhrenfestPoint {
    double eps = 0.0;
    std::optional<double> t_star;  ///< empty when censored
};
struct EhrenfestResult {
    double threshold = 0.0;
    std::vector<EhrenfestPoint> points;
    LinearFit fit;  ///< T* = slope ln(1/eps) + intercept over uncensored points
    bool valid = false;
    bool pass = false;  ///< valid and slope > 0
    std::vector<std::string> warnings;
};
EhrenfestResult run_ehrenfest(const ExperimentConfig& cfg);

/// Lebesgue measure of {t in [0, T] : |x1(t) - x2(t)| <= r}, with the
/// distance linearly interpolated between trajectory samples.
double interaction_measure(const TrajectoryPath& p1, const TrajectoryPath& p2, double r, double T);

struct InteractionRow {
    double eps = 0.0;
    double radius = 0.0;     ///< eps^sigma
    double measured = 0.0;   ///< |I^eps(T)|
    double predicted = 0.0;  ///< 2 eps^sigma / |xi1 - xi2|
    double relative_error = 0.0;
};
struct SuperpositionResult {
    double sigma = 0.0;
    RateFit fit;
    std::vector<ErrorSeries> series;
    std::vector<InteractionRow> interaction;
    std::vector<std::size_t> grid_sizes;
    std::vector<std::string> warnings;
};
SuperpositionResult run_superposition(const ExperimentConfig& cfg);

struct MomentCheckResult {
    double residual = 0.0;  ///< max |G'' + Q G|
    double max_mass_drift = 0.0;
    std::vector<double> times;
    std::vector<double> G;
};
MomentCheckResult run_moment_check(const ExperimentConfig& cfg);

/// Dispatches on cfg.kind, writes CSVs, fit.json and manifest.json into
/// cfg.out_dir and returns the summary that went to fit.json.
nlohmann::json run_experiment(const ExperimentConfig& cfg);

std::string library_version();

}  // namespace hwp
