#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "hwp/classical.hpp"
#include "hwp/spectral.hpp"

namespace hwp {

enum class EnvelopeRegime { linear, critical, alpha1, alpha_half, alpha0 };

std::string to_string(EnvelopeRegime r);
EnvelopeRegime parse_envelope_regime(const std::string& s);

/// Time samples of the quadratic envelope potential
///   1/2 Q(t) y^2 + b(t) y + c(t),
/// with Q(t) = V''(t, x(t)). Samples are spaced dt/2 so that both step
/// endpoints and Strang midpoints are sample points.
struct QuadraticPotentialTrace {
    double spacing = 0.0;
    std::vector<double> Q;
    std::vector<double> linear_term;  ///< b(t); empty means zero
    std::vector<double> scalar_term;  ///< c(t); empty means zero

    double t_end() const { return spacing * static_cast<double>(Q.empty() ? 0 : Q.size() - 1); }
    double Q_at(double t) const;
    double linear_at(double t) const;
    double scalar_at(double t) const;

    static QuadraticPotentialTrace constant(double q, double t_end, double dt);
    static QuadraticPotentialTrace from_function(const std::function<double(double)>& q, double t_end,
                                                 double dt);
    /// Hessian of the potential along a trajectory.
    static QuadraticPotentialTrace from_path(const TrajectoryPath& path, const PotentialSpec& pot,
                                             double t_end, double dt);
};

struct StepOptions {
    double t_end = 1.0;
    double dt = 1e-3;
    std::size_t stride = 10;          ///< snapshot every `stride` steps (the final time is always kept)
    bool sigma_diagnostics = true;    ///< Sigma^k norms at every snapshot
    bool keep_fields = true;
    /// Called at every step with (step index, time, field); the field is the
    /// gauged envelope.
    std::function<void(std::size_t, double, const Field&)> observer;
};

/// Result of an envelope solve. Per-step series cover every time step;
/// snapshots follow the configured stride.
struct EnvelopeRun {
    EnvelopeRegime regime = EnvelopeRegime::linear;
    double dt = 0.0;
    std::size_t stride = 1;

    std::vector<double> step_times;
    std::vector<double> moment_G;     ///< int y |u|^2 dy
    std::vector<double> gauge_theta;  ///< phase applied on top of the ungauged solution
    std::vector<double> mass;         ///< ||u||^2

    std::vector<double> times;        ///< snapshot times
    std::vector<Field> fields;
    std::vector<std::vector<double>> sigma;  ///< sigma[snapshot][k], k = 0..4

    std::vector<std::string> warnings;

    /// Snapshot at time t (exact match within 1e-9, otherwise linear
    /// interpolation between the neighbouring snapshots).
    Field at_time(double t) const;
    std::optional<std::size_t> snapshot_index(double t) const;
    double max_mass_drift() const;
};

EnvelopeRun solve_linear_envelope(const Field& a, const QuadraticPotentialTrace& Q, const StepOptions& opts);

/// Critical homogeneous Hartree envelope, W = 1/2 Q y^2 + lambda (|y|^-gamma * |u|^2).
EnvelopeRun solve_hartree_envelope(const Field& a, const QuadraticPotentialTrace& Q,
                                   const KernelSpec& kernel, const StepOptions& opts);

/// Constant-potential phase shift u = u_lin exp(-i t k0 mass_sq).
EnvelopeRun alpha1_envelope(const EnvelopeRun& u_lin_run, double k0, double mass_sq);

enum class SupercriticalRegime { alpha_half, alpha0 };

/// Smooth-kernel envelopes with first-moment coupling.
///  alpha0:     v solves W = 1/2 M(t) y^2 - hess0 G(t) y, M = mass_sq hess0 + Q,
///              theta' = -1/2 hess0 int z^2 |v|^2.
///  alpha_half: v solves W = 1/2 Q y^2 + mass_sq grad0 y,
///              theta' = grad0 G(t).
/// The stored field is u = v exp(i theta).
EnvelopeRun solve_smooth_supercritical_envelope(const Field& a, const QuadraticPotentialTrace& Q,
                                                const KernelJet& jet, double mass_sq,
                                                SupercriticalRegime regime, const StepOptions& opts);

/// Same, taking the jet from a smooth kernel (RegimeError for homogeneous kernels).
EnvelopeRun solve_smooth_supercritical_envelope(const Field& a, const QuadraticPotentialTrace& Q,
                                                const KernelSpec& kernel, double mass_sq,
                                                SupercriticalRegime regime, const StepOptions& opts);

/// Max over interior steps of |G'' + Q G| with G'' by second differences.
double moment_ode_residual(const EnvelopeRun& run, const QuadraticPotentialTrace& Q);

}  // namespace hwp
