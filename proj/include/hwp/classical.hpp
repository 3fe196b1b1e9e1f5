#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "hwp/spectral.hpp"

namespace hwp {

/// External potential V(t, x) with analytic first and second derivatives.
/// Must be smooth and at most quadratic in x (bounded Hessian); only the
/// builtin families are checked, custom potentials are the caller's
/// responsibility.
struct PotentialSpec {
    enum class Tag { zero, linear, harmonic, inverted_harmonic, cosine, custom };

    std::function<double(double, double)> eval;
    std::function<double(double, double)> grad;
    std::function<double(double, double)> hess;
    Tag tag = Tag::custom;
    std::vector<double> params;

    bool time_independent = true;

    double operator()(double t, double x) const { return eval(t, x); }

    std::string describe() const;

    static PotentialSpec zero();
    static PotentialSpec linear(double kappa);                 ///< kappa x
    static PotentialSpec harmonic(double omega);               ///< omega^2 x^2 / 2
    static PotentialSpec inverted_harmonic(double omega);      ///< -omega^2 x^2 / 2
    static PotentialSpec cosine(double amplitude, double wavenumber);  ///< A cos(k x)
    static PotentialSpec custom(std::function<double(double, double)> eval,
                                std::function<double(double, double)> grad,
                                std::function<double(double, double)> hess,
                                bool time_independent = false);

    /// Parses "zero", "linear:k", "harmonic:w", "inverted_harmonic:w", "cos:A,k" / "cos".
    static PotentialSpec parse(const std::string& text);
};

/// Sampled Hamiltonian trajectory with actions. Samples are uniform in time.
struct TrajectoryPath {
    std::vector<double> times;
    std::vector<double> x;
    std::vector<double> xi;
    std::vector<double> force;       ///< -dV/dx(t, x(t)), the time derivative of xi
    std::vector<double> lagrangian;  ///< xi^2/2 - V(t, x(t)), the time derivative of S
    std::vector<double> S;           ///< empty until accumulate_action
    std::optional<std::vector<double>> S_mod;
    std::string action_regime;       ///< regime tag of S_mod
    double action_shift_rate = 0.0;  ///< S_mod = S - rate * t

    std::size_t size() const { return times.size(); }
    double t_end() const { return times.empty() ? 0.0 : times.back(); }

    struct State {
        double x, xi, S;
    };
    /// Cubic Hermite interpolation between samples (fourth-order consistent
    /// with the integrator). Uses S_mod when `modified` is set.
    State at(double t, bool modified = false) const;
};

/// Classical RK4 for x' = xi, xi' = -dV/dx. The step is shrunk so that an
/// integer number of steps lands on t_end.
TrajectoryPath solve_trajectory(const PotentialSpec& pot, double x0, double xi0, double t_end,
                                double dt);

/// S(t) = int_0^t (xi^2/2 - V) ds by cumulative composite Simpson.
TrajectoryPath accumulate_action(TrajectoryPath path, const PotentialSpec& pot);

enum class ActionRegime { alpha0, alpha_half };

/// S_mod(t) = S(t) - t c K(0) mass_sq with c = 1 (alpha0) or sqrt(eps) (alpha_half).
TrajectoryPath modified_action(TrajectoryPath path, const KernelSpec& kernel, double mass_sq,
                               ActionRegime regime, double eps = 1.0);

/// Hamiltonian xi^2/2 + V at every sample.
std::vector<double> trajectory_energy(const TrajectoryPath& path, const PotentialSpec& pot);

struct GrowthFit {
    double C = 0.0;
    double rate = 0.0;
};

/// Exponential envelope |x| + |xi| <= C exp(rate t): rate from a least-squares
/// fit of the logarithm (clamped at 0), C the smallest constant making the bound hold.
GrowthFit fit_exponential_envelope(const std::vector<double>& times, const std::vector<double>& values);
GrowthFit trajectory_growth(const TrajectoryPath& path);

}  // namespace hwp
