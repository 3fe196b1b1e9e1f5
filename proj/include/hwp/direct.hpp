#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "hwp/classical.hpp"
#include "hwp/envelope.hpp"
#include "hwp/spectral.hpp"

namespace hwp {

/// alpha_c = 1 + gamma/2 for homogeneous kernels, 1 for smooth kernels.
double critical_exponent(const KernelSpec& kernel);

enum class Frame { rescaled, physical };

/// Exact eps-dependent solution, either in the moving rescaled frame
/// (u^eps on a y-grid) or in physical variables (psi^eps on an x-grid).
struct DirectRun {
    double eps = 1.0;
    double alpha = 0.0;
    Frame frame = Frame::rescaled;
    std::optional<TrajectoryPath> path;  ///< rescaled frame only

    double dt = 0.0;
    std::vector<double> step_times;
    std::vector<double> mass;
    std::vector<double> times;
    std::vector<Field> fields;
    std::vector<std::string> warnings;

    double max_mass_drift() const;
    std::optional<std::size_t> snapshot_index(double t) const;
};

/// Rescaled-frame solve of
///   i u_t + 1/2 u_yy = V^eps(t, y) u + N^eps(u) u,
///   V^eps = (V(t, x + sqrt(eps) y) - V(t, x) - sqrt(eps) y V'(t, x)) / eps,
/// with N^eps = lambda eps^(alpha - alpha_c) |y|^-gamma * |u|^2 (homogeneous)
/// or eps^(alpha - 1) (K(sqrt(eps) .) - [alpha < 1] K(0)) * |u|^2 (smooth).
/// For smooth kernels with alpha < 1 the frame is attached to the modified
/// action S - t eps^alpha K(0) ||a||^2, which removes the K(0) term.
/// `path` must cover [0, t_end] and carry x, xi.
DirectRun solve_rescaled(const Field& a, double eps, double alpha, const PotentialSpec& pot,
                         const TrajectoryPath& path, const KernelSpec& kernel, const StepOptions& opts);

/// One coherent-state component of physical initial data.
struct PacketSpec {
    std::function<cplx(double)> profile;  ///< a(y)
    double x0 = 0.0;
    double xi0 = 0.0;
    double width = 1.0;  ///< profile length scale, used for resolution checks
};

/// a(y) = (pi w^2)^(-1/4) exp(-(y - c)^2 / (2 w^2) + i p y), unit L2 norm.
std::function<cplx(double)> gaussian_profile(double center = 0.0, double momentum = 0.0, double width = 1.0);

/// sum_j eps^(-1/4) a_j((x - x_j)/sqrt(eps)) exp(i (x - x_j) xi_j / eps).
Field physical_initial_data(const std::vector<PacketSpec>& packets, double eps, const Grid1D& grid);

/// Largest admissible physical grid spacing: min(eps / (4 max|xi|), sqrt(eps) w / 8),
/// with max|xi| taken over the classical flow on [0, t_end].
double required_physical_spacing(const std::vector<PacketSpec>& packets, const PotentialSpec& pot,
                                 double eps, double t_end);

/// Grid sized from the trajectory sweep plus 6 packet widths (allowing for
/// linear spreading), with n the smallest power of two meeting the
/// resolution requirement. A positive `y_reach` replaces the spreading
/// allowance by a known envelope radius in rescaled units (nonlinear
/// envelopes can spread well beyond the free rate).
Grid1D physical_grid(const std::vector<PacketSpec>& packets, const PotentialSpec& pot, double eps,
                     double t_end, double margin = 1.0, double y_reach = 0.0);

/// Physical-frame solve of
///   i psi_t = -(eps/2) psi_xx + V psi / eps + eps^(alpha-1) (K * |psi|^2) psi.
/// Throws ConfigError naming the required n when the grid is too coarse.
DirectRun solve_physical(const std::vector<PacketSpec>& packets, double eps, double alpha,
                         const PotentialSpec& pot, const KernelSpec& kernel, const Grid1D& grid,
                         const StepOptions& opts);

}  // namespace hwp
