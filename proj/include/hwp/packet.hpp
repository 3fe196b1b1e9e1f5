#pragma once

#include <string>
#include <utility>
#include <vector>

#include "hwp/classical.hpp"
#include "hwp/direct.hpp"
#include "hwp/envelope.hpp"
#include "hwp/spectral.hpp"

namespace hwp {

enum class ActionChoice { classical, modified };

/// Moving frame (x(t), xi(t), S(t)) at scale eps for
///   phi(t, x) = eps^(-1/4) u(t, (x - x(t))/sqrt(eps)) exp(i (S + xi (x - x(t))) / eps).
struct PacketFrame {
    double eps = 1.0;
    TrajectoryPath path;
    ActionChoice action = ActionChoice::classical;

    PacketFrame(double eps, TrajectoryPath path, ActionChoice action = ActionChoice::classical);
    TrajectoryPath::State state(double t) const { return path.at(t, action == ActionChoice::modified); }
};

/// Per-time error norms of one run.
struct ErrorSeries {
    std::vector<double> times;
    std::vector<double> l2_err;
    std::vector<double> h_err;          ///< empty when not requested
    std::vector<double> sigma_eps_err;  ///< empty when not requested
    double eps = 1.0;
    std::string regime;

    /// Value of `l2_err` / `h_err` / `sigma_eps_err` at time t (nearest sample).
    double at(double t, const std::string& norm = "l2") const;
    const std::vector<double>& series(const std::string& norm) const;
};

struct NormSelection {
    bool h = false;
    bool sigma_eps = false;
};

/// Envelope sampled onto a physical grid. The y-grid field is first refined
/// by spectral zero-padding (factor `upsample`), then interpolated by
/// four-point cubic Lagrange. Throws ConfigError when the envelope has mass
/// outside the region covered by x_grid.
Field assemble(const Field& u, const PacketFrame& frame, double t, const Grid1D& x_grid, int upsample = 8);

/// A^eps f = sqrt(eps) f' - i xi(t)/sqrt(eps) f.
Field apply_A(const Field& f, const PacketFrame& frame, double t);
/// B^eps f = (x - x(t))/sqrt(eps) f.
Field apply_B(const Field& f, const PacketFrame& frame, double t);

/// ||f|| + ||A^eps f|| + ||B^eps f||.
double norm_H(const Field& f, const PacketFrame& frame, double t);
/// ||f|| + ||eps f'|| + ||x f||.
double norm_sigma_eps(const Field& f, double eps);

/// Rescaled-frame errors w = u^eps - u: L2, H = ||w|| + ||w'|| + ||y w||, and
/// Sigma_eps = ||w|| + ||sqrt(eps) w' + i xi w|| + ||(x(t) + sqrt(eps) y) w||.
/// These equal the physical-frame norms of psi^eps - phi^eps.
ErrorSeries error_series(const DirectRun& exact, const EnvelopeRun& approx, NormSelection norms,
                         const std::string& regime);

/// Physical-frame errors of psi^eps against a sum of assembled packets.
/// The H norm uses the first frame.
ErrorSeries error_series(const DirectRun& exact,
                         const std::vector<std::pair<const EnvelopeRun*, PacketFrame>>& approx,
                         NormSelection norms, const std::string& regime);

/// Single-time error norms between two rescaled fields.
struct RescaledErrors {
    double l2 = 0.0;
    double h = 0.0;
    double sigma_eps = 0.0;
};
RescaledErrors rescaled_errors(const Field& exact, const Field& approx, double eps, double x, double xi);

/// Consistency residual i u_t + 1/2 u_yy - W u of the stored envelope, with
/// u_t by centred differences of consecutive snapshots.
struct ResidualSeries {
    std::vector<double> times;
    std::vector<double> residual;  ///< L2 norm at each interior snapshot
    double max() const;
};
ResidualSeries residual_b2(const EnvelopeRun& run, const QuadraticPotentialTrace& Q, const KernelSpec& kernel,
                           double mass_sq);

/// Writes an ErrorSeries as CSV (t, l2_err[, h_err][, sigma_eps_err]).
void write_error_csv(const ErrorSeries& s, const std::string& path);
/// errors_<regime>_eps<k>.csv with k = round(-log2(eps)).
std::string error_csv_name(const std::string& regime, double eps);

}  // namespace hwp
