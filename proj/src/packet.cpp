#include "hwp/packet.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <optional>

#include "hwp/errors.hpp"

namespace hwp {

PacketFrame::PacketFrame(double eps_, TrajectoryPath path_, ActionChoice action_)
    : eps(eps_), path(std::move(path_)), action(action_) {
    if (!(eps > 0.0 && eps <= 1.0)) throw ConfigError("eps must lie in (0, 1]");
    if (path.S.size() != path.size()) throw ConfigError("packet frame needs the action S(t)");
    if (action == ActionChoice::modified && !path.S_mod) throw ConfigError("packet frame needs S_mod");
}

double ErrorSeries::at(double t, const std::string& norm) const {
    const auto& s = series(norm);
    if (times.empty() || s.empty()) throw ConfigError("empty error series");
    auto it = std::lower_bound(times.begin(), times.end(), t);
    std::size_t i = static_cast<std::size_t>(it - times.begin());
    if (i == times.size()) i = times.size() - 1;
    if (i > 0 && std::abs(times[i - 1] - t) < std::abs(times[i] - t)) --i;
    return s[i];
}

const std::vector<double>& ErrorSeries::series(const std::string& norm) const {
    if (norm == "l2") return l2_err;
    if (norm == "h" || norm == "H") return h_err;
    if (norm == "sigma_eps") return sigma_eps_err;
    throw ConfigError("unknown norm '" + norm + "'");
}

namespace {

Field upsample_field(const Field& u, int factor) {
    if (factor == 1) return u;
    const std::size_t n = u.size();
    const std::size_t big = n * static_cast<std::size_t>(factor);
    std::vector<cplx> hat = u.values;
    fft_forward(hat);
    std::vector<cplx> wide(big, 0.0);
    for (std::size_t j = 0; j < n / 2; ++j) wide[j] = hat[j];
    for (std::size_t j = n / 2 + 1; j < n; ++j) wide[big - (n - j)] = hat[j];
    wide[n / 2] = 0.5 * hat[n / 2];
    wide[big - n / 2] = 0.5 * hat[n / 2];
    fft_inverse(wide);
    for (auto& z : wide) z *= static_cast<double>(factor);
    return Field(Grid1D(big, u.grid.half_width()), std::move(wide));
}

cplx cubic_sample(const Field& f, double y) {
    const double s = (y + f.grid.half_width()) / f.grid.spacing();
    const double fl = std::floor(s);
    const double r = s - fl;
    const auto i = static_cast<long>(fl);
    const long n = static_cast<long>(f.size());
    const double w[4] = {-r * (r - 1.0) * (r - 2.0) / 6.0, (r + 1.0) * (r - 1.0) * (r - 2.0) / 2.0,
                         -(r + 1.0) * r * (r - 2.0) / 2.0, (r + 1.0) * r * (r - 1.0) / 6.0};
    cplx out = 0.0;
    for (int k = 0; k < 4; ++k) {
        const long idx = i - 1 + k;
        if (idx >= 0 && idx < n) out += w[k] * f[static_cast<std::size_t>(idx)];
    }
    return out;
}

}  // namespace

Field assemble(const Field& u, const PacketFrame& frame, double t, const Grid1D& x_grid, int upsample) {
    if (upsample < 1) throw ConfigError("upsample factor must be >= 1");
    const auto st = frame.state(t);
    const double eps = frame.eps;
    const double se = std::sqrt(eps);

    // x-grid coverage in y
    const double y_lo = (-x_grid.half_width() - st.x) / se;
    const double y_hi = (x_grid.half_width() - x_grid.spacing() - st.x) / se;
    double outside = 0.0;
    double total = 0.0;
    for (std::size_t j = 0; j < u.size(); ++j) {
        const double m = std::norm(u[j]);
        total += m;
        const double y = u.grid.point(j);
        if (y < y_lo || y > y_hi) outside += m;
    }
    if (total > 0.0 && outside > 1e-10 * total)
        throw ConfigError("packet support exceeds the physical grid at t = " + std::to_string(t));

    const Field fine = upsample_field(u, upsample);
    const double amp = std::pow(eps, -0.25);
    Field phi(x_grid);
    for (std::size_t j = 0; j < x_grid.n(); ++j) {
        const double dx = x_grid.point(j) - st.x;
        const double y = dx / se;
        if (y < -u.grid.half_width() - u.grid.spacing() || y > u.grid.half_width()) continue;
        phi[j] = amp * cubic_sample(fine, y) * std::polar(1.0, (st.S + st.xi * dx) / eps);
    }
    return phi;
}

Field apply_A(const Field& f, const PacketFrame& frame, double t) {
    const auto st = frame.state(t);
    const double se = std::sqrt(frame.eps);
    Field out = derivative(f, 1);
    const cplx shift(0.0, -st.xi / se);
    for (std::size_t j = 0; j < f.size(); ++j) out[j] = se * out[j] + shift * f[j];
    return out;
}

Field apply_B(const Field& f, const PacketFrame& frame, double t) {
    const auto st = frame.state(t);
    const double se = std::sqrt(frame.eps);
    Field out = f;
    for (std::size_t j = 0; j < f.size(); ++j) out[j] *= (f.grid.point(j) - st.x) / se;
    return out;
}

double norm_H(const Field& f, const PacketFrame& frame, double t) {
    return l2_norm(f) + l2_norm(apply_A(f, frame, t)) + l2_norm(apply_B(f, frame, t));
}

double norm_sigma_eps(const Field& f, double eps) {
    Field d = derivative(f, 1);
    d *= eps;
    Field xf = f;
    for (std::size_t j = 0; j < f.size(); ++j) xf[j] *= f.grid.point(j);
    return l2_norm(f) + l2_norm(d) + l2_norm(xf);
}

RescaledErrors rescaled_errors(const Field& exact, const Field& approx, double eps, double x, double xi) {
    if (!(exact.grid == approx.grid)) throw ConfigError("frame/grid mismatch between exact and approximate fields");
    const Field w = exact - approx;
    const Field dw = derivative(w, 1);
    const double se = std::sqrt(eps);
    double yw = 0.0, carrier = 0.0, xw = 0.0;
    for (std::size_t j = 0; j < w.size(); ++j) {
        const double y = w.grid.point(j);
        yw += std::norm(y * w[j]);
        carrier += std::norm(se * dw[j] + cplx(0.0, xi) * w[j]);
        xw += std::norm((x + se * y) * w[j]);
    }
    const double h = w.grid.spacing();
    RescaledErrors e;
    e.l2 = l2_norm(w);
    e.h = e.l2 + l2_norm(dw) + std::sqrt(yw * h);
    e.sigma_eps = e.l2 + std::sqrt(carrier * h) + std::sqrt(xw * h);
    return e;
}

ErrorSeries error_series(const DirectRun& exact, const EnvelopeRun& approx, NormSelection norms,
                         const std::string& regime) {
    if (exact.frame != Frame::rescaled || !exact.path)
        throw ConfigError("rescaled error series needs a rescaled-frame run");
    ErrorSeries out;
    out.eps = exact.eps;
    out.regime = regime;
    for (std::size_t i = 0; i < exact.times.size(); ++i) {
        const double t = exact.times[i];
        if (t > approx.times.back() + 1e-9) break;
        const auto st = exact.path->at(t);
        const auto e = rescaled_errors(exact.fields[i], approx.at_time(t), exact.eps, st.x, st.xi);
        out.times.push_back(t);
        out.l2_err.push_back(e.l2);
        if (norms.h) out.h_err.push_back(e.h);
        if (norms.sigma_eps) out.sigma_eps_err.push_back(e.sigma_eps);
    }
    return out;
}

ErrorSeries error_series(const DirectRun& exact,
                         const std::vector<std::pair<const EnvelopeRun*, PacketFrame>>& approx,
                         NormSelection norms, const std::string& regime) {
    if (exact.frame != Frame::physical) throw ConfigError("physical error series needs a physical-frame run");
    if (approx.empty()) throw ConfigError("no approximate packets");
    ErrorSeries out;
    out.eps = exact.eps;
    out.regime = regime;
    for (std::size_t i = 0; i < exact.times.size(); ++i) {
        const double t = exact.times[i];
        const Grid1D& grid = exact.fields[i].grid;
        Field w = exact.fields[i];
        for (const auto& [run, frame] : approx) {
            if (std::abs(frame.eps - exact.eps) > 1e-15) throw ConfigError("frame eps differs from the exact run");
            w -= assemble(run->at_time(t), frame, t, grid);
        }
        out.times.push_back(t);
        out.l2_err.push_back(l2_norm(w));
        if (norms.h) out.h_err.push_back(norm_H(w, approx.front().second, t));
        if (norms.sigma_eps) out.sigma_eps_err.push_back(norm_sigma_eps(w, exact.eps));
    }
    return out;
}

double ResidualSeries::max() const {
    double m = 0.0;
    for (double r : residual) m = std::max(m, r);
    return m;
}

ResidualSeries residual_b2(const EnvelopeRun& run, const QuadraticPotentialTrace& Q, const KernelSpec& kernel,
                           double mass_sq) {
    if (run.fields.size() < 3) throw ConfigError("residual needs at least 3 snapshots");
    const Grid1D& grid = run.fields.front().grid;
    const auto y = grid.points();

    std::optional<ConvolutionOperator> conv;
    KernelJet jet;
    switch (run.regime) {
        case EnvelopeRegime::critical: {
            const auto& hk = kernel.homogeneous();
            conv = ConvolutionOperator::power_law(grid, hk.gamma, hk.lambda);
            break;
        }
        case EnvelopeRegime::alpha1:
        case EnvelopeRegime::alpha_half:
        case EnvelopeRegime::alpha0: jet = taylor_kernel_coefficients(kernel); break;
        case EnvelopeRegime::linear: break;
    }

    ResidualSeries out;
    for (std::size_t n = 1; n + 1 < run.fields.size(); ++n) {
        const double dl = run.times[n] - run.times[n - 1];
        const double dr = run.times[n + 1] - run.times[n];
        if (std::abs(dl - dr) > 1e-9 * dl) continue;
        const double t = run.times[n];
        const Field& u = run.fields[n];
        const Field lap = derivative(u, 2);

        std::vector<double> w(y.size());
        const double q = Q.Q_at(t);
        const double b = Q.linear_at(t);
        const double c = Q.scalar_at(t);
        for (std::size_t j = 0; j < y.size(); ++j) w[j] = 0.5 * q * y[j] * y[j] + b * y[j] + c;
        switch (run.regime) {
            case EnvelopeRegime::critical: {
                const auto h = conv->apply(abs2(u));
                for (std::size_t j = 0; j < y.size(); ++j) w[j] += h[j];
                break;
            }
            case EnvelopeRegime::alpha1:
                for (auto& v : w) v += jet.k0 * mass_sq;
                break;
            case EnvelopeRegime::alpha_half: {
                const double g = first_moment(u);
                for (std::size_t j = 0; j < y.size(); ++j) w[j] += mass_sq * jet.grad0 * y[j] - jet.grad0 * g;
                break;
            }
            case EnvelopeRegime::alpha0: {
                const double g = first_moment(u);
                const double m2 = second_moment(u);
                for (std::size_t j = 0; j < y.size(); ++j)
                    w[j] += 0.5 * mass_sq * jet.hess0 * y[j] * y[j] - jet.hess0 * g * y[j] + 0.5 * jet.hess0 * m2;
                break;
            }
            case EnvelopeRegime::linear: break;
        }

        Field r(grid);
        for (std::size_t j = 0; j < y.size(); ++j) {
            const cplx ut = (run.fields[n + 1][j] - run.fields[n - 1][j]) / (2.0 * dl);
            r[j] = cplx(0.0, 1.0) * ut + 0.5 * lap[j] - w[j] * u[j];
        }
        out.times.push_back(t);
        out.residual.push_back(l2_norm(r));
    }
    return out;
}

std::string error_csv_name(const std::string& regime, double eps) {
    const long k = std::lround(-std::log2(eps));
    return "errors_" + regime + "_eps" + std::to_string(k) + ".csv";
}

void write_error_csv(const ErrorSeries& s, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw ConfigError("cannot write " + path);
    os << "t,l2_err";
    if (!s.h_err.empty()) os << ",h_err";
    if (!s.sigma_eps_err.empty()) os << ",sigma_eps_err";
    os << '\n' << std::setprecision(17);
    for (std::size_t i = 0; i < s.times.size(); ++i) {
        os << s.times[i] << ',' << s.l2_err[i];
        if (!s.h_err.empty()) os << ',' << s.h_err[i];
        if (!s.sigma_eps_err.empty()) os << ',' << s.sigma_eps_err[i];
        os << '\n';
    }
}

}  // namespace hwp
