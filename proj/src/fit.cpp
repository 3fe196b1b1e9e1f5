#include "hwp/fit.hpp"

#include <algorithm>
#include <cmath>

#include "hwp/errors.hpp"

namespace hwp {

LinearFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw ConfigError("least squares needs at least two points");
    const auto n = static_cast<double>(x.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx <= 0.0) throw ConfigError("least squares needs distinct abscissae");
    LinearFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    f.r_squared = syy > 0.0 ? std::clamp(sxy * sxy / (sxx * syy), 0.0, 1.0) : 1.0;
    return f;
}

RateFit fit_rate(std::vector<std::pair<double, double>> points, double target_slope, double tolerance) {
    std::sort(points.begin(), points.end());
    RateFit fit;
    fit.points = points;
    fit.target_slope = target_slope;
    fit.tolerance = tolerance;
    std::vector<double> lx, ly;
    for (const auto& [eps, err] : points) {
        if (!(eps > 0.0) || !(err > 0.0) || !std::isfinite(err)) continue;
        lx.push_back(std::log(eps));
        ly.push_back(std::log(err));
    }
    if (lx.size() < 2 || lx.size() != points.size()) {
        fit.valid = false;
        fit.note = "not enough positive error samples";
        return fit;
    }
    const auto lf = least_squares(lx, ly);
    fit.slope = lf.slope;
    fit.intercept = lf.intercept;
    fit.r_squared = lf.r_squared;
    fit.pass = std::abs(fit.slope - target_slope) <= tolerance;
    return fit;
}

}  // namespace hwp
