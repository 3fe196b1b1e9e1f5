#pragma once

#include <string>
#include <utility>
#include <vector>

namespace hwp {

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
};

/// Ordinary least squares y = slope * x + intercept. Needs >= 2 points with
/// distinct x. r_squared is clamped to [0, 1]; it is 1 for an exact fit and
/// for constant y.
LinearFit least_squares(const std::vector<double>& x, const std::vector<double>& y);

/// log(err) against log(eps) fit with a verdict against a target slope.
struct RateFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    std::vector<std::pair<double, double>> points;  ///< (eps, error)
    double target_slope = 0.0;
    double tolerance = 0.0;
    bool valid = true;    ///< false if any run failed or too few points
    bool pass = false;
    std::string note;
};

RateFit fit_rate(std::vector<std::pair<double, double>> points, double target_slope, double tolerance);

}  // namespace hwp
