#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "hwp/spectral.hpp"

namespace hwp {

/// Uniform time grid with an integer number of steps landing on t_end.
struct TimeGrid {
    std::size_t steps = 0;
    double dt = 0.0;

    TimeGrid(double t_end, double dt_requested);
    double time(std::size_t n) const { return static_cast<double>(n) * dt; }
};

/// Strang splitting for  i u_t = -(c/2) u_yy + W(t, y; |u|) u  on a periodic grid.
///
/// One step: half potential phase, exact kinetic propagator in Fourier
/// space, half potential phase. Both potential half steps use t + dt/2;
/// the second half step re-evaluates W from the post-kinetic modulus when
/// the potential depends on u.
class StrangStepper {
public:
    /// Fills w (length n) with W(t, y_j) for the current field.
    using PotentialFn = std::function<void(double t, const Field& u, std::vector<double>& w)>;

    StrangStepper(const Grid1D& grid, double kinetic_coefficient, double dt, PotentialFn potential,
                  bool depends_on_field);

    /// Advances u from t to t + dt.
    void step(Field& u, double t);

    double dt() const { return dt_; }

private:
    void apply_phase(Field& u, const std::vector<double>& w) const;

    double dt_;
    PotentialFn potential_;
    bool depends_on_field_;
    std::vector<cplx> kinetic_;
    std::vector<double> w_;
};

/// Runs `steps` Strang steps from u0, calling on_step(n, t, u) for n = 0..steps.
/// Throws DivergenceError if the field stops being finite.
void integrate(Field u, const TimeGrid& time, StrangStepper& stepper,
               const std::function<void(std::size_t, double, const Field&)>& on_step);

}  // namespace hwp
