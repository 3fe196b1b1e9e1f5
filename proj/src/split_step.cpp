#include "hwp/split_step.hpp"

#include <cmath>

#include "hwp/errors.hpp"

namespace hwp {

TimeGrid::TimeGrid(double t_end, double dt_requested) {
    if (!(dt_requested > 0.0)) throw ConfigError("time step must be positive");
    if (!(t_end >= 0.0)) throw ConfigError("end time must be nonnegative");
    steps = static_cast<std::size_t>(std::ceil(t_end / dt_requested - 1e-9));
    dt = steps > 0 ? t_end / static_cast<double>(steps) : dt_requested;
}

StrangStepper::StrangStepper(const Grid1D& grid, double kinetic_coefficient, double dt,
                             PotentialFn potential, bool depends_on_field)
    : dt_(dt), potential_(std::move(potential)), depends_on_field_(depends_on_field),
      kinetic_(grid.n()), w_(grid.n()) {
    const auto& k = grid.wavenumbers();
    for (std::size_t j = 0; j < grid.n(); ++j)
        kinetic_[j] = std::polar(1.0, -0.5 * kinetic_coefficient * k[j] * k[j] * dt);
}

void StrangStepper::apply_phase(Field& u, const std::vector<double>& w) const {
    const double half = 0.5 * dt_;
    for (std::size_t j = 0; j < u.size(); ++j) u[j] *= std::polar(1.0, -half * w[j]);
}

void StrangStepper::step(Field& u, double t) {
    const double t_mid = t + 0.5 * dt_;
    potential_(t_mid, u, w_);
    apply_phase(u, w_);

    fft_forward(u.values);
    for (std::size_t j = 0; j < u.size(); ++j) u[j] *= kinetic_[j];
    fft_inverse(u.values);

    if (depends_on_field_) potential_(t_mid, u, w_);
    apply_phase(u, w_);
}

void integrate(Field u, const TimeGrid& time, StrangStepper& stepper,
               const std::function<void(std::size_t, double, const Field&)>& on_step) {
    on_step(0, 0.0, u);
    for (std::size_t n = 0; n < time.steps; ++n) {
        stepper.step(u, time.time(n));
        if (!u.finite()) throw DivergenceError("split-step field became non-finite", time.time(n));
        on_step(n + 1, time.time(n + 1), u);
    }
}

}  // namespace hwp
