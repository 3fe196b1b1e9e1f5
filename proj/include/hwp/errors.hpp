#pragma once

#include <stdexcept>
#include <string>

namespace hwp {

/// Bad parameters: grid sizes, time steps, resolution preconditions.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Kernel outside the supported family (gamma >= 1, inconsistent jet).
class KernelError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Regime requested for a kernel that does not support it.
class RegimeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A time integration produced non-finite values.
class DivergenceError : public std::runtime_error {
public:
    DivergenceError(const std::string& what, double last_valid_time)
        : std::runtime_error(what + " (last valid t = " + std::to_string(last_valid_time) + ")"),
          last_valid_time_(last_valid_time) {}

    double last_valid_time() const { return last_valid_time_; }

private:
    double last_valid_time_;
};

}  // namespace hwp
