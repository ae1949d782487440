#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace femem {

/// Invalid argument or violated invariant in a model call.
class ModelError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// An iterative solve did not reach its tolerance.
class NumericalError : public std::runtime_error {
  public:
    NumericalError(const std::string& what, double residual)
        : std::runtime_error(what), residual_(residual) {}
    double residual() const noexcept { return residual_; }

  private:
    double residual_;
};

/// Calibration targets cannot be met; residuals are relative errors per target
/// in the order (r_on, on_off, selection_ratio).
class InfeasibleError : public std::runtime_error {
  public:
    InfeasibleError(const std::string& what, std::vector<double> residuals)
        : std::runtime_error(what), residuals_(std::move(residuals)) {}
    const std::vector<double>& residuals() const noexcept { return residuals_; }

  private:
    std::vector<double> residuals_;
};

/// A file could not be read or written.
class IoError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

}  // namespace femem
