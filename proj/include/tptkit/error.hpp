#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tptkit {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration, model parameters or region geometry.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Linear solver failure, singular fields, step-limit exhaustion.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// A simulated path left the computational bounding box.
class BoxExitError : public NumericalError {
 public:
  BoxExitError(std::size_t step, const std::string& what)
      : NumericalError(what), step_(step) {}
  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

void log_warning(const std::string& message);

}  // namespace tptkit
