#pragma once

#include <stdexcept>
#include <string>

namespace lander {

// Bad user input: config files, CLI flags, malformed datasets.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Shape or layout mismatch between tensors / parameter bundles.
class ShapeError : public std::runtime_error {
 public:
  explicit ShapeError(const std::string& what) : std::runtime_error(what) {}
};

// Non-finite state fed to the dynamics.
class InvalidStateError : public std::runtime_error {
 public:
  explicit InvalidStateError(const std::string& what) : std::runtime_error(what) {}
};

// Non-finite value produced while integrating; carries the step index.
class IntegrationError : public std::runtime_error {
 public:
  IntegrationError(const std::string& what, long step)
      : std::runtime_error(what + " (step " + std::to_string(step) + ")"), step_(step) {}
  long step() const { return step_; }

 private:
  long step_ = -1;
};

// Training diverged (non-finite loss or gradient).
class DivergenceError : public std::runtime_error {
 public:
  explicit DivergenceError(const std::string& what) : std::runtime_error(what) {}
};

// Mutual-information estimator could not produce a positive-definite covariance.
class EstimatorError : public std::runtime_error {
 public:
  explicit EstimatorError(const std::string& what) : std::runtime_error(what) {}
};

// I/O failure (missing file, short read, unwritable path).
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace lander
