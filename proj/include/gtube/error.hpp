#pragma once

#include <stdexcept>
#include <string>

namespace gtube {

/// Failure categories. The CLI maps these onto exit codes.
enum class ErrorKind {
  input,
  configuration,
  domain,
  integration_failure,
  conditioning,
  pole,
  singularity,
  convergence,
  degeneracy,
  numerical,
  out_of_catalog,
};

const char* to_string(ErrorKind kind) noexcept;

/// True for errors caused by bad user input rather than numerics.
constexpr bool is_validation_error(ErrorKind kind) noexcept {
  return kind == ErrorKind::input || kind == ErrorKind::configuration ||
         kind == ErrorKind::out_of_catalog;
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class InputError : public Error {
 public:
  explicit InputError(const std::string& what) : Error(ErrorKind::input, what) {}
};

class ConfigurationError : public Error {
 public:
  explicit ConfigurationError(const std::string& what)
      : Error(ErrorKind::configuration, what) {}
};

class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what) : Error(ErrorKind::domain, what) {}
};

/// Raised when a conserved quantity drifts during integration.
class IntegrationFailure : public Error {
 public:
  IntegrationFailure(const std::string& what, double sigma)
      : Error(ErrorKind::integration_failure, what), sigma_(sigma) {}

  double sigma() const noexcept { return sigma_; }

 private:
  double sigma_;
};

class ConditioningError : public Error {
 public:
  ConditioningError(const std::string& what, double distance)
      : Error(ErrorKind::conditioning, what), distance_(distance) {}

  /// Distance from the evaluation point to the nearest singular point.
  double distance() const noexcept { return distance_; }

 private:
  double distance_;
};

class PoleError : public Error {
 public:
  explicit PoleError(const std::string& what) : Error(ErrorKind::pole, what) {}
};

class SingularityError : public Error {
 public:
  explicit SingularityError(const std::string& what)
      : Error(ErrorKind::singularity, what) {}
};

class ConvergenceError : public Error {
 public:
  explicit ConvergenceError(const std::string& what)
      : Error(ErrorKind::convergence, what) {}
};

class DegeneracyError : public Error {
 public:
  explicit DegeneracyError(const std::string& what)
      : Error(ErrorKind::degeneracy, what) {}
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what) : Error(ErrorKind::numerical, what) {}
};

class OutOfCatalogError : public Error {
 public:
  explicit OutOfCatalogError(const std::string& what)
      : Error(ErrorKind::out_of_catalog, what) {}
};

}  // namespace gtube
