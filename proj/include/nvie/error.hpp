#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "nvie/types.hpp"

namespace nvie {

enum class ErrorKind {
  parameter,
  geometry,
  singularity,
  accuracy,
  corruption,
  format,
  configuration,
  solver,
  domain,
  misuse,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class ParameterError : public Error {
 public:
  explicit ParameterError(const std::string& what) : Error(ErrorKind::parameter, what) {}
};

class GeometryError : public Error {
 public:
  explicit GeometryError(const std::string& what) : Error(ErrorKind::geometry, what) {}
};

class SingularityError : public Error {
 public:
  explicit SingularityError(const std::string& what) : Error(ErrorKind::singularity, what) {}
};

/// Raised when a convergence-controlled integration fails to settle. Both of
/// the last two estimates' norms are kept for diagnostics.
class AccuracyError : public Error {
 public:
  AccuracyError(const std::string& what, double coarse_norm = 0.0, double fine_norm = 0.0,
                double rel_diff = 0.0)
      : Error(ErrorKind::accuracy, what),
        coarse_norm(coarse_norm),
        fine_norm(fine_norm),
        rel_diff(rel_diff) {}
  double coarse_norm;
  double fine_norm;
  double rel_diff;
};

class CorruptionError : public Error {
 public:
  explicit CorruptionError(const std::string& what) : Error(ErrorKind::corruption, what) {}
};

class FormatError : public Error {
 public:
  explicit FormatError(const std::string& what) : Error(ErrorKind::format, what) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorKind::configuration, what) {}
};

class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what) : Error(ErrorKind::domain, what) {}
};

class MisuseError : public Error {
 public:
  explicit MisuseError(const std::string& what) : Error(ErrorKind::misuse, what) {}
};

/// Iterative solver did not reach the requested tolerance. Carries the best
/// iterate found so callers can still inspect it.
class SolverError : public Error {
 public:
  SolverError(const std::string& what, Eigen::VectorXcd best_iterate = {},
              double relative_residual = 0.0, std::vector<double> history = {})
      : Error(ErrorKind::solver, what),
        best_iterate(std::move(best_iterate)),
        relative_residual(relative_residual),
        history(std::move(history)) {}
  Eigen::VectorXcd best_iterate;
  double relative_residual;
  std::vector<double> history;
};

}  // namespace nvie
