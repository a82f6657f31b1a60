#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace hlab {

enum class ErrorKind {
  InvalidDimension,
  UnsupportedDimension,
  Geometry,
  Alignment,
  Config,
  IterationLimit,
  Instability,
  PositivityLoss,
  Degenerate,
  Regime,
  Precondition,
  Domain,
  Resample,
  EmptySet,
  IO,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidDimension: return "invalid-dimension";
    case ErrorKind::UnsupportedDimension: return "unsupported-dimension";
    case ErrorKind::Geometry: return "geometry";
    case ErrorKind::Alignment: return "alignment";
    case ErrorKind::Config: return "config";
    case ErrorKind::IterationLimit: return "iteration-limit";
    case ErrorKind::Instability: return "instability";
    case ErrorKind::PositivityLoss: return "positivity-loss";
    case ErrorKind::Degenerate: return "degenerate";
    case ErrorKind::Regime: return "regime";
    case ErrorKind::Precondition: return "precondition";
    case ErrorKind::Domain: return "domain";
    case ErrorKind::Resample: return "resample";
    case ErrorKind::EmptySet: return "empty-set";
    case ErrorKind::IO: return "io";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

  /// Configuration-class errors map to CLI exit code 2, solver-class errors to 3.
  bool is_config_error() const noexcept {
    switch (kind_) {
      case ErrorKind::InvalidDimension:
      case ErrorKind::UnsupportedDimension:
      case ErrorKind::Geometry:
      case ErrorKind::Alignment:
      case ErrorKind::Config:
      case ErrorKind::IO:
        return true;
      default:
        return false;
    }
  }

 private:
  ErrorKind kind_;
};

class IterationLimitError : public Error {
 public:
  IterationLimitError(const std::string& message, int iterations, double last_residual)
      : Error(ErrorKind::IterationLimit,
              message + " (iterations=" + std::to_string(iterations) +
                  ", residual=" + std::to_string(last_residual) + ")"),
        iterations_(iterations),
        last_residual_(last_residual) {}

  int iterations() const noexcept { return iterations_; }
  double last_residual() const noexcept { return last_residual_; }

 private:
  int iterations_;
  double last_residual_;
};

class PreconditionError : public Error {
 public:
  PreconditionError(const std::string& message, std::vector<std::size_t> nodes)
      : Error(ErrorKind::Precondition,
              message + " (" + std::to_string(nodes.size()) + " offending nodes)"),
        nodes_(std::move(nodes)) {}

  const std::vector<std::size_t>& offending_nodes() const noexcept { return nodes_; }

 private:
  std::vector<std::size_t> nodes_;
};

}  // namespace hlab
