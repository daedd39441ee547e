#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace predvar {

enum class ErrorKind {
  InvalidInput,
  DimensionError,
  InsufficientData,
  RankError,
  SingularLoadings,
  NotDualPair,
  UnstableDynamics,
  InvalidCovariance,
  SingularTransform,
  OrderError,
  SingularGram,
  SingularCovariance,
  ConfigError,
  IntegrationError,
  IndexError,
  IoError,
  FormatError,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Library failure tagged with one of the kinds above.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace predvar
