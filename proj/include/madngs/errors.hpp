#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace madngs {

/// Invalid or inconsistent user-facing configuration (dimensions, ranges, names).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A caller broke an operation precondition (shape mismatch, empty input, missing jet order).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class UnsupportedOrder : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

/// Optimizer produced a non-finite loss.
class DivergedError : public std::runtime_error {
 public:
  DivergedError(const std::string& what, std::size_t iteration)
      : std::runtime_error(what + " (iteration " + std::to_string(iteration) + ")"),
        iteration_(iteration) {}
  std::size_t iteration() const noexcept { return iteration_; }

 private:
  std::size_t iteration_;
};

/// Non-finite or exploding values during assembly, solve or stepping.
class NumericalBlowup : public std::runtime_error {
 public:
  NumericalBlowup(const std::string& what, std::size_t index)
      : std::runtime_error(what), index_(index) {}
  /// Point index for assembly failures, time-step index for evolution failures.
  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

class DegenerateSystem : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Reference solver left its stability region.
class InstabilityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class CorruptHeader : public IoError {
 public:
  using IoError::IoError;
};

class TruncatedPayload : public IoError {
 public:
  using IoError::IoError;
};

class VersionMismatch : public IoError {
 public:
  using IoError::IoError;
};

/// An upstream pipeline artifact is absent.
class MissingArtifact : public IoError {
 public:
  using IoError::IoError;
};

}  // namespace madngs
