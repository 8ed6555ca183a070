#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "madngs/neuralnet.hpp"

namespace madngs {

struct AdamSettings {
  double learning_rate = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Two-loop L-BFGS with Armijo backtracking.
struct LbfgsSettings {
  std::size_t history = 10;
  double armijo_c = 1e-4;
  double shrink = 0.5;
  std::size_t max_backtracks = 30;
};

struct OptimizerConfig {
  enum class Kind { Adam, LBFGS };

  Kind kind = Kind::LBFGS;
  AdamSettings adam;
  LbfgsSettings lbfgs;
  /// Accepted optimizer steps.
  std::size_t iterations = 100;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Returns f(x) and writes the gradient into grad (already sized like x).
using Objective = std::function<double(const Vector& x, Vector& grad)>;

struct OptimizationResult {
  Vector x;
  double loss = 0.0;
  double initial_loss = 0.0;
  std::size_t iterations = 0;
  /// Loss after every accepted step, starting with the initial loss.
  std::vector<double> history;
};

/// Minimizes the objective from x0. Throws DivergedError if the loss is non-finite at an
/// accepted point. L-BFGS only accepts Armijo-decreasing steps; Adam returns the best iterate.
OptimizationResult minimize(const Objective& objective, Vector x0, const OptimizerConfig& config);

}  // namespace madngs
