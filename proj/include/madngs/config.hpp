#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "madngs/galerkin.hpp"
#include "madngs/optim.hpp"
#include "madngs/pdemodels.hpp"

namespace madngs {

/// Every knob of a desk-scale experiment. Serialized as flat dotted keys ("evolve.dt = 0.001").
struct RunConfig {
  Benchmark benchmark = Benchmark::KdV;
  /// Domain shift for the 1D Allen-Cahn problems; drawn from the master seed when shift_random.
  double shift = 0.0;
  bool shift_random = false;

  std::vector<std::size_t> hidden{20};
  std::size_t latent_dim = 5;
  double sigma = 100.0;

  std::size_t ensemble_size = 20;
  std::size_t test_size = 1;
  std::size_t collocation = 257;
  std::size_t grf_modes = 64;
  bool ac2d_as_written = true;

  OptimizerConfig pretrain_opt;
  OptimizerConfig finetune_opt;

  Stepper stepper = Stepper::RK4;
  double dt = 1e-3;
  double t_final = 1.0;
  UpdateMode update;
  Quadrature quadrature;
  LsqSettings lsq;

  std::size_t reference_modes = 256;
  double reference_dt = 1e-4;
  bool reference_dealias = true;

  std::vector<double> compare_times{0.2, 0.5, 1.0};

  std::uint64_t seed = 0;

  /// Desk-scale defaults for a benchmark.
  static RunConfig defaults(Benchmark b);
  /// Defaults for the file's benchmark key, then every key in the file applied on top.
  static RunConfig parse(const std::string& text);
  static RunConfig load(const std::string& path);

  /// Applies one dotted key; throws ConfigError on unknown keys or malformed values.
  void set(const std::string& key, const std::string& value);
  std::map<std::string, std::string> to_map() const;
  std::string to_text() const;
  /// FNV-1a over the canonical key=value listing, as 16 hex digits.
  std::string hash() const;

  std::size_t n_steps() const;
  /// Effective shift after resolving shift_random.
  double resolved_shift() const;
  PdeProblem problem() const;
  NetworkArch arch() const;
  EvolutionConfig evolution() const;

  /// Checks ranges and cross-field consistency (including sparse s <= p) before any compute.
  void validate() const;
};

/// Deterministic sub-seed derived from the master seed, a stream tag and an index.
std::uint64_t derive_seed(std::uint64_t master, std::string_view stream, std::uint64_t index = 0);

}  // namespace madngs
