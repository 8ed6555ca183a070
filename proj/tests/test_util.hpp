#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "madngs/neuralnet.hpp"

namespace testutil {

using namespace madngs;

struct RandomNet {
  NetworkArch arch;
  FlatParams theta;
  LatentCode z;
};

/// Up to two hidden layers of width <= 20, latent dim <= 5, weights perturbed so biases are nonzero.
inline RandomNet random_net(const EmbeddingSpec& emb, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> depth(1, 2), width(2, 20), latent(0, 5);
  std::normal_distribution<double> n01(0.0, 1.0);
  RandomNet r;
  const std::size_t n = latent(rng);
  r.arch.input_dim = emb.output_dim() + n;
  const std::size_t d = depth(rng);
  for (std::size_t i = 0; i < d; ++i) r.arch.hidden_widths.push_back(width(rng));
  r.theta = init_params(r.arch, rng());
  for (auto& v : r.theta.values) v += 0.1 * n01(rng);
  r.z.values = Vector(static_cast<Eigen::Index>(n));
  for (auto& v : r.z.values) v = 0.5 * n01(rng);
  return r;
}

inline double rel_err(const Vector& a, const Vector& b) {
  return (a - b).norm() / std::max(b.norm(), 1e-300);
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("madngs_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace testutil
