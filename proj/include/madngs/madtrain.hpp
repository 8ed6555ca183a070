#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "madngs/neuralnet.hpp"
#include "madngs/optim.hpp"
#include "madngs/pdemodels.hpp"

namespace madngs {

/// Initial fields sampled on one shared collocation grid.
struct TrainingEnsemble {
  std::vector<Point> points;
  std::vector<std::vector<double>> samples;

  std::size_t size() const { return samples.size(); }
  /// Throws ContractViolation on an empty ensemble or misaligned sample lengths.
  void validate() const;

  static TrainingEnsemble from_fields(std::span<const InitialField> fields,
                                      std::vector<Point> points);
};

/// Uniform collocation grid with both endpoints, `per_axis` points along each axis.
std::vector<Point> collocation_grid(const DomainSpec& domain, std::size_t per_axis);

/// Shared weights plus one latent code per training sample.
struct Manifold {
  NetworkArch arch;
  FlatParams theta;
  std::vector<LatentCode> codes;
  double sigma = 100.0;

  std::size_t latent_dim() const { return codes.empty() ? 0 : codes.front().size(); }
  bool operator==(const Manifold&) const = default;
};

/// Mean squared misfit (1/N) sum_j |u0(x_j) - U(theta, z, x_j)|^2.
double data_loss(const NetworkArch& arch, const FlatParams& theta, const EmbeddingSpec& emb,
                 const LatentCode& z, std::span<const double> u0_values,
                 std::span<const Point> points);

/// sum_i ( data_loss_i + ||z_i||^2 / sigma ).
double pretrain_loss(const NetworkArch& arch, const FlatParams& theta, const EmbeddingSpec& emb,
                     std::span<const LatentCode> codes, const TrainingEnsemble& ensemble,
                     double sigma);

/// pretrain_loss and its gradient with respect to the stacked vector [theta; z_1; ...; z_N].
double pretrain_loss_gradient(const NetworkArch& arch, const FlatParams& theta,
                              const EmbeddingSpec& emb, std::span<const LatentCode> codes,
                              const TrainingEnsemble& ensemble, double sigma, Vector& grad);

/// data_loss(theta, z) + ||z||^2 / sigma and its gradient with respect to z only.
double finetune_loss_gradient(const Mlp& net, const EmbeddingSpec& emb, const LatentCode& z,
                              std::span<const double> u_values, std::span<const Point> points,
                              double sigma, Vector& grad_z);

struct PretrainResult {
  Manifold manifold;
  /// Data loss of every training sample at the final iterate.
  std::vector<double> sample_losses;
  std::vector<double> history;
};

/// Joint optimization of shared weights and zero-initialized codes.
PretrainResult pretrain(const TrainingEnsemble& ensemble, const NetworkArch& arch,
                        const EmbeddingSpec& emb, std::size_t latent_dim, double sigma,
                        const OptimizerConfig& opt);

/// Index of the training sample closest in discrete L2; ties go to the smallest index.
std::size_t nearest_sample_index(const TrainingEnsemble& ensemble,
                                 std::span<const double> u_new_values);

struct FinetuneResult {
  LatentCode z;
  std::size_t warm_start_index = 0;
  /// Data loss (without the code penalty) at the warm start and at the returned code.
  double warm_start_data_loss = 0.0;
  double data_loss = 0.0;
  /// Full objective including the code penalty.
  double warm_start_loss = 0.0;
  double loss = 0.0;
  std::vector<double> history;
};

/// Latent-only optimization at frozen weights, warm-started from the nearest training code.
FinetuneResult finetune(const Manifold& manifold, const EmbeddingSpec& emb,
                        const TrainingEnsemble& ensemble, std::span<const double> u_new_values,
                        const OptimizerConfig& opt);

}  // namespace madngs
