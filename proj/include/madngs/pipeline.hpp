#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "madngs/config.hpp"
#include "madngs/galerkin.hpp"
#include "madngs/iometrics.hpp"
#include "madngs/madtrain.hpp"
#include "madngs/spectralref.hpp"

namespace madngs {

/// Training and held-out initial conditions for a run, regenerated from the master seed.
struct SampledIcs {
  std::vector<std::uint64_t> train_seeds;
  std::vector<std::uint64_t> test_seeds;
  std::vector<InitialField> train;
  std::vector<InitialField> test;
};

SampledIcs sample_ics(const RunConfig& cfg);

/// Evaluates U(theta^(k), z, x) on `points` at the trajectory steps nearest to `times`.
GridSolution predict_on_grid(const NetworkArch& arch, const EmbeddingSpec& emb,
                             const DomainSpec& domain, const Trajectory& traj,
                             std::span<const Point> points, std::span<const double> times);

/// The reference grid a run compares against.
SpectralGrid reference_grid(const RunConfig& cfg);

/// Stage outputs under one directory. Every command validates the config first and reads its
/// inputs from the files the upstream command wrote (MissingArtifact otherwise).
class Pipeline {
 public:
  Pipeline(RunConfig cfg, std::filesystem::path out_dir);

  const RunConfig& config() const { return cfg_; }
  const std::filesystem::path& out_dir() const { return out_; }

  std::filesystem::path manifest_path() const { return out_ / "ics" / "manifest.json"; }
  std::filesystem::path checkpoint_path() const { return out_ / "manifold.ckpt"; }
  std::filesystem::path finetune_path(std::size_t k) const;
  std::filesystem::path trajectory_path(std::size_t k) const;
  std::filesystem::path reference_path(std::size_t k) const;
  std::filesystem::path prediction_path(std::size_t k) const;
  std::filesystem::path report_path() const { return out_ / "report.json"; }

  void sample_ics();
  PretrainResult pretrain();
  /// nullopt runs every held-out sample.
  std::vector<FinetuneResult> finetune(std::optional<std::size_t> sample = std::nullopt);
  std::vector<Trajectory> evolve(std::optional<std::size_t> sample = std::nullopt);
  void reference(std::optional<std::size_t> sample = std::nullopt);
  ExperimentReport compare();
  ExperimentReport run_all();

 private:
  std::vector<std::size_t> samples(std::optional<std::size_t> sample) const;
  SampledIcs load_ics() const;
  TrainingEnsemble training_ensemble(const SampledIcs& ics) const;
  void record_time(const std::string& phase, double seconds) const;
  void write_log(const std::string& name, const std::string& header,
                 std::span<const double> values) const;

  RunConfig cfg_;
  std::filesystem::path out_;
};

}  // namespace madngs
