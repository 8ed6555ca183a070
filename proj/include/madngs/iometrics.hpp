#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "madngs/galerkin.hpp"
#include "madngs/madtrain.hpp"
#include "madngs/spectralref.hpp"

namespace madngs {

inline constexpr int kCheckpointVersion = 1;
inline constexpr int kTrajectoryVersion = 1;

struct Provenance {
  std::vector<std::uint64_t> seeds;
  std::string config_hash;

  bool operator==(const Provenance&) const = default;
};

struct Checkpoint {
  Manifold manifold;
  Provenance provenance;
};

/// Text header (magic, version, shapes, provenance) followed by raw little-endian doubles:
/// sigma, theta[p], codes[N * n]. Written atomically.
void save_checkpoint(const Manifold& manifold, const Provenance& provenance,
                     const std::filesystem::path& path);
/// Throws CorruptHeader, VersionMismatch, TruncatedPayload or IoError.
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Same layout as checkpoints with payload times[K+1], z[n], thetas[(K+1) * p].
void save_trajectory(const Trajectory& traj, const std::filesystem::path& path);
Trajectory load_trajectory(const std::filesystem::path& path);

/// Shortest decimal rendering that parses back to the same double.
std::string format_double(double v);
double parse_double(std::string_view s);

/// CSV with header "time,x,value" (1D) or "time,x,y,value" (2D), one row per (t, point).
void export_grid_solution(const GridSolution& sol, const std::filesystem::path& path);
GridSolution import_grid_solution(const std::filesystem::path& path);

struct MseEntry {
  std::string mode;  // e.g. "full", "sparse_s=100"
  std::size_t sample = 0;
  double time = 0.0;
  double value = 0.0;
};

struct ExperimentReport {
  std::map<std::string, std::string> config;
  std::vector<std::uint64_t> seeds;
  std::vector<MseEntry> mse;
  /// Optional scalar diagnostics (losses, parameter counts).
  std::map<std::string, double> metrics;
  /// Seconds per phase; written to the timing sidecar only.
  std::map<std::string, double> wall_times;
};

/// Writes the report as JSON with sorted keys to `path`, and wall times to `path`.timing.json.
void export_report(const ExperimentReport& report, const std::filesystem::path& path);
ExperimentReport import_report(const std::filesystem::path& path);

/// Writes `contents` to a temporary sibling and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);
std::string read_file(const std::filesystem::path& path);

}  // namespace madngs
