#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "madngs/errors.hpp"
#include "madngs/neuralnet.hpp"
#include "madngs/pdemodels.hpp"

namespace madngs {

/// Least-squares data J theta_dot ~ f at one time level. The normal-equation matrices
/// M = J^T J / n and F = J^T f / n are never formed.
struct GalerkinSystem {
  Matrix jacobian;
  Vector rhs;
  std::vector<Point> points;

  std::size_t rows() const { return static_cast<std::size_t>(jacobian.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(jacobian.cols()); }
};

/// Row j: gradient of U in theta at points[j]; rhs_j = f(t, x_j, jet of U at x_j).
/// Throws NumericalBlowup naming the first point with a non-finite value.
GalerkinSystem assemble(const PdeProblem& problem, const NetworkArch& arch,
                        const FlatParams& theta, const EmbeddingSpec& emb, const LatentCode& z,
                        double t, std::span<const Point> points);

struct LsqSettings {
  enum class Method { TruncatedSvd, Ridge };
  Method method = Method::TruncatedSvd;
  /// Singular values below truncation * sigma_max are dropped.
  double truncation = 1e-8;
  /// Tikhonov weight for the Ridge alternative: (J^T J + ridge I) x = J^T f.
  double ridge = 1e-10;
};

/// Minimum-norm solution of min ||J x - f||. Throws DegenerateSystem when every singular
/// value is below 1e-14.
Vector solve_least_squares(const Matrix& jacobian, const Vector& rhs, const LsqSettings& settings);

Vector solve_full(const GalerkinSystem& system, double truncation = 1e-8);
Vector solve_full(const GalerkinSystem& system, const LsqSettings& settings);

/// Column indices of the random mapping matrix S_t = (e_{xi_1}, ..., e_{xi_s}).
/// Drawn i.i.d. uniform with replacement. Throws ConfigError for s = 0 or p = 0.
struct SparseSelector {
  std::vector<std::size_t> indices;
};

SparseSelector draw_selector(std::size_t p, std::size_t s, std::mt19937_64& rng);

/// Gathers J S, solves for theta_dot_s and scatters back theta_dot = S theta_dot_s;
/// duplicated indices accumulate. Unselected entries are exactly zero.
Vector solve_sparse(const GalerkinSystem& system, const SparseSelector& selector,
                    double truncation = 1e-8);
Vector solve_sparse(const GalerkinSystem& system, const SparseSelector& selector,
                    const LsqSettings& settings);

FlatParams step_euler(const FlatParams& theta, const Vector& theta_dot, double dt);

/// theta, t -> theta_dot.
using VelocityFn = std::function<Vector(const FlatParams&, double)>;

/// Classical RK4 with weights (1, 2, 2, 1) / 6.
FlatParams rk4_step(const VelocityFn& velocity, const FlatParams& theta, double t, double dt);

enum class Stepper { ForwardEuler, RK4 };

struct UpdateMode {
  enum class Kind { Full, Sparse };
  Kind kind = Kind::Full;
  std::size_t s = 0;

  static UpdateMode full() { return {}; }
  static UpdateMode sparse(std::size_t s) { return {Kind::Sparse, s}; }
};

struct Quadrature {
  enum class Kind { FixedUniformGrid, ResampledUniform };
  Kind kind = Kind::FixedUniformGrid;
  /// Points per axis.
  std::size_t n_pts = 257;
};

struct EvolutionConfig {
  Stepper stepper = Stepper::ForwardEuler;
  double dt = 1e-3;
  std::size_t n_steps = 0;
  UpdateMode update;
  Quadrature quadrature;
  LsqSettings lsq;
  /// Seeds the selector stream and, for resampled quadrature, the point stream.
  std::uint64_t seed = 0;
  /// Abort when ||theta_dot||_inf exceeds this.
  double blowup_limit = 1e8;

  /// Throws ConfigError; p is the parameter count the config will be used with.
  void validate(std::size_t p) const;
};

/// Quadrature points for one time step. Resampled points are drawn from rng.
std::vector<Point> quadrature_points(const DomainSpec& domain, const Quadrature& q,
                                     std::mt19937_64& rng);

/// One RK4 step of the Galerkin flow. All four stages share the step's selector and points.
FlatParams step_rk4(const PdeProblem& problem, const NetworkArch& arch, const EmbeddingSpec& emb,
                    const LatentCode& z, const FlatParams& theta, double t, double dt,
                    const UpdateMode& update, std::span<const Point> points,
                    const LsqSettings& lsq, std::mt19937_64& rng);

struct Trajectory {
  std::vector<FlatParams> thetas;
  LatentCode z;
  std::vector<double> times;

  bool operator==(const Trajectory&) const = default;
};

/// Evolution stopped by a blow-up; carries everything computed before the failing step.
class EvolutionAborted : public NumericalBlowup {
 public:
  EvolutionAborted(const std::string& what, std::size_t step, Trajectory partial)
      : NumericalBlowup(what, step), partial_(std::move(partial)) {}
  const Trajectory& partial() const { return partial_; }

 private:
  Trajectory partial_;
};

/// Called after each step with (step index, time, ||J theta_dot - f||_2 at the step start).
using ProgressHook = std::function<void(std::size_t, double, double)>;

/// Integrates theta from theta0 over config.n_steps steps; z is carried unchanged.
Trajectory evolve(const PdeProblem& problem, const NetworkArch& arch, const EmbeddingSpec& emb,
                  const FlatParams& theta0, const LatentCode& z, const EvolutionConfig& config,
                  const ProgressHook& progress = {});

}  // namespace madngs
