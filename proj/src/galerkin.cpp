#include "madngs/galerkin.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "madngs/parallel.hpp"

namespace madngs {

GalerkinSystem assemble(const PdeProblem& problem, const NetworkArch& arch,
                        const FlatParams& theta, const EmbeddingSpec& emb, const LatentCode& z,
                        double t, std::span<const Point> points) {
  check_dimensions(arch, theta, emb, z);
  if (points.empty()) throw ContractViolation("assemble needs at least one point");
  const Mlp net(arch, theta);
  const std::size_t p = arch.param_count();
  const std::size_t n = points.size();
  // Row-major so each point writes one contiguous row.
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> jac(
      static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  GalerkinSystem sys;
  sys.rhs.resize(static_cast<Eigen::Index>(n));
  sys.points.assign(points.begin(), points.end());
  std::vector<char> bad(n, 0);

  parallel_for(n, [&](std::size_t j) {
    std::vector<double> in(arch.input_dim);
    network_input(emb, z, points[j], in);
    const auto row = static_cast<Eigen::Index>(j);
    net.backward(in, std::span<double>(jac.row(row).data(), p), {});
    const SpatialJet jet = spatial_jet(net, emb, z, points[j], problem.jet_order());
    const double f = problem.rhs(t, points[j], jet);
    sys.rhs(row) = f;
    bad[j] = !(std::isfinite(jet.u) && std::isfinite(jet.d1[0]) && std::isfinite(jet.d1[1]) &&
               std::isfinite(jet.d2[0]) && std::isfinite(jet.d2[1]) && std::isfinite(jet.d3) &&
               std::isfinite(f));
  });
  for (std::size_t j = 0; j < n; ++j)
    if (bad[j])
      throw NumericalBlowup("non-finite spatial jet at quadrature point " + std::to_string(j), j);
  sys.jacobian = jac;
  return sys;
}

Vector solve_least_squares(const Matrix& jacobian, const Vector& rhs, const LsqSettings& settings) {
  if (jacobian.rows() != rhs.size())
    throw ContractViolation("least-squares system has mismatched row counts");
  if (settings.method == LsqSettings::Method::Ridge) {
    const Matrix normal = jacobian.transpose() * jacobian +
                          settings.ridge * Matrix::Identity(jacobian.cols(), jacobian.cols());
    Eigen::LDLT<Matrix> ldlt(normal);
    if (ldlt.info() != Eigen::Success) throw DegenerateSystem("ridge normal equations failed");
    return ldlt.solve(jacobian.transpose() * rhs);
  }
  Eigen::BDCSVD<Matrix> svd(jacobian, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& sv = svd.singularValues();
  const double smax = sv.size() > 0 ? sv(0) : 0.0;
  if (!(smax >= 1e-14)) throw DegenerateSystem("all singular values are below 1e-14");
  const double cutoff = settings.truncation * smax;
  Eigen::Index rank = 0;
  while (rank < sv.size() && sv(rank) >= cutoff) ++rank;
  Vector coeff = svd.matrixU().leftCols(rank).transpose() * rhs;
  coeff.array() /= sv.head(rank).array();
  return svd.matrixV().leftCols(rank) * coeff;
}

Vector solve_full(const GalerkinSystem& system, double truncation) {
  LsqSettings s;
  s.truncation = truncation;
  return solve_full(system, s);
}

Vector solve_full(const GalerkinSystem& system, const LsqSettings& settings) {
  return solve_least_squares(system.jacobian, system.rhs, settings);
}

SparseSelector draw_selector(std::size_t p, std::size_t s, std::mt19937_64& rng) {
  if (p < 1) throw ConfigError("cannot draw a selector for an empty parameter vector");
  // Draws are with replacement, so s > p is well defined here; evolve still requires s <= p.
  if (s < 1) throw ConfigError("sparse width s must be >= 1");
  std::uniform_int_distribution<std::size_t> dist(0, p - 1);
  SparseSelector sel;
  sel.indices.resize(s);
  for (auto& i : sel.indices) i = dist(rng);
  return sel;
}

Vector solve_sparse(const GalerkinSystem& system, const SparseSelector& selector,
                    double truncation) {
  LsqSettings s;
  s.truncation = truncation;
  return solve_sparse(system, selector, s);
}

Vector solve_sparse(const GalerkinSystem& system, const SparseSelector& selector,
                    const LsqSettings& settings) {
  const auto p = static_cast<Eigen::Index>(system.cols());
  Matrix js(system.jacobian.rows(), static_cast<Eigen::Index>(selector.indices.size()));
  for (std::size_t c = 0; c < selector.indices.size(); ++c) {
    if (static_cast<Eigen::Index>(selector.indices[c]) >= p)
      throw ConfigError("selector index out of range");
    js.col(static_cast<Eigen::Index>(c)) =
        system.jacobian.col(static_cast<Eigen::Index>(selector.indices[c]));
  }
  const Vector reduced = solve_least_squares(js, system.rhs, settings);
  Vector full = Vector::Zero(p);
  for (std::size_t c = 0; c < selector.indices.size(); ++c)
    full(static_cast<Eigen::Index>(selector.indices[c])) += reduced(static_cast<Eigen::Index>(c));
  return full;
}

FlatParams step_euler(const FlatParams& theta, const Vector& theta_dot, double dt) {
  if (theta.values.size() != theta_dot.size())
    throw ContractViolation("step_euler: parameter and velocity lengths differ");
  return FlatParams{theta.values + dt * theta_dot};
}

FlatParams rk4_step(const VelocityFn& velocity, const FlatParams& theta, double t, double dt) {
  const Vector k1 = velocity(theta, t);
  const Vector k2 = velocity(FlatParams{theta.values + 0.5 * dt * k1}, t + 0.5 * dt);
  const Vector k3 = velocity(FlatParams{theta.values + 0.5 * dt * k2}, t + 0.5 * dt);
  const Vector k4 = velocity(FlatParams{theta.values + dt * k3}, t + dt);
  return FlatParams{theta.values + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)};
}

void EvolutionConfig::validate(std::size_t p) const {
  if (!(dt > 0.0)) throw ConfigError("evolve.dt must be positive");
  if (update.kind == UpdateMode::Kind::Sparse && (update.s < 1 || update.s > p))
    throw ConfigError("sparse width s=" + std::to_string(update.s) + " must lie in [1, p=" +
                      std::to_string(p) + "]");
  if (!(lsq.truncation > 0.0 && lsq.truncation < 1.0))
    throw ConfigError("least-squares truncation must lie in (0, 1)");
  if (quadrature.n_pts < 2) throw ConfigError("quadrature needs at least 2 points per axis");
}

std::vector<Point> quadrature_points(const DomainSpec& domain, const Quadrature& q,
                                     std::mt19937_64& rng) {
  std::vector<Point> pts;
  if (q.kind == Quadrature::Kind::FixedUniformGrid) {
    auto coord = [&](std::size_t axis, std::size_t i) {
      return domain.lower[axis] +
             domain.length(axis) * static_cast<double>(i) / static_cast<double>(q.n_pts - 1);
    };
    for (std::size_t i = 0; i < q.n_pts; ++i) {
      if (domain.dim == 1) {
        pts.push_back({coord(0, i), 0.0});
      } else {
        for (std::size_t j = 0; j < q.n_pts; ++j) pts.push_back({coord(0, i), coord(1, j)});
      }
    }
    return pts;
  }
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::size_t total = domain.dim == 1 ? q.n_pts : q.n_pts * q.n_pts;
  for (std::size_t i = 0; i < total; ++i) {
    Point x{0.0, 0.0};
    for (std::size_t a = 0; a < domain.dim; ++a) x[a] = domain.lower[a] + domain.length(a) * u(rng);
    pts.push_back(x);
  }
  return pts;
}

namespace {

struct StepContext {
  const PdeProblem& problem;
  const NetworkArch& arch;
  const EmbeddingSpec& emb;
  const LatentCode& z;
  std::span<const Point> points;
  const LsqSettings& lsq;
  const SparseSelector* selector;  // null for full updates
};

Vector galerkin_velocity(const StepContext& ctx, const FlatParams& theta, double t,
                         double* residual) {
  const GalerkinSystem sys = assemble(ctx.problem, ctx.arch, theta, ctx.emb, ctx.z, t, ctx.points);
  Vector v = ctx.selector ? solve_sparse(sys, *ctx.selector, ctx.lsq) : solve_full(sys, ctx.lsq);
  if (residual) *residual = (sys.jacobian * v - sys.rhs).norm();
  return v;
}

FlatParams advance(const StepContext& ctx, Stepper stepper, const FlatParams& theta, double t,
                   double dt, double* residual, double blowup_limit) {
  auto guard = [&](const Vector& v) {
    if (!v.allFinite() || v.lpNorm<Eigen::Infinity>() > blowup_limit)
      throw NumericalBlowup("parameter velocity blew up", 0);
  };
  if (stepper == Stepper::ForwardEuler) {
    const Vector v = galerkin_velocity(ctx, theta, t, residual);
    guard(v);
    return step_euler(theta, v, dt);
  }
  bool first = true;
  const VelocityFn velocity = [&](const FlatParams& th, double tt) {
    Vector v = galerkin_velocity(ctx, th, tt, first ? residual : nullptr);
    first = false;
    guard(v);
    return v;
  };
  return rk4_step(velocity, theta, t, dt);
}

}  // namespace

FlatParams step_rk4(const PdeProblem& problem, const NetworkArch& arch, const EmbeddingSpec& emb,
                    const LatentCode& z, const FlatParams& theta, double t, double dt,
                    const UpdateMode& update, std::span<const Point> points,
                    const LsqSettings& lsq, std::mt19937_64& rng) {
  SparseSelector sel;
  if (update.kind == UpdateMode::Kind::Sparse) sel = draw_selector(theta.size(), update.s, rng);
  const StepContext ctx{problem, arch, emb, z, points, lsq,
                        update.kind == UpdateMode::Kind::Sparse ? &sel : nullptr};
  return advance(ctx, Stepper::RK4, theta, t, dt, nullptr,
                 std::numeric_limits<double>::infinity());
}

Trajectory evolve(const PdeProblem& problem, const NetworkArch& arch, const EmbeddingSpec& emb,
                  const FlatParams& theta0, const LatentCode& z, const EvolutionConfig& config,
                  const ProgressHook& progress) {
  check_dimensions(arch, theta0, emb, z);
  config.validate(arch.param_count());
  const bool sparse = config.update.kind == UpdateMode::Kind::Sparse;

  std::mt19937_64 selector_rng(config.seed);
  std::mt19937_64 point_rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<Point> points;
  if (config.quadrature.kind == Quadrature::Kind::FixedUniformGrid)
    points = quadrature_points(problem.domain(), config.quadrature, point_rng);

  Trajectory traj;
  traj.z = z;
  traj.thetas.push_back(theta0);
  traj.times.push_back(0.0);
  for (std::size_t k = 1; k <= config.n_steps; ++k) {
    const double t = static_cast<double>(k - 1) * config.dt;
    if (config.quadrature.kind == Quadrature::Kind::ResampledUniform)
      points = quadrature_points(problem.domain(), config.quadrature, point_rng);
    SparseSelector sel;
    if (sparse) sel = draw_selector(arch.param_count(), config.update.s, selector_rng);
    const StepContext ctx{problem, arch, emb, z, points, config.lsq, sparse ? &sel : nullptr};
    double residual = 0.0;
    FlatParams next;
    try {
      next = advance(ctx, config.stepper, traj.thetas.back(), t, config.dt, &residual,
                     config.blowup_limit);
    } catch (const NumericalBlowup& e) {
      throw EvolutionAborted(std::string(e.what()) + " at step " + std::to_string(k), k,
                             std::move(traj));
    }
    if (!next.values.allFinite())
      throw EvolutionAborted("non-finite parameters at step " + std::to_string(k), k,
                             std::move(traj));
    traj.thetas.push_back(std::move(next));
    traj.times.push_back(static_cast<double>(k) * config.dt);
    if (progress) progress(k, traj.times.back(), residual);
  }
  return traj;
}

}  // namespace madngs
