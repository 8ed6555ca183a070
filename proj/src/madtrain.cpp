#include "madngs/madtrain.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "madngs/errors.hpp"
#include "madngs/parallel.hpp"

namespace madngs {

void TrainingEnsemble::validate() const {
  if (samples.empty()) throw ContractViolation("training ensemble is empty");
  if (points.empty()) throw ContractViolation("training ensemble has no collocation points");
  for (std::size_t i = 0; i < samples.size(); ++i)
    if (samples[i].size() != points.size())
      throw ContractViolation("sample " + std::to_string(i) + " is not on the collocation grid");
}

TrainingEnsemble TrainingEnsemble::from_fields(std::span<const InitialField> fields,
                                               std::vector<Point> points) {
  TrainingEnsemble e;
  e.points = std::move(points);
  for (const auto& f : fields) e.samples.push_back(f.evaluate(e.points));
  return e;
}

std::vector<Point> collocation_grid(const DomainSpec& domain, std::size_t per_axis) {
  if (per_axis < 2) throw ConfigError("collocation grid needs at least 2 points per axis");
  auto coord = [&](std::size_t axis, std::size_t i) {
    return domain.lower[axis] +
           domain.length(axis) * static_cast<double>(i) / static_cast<double>(per_axis - 1);
  };
  std::vector<Point> pts;
  if (domain.dim == 1) {
    for (std::size_t i = 0; i < per_axis; ++i) pts.push_back({coord(0, i), 0.0});
  } else {
    for (std::size_t i = 0; i < per_axis; ++i)
      for (std::size_t j = 0; j < per_axis; ++j) pts.push_back({coord(0, i), coord(1, j)});
  }
  return pts;
}

double data_loss(const NetworkArch& arch, const FlatParams& theta, const EmbeddingSpec& emb,
                 const LatentCode& z, std::span<const double> u0_values,
                 std::span<const Point> points) {
  check_dimensions(arch, theta, emb, z);
  if (points.empty()) throw ContractViolation("data_loss needs at least one point");
  if (points.size() != u0_values.size())
    throw ContractViolation("data_loss: values and points are not aligned");
  const Mlp net(arch, theta);
  std::vector<double> in(arch.input_dim);
  double sum = 0.0;
  for (std::size_t j = 0; j < points.size(); ++j) {
    network_input(emb, z, points[j], in);
    const double r = u0_values[j] - net.forward(in);
    sum += r * r;
  }
  return sum / static_cast<double>(points.size());
}

double pretrain_loss(const NetworkArch& arch, const FlatParams& theta, const EmbeddingSpec& emb,
                     std::span<const LatentCode> codes, const TrainingEnsemble& ensemble,
                     double sigma) {
  if (!(sigma > 0.0)) throw ConfigError("sigma must be positive");
  ensemble.validate();
  if (codes.size() != ensemble.size())
    throw ContractViolation("one latent code per training sample is required");
  double total = 0.0;
  for (std::size_t i = 0; i < ensemble.size(); ++i)
    total += data_loss(arch, theta, emb, codes[i], ensemble.samples[i], ensemble.points) +
             codes[i].values.squaredNorm() / sigma;
  return total;
}

namespace {

// Data loss of one sample plus gradients with respect to theta (optional) and z.
double sample_loss_gradient(const Mlp& net, const EmbeddingSpec& emb, const LatentCode& z,
                            std::span<const double> values, std::span<const Point> points,
                            Vector* grad_theta, Vector& grad_z) {
  const std::size_t in_dim = net.arch().input_dim;
  const std::size_t e = emb.output_dim();
  const std::size_t p = net.arch().param_count();
  std::vector<double> in(in_dim), g_in(in_dim), g_par(p);
  const double scale = 2.0 / static_cast<double>(points.size());
  double sum = 0.0;
  grad_z.setZero(static_cast<Eigen::Index>(z.size()));
  if (grad_theta) grad_theta->setZero(static_cast<Eigen::Index>(p));
  for (std::size_t j = 0; j < points.size(); ++j) {
    network_input(emb, z, points[j], in);
    const double r = net.backward(in, g_par, g_in) - values[j];
    sum += r * r;
    if (grad_theta) *grad_theta += (scale * r) * Eigen::Map<const Vector>(g_par.data(), p);
    for (std::size_t k = 0; k < z.size(); ++k)
      grad_z(static_cast<Eigen::Index>(k)) += scale * r * g_in[e + k];
  }
  return sum / static_cast<double>(points.size());
}

struct StackedView {
  std::size_t p;
  std::size_t n;
  std::size_t count;

  FlatParams theta(const Vector& x) const {
    return FlatParams{x.head(static_cast<Eigen::Index>(p))};
  }
  std::vector<LatentCode> codes(const Vector& x) const {
    std::vector<LatentCode> out(count);
    for (std::size_t i = 0; i < count; ++i)
      out[i].values = x.segment(static_cast<Eigen::Index>(p + i * n), static_cast<Eigen::Index>(n));
    return out;
  }
};

}  // namespace

double pretrain_loss_gradient(const NetworkArch& arch, const FlatParams& theta,
                              const EmbeddingSpec& emb, std::span<const LatentCode> codes,
                              const TrainingEnsemble& ensemble, double sigma, Vector& grad) {
  if (!(sigma > 0.0)) throw ConfigError("sigma must be positive");
  ensemble.validate();
  if (codes.size() != ensemble.size())
    throw ContractViolation("one latent code per training sample is required");
  for (const auto& z : codes) check_dimensions(arch, theta, emb, z);
  const std::size_t p = arch.param_count();
  const std::size_t n = codes.empty() ? 0 : codes[0].size();
  const std::size_t count = ensemble.size();
  const Mlp net(arch, theta);

  std::vector<double> losses(count);
  std::vector<Vector> g_theta(count), g_z(count);
  parallel_for(count, [&](std::size_t i) {
    losses[i] = sample_loss_gradient(net, emb, codes[i], ensemble.samples[i], ensemble.points,
                                     &g_theta[i], g_z[i]);
  });

  grad.setZero(static_cast<Eigen::Index>(p + count * n));
  double total = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    total += losses[i] + codes[i].values.squaredNorm() / sigma;
    grad.head(static_cast<Eigen::Index>(p)) += g_theta[i];
    grad.segment(static_cast<Eigen::Index>(p + i * n), static_cast<Eigen::Index>(n)) =
        g_z[i] + (2.0 / sigma) * codes[i].values;
  }
  return total;
}

double finetune_loss_gradient(const Mlp& net, const EmbeddingSpec& emb, const LatentCode& z,
                              std::span<const double> u_values, std::span<const Point> points,
                              double sigma, Vector& grad_z) {
  const double loss = sample_loss_gradient(net, emb, z, u_values, points, nullptr, grad_z);
  grad_z += (2.0 / sigma) * z.values;
  return loss + z.values.squaredNorm() / sigma;
}

PretrainResult pretrain(const TrainingEnsemble& ensemble, const NetworkArch& arch,
                        const EmbeddingSpec& emb, std::size_t latent_dim, double sigma,
                        const OptimizerConfig& opt) {
  ensemble.validate();
  arch.validate();
  opt.validate();
  if (!(sigma > 0.0)) throw ConfigError("sigma must be positive");
  const std::size_t p = arch.param_count();
  const StackedView view{p, latent_dim, ensemble.size()};

  Vector x0 = Vector::Zero(static_cast<Eigen::Index>(p + latent_dim * ensemble.size()));
  x0.head(static_cast<Eigen::Index>(p)) = init_params(arch, opt.seed).values;
  check_dimensions(arch, view.theta(x0), emb, LatentCode{Vector::Zero(latent_dim)});

  const Objective objective = [&](const Vector& x, Vector& g) {
    const auto codes = view.codes(x);
    return pretrain_loss_gradient(arch, view.theta(x), emb, codes, ensemble, sigma, g);
  };
  auto res = minimize(objective, std::move(x0), opt);

  PretrainResult out;
  out.manifold.arch = arch;
  out.manifold.theta = view.theta(res.x);
  out.manifold.codes = view.codes(res.x);
  out.manifold.sigma = sigma;
  out.history = std::move(res.history);
  for (std::size_t i = 0; i < ensemble.size(); ++i)
    out.sample_losses.push_back(data_loss(arch, out.manifold.theta, emb, out.manifold.codes[i],
                                          ensemble.samples[i], ensemble.points));
  return out;
}

std::size_t nearest_sample_index(const TrainingEnsemble& ensemble,
                                 std::span<const double> u_new_values) {
  ensemble.validate();
  if (u_new_values.size() != ensemble.points.size())
    throw ContractViolation("new sample is not on the ensemble's collocation grid");
  std::size_t best = 0;
  double best_dist = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < ensemble.size(); ++i) {
    double d = 0.0;
    for (std::size_t j = 0; j < u_new_values.size(); ++j) {
      const double diff = ensemble.samples[i][j] - u_new_values[j];
      d += diff * diff;
    }
    if (d < best_dist) {
      best_dist = d;
      best = i;
    }
  }
  return best;
}

FinetuneResult finetune(const Manifold& manifold, const EmbeddingSpec& emb,
                        const TrainingEnsemble& ensemble, std::span<const double> u_new_values,
                        const OptimizerConfig& opt) {
  if (manifold.codes.size() != ensemble.size())
    throw ContractViolation("manifold and ensemble sizes differ");
  const std::size_t idx = nearest_sample_index(ensemble, u_new_values);
  const LatentCode& start = manifold.codes[idx];
  check_dimensions(manifold.arch, manifold.theta, emb, start);
  const Mlp net(manifold.arch, manifold.theta);
  const auto& points = ensemble.points;
  const double sigma = manifold.sigma;

  const Objective objective = [&](const Vector& x, Vector& g) {
    return finetune_loss_gradient(net, emb, LatentCode{x}, u_new_values, points, sigma, g);
  };
  auto res = minimize(objective, start.values, opt);

  FinetuneResult out;
  out.warm_start_index = idx;
  out.z = LatentCode{res.x};
  out.warm_start_loss = res.initial_loss;
  out.loss = res.loss;
  out.warm_start_data_loss =
      data_loss(manifold.arch, manifold.theta, emb, start, u_new_values, points);
  out.data_loss = data_loss(manifold.arch, manifold.theta, emb, out.z, u_new_values, points);
  out.history = std::move(res.history);
  return out;
}

}  // namespace madngs
