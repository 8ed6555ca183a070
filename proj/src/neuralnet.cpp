#include "madngs/neuralnet.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <string>

#include "madngs/errors.hpp"

namespace madngs {

using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

std::size_t NetworkArch::layer_inputs(std::size_t layer) const {
  return layer == 0 ? input_dim : hidden_widths[layer - 1];
}

std::size_t NetworkArch::layer_outputs(std::size_t layer) const {
  return layer < hidden_widths.size() ? hidden_widths[layer] : output_dim;
}

std::size_t NetworkArch::param_count() const {
  std::size_t p = 0;
  for (std::size_t l = 0; l < num_layers(); ++l) p += (layer_inputs(l) + 1) * layer_outputs(l);
  return p;
}

void NetworkArch::validate() const {
  if (input_dim == 0) throw ConfigError("network input_dim must be >= 1");
  for (auto w : hidden_widths)
    if (w == 0) throw ConfigError("hidden widths must be >= 1");
  if (output_dim != 1) throw ConfigError("only scalar-output networks are supported");
}

std::vector<LayerBlock> param_layout(const NetworkArch& arch) {
  std::vector<LayerBlock> blocks;
  blocks.reserve(arch.num_layers());
  std::size_t offset = 0;
  for (std::size_t l = 0; l < arch.num_layers(); ++l) {
    LayerBlock b;
    b.rows = arch.layer_outputs(l);
    b.cols = arch.layer_inputs(l);
    b.weight_offset = offset;
    b.bias_offset = offset + b.rows * b.cols;
    offset = b.bias_offset + b.rows;
    blocks.push_back(b);
  }
  return blocks;
}

std::vector<DenseLayer> unflatten(const NetworkArch& arch, const FlatParams& theta) {
  if (theta.size() != arch.param_count())
    throw ConfigError("parameter vector has length " + std::to_string(theta.size()) +
                      ", architecture expects " + std::to_string(arch.param_count()));
  std::vector<DenseLayer> layers;
  for (const auto& b : param_layout(arch)) {
    DenseLayer layer;
    layer.weight = Eigen::Map<const RowMajorMatrix>(theta.values.data() + b.weight_offset,
                                                    static_cast<Eigen::Index>(b.rows),
                                                    static_cast<Eigen::Index>(b.cols));
    layer.bias = theta.values.segment(static_cast<Eigen::Index>(b.bias_offset),
                                      static_cast<Eigen::Index>(b.rows));
    layers.push_back(std::move(layer));
  }
  return layers;
}

FlatParams flatten(const NetworkArch& arch, const std::vector<DenseLayer>& layers) {
  const auto layout = param_layout(arch);
  if (layers.size() != layout.size()) throw ConfigError("layer count does not match architecture");
  FlatParams theta{Vector::Zero(static_cast<Eigen::Index>(arch.param_count()))};
  for (std::size_t l = 0; l < layout.size(); ++l) {
    const auto& b = layout[l];
    if (static_cast<std::size_t>(layers[l].weight.rows()) != b.rows ||
        static_cast<std::size_t>(layers[l].weight.cols()) != b.cols ||
        static_cast<std::size_t>(layers[l].bias.size()) != b.rows)
      throw ConfigError("layer " + std::to_string(l) + " has the wrong shape");
    Eigen::Map<RowMajorMatrix>(theta.values.data() + b.weight_offset,
                               static_cast<Eigen::Index>(b.rows),
                               static_cast<Eigen::Index>(b.cols)) = layers[l].weight;
    theta.values.segment(static_cast<Eigen::Index>(b.bias_offset),
                         static_cast<Eigen::Index>(b.rows)) = layers[l].bias;
  }
  return theta;
}

// ---------------------------------------------------------------------------
// Embeddings

EmbeddingSpec EmbeddingSpec::periodic_1d(double half_width) {
  if (!(half_width > 0.0)) throw ConfigError("periodic embedding half-width must be positive");
  const double w = std::numbers::pi / half_width;
  EmbeddingSpec e(Kind::Periodic1D, 1, {{0, w, 0.0, Shape::Sin}, {0, w, 0.0, Shape::Cos}});
  e.half_width_ = half_width;
  return e;
}

EmbeddingSpec EmbeddingSpec::shifted_periodic_1d(double shift) {
  if (!(1.0 + 2.0 * shift > 0.0)) throw ConfigError("shift must satisfy 1 + 2*shift > 0");
  const double w = std::numbers::pi / (1.0 + 2.0 * shift);
  EmbeddingSpec e(Kind::ShiftedPeriodic1D, 1,
                  {{0, w, w * shift, Shape::Sin}, {0, w, w * shift, Shape::Cos}});
  e.shift_ = shift;
  return e;
}

EmbeddingSpec EmbeddingSpec::periodic_2d() {
  const double w = 2.0 * std::numbers::pi;
  return EmbeddingSpec(Kind::Periodic2D, 2,
                       {{0, w, 0.0, Shape::Sin},
                        {0, w, 0.0, Shape::Cos},
                        {1, w, 0.0, Shape::Sin},
                        {1, w, 0.0, Shape::Cos}});
}

EmbeddingSpec EmbeddingSpec::identity(std::size_t spatial_dim) {
  if (spatial_dim < 1 || spatial_dim > 2) throw ConfigError("spatial dimension must be 1 or 2");
  std::vector<Feature> f;
  for (std::size_t a = 0; a < spatial_dim; ++a) f.push_back({a, 1.0, 0.0, Shape::Linear});
  return EmbeddingSpec(Kind::Identity, spatial_dim, std::move(f));
}

double EmbeddingSpec::period() const {
  switch (kind_) {
    case Kind::Periodic1D:
      return 2.0 * half_width_;
    case Kind::ShiftedPeriodic1D:
      return 2.0 * (1.0 + 2.0 * shift_);
    case Kind::Periodic2D:
      return 1.0;
    case Kind::Identity:
      break;
  }
  return std::numeric_limits<double>::infinity();
}

Point EmbeddingSpec::wrap(const Point& x) const {
  if (kind_ == Kind::Identity) return x;
  const double p = period();
  Point r = x;
  for (std::size_t a = 0; a < spatial_dim_; ++a) r[a] = x[a] - p * std::floor(x[a] / p);
  return r;
}

void EmbeddingSpec::embed(const Point& x_in, std::span<double> out) const {
  const Point x = wrap(x_in);
  for (std::size_t i = 0; i < features_.size(); ++i) {
    const auto& f = features_[i];
    const double arg = f.frequency * x[f.axis] + f.phase;
    switch (f.shape) {
      case Shape::Sin:
        out[i] = std::sin(arg);
        break;
      case Shape::Cos:
        out[i] = std::cos(arg);
        break;
      case Shape::Linear:
        out[i] = x[f.axis];
        break;
    }
  }
}

// ---------------------------------------------------------------------------
// Network evaluation

Mlp::Mlp(const NetworkArch& arch, const FlatParams& theta)
    : arch_(arch), layout_(param_layout(arch)), layers_(unflatten(arch, theta)) {}

double Mlp::forward(std::span<const double> input) const {
  Vector a = Eigen::Map<const Vector>(input.data(), static_cast<Eigen::Index>(input.size()));
  for (std::size_t l = 0; l + 1 < layers_.size(); ++l)
    a = (layers_[l].weight * a + layers_[l].bias).array().tanh().matrix();
  const auto& last = layers_.back();
  return (last.weight * a + last.bias)(0);
}

double Mlp::backward(std::span<const double> input, std::span<double> grad_params,
                     std::span<double> grad_input) const {
  const std::size_t n_layers = layers_.size();
  std::vector<Vector> acts(n_layers);
  acts[0] = Eigen::Map<const Vector>(input.data(), static_cast<Eigen::Index>(input.size()));
  for (std::size_t l = 0; l + 1 < n_layers; ++l)
    acts[l + 1] = (layers_[l].weight * acts[l] + layers_[l].bias).array().tanh().matrix();
  const double out = (layers_.back().weight * acts.back() + layers_.back().bias)(0);

  Vector delta = Vector::Ones(1);
  for (std::size_t l = n_layers; l-- > 0;) {
    const auto& b = layout_[l];
    const Vector& a = acts[l];
    for (std::size_t r = 0; r < b.rows; ++r) {
      double* row = grad_params.data() + b.weight_offset + r * b.cols;
      const double d = delta(static_cast<Eigen::Index>(r));
      for (std::size_t c = 0; c < b.cols; ++c) row[c] = d * a(static_cast<Eigen::Index>(c));
      grad_params[b.bias_offset + r] = d;
    }
    Vector back = layers_[l].weight.transpose() * delta;
    if (l > 0) {
      delta = back.array() * (1.0 - a.array().square());
    } else if (!grad_input.empty()) {
      for (std::size_t c = 0; c < grad_input.size(); ++c)
        grad_input[c] = back(static_cast<Eigen::Index>(c));
    }
  }
  return out;
}

Vector Mlp::taylor(const Matrix& input_coeffs) const {
  const Eigen::Index order = input_coeffs.cols() - 1;
  Matrix a = input_coeffs;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Matrix pre = layers_[l].weight * a;
    pre.col(0) += layers_[l].bias;
    if (l + 1 == layers_.size()) return pre.row(0).transpose();
    // tanh composed with a truncated series; g_k are the derivatives of tanh at a0.
    a.resize(pre.rows(), pre.cols());
    for (Eigen::Index i = 0; i < pre.rows(); ++i) {
      const double t = std::tanh(pre(i, 0));
      const double g1 = 1.0 - t * t;
      const double g2 = -2.0 * t * g1;
      const double g3 = g1 * (6.0 * t * t - 2.0);
      a(i, 0) = t;
      if (order >= 1) a(i, 1) = g1 * pre(i, 1);
      if (order >= 2) a(i, 2) = g1 * pre(i, 2) + 0.5 * g2 * pre(i, 1) * pre(i, 1);
      if (order >= 3)
        a(i, 3) = g1 * pre(i, 3) + g2 * pre(i, 1) * pre(i, 2) +
                  g3 / 6.0 * pre(i, 1) * pre(i, 1) * pre(i, 1);
    }
  }
  return a.row(0).transpose();
}

FlatParams init_params(const NetworkArch& arch, std::uint64_t seed) {
  arch.validate();
  std::mt19937_64 rng(seed);
  FlatParams theta{Vector::Zero(static_cast<Eigen::Index>(arch.param_count()))};
  for (const auto& b : param_layout(arch)) {
    const double limit = std::sqrt(6.0 / static_cast<double>(b.rows + b.cols));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (std::size_t i = 0; i < b.rows * b.cols; ++i)
      theta.values(static_cast<Eigen::Index>(b.weight_offset + i)) = dist(rng);
  }
  return theta;
}

void check_dimensions(const NetworkArch& arch, const FlatParams& theta, const EmbeddingSpec& emb,
                      const LatentCode& z) {
  if (arch.input_dim != emb.output_dim() + z.size())
    throw ConfigError("network input_dim " + std::to_string(arch.input_dim) +
                      " != embedding dim " + std::to_string(emb.output_dim()) + " + latent dim " +
                      std::to_string(z.size()));
  if (theta.size() != arch.param_count())
    throw ConfigError("parameter vector length " + std::to_string(theta.size()) +
                      " != architecture parameter count " + std::to_string(arch.param_count()));
}

void network_input(const EmbeddingSpec& emb, const LatentCode& z, const Point& x,
                   std::span<double> out) {
  const std::size_t e = emb.output_dim();
  emb.embed(x, out.first(e));
  for (std::size_t i = 0; i < z.size(); ++i) out[e + i] = z.values(static_cast<Eigen::Index>(i));
}

double forward(const NetworkArch& arch, const FlatParams& theta, const EmbeddingSpec& emb,
               const LatentCode& z, const Point& x) {
  check_dimensions(arch, theta, emb, z);
  std::vector<double> in(arch.input_dim);
  network_input(emb, z, x, in);
  return Mlp(arch, theta).forward(in);
}

Matrix param_jacobian(const NetworkArch& arch, const FlatParams& theta, const EmbeddingSpec& emb,
                      const LatentCode& z, std::span<const Point> xs) {
  check_dimensions(arch, theta, emb, z);
  if (xs.empty()) throw ContractViolation("param_jacobian needs at least one point");
  const Mlp net(arch, theta);
  const std::size_t p = arch.param_count();
  RowMajorMatrix jac(static_cast<Eigen::Index>(xs.size()), static_cast<Eigen::Index>(p));
  std::vector<double> in(arch.input_dim);
  for (std::size_t j = 0; j < xs.size(); ++j) {
    network_input(emb, z, xs[j], in);
    net.backward(in, std::span<double>(jac.row(static_cast<Eigen::Index>(j)).data(), p), {});
  }
  return jac;
}

namespace {

// Taylor coefficients of the network input along axis `axis` at x, up to `order`.
Matrix input_series(const EmbeddingSpec& emb, const LatentCode& z, const Point& x_in,
                    std::size_t axis, int order) {
  const Point x = emb.wrap(x_in);
  const std::size_t e = emb.output_dim();
  Matrix c = Matrix::Zero(static_cast<Eigen::Index>(e + z.size()), order + 1);
  double factorial = 1.0;
  for (int k = 0; k <= order; ++k) {
    if (k > 0) factorial *= k;
    for (std::size_t i = 0; i < e; ++i) {
      const auto& f = emb.features()[i];
      if (k > 0 && f.axis != axis) continue;
      const auto row = static_cast<Eigen::Index>(i);
      // d^k/dx^k sin(wx + phi) = w^k sin(wx + phi + k pi/2), likewise for cos.
      const double arg = f.frequency * x[f.axis] + f.phase + k * std::numbers::pi / 2.0;
      const double scale = std::pow(f.frequency, k) / factorial;
      switch (f.shape) {
        case EmbeddingSpec::Shape::Sin:
          c(row, k) = scale * std::sin(arg);
          break;
        case EmbeddingSpec::Shape::Cos:
          c(row, k) = scale * std::cos(arg);
          break;
        case EmbeddingSpec::Shape::Linear:
          c(row, k) = k == 0 ? x[f.axis] : (k == 1 ? 1.0 : 0.0);
          break;
      }
    }
  }
  c.col(0).tail(static_cast<Eigen::Index>(z.size())) = z.values;
  return c;
}

}  // namespace

SpatialJet spatial_jet(const Mlp& net, const EmbeddingSpec& emb, const LatentCode& z,
                       const Point& x, int max_order) {
  const std::size_t dim = emb.spatial_dim();
  if (max_order < 1 || max_order > 3)
    throw UnsupportedOrder("spatial_jet order must be 1, 2 or 3");
  if (max_order == 3 && dim != 1)
    throw UnsupportedOrder("third-order spatial jets are only available in 1D");
  SpatialJet jet;
  jet.dim = dim;
  jet.max_order = max_order;
  for (std::size_t axis = 0; axis < dim; ++axis) {
    const Vector y = net.taylor(input_series(emb, z, x, axis, max_order));
    jet.u = y(0);
    jet.d1[axis] = y(1);
    if (max_order >= 2) jet.d2[axis] = 2.0 * y(2);
    if (max_order >= 3) jet.d3 = 6.0 * y(3);
  }
  return jet;
}

SpatialJet spatial_jet(const NetworkArch& arch, const FlatParams& theta, const EmbeddingSpec& emb,
                       const LatentCode& z, const Point& x, int max_order) {
  check_dimensions(arch, theta, emb, z);
  return spatial_jet(Mlp(arch, theta), emb, z, x, max_order);
}

}  // namespace madngs
