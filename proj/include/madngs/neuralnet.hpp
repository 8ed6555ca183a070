#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace madngs {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Spatial coordinate; 1D problems leave the second entry at zero.
using Point = std::array<double, 2>;

enum class Activation { Tanh };

/// Fully connected tanh network with a linear output layer.
struct NetworkArch {
  std::size_t input_dim = 0;
  std::vector<std::size_t> hidden_widths;
  std::size_t output_dim = 1;
  Activation activation = Activation::Tanh;

  std::size_t num_layers() const { return hidden_widths.size() + 1; }
  std::size_t layer_inputs(std::size_t layer) const;
  std::size_t layer_outputs(std::size_t layer) const;
  /// p = sum over layers of (fan_in + 1) * fan_out.
  std::size_t param_count() const;
  /// Throws ConfigError on zero widths or an output dimension other than 1.
  void validate() const;

  bool operator==(const NetworkArch&) const = default;
};

/// Where one layer lives inside the flat parameter vector. Weights are stored row-major
/// (fan_out x fan_in) and followed immediately by the fan_out biases.
struct LayerBlock {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t weight_offset = 0;
  std::size_t bias_offset = 0;
};

std::vector<LayerBlock> param_layout(const NetworkArch& arch);

struct DenseLayer {
  Matrix weight;
  Vector bias;
};

struct FlatParams {
  Vector values;

  std::size_t size() const { return static_cast<std::size_t>(values.size()); }
  bool operator==(const FlatParams& o) const {
    return values.size() == o.values.size() && values == o.values;
  }
};

struct LatentCode {
  Vector values;

  std::size_t size() const { return static_cast<std::size_t>(values.size()); }
  bool operator==(const LatentCode& o) const {
    return values.size() == o.values.size() && values == o.values;
  }
};

std::vector<DenseLayer> unflatten(const NetworkArch& arch, const FlatParams& theta);
FlatParams flatten(const NetworkArch& arch, const std::vector<DenseLayer>& layers);

/// Fixed positional feature map applied to x before it is concatenated with the latent code.
class EmbeddingSpec {
 public:
  enum class Kind { Periodic1D, ShiftedPeriodic1D, Periodic2D, Identity };

  enum class Shape { Sin, Cos, Linear };

  /// One embedding output: shape(frequency * x[axis] + phase), or x[axis] itself for Linear.
  struct Feature {
    std::size_t axis = 0;
    double frequency = 1.0;
    double phase = 0.0;
    Shape shape = Shape::Linear;
  };

  /// [sin(pi x / L), cos(pi x / L)]; period 2L.
  static EmbeddingSpec periodic_1d(double half_width);
  /// [sin(pi (x + d) / (1 + 2d)), cos(pi (x + d) / (1 + 2d))]; period 2(1 + 2d).
  static EmbeddingSpec shifted_periodic_1d(double shift);
  /// [sin 2 pi x, cos 2 pi x, sin 2 pi y, cos 2 pi y]; unit period per axis.
  static EmbeddingSpec periodic_2d();
  static EmbeddingSpec identity(std::size_t spatial_dim);

  Kind kind() const { return kind_; }
  double half_width() const { return half_width_; }
  double shift() const { return shift_; }
  std::size_t spatial_dim() const { return spatial_dim_; }
  std::size_t output_dim() const { return features_.size(); }
  /// Period along each axis; infinity for Identity.
  double period() const;
  const std::vector<Feature>& features() const { return features_; }

  /// x reduced to [0, period) along each periodic axis, so that x and x + period embed to
  /// bitwise identical features whenever the shift itself is exact.
  Point wrap(const Point& x) const;

  void embed(const Point& x, std::span<double> out) const;

 private:
  EmbeddingSpec(Kind kind, std::size_t spatial_dim, std::vector<Feature> features)
      : kind_(kind), spatial_dim_(spatial_dim), features_(std::move(features)) {}

  Kind kind_;
  std::size_t spatial_dim_;
  std::vector<Feature> features_;
  double half_width_ = 0.0;
  double shift_ = 0.0;
};

/// Value and spatial derivatives of the network output at one point.
/// Entries above max_order are left at zero and reported absent by has().
struct SpatialJet {
  std::size_t dim = 1;
  int max_order = 0;
  double u = 0.0;
  std::array<double, 2> d1{};
  std::array<double, 2> d2{};
  double d3 = 0.0;  // 1D only

  bool has(int order) const { return order <= max_order; }
  double laplacian() const { return dim == 1 ? d2[0] : d2[0] + d2[1]; }
};

/// Network with its parameters unpacked for repeated evaluation.
/// All members are const and allocate their own scratch, so one instance is safe to share
/// across threads.
class Mlp {
 public:
  Mlp(const NetworkArch& arch, const FlatParams& theta);

  const NetworkArch& arch() const { return arch_; }

  double forward(std::span<const double> input) const;

  /// Reverse accumulation from the scalar output. grad_params must have length p; grad_input
  /// may be empty when the input gradient is not needed.
  double backward(std::span<const double> input, std::span<double> grad_params,
                  std::span<double> grad_input) const;

  /// Pushes a truncated Taylor expansion through the network. Column k of input_coeffs holds
  /// the h^k coefficients of the input along a curve; returns the output's coefficients.
  Vector taylor(const Matrix& input_coeffs) const;

 private:
  NetworkArch arch_;
  std::vector<LayerBlock> layout_;
  std::vector<DenseLayer> layers_;
};

/// Glorot-uniform weights, zero biases. Deterministic in seed.
FlatParams init_params(const NetworkArch& arch, std::uint64_t seed);

/// Network input concat(embed(x), z) into out (length arch.input_dim).
void network_input(const EmbeddingSpec& emb, const LatentCode& z, const Point& x,
                   std::span<double> out);

double forward(const NetworkArch& arch, const FlatParams& theta, const EmbeddingSpec& emb,
               const LatentCode& z, const Point& x);

/// Row j is the gradient of U(theta, z, xs[j]) with respect to theta.
Matrix param_jacobian(const NetworkArch& arch, const FlatParams& theta, const EmbeddingSpec& emb,
                      const LatentCode& z, std::span<const Point> xs);

/// Derivatives of x -> U(theta, z, embed(x)) up to max_order (1..3; 3 only in 1D).
SpatialJet spatial_jet(const NetworkArch& arch, const FlatParams& theta, const EmbeddingSpec& emb,
                       const LatentCode& z, const Point& x, int max_order);

/// Same as spatial_jet, reusing an already unpacked network.
SpatialJet spatial_jet(const Mlp& net, const EmbeddingSpec& emb, const LatentCode& z,
                       const Point& x, int max_order);

/// Checks input_dim == emb.output_dim() + z.size() and p == theta.size(); throws ConfigError.
void check_dimensions(const NetworkArch& arch, const FlatParams& theta, const EmbeddingSpec& emb,
                      const LatentCode& z);

}  // namespace madngs
