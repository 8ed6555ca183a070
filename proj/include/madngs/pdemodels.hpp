#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "madngs/neuralnet.hpp"

namespace madngs {

enum class Benchmark { KdV, Burgers, AC1DConst, AC1DTx, AC2D };

std::string to_string(Benchmark b);
/// Accepts "kdv", "burgers", "ac1d_const", "ac1d_tx", "ac2d" (case-insensitive).
Benchmark parse_benchmark(std::string_view name);

/// Periodic box [lower, upper] per axis. For the shifted Allen-Cahn domain the box is
/// [-shift, 1 + shift].
struct DomainSpec {
  std::size_t dim = 1;
  std::array<double, 2> lower{0.0, 0.0};
  std::array<double, 2> upper{1.0, 1.0};
  double shift = 0.0;

  double length(std::size_t axis) const { return upper[axis] - lower[axis]; }
  void validate() const;
};

/// Shift range accepted for the random-domain Allen-Cahn problems.
inline constexpr double kMaxAcShift = 0.2;

DomainSpec shifted_unit_domain(double shift);

double rhs_kdv(const SpatialJet& jet);
double rhs_burgers(const SpatialJet& jet);
/// 0.001 * (u_xx or Laplacian) - a * (u^3 - u).
double rhs_ac(const SpatialJet& jet, double a_value);

enum class AcVariant { Const, TimeSpace };

/// Reaction coefficient a(t, x): 2 for Const, 2 (1 + t sin(2 pi (x + d) / (1 + 2d))) otherwise.
double ac_coefficient(double t, double x, double shift, AcVariant variant);

class PdeProblem {
 public:
  /// Benchmark with its default domain, embedding and final time. The shift only applies to the
  /// 1D Allen-Cahn problems.
  static PdeProblem make(Benchmark name, double shift = 0.0);

  Benchmark name() const { return name_; }
  const DomainSpec& domain() const { return domain_; }
  const EmbeddingSpec& embedding() const { return embedding_; }
  double final_time() const { return final_time_; }
  /// Highest spatial derivative order the right-hand side reads.
  int jet_order() const { return jet_order_; }

  /// f(t, x, u, derivatives).
  double rhs(double t, const Point& x, const SpatialJet& jet) const;

 private:
  PdeProblem(Benchmark name, DomainSpec domain, EmbeddingSpec emb, double final_time, int order)
      : name_(name), domain_(domain), embedding_(std::move(emb)), final_time_(final_time),
        jet_order_(order) {}

  Benchmark name_;
  DomainSpec domain_;
  EmbeddingSpec embedding_;
  double final_time_;
  int jet_order_;
};

struct InitialConditionFamily {
  enum class Kind { KdVTrig, PeriodicGRF, AC2DTrig };

  Kind kind = Kind::KdVTrig;
  /// GRF law N(0, c^2 (-Laplacian + c^2 I)^-3) on the unit period with c = length_constant.
  double grf_length_constant = 7.0;
  std::size_t grf_modes = 64;
  /// Use sin(2 pi i x + 2 pi i y) in the 2D sum as printed; false switches to (i, j).
  bool ac2d_as_written = true;

  static InitialConditionFamily for_benchmark(Benchmark b);
};

/// A sampled initial field u0(x). Stores its generating coefficients so it can be evaluated
/// anywhere and re-sampled on any grid.
class InitialField {
 public:
  static InitialField kdv_trig(double alpha1, double alpha2);
  /// u(x) = a_0 + sum_k a_k cos(2 pi k s) + b_k sin(2 pi k s), s = (x - lower) / length.
  static InitialField fourier(std::vector<double> cos_coeffs, std::vector<double> sin_coeffs,
                              double lower, double length);
  static InitialField ac2d_trig(std::array<std::array<double, 3>, 3> alpha,
                                std::array<std::array<double, 3>, 3> beta, bool as_written);

  double operator()(const Point& x) const;
  std::vector<double> evaluate(std::span<const Point> xs) const;

  const std::vector<double>& cos_coeffs() const { return cos_; }
  const std::vector<double>& sin_coeffs() const { return sin_; }

 private:
  enum class Kind { KdVTrig, Fourier, AC2DTrig };
  Kind kind_ = Kind::KdVTrig;
  std::vector<double> cos_;
  std::vector<double> sin_;
  double lower_ = 0.0;
  double length_ = 1.0;
  bool as_written_ = true;
};

/// sigma_k^2 = c^2 / ((2 pi k)^2 + c^2)^3: total variance of the cos/sin pair at k >= 1, or of the constant mode.
double grf_mode_variance(std::size_t k, double length_constant = 7.0);

/// Draws one initial condition from the family on the given domain. Deterministic in seed.
InitialField sample_initial_condition(const InitialConditionFamily& family,
                                      const DomainSpec& domain, std::uint64_t seed);

}  // namespace madngs
