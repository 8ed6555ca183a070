#include "madngs/pdemodels.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <random>

#include "madngs/errors.hpp"

namespace madngs {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kAcDiffusion = 0.001;
}  // namespace

std::string to_string(Benchmark b) {
  switch (b) {
    case Benchmark::KdV:
      return "kdv";
    case Benchmark::Burgers:
      return "burgers";
    case Benchmark::AC1DConst:
      return "ac1d_const";
    case Benchmark::AC1DTx:
      return "ac1d_tx";
    case Benchmark::AC2D:
      return "ac2d";
  }
  return "unknown";
}

Benchmark parse_benchmark(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  for (auto b : {Benchmark::KdV, Benchmark::Burgers, Benchmark::AC1DConst, Benchmark::AC1DTx,
                 Benchmark::AC2D})
    if (to_string(b) == lower) return b;
  throw ConfigError("unknown benchmark '" + std::string(name) + "'");
}

void DomainSpec::validate() const {
  if (dim < 1 || dim > 2) throw ConfigError("domain dimension must be 1 or 2");
  for (std::size_t a = 0; a < dim; ++a)
    if (!(lower[a] < upper[a])) throw ConfigError("domain interval must satisfy a < b");
  if (std::abs(shift) > kMaxAcShift) throw ConfigError("domain shift outside [-0.2, 0.2]");
}

DomainSpec shifted_unit_domain(double shift) {
  DomainSpec d;
  d.dim = 1;
  d.lower = {-shift, 0.0};
  d.upper = {1.0 + shift, 0.0};
  d.shift = shift;
  d.validate();
  return d;
}

double rhs_kdv(const SpatialJet& jet) {
  if (!jet.has(3)) throw ContractViolation("KdV right-hand side needs a third-order jet");
  return -jet.u * jet.d1[0] - jet.d3 / 400.0;
}

double rhs_burgers(const SpatialJet& jet) {
  if (!jet.has(2)) throw ContractViolation("Burgers right-hand side needs a second-order jet");
  return -jet.u * jet.d1[0] + jet.d2[0] / (100.0 * kPi);
}

double rhs_ac(const SpatialJet& jet, double a_value) {
  if (!jet.has(2)) throw ContractViolation("Allen-Cahn right-hand side needs a second-order jet");
  return kAcDiffusion * jet.laplacian() - a_value * (jet.u * jet.u * jet.u - jet.u);
}

double ac_coefficient(double t, double x, double shift, AcVariant variant) {
  if (variant == AcVariant::Const) return 2.0;
  return 2.0 * (1.0 + t * std::sin(2.0 * kPi * (x + shift) / (1.0 + 2.0 * shift)));
}

PdeProblem PdeProblem::make(Benchmark name, double shift) {
  switch (name) {
    case Benchmark::KdV: {
      DomainSpec d;
      d.lower = {-1.0, 0.0};
      d.upper = {1.0, 0.0};
      return PdeProblem(name, d, EmbeddingSpec::periodic_1d(1.0), 1.0, 3);
    }
    case Benchmark::Burgers: {
      DomainSpec d;
      d.lower = {0.0, 0.0};
      d.upper = {1.0, 0.0};
      // Half-width 1/2 gives the unit period of the domain.
      return PdeProblem(name, d, EmbeddingSpec::periodic_1d(0.5), 1.0, 2);
    }
    case Benchmark::AC1DConst:
    case Benchmark::AC1DTx:
      return PdeProblem(name, shifted_unit_domain(shift), EmbeddingSpec::shifted_periodic_1d(shift),
                        2.0, 2);
    case Benchmark::AC2D: {
      DomainSpec d;
      d.dim = 2;
      d.lower = {0.0, 0.0};
      d.upper = {1.0, 1.0};
      return PdeProblem(name, d, EmbeddingSpec::periodic_2d(), 2.0, 2);
    }
  }
  throw ConfigError("unknown benchmark");
}

double PdeProblem::rhs(double t, const Point& x, const SpatialJet& jet) const {
  switch (name_) {
    case Benchmark::KdV:
      return rhs_kdv(jet);
    case Benchmark::Burgers:
      return rhs_burgers(jet);
    case Benchmark::AC1DConst:
      return rhs_ac(jet, 2.0);
    case Benchmark::AC1DTx:
      return rhs_ac(jet, ac_coefficient(t, x[0], domain_.shift, AcVariant::TimeSpace));
    case Benchmark::AC2D:
      return rhs_ac(jet, 2.0);
  }
  return 0.0;
}

// ---------------------------------------------------------------------------
// Initial conditions

InitialConditionFamily InitialConditionFamily::for_benchmark(Benchmark b) {
  InitialConditionFamily f;
  switch (b) {
    case Benchmark::KdV:
      f.kind = Kind::KdVTrig;
      break;
    case Benchmark::Burgers:
    case Benchmark::AC1DConst:
    case Benchmark::AC1DTx:
      f.kind = Kind::PeriodicGRF;
      break;
    case Benchmark::AC2D:
      f.kind = Kind::AC2DTrig;
      break;
  }
  return f;
}

InitialField InitialField::kdv_trig(double alpha1, double alpha2) {
  InitialField f;
  f.kind_ = Kind::KdVTrig;
  f.sin_ = {alpha1};
  f.cos_ = {alpha2};
  return f;
}

InitialField InitialField::fourier(std::vector<double> cos_coeffs, std::vector<double> sin_coeffs,
                                   double lower, double length) {
  if (cos_coeffs.size() != sin_coeffs.size())
    throw ContractViolation("Fourier cos/sin coefficient lists differ in length");
  InitialField f;
  f.kind_ = Kind::Fourier;
  f.cos_ = std::move(cos_coeffs);
  f.sin_ = std::move(sin_coeffs);
  f.lower_ = lower;
  f.length_ = length;
  return f;
}

InitialField InitialField::ac2d_trig(std::array<std::array<double, 3>, 3> alpha,
                                     std::array<std::array<double, 3>, 3> beta, bool as_written) {
  InitialField f;
  f.kind_ = Kind::AC2DTrig;
  for (const auto& row : alpha) f.sin_.insert(f.sin_.end(), row.begin(), row.end());
  for (const auto& row : beta) f.cos_.insert(f.cos_.end(), row.begin(), row.end());
  f.as_written_ = as_written;
  return f;
}

double InitialField::operator()(const Point& x) const {
  switch (kind_) {
    case Kind::KdVTrig:
      return sin_[0] * std::sin(kPi * x[0]) + cos_[0] * std::cos(kPi * x[0]);
    case Kind::Fourier: {
      const double s = (x[0] - lower_) / length_;
      double u = cos_[0];
      for (std::size_t k = 1; k < cos_.size(); ++k) {
        const double arg = 2.0 * kPi * static_cast<double>(k) * s;
        u += cos_[k] * std::cos(arg) + sin_[k] * std::sin(arg);
      }
      return u;
    }
    case Kind::AC2DTrig: {
      double u = 0.0;
      for (int i = -1; i <= 1; ++i) {
        for (int j = -1; j <= 1; ++j) {
          const std::size_t idx = static_cast<std::size_t>((i + 1) * 3 + (j + 1));
          const int sin_j = as_written_ ? i : j;
          u += sin_[idx] * std::sin(2.0 * kPi * (i * x[0] + sin_j * x[1])) +
               cos_[idx] * std::cos(2.0 * kPi * (i * x[0] + j * x[1]));
        }
      }
      return 0.001 * u;
    }
  }
  return 0.0;
}

std::vector<double> InitialField::evaluate(std::span<const Point> xs) const {
  std::vector<double> out;
  out.reserve(xs.size());
  for (const auto& x : xs) out.push_back((*this)(x));
  return out;
}

double grf_mode_variance(std::size_t k, double length_constant) {
  const double c2 = length_constant * length_constant;
  const double lambda = std::pow(2.0 * kPi * static_cast<double>(k), 2);
  return c2 / std::pow(lambda + c2, 3);
}

InitialField sample_initial_condition(const InitialConditionFamily& family,
                                      const DomainSpec& domain, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  switch (family.kind) {
    case InitialConditionFamily::Kind::KdVTrig: {
      std::uniform_real_distribution<double> u(-0.5, 0.5);
      const double a1 = u(rng);
      const double a2 = u(rng);
      return InitialField::kdv_trig(a1, a2);
    }
    case InitialConditionFamily::Kind::PeriodicGRF: {
      const std::size_t modes = family.grf_modes;
      std::vector<double> a(modes + 1, 0.0), b(modes + 1, 0.0);
      std::normal_distribution<double> n01(0.0, 1.0);
      a[0] = std::sqrt(grf_mode_variance(0, family.grf_length_constant)) * n01(rng);
      for (std::size_t k = 1; k <= modes; ++k) {
        // The cos/sin pair shares the mode variance.
        const double sd = std::sqrt(0.5 * grf_mode_variance(k, family.grf_length_constant));
        a[k] = sd * n01(rng);
        b[k] = sd * n01(rng);
      }
      return InitialField::fourier(std::move(a), std::move(b), domain.lower[0], domain.length(0));
    }
    case InitialConditionFamily::Kind::AC2DTrig: {
      std::uniform_real_distribution<double> u(0.0, 1.0);
      std::array<std::array<double, 3>, 3> alpha{}, beta{};
      for (auto& row : alpha)
        for (auto& v : row) v = u(rng);
      for (auto& row : beta)
        for (auto& v : row) v = u(rng);
      return InitialField::ac2d_trig(alpha, beta, family.ac2d_as_written);
    }
  }
  throw ConfigError("unknown initial-condition family");
}

}  // namespace madngs
