#include "madngs/spectralref.hpp"

#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <string>

#include <fftw3.h>

#include "madngs/errors.hpp"

namespace madngs {

namespace {

using Complex = std::complex<double>;
using Spectrum = std::vector<Complex>;

// Real-to-complex transform pair on a 1D line or a square 2D box. The inverse is normalized.
class RealFft {
 public:
  RealFft(std::size_t dim, std::size_t n)
      : real_size_(dim == 1 ? n : n * n), complex_size_(dim == 1 ? n / 2 + 1 : n * (n / 2 + 1)) {
    real_ = fftw_alloc_real(real_size_);
    spec_ = fftw_alloc_complex(complex_size_);
    const int ni = static_cast<int>(n);
    if (dim == 1) {
      fwd_ = fftw_plan_dft_r2c_1d(ni, real_, spec_, FFTW_ESTIMATE);
      inv_ = fftw_plan_dft_c2r_1d(ni, spec_, real_, FFTW_ESTIMATE);
    } else {
      fwd_ = fftw_plan_dft_r2c_2d(ni, ni, real_, spec_, FFTW_ESTIMATE);
      inv_ = fftw_plan_dft_c2r_2d(ni, ni, spec_, real_, FFTW_ESTIMATE);
    }
  }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;
  ~RealFft() {
    fftw_destroy_plan(fwd_);
    fftw_destroy_plan(inv_);
    fftw_free(real_);
    fftw_free(spec_);
  }

  std::size_t complex_size() const { return complex_size_; }

  void forward(std::span<const double> in, Spectrum& out) {
    std::copy(in.begin(), in.end(), real_);
    fftw_execute(fwd_);
    out.resize(complex_size_);
    for (std::size_t i = 0; i < complex_size_; ++i) out[i] = {spec_[i][0], spec_[i][1]};
  }

  void inverse(const Spectrum& in, std::vector<double>& out) {
    for (std::size_t i = 0; i < complex_size_; ++i) {
      spec_[i][0] = in[i].real();
      spec_[i][1] = in[i].imag();
    }
    fftw_execute(inv_);
    out.resize(real_size_);
    const double scale = 1.0 / static_cast<double>(real_size_);
    for (std::size_t i = 0; i < real_size_; ++i) out[i] = real_[i] * scale;
  }

 private:
  std::size_t real_size_;
  std::size_t complex_size_;
  double* real_ = nullptr;
  fftw_complex* spec_ = nullptr;
  fftw_plan fwd_ = nullptr;
  fftw_plan inv_ = nullptr;
};

// Per-mode symbols for the half spectrum of a grid.
struct ModeTable {
  std::vector<double> kx, ky;
  std::vector<bool> nyquist_x, nyquist_y;
  std::vector<bool> keep;  // 2/3-rule mask

  explicit ModeTable(const SpectralGrid& g) {
    const std::size_t n = g.n;
    const std::size_t half = n / 2 + 1;
    auto folded = [n](std::size_t m) {
      return m <= n / 2 ? static_cast<long>(m) : static_cast<long>(m) - static_cast<long>(n);
    };
    auto retained = [n](long m) { return 3 * std::abs(m) < static_cast<long>(n); };
    if (g.domain.dim == 1) {
      for (std::size_t m = 0; m < half; ++m) {
        kx.push_back(g.wavenumber(0, m));
        ky.push_back(0.0);
        nyquist_x.push_back(m == n / 2);
        nyquist_y.push_back(false);
        keep.push_back(retained(static_cast<long>(m)));
      }
    } else {
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < half; ++j) {
          kx.push_back(g.wavenumber(0, i));
          ky.push_back(g.wavenumber(1, j));
          nyquist_x.push_back(i == n / 2);
          nyquist_y.push_back(j == n / 2);
          keep.push_back(retained(folded(i)) && retained(static_cast<long>(j)));
        }
      }
    }
  }

  std::size_t size() const { return kx.size(); }

  // (i k_axis)^order, zero at the Nyquist mode for odd orders.
  Complex derivative_symbol(std::size_t idx, std::size_t axis, int order) const {
    const double k = axis == 0 ? kx[idx] : ky[idx];
    const bool nyq = axis == 0 ? nyquist_x[idx] : nyquist_y[idx];
    if (order % 2 == 1 && nyq) return 0.0;
    return std::pow(Complex(0.0, k), order);
  }

  double k_squared(std::size_t idx) const { return kx[idx] * kx[idx] + ky[idx] * ky[idx]; }
};

}  // namespace

void SpectralGrid::validate() const {
  domain.validate();
  if (n < 4 || (n & (n - 1)) != 0) throw ConfigError("spectral grid size must be a power of two >= 4");
}

std::vector<Point> SpectralGrid::points() const {
  std::vector<Point> pts;
  auto coord = [&](std::size_t axis, std::size_t i) {
    return domain.lower[axis] + domain.length(axis) * static_cast<double>(i) / static_cast<double>(n);
  };
  if (domain.dim == 1) {
    for (std::size_t i = 0; i < n; ++i) pts.push_back({coord(0, i), 0.0});
  } else {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) pts.push_back({coord(0, i), coord(1, j)});
  }
  return pts;
}

double SpectralGrid::wavenumber(std::size_t axis, std::size_t m) const {
  const double folded =
      m <= n / 2 ? static_cast<double>(m) : static_cast<double>(m) - static_cast<double>(n);
  return 2.0 * std::numbers::pi * folded / domain.length(axis);
}

std::vector<double> spectral_derivative(const SpectralGrid& grid, std::span<const double> u,
                                        int order, std::size_t axis) {
  grid.validate();
  if (u.size() != grid.size()) throw ContractViolation("field is not on the spectral grid");
  if (axis >= grid.domain.dim) throw ContractViolation("derivative axis out of range");
  RealFft fft(grid.domain.dim, grid.n);
  const ModeTable modes(grid);
  Spectrum s;
  fft.forward(u, s);
  for (std::size_t i = 0; i < s.size(); ++i) s[i] *= modes.derivative_symbol(i, axis, order);
  std::vector<double> out;
  fft.inverse(s, out);
  return out;
}

double default_reference_dt(Benchmark b) {
  switch (b) {
    case Benchmark::KdV:
    case Benchmark::Burgers:
      return 1e-4;
    default:
      return 1e-3;
  }
}

GridSolution solve_reference(const PdeProblem& problem, std::span<const double> u0,
                             const SpectralGrid& grid, std::span<const double> record_times,
                             const ReferenceOptions& options) {
  grid.validate();
  if (grid.domain.dim != problem.domain().dim)
    throw ContractViolation("grid and problem dimensions differ");
  if (u0.size() != grid.size()) throw ContractViolation("initial field is not on the grid");
  if (!(options.dt > 0.0)) throw ConfigError("reference dt must be positive");

  const double dt = options.dt;
  const std::size_t dim = grid.domain.dim;
  const auto pts = grid.points();
  RealFft fft(dim, grid.n);
  const ModeTable modes(grid);
  const std::size_t nm = modes.size();

  // Stiff linear part handled exactly by the integrating factor; zero except for KdV.
  Spectrum lin(nm, 0.0);
  if (problem.name() == Benchmark::KdV)
    for (std::size_t i = 0; i < nm; ++i) lin[i] = -modes.derivative_symbol(i, 0, 3) / 400.0;
  Spectrum e_half(nm), e_full(nm);
  for (std::size_t i = 0; i < nm; ++i) {
    e_half[i] = std::exp(lin[i] * (0.5 * dt));
    e_full[i] = e_half[i] * e_half[i];
  }

  const double nu_burgers = 1.0 / (100.0 * std::numbers::pi);
  const double nu_ac = 0.001;
  std::vector<double> u, w;
  Spectrum wk;
  double max_abs = 0.0;

  auto dealias = [&](Spectrum& s) {
    if (!options.dealias) return;
    for (std::size_t i = 0; i < nm; ++i)
      if (!modes.keep[i]) s[i] = 0.0;
  };

  // Explicit part N(v, t) of v_t = L v + N(v, t).
  auto nonlinear = [&](const Spectrum& v, double t, Spectrum& out) {
    fft.inverse(v, u);
    max_abs = 0.0;
    for (double x : u) max_abs = std::max(max_abs, std::isfinite(x) ? std::abs(x) : HUGE_VAL);
    out.assign(nm, 0.0);
    switch (problem.name()) {
      case Benchmark::KdV:
      case Benchmark::Burgers: {
        const bool advect = !(problem.name() == Benchmark::Burgers && options.disable_advection);
        if (advect) {
          w.resize(u.size());
          for (std::size_t i = 0; i < u.size(); ++i) w[i] = 0.5 * u[i] * u[i];
          fft.forward(w, wk);
          dealias(wk);
          for (std::size_t i = 0; i < nm; ++i) out[i] = -modes.derivative_symbol(i, 0, 1) * wk[i];
        }
        if (problem.name() == Benchmark::Burgers)
          for (std::size_t i = 0; i < nm; ++i) out[i] -= nu_burgers * modes.k_squared(i) * v[i];
        break;
      }
      case Benchmark::AC1DConst:
      case Benchmark::AC1DTx:
      case Benchmark::AC2D: {
        w.resize(u.size());
        for (std::size_t i = 0; i < u.size(); ++i) {
          const double a = problem.name() == Benchmark::AC1DTx
                               ? ac_coefficient(t, pts[i][0], problem.domain().shift,
                                                AcVariant::TimeSpace)
                               : 2.0;
          w[i] = a * (u[i] * u[i] * u[i] - u[i]);
        }
        fft.forward(w, wk);
        dealias(wk);
        for (std::size_t i = 0; i < nm; ++i) out[i] = -nu_ac * modes.k_squared(i) * v[i] - wk[i];
        break;
      }
    }
  };

  GridSolution sol;
  sol.domain = grid.domain;
  sol.points = pts;

  Spectrum v;
  fft.forward(u0, v);
  std::size_t step = 0;
  double t = 0.0;
  Spectrum ka, kb, kc, kd, tmp(nm);
  for (double tr : record_times) {
    const auto target = static_cast<std::size_t>(std::llround(tr / dt));
    if (target < step) throw ContractViolation("record times must be non-decreasing");
    for (; step < target; ++step) {
      t = static_cast<double>(step) * dt;
      nonlinear(v, t, ka);
      if (!(max_abs <= options.growth_limit))
        throw InstabilityError("reference solution exceeded growth limit at t=" +
                               std::to_string(t));
      for (std::size_t i = 0; i < nm; ++i) tmp[i] = e_half[i] * (v[i] + 0.5 * dt * ka[i]);
      nonlinear(tmp, t + 0.5 * dt, kb);
      for (std::size_t i = 0; i < nm; ++i) tmp[i] = e_half[i] * v[i] + 0.5 * dt * kb[i];
      nonlinear(tmp, t + 0.5 * dt, kc);
      for (std::size_t i = 0; i < nm; ++i) tmp[i] = e_full[i] * v[i] + dt * e_half[i] * kc[i];
      nonlinear(tmp, t + dt, kd);
      for (std::size_t i = 0; i < nm; ++i)
        v[i] = e_full[i] * v[i] +
               dt / 6.0 * (e_full[i] * ka[i] + 2.0 * e_half[i] * (kb[i] + kc[i]) + kd[i]);
    }
    std::vector<double> field;
    fft.inverse(v, field);
    for (double x : field)
      if (!std::isfinite(x) || std::abs(x) > options.growth_limit)
        throw InstabilityError("reference solution exceeded growth limit");
    sol.times.push_back(static_cast<double>(step) * dt);
    sol.fields.push_back(std::move(field));
  }
  return sol;
}

double mse(std::span<const GridSolution> pred, std::span<const GridSolution> ref,
           std::size_t t_index) {
  if (pred.size() != ref.size() || pred.empty())
    throw ContractViolation("mse: prediction and reference sets differ in size or are empty");
  double total = 0.0;
  for (std::size_t s = 0; s < pred.size(); ++s) {
    if (t_index >= pred[s].fields.size() || t_index >= ref[s].fields.size())
      throw ContractViolation("mse: time index out of range");
    const auto& a = pred[s].fields[t_index];
    const auto& b = ref[s].fields[t_index];
    if (a.size() != b.size() || a.empty()) throw ContractViolation("mse: grid shapes differ");
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) sum += (a[i] - b[i]) * (a[i] - b[i]);
    total += sum / static_cast<double>(a.size());
  }
  return total / static_cast<double>(pred.size());
}

double mse(const GridSolution& pred, const GridSolution& ref, std::size_t t_index) {
  return mse(std::span<const GridSolution>(&pred, 1), std::span<const GridSolution>(&ref, 1),
             t_index);
}

}  // namespace madngs
