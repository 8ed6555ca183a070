#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "madngs/neuralnet.hpp"
#include "madngs/pdemodels.hpp"

namespace madngs {

/// Uniform periodic grid with n points per axis; the duplicated right endpoint is excluded.
struct SpectralGrid {
  DomainSpec domain;
  std::size_t n = 256;

  /// Throws ConfigError unless n is an even power of two >= 4.
  void validate() const;
  std::size_t size() const { return domain.dim == 1 ? n : n * n; }
  /// Grid points, x-major in 2D (index i * n + j for (x_i, y_j)).
  std::vector<Point> points() const;
  /// Angular wavenumber of FFT index m along an axis, folded to the symmetric range.
  double wavenumber(std::size_t axis, std::size_t m) const;
};

/// Field values on a fixed grid at a list of times.
struct GridSolution {
  DomainSpec domain;
  std::vector<Point> points;
  std::vector<double> times;
  /// fields[t] has points.size() entries.
  std::vector<std::vector<double>> fields;

  bool operator==(const GridSolution&) const = default;
};

/// d^order u / dx_axis^order via FFT. The Nyquist mode is dropped for odd orders.
std::vector<double> spectral_derivative(const SpectralGrid& grid, std::span<const double> u,
                                        int order, std::size_t axis = 0);

struct ReferenceOptions {
  double dt = 1e-4;
  /// 2/3-rule truncation of the nonlinear terms.
  bool dealias = true;
  /// Test hook: drop u u_x from Burgers, leaving the heat equation.
  bool disable_advection = false;
  /// Abort when max |u| exceeds this.
  double growth_limit = 1e6;
};

/// Default reference time step: 1e-4 for KdV and Burgers, 1e-3 for Allen-Cahn.
double default_reference_dt(Benchmark b);

/// Fourier pseudospectral solution from u0 (sampled on grid.points()) recorded at record_times.
/// KdV uses integrating-factor RK4 for the dispersive term; the other problems use classical RK4.
/// record_times are rounded to the nearest step and must be non-decreasing.
GridSolution solve_reference(const PdeProblem& problem, std::span<const double> u0,
                             const SpectralGrid& grid, std::span<const double> record_times,
                             const ReferenceOptions& options = {});

/// (1/N_test)(1/N) sum over samples and points of squared differences at time index t_index.
double mse(std::span<const GridSolution> pred, std::span<const GridSolution> ref,
           std::size_t t_index);
double mse(const GridSolution& pred, const GridSolution& ref, std::size_t t_index);

}  // namespace madngs
