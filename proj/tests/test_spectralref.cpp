#include <doctest.h>

#include <cmath>
#include <numbers>

#include "madngs/errors.hpp"
#include "madngs/spectralref.hpp"

using namespace madngs;

namespace {

constexpr double kPi = std::numbers::pi;

SpectralGrid grid_for(Benchmark b, std::size_t n, double shift = 0.0) {
  SpectralGrid g;
  g.domain = PdeProblem::make(b, shift).domain();
  g.n = n;
  return g;
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST_CASE("grid points and validation") {
  const auto g = grid_for(Benchmark::KdV, 8);
  const auto pts = g.points();
  REQUIRE(pts.size() == 8);
  CHECK(pts[0][0] == -1.0);
  CHECK(pts[7][0] == doctest::Approx(0.75));
  const auto g2 = grid_for(Benchmark::AC2D, 4);
  const auto p2 = g2.points();
  REQUIRE(p2.size() == 16);
  CHECK(p2[1][0] == 0.0);
  CHECK(p2[1][1] == 0.25);
  CHECK(p2[4][0] == 0.25);
  auto bad = g;
  bad.n = 12;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("spectral derivative of a sine") {
  const auto g = grid_for(Benchmark::Burgers, 64);
  const auto pts = g.points();
  for (int k = 1; k < 16; ++k) {
    std::vector<double> u, du;
    for (const auto& p : pts) {
      u.push_back(std::sin(2 * kPi * k * p[0]));
      du.push_back(2 * kPi * k * std::cos(2 * kPi * k * p[0]));
    }
    CHECK(max_abs_diff(spectral_derivative(g, u, 1), du) <= 1e-10);
  }
  // Shifted domain: the period is the domain length.
  const auto gs = grid_for(Benchmark::AC1DConst, 64, 0.1);
  std::vector<double> u, d2;
  for (const auto& p : gs.points()) {
    const double w = 2 * kPi * 3 / 1.2;
    u.push_back(std::cos(w * p[0]));
    d2.push_back(-w * w * std::cos(w * p[0]));
  }
  CHECK(max_abs_diff(spectral_derivative(gs, u, 2), d2) <= 1e-9);
}

TEST_CASE("heat mode decays at the analytic rate") {
  const auto problem = PdeProblem::make(Benchmark::Burgers);
  const auto g = grid_for(Benchmark::Burgers, 64);
  std::vector<double> u0;
  for (const auto& p : g.points()) u0.push_back(std::sin(2 * kPi * p[0]));
  ReferenceOptions opt;
  opt.disable_advection = true;
  std::vector<double> times{0.1};
  const auto sol = solve_reference(problem, u0, g, times, opt);
  const double nu = 1.0 / (100.0 * kPi);
  const double factor = std::exp(-nu * 4 * kPi * kPi * 0.1);
  std::vector<double> expect;
  for (double v : u0) expect.push_back(v * factor);
  CHECK(max_abs_diff(sol.fields[0], expect) <= 1e-6);
}

TEST_CASE("allen-cahn equilibria are preserved") {
  for (auto b : {Benchmark::AC1DConst, Benchmark::AC1DTx, Benchmark::AC2D}) {
    const auto problem = PdeProblem::make(b, 0.0);
    const auto g = grid_for(b, b == Benchmark::AC2D ? 16 : 32);
    for (double level : {-1.0, 0.0, 1.0}) {
      std::vector<double> u0(g.size(), level);
      ReferenceOptions opt;
      opt.dt = 1e-3;
      std::vector<double> times{1.0};
      const auto sol = solve_reference(problem, u0, g, times, opt);
      CHECK(max_abs_diff(sol.fields[0], u0) <= 1e-10);
    }
  }
}

TEST_CASE("burgers conserves the mean") {
  const auto problem = PdeProblem::make(Benchmark::Burgers);
  const auto g = grid_for(Benchmark::Burgers, 128);
  std::vector<double> u0;
  for (const auto& p : g.points()) u0.push_back(0.3 + 0.5 * std::sin(2 * kPi * p[0]) + 0.2 * std::cos(4 * kPi * p[0]));
  std::vector<double> times{0.25, 0.5, 1.0};
  const auto sol = solve_reference(problem, u0, g, times);
  auto mean = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  for (const auto& f : sol.fields) CHECK(std::abs(mean(f) - mean(u0)) <= 1e-8);
}

TEST_CASE("recording and contracts") {
  const auto problem = PdeProblem::make(Benchmark::Burgers);
  const auto g = grid_for(Benchmark::Burgers, 16);
  std::vector<double> u0(16, 0.0);
  std::vector<double> times{0.0, 0.01};
  const auto sol = solve_reference(problem, u0, g, times);
  CHECK(sol.times == times);
  CHECK(sol.fields.size() == 2);
  std::vector<double> bad_times{0.02, 0.01};
  CHECK_THROWS_AS(solve_reference(problem, u0, g, bad_times), ContractViolation);
  std::vector<double> short_u(5, 0.0);
  CHECK_THROWS_AS(solve_reference(problem, short_u, g, times), ContractViolation);

  std::vector<double> big(16);
  for (std::size_t i = 0; i < 16; ++i) big[i] = 50.0 * std::sin(2 * kPi * i / 16.0);
  ReferenceOptions opt;
  opt.dt = 0.05;
  std::vector<double> late{1.0};
  CHECK_THROWS_AS(solve_reference(problem, big, g, late, opt), InstabilityError);
}

TEST_CASE("mse arithmetic") {
  GridSolution a, b;
  a.points = {{0.0, 0.0}, {0.5, 0.0}};
  a.times = {0.0};
  a.fields = {{1.0, 2.0}};
  b = a;
  CHECK(mse(a, b, 0) == 0.0);
  b.fields = {{0.0, -1.0}};
  CHECK(mse(a, b, 0) == 5.0);
  std::vector<GridSolution> pa{a, a}, pb{b, b};
  CHECK(mse(pa, pb, 0) == 5.0);
  GridSolution c = a;
  c.fields = {{1.0}};
  CHECK_THROWS_AS(mse(a, c, 0), ContractViolation);
  CHECK_THROWS_AS(mse(a, b, 1), ContractViolation);
}
