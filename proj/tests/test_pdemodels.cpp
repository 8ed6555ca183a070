#include <doctest.h>

#include <cmath>
#include <numbers>

#include "madngs/errors.hpp"
#include "madngs/madtrain.hpp"
#include "madngs/pdemodels.hpp"

using namespace madngs;

namespace {

SpatialJet jet1(double u, double d1, double d2, double d3) {
  SpatialJet j;
  j.max_order = 3;
  j.u = u;
  j.d1[0] = d1;
  j.d2[0] = d2;
  j.d3 = d3;
  return j;
}

}  // namespace

TEST_CASE("kdv rhs") {
  CHECK(rhs_kdv(jet1(3.0, 0.0, 5.0, 0.0)) == 0.0);
  CHECK(rhs_kdv(jet1(2.0, 3.0, 0.0, 400.0)) == -7.0);
  SpatialJet low = jet1(1.0, 1.0, 1.0, 0.0);
  low.max_order = 2;
  CHECK_THROWS_AS(rhs_kdv(low), ContractViolation);
}

TEST_CASE("burgers rhs") {
  CHECK(rhs_burgers(jet1(4.0, 0.0, 0.0, 0.0)) == 0.0);
  CHECK(std::abs(rhs_burgers(jet1(1.0, 1.0, 100.0 * std::numbers::pi, 0.0))) < 1e-15);
  const double a = rhs_burgers(jet1(0.7, -1.3, 2.0, 0.0));
  const double b = rhs_burgers(jet1(-0.7, 1.3, 2.0, 0.0));
  CHECK(a == b);
  const double c = rhs_burgers(jet1(0.7, -1.3, -2.0, 0.0));
  CHECK(std::abs((a - c) - 2.0 * 2.0 / (100.0 * std::numbers::pi)) < 1e-15);
  SpatialJet low = jet1(1.0, 1.0, 0.0, 0.0);
  low.max_order = 1;
  CHECK_THROWS_AS(rhs_burgers(low), ContractViolation);
}

TEST_CASE("allen-cahn rhs") {
  for (double u : {-1.0, 0.0, 1.0}) CHECK(rhs_ac(jet1(u, 0.0, 0.0, 0.0), 2.0) == 0.0);
  CHECK(rhs_ac(jet1(2.0, 0.0, 0.0, 0.0), 2.0) == -12.0);
  CHECK(rhs_ac(jet1(0.8, 0.0, 3.0, 0.0), 0.0) == doctest::Approx(0.003).epsilon(1e-14));

  SpatialJet j2;
  j2.dim = 2;
  j2.max_order = 2;
  j2.u = 0.0;
  j2.d2 = {1.0, 2.0};
  CHECK(rhs_ac(j2, 2.0) == doctest::Approx(0.003).epsilon(1e-14));
}

TEST_CASE("allen-cahn coefficient") {
  for (double x : {0.0, 0.3, 0.9}) {
    CHECK(ac_coefficient(0.0, x, 0.1, AcVariant::Const) == 2.0);
    CHECK(ac_coefficient(0.0, x, 0.1, AcVariant::TimeSpace) == 2.0);
  }
  CHECK(ac_coefficient(1.0, 0.25, 0.0, AcVariant::TimeSpace) == doctest::Approx(4.0).epsilon(1e-15));
  CHECK(ac_coefficient(1.0, 0.5, 0.0, AcVariant::TimeSpace) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(ac_coefficient(0.7, 0.5, 0.0, AcVariant::Const) == 2.0);
}

TEST_CASE("problem registry") {
  const auto k = PdeProblem::make(Benchmark::KdV);
  CHECK(k.jet_order() == 3);
  CHECK(k.domain().lower[0] == -1.0);
  CHECK(k.embedding().period() == 2.0);
  const auto b = PdeProblem::make(Benchmark::Burgers);
  CHECK(b.embedding().period() == doctest::Approx(b.domain().length(0)));
  const auto ac = PdeProblem::make(Benchmark::AC1DTx, 0.1);
  CHECK(ac.domain().lower[0] == doctest::Approx(-0.1));
  CHECK(ac.domain().upper[0] == doctest::Approx(1.1));
  CHECK(ac.final_time() == 2.0);
  CHECK_THROWS_AS(PdeProblem::make(Benchmark::AC1DConst, 0.3), ConfigError);
  CHECK(PdeProblem::make(Benchmark::AC2D).domain().dim == 2);
  CHECK(parse_benchmark("KdV") == Benchmark::KdV);
  CHECK(parse_benchmark("ac1d_tx") == Benchmark::AC1DTx);
  CHECK_THROWS_AS(parse_benchmark("navier"), ConfigError);
  for (auto bm : {Benchmark::KdV, Benchmark::Burgers, Benchmark::AC1DConst, Benchmark::AC1DTx, Benchmark::AC2D})
    CHECK(parse_benchmark(to_string(bm)) == bm);
}

TEST_CASE("problem rhs dispatch") {
  const auto p = PdeProblem::make(Benchmark::AC1DTx, 0.0);
  const auto j = jet1(2.0, 0.0, 0.0, 0.0);
  CHECK(p.rhs(1.0, {0.25, 0.0}, j) == doctest::Approx(-4.0 * 6.0).epsilon(1e-14));
  CHECK(PdeProblem::make(Benchmark::KdV).rhs(0.3, {0.1, 0.0}, jet1(2.0, 3.0, 0.0, 400.0)) == -7.0);
}

TEST_CASE("kdv initial condition") {
  const auto f = InitialField::kdv_trig(0.5, 0.0);
  CHECK(f({0.5, 0.0}) == doctest::Approx(0.5).epsilon(1e-15));
  auto fam = InitialConditionFamily::for_benchmark(Benchmark::KdV);
  const auto dom = PdeProblem::make(Benchmark::KdV).domain();
  const auto grid = collocation_grid(dom, 101);
  for (std::uint64_t s = 0; s < 200; ++s) {
    const auto u = sample_initial_condition(fam, dom, s).evaluate(grid);
    double m = 0.0;
    for (double v : u) m = std::max(m, std::abs(v));
    CHECK(m <= 1.0);
  }
}

TEST_CASE("sampled fields are periodic on their domain") {
  for (auto bm : {Benchmark::KdV, Benchmark::Burgers, Benchmark::AC1DConst}) {
    const auto dom = PdeProblem::make(bm, 0.15).domain();
    const auto fam = InitialConditionFamily::for_benchmark(bm);
    for (std::uint64_t s = 0; s < 10; ++s) {
      const auto f = sample_initial_condition(fam, dom, s);
      CHECK(std::abs(f({dom.lower[0], 0.0}) - f({dom.upper[0], 0.0})) <= 1e-12);
    }
  }
  const auto dom2 = PdeProblem::make(Benchmark::AC2D).domain();
  const auto fam2 = InitialConditionFamily::for_benchmark(Benchmark::AC2D);
  const auto f2 = sample_initial_condition(fam2, dom2, 3);
  CHECK(std::abs(f2({0.0, 0.3}) - f2({1.0, 0.3})) <= 1e-12);
  CHECK(std::abs(f2({0.4, 0.0}) - f2({0.4, 1.0})) <= 1e-12);
}

TEST_CASE("sampling is deterministic") {
  const auto dom = PdeProblem::make(Benchmark::Burgers).domain();
  const auto fam = InitialConditionFamily::for_benchmark(Benchmark::Burgers);
  const auto a = sample_initial_condition(fam, dom, 42);
  const auto b = sample_initial_condition(fam, dom, 42);
  CHECK(a.cos_coeffs() == b.cos_coeffs());
  CHECK(a.sin_coeffs() == b.sin_coeffs());
}

TEST_CASE("grf constant mode variance") {
  CHECK(grf_mode_variance(0) == doctest::Approx(1.0 / 2401.0).epsilon(1e-14));
  const auto dom = PdeProblem::make(Benchmark::Burgers).domain();
  const auto fam = InitialConditionFamily::for_benchmark(Benchmark::Burgers);
  // Mean over a period picks out the constant mode.
  const std::size_t m = 256, draws = 10000;
  double acc = 0.0;
  for (std::uint64_t s = 0; s < draws; ++s) {
    const auto f = sample_initial_condition(fam, dom, 1000 + s);
    double mean = 0.0;
    for (std::size_t j = 0; j < m; ++j) mean += f({static_cast<double>(j) / m, 0.0});
    mean /= m;
    acc += mean * mean;
  }
  CHECK(std::abs(acc / draws - 1.0 / 2401.0) <= 0.1 / 2401.0);
}
