#include "madngs/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>

#include "madngs/errors.hpp"
#include "madngs/iometrics.hpp"

namespace madngs {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_real(const std::string& key, const std::string& v) {
  try {
    return parse_double(v);
  } catch (const IoError&) {
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  }
}

std::uint64_t to_count(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError(key + ": expected true/false, got '" + v + "'");
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string join_counts(const std::vector<std::size_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

std::string join_reals(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_double(v[i]);
  return s;
}

OptimizerConfig::Kind to_optimizer(const std::string& key, const std::string& v) {
  if (v == "lbfgs") return OptimizerConfig::Kind::LBFGS;
  if (v == "adam") return OptimizerConfig::Kind::Adam;
  throw ConfigError(key + ": expected lbfgs or adam, got '" + v + "'");
}

std::string optimizer_name(OptimizerConfig::Kind k) {
  return k == OptimizerConfig::Kind::LBFGS ? "lbfgs" : "adam";
}

void set_optimizer(OptimizerConfig& opt, const std::string& prefix, const std::string& key,
                   const std::string& value, bool& handled) {
  if (key.rfind(prefix, 0) != 0) return;
  const std::string k = key.substr(prefix.size());
  handled = true;
  if (k == "optimizer") opt.kind = to_optimizer(key, value);
  else if (k == "iterations") opt.iterations = to_count(key, value);
  else if (k == "adam.lr") opt.adam.learning_rate = to_real(key, value);
  else if (k == "adam.beta1") opt.adam.beta1 = to_real(key, value);
  else if (k == "adam.beta2") opt.adam.beta2 = to_real(key, value);
  else if (k == "adam.eps") opt.adam.epsilon = to_real(key, value);
  else if (k == "lbfgs.history") opt.lbfgs.history = to_count(key, value);
  else if (k == "lbfgs.armijo_c") opt.lbfgs.armijo_c = to_real(key, value);
  else if (k == "lbfgs.shrink") opt.lbfgs.shrink = to_real(key, value);
  else if (k == "lbfgs.max_backtracks") opt.lbfgs.max_backtracks = to_count(key, value);
  else handled = false;
}

void put_optimizer(std::map<std::string, std::string>& m, const std::string& prefix,
                   const OptimizerConfig& opt) {
  m[prefix + "optimizer"] = optimizer_name(opt.kind);
  m[prefix + "iterations"] = std::to_string(opt.iterations);
  m[prefix + "adam.lr"] = format_double(opt.adam.learning_rate);
  m[prefix + "adam.beta1"] = format_double(opt.adam.beta1);
  m[prefix + "adam.beta2"] = format_double(opt.adam.beta2);
  m[prefix + "adam.eps"] = format_double(opt.adam.epsilon);
  m[prefix + "lbfgs.history"] = std::to_string(opt.lbfgs.history);
  m[prefix + "lbfgs.armijo_c"] = format_double(opt.lbfgs.armijo_c);
  m[prefix + "lbfgs.shrink"] = format_double(opt.lbfgs.shrink);
  m[prefix + "lbfgs.max_backtracks"] = std::to_string(opt.lbfgs.max_backtracks);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::string_view stream, std::uint64_t index) {
  // FNV-1a of the tag, then splitmix64 finalization of the combination.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : stream) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::uint64_t x = master ^ h ^ (index * 0x9e3779b97f4a7c15ULL);
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

RunConfig RunConfig::defaults(Benchmark b) {
  RunConfig c;
  c.benchmark = b;
  c.pretrain_opt.kind = OptimizerConfig::Kind::LBFGS;
  c.pretrain_opt.iterations = 500;
  c.finetune_opt.kind = OptimizerConfig::Kind::LBFGS;
  c.finetune_opt.iterations = 100;
  switch (b) {
    case Benchmark::KdV:
      // 1e-8 lets near-null directions of J drift over 1000 RK4 steps.
      c.lsq.truncation = 1e-6;
      break;
    case Benchmark::Burgers:
      // p = 815 with a 12-wide input.
      c.hidden = {22, 22};
      c.latent_dim = 10;
      c.stepper = Stepper::ForwardEuler;
      c.update = UpdateMode::sparse(101);
      // Fields have variance ~5e-4, so sigma = 100 would let the code penalty dominate.
      c.sigma = 1e6;
      c.pretrain_opt.iterations = 2000;
      c.finetune_opt.iterations = 300;
      break;
    case Benchmark::AC1DConst:
    case Benchmark::AC1DTx:
      c.hidden = {20, 20};
      c.latent_dim = 10;
      c.shift = 0.1;
      c.stepper = Stepper::ForwardEuler;
      c.t_final = 2.0;
      c.update = UpdateMode::sparse(300);
      c.reference_dt = 1e-3;
      c.compare_times = {0.4, 1.0, 2.0};
      break;
    case Benchmark::AC2D:
      c.hidden = {20, 20};
      c.latent_dim = 10;
      c.collocation = 33;
      c.quadrature.n_pts = 33;
      c.stepper = Stepper::ForwardEuler;
      c.t_final = 2.0;
      c.update = UpdateMode::sparse(300);
      c.reference_modes = 64;
      c.reference_dt = 1e-3;
      c.compare_times = {1.0, 2.0};
      break;
  }
  return c;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  bool handled = false;
  set_optimizer(pretrain_opt, "pretrain.", key, value, handled);
  if (handled) return;
  set_optimizer(finetune_opt, "finetune.", key, value, handled);
  if (handled) return;

  if (key == "benchmark") benchmark = parse_benchmark(value);
  else if (key == "domain.shift") {
    if (value == "random") {
      shift_random = true;
    } else {
      shift_random = false;
      shift = to_real(key, value);
    }
  } else if (key == "net.hidden") {
    hidden.clear();
    for (const auto& s : split_list(value)) hidden.push_back(to_count(key, s));
  } else if (key == "latent.dim") latent_dim = to_count(key, value);
  else if (key == "latent.sigma") sigma = to_real(key, value);
  else if (key == "ensemble.size") ensemble_size = to_count(key, value);
  else if (key == "ensemble.test_size") test_size = to_count(key, value);
  else if (key == "ensemble.collocation") collocation = to_count(key, value);
  else if (key == "ic.grf_modes") grf_modes = to_count(key, value);
  else if (key == "ic.ac2d_as_written") ac2d_as_written = to_bool(key, value);
  else if (key == "evolve.stepper") {
    if (value == "euler") stepper = Stepper::ForwardEuler;
    else if (value == "rk4") stepper = Stepper::RK4;
    else throw ConfigError(key + ": expected euler or rk4, got '" + value + "'");
  } else if (key == "evolve.dt") dt = to_real(key, value);
  else if (key == "evolve.t_final") t_final = to_real(key, value);
  else if (key == "evolve.update") {
    if (value == "full") update.kind = UpdateMode::Kind::Full;
    else if (value == "sparse") update.kind = UpdateMode::Kind::Sparse;
    else throw ConfigError(key + ": expected full or sparse, got '" + value + "'");
  } else if (key == "sparse.s") update.s = to_count(key, value);
  else if (key == "evolve.quadrature") {
    if (value == "fixed") quadrature.kind = Quadrature::Kind::FixedUniformGrid;
    else if (value == "resampled") quadrature.kind = Quadrature::Kind::ResampledUniform;
    else throw ConfigError(key + ": expected fixed or resampled, got '" + value + "'");
  } else if (key == "evolve.n_pts") quadrature.n_pts = to_count(key, value);
  else if (key == "evolve.lsq") {
    if (value == "svd") lsq.method = LsqSettings::Method::TruncatedSvd;
    else if (value == "ridge") lsq.method = LsqSettings::Method::Ridge;
    else throw ConfigError(key + ": expected svd or ridge, got '" + value + "'");
  } else if (key == "evolve.truncation") lsq.truncation = to_real(key, value);
  else if (key == "evolve.ridge") lsq.ridge = to_real(key, value);
  else if (key == "reference.n_modes") reference_modes = to_count(key, value);
  else if (key == "reference.dt") reference_dt = to_real(key, value);
  else if (key == "reference.dealias") reference_dealias = to_bool(key, value);
  else if (key == "compare.times") {
    compare_times.clear();
    for (const auto& s : split_list(value)) compare_times.push_back(to_real(key, s));
  } else if (key == "seed") seed = to_count(key, value);
  else throw ConfigError("unknown config key '" + key + "'");
}

RunConfig RunConfig::parse(const std::string& text) {
  std::vector<std::pair<std::string, std::string>> entries;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected 'key = value'");
    entries.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  Benchmark b = Benchmark::KdV;
  for (const auto& [k, v] : entries)
    if (k == "benchmark") b = parse_benchmark(v);
  RunConfig c = defaults(b);
  for (const auto& [k, v] : entries) c.set(k, v);
  return c;
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::map<std::string, std::string> RunConfig::to_map() const {
  std::map<std::string, std::string> m;
  m["benchmark"] = to_string(benchmark);
  m["domain.shift"] = shift_random ? "random" : format_double(shift);
  m["net.hidden"] = join_counts(hidden);
  m["latent.dim"] = std::to_string(latent_dim);
  m["latent.sigma"] = format_double(sigma);
  m["ensemble.size"] = std::to_string(ensemble_size);
  m["ensemble.test_size"] = std::to_string(test_size);
  m["ensemble.collocation"] = std::to_string(collocation);
  m["ic.grf_modes"] = std::to_string(grf_modes);
  m["ic.ac2d_as_written"] = ac2d_as_written ? "true" : "false";
  put_optimizer(m, "pretrain.", pretrain_opt);
  put_optimizer(m, "finetune.", finetune_opt);
  m["evolve.stepper"] = stepper == Stepper::RK4 ? "rk4" : "euler";
  m["evolve.dt"] = format_double(dt);
  m["evolve.t_final"] = format_double(t_final);
  m["evolve.update"] = update.kind == UpdateMode::Kind::Full ? "full" : "sparse";
  m["sparse.s"] = std::to_string(update.s);
  m["evolve.quadrature"] =
      quadrature.kind == Quadrature::Kind::FixedUniformGrid ? "fixed" : "resampled";
  m["evolve.n_pts"] = std::to_string(quadrature.n_pts);
  m["evolve.lsq"] = lsq.method == LsqSettings::Method::TruncatedSvd ? "svd" : "ridge";
  m["evolve.truncation"] = format_double(lsq.truncation);
  m["evolve.ridge"] = format_double(lsq.ridge);
  m["reference.n_modes"] = std::to_string(reference_modes);
  m["reference.dt"] = format_double(reference_dt);
  m["reference.dealias"] = reference_dealias ? "true" : "false";
  m["compare.times"] = join_reals(compare_times);
  m["seed"] = std::to_string(seed);
  return m;
}

std::string RunConfig::to_text() const {
  std::string s;
  for (const auto& [k, v] : to_map()) s += k + " = " + v + "\n";
  return s;
}

std::string RunConfig::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : to_text()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::size_t RunConfig::n_steps() const {
  return static_cast<std::size_t>(std::llround(t_final / dt));
}

double RunConfig::resolved_shift() const {
  if (!shift_random) return shift;
  std::mt19937_64 rng(derive_seed(seed, "domain.shift"));
  return std::uniform_real_distribution<double>(-kMaxAcShift, kMaxAcShift)(rng);
}

PdeProblem RunConfig::problem() const {
  const bool shifted = benchmark == Benchmark::AC1DConst || benchmark == Benchmark::AC1DTx;
  return PdeProblem::make(benchmark, shifted ? resolved_shift() : 0.0);
}

NetworkArch RunConfig::arch() const {
  NetworkArch a;
  a.input_dim = problem().embedding().output_dim() + latent_dim;
  a.hidden_widths = hidden;
  return a;
}

EvolutionConfig RunConfig::evolution() const {
  EvolutionConfig e;
  e.stepper = stepper;
  e.dt = dt;
  e.n_steps = n_steps();
  e.update = update;
  e.quadrature = quadrature;
  e.lsq = lsq;
  e.seed = derive_seed(seed, "evolve");
  return e;
}

void RunConfig::validate() const {
  if (!shift_random && std::abs(shift) > kMaxAcShift)
    throw ConfigError("domain.shift must lie in [-0.2, 0.2]");
  if (hidden.empty()) throw ConfigError("net.hidden needs at least one layer");
  arch().validate();
  if (latent_dim < 1) throw ConfigError("latent.dim must be >= 1");
  if (!(sigma > 0.0)) throw ConfigError("latent.sigma must be positive");
  if (collocation < 2) throw ConfigError("ensemble.collocation must be >= 2");
  if (grf_modes < 1) throw ConfigError("ic.grf_modes must be >= 1");
  pretrain_opt.validate();
  finetune_opt.validate();
  if (!(dt > 0.0)) throw ConfigError("evolve.dt must be positive");
  if (!(t_final >= 0.0)) throw ConfigError("evolve.t_final must be non-negative");
  if (std::abs(static_cast<double>(n_steps()) * dt - t_final) > 1e-9 * std::max(1.0, t_final))
    throw ConfigError("evolve.t_final must be a whole number of evolve.dt steps");
  evolution().validate(arch().param_count());
  if (reference_modes < 4 || (reference_modes & (reference_modes - 1)) != 0)
    throw ConfigError("reference.n_modes must be a power of two >= 4");
  if (!(reference_dt > 0.0)) throw ConfigError("reference.dt must be positive");
  double prev = 0.0;
  for (double t : compare_times) {
    if (t < prev) throw ConfigError("compare.times must be non-decreasing");
    if (t > t_final + 1e-12) throw ConfigError("compare.times must not exceed evolve.t_final");
    if (std::abs(std::round(t / dt) * dt - t) > 1e-9)
      throw ConfigError("compare.times must be multiples of evolve.dt");
    prev = t;
  }
}

}  // namespace madngs
