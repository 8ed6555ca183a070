#include "madngs/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "madngs/errors.hpp"

namespace madngs {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

InitialConditionFamily family_for(const RunConfig& cfg) {
  auto f = InitialConditionFamily::for_benchmark(cfg.benchmark);
  f.grf_modes = cfg.grf_modes;
  f.ac2d_as_written = cfg.ac2d_as_written;
  return f;
}

std::vector<double> with_initial_time(const std::vector<double>& times) {
  std::vector<double> out{0.0};
  for (double t : times)
    if (t > 0.0) out.push_back(t);
  return out;
}

std::string mode_label(const RunConfig& cfg) {
  return cfg.update.kind == UpdateMode::Kind::Full ? "full"
                                                   : "sparse_s=" + std::to_string(cfg.update.s);
}

nlohmann::json read_json(const fs::path& path, const std::string& produced_by) {
  if (!fs::exists(path))
    throw MissingArtifact("missing " + path.string() + " (run '" + produced_by + "' first)");
  try {
    return nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw CorruptHeader(path.string() + ": " + e.what());
  }
}

}  // namespace

SampledIcs sample_ics(const RunConfig& cfg) {
  const auto family = family_for(cfg);
  const auto domain = cfg.problem().domain();
  SampledIcs ics;
  for (std::size_t i = 0; i < cfg.ensemble_size; ++i) {
    ics.train_seeds.push_back(derive_seed(cfg.seed, "ic.train", i));
    ics.train.push_back(sample_initial_condition(family, domain, ics.train_seeds.back()));
  }
  for (std::size_t i = 0; i < cfg.test_size; ++i) {
    ics.test_seeds.push_back(derive_seed(cfg.seed, "ic.test", i));
    ics.test.push_back(sample_initial_condition(family, domain, ics.test_seeds.back()));
  }
  return ics;
}

GridSolution predict_on_grid(const NetworkArch& arch, const EmbeddingSpec& emb,
                             const DomainSpec& domain, const Trajectory& traj,
                             std::span<const Point> points, std::span<const double> times) {
  GridSolution sol;
  sol.domain = domain;
  sol.points.assign(points.begin(), points.end());
  std::vector<double> in(arch.input_dim);
  for (double t : times) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < traj.times.size(); ++k)
      if (std::abs(traj.times[k] - t) < std::abs(traj.times[best] - t)) best = k;
    if (traj.times.empty() || std::abs(traj.times[best] - t) > 1e-9)
      throw ContractViolation("trajectory has no step at t=" + format_double(t));
    check_dimensions(arch, traj.thetas[best], emb, traj.z);
    const Mlp net(arch, traj.thetas[best]);
    std::vector<double> field;
    field.reserve(points.size());
    for (const auto& x : points) {
      network_input(emb, traj.z, x, in);
      field.push_back(net.forward(in));
    }
    sol.times.push_back(traj.times[best]);
    sol.fields.push_back(std::move(field));
  }
  return sol;
}

SpectralGrid reference_grid(const RunConfig& cfg) {
  SpectralGrid g;
  g.domain = cfg.problem().domain();
  g.n = cfg.reference_modes;
  return g;
}

Pipeline::Pipeline(RunConfig cfg, fs::path out_dir) : cfg_(std::move(cfg)), out_(std::move(out_dir)) {
  cfg_.validate();
}

fs::path Pipeline::finetune_path(std::size_t k) const {
  return out_ / "finetune" / ("sample_" + std::to_string(k) + ".json");
}
fs::path Pipeline::trajectory_path(std::size_t k) const {
  return out_ / "trajectory" / ("sample_" + std::to_string(k) + ".traj");
}
fs::path Pipeline::reference_path(std::size_t k) const {
  return out_ / "reference" / ("sample_" + std::to_string(k) + ".csv");
}
fs::path Pipeline::prediction_path(std::size_t k) const {
  return out_ / "prediction" / ("sample_" + std::to_string(k) + ".csv");
}

std::vector<std::size_t> Pipeline::samples(std::optional<std::size_t> sample) const {
  if (sample) {
    if (*sample >= cfg_.test_size)
      throw ConfigError("sample index " + std::to_string(*sample) + " >= ensemble.test_size");
    return {*sample};
  }
  std::vector<std::size_t> all(cfg_.test_size);
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return all;
}

void Pipeline::record_time(const std::string& phase, double seconds) const {
  fs::create_directories(out_);
  std::ofstream log(out_ / "timing.log", std::ios::app);
  log << phase << ' ' << format_double(seconds) << '\n';
}

void Pipeline::write_log(const std::string& name, const std::string& header,
                         std::span<const double> values) const {
  std::string s = header + "\n";
  for (std::size_t i = 0; i < values.size(); ++i)
    s += std::to_string(i) + "," + format_double(values[i]) + "\n";
  write_file_atomic(out_ / "logs" / name, s);
}

void Pipeline::sample_ics() {
  const auto start = Clock::now();
  const auto ics = madngs::sample_ics(cfg_);
  const auto problem = cfg_.problem();
  const auto points = collocation_grid(problem.domain(), cfg_.collocation);

  nlohmann::json m;
  m["benchmark"] = to_string(cfg_.benchmark);
  m["config_hash"] = cfg_.hash();
  m["shift"] = problem.domain().shift;
  m["collocation"] = cfg_.collocation;
  m["train"] = nlohmann::json::array();
  m["test"] = nlohmann::json::array();
  auto entry = [](std::uint64_t seed, const InitialField& f) {
    return nlohmann::json{{"seed", seed}, {"cos", f.cos_coeffs()}, {"sin", f.sin_coeffs()}};
  };
  for (std::size_t i = 0; i < ics.train.size(); ++i)
    m["train"].push_back(entry(ics.train_seeds[i], ics.train[i]));
  for (std::size_t i = 0; i < ics.test.size(); ++i)
    m["test"].push_back(entry(ics.test_seeds[i], ics.test[i]));
  write_file_atomic(manifest_path(), m.dump(2) + "\n");

  const bool two_d = problem.domain().dim == 2;
  auto values_csv = [&](const std::vector<InitialField>& fields) {
    std::string s = two_d ? "sample,x,y,value\n" : "sample,x,value\n";
    for (std::size_t i = 0; i < fields.size(); ++i) {
      for (const auto& x : points) {
        s += std::to_string(i) + "," + format_double(x[0]) + ",";
        if (two_d) s += format_double(x[1]) + ",";
        s += format_double(fields[i](x)) + "\n";
      }
    }
    return s;
  };
  write_file_atomic(out_ / "ics" / "train_values.csv", values_csv(ics.train));
  write_file_atomic(out_ / "ics" / "test_values.csv", values_csv(ics.test));
  record_time("sample_ics", seconds_since(start));
}

SampledIcs Pipeline::load_ics() const {
  const auto m = read_json(manifest_path(), "sample-ics");
  const auto family = family_for(cfg_);
  const auto domain = cfg_.problem().domain();
  SampledIcs ics;
  for (const auto& e : m.at("train")) {
    ics.train_seeds.push_back(e.at("seed").get<std::uint64_t>());
    ics.train.push_back(sample_initial_condition(family, domain, ics.train_seeds.back()));
  }
  for (const auto& e : m.at("test")) {
    ics.test_seeds.push_back(e.at("seed").get<std::uint64_t>());
    ics.test.push_back(sample_initial_condition(family, domain, ics.test_seeds.back()));
  }
  return ics;
}

TrainingEnsemble Pipeline::training_ensemble(const SampledIcs& ics) const {
  return TrainingEnsemble::from_fields(ics.train,
                                       collocation_grid(cfg_.problem().domain(), cfg_.collocation));
}

PretrainResult Pipeline::pretrain() {
  const auto start = Clock::now();
  const auto ics = load_ics();
  if (ics.train.empty()) throw ConfigError("ensemble.size is 0; nothing to pretrain on");
  const auto ensemble = training_ensemble(ics);
  const auto problem = cfg_.problem();
  OptimizerConfig opt = cfg_.pretrain_opt;
  opt.seed = derive_seed(cfg_.seed, "pretrain.init");
  auto res = madngs::pretrain(ensemble, cfg_.arch(), problem.embedding(), cfg_.latent_dim,
                              cfg_.sigma, opt);
  save_checkpoint(res.manifold, Provenance{{cfg_.seed, opt.seed}, cfg_.hash()}, checkpoint_path());
  write_log("pretrain.csv", "iteration,loss", res.history);
  write_log("pretrain_samples.csv", "sample,data_loss", res.sample_losses);
  record_time("pretrain", seconds_since(start));
  return res;
}

std::vector<FinetuneResult> Pipeline::finetune(std::optional<std::size_t> sample) {
  const auto start = Clock::now();
  const auto which = samples(sample);
  const auto cp = load_checkpoint(checkpoint_path());
  const auto ics = load_ics();
  const auto ensemble = training_ensemble(ics);
  const auto problem = cfg_.problem();
  std::vector<FinetuneResult> out;
  for (auto k : which) {
    if (k >= ics.test.size()) throw MissingArtifact("manifest has no test sample " + std::to_string(k));
    const auto u_new = ics.test[k].evaluate(ensemble.points);
    OptimizerConfig opt = cfg_.finetune_opt;
    opt.seed = derive_seed(cfg_.seed, "finetune", k);
    auto res = madngs::finetune(cp.manifold, problem.embedding(), ensemble, u_new, opt);
    nlohmann::json j;
    j["sample"] = k;
    j["warm_start_index"] = res.warm_start_index;
    j["z"] = std::vector<double>(res.z.values.data(), res.z.values.data() + res.z.values.size());
    j["warm_start_loss"] = res.warm_start_loss;
    j["loss"] = res.loss;
    j["warm_start_data_loss"] = res.warm_start_data_loss;
    j["data_loss"] = res.data_loss;
    write_file_atomic(finetune_path(k), j.dump(2) + "\n");
    write_log("finetune_" + std::to_string(k) + ".csv", "iteration,loss", res.history);
    out.push_back(std::move(res));
  }
  record_time("finetune", seconds_since(start));
  return out;
}

std::vector<Trajectory> Pipeline::evolve(std::optional<std::size_t> sample) {
  const auto start = Clock::now();
  const auto which = samples(sample);
  const auto cp = load_checkpoint(checkpoint_path());
  const auto problem = cfg_.problem();
  const auto arch = cfg_.arch();
  if (!(cp.manifold.arch == arch))
    throw ConfigError("checkpoint architecture does not match the configuration");
  std::vector<Trajectory> out;
  for (auto k : which) {
    const auto j = read_json(finetune_path(k), "finetune");
    const auto zv = j.at("z").get<std::vector<double>>();
    LatentCode z{Eigen::Map<const Vector>(zv.data(), static_cast<Eigen::Index>(zv.size()))};
    EvolutionConfig ec = cfg_.evolution();
    ec.seed = derive_seed(cfg_.seed, "evolve", k);
    std::vector<double> residuals;
    const ProgressHook hook = [&](std::size_t, double, double r) { residuals.push_back(r); };
    try {
      auto traj = madngs::evolve(problem, arch, problem.embedding(), cp.manifold.theta, z, ec, hook);
      save_trajectory(traj, trajectory_path(k));
      out.push_back(std::move(traj));
    } catch (const EvolutionAborted& e) {
      save_trajectory(e.partial(), trajectory_path(k));
      write_log("evolve_" + std::to_string(k) + ".csv", "step,residual", residuals);
      throw;
    }
    write_log("evolve_" + std::to_string(k) + ".csv", "step,residual", residuals);
  }
  record_time("evolve", seconds_since(start));
  return out;
}

void Pipeline::reference(std::optional<std::size_t> sample) {
  const auto start = Clock::now();
  const auto which = samples(sample);
  const auto ics = load_ics();
  const auto problem = cfg_.problem();
  const auto grid = reference_grid(cfg_);
  const auto pts = grid.points();
  const auto times = with_initial_time(cfg_.compare_times);
  ReferenceOptions opts;
  opts.dt = cfg_.reference_dt;
  opts.dealias = cfg_.reference_dealias;
  for (auto k : which) {
    if (k >= ics.test.size()) throw MissingArtifact("manifest has no test sample " + std::to_string(k));
    const auto u0 = ics.test[k].evaluate(pts);
    export_grid_solution(solve_reference(problem, u0, grid, times, opts), reference_path(k));
  }
  record_time("reference", seconds_since(start));
}

ExperimentReport Pipeline::compare() {
  const auto problem = cfg_.problem();
  const auto arch = cfg_.arch();
  const auto grid = reference_grid(cfg_);
  const auto pts = grid.points();
  const auto times = with_initial_time(cfg_.compare_times);

  ExperimentReport report;
  report.config = cfg_.to_map();
  report.config["config_hash"] = cfg_.hash();
  report.seeds = {cfg_.seed};
  report.metrics["param_count"] = static_cast<double>(arch.param_count());
  for (auto k : samples(std::nullopt)) {
    if (!fs::exists(reference_path(k)))
      throw MissingArtifact("missing " + reference_path(k).string() + " (run 'reference' first)");
    const auto traj = load_trajectory(trajectory_path(k));
    export_grid_solution(predict_on_grid(arch, problem.embedding(), grid.domain, traj, pts, times),
                         prediction_path(k));
    // Both sides are read back from disk so the report matches the exported files exactly.
    const auto pred = import_grid_solution(prediction_path(k));
    const auto ref = import_grid_solution(reference_path(k));
    if (pred.times.size() != ref.times.size())
      throw ContractViolation("prediction and reference record different times");
    for (std::size_t ti = 0; ti < ref.times.size(); ++ti)
      report.mse.push_back({mode_label(cfg_), k, ref.times[ti], mse(pred, ref, ti)});
    if (fs::exists(finetune_path(k))) {
      const auto j = read_json(finetune_path(k), "finetune");
      const std::string pre = "sample_" + std::to_string(k) + ".";
      report.metrics[pre + "warm_start_data_loss"] = j.at("warm_start_data_loss").get<double>();
      report.metrics[pre + "finetuned_data_loss"] = j.at("data_loss").get<double>();
    }
  }
  std::ifstream timing(out_ / "timing.log");
  std::string phase;
  std::string secs;
  while (timing >> phase >> secs) report.wall_times[phase] = parse_double(secs);
  export_report(report, report_path());
  return report;
}

ExperimentReport Pipeline::run_all() {
  sample_ics();
  pretrain();
  finetune();
  evolve();
  reference();
  return compare();
}

}  // namespace madngs
