#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "madngs/config.hpp"
#include "madngs/errors.hpp"
#include "madngs/parallel.hpp"
#include "madngs/pipeline.hpp"

namespace {

enum ExitCode { kOk = 0, kOther = 1, kConfig = 2, kNumerical = 3, kMissing = 4 };

struct Options {
  std::string config;
  std::string benchmark;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
  std::size_t jobs = 1;
  std::optional<std::size_t> sample;
  std::vector<std::string> overrides;
};

madngs::RunConfig build_config(const Options& o) {
  madngs::RunConfig cfg;
  if (!o.config.empty())
    cfg = madngs::RunConfig::load(o.config);
  else if (!o.benchmark.empty())
    cfg = madngs::RunConfig::defaults(madngs::parse_benchmark(o.benchmark));
  else
    throw madngs::ConfigError("either --config or --benchmark is required");
  for (const auto& kv : o.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw madngs::ConfigError("--set expects key=value, got '" + kv + "'");
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (o.seed) cfg.seed = *o.seed;
  cfg.validate();
  return cfg;
}

void print_report(const madngs::ExperimentReport& report) {
  std::cout << "mode,sample,time,mse\n";
  for (const auto& e : report.mse)
    std::cout << e.mode << ',' << e.sample << ',' << madngs::format_double(e.time) << ','
              << madngs::format_double(e.value) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Meta-learned neural Galerkin solver with randomized sparse updates"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&](CLI::App* sub, bool per_sample) {
    sub->add_option("--config", o.config, "Run configuration file (flat dotted keys)");
    sub->add_option("--benchmark", o.benchmark, "Use built-in defaults: kdv, burgers, ac1d_const, ac1d_tx, ac2d");
    sub->add_option("--seed", o.seed, "Override the master seed");
    sub->add_option("--out", o.out, "Output directory")->capture_default_str();
    sub->add_option("--jobs", o.jobs, "Worker thread cap")->check(CLI::PositiveNumber);
    sub->add_option("--set", o.overrides, "Override one key, key=value (repeatable)");
    if (per_sample) sub->add_option("--sample", o.sample, "Held-out sample index (default: all)");
  };

  auto* c_ics = app.add_subcommand("sample-ics", "Sample training and held-out initial conditions");
  auto* c_pre = app.add_subcommand("pretrain", "Jointly fit shared weights and latent codes");
  auto* c_fine = app.add_subcommand("finetune", "Fit the latent code of held-out samples");
  auto* c_evo = app.add_subcommand("evolve", "Integrate the Galerkin flow in time");
  auto* c_ref = app.add_subcommand("reference", "Run the pseudospectral reference solver");
  auto* c_cmp = app.add_subcommand("compare", "Write the MSE report");
  auto* c_run = app.add_subcommand("run", "Run every stage in order");
  auto* c_cfg = app.add_subcommand("show-config", "Print the resolved configuration");
  for (auto* s : {c_ics, c_pre, c_cmp, c_run, c_cfg}) add_common(s, false);
  for (auto* s : {c_fine, c_evo, c_ref}) add_common(s, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }

  try {
    madngs::set_max_workers(o.jobs);
    const auto cfg = build_config(o);
    if (c_cfg->parsed()) {
      std::cout << cfg.to_text();
      return kOk;
    }
    madngs::Pipeline pipe(cfg, o.out);
    if (c_ics->parsed()) {
      pipe.sample_ics();
      std::cout << "wrote " << pipe.manifest_path().string() << '\n';
    } else if (c_pre->parsed()) {
      const auto res = pipe.pretrain();
      std::cout << "pretrain loss " << madngs::format_double(res.history.back()) << ", wrote "
                << pipe.checkpoint_path().string() << '\n';
    } else if (c_fine->parsed()) {
      for (const auto& r : pipe.finetune(o.sample))
        std::cout << "finetune data loss " << madngs::format_double(r.warm_start_data_loss)
                  << " -> " << madngs::format_double(r.data_loss) << '\n';
    } else if (c_evo->parsed()) {
      const auto trajs = pipe.evolve(o.sample);
      std::cout << "evolved " << trajs.size() << " trajectories\n";
    } else if (c_ref->parsed()) {
      pipe.reference(o.sample);
      std::cout << "reference done\n";
    } else if (c_cmp->parsed()) {
      print_report(pipe.compare());
    } else if (c_run->parsed()) {
      print_report(pipe.run_all());
    }
  } catch (const madngs::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const madngs::MissingArtifact& e) {
    std::cerr << "missing artifact: " << e.what() << '\n';
    return kMissing;
  } catch (const madngs::NumericalBlowup& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  } catch (const madngs::DivergedError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  } catch (const madngs::DegenerateSystem& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  } catch (const madngs::InstabilityError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kOther;
  }
  return kOk;
}
