// Command-line driver for the Monte-Carlo experiments.
//
//   bdris convergence  [--config f] [--seed s] [--trials n] [--out path]
//   bdris sweep-m      [--values 8,12,16,20,24] ...
//   bdris sweep-power  [--values 10,20,30,40] ...
//   bdris deployment   [--values 20,40] ...
//
// Exit codes: 0 success, 1 configuration error, 2 runtime or numerical error.

#include <cstdint>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bdris/experiments.hpp"

namespace {

std::vector<std::string> split_csv(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<double> parse_values(const std::string& text) {
  std::vector<double> out;
  for (const auto& s : split_csv(text)) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(s, &used));
      if (used != s.size()) throw std::invalid_argument(s);
    } catch (const std::exception&) {
      throw bdris::ConfigError("invalid sweep value: " + s);
    }
  }
  return out;
}

struct CommonArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> trials;
  std::string out;
  std::string schemes;
  std::string values;
  int threads = 0;
  bool timing = false;
  std::optional<int> max_ao_iters;
};

void add_common(CLI::App* cmd, CommonArgs& args, const std::string& default_out) {
  args.out = default_out;
  cmd->add_option("--config", args.config, "Scenario JSON file")
      ->check(CLI::ExistingFile);
  cmd->add_option("--seed", args.seed, "Master seed (defaults to rng_seed)");
  cmd->add_option("--trials", args.trials, "Monte-Carlo trials per point");
  cmd->add_option("--out", args.out, "Output CSV path")->capture_default_str();
  cmd->add_option("--schemes", args.schemes,
                  "Comma-separated scheme tags "
                  "(proposed,diag_ris,random_bdris,no_ris,non_coop)");
  cmd->add_option("--values", args.values, "Comma-separated sweep values");
  cmd->add_option("--threads", args.threads, "Worker threads (0 = all cores)");
  cmd->add_flag("--timing", args.timing, "Record wall_ms per trial");
  cmd->add_option("--max-ao-iters", args.max_ao_iters,
                  "Cap on outer AO iterations");
}

bdris::ExperimentSpec make_spec(bdris::ExperimentKind kind,
                                const CommonArgs& args,
                                const std::vector<double>& default_values,
                                const std::vector<bdris::SchemeId>& default_schemes,
                                int default_trials) {
  bdris::ExperimentSpec spec;
  spec.kind = kind;
  spec.base = args.config.empty() ? bdris::default_scenario()
                                  : bdris::load_scenario(args.config);
  spec.master_seed = args.seed.value_or(spec.base.rng_seed);
  spec.n_trials = args.trials.value_or(default_trials);
  spec.sweep_values =
      args.values.empty() ? default_values : parse_values(args.values);
  if (args.schemes.empty()) {
    spec.schemes = default_schemes;
  } else {
    for (const auto& tag : split_csv(args.schemes)) {
      spec.schemes.push_back(bdris::parse_scheme(tag));
    }
  }
  spec.threads = args.threads;
  spec.record_timing = args.timing;
  if (args.max_ao_iters) spec.solver.max_ao_iters = *args.max_ao_iters;
  spec.validate();
  return spec;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Joint beamforming and BD-RIS reflection experiments"};
  app.require_subcommand(1);

  CommonArgs conv, sweep_m, sweep_p, deploy;
  auto* c_conv = app.add_subcommand("convergence", "AO convergence traces");
  add_common(c_conv, conv, "convergence.csv");
  auto* c_m = app.add_subcommand("sweep-m", "Weighted sum rate vs. RIS size");
  add_common(c_m, sweep_m, "sweep_m.csv");
  auto* c_p = app.add_subcommand("sweep-power", "Weighted sum rate vs. BS power");
  add_common(c_p, sweep_p, "sweep_power.csv");
  auto* c_d = app.add_subcommand("deployment",
                                 "Centralized vs. distributed surfaces");
  add_common(c_d, deploy, "deployment.csv");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  const std::vector<bdris::SchemeId> all(std::begin(bdris::kAllSchemes),
                                         std::end(bdris::kAllSchemes));
  try {
    bdris::ExperimentSpec spec;
    const CommonArgs* args = nullptr;
    if (c_conv->parsed()) {
      args = &conv;
      spec = make_spec(bdris::ExperimentKind::kConvergence, conv, {},
                       {bdris::SchemeId::kProposed}, 1);
    } else if (c_m->parsed()) {
      args = &sweep_m;
      spec = make_spec(bdris::ExperimentKind::kSweepElements, sweep_m,
                       {8, 12, 16, 20, 24}, all, 50);
    } else if (c_p->parsed()) {
      args = &sweep_p;
      spec = make_spec(bdris::ExperimentKind::kSweepPower, sweep_p,
                       {10, 15, 20, 25, 30, 35, 40}, all, 50);
    } else {
      args = &deploy;
      spec = make_spec(bdris::ExperimentKind::kDeployment, deploy, {20, 40},
                       {bdris::SchemeId::kProposed}, 50);
    }
    const bdris::ExperimentResult result = bdris::run_experiment(spec);
    bdris::write_result(result, args->out);
    std::cout << bdris::aggregate_csv(result);
  } catch (const bdris::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
