#include "bdris/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <thread>

#include "bdris/channel.hpp"

namespace bdris {

std::string_view experiment_tag(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::kConvergence:
      return "convergence";
    case ExperimentKind::kSweepElements:
      return "sweep_m";
    case ExperimentKind::kSweepPower:
      return "sweep_power";
    case ExperimentKind::kDeployment:
      return "deployment";
  }
  return "unknown";
}

void ExperimentSpec::validate() const {
  base.validate();
  solver.validate();
  if (n_trials < 1) throw ConfigError("experiment: n_trials must be >= 1");
  if (schemes.empty()) throw ConfigError("experiment: no schemes selected");
  if (kind == ExperimentKind::kConvergence) {
    for (SchemeId id : schemes) {
      if (id == SchemeId::kRandomBdRis || id == SchemeId::kNonCooperative) {
        throw ConfigError("convergence traces are available for proposed, "
                          "diag_ris and no_ris only");
      }
    }
    return;
  }
  if (sweep_values.empty()) throw ConfigError("experiment: empty sweep list");
  for (std::size_t i = 1; i < sweep_values.size(); ++i) {
    if (!(sweep_values[i] > sweep_values[i - 1])) {
      throw ConfigError("experiment: sweep values must be strictly increasing");
    }
  }
  if (kind == ExperimentKind::kSweepElements ||
      kind == ExperimentKind::kDeployment) {
    if (base.surfaces.size() != 1) {
      throw ConfigError("element sweeps need a single-surface base scenario");
    }
    for (double v : sweep_values) {
      if (v < 1.0 || v != std::floor(v)) {
        throw ConfigError("experiment: element counts must be positive integers");
      }
      if (kind == ExperimentKind::kDeployment &&
          static_cast<long>(v) % 2 != 0) {
        throw ConfigError("deployment: element counts must be even");
      }
    }
  }
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// FNV-1a over the stream tag.
std::uint64_t hash_tag(std::string_view tag) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : tag) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::string_view stream,
                          double sweep_value, int trial) {
  std::uint64_t s = splitmix64(master);
  s = splitmix64(s ^ hash_tag(stream));
  s = splitmix64(s ^ std::bit_cast<std::uint64_t>(sweep_value));
  s = splitmix64(s ^ static_cast<std::uint64_t>(trial));
  return s;
}

namespace {

struct Task {
  std::string label;  // scheme column
  SchemeId scheme = SchemeId::kProposed;
  double sweep_value = 0.0;
  double channel_key = 0.0;
  int trial = 0;
  ScenarioConfig config;
};

struct TaskOutput {
  ResultRow row;
  std::vector<TraceRow> trace;
};

ReflectionMode mode_for(SchemeId id) {
  switch (id) {
    case SchemeId::kDiagonalRis:
      return ReflectionMode::kDiagonal;
    case SchemeId::kNoRis:
      return ReflectionMode::kFixed;
    default:
      return ReflectionMode::kUnitary;
  }
}

TaskOutput evaluate(const Task& task, const ExperimentSpec& spec) {
  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();

  Rng channel_rng(
      derive_seed(spec.master_seed, "channels", task.channel_key, task.trial));
  const ChannelSet channels = draw_scenario(task.config, channel_rng);
  Rng scheme_rng(
      derive_seed(spec.master_seed, task.label, task.sweep_value, task.trial));

  TaskOutput out;
  out.row.scheme = task.label;
  out.row.sweep_value = task.sweep_value;
  out.row.trial = task.trial;

  if (spec.kind == ExperimentKind::kConvergence) {
    SolverOptions opts = spec.solver;
    opts.reflection_mode = mode_for(task.scheme);
    const ChannelSet& used = task.scheme == SchemeId::kNoRis
                                 ? channels.without_ris()
                                 : channels;
    const AoResult r = run_ao(used, task.config, opts, scheme_rng);
    out.row.rate = r.weighted_sum_rate;
    out.row.iterations = r.trace.ao_iterations;
    for (const auto& rec : r.trace.records) {
      TraceRow t;
      t.scheme = task.label;
      t.trial = task.trial;
      t.iteration = rec.iteration;
      t.rate = rec.weighted_sum_rate;
      t.wmmse_objective = rec.wmmse_objective;
      t.unitarity_residual = rec.unitarity_residual;
      for (std::size_t l = 0; l < rec.bs_power.size(); ++l) {
        t.max_power_ratio = std::max(
            t.max_power_ratio, rec.bs_power[l] / task.config.tx_power_mw[l]);
      }
      out.trace.push_back(t);
    }
  } else {
    const SchemeResult r =
        run_scheme(task.scheme, channels, task.config, spec.solver, scheme_rng);
    out.row.rate = r.rate;
    out.row.iterations = r.iterations;
  }
  if (spec.record_timing) {
    out.row.wall_ms =
        std::chrono::duration<double, std::milli>(Clock::now() - start).count();
  }
  return out;
}

ExperimentResult execute(const ExperimentSpec& spec,
                         const std::vector<Task>& tasks) {
  std::vector<TaskOutput> outputs(tasks.size());
  std::vector<std::exception_ptr> errors(tasks.size());
  std::atomic<std::size_t> next{0};

  auto worker = [&]() {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      try {
        outputs[i] = evaluate(tasks[i], spec);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  int threads = spec.threads > 0
                    ? spec.threads
                    : static_cast<int>(std::thread::hardware_concurrency());
  threads = std::max(1, std::min<int>(threads, static_cast<int>(tasks.size())));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  ExperimentResult result;
  result.kind = spec.kind;
  for (auto& o : outputs) {
    result.rows.push_back(std::move(o.row));
    for (auto& t : o.trace) result.trace.push_back(std::move(t));
  }
  result.aggregates = aggregate(result.rows);
  return result;
}

std::vector<Task> build_tasks(const ExperimentSpec& spec) {
  std::vector<Task> tasks;
  auto add = [&](const std::string& label, SchemeId id, double value,
                 double channel_key, const ScenarioConfig& cfg) {
    for (int t = 0; t < spec.n_trials; ++t) {
      tasks.push_back(Task{label, id, value, channel_key, t, cfg});
    }
  };
  for (SchemeId id : spec.schemes) {
    const std::string tag(scheme_tag(id));
    switch (spec.kind) {
      case ExperimentKind::kConvergence:
        add(tag, id, 0.0, 0.0, spec.base);
        break;
      case ExperimentKind::kSweepElements:
        for (double m : spec.sweep_values) {
          ScenarioConfig cfg = spec.base;
          cfg.set_ris_elements(static_cast<int>(m));
          add(tag, id, m, m, cfg);
        }
        break;
      case ExperimentKind::kSweepPower:
        // Channels do not depend on the power budget: every power point reuses
        // the same draws.
        for (double p : spec.sweep_values) {
          ScenarioConfig cfg = spec.base;
          cfg.set_tx_power_dbm(p);
          add(tag, id, p, 0.0, cfg);
        }
        break;
      case ExperimentKind::kDeployment:
        for (const char* layout : {"centralized", "distributed"}) {
          for (double m : spec.sweep_values) {
            ScenarioConfig cfg = spec.base;
            cfg.set_ris_elements(static_cast<int>(m));
            if (std::string_view(layout) == "distributed") {
              cfg = distributed_scenario(cfg);
            }
            add(tag + "_" + layout, id, m, m, cfg);
          }
        }
        break;
    }
  }
  return tasks;
}

ExperimentResult run_kind(const ExperimentSpec& spec, ExperimentKind kind) {
  if (spec.kind != kind) {
    throw ConfigError("experiment kind mismatch: expected " +
                      std::string(experiment_tag(kind)));
  }
  spec.validate();
  return execute(spec, build_tasks(spec));
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

}  // namespace

ExperimentResult run_convergence(const ExperimentSpec& spec) {
  return run_kind(spec, ExperimentKind::kConvergence);
}
ExperimentResult run_sweep_elements(const ExperimentSpec& spec) {
  return run_kind(spec, ExperimentKind::kSweepElements);
}
ExperimentResult run_sweep_power(const ExperimentSpec& spec) {
  return run_kind(spec, ExperimentKind::kSweepPower);
}
ExperimentResult run_deployment(const ExperimentSpec& spec) {
  return run_kind(spec, ExperimentKind::kDeployment);
}

ExperimentResult run_experiment(const ExperimentSpec& spec) {
  return run_kind(spec, spec.kind);
}

std::vector<AggregateRow> aggregate(const std::vector<ResultRow>& rows) {
  std::vector<AggregateRow> out;
  std::map<std::pair<std::string, double>, std::size_t> slot;
  std::vector<std::vector<double>> samples;
  for (const auto& r : rows) {
    const auto key = std::make_pair(r.scheme, r.sweep_value);
    auto it = slot.find(key);
    if (it == slot.end()) {
      it = slot.emplace(key, out.size()).first;
      out.push_back(AggregateRow{r.scheme, r.sweep_value, 0.0, 0.0, 0});
      samples.emplace_back();
    }
    samples[it->second].push_back(r.rate);
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto& s = samples[i];
    const double n = static_cast<double>(s.size());
    double mean = 0.0;
    for (double x : s) mean += x;
    mean /= n;
    double var = 0.0;
    for (double x : s) var += (x - mean) * (x - mean);
    out[i].mean_rate = mean;
    out[i].n = static_cast<int>(s.size());
    out[i].stderr_rate = s.size() > 1 ? std::sqrt(var / (n - 1.0) / n) : 0.0;
  }
  return out;
}

std::string rows_csv(const ExperimentResult& result) {
  std::ostringstream os;
  os << "experiment,scheme,sweep_value,trial,rate_bps_hz,iterations,wall_ms\n";
  const std::string exp(experiment_tag(result.kind));
  for (const auto& r : result.rows) {
    os << exp << ',' << r.scheme << ',' << fmt(r.sweep_value) << ',' << r.trial
       << ',' << fmt(r.rate) << ',' << r.iterations << ',' << fmt(r.wall_ms)
       << '\n';
  }
  return os.str();
}

std::string aggregate_csv(const ExperimentResult& result) {
  std::ostringstream os;
  os << "scheme,sweep_value,mean_rate,stderr,n\n";
  for (const auto& a : result.aggregates) {
    os << a.scheme << ',' << fmt(a.sweep_value) << ',' << fmt(a.mean_rate)
       << ',' << fmt(a.stderr_rate) << ',' << a.n << '\n';
  }
  return os.str();
}

std::string trace_csv(const ExperimentResult& result) {
  std::ostringstream os;
  os << "scheme,trial,iteration,rate_bps_hz,wmmse_objective,"
        "unitarity_residual,max_power_ratio\n";
  for (const auto& t : result.trace) {
    os << t.scheme << ',' << t.trial << ',' << t.iteration << ','
       << fmt(t.rate) << ',' << fmt(t.wmmse_objective) << ','
       << fmt(t.unitarity_residual) << ',' << fmt(t.max_power_ratio) << '\n';
  }
  return os.str();
}

std::filesystem::path sibling_path(const std::filesystem::path& path,
                                   std::string_view suffix) {
  std::filesystem::path out = path;
  out.replace_filename(path.stem().string() + std::string(suffix) + ".csv");
  return out;
}

namespace {

void write_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open output file: " + path.string());
  out << text;
  out.flush();
  if (!out) throw Error("failed writing output file: " + path.string());
}

}  // namespace

void write_result(const ExperimentResult& result,
                  const std::filesystem::path& path) {
  write_file(path, rows_csv(result));
  write_file(sibling_path(path, "_agg"), aggregate_csv(result));
  if (result.kind == ExperimentKind::kConvergence) {
    write_file(sibling_path(path, "_trace"), trace_csv(result));
  }
}

}  // namespace bdris
