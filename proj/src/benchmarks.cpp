#include "bdris/benchmarks.hpp"

#include <limits>

namespace bdris {

std::string_view scheme_tag(SchemeId id) {
  switch (id) {
    case SchemeId::kProposed:
      return "proposed";
    case SchemeId::kDiagonalRis:
      return "diag_ris";
    case SchemeId::kRandomBdRis:
      return "random_bdris";
    case SchemeId::kNoRis:
      return "no_ris";
    case SchemeId::kNonCooperative:
      return "non_coop";
  }
  return "unknown";
}

SchemeId parse_scheme(std::string_view tag) {
  for (SchemeId id : kAllSchemes) {
    if (scheme_tag(id) == tag) return id;
  }
  throw ConfigError("unknown scheme tag: " + std::string(tag));
}

CMatrix random_unitary_qr(int m, Rng& rng) {
  if (m < 1) throw DimensionError("random_unitary_qr: size must be positive");
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  CMatrix s(m, m);
  for (Eigen::Index j = 0; j < s.cols(); ++j) {
    for (Eigen::Index i = 0; i < s.rows(); ++i) {
      const double re = unit(rng);
      const double im = unit(rng);
      s(i, j) = Complex(re, im);
    }
  }
  Eigen::HouseholderQR<CMatrix> qr(s);
  return qr.householderQ() * CMatrix::Identity(m, m);
}

SchemeResult best_of_random(const ChannelSet& channels,
                            const ScenarioConfig& config,
                            const SolverOptions& options, Rng& rng,
                            int n_draws) {
  if (n_draws < 1) throw ConfigError("best_of_random: n_draws must be >= 1");
  SchemeResult best;
  best.rate = -std::numeric_limits<double>::infinity();
  const int m = config.ris_elements();
  for (int i = 0; i < n_draws; ++i) {
    CMatrix phi = CMatrix::Zero(m, m);
    Eigen::Index at = 0;
    for (int size : config.surface_sizes()) {
      phi.block(at, at, size, size) = random_unitary_qr(size, rng);
      at += size;
    }
    SolverOptions opts = options;
    opts.reflection_mode = ReflectionMode::kFixed;
    opts.initial_reflection = std::move(phi);
    AoResult r = run_ao(channels, config, opts, rng);
    best.iterations += r.trace.ao_iterations;
    if (r.weighted_sum_rate > best.rate) {
      best.rate = r.weighted_sum_rate;
      best.vars = {std::move(r.vars)};
    }
  }
  return best;
}

SchemeResult no_ris(const ChannelSet& channels, const ScenarioConfig& config,
                    const SolverOptions& options, Rng& rng) {
  SolverOptions opts = options;
  opts.reflection_mode = ReflectionMode::kFixed;
  opts.initial_reflection.reset();
  opts.init = InitStrategy::kIdentityReflection;
  AoResult r = run_ao(channels.without_ris(), config, opts, rng);
  return SchemeResult{r.weighted_sum_rate, r.trace.ao_iterations,
                      {std::move(r.vars)}};
}

SchemeResult diagonal_ris(const ChannelSet& channels,
                          const ScenarioConfig& config,
                          const SolverOptions& options, Rng& rng) {
  SolverOptions opts = options;
  opts.reflection_mode = ReflectionMode::kDiagonal;
  AoResult r = run_ao(channels, config, opts, rng);
  return SchemeResult{r.weighted_sum_rate, r.trace.ao_iterations,
                      {std::move(r.vars)}};
}

SchemeResult proposed(const ChannelSet& channels, const ScenarioConfig& config,
                      const SolverOptions& options, Rng& rng) {
  SolverOptions opts = options;
  opts.reflection_mode = ReflectionMode::kUnitary;
  AoResult r = run_ao(channels, config, opts, rng);
  return SchemeResult{r.weighted_sum_rate, r.trace.ao_iterations,
                      {std::move(r.vars)}};
}

ScenarioConfig single_cell_config(const ScenarioConfig& config, int cell) {
  ScenarioConfig c = config;
  const auto l = static_cast<std::size_t>(cell);
  c.num_cells = 1;
  c.tx_power_mw = {config.tx_power_mw[l]};
  c.bs_positions = {config.bs_positions[l]};
  c.user_disk_centers = {config.user_disk_centers[l]};
  c.weights.assign(config.weights.begin() + cell * config.users_per_cell,
                   config.weights.begin() + (cell + 1) * config.users_per_cell);
  return c;
}

SchemeResult non_cooperative(const ChannelSet& channels,
                             const ScenarioConfig& config,
                             const SolverOptions& options, Rng& rng) {
  const int L = config.num_cells;
  const int K = config.users_per_cell;
  if (L < 1) throw ConfigError("non_cooperative: needs at least one cell");
  if (L == 1) {
    // A single cell has nobody to ignore: identical to the joint design.
    return proposed(channels, config, options, rng);
  }
  SchemeResult out;
  double rate_sum = 0.0;
  for (int slot = 0; slot < L; ++slot) {
    SolverVariables vars = SolverVariables::zeros(config);

    SolverOptions active = options;
    active.reflection_mode = ReflectionMode::kUnitary;
    AoResult own = run_ao(channels.single_cell(slot),
                          single_cell_config(config, slot), active, rng);
    out.iterations += own.trace.ao_iterations;
    vars.reflection = own.vars.reflection;

    auto copy_cell = [&](const SolverVariables& src, int cell) {
      for (int k = 0; k < K; ++k) {
        const auto dst = static_cast<std::size_t>(config.user_index(cell, k));
        const auto idx = static_cast<std::size_t>(k);
        vars.beamformers[dst] = src.beamformers[idx];
        vars.decoders[dst] = src.decoders[idx];
        vars.weights[dst] = src.weights[idx];
      }
    };
    copy_cell(own.vars, slot);

    for (int l = 0; l < L; ++l) {
      if (l == slot) continue;
      SolverOptions passive = options;
      passive.reflection_mode = ReflectionMode::kFixed;
      passive.initial_reflection = vars.reflection;
      AoResult other = run_ao(channels.single_cell(l),
                              single_cell_config(config, l), passive, rng);
      out.iterations += other.trace.ao_iterations;
      copy_cell(other.vars, l);
    }
    rate_sum += weighted_sum_rate(vars, channels, config);
    out.vars.push_back(std::move(vars));
  }
  out.rate = rate_sum / L;
  return out;
}

SchemeResult run_scheme(SchemeId id, const ChannelSet& channels,
                        const ScenarioConfig& config,
                        const SolverOptions& options, Rng& rng) {
  switch (id) {
    case SchemeId::kProposed:
      return proposed(channels, config, options, rng);
    case SchemeId::kDiagonalRis:
      return diagonal_ris(channels, config, options, rng);
    case SchemeId::kRandomBdRis:
      return best_of_random(channels, config, options, rng);
    case SchemeId::kNoRis:
      return no_ris(channels, config, options, rng);
    case SchemeId::kNonCooperative:
      return non_cooperative(channels, config, options, rng);
  }
  throw ConfigError("run_scheme: unknown scheme");
}

}  // namespace bdris
