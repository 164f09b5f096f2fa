#include "bdris/wmmse.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <sstream>

#include "bdris/benchmarks.hpp"

namespace bdris {

void SolverOptions::validate() const {
  if (max_ao_iters < 1 || max_bisection_iters < 1) {
    throw ConfigError("solver options: iteration caps must be >= 1");
  }
  if (!(ao_rel_tol > 0.0) || !(bisection_tol > 0.0)) {
    throw ConfigError("solver options: tolerances must be positive");
  }
  manifold.validate();
}

std::vector<CMatrix> update_decoders(const EffectiveChannels& h,
                                     const SolverVariables& vars,
                                     const ScenarioConfig& config) {
  std::vector<CMatrix> out(static_cast<std::size_t>(config.num_users()));
  const int nr = config.rx_antennas;
  for (int l = 0; l < config.num_cells; ++l) {
    for (int k = 0; k < config.users_per_cell; ++k) {
      CMatrix j = config.noise_power_mw * CMatrix::Identity(nr, nr);
      for (int b = 0; b < config.num_cells; ++b) {
        for (int q = 0; q < config.users_per_cell; ++q) {
          const CMatrix x =
              h(b, l, k) *
              vars.beamformers[static_cast<std::size_t>(config.user_index(b, q))];
          j.noalias() += x * x.adjoint();
        }
      }
      j = hermitian_part(j);
      const auto idx = static_cast<std::size_t>(config.user_index(l, k));
      const CMatrix hf = h(l, l, k) * vars.beamformers[idx];
      Eigen::LLT<CMatrix> llt(j);
      if (llt.info() == Eigen::Success) {
        out[idx] = llt.solve(hf);
      } else {
        out[idx] = j.ldlt().solve(hf);
      }
    }
  }
  return out;
}

std::vector<CMatrix> update_decoders(const SolverVariables& vars,
                                     const ChannelSet& channels,
                                     const ScenarioConfig& config) {
  return update_decoders(EffectiveChannels(channels, vars.reflection), vars,
                         config);
}

std::vector<CMatrix> update_weights(const EffectiveChannels& h,
                                    const SolverVariables& vars,
                                    const ScenarioConfig& config, double ridge,
                                    int* regularizations) {
  std::vector<CMatrix> out(static_cast<std::size_t>(config.num_users()));
  const int ns = config.num_streams;
  for (int l = 0; l < config.num_cells; ++l) {
    for (int k = 0; k < config.users_per_cell; ++k) {
      CMatrix e = mse_matrix(h, vars, config, l, k);
      Eigen::SelfAdjointEigenSolver<CMatrix> eig(e);
      if (eig.info() != Eigen::Success || eig.eigenvalues().minCoeff() < ridge) {
        e += ridge * CMatrix::Identity(ns, ns);
        if (regularizations != nullptr) ++*regularizations;
      }
      const CMatrix w = e.llt().solve(CMatrix::Identity(ns, ns));
      out[static_cast<std::size_t>(config.user_index(l, k))] = hermitian_part(w);
    }
  }
  return out;
}

std::vector<CMatrix> update_weights(const SolverVariables& vars,
                                    const ChannelSet& channels,
                                    const ScenarioConfig& config) {
  return update_weights(EffectiveChannels(channels, vars.reflection), vars,
                        config);
}

DualSolution solve_dual_mu(const RVector& eigenvalues,
                           const RVector& diag_weights, double power_budget,
                           double tol, int max_iters) {
  if (eigenvalues.size() != diag_weights.size()) {
    throw DimensionError("solve_dual_mu: size mismatch");
  }
  if (eigenvalues.minCoeff() < 0.0 || diag_weights.minCoeff() < 0.0) {
    throw NumericalError("solve_dual_mu: negative eigenvalue or weight");
  }
  auto power = [&](double mu) {
    double p = 0.0;
    for (Eigen::Index n = 0; n < eigenvalues.size(); ++n) {
      const double c = diag_weights(n);
      if (c == 0.0) continue;
      const double d = eigenvalues(n) + mu;
      if (d <= 0.0) return std::numeric_limits<double>::infinity();
      p += c / (d * d);
    }
    return p;
  };

  DualSolution sol;
  const double total = diag_weights.sum();
  if (total == 0.0) {
    return sol;  // degenerate: zero beamformers, mu = 0
  }
  if (!(power_budget > 0.0)) {
    sol.mu = std::numeric_limits<double>::infinity();
    sol.active = true;
    return sol;
  }
  sol.power = power(0.0);
  if (sol.power <= power_budget) {
    return sol;
  }

  sol.active = true;
  double lo = 0.0;
  double hi = std::sqrt(total / power_budget);
  double p_hi = power(hi);
  // sum c / (lambda + mu)^2 <= sum c / mu^2 = P at mu = hi.
  if (p_hi > power_budget * (1.0 + 1e-12)) {
    throw NumericalError("solve_dual_mu: upper bound does not bracket the root");
  }
  int it = 0;
  while (power_budget - p_hi > tol * power_budget && it < max_iters) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;  // interval at machine resolution
    const double p = power(mid);
    if (p > power_budget) {
      lo = mid;
    } else {
      hi = mid;
      p_hi = p;
    }
    ++it;
  }
  sol.mu = hi;
  sol.power = p_hi;
  sol.residual = std::abs(power_budget - p_hi);
  sol.iterations = it;
  sol.converged = sol.residual <= tol * power_budget;
  return sol;
}

CMatrix beamformer_quadratic(const EffectiveChannels& h,
                             const SolverVariables& vars,
                             const ScenarioConfig& config, int cell) {
  const int nt = config.tx_antennas;
  CMatrix q = CMatrix::Zero(nt, nt);
  for (int l = 0; l < config.num_cells; ++l) {
    for (int k = 0; k < config.users_per_cell; ++k) {
      const double alpha = config.weight(l, k);
      if (alpha == 0.0) continue;
      const auto idx = static_cast<std::size_t>(config.user_index(l, k));
      const CMatrix uh = vars.decoders[idx].adjoint() * h(cell, l, k);  // Ns x Nt
      q.noalias() += alpha * (uh.adjoint() * vars.weights[idx] * uh);
    }
  }
  return hermitian_part(q);
}

std::vector<CMatrix> update_beamformers(const EffectiveChannels& h,
                                        const SolverVariables& vars,
                                        const ScenarioConfig& config,
                                        const SolverOptions& options,
                                        std::vector<DualSolution>* duals) {
  const int K = config.users_per_cell;
  const int nt = config.tx_antennas;
  const int ns = config.num_streams;
  std::vector<CMatrix> out(static_cast<std::size_t>(config.num_users()));
  if (duals != nullptr) duals->clear();

  for (int l = 0; l < config.num_cells; ++l) {
    const CMatrix q = beamformer_quadratic(h, vars, config, l);
    Eigen::SelfAdjointEigenSolver<CMatrix> eig(q);
    if (eig.info() != Eigen::Success) {
      throw NumericalError("update_beamformers: eigendecomposition failed");
    }
    const CMatrix& d = eig.eigenvectors();
    RVector lambda = eig.eigenvalues().cwiseMax(0.0);
    const double lambda_floor = 1e-12 * std::max(lambda.maxCoeff(), 0.0);

    std::vector<CMatrix> z(static_cast<std::size_t>(K));
    RVector c = RVector::Zero(nt);
    for (int k = 0; k < K; ++k) {
      const auto idx = static_cast<std::size_t>(config.user_index(l, k));
      z[static_cast<std::size_t>(k)] =
          config.weight(l, k) *
          (d.adjoint() * h(l, l, k).adjoint() * vars.decoders[idx] *
           vars.weights[idx]);
      c += z[static_cast<std::size_t>(k)].rowwise().squaredNorm();
    }
    const double c_total = c.sum();
    for (Eigen::Index n = 0; n < nt; ++n) {
      if (lambda(n) > lambda_floor) continue;
      lambda(n) = 0.0;
      // Directions outside the range of Q that carry only rounding noise.
      if (c(n) <= 1e-12 * c_total) {
        c(n) = 0.0;
        for (auto& zk : z) zk.row(n).setZero();
      }
    }

    const DualSolution dual = solve_dual_mu(
        lambda, c, config.tx_power_mw[static_cast<std::size_t>(l)],
        options.bisection_tol, options.max_bisection_iters);
    if (duals != nullptr) duals->push_back(dual);

    RVector inv(nt);
    for (Eigen::Index n = 0; n < nt; ++n) {
      const double den = lambda(n) + dual.mu;
      inv(n) = (den > 0.0 && std::isfinite(den)) ? 1.0 / den : 0.0;
    }
    for (int k = 0; k < K; ++k) {
      const auto idx = static_cast<std::size_t>(config.user_index(l, k));
      if (c_total == 0.0) {
        out[idx] = CMatrix::Zero(nt, ns);
      } else {
        out[idx] = d * (inv.asDiagonal() * z[static_cast<std::size_t>(k)]);
      }
    }
  }
  return out;
}

std::vector<CMatrix> update_beamformers(const SolverVariables& vars,
                                        const ChannelSet& channels,
                                        const ScenarioConfig& config,
                                        const SolverOptions& options) {
  return update_beamformers(EffectiveChannels(channels, vars.reflection), vars,
                            config, options);
}

double beamformer_subproblem_value(const EffectiveChannels& h,
                                   const SolverVariables& vars,
                                   const ScenarioConfig& config, int cell) {
  const CMatrix q = beamformer_quadratic(h, vars, config, cell);
  double value = 0.0;
  for (int k = 0; k < config.users_per_cell; ++k) {
    const auto idx = static_cast<std::size_t>(config.user_index(cell, k));
    const CMatrix& f = vars.beamformers[idx];
    value += (f.adjoint() * q * f).trace().real();
    value -= 2.0 * config.weight(cell, k) *
             (vars.weights[idx] * vars.decoders[idx].adjoint() *
              h(cell, cell, k) * f)
                 .trace()
                 .real();
  }
  return value;
}

double wmmse_objective(const EffectiveChannels& h, const SolverVariables& vars,
                       const ScenarioConfig& config) {
  double acc = 0.0;
  for (int l = 0; l < config.num_cells; ++l) {
    for (int k = 0; k < config.users_per_cell; ++k) {
      const double alpha = config.weight(l, k);
      if (alpha == 0.0) continue;
      const CMatrix& w =
          vars.weights[static_cast<std::size_t>(config.user_index(l, k))];
      const CMatrix e = mse_matrix(h, vars, config, l, k);
      double logdet = 0.0;
      try {
        logdet = logdet_hpd(hermitian_part(w));
      } catch (const NumericalError&) {
        throw NumericalError("wmmse_objective: weight matrix is not positive definite");
      }
      acc += alpha * ((w * e).trace().real() - logdet);
    }
  }
  return acc;
}

double wmmse_objective(const SolverVariables& vars, const ChannelSet& channels,
                       const ScenarioConfig& config) {
  return wmmse_objective(EffectiveChannels(channels, vars.reflection), vars,
                         config);
}

std::vector<CMatrix> random_feasible_beamformers(const ScenarioConfig& config,
                                                 Rng& rng) {
  std::vector<CMatrix> f(static_cast<std::size_t>(config.num_users()));
  const double per_user_share = 1.0 / config.users_per_cell;
  for (int l = 0; l < config.num_cells; ++l) {
    const double budget = config.tx_power_mw[static_cast<std::size_t>(l)];
    for (int k = 0; k < config.users_per_cell; ++k) {
      CMatrix x = gen_rayleigh(config.tx_antennas, config.num_streams, 0.0, rng);
      x *= std::sqrt(budget * per_user_share) / x.norm();
      f[static_cast<std::size_t>(config.user_index(l, k))] = std::move(x);
    }
  }
  return f;
}

namespace {

std::vector<int> reflection_blocks(const ScenarioConfig& config,
                                   ReflectionMode mode) {
  if (mode == ReflectionMode::kDiagonal) {
    return std::vector<int>(static_cast<std::size_t>(config.ris_elements()), 1);
  }
  return config.surface_sizes();
}

CMatrix initial_reflection(const ScenarioConfig& config,
                           const SolverOptions& options,
                           const std::vector<int>& blocks, Rng& rng) {
  const int m = config.ris_elements();
  if (options.initial_reflection) {
    const CMatrix& phi = *options.initial_reflection;
    require_dims(phi, m, m, "run_ao: initial reflection");
    if (unitarity_residual(phi) > kUnitaryTolerance) {
      throw NumericalError("run_ao: initial reflection is not unitary");
    }
    if (options.reflection_mode != ReflectionMode::kFixed &&
        block_diagonal_part(phi, blocks) != phi) {
      throw NumericalError("run_ao: initial reflection violates block structure");
    }
    return phi;
  }
  if (options.init == InitStrategy::kIdentityReflection) {
    return CMatrix::Identity(m, m);
  }
  CMatrix phi = CMatrix::Zero(m, m);
  Eigen::Index at = 0;
  for (int size : blocks) {
    phi.block(at, at, size, size) = random_unitary_qr(size, rng);
    at += size;
  }
  return phi;
}

std::string describe_increase(const char* block, int iteration, double before,
                              double after) {
  std::ostringstream os;
  os.precision(17);
  os << "run_ao: WMMSE objective increased in the " << block
     << " update of iteration " << iteration << " (" << before << " -> "
     << after << ")";
  return os.str();
}

}  // namespace

AoResult run_ao(const ChannelSet& channels, const ScenarioConfig& config,
                const SolverOptions& options, Rng& rng) {
  config.validate();
  options.validate();
  channels.validate();
  if (channels.num_cells() != config.num_cells ||
      channels.users_per_cell() != config.users_per_cell ||
      channels.tx_antennas() != config.tx_antennas ||
      channels.rx_antennas() != config.rx_antennas ||
      channels.ris_elements() != config.ris_elements()) {
    throw DimensionError("run_ao: channel set does not match the scenario");
  }

  const std::vector<int> blocks =
      reflection_blocks(config, options.reflection_mode);

  AoResult result;
  SolverVariables& vars = result.vars;
  IterationTrace& trace = result.trace;
  vars = SolverVariables::zeros(config);
  if (options.initial_beamformers) {
    vars.beamformers = *options.initial_beamformers;
    if (vars.beamformers.size() != static_cast<std::size_t>(config.num_users())) {
      throw DimensionError("run_ao: initial beamformer count mismatch");
    }
  } else {
    vars.beamformers = random_feasible_beamformers(config, rng);
  }
  vars.reflection = initial_reflection(config, options, blocks, rng);

  auto eff = std::make_unique<EffectiveChannels>(channels, vars.reflection);
  double rate = weighted_sum_rate(*eff, vars, config);

  auto make_record = [&](int iteration, double objective, int manifold_iters) {
    IterationRecord rec;
    rec.iteration = iteration;
    rec.weighted_sum_rate = rate;
    rec.wmmse_objective = objective;
    rec.unitarity_residual = unitarity_residual(vars.reflection);
    for (int l = 0; l < config.num_cells; ++l) {
      rec.bs_power.push_back(bs_power(vars, config, l));
    }
    rec.manifold_iters = manifold_iters;
    return rec;
  };

  {
    // Objective at the initial point with (U, W) at their optimum.
    SolverVariables probe = vars;
    probe.decoders = update_decoders(*eff, probe, config);
    probe.weights = update_weights(*eff, probe, config, options.weight_ridge);
    trace.records.push_back(
        make_record(0, wmmse_objective(*eff, probe, config), 0));
  }

  double objective = wmmse_objective(*eff, vars, config);
  int iteration = 0;
  auto track = [&](const char* block) {
    const double next = wmmse_objective(*eff, vars, config);
    const double increase = next - objective;
    trace.max_objective_increase =
        std::max(trace.max_objective_increase, increase);
    if (options.check_monotone && increase > options.monotone_tol) {
      throw NumericalError(describe_increase(block, iteration, objective, next));
    }
    objective = next;
  };

  double step_hint = 0.0;
  for (iteration = 1; iteration <= options.max_ao_iters; ++iteration) {
    vars.decoders = update_decoders(*eff, vars, config);
    track("decoder");
    vars.weights = update_weights(*eff, vars, config, options.weight_ridge,
                                  &trace.weight_regularizations);
    track("weight");
    {
      double log2det = 0.0;
      for (int l = 0; l < config.num_cells; ++l) {
        for (int k = 0; k < config.users_per_cell; ++k) {
          const double alpha = config.weight(l, k);
          if (alpha == 0.0) continue;
          log2det += alpha *
                     logdet_hpd(vars.weights[static_cast<std::size_t>(
                         config.user_index(l, k))]) /
                     std::numbers::ln2;
        }
      }
      const double err = std::abs(log2det - rate) / std::max(std::abs(rate), 1e-300);
      if (rate != 0.0 || log2det != 0.0) {
        trace.max_rate_identity_error = std::max(trace.max_rate_identity_error, err);
      }
    }

    std::vector<DualSolution> duals;
    vars.beamformers = update_beamformers(*eff, vars, config, options, &duals);
    for (const auto& d : duals) {
      if (!d.converged) ++trace.bisection_warnings;
    }
    track("beamformer");

    int manifold_iters = 0;
    if (options.reflection_mode != ReflectionMode::kFixed) {
      const QuadraticReflectionObjective q =
          assemble_objective(vars, channels, config);
      const ReflectionResult r = optimize_reflection(
          q, vars.reflection, options.manifold, blocks, step_hint);
      step_hint = r.last_step;
      manifold_iters = r.iterations;
      if (r.stalled) ++trace.manifold_stalls;
      vars.reflection = r.phi;
      trace.max_unitarity_residual =
          std::max({trace.max_unitarity_residual, r.max_unitarity_residual,
                    unitarity_residual(vars.reflection)});
      eff = std::make_unique<EffectiveChannels>(channels, vars.reflection);
      track("reflection");
    }

    const double previous = rate;
    rate = weighted_sum_rate(*eff, vars, config);
    trace.records.push_back(make_record(iteration, objective, manifold_iters));
    trace.ao_iterations = iteration;
    if (std::abs(rate - previous) <= options.ao_rel_tol * std::abs(previous)) {
      trace.converged = true;
      break;
    }
  }
  result.weighted_sum_rate = rate;
  return result;
}

}  // namespace bdris
