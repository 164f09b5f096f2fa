#include "bdris/system_model.hpp"

#include <cmath>
#include <numbers>

namespace bdris {

SolverVariables SolverVariables::zeros(const ScenarioConfig& config) {
  SolverVariables v;
  const auto n = static_cast<std::size_t>(config.num_users());
  v.beamformers.assign(n, CMatrix::Zero(config.tx_antennas, config.num_streams));
  v.decoders.assign(n, CMatrix::Zero(config.rx_antennas, config.num_streams));
  v.weights.assign(n, CMatrix::Identity(config.num_streams, config.num_streams));
  v.reflection = CMatrix::Identity(config.ris_elements(), config.ris_elements());
  return v;
}

EffectiveChannels::EffectiveChannels(const ChannelSet& channels,
                                     const CMatrix& reflection,
                                     bool check_unitary)
    : num_cells_(channels.num_cells()), users_(channels.users_per_cell()) {
  if (check_unitary && unitarity_residual(reflection) > kUnitaryTolerance) {
    throw NumericalError("EffectiveChannels: reflection is not unitary");
  }
  h_.reserve(static_cast<std::size_t>(num_cells_ * num_cells_ * users_));
  // Phi * T is shared by every user of a BS.
  for (int b = 0; b < num_cells_; ++b) {
    const CMatrix phi_t = reflection * channels.bs_to_ris(b);
    for (int l = 0; l < num_cells_; ++l) {
      for (int k = 0; k < users_; ++k) {
        h_.push_back(channels.direct(b, l, k) +
                     channels.ris_to_user(l, k) * phi_t);
      }
    }
  }
}

CMatrix interference_covariance(const EffectiveChannels& h,
                                const SolverVariables& vars,
                                const ScenarioConfig& config, int cell,
                                int user) {
  const int nr = config.rx_antennas;
  CMatrix ups = config.noise_power_mw * CMatrix::Identity(nr, nr);
  for (int b = 0; b < config.num_cells; ++b) {
    for (int j = 0; j < config.users_per_cell; ++j) {
      if (b == cell && j == user) continue;
      const CMatrix x =
          h(b, cell, user) *
          vars.beamformers[static_cast<std::size_t>(config.user_index(b, j))];
      ups.noalias() += x * x.adjoint();
    }
  }
  return hermitian_part(ups);
}

CMatrix interference_covariance(const SolverVariables& vars,
                                const ChannelSet& channels,
                                const ScenarioConfig& config, int cell,
                                int user) {
  return interference_covariance(EffectiveChannels(channels, vars.reflection),
                                 vars, config, cell, user);
}

double user_rate(const EffectiveChannels& h, const SolverVariables& vars,
                 const ScenarioConfig& config, int cell, int user) {
  const CMatrix ups = interference_covariance(h, vars, config, cell, user);
  Eigen::LLT<CMatrix> llt(ups);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("user_rate: interference covariance is singular");
  }
  const CMatrix signal =
      h(cell, cell, user) *
      vars.beamformers[static_cast<std::size_t>(config.user_index(cell, user))];
  const CMatrix whitened = llt.matrixL().solve(signal);
  const CMatrix m = CMatrix::Identity(signal.cols(), signal.cols()) +
                    whitened.adjoint() * whitened;
  return std::max(0.0, logdet_hpd(hermitian_part(m)) / std::numbers::ln2);
}

double user_rate(const SolverVariables& vars, const ChannelSet& channels,
                 const ScenarioConfig& config, int cell, int user) {
  return user_rate(EffectiveChannels(channels, vars.reflection), vars, config,
                   cell, user);
}

double weighted_sum_rate(const EffectiveChannels& h,
                         const SolverVariables& vars,
                         const ScenarioConfig& config) {
  double acc = 0.0;
  for (int l = 0; l < config.num_cells; ++l) {
    for (int k = 0; k < config.users_per_cell; ++k) {
      const double a = config.weight(l, k);
      if (a == 0.0) continue;
      acc += a * user_rate(h, vars, config, l, k);
    }
  }
  return acc;
}

double weighted_sum_rate(const SolverVariables& vars,
                         const ChannelSet& channels,
                         const ScenarioConfig& config) {
  return weighted_sum_rate(EffectiveChannels(channels, vars.reflection), vars,
                           config);
}

CMatrix mse_matrix(const EffectiveChannels& h, const SolverVariables& vars,
                   const ScenarioConfig& config, int cell, int user) {
  const auto idx = static_cast<std::size_t>(config.user_index(cell, user));
  const CMatrix& u = vars.decoders[idx];
  const int ns = config.num_streams;
  const CMatrix eye = CMatrix::Identity(ns, ns);
  const CMatrix d = u.adjoint() * h(cell, cell, user) * vars.beamformers[idx] - eye;
  CMatrix e = d * d.adjoint() + config.noise_power_mw * (u.adjoint() * u);
  for (int b = 0; b < config.num_cells; ++b) {
    for (int j = 0; j < config.users_per_cell; ++j) {
      if (b == cell && j == user) continue;
      const CMatrix x =
          u.adjoint() * h(b, cell, user) *
          vars.beamformers[static_cast<std::size_t>(config.user_index(b, j))];
      e.noalias() += x * x.adjoint();
    }
  }
  return hermitian_part(e);
}

CMatrix mse_matrix(const SolverVariables& vars, const ChannelSet& channels,
                   const ScenarioConfig& config, int cell, int user) {
  return mse_matrix(EffectiveChannels(channels, vars.reflection), vars, config,
                    cell, user);
}

double bs_power(const SolverVariables& vars, const ScenarioConfig& config,
                int cell) {
  double p = 0.0;
  for (int k = 0; k < config.users_per_cell; ++k) {
    p += vars.beamformers[static_cast<std::size_t>(config.user_index(cell, k))]
             .squaredNorm();
  }
  return p;
}

bool FeasibilityReport::feasible(const ScenarioConfig& config,
                                 double unitary_tol,
                                 double rel_power_tol) const {
  if (!(unitarity_residual <= unitary_tol)) return false;
  for (std::size_t l = 0; l < power_used.size(); ++l) {
    if (!(power_used[l] <= config.tx_power_mw[l] * (1.0 + rel_power_tol))) {
      return false;
    }
  }
  return true;
}

FeasibilityReport check_feasibility(const SolverVariables& vars,
                                    const ScenarioConfig& config) {
  FeasibilityReport r;
  r.unitarity_residual = unitarity_residual(vars.reflection);
  for (int l = 0; l < config.num_cells; ++l) {
    const double used = bs_power(vars, config, l);
    r.power_used.push_back(used);
    r.power_slack.push_back(config.tx_power_mw[static_cast<std::size_t>(l)] -
                            used);
  }
  return r;
}

}  // namespace bdris
