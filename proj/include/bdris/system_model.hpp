#pragma once

#include <vector>

#include "bdris/channel.hpp"
#include "bdris/linalg.hpp"
#include "bdris/scenario.hpp"

namespace bdris {

/// Current iterate of the joint design. Per-user blocks are indexed by
/// ScenarioConfig::user_index(cell, user).
struct SolverVariables {
  std::vector<CMatrix> beamformers;  // F, Nt x Ns
  CMatrix reflection;                // Phi, M x M
  std::vector<CMatrix> decoders;     // U, Nr x Ns
  std::vector<CMatrix> weights;      // W, Ns x Ns

  /// F = 0, Phi = I, U = 0, W = I.
  static SolverVariables zeros(const ScenarioConfig& config);
};

/// All L^2 K effective channels H(bs, cell, user) for one reflection matrix.
class EffectiveChannels {
 public:
  EffectiveChannels(const ChannelSet& channels, const CMatrix& reflection,
                    bool check_unitary = true);

  const CMatrix& operator()(int bs, int cell, int user) const {
    return h_[static_cast<std::size_t>((bs * num_cells_ + cell) * users_ +
                                       user)];
  }
  int num_cells() const { return num_cells_; }
  int users_per_cell() const { return users_; }

 private:
  int num_cells_;
  int users_;
  std::vector<CMatrix> h_;
};

/// sum_{(l',k') != (l,k)} H F F^H H^H + noise * I.
CMatrix interference_covariance(const EffectiveChannels& h,
                                const SolverVariables& vars,
                                const ScenarioConfig& config, int cell,
                                int user);
CMatrix interference_covariance(const SolverVariables& vars,
                                const ChannelSet& channels,
                                const ScenarioConfig& config, int cell,
                                int user);

/// log2 det(I + H F F^H H^H Upsilon^-1) in bps/Hz.
double user_rate(const EffectiveChannels& h, const SolverVariables& vars,
                 const ScenarioConfig& config, int cell, int user);
double user_rate(const SolverVariables& vars, const ChannelSet& channels,
                 const ScenarioConfig& config, int cell, int user);

double weighted_sum_rate(const EffectiveChannels& h,
                         const SolverVariables& vars,
                         const ScenarioConfig& config);
double weighted_sum_rate(const SolverVariables& vars,
                         const ChannelSet& channels,
                         const ScenarioConfig& config);

/// MSE matrix of the linear receiver U for user (cell, user), returned
/// Hermitian.
CMatrix mse_matrix(const EffectiveChannels& h, const SolverVariables& vars,
                   const ScenarioConfig& config, int cell, int user);
CMatrix mse_matrix(const SolverVariables& vars, const ChannelSet& channels,
                   const ScenarioConfig& config, int cell, int user);

struct FeasibilityReport {
  double unitarity_residual = 0.0;  // ||Phi^H Phi - I||_F
  std::vector<double> power_used;   // per BS, mW
  std::vector<double> power_slack;  // P_l - used

  /// Unitarity within `unitary_tol` and every BS within P_l (1 + rel_power_tol).
  bool feasible(const ScenarioConfig& config, double unitary_tol = 1e-8,
                double rel_power_tol = 1e-9) const;
};

FeasibilityReport check_feasibility(const SolverVariables& vars,
                                    const ScenarioConfig& config);

/// sum_k ||F_{l,k}||_F^2 for BS `cell`.
double bs_power(const SolverVariables& vars, const ScenarioConfig& config,
                int cell);

}  // namespace bdris
