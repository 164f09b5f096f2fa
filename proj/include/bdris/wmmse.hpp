#pragma once

#include <optional>
#include <vector>

#include "bdris/channel.hpp"
#include "bdris/manifold.hpp"
#include "bdris/scenario.hpp"
#include "bdris/system_model.hpp"

namespace bdris {

enum class InitStrategy {
  kIdentityReflection,       // Phi0 = I
  kRandomUnitaryReflection,  // Phi0 = Q factor of a random matrix
};

/// How the reflection block is handled inside the AO loop.
enum class ReflectionMode {
  kUnitary,   // one unitary block per surface (see ScenarioConfig::surfaces)
  kDiagonal,  // unit-modulus diagonal
  kFixed,     // never updated
};

struct SolverOptions {
  int max_ao_iters = 500;
  /// Stop once |R_t - R_{t-1}| <= ao_rel_tol * |R_{t-1}|.
  double ao_rel_tol = 1e-4;
  double bisection_tol = 1e-12;
  int max_bisection_iters = 200;
  ManifoldOptions manifold;
  InitStrategy init = InitStrategy::kIdentityReflection;
  ReflectionMode reflection_mode = ReflectionMode::kUnitary;
  /// Explicit starting reflection; overrides `init` when set.
  std::optional<CMatrix> initial_reflection;
  /// Explicit starting beamformers; overrides the random draw when set.
  std::optional<std::vector<CMatrix>> initial_beamformers;
  /// Abort when any block update raises the WMMSE objective by more than
  /// monotone_tol.
  bool check_monotone = true;
  double monotone_tol = 1e-9;
  /// Eigenvalue floor below which E is ridge-regularized before inversion.
  double weight_ridge = 1e-12;

  void validate() const;
};

struct IterationRecord {
  int iteration = 0;
  double weighted_sum_rate = 0.0;  // bps/Hz
  double wmmse_objective = 0.0;    // after the last block update
  double unitarity_residual = 0.0;
  std::vector<double> bs_power;  // mW
  int manifold_iters = 0;
};

struct IterationTrace {
  std::vector<IterationRecord> records;  // records[0] is the initial point
  bool converged = false;
  int ao_iterations = 0;
  int weight_regularizations = 0;
  int bisection_warnings = 0;
  int manifold_stalls = 0;
  /// Largest unitarity residual observed after any reflection update.
  double max_unitarity_residual = 0.0;
  /// Largest relative mismatch between sum alpha log2 det W and the weighted
  /// sum rate observed right after a (U, W) update.
  double max_rate_identity_error = 0.0;
  /// Largest increase of the WMMSE objective over any single block update.
  double max_objective_increase = 0.0;
};

struct AoResult {
  SolverVariables vars;
  IterationTrace trace;
  double weighted_sum_rate = 0.0;
};

struct DualSolution {
  double mu = 0.0;
  double power = 0.0;     // sum_n C_nn / (Lambda_nn + mu)^2
  double residual = 0.0;  // |power - P| when the constraint is active
  int iterations = 0;
  bool active = false;
  bool converged = true;
};

/// U_{l,k} = J^-1 H F with J = Upsilon + H F F^H H^H.
std::vector<CMatrix> update_decoders(const EffectiveChannels& h,
                                     const SolverVariables& vars,
                                     const ScenarioConfig& config);
std::vector<CMatrix> update_decoders(const SolverVariables& vars,
                                     const ChannelSet& channels,
                                     const ScenarioConfig& config);

/// W = E^-1; E is ridge-regularized when its smallest eigenvalue is below
/// `ridge`, counted in `regularizations` when provided.
std::vector<CMatrix> update_weights(const EffectiveChannels& h,
                                    const SolverVariables& vars,
                                    const ScenarioConfig& config,
                                    double ridge = 1e-12,
                                    int* regularizations = nullptr);
std::vector<CMatrix> update_weights(const SolverVariables& vars,
                                    const ChannelSet& channels,
                                    const ScenarioConfig& config);

/// Smallest mu >= 0 with sum_n c_n / (lambda_n + mu)^2 <= P. Bisection over
/// [0, sqrt(sum c / P)]; mu = 0 when the unconstrained point is feasible.
DualSolution solve_dual_mu(const RVector& eigenvalues,
                           const RVector& diag_weights, double power_budget,
                           double tol = 1e-12, int max_iters = 200);

/// Minimizes the per-BS WMMSE subproblem via its Lagrange dual, independently
/// for each BS. `duals` receives one DualSolution per BS when provided.
std::vector<CMatrix> update_beamformers(const EffectiveChannels& h,
                                        const SolverVariables& vars,
                                        const ScenarioConfig& config,
                                        const SolverOptions& options,
                                        std::vector<DualSolution>* duals =
                                            nullptr);
std::vector<CMatrix> update_beamformers(const SolverVariables& vars,
                                        const ChannelSet& channels,
                                        const ScenarioConfig& config,
                                        const SolverOptions& options);

/// sum alpha (tr(W E) - ln det W). Natural log, so that W = E^-1 is the exact
/// minimizer over W. Throws NumericalError for a non-PD weight.
double wmmse_objective(const EffectiveChannels& h, const SolverVariables& vars,
                       const ScenarioConfig& config);
double wmmse_objective(const SolverVariables& vars, const ChannelSet& channels,
                       const ScenarioConfig& config);

/// Per-BS subproblem value f_l(F_l) (without constants) and the Lagrangian
/// gradient (Q_l + mu I) F_{l,k} - alpha H^H U W for each user of BS `cell`.
double beamformer_subproblem_value(const EffectiveChannels& h,
                                   const SolverVariables& vars,
                                   const ScenarioConfig& config, int cell);

/// Q_l = sum_{l',k'} alpha H_{l,l',k'}^H U W U^H H_{l,l',k'}.
CMatrix beamformer_quadratic(const EffectiveChannels& h,
                             const SolverVariables& vars,
                             const ScenarioConfig& config, int cell);

/// Random beamformers scaled so each BS transmits exactly P_l, split equally
/// across its users.
std::vector<CMatrix> random_feasible_beamformers(const ScenarioConfig& config,
                                                 Rng& rng);

/// Alternating optimization: U, W, F, then the reflection inner loop, until
/// the relative change of the weighted sum rate drops below ao_rel_tol.
AoResult run_ao(const ChannelSet& channels, const ScenarioConfig& config,
                const SolverOptions& options, Rng& rng);

}  // namespace bdris
