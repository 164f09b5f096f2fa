#pragma once

#include <vector>

#include "bdris/channel.hpp"
#include "bdris/linalg.hpp"
#include "bdris/scenario.hpp"
#include "bdris/system_model.hpp"

namespace bdris {

/// g(Phi) = tr(A1 Phi A2 Phi^H) + 2 Re tr(B Phi) + offset, with B = B1 + B2.
///
/// For fixed (F, U, W) this equals sum_{l,k} alpha_{l,k} tr(W_{l,k} E_{l,k})
/// as a function of the reflection matrix.
struct QuadraticReflectionObjective {
  CMatrix a1;  // sum alpha R^H U W U^H R
  CMatrix a2;  // sum T F F^H T^H
  CMatrix b1;  // cross terms with the direct links
  CMatrix b2;  // cross terms with the desired symbols
  CMatrix b;   // b1 + b2
  double offset = 0.0;

  Eigen::Index size() const { return a1.rows(); }
  double value(const CMatrix& phi) const;
};

struct ManifoldOptions {
  int max_iters = 100;
  /// Stop once ||grad_R|| <= grad_tol * max(1, ||grad_E(Phi0)||).
  double grad_tol = 1e-6;
  /// First trial step; <= 0 selects 1 / max(1, ||lifted gradient||).
  double armijo_init_step = 0.0;
  double armijo_shrink = 0.5;
  double armijo_slope = 1e-4;
  int max_backtracks = 30;
  int reunitarize_every = 20;
  /// After an accepted step the next trial starts at step / shrink, bounded so
  /// that the rotation angle stays below pi.
  bool grow_step = true;
  /// Use the Barzilai-Borwein step of the lifted gradients (which all live in
  /// the Lie algebra at the identity) as the first trial when available.
  /// Takes precedence over grow_step.
  bool bb_step = true;

  void validate() const;
};

struct ReflectionResult {
  CMatrix phi;
  double initial_value = 0.0;
  double final_value = 0.0;
  int iterations = 0;
  int accepted_steps = 0;
  double final_grad_norm = 0.0;
  double last_step = 0.0;
  bool converged = false;
  bool stalled = false;
  /// Largest unitarity residual seen before each re-unitarization and at exit.
  double max_unitarity_residual = 0.0;
};

QuadraticReflectionObjective assemble_objective(const SolverVariables& vars,
                                                const ChannelSet& channels,
                                                const ScenarioConfig& config);

/// Conjugate Wirtinger derivative dg/dPhi* = A1 Phi A2 + B^H, normalized so
/// that dg = 2 Re tr(grad^H dPhi).
CMatrix euclidean_gradient(const QuadraticReflectionObjective& obj,
                           const CMatrix& phi);

/// grad - Phi grad^H Phi. Throws NumericalError for non-unitary Phi.
CMatrix riemannian_gradient(const CMatrix& grad, const CMatrix& phi);

/// grad Phi^H - Phi grad^H, anti-symmetrized.
CMatrix lifted_gradient(const CMatrix& grad, const CMatrix& phi);

/// exp(S) for skew-Hermitian S via the eigendecomposition of i*S.
CMatrix expm_skew_hermitian(const CMatrix& s);

/// Geodesic steepest descent with Armijo backtracking over block-diagonal
/// unitary matrices. `blocks` lists the block sizes (summing to M); an empty
/// list means a single M x M block. Blocks of size one give the diagonal
/// unit-modulus (product of circles) case.
ReflectionResult optimize_reflection(const QuadraticReflectionObjective& obj,
                                     const CMatrix& phi0,
                                     const ManifoldOptions& options,
                                     const std::vector<int>& blocks = {},
                                     double step_hint = 0.0);

/// Zeroes every entry outside the diagonal blocks.
CMatrix block_diagonal_part(const CMatrix& x, const std::vector<int>& blocks);

}  // namespace bdris
