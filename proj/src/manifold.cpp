#include "bdris/manifold.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace bdris {

double QuadraticReflectionObjective::value(const CMatrix& phi) const {
  const CMatrix quad = a1 * phi * a2;
  const double q = quad.cwiseProduct(phi.conjugate()).sum().real();
  const double lin = b.transpose().cwiseProduct(phi).sum().real();
  return q + 2.0 * lin + offset;
}

void ManifoldOptions::validate() const {
  if (max_iters < 1 || max_backtracks < 1 || reunitarize_every < 1) {
    throw ConfigError("manifold options: iteration counts must be >= 1");
  }
  if (!(armijo_shrink > 0.0 && armijo_shrink < 1.0)) {
    throw ConfigError("manifold options: armijo_shrink must lie in (0, 1)");
  }
  if (!(armijo_slope > 0.0 && armijo_slope < 1.0)) {
    throw ConfigError("manifold options: armijo_slope must lie in (0, 1)");
  }
  if (!(grad_tol > 0.0)) {
    throw ConfigError("manifold options: grad_tol must be positive");
  }
}

QuadraticReflectionObjective assemble_objective(const SolverVariables& vars,
                                                const ChannelSet& channels,
                                                const ScenarioConfig& config) {
  const int L = config.num_cells;
  const int K = config.users_per_cell;
  const int m = config.ris_elements();
  const int nt = config.tx_antennas;

  QuadraticReflectionObjective obj;
  obj.a1 = CMatrix::Zero(m, m);
  obj.a2 = CMatrix::Zero(m, m);
  obj.b1 = CMatrix::Zero(m, m);
  obj.b2 = CMatrix::Zero(m, m);

  // Per-BS transmit covariance S_l = sum_k F F^H and T_l S_l.
  std::vector<CMatrix> cov(static_cast<std::size_t>(L));
  std::vector<CMatrix> t_cov(static_cast<std::size_t>(L));
  for (int l = 0; l < L; ++l) {
    CMatrix s = CMatrix::Zero(nt, nt);
    for (int k = 0; k < K; ++k) {
      const CMatrix& f =
          vars.beamformers[static_cast<std::size_t>(config.user_index(l, k))];
      s.noalias() += f * f.adjoint();
    }
    cov[static_cast<std::size_t>(l)] = s;
    t_cov[static_cast<std::size_t>(l)] = channels.bs_to_ris(l) * s;
    obj.a2.noalias() +=
        t_cov[static_cast<std::size_t>(l)] * channels.bs_to_ris(l).adjoint();
  }

  double offset = 0.0;
  for (int l = 0; l < L; ++l) {
    for (int k = 0; k < K; ++k) {
      const double alpha = config.weight(l, k);
      if (alpha == 0.0) continue;
      const auto idx = static_cast<std::size_t>(config.user_index(l, k));
      const CMatrix& u = vars.decoders[idx];
      const CMatrix& w = vars.weights[idx];
      const CMatrix& f = vars.beamformers[idx];
      const CMatrix& r = channels.ris_to_user(l, k);
      const CMatrix uw = u * w;
      const CMatrix g = uw * u.adjoint();  // U W U^H
      const CMatrix gr = g * r;

      obj.a1.noalias() += alpha * (r.adjoint() * gr);

      CMatrix v = CMatrix::Zero(m, config.rx_antennas);
      for (int b = 0; b < L; ++b) {
        const CMatrix& hbar = channels.direct(b, l, k);
        v.noalias() += t_cov[static_cast<std::size_t>(b)] * hbar.adjoint();
        const CMatrix x = u.adjoint() * hbar;  // Ns x Nt
        offset += alpha * (w * x * cov[static_cast<std::size_t>(b)] *
                           x.adjoint())
                              .trace()
                              .real();
      }
      obj.b1.noalias() += alpha * (v * gr);
      obj.b2.noalias() -= alpha * (channels.bs_to_ris(l) * f * uw.adjoint() * r);

      offset -= 2.0 * alpha *
                (w * u.adjoint() * channels.direct(l, l, k) * f).trace().real();
      offset += alpha * w.trace().real();
      offset += alpha * config.noise_power_mw *
                (w * u.adjoint() * u).trace().real();
    }
  }
  obj.a1 = hermitian_part(obj.a1);
  obj.a2 = hermitian_part(obj.a2);
  obj.b = obj.b1 + obj.b2;
  obj.offset = offset;
  return obj;
}

CMatrix euclidean_gradient(const QuadraticReflectionObjective& obj,
                           const CMatrix& phi) {
  require_dims(phi, obj.size(), obj.size(), "euclidean_gradient");
  return obj.a1 * phi * obj.a2 + obj.b.adjoint();
}

CMatrix riemannian_gradient(const CMatrix& grad, const CMatrix& phi) {
  if (unitarity_residual(phi) > kUnitaryTolerance) {
    throw NumericalError("riemannian_gradient: point is not unitary");
  }
  return grad - phi * grad.adjoint() * phi;
}

CMatrix lifted_gradient(const CMatrix& grad, const CMatrix& phi) {
  const CMatrix x = grad * phi.adjoint();
  return skew_part(x - x.adjoint());
}

CMatrix expm_skew_hermitian(const CMatrix& s) {
  const double scale = std::max(1.0, s.norm());
  if ((s + s.adjoint()).norm() > 1e-10 * scale) {
    throw NumericalError("expm_skew_hermitian: input is not skew-Hermitian");
  }
  // S = -i H with H = i S Hermitian, so exp(S) = V diag(exp(-i theta)) V^H.
  const CMatrix h = hermitian_part(kI * s);
  Eigen::SelfAdjointEigenSolver<CMatrix> eig(h);
  if (eig.info() != Eigen::Success) {
    throw NumericalError("expm_skew_hermitian: eigendecomposition failed");
  }
  const RVector& theta = eig.eigenvalues();
  CVector phase(theta.size());
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    phase(i) = std::polar(1.0, -theta(i));
  }
  const CMatrix& v = eig.eigenvectors();
  return v * phase.asDiagonal() * v.adjoint();
}

CMatrix block_diagonal_part(const CMatrix& x, const std::vector<int>& blocks) {
  if (blocks.empty() || blocks.size() == 1) return x;
  CMatrix out = CMatrix::Zero(x.rows(), x.cols());
  Eigen::Index at = 0;
  for (int size : blocks) {
    out.block(at, at, size, size) = x.block(at, at, size, size);
    at += size;
  }
  return out;
}

namespace {

// PSD factor X with X X^H = A, keeping eigenvalues above a relative floor.
CMatrix psd_factor(const CMatrix& a) {
  Eigen::SelfAdjointEigenSolver<CMatrix> eig(hermitian_part(a));
  if (eig.info() != Eigen::Success) {
    throw NumericalError("optimize_reflection: eigendecomposition failed");
  }
  const RVector& lam = eig.eigenvalues();
  const double floor = 1e-15 * std::max(lam.cwiseAbs().maxCoeff(), 0.0);
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < lam.size(); ++i) {
    if (lam(i) > floor) keep.push_back(i);
  }
  CMatrix x(a.rows(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t j = 0; j < keep.size(); ++j) {
    x.col(static_cast<Eigen::Index>(j)) =
        eig.eigenvectors().col(keep[j]) * std::sqrt(lam(keep[j]));
  }
  return x;
}

// g(Phi) = ||X^H Phi Y||^2 + 2 Re tr(B Phi) + offset with A1 = X X^H and
// A2 = Y Y^H; the quadratic terms are typically of low rank.
class FactoredObjective {
 public:
  explicit FactoredObjective(const QuadraticReflectionObjective& obj)
      : x_(psd_factor(obj.a1)),
        y_(psd_factor(obj.a2)),
        bt_(obj.b.transpose()),
        offset_(obj.offset) {}

  double value(const CMatrix& phi) const {
    const CMatrix z = x_.adjoint() * phi * y_;
    return z.squaredNorm() + 2.0 * bt_.cwiseProduct(phi).sum().real() + offset_;
  }

  CMatrix gradient(const CMatrix& phi) const {
    const CMatrix z = x_.adjoint() * phi * y_;
    return x_ * z * y_.adjoint() + bt_.conjugate();
  }

 private:
  CMatrix x_;
  CMatrix y_;
  CMatrix bt_;
  double offset_;
};

// Eigendecomposition of i*S per diagonal block, so that exp(-t S) Phi can be
// evaluated for many step sizes t at the cost of one decomposition.
class BlockGeodesic {
 public:
  BlockGeodesic(const CMatrix& s, const CMatrix& phi,
                const std::vector<int>& blocks) {
    const std::vector<int> sizes =
        blocks.size() <= 1 ? std::vector<int>{static_cast<int>(s.rows())} : blocks;
    Eigen::Index at = 0;
    for (int size : sizes) {
      Block blk;
      blk.at = at;
      blk.size = size;
      if (size == 1) {
        blk.theta = RVector::Constant(1, s(at, at).imag());
        blk.rows = phi.row(at);
      } else {
        const CMatrix h = hermitian_part(kI * s.block(at, at, size, size));
        Eigen::SelfAdjointEigenSolver<CMatrix> eig(h);
        if (eig.info() != Eigen::Success) {
          throw NumericalError("optimize_reflection: eigendecomposition failed");
        }
        // i S = V diag(-theta) V^H with theta the phases of exp(S).
        blk.theta = -eig.eigenvalues();
        blk.vectors = eig.eigenvectors();
        blk.rows = blk.vectors.adjoint() * phi.middleRows(at, size);
      }
      blocks_.push_back(std::move(blk));
      at += size;
    }
    dim_ = at;
    cols_ = phi.cols();
  }

  // exp(-t S) Phi.
  CMatrix apply(double t) const {
    CMatrix out(dim_, cols_);
    for (const Block& blk : blocks_) {
      if (blk.size == 1) {
        out.row(blk.at) = std::polar(1.0, -t * blk.theta(0)) * blk.rows;
        continue;
      }
      CVector phase(blk.size);
      for (int i = 0; i < blk.size; ++i) phase(i) = std::polar(1.0, -t * blk.theta(i));
      out.middleRows(blk.at, blk.size).noalias() =
          blk.vectors * (phase.asDiagonal() * blk.rows);
    }
    return out;
  }

 private:
  struct Block {
    Eigen::Index at = 0;
    int size = 0;
    RVector theta;
    CMatrix vectors;
    CMatrix rows;  // V^H times the matching rows of Phi
  };
  std::vector<Block> blocks_;
  Eigen::Index dim_ = 0;
  Eigen::Index cols_ = 0;
};

CMatrix block_nearest_unitary(const CMatrix& x, const std::vector<int>& blocks) {
  if (blocks.size() <= 1) return nearest_unitary(x);
  CMatrix out = CMatrix::Zero(x.rows(), x.cols());
  Eigen::Index at = 0;
  for (int size : blocks) {
    if (size == 1) {
      const Complex z = x(at, at);
      out(at, at) = std::abs(z) > 0.0 ? z / std::abs(z) : Complex(1.0, 0.0);
    } else {
      out.block(at, at, size, size) =
          nearest_unitary(x.block(at, at, size, size));
    }
    at += size;
  }
  return out;
}

}  // namespace

ReflectionResult optimize_reflection(const QuadraticReflectionObjective& obj,
                                     const CMatrix& phi0,
                                     const ManifoldOptions& options,
                                     const std::vector<int>& blocks,
                                     double step_hint) {
  options.validate();
  const Eigen::Index m = obj.size();
  require_dims(phi0, m, m, "optimize_reflection: initial point");
  if (unitarity_residual(phi0) > kUnitaryTolerance) {
    throw NumericalError("optimize_reflection: initial point is not unitary");
  }
  if (!blocks.empty()) {
    Eigen::Index total = 0;
    for (int b : blocks) {
      if (b < 1) throw DimensionError("optimize_reflection: empty block");
      total += b;
    }
    if (total != m) {
      throw DimensionError("optimize_reflection: block sizes do not sum to M");
    }
    if (block_diagonal_part(phi0, blocks) != phi0) {
      throw NumericalError(
          "optimize_reflection: initial point violates the block structure");
    }
  }

  ReflectionResult res;
  res.phi = phi0;
  const FactoredObjective fobj(obj);
  double value = fobj.value(phi0);
  res.initial_value = value;

  const CMatrix grad0 = block_diagonal_part(fobj.gradient(phi0), blocks);
  const double tol = options.grad_tol * std::max(1.0, grad0.norm());
  double step = step_hint;
  int since_polar = 0;
  CMatrix prev_lifted;
  bool have_prev = false;

  for (int it = 0; it < options.max_iters; ++it) {
    res.iterations = it + 1;
    const CMatrix grad =
        block_diagonal_part(fobj.gradient(res.phi), blocks);
    const CMatrix lifted = lifted_gradient(grad, res.phi);
    // ||grad_R||_F = ||lifted * Phi||_F = ||lifted||_F for unitary Phi.
    const double gnorm = lifted.norm();
    res.final_grad_norm = gnorm;
    if (gnorm <= tol) {
      res.converged = true;
      break;
    }

    const double max_step = std::numbers::pi / gnorm;
    double trial;
    if (options.armijo_init_step > 0.0) {
      trial = options.armijo_init_step;
    } else {
      trial = 1.0 / std::max(1.0, gnorm);
    }
    if (options.grow_step && step > 0.0) trial = step / options.armijo_shrink;
    if (options.bb_step && have_prev) {
      // s = -step * prev_lifted, y = lifted - prev_lifted; trial = <s,s>/<s,y>.
      const double ss = step * step * prev_lifted.squaredNorm();
      const double sy =
          -step * (prev_lifted.cwiseProduct((lifted - prev_lifted).conjugate()))
                      .sum()
                      .real();
      if (sy > 0.0) trial = ss / sy;
    }
    trial = std::min(trial, max_step);

    const double slope = gnorm * gnorm;
    bool accepted = false;
    const BlockGeodesic geodesic(lifted, res.phi, blocks);
    for (int bt = 0; bt < options.max_backtracks; ++bt) {
      CMatrix candidate = geodesic.apply(trial);
      const double cand_value = fobj.value(candidate);
      if (cand_value <= value - options.armijo_slope * trial * slope) {
        res.phi = std::move(candidate);
        value = cand_value;
        accepted = true;
        break;
      }
      trial *= options.armijo_shrink;
    }
    if (!accepted) {
      res.stalled = true;
      break;
    }
    step = trial;
    prev_lifted = lifted;
    have_prev = true;
    ++res.accepted_steps;
    if (++since_polar >= options.reunitarize_every) {
      // Drift accumulates between projections, so the residual just before
      // one bounds the residual of every step since the previous one.
      res.max_unitarity_residual =
          std::max(res.max_unitarity_residual, unitarity_residual(res.phi));
      res.phi = block_nearest_unitary(res.phi, blocks);
      value = fobj.value(res.phi);
      since_polar = 0;
    }
  }
  res.max_unitarity_residual =
      std::max(res.max_unitarity_residual, unitarity_residual(res.phi));
  res.final_value = value;
  res.last_step = step;
  return res;
}

}  // namespace bdris
