#include <gtest/gtest.h>

#include <cmath>

#include "bdris/system_model.hpp"
#include "test_support.hpp"

using namespace bdris;
using namespace bdris::testing;

namespace {

struct Instance {
  ScenarioConfig config;
  ChannelSet channels;
  SolverVariables vars;
};

Instance make_instance(int cells, int users, int nt, int nr, int ns, int m,
                       std::uint64_t seed) {
  Instance in;
  in.config = small_config(cells, users, nt, nr, ns, m);
  in.config.noise_power_mw = 0.3;
  Rng rng(seed);
  in.channels = unit_channels(in.config, rng);
  in.vars = random_vars(in.config, rng);
  return in;
}

// log2 det(I + H F F^H H^H Upsilon^-1) through the eigenvalues of the full
// (non-Hermitian) product.
double eig_rate(const CMatrix& h, const CMatrix& f, const CMatrix& ups) {
  const Eigen::Index n = h.rows();
  const CMatrix m = CMatrix::Identity(n, n) +
                    h * f * f.adjoint() * h.adjoint() * ups.inverse();
  Eigen::ComplexEigenSolver<CMatrix> es(m);
  Complex acc = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) acc += std::log(es.eigenvalues()(i));
  return acc.real() / std::log(2.0);
}

}  // namespace

TEST(Interference, NoInterferersGivesNoise) {
  Instance in = make_instance(1, 1, 3, 2, 2, 4, 1);
  const CMatrix ups = interference_covariance(in.vars, in.channels, in.config, 0, 0);
  EXPECT_LT((ups - 0.3 * CMatrix::Identity(2, 2)).norm(), 1e-15);
}

TEST(Interference, ZeroBeamformersGiveNoise) {
  Instance in = make_instance(2, 2, 4, 2, 2, 6, 2);
  for (auto& f : in.vars.beamformers) f.setZero();
  for (int l = 0; l < 2; ++l)
    for (int k = 0; k < 2; ++k) {
      const CMatrix ups =
          interference_covariance(in.vars, in.channels, in.config, l, k);
      EXPECT_LT((ups - 0.3 * CMatrix::Identity(2, 2)).norm(), 1e-15);
    }
}

TEST(Interference, MatchesDoubleLoop) {
  Instance in = make_instance(2, 3, 4, 2, 2, 5, 3);
  const auto& c = in.config;
  for (int l = 0; l < c.num_cells; ++l)
    for (int k = 0; k < c.users_per_cell; ++k) {
      CMatrix expect = c.noise_power_mw * CMatrix::Identity(2, 2);
      for (int lp = 0; lp < c.num_cells; ++lp)
        for (int kp = 0; kp < c.users_per_cell; ++kp) {
          if (lp == l && kp == k) continue;
          const CMatrix h =
              in.channels.direct(lp, l, k) +
              in.channels.ris_to_user(l, k) * in.vars.reflection *
                  in.channels.bs_to_ris(lp);
          const CMatrix& f =
              in.vars.beamformers[static_cast<std::size_t>(c.user_index(lp, kp))];
          expect += h * f * f.adjoint() * h.adjoint();
        }
      const CMatrix got = interference_covariance(in.vars, in.channels, c, l, k);
      EXPECT_LT((got - expect).norm(), 1e-12 * expect.norm());
    }
}

TEST(UserRate, ZeroBeamformerGivesZero) {
  Instance in = make_instance(2, 2, 4, 2, 2, 4, 4);
  in.vars.beamformers[1].setZero();
  EXPECT_NEAR(user_rate(in.vars, in.channels, in.config, 0, 1), 0.0, 1e-14);
}

TEST(UserRate, ScalarUnitSnr) {
  ScenarioConfig c = small_config(1, 1, 1, 1, 1, 1);
  c.noise_power_mw = 0.25;
  ChannelSet ch(1, 1, 1, 1, 1);
  ch.direct(0, 0, 0) = CMatrix::Constant(1, 1, Complex(0.3, 0.4));
  ch.bs_to_ris(0) = CMatrix::Zero(1, 1);
  ch.ris_to_user(0, 0) = CMatrix::Zero(1, 1);
  ch.user_positions.assign(1, Point(0, 0));
  SolverVariables v = SolverVariables::zeros(c);
  v.beamformers[0] = CMatrix::Constant(1, 1, Complex(0.0, 1.0));  // |h f|^2 = 0.25
  EXPECT_NEAR(user_rate(v, ch, c, 0, 0), 1.0, 1e-14);
}

TEST(UserRate, MatchesEigenvalueOracle) {
  Instance in = make_instance(2, 2, 2, 2, 2, 3, 5);
  const EffectiveChannels h(in.channels, in.vars.reflection);
  for (int l = 0; l < 2; ++l)
    for (int k = 0; k < 2; ++k) {
      const CMatrix ups = interference_covariance(h, in.vars, in.config, l, k);
      const double expect = eig_rate(
          h(l, l, k), in.vars.beamformers[static_cast<std::size_t>(in.config.user_index(l, k))],
          ups);
      EXPECT_NEAR(user_rate(h, in.vars, in.config, l, k), expect, 1e-10);
    }
}

TEST(UserRate, InvariantToRightUnitaryRotation) {
  Instance in = make_instance(2, 2, 4, 2, 2, 4, 6);
  const double before = weighted_sum_rate(in.vars, in.channels, in.config);
  Rng rng(60);
  for (auto& f : in.vars.beamformers) f = f * random_unitary_qr(2, rng);
  EXPECT_NEAR(weighted_sum_rate(in.vars, in.channels, in.config), before, 1e-10);
}

TEST(WeightedSumRate, ZeroWeightsAndSingleUser) {
  Instance in = make_instance(2, 2, 4, 2, 2, 4, 7);
  in.config.weights.assign(4, 0.0);
  EXPECT_EQ(weighted_sum_rate(in.vars, in.channels, in.config), 0.0);

  Instance one = make_instance(1, 1, 3, 2, 2, 4, 8);
  EXPECT_DOUBLE_EQ(weighted_sum_rate(one.vars, one.channels, one.config),
                   user_rate(one.vars, one.channels, one.config, 0, 0));
}

TEST(WeightedSumRate, MatchesTermwiseSum) {
  Instance in = make_instance(2, 2, 4, 2, 2, 6, 9);
  in.config.weights = {1.0, 0.5, 2.0, 0.25};
  double expect = 0.0;
  for (int l = 0; l < 2; ++l)
    for (int k = 0; k < 2; ++k)
      expect += in.config.weight(l, k) * user_rate(in.vars, in.channels, in.config, l, k);
  EXPECT_NEAR(weighted_sum_rate(in.vars, in.channels, in.config), expect, 1e-12);
}

TEST(Mse, ZeroDecoderGivesIdentity) {
  Instance in = make_instance(2, 2, 4, 2, 2, 4, 10);
  for (auto& u : in.vars.decoders) u.setZero();
  const CMatrix e = mse_matrix(in.vars, in.channels, in.config, 1, 0);
  EXPECT_LT((e - CMatrix::Identity(2, 2)).norm(), 1e-15);
}

TEST(Mse, ZeroForcingWithoutNoiseIsZero) {
  ScenarioConfig c = small_config(1, 1, 2, 2, 2, 2);
  Rng rng(11);
  ChannelSet ch = unit_channels(c, rng);
  c.noise_power_mw = 1e-300;
  SolverVariables v = SolverVariables::zeros(c);
  v.beamformers[0] = random_cmatrix(2, 2, rng);
  const CMatrix h = effective_channel(ch.direct(0, 0, 0), ch.ris_to_user(0, 0),
                                      v.reflection, ch.bs_to_ris(0));
  v.decoders[0] = (h * v.beamformers[0]).inverse().adjoint();
  EXPECT_LT(mse_matrix(v, ch, c, 0, 0).norm(), 1e-12);
}

TEST(Mse, MatchesExpansion) {
  Instance in = make_instance(2, 2, 4, 2, 2, 5, 12);
  const auto& c = in.config;
  const EffectiveChannels h(in.channels, in.vars.reflection);
  for (int l = 0; l < 2; ++l)
    for (int k = 0; k < 2; ++k) {
      const auto i = static_cast<std::size_t>(c.user_index(l, k));
      CMatrix j = c.noise_power_mw * CMatrix::Identity(2, 2);
      for (int lp = 0; lp < 2; ++lp)
        for (int kp = 0; kp < 2; ++kp) {
          const CMatrix x =
              h(lp, l, k) * in.vars.beamformers[static_cast<std::size_t>(c.user_index(lp, kp))];
          j += x * x.adjoint();
        }
      const CMatrix& u = in.vars.decoders[i];
      const CMatrix hf = h(l, l, k) * in.vars.beamformers[i];
      const CMatrix expect = u.adjoint() * j * u - u.adjoint() * hf -
                             hf.adjoint() * u + CMatrix::Identity(2, 2);
      const CMatrix got = mse_matrix(h, in.vars, c, l, k);
      EXPECT_LT((got - expect).norm(), 1e-12 * expect.norm());
      EXPECT_LT((got - got.adjoint()).norm(), 1e-15 * got.norm());
    }
}

TEST(Feasibility, IdentityAndZeroBeamformers) {
  const ScenarioConfig c = default_scenario();
  const SolverVariables v = SolverVariables::zeros(c);
  const FeasibilityReport r = check_feasibility(v, c);
  EXPECT_EQ(r.unitarity_residual, 0.0);
  for (int l = 0; l < 2; ++l) {
    EXPECT_EQ(r.power_used[static_cast<std::size_t>(l)], 0.0);
    EXPECT_EQ(r.power_slack[static_cast<std::size_t>(l)], c.tx_power_mw[static_cast<std::size_t>(l)]);
  }
  EXPECT_TRUE(r.feasible(c));
}

TEST(Feasibility, PerturbedReflection) {
  const ScenarioConfig c = default_scenario();
  SolverVariables v = SolverVariables::zeros(c);
  v.reflection(3, 7) = 1e-3;
  // ||Phi^H Phi - I||_F for a single off-diagonal entry e: sqrt(2 e^2 + e^4).
  const double e = 1e-3;
  EXPECT_NEAR(check_feasibility(v, c).unitarity_residual,
              std::sqrt(2 * e * e + e * e * e * e), 1e-15);
  EXPECT_FALSE(check_feasibility(v, c).feasible(c));
}

TEST(Feasibility, ScaledToBudget) {
  const ScenarioConfig c = default_scenario();
  Rng rng(13);
  SolverVariables v = random_vars(c, rng);
  v.reflection = CMatrix::Identity(20, 20);
  for (int l = 0; l < 2; ++l) {
    const double s = std::sqrt(c.tx_power_mw[static_cast<std::size_t>(l)] / bs_power(v, c, l));
    for (int k = 0; k < 2; ++k)
      v.beamformers[static_cast<std::size_t>(c.user_index(l, k))] *= s;
  }
  const FeasibilityReport r = check_feasibility(v, c);
  for (double slack : r.power_slack) EXPECT_NEAR(slack, 0.0, 1e-12);
  EXPECT_TRUE(r.feasible(c));
  v.beamformers[0] *= 1.001;
  EXPECT_FALSE(check_feasibility(v, c).feasible(c));
}
