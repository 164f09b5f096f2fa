#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "bdris/wmmse.hpp"
#include "oracles.hpp"
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
                       std::uint64_t seed, double noise = 0.3) {
  Instance in;
  in.config = small_config(cells, users, nt, nr, ns, m);
  in.config.noise_power_mw = noise;
  Rng rng(seed);
  in.channels = unit_channels(in.config, rng);
  in.vars = random_vars(in.config, rng);
  return in;
}

double weighted_trace(const EffectiveChannels& h, const SolverVariables& v,
                      const ScenarioConfig& c, int l, int k) {
  return (v.weights[static_cast<std::size_t>(c.user_index(l, k))] *
          mse_matrix(h, v, c, l, k))
      .trace()
      .real();
}

oracle::BeamformerProblem subproblem(const EffectiveChannels& h,
                                     const SolverVariables& v,
                                     const ScenarioConfig& c, int l) {
  oracle::BeamformerProblem p;
  p.q = beamformer_quadratic(h, v, c, l);
  for (int k = 0; k < c.users_per_cell; ++k) {
    const auto i = static_cast<std::size_t>(c.user_index(l, k));
    p.a.push_back(c.weight(l, k) * h(l, l, k).adjoint() * v.decoders[i] * v.weights[i]);
  }
  p.power = c.tx_power_mw[static_cast<std::size_t>(l)];
  return p;
}

// Increasing-power root of sum c/(lambda+mu)^2 = P by long double bisection.
long double reference_mu(const RVector& lambda, const RVector& c, double p) {
  auto power = [&](long double mu) {
    long double acc = 0;
    for (Eigen::Index n = 0; n < lambda.size(); ++n) {
      const long double d = lambda(n) + mu;
      acc += c(n) / (d * d);
    }
    return acc;
  };
  long double lo = 0, hi = 1;
  while (power(hi) > p) hi *= 2;
  for (int i = 0; i < 400; ++i) {
    const long double mid = (lo + hi) / 2;
    (power(mid) > p ? lo : hi) = mid;
  }
  return (lo + hi) / 2;
}

}  // namespace

TEST(Decoders, ZeroBeamformersGiveZero) {
  Instance in = make_instance(2, 2, 4, 2, 2, 4, 1);
  for (auto& f : in.vars.beamformers) f.setZero();
  for (const auto& u : update_decoders(in.vars, in.channels, in.config))
    EXPECT_EQ(u.norm(), 0.0);
}

TEST(Decoders, LocallyOptimal) {
  Instance in = make_instance(2, 2, 4, 2, 2, 5, 2);
  const EffectiveChannels h(in.channels, in.vars.reflection);
  SolverVariables v = in.vars;
  v.decoders = update_decoders(h, v, in.config);
  for (auto& w : v.weights) w = CMatrix::Identity(2, 2);
  Rng rng(20);
  for (int l = 0; l < 2; ++l)
    for (int k = 0; k < 2; ++k) {
      const double base = weighted_trace(h, v, in.config, l, k);
      const auto i = static_cast<std::size_t>(in.config.user_index(l, k));
      for (int trial = 0; trial < 100; ++trial) {
        SolverVariables p = v;
        p.decoders[i] += 1e-3 * random_cmatrix(2, 2, rng);
        EXPECT_GT(weighted_trace(h, p, in.config, l, k), base);
      }
    }
}

TEST(Weights, IdentityAndDiagonal) {
  // With U = 0 the MSE matrix is I, hence W = I.
  Instance in = make_instance(1, 1, 2, 2, 2, 2, 3);
  for (auto& u : in.vars.decoders) u.setZero();
  const auto w = update_weights(in.vars, in.channels, in.config);
  EXPECT_LT((w[0] - CMatrix::Identity(2, 2)).norm(), 1e-14);

  // Single user with H = F = I, unit noise and U = diag(1, 1/2):
  // E = (I - U)(I - U)^H + U^H U = diag(1, 1/2), so W = diag(1, 2).
  Instance d = make_instance(1, 1, 2, 2, 2, 2, 4, 1.0);
  d.channels.bs_to_ris(0).setZero();
  d.channels.direct(0, 0, 0) = CMatrix::Identity(2, 2);
  d.vars.beamformers[0] = CMatrix::Identity(2, 2);
  d.vars.decoders[0] = CMatrix::Identity(2, 2);
  d.vars.decoders[0](1, 1) = 0.5;
  const auto wd = update_weights(d.vars, d.channels, d.config);
  EXPECT_NEAR(wd[0](0, 0).real(), 1.0, 1e-14);
  EXPECT_NEAR(wd[0](1, 1).real(), 2.0, 1e-14);
  EXPECT_NEAR(std::abs(wd[0](0, 1)), 0.0, 1e-14);
}

TEST(Weights, InverseOfMse) {
  Instance in = make_instance(2, 2, 4, 2, 2, 4, 5);
  const EffectiveChannels h(in.channels, in.vars.reflection);
  in.vars.decoders = update_decoders(h, in.vars, in.config);
  const auto w = update_weights(h, in.vars, in.config);
  for (int l = 0; l < 2; ++l)
    for (int k = 0; k < 2; ++k) {
      const auto i = static_cast<std::size_t>(in.config.user_index(l, k));
      const CMatrix e = mse_matrix(h, in.vars, in.config, l, k);
      EXPECT_LT((w[i] * e - CMatrix::Identity(2, 2)).norm(), 1e-10);
    }
}

TEST(DualMu, BoundaryCase) {
  const DualSolution s =
      solve_dual_mu(RVector::Ones(2), RVector::Constant(2, 2.0), 4.0);
  EXPECT_EQ(s.mu, 0.0);
  EXPECT_FALSE(s.active);
}

TEST(DualMu, MatchesScalarRoot) {
  Rng rng(6);
  std::uniform_real_distribution<double> u(0.05, 3.0);
  for (int trial = 0; trial < 20; ++trial) {
    RVector lambda(5), c(5);
    for (int i = 0; i < 5; ++i) {
      lambda(i) = u(rng);
      c(i) = u(rng);
    }
    double p0 = 0.0;
    for (int i = 0; i < 5; ++i) p0 += c(i) / (lambda(i) * lambda(i));
    const double budget = p0 * (0.01 + 0.5 * u(rng) / 3.0);
    const DualSolution s = solve_dual_mu(lambda, c, budget);
    const double ref = static_cast<double>(reference_mu(lambda, c, budget));
    EXPECT_TRUE(s.active);
    EXPECT_TRUE(s.converged);
    EXPECT_LT(std::abs(s.mu - ref), 1e-9 * std::max(1.0, ref));
    EXPECT_LE(s.power, budget);
  }
}

TEST(DualMu, RankDeficientQuadratic) {
  // A zero eigenvalue with nonzero weight forces mu > 0 for any budget.
  RVector lambda(3), c(3);
  lambda << 0.0, 1.0, 2.0;
  c << 0.5, 1.0, 1.0;
  const DualSolution s = solve_dual_mu(lambda, c, 10.0);
  EXPECT_TRUE(s.active);
  EXPECT_GT(s.mu, 0.0);
  EXPECT_NEAR(s.power, 10.0, 1e-11);
}

TEST(DualMu, DegenerateInputs) {
  const DualSolution zero = solve_dual_mu(RVector::Ones(3), RVector::Zero(3), 1.0);
  EXPECT_EQ(zero.mu, 0.0);
  RVector neg = RVector::Ones(2);
  neg(1) = -1.0;
  EXPECT_THROW(solve_dual_mu(neg, RVector::Ones(2), 1.0), NumericalError);
}

TEST(Beamformers, InactiveConstraintGivesUnconstrainedMinimizer) {
  Instance in = make_instance(1, 1, 2, 2, 2, 3, 7, 1.0);
  in.config.tx_power_mw = {1e6};
  const EffectiveChannels h(in.channels, in.vars.reflection);
  in.vars.decoders = update_decoders(h, in.vars, in.config);
  in.vars.weights = update_weights(h, in.vars, in.config);
  std::vector<DualSolution> duals;
  SolverOptions opts;
  const auto f = update_beamformers(h, in.vars, in.config, opts, &duals);
  const CMatrix q = beamformer_quadratic(h, in.vars, in.config, 0);
  const CMatrix expect =
      q.inverse() * h(0, 0, 0).adjoint() * in.vars.decoders[0] * in.vars.weights[0];
  EXPECT_EQ(duals[0].mu, 0.0);
  EXPECT_LT((f[0] - expect).norm(), 1e-9 * expect.norm());
  EXPECT_LT(f[0].squaredNorm(), 1e6);
}

TEST(Beamformers, PowerLimitedMeetsBudget) {
  Instance in = make_instance(2, 2, 4, 2, 2, 4, 8);
  in.config.tx_power_mw = {1e-3, 2e-3};
  const EffectiveChannels h(in.channels, in.vars.reflection);
  in.vars.decoders = update_decoders(h, in.vars, in.config);
  in.vars.weights = update_weights(h, in.vars, in.config);
  SolverOptions opts;
  SolverVariables v = in.vars;
  v.beamformers = update_beamformers(h, in.vars, in.config, opts);
  for (int l = 0; l < 2; ++l) {
    const double p = in.config.tx_power_mw[static_cast<std::size_t>(l)];
    EXPECT_NEAR(bs_power(v, in.config, l), p, opts.bisection_tol * p * 1.01);
  }
}

TEST(Beamformers, MatchesProjectedGradientAndKkt) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Instance in = make_instance(2, 2, 4, 2, 2, 4, 100 + seed);
    in.config.tx_power_mw = {0.5 + 0.1 * static_cast<double>(seed), 2.0};
    const EffectiveChannels h(in.channels, in.vars.reflection);
    in.vars.decoders = update_decoders(h, in.vars, in.config);
    in.vars.weights = update_weights(h, in.vars, in.config);
    SolverOptions opts;
    std::vector<DualSolution> duals;
    SolverVariables v = in.vars;
    v.beamformers = update_beamformers(h, in.vars, in.config, opts, &duals);
    for (int l = 0; l < 2; ++l) {
      const oracle::BeamformerProblem p = subproblem(h, in.vars, in.config, l);
      std::vector<CMatrix> ours;
      for (int k = 0; k < 2; ++k)
        ours.push_back(v.beamformers[static_cast<std::size_t>(in.config.user_index(l, k))]);
      const double ref = p.value(oracle::projected_gradient(p));
      EXPECT_LT(rel_diff(p.value(ours), ref), 1e-6) << "seed " << seed << " bs " << l;
      EXPECT_NEAR(beamformer_subproblem_value(h, v, in.config, l), p.value(ours),
                  1e-10 * std::abs(ref));
      // Lagrangian stationarity: (Q + mu I) F - A = 0.
      for (int k = 0; k < 2; ++k) {
        const double mu = duals[static_cast<std::size_t>(l)].mu;
        const CMatrix r = p.q * ours[static_cast<std::size_t>(k)] +
                          mu * ours[static_cast<std::size_t>(k)] -
                          p.a[static_cast<std::size_t>(k)];
        EXPECT_LT(r.norm(), 1e-6);
      }
      if (duals[static_cast<std::size_t>(l)].active) {
        EXPECT_LE(std::abs(bs_power(v, in.config, l) - p.power), 1e-9 * p.power);
      }
    }
  }
}

TEST(WmmseObjective, ZeroDecodersIdentityWeights) {
  Instance in = make_instance(2, 2, 4, 2, 2, 4, 9);
  in.config.weights = {1.0, 2.0, 0.5, 1.0};
  for (auto& u : in.vars.decoders) u.setZero();
  for (auto& w : in.vars.weights) w = CMatrix::Identity(2, 2);
  EXPECT_NEAR(wmmse_objective(in.vars, in.channels, in.config), 4.5 * 2, 1e-12);
}

TEST(WmmseObjective, RateIdentityAtOptimalDecodersAndWeights) {
  Instance in = make_instance(2, 2, 4, 2, 2, 4, 10);
  const EffectiveChannels h(in.channels, in.vars.reflection);
  in.vars.decoders = update_decoders(h, in.vars, in.config);
  in.vars.weights = update_weights(h, in.vars, in.config);
  double log2det = 0.0;
  for (int l = 0; l < 2; ++l)
    for (int k = 0; k < 2; ++k) {
      const auto i = static_cast<std::size_t>(in.config.user_index(l, k));
      EXPECT_NEAR(weighted_trace(h, in.vars, in.config, l, k), 2.0, 1e-10);
      const double ld = logdet_hpd(in.vars.weights[i]) / std::numbers::ln2;
      EXPECT_LT(rel_diff(ld, user_rate(h, in.vars, in.config, l, k)), 1e-10);
      log2det += ld;
    }
  EXPECT_LT(rel_diff(log2det, weighted_sum_rate(h, in.vars, in.config)), 1e-10);
  EXPECT_NEAR(wmmse_objective(h, in.vars, in.config),
              8.0 - std::numbers::ln2 * log2det, 1e-9);
}

TEST(WmmseObjective, EachBlockUpdateDescends) {
  Instance in = make_instance(2, 2, 4, 2, 2, 5, 11);
  SolverVariables v = in.vars;
  const EffectiveChannels h(in.channels, v.reflection);
  SolverOptions opts;
  double obj = wmmse_objective(h, v, in.config);
  v.decoders = update_decoders(h, v, in.config);
  double next = wmmse_objective(h, v, in.config);
  EXPECT_LT(next, obj);
  obj = next;
  v.weights = update_weights(h, v, in.config);
  next = wmmse_objective(h, v, in.config);
  EXPECT_LT(next, obj);
  obj = next;
  v.beamformers = update_beamformers(h, v, in.config, opts);
  next = wmmse_objective(h, v, in.config);
  EXPECT_LT(next, obj);
  obj = next;
  const ReflectionResult r = optimize_reflection(
      assemble_objective(v, in.channels, in.config), v.reflection, opts.manifold);
  v.reflection = r.phi;
  EXPECT_LT(wmmse_objective(v, in.channels, in.config), obj);
}

TEST(RunAo, ZeroChannelsGiveFlatZeroTrace) {
  const ScenarioConfig c = small_config(2, 2, 4, 2, 2, 4);
  ChannelSet ch(2, 2, 4, 2, 4);
  ch.user_positions.assign(4, Point(0, 0));
  Rng rng(12);
  const AoResult r = run_ao(ch, c, SolverOptions{}, rng);
  EXPECT_EQ(r.weighted_sum_rate, 0.0);
  for (const auto& rec : r.trace.records) EXPECT_EQ(rec.weighted_sum_rate, 0.0);
  EXPECT_TRUE(r.trace.converged);
}

TEST(RunAo, DefaultScenarioImprovesMonotonically) {
  const ScenarioConfig c = default_scenario();
  Rng rng(1);
  const ChannelSet ch = draw_scenario(c, rng);
  const AoResult r = run_ao(ch, c, SolverOptions{}, rng);
  EXPECT_TRUE(r.trace.converged);
  EXPECT_LE(r.trace.ao_iterations, 200);
  EXPECT_GT(r.weighted_sum_rate, r.trace.records.front().weighted_sum_rate);
  for (std::size_t i = 1; i < r.trace.records.size(); ++i) {
    EXPECT_GE(r.trace.records[i].weighted_sum_rate,
              r.trace.records[i - 1].weighted_sum_rate - 1e-6);
  }
  EXPECT_LE(r.trace.max_unitarity_residual, 1e-8);
  EXPECT_LE(r.trace.max_rate_identity_error, 1e-8);
  EXPECT_TRUE(check_feasibility(r.vars, c).feasible(c));
}

TEST(RunAo, MicroInstanceMatchesGridSearch) {
  ScenarioConfig c = small_config(1, 1, 1, 1, 1, 2);
  c.noise_power_mw = 1.0;
  c.tx_power_mw = {1.0};
  Rng rng(13);
  const ChannelSet ch = unit_channels(c, rng);
  oracle::MicroLink link;
  link.h = ch.direct(0, 0, 0)(0, 0);
  link.r = ch.ris_to_user(0, 0).row(0);
  link.t = ch.bs_to_ris(0).col(0);
  SolverOptions opts;
  opts.ao_rel_tol = 1e-12;
  opts.max_ao_iters = 2000;
  const AoResult r = run_ao(ch, c, opts, rng);
  const double grid = oracle::micro_grid_rate(link);
  EXPECT_NEAR(r.weighted_sum_rate, grid, 1e-3);
  // Closed form: |h| + ||r|| ||t|| is the largest reachable channel gain.
  const double best_gain = std::abs(link.h) + link.r.norm() * link.t.norm();
  EXPECT_NEAR(grid, std::log2(1.0 + best_gain * best_gain), 1e-3);
}

TEST(RunAo, FixedReflectionIsUntouched) {
  ScenarioConfig c = small_config(2, 2, 4, 2, 2, 6);
  c.noise_power_mw = 0.3;
  Rng rng(14);
  const ChannelSet ch = unit_channels(c, rng);
  SolverOptions opts;
  opts.reflection_mode = ReflectionMode::kFixed;
  opts.initial_reflection = random_unitary_qr(6, rng);
  const AoResult r = run_ao(ch, c, opts, rng);
  EXPECT_EQ(r.vars.reflection, *opts.initial_reflection);
}

TEST(RunAo, RejectsMismatchedChannels) {
  const ScenarioConfig c = default_scenario();
  ChannelSet ch(2, 2, 4, 2, 10);
  Rng rng(15);
  EXPECT_THROW(run_ao(ch, c, SolverOptions{}, rng), DimensionError);
  SolverOptions bad;
  bad.max_ao_iters = 0;
  EXPECT_THROW(run_ao(draw_scenario(c, rng), c, bad, rng), ConfigError);
}
