#include <gtest/gtest.h>

#include "evsynth/sampler.hpp"
#include "evsynth/synthetic.hpp"
#include "fixtures.hpp"

using namespace evsynth;

namespace {

SamplerConfig small(std::size_t burn = 1000, std::size_t iter = 2000, std::size_t chains = 2) {
  SamplerConfig cfg;
  cfg.n_burn = burn;
  cfg.n_iter = iter;
  cfg.n_chains = chains;
  cfg.threads = 1;
  return cfg;
}

ModelSpec spec_of(Variant v, Effects e = Effects::Random) {
  ModelSpec s;
  s.variant = v;
  s.effects = e;
  return s;
}

}  // namespace

TEST(Seeds, DerivedStreamsDiffer) {
  EXPECT_NE(chain_seed(1, 0), chain_seed(1, 1));
  EXPECT_NE(chain_seed(1, 0), chain_seed(2, 0));
  EXPECT_EQ(chain_seed(42, 3), chain_seed(42, 3));
}

TEST(Sampler, SameSeedBitIdentical) {
  const Model m(fixtures::mixed_three(), spec_of(Variant::Pooled));
  auto cfg = small(300, 500);
  const auto a = run_ensemble(m, cfg).draws;
  const auto b = run_ensemble(m, cfg).draws;
  EXPECT_EQ(a.values, b.values);
  EXPECT_EQ(a.log_post, b.log_post);
  cfg.seed += 1;
  const auto c = run_ensemble(m, cfg).draws;
  EXPECT_NE(a.values, c.values);
}

TEST(Sampler, ThreadCountDoesNotChangeDraws) {
  const Model m(fixtures::star_four(), spec_of(Variant::Hier3));
  auto cfg = small(300, 400, 3);
  const auto serial = run_ensemble(m, cfg).draws;
  cfg.threads = 3;
  const auto parallel = run_ensemble(m, cfg).draws;
  EXPECT_EQ(serial.values, parallel.values);
  EXPECT_EQ(serial.chain, parallel.chain);
}

TEST(Sampler, ShapeAndThinning) {
  const Model m(fixtures::mixed_three(), spec_of(Variant::Pooled));
  auto cfg = small(200, 600, 3);
  cfg.thin = 3;
  const auto d = run_ensemble(m, cfg).draws;
  EXPECT_EQ(d.rows(), 3u * 200u);
  EXPECT_EQ(d.cols(), m.dimension());
  EXPECT_EQ(d.chain_count(), 3u);
  EXPECT_EQ(d.iteration.front(), 3u);
  EXPECT_EQ(d.iteration[199], 600u);
  for (double lp : d.log_post) EXPECT_TRUE(std::isfinite(lp));
}

TEST(Sampler, ReducedRetentionKeepsPopulationColumns) {
  const Model m(fixtures::mixed_three(), spec_of(Variant::Hier3));
  auto cfg = small(200, 300, 1);
  cfg.reduced_retention = true;
  const auto d = run_ensemble(m, cfg).draws;
  for (const auto& n : d.names) {
    EXPECT_NE(n.rfind("mu[", 0), 0u) << n;
    EXPECT_NE(n.rfind("delta[", 0), 0u) << n;
  }
  EXPECT_TRUE(d.column_index("sigma").has_value());
  EXPECT_TRUE(d.column_index("d_rwe[Y]").has_value());
}

TEST(Sampler, PinnedParameterNeverMoves) {
  ModelSpec spec = spec_of(Variant::Pooled);
  spec.priors.d = {0.3, 0.3};
  const Model m(fixtures::mixed_three(), spec);
  const auto d = run_ensemble(m, small(300, 500)).draws;
  for (const char* name : {"d[X]", "d[Y]"})
    for (double v : d.column(name)) EXPECT_EQ(v, 0.3);
}

TEST(Sampler, ScalesFrozenAfterBurnIn) {
  const Model m(fixtures::sparse_multiarm(), spec_of(Variant::HierPower));
  const auto d = run_ensemble(m, small(500, 800, 2)).draws;
  ASSERT_EQ(d.scales.size(), 2u);
  EXPECT_EQ(d.scales, d.burn_end_scales);
}

TEST(Sampler, AdaptedAcceptanceInRange) {
  const Model m(fixtures::mixed_three(), spec_of(Variant::Pooled));
  const auto d = run_ensemble(m, small(3000, 3000, 2)).draws;
  for (std::size_t c = 0; c < d.chain_count(); ++c)
    for (std::size_t j = 0; j < d.cols(); ++j) {
      EXPECT_GE(d.acceptance[c][j], 0.1) << d.names[j];
      EXPECT_LE(d.acceptance[c][j], 0.8) << d.names[j];
    }
}

TEST(Sampler, StartsAtSupportBoundaries) {
  for (double q : {0.0, 1.0}) {
    SamplerConfig cfg = small(200, 200, 1);
    cfg.init_quantile = q;
    const Model m(fixtures::mixed_three(), spec_of(Variant::Hier3));
    const auto d = run_ensemble(m, cfg).draws;
    for (double lp : d.log_post) EXPECT_TRUE(std::isfinite(lp));
  }
}

TEST(Sampler, NonIdentifiableRefused) {
  const Model m(fixtures::rwe_only_treatment(), spec_of(Variant::RctOnly));
  EXPECT_THROW(run_ensemble(m, small()), AnalysisError);
}

TEST(Sampler, InvalidConfigRejected) {
  const Model m(fixtures::one_study(), spec_of(Variant::Pooled, Effects::Fixed));
  auto cfg = small();
  cfg.n_iter = 0;
  EXPECT_THROW(run_ensemble(m, cfg), InputError);
  cfg = small();
  cfg.target_accept = 1.0;
  EXPECT_THROW(run_ensemble(m, cfg), InputError);
}

TEST(Sampler, MatchesQuadratureOnOneStudy) {
  const Model m(fixtures::one_study(), spec_of(Variant::Pooled, Effects::Fixed));
  const auto oracle = grid_posterior_oracle(m);
  ASSERT_EQ(oracle.names, (std::vector<std::string>{"mu[S1]", "d[B]"}));
  const auto fit = run_ensemble(m, small(5000, 40000, 3));
  for (std::size_t i = 0; i < 2; ++i) {
    const auto col = fit.draws.column(oracle.names[i]);
    double mean = 0.0, ss = 0.0;
    for (double v : col) mean += v;
    mean /= static_cast<double>(col.size());
    for (double v : col) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / static_cast<double>(col.size() - 1));
    EXPECT_NEAR(mean, oracle.mean[i], 0.02) << oracle.names[i];
    EXPECT_NEAR(sd, oracle.sd[i], 0.1 * oracle.sd[i]) << oracle.names[i];
  }
  for (const auto& p : fit.convergence.parameters) EXPECT_LT(*p.rhat, 1.05);
}

TEST(Sampler, ConvergenceReportOnWellPosedFit) {
  const Model m(fixtures::mixed_three(), spec_of(Variant::Pooled));
  const auto fit = run_ensemble(m, small(2000, 4000, 3));
  EXPECT_EQ(fit.convergence.parameters.size(), m.dimension());
  for (const auto& p : fit.convergence.parameters) {
    ASSERT_TRUE(p.ess.has_value());
    EXPECT_GT(*p.ess, 0.0);
    EXPECT_LE(*p.ess, 3.0 * 4000.0);
  }
}
