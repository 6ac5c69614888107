#include <gtest/gtest.h>

#include <cmath>

#include "evsynth/fit_diagnostics.hpp"
#include "evsynth/synthetic.hpp"
#include "fixtures.hpp"

using namespace evsynth;

namespace {

ModelSpec fixed_pooled() {
  ModelSpec s;
  s.variant = Variant::Pooled;
  s.effects = Effects::Fixed;
  return s;
}

SamplerConfig quick(std::size_t burn, std::size_t iter, std::uint64_t seed = 5) {
  SamplerConfig c;
  c.n_burn = burn;
  c.n_iter = iter;
  c.n_chains = 2;
  c.seed = seed;
  c.threads = 1;
  return c;
}

// Draws for a model with the given flat rows.
Draws rows_for(const Model& m, const std::vector<std::vector<double>>& rows) {
  Draws d;
  d.names = m.names();
  for (const auto& r : rows) {
    d.values.insert(d.values.end(), r.begin(), r.end());
    d.chain.push_back(0);
    d.iteration.push_back(d.chain.size());
    d.log_post.push_back(m.log_posterior(r));
  }
  return d;
}

}  // namespace

TEST(ResidualDeviance, Examples) {
  EXPECT_EQ(poisson_residual_deviance(2, 2.0), 0.0);
  EXPECT_DOUBLE_EQ(poisson_residual_deviance(0, 1.5), 3.0);
  EXPECT_NEAR(poisson_residual_deviance(3, 2.0), 0.43279, 1e-5);
  EXPECT_THROW(poisson_residual_deviance(1, 0.0), std::logic_error);
}

TEST(ResidualDeviance, NonNegativeZeroOnlyAtFit) {
  for (long r = 0; r < 40; ++r)
    for (double lambda = 0.05; lambda < 60.0; lambda *= 1.37) {
      const double dev = poisson_residual_deviance(r, lambda);
      EXPECT_GE(dev, 0.0) << r << " " << lambda;
    }
  for (long r = 1; r < 40; ++r) EXPECT_NEAR(poisson_residual_deviance(r, static_cast<double>(r)), 0.0, 1e-12);
}

TEST(Dic, ConstantDrawsGiveZeroPd) {
  const Model m(fixtures::one_study(), fixed_pooled());
  const std::vector<double> x{std::log(0.4), -0.5};
  const auto s = dic(rows_for(m, {x, x, x, x}), m);
  EXPECT_NEAR(s.pd, 0.0, 1e-9);
  EXPECT_EQ(s.dic, s.dbar + s.pd);
}

TEST(Dic, HandSummedOneStudy) {
  const auto net = fixtures::one_study();
  const Model m(net, fixed_pooled());
  const std::vector<std::vector<double>> rows{{std::log(0.5), std::log(0.5)}, {std::log(0.45), std::log(0.6)}};
  const auto rep = residual_deviance(rows_for(m, rows), m);
  // lambda_A = exp(mu) * 20, lambda_B = exp(mu + d) * 20
  auto dev = [](double r, double lambda) { return 2.0 * (lambda - r + (r > 0 ? r * std::log(r / lambda) : 0.0)); };
  double a = 0.0, b = 0.0;
  for (const auto& r : rows) {
    a += dev(10, std::exp(r[0]) * 20.0) / 2.0;
    b += dev(5, std::exp(r[0] + r[1]) * 20.0) / 2.0;
  }
  ASSERT_EQ(rep.arms.size(), 2u);
  EXPECT_NEAR(rep.arms[0].mean_deviance, a, 1e-9);
  EXPECT_NEAR(rep.arms[1].mean_deviance, b, 1e-9);
  EXPECT_NEAR(rep.total, a + b, 1e-9);
  EXPECT_EQ(rep.total, rep.total_rct);
  EXPECT_EQ(rep.dic.dic, rep.dic.dbar + rep.dic.pd);
}

TEST(Dic, WeightedVariantScalesRwe) {
  ModelSpec spec;
  spec.variant = Variant::PowerPrior;
  spec.alpha = 0.3;
  spec.effects = Effects::Fixed;
  const Model m(fixtures::mixed_three(), spec);
  const auto x = m.initial_state();
  const auto rep = residual_deviance(rows_for(m, {x}), m);
  double weighted = 0.0, total = 0.0;
  for (const auto& a : rep.arms) {
    total += a.mean_deviance;
    weighted += (a.design == Design::Rwe ? 0.3 : 1.0) * a.mean_deviance;
  }
  EXPECT_NEAR(rep.total, total, 1e-9);
  EXPECT_NEAR(rep.total_weighted, weighted, 1e-9);
  EXPECT_LT(rep.total_rct, rep.total);
  EXPECT_LT(rep.dic_weighted.dbar, rep.dic.dbar);
}

TEST(Dic, OneStudyFixedEffectPdNearTwo) {
  const Model m(fixtures::one_study(), fixed_pooled());
  const auto fit = run_ensemble(m, quick(2000, 10000));
  const auto s = dic(fit.draws, m);
  EXPECT_NEAR(s.pd, 2.0, 1.5);
  EXPECT_EQ(s.dic, s.dbar + s.pd);
}

TEST(Dic, ReducedDrawsRejected) {
  const Model m(fixtures::one_study(), fixed_pooled());
  auto cfg = quick(100, 100);
  cfg.reduced_retention = true;
  const auto fit = run_ensemble(m, cfg);
  EXPECT_THROW(residual_deviance(fit.draws, m), AnalysisError);
}

TEST(DevianceCsv, Header) {
  const Model m(fixtures::one_study(), fixed_pooled());
  const auto rep = residual_deviance(rows_for(m, {m.initial_state()}), m);
  const auto csv = deviance_csv(rep);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "study_id,design,treatment,r,weight,mean_lambda,mean_dev");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
}

TEST(NodeSplit, OnlyEdgeOfTwoTreatmentNetwork) {
  try {
    node_split(fixtures::one_study(), fixed_pooled(), SplitEdge{0, 1}, quick(10, 10));
    FAIL();
  } catch (const AnalysisError& e) {
    EXPECT_NE(std::string(e.what()).find("not splittable"), std::string::npos);
  }
}

TEST(NodeSplit, NoDirectEvidence) {
  // star_four has no B vs C study
  EXPECT_THROW(check_splittable(fixtures::star_four(), SplitEdge{2, 3}), AnalysisError);
  EXPECT_NO_THROW(check_splittable(fixtures::star_four(), SplitEdge{1, 2}));
  EXPECT_NO_THROW(check_splittable(fixtures::mixed_three(), SplitEdge{0, 1}));
}

TEST(NodeSplit, PValueFloor) {
  const std::vector<double> pos(100, 0.2);
  EXPECT_DOUBLE_EQ(split_p_value(pos), 0.01);
  const std::vector<double> half{-1, 1, -1, 1};
  EXPECT_DOUBLE_EQ(split_p_value(half), 1.0);
}

TEST(NodeSplit, DifferenceMatchesRawColumns) {
  const auto net = fixtures::mixed_three();
  ModelSpec spec;
  spec.variant = Variant::Pooled;
  const auto cfg = quick(1000, 2000);
  const auto res = node_split(net, spec, SplitEdge{1, 2}, cfg);
  EXPECT_EQ(res.b_label, "X");
  EXPECT_EQ(res.k_label, "Y");
  EXPECT_EQ(res.direct_studies, 3u);  // R2, R3 and W2
  EXPECT_GE(res.p_value, 0.0);
  EXPECT_LE(res.p_value, 1.0);

  // same fit, reconstructed from the raw columns
  auto c = cfg;
  c.reduced_retention = true;
  const Model m(net, spec, SplitEdge{1, 2});
  const auto draws = run_ensemble(m, c).draws;
  const auto direct = draws.column("d_direct[X,Y]");
  const auto dx = draws.column("d[X]"), dy = draws.column("d[Y]");
  std::vector<double> omega(direct.size());
  for (std::size_t r = 0; r < omega.size(); ++r) omega[r] = direct[r] - (dy[r] - dx[r]);
  const auto s = summarize(omega);
  EXPECT_DOUBLE_EQ(s.mean, res.difference.mean);
  EXPECT_DOUBLE_EQ(s.q025, res.difference.q025);
  EXPECT_DOUBLE_EQ(split_p_value(omega), res.p_value);
}

TEST(NodeSplit, JsonShape) {
  NodeSplitResult r;
  r.b_label = "A";
  r.k_label = "B";
  r.p_value = 0.5;
  const auto j = to_json(r);
  EXPECT_EQ(j["edge"][0], "A");
  EXPECT_EQ(j["p_value"], 0.5);
  EXPECT_TRUE(j.contains("difference"));
}
