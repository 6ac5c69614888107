#include <gtest/gtest.h>

#include <cmath>

#include "evsynth/synthetic.hpp"
#include "fixtures.hpp"

using namespace evsynth;

namespace {

TruthSpec two_arm_truth(double d, double tau, double exposure, std::size_t studies) {
  TruthSpec t;
  t.treatments = {"ref", "A"};
  t.d = {0.0, d};
  t.tau = tau;
  t.exposure = {exposure};
  t.layout = {{{0, 1}, studies, 0}};
  return t;
}

double crude_log_ratio(const Study& s) {
  const auto& a = s.arms[0];
  const auto& b = s.arms[1];
  return std::log((static_cast<double>(b.relapses) / b.exposure) / (static_cast<double>(a.relapses) / a.exposure));
}

ModelSpec fixed_pooled() {
  ModelSpec s;
  s.effects = Effects::Fixed;
  return s;
}

}  // namespace

TEST(Generate, LargeExposureRecoversTruth) {
  const auto data = generate_network(two_arm_truth(-0.4, 0.0, 1e6, 5), 1);
  ASSERT_EQ(data.network.studies.size(), 5u);
  for (const auto& s : data.network.studies) EXPECT_NEAR(crude_log_ratio(s), -0.4, 0.01);
}

TEST(Generate, NullEffectSharesRate) {
  const auto data = generate_network(two_arm_truth(0.0, 0.0, 100.0, 4), 2);
  for (const auto& r : data.realized) {
    ASSERT_EQ(r.delta.size(), 1u);
    EXPECT_EQ(r.delta[0], 0.0);
    EXPECT_EQ(arm_rate(r.mu, r.delta[0]), arm_rate(r.mu, 0.0));
  }
}

TEST(Generate, RweBiasShiftsCrudeRatios) {
  TruthSpec t = two_arm_truth(-0.3, 0.05, 500.0, 0);
  t.layout = {{{0, 1}, 20, 20}};
  t.rwe_bias = {0.0, 0.5};
  const auto data = generate_network(t, 3);
  double rct = 0.0, rwe = 0.0;
  for (const auto& s : data.network.studies) (s.design == Design::Rct ? rct : rwe) += crude_log_ratio(s) / 20.0;
  EXPECT_GT(rwe, rct);
  EXPECT_NEAR(rwe - rct, 0.5, 0.15);
}

TEST(Generate, ReproducibleBytes) {
  const auto t = fixtures::conflicted_truth();
  const auto a = serialize_dataset(generate_network(t, 11).network);
  const auto b = serialize_dataset(generate_network(t, 11).network);
  const auto c = serialize_dataset(generate_network(t, 12).network);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
}

TEST(Generate, LayoutCountsAndIds) {
  const auto data = generate_network(fixtures::conflicted_truth(), 4);
  EXPECT_EQ(data.network.studies.size(), 20u);
  EXPECT_EQ(data.network.count(Design::Rwe), 10u);
  EXPECT_EQ(data.network.studies.front().id, "S001");
  EXPECT_TRUE(validate_network(data.network).ok());
}

TEST(Generate, MultiArmLayout) {
  TruthSpec t;
  t.treatments = {"ref", "A", "B"};
  t.d = {0.0, -0.2, -0.4};
  t.tau = 0.1;
  t.layout = {{{2, 0, 1}, 2, 1}};
  const auto data = generate_network(t, 5);
  for (const auto& s : data.network.studies) {
    ASSERT_EQ(s.arms.size(), 3u);
    EXPECT_EQ(s.baseline(), 0u);
  }
}

TEST(Truth, InvalidRejected) {
  auto t = two_arm_truth(0.1, 0.0, 10.0, 1);
  t.exposure = {0.0};
  EXPECT_THROW(t.validate(), InputError);
  t = two_arm_truth(0.1, 0.0, 10.0, 1);
  t.treatments.push_back("lonely");
  t.d.push_back(0.0);
  EXPECT_THROW(t.validate(), InputError);
  t = two_arm_truth(0.1, 0.0, 10.0, 1);
  t.d[0] = 0.3;
  EXPECT_THROW(t.validate(), InputError);
}

TEST(Truth, ParsedFromKeyValueDocument) {
  const auto doc = KeyValueDocument::parse(
      "[truth]\n"
      "treatments = placebo, A, B\n"
      "d = 0, -0.5, -0.2\n"
      "tau = 0.1\n"
      "exposure = 100, 120\n"
      "[layout]\n"
      "placebo, A = rct:2, rwe:1\n"
      "A, B = rct:1\n");
  const auto t = parse_truth(doc);
  EXPECT_EQ(t.treatments.size(), 3u);
  EXPECT_EQ(t.d[1], -0.5);
  ASSERT_EQ(t.layout.size(), 2u);
  EXPECT_EQ(t.layout[0].rct, 2u);
  EXPECT_EQ(t.layout[0].rwe, 1u);
  EXPECT_EQ(t.layout[1].treatments, (std::vector<std::size_t>{1, 2}));
  EXPECT_THROW(parse_truth(KeyValueDocument::parse("[truth]\ntreatments = a, b\n")), InputError);
}

TEST(Oracle, FlatDensityHasUniformMoments) {
  const auto res = grid_oracle([](std::span<const double>) { return 0.0; }, {Interval{-10.0, 10.0}}, 2001);
  EXPECT_NEAR(res.mean[0], 0.0, 1e-12);
  EXPECT_NEAR(res.sd[0], 20.0 / std::sqrt(12.0), 1e-4);
  EXPECT_NEAR(res.sd[0], 5.7735, 1e-4);
}

TEST(Oracle, GaussianMomentsIn2d) {
  auto logd = [](std::span<const double> x) {
    return -0.5 * ((x[0] - 1.0) * (x[0] - 1.0) / 0.25 + (x[1] + 2.0) * (x[1] + 2.0) / 4.0);
  };
  const auto res = grid_oracle(logd, {Interval{-9, 9}, Interval{-16, 12}}, 801);
  EXPECT_NEAR(res.mean[0], 1.0, 1e-6);
  EXPECT_NEAR(res.mean[1], -2.0, 1e-6);
  EXPECT_NEAR(res.sd[0], 0.5, 1e-4);
  EXPECT_NEAR(res.sd[1], 2.0, 1e-4);
}

TEST(Oracle, OneStudyModeAtMle) {
  const auto res = grid_posterior_oracle(fixtures::one_study(), fixed_pooled());
  ASSERT_EQ(res.names.size(), 2u);
  EXPECT_EQ(res.names[1], "d[B]");
  EXPECT_NEAR(res.mode[1], std::log(0.5), 0.02);
  EXPECT_NEAR(res.mode[0], std::log(0.5), 0.02);  // mu at log(10/20)
}

TEST(Oracle, DoublingDataShrinksSd) {
  auto doubled = fixtures::one_study();
  for (auto& a : doubled.studies[0].arms) {
    a.relapses *= 2;
    a.exposure *= 2.0;
  }
  const auto base = grid_posterior_oracle(fixtures::one_study(), fixed_pooled());
  const auto twice = grid_posterior_oracle(doubled, fixed_pooled());
  EXPECT_NEAR(twice.sd[1] / base.sd[1], 1.0 / std::sqrt(2.0), 0.1 / std::sqrt(2.0));
}

TEST(Oracle, StableUnderRefinement) {
  const auto a = grid_posterior_oracle(fixtures::one_study(), fixed_pooled(), 2001);
  const auto b = grid_posterior_oracle(fixtures::one_study(), fixed_pooled(), 4001);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_NEAR(a.mean[i], b.mean[i], 1e-4);
    EXPECT_NEAR(a.sd[i], b.sd[i], 1e-4);
  }
}

TEST(Oracle, PinnedCoordinatesHeld) {
  ModelSpec spec = fixed_pooled();
  spec.priors.mu = {std::log(0.5), std::log(0.5)};
  const auto res = grid_posterior_oracle(fixtures::one_study(), spec);
  ASSERT_EQ(res.names, (std::vector<std::string>{"d[B]"}));
}

TEST(Oracle, RefusesTooManyParameters) {
  EXPECT_THROW(grid_posterior_oracle(fixtures::mixed_three(), fixed_pooled()), AnalysisError);
  ModelSpec re;
  EXPECT_THROW(grid_posterior_oracle(fixtures::one_study(), re), AnalysisError);
}

TEST(Oracle, NowhereFiniteThrows) {
  EXPECT_THROW(grid_oracle([](std::span<const double>) { return kNegInf; }, {Interval{0, 1}}, 11), AnalysisError);
}
