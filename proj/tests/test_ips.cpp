#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace fairboost;

TEST(ItemPropensity, RatioToMaxCount) {
  // Item 0: 4 ratings, item 1: 2, item 2: none.
  auto ds = fbtest::make_dataset(4, 3, {{0, 0, 3}, {1, 0, 3}, {2, 0, 3}, {3, 0, 3}, {0, 1, 3}, {1, 1, 3}});
  auto p = estimate_item_propensity(ds);
  EXPECT_EQ(p.kind(), PropensityKind::kItemCount);
  EXPECT_EQ(p(0, 0, 3.0), 1.0);
  EXPECT_NEAR(p(3, 1, 3.0), 0.5, 1e-12);
  EXPECT_EQ(p(0, 2, 3.0), kDefaultClipFloor);
  EXPECT_EQ(p.with_clip_floor(0.7)(0, 1, 3.0), 0.7);
}

TEST(ItemPropensity, EmptyTrainRejected) {
  EXPECT_THROW(estimate_item_propensity(fbtest::make_dataset(1, 1, {})), ValidationError);
}

namespace {

// 10 x 20 = 200 cells, 10 observed (P(O) = 0.05), 4 of them rated 5.
Dataset nb_case() {
  std::vector<Rating> train;
  for (Index u = 0; u < 10; ++u) train.push_back({u, u, u < 4 ? 5.0 : static_cast<double>(1 + u % 4)});
  return fbtest::make_dataset(10, 20, train);
}

}  // namespace

TEST(NaiveBayesPropensity, HandValue) {
  auto ds = nb_case();
  RatingHistogram marginal{2, 2, 2, 2, 2};  // P(r = 5) = 0.2
  auto p = estimate_naive_bayes_propensity(ds, marginal);
  EXPECT_NEAR(p(0, 0, 5.0), 0.4 * 0.05 / 0.2, 1e-12);
}

TEST(NaiveBayesPropensity, TrainingMarginalCollapsesToConstant) {
  auto ds = nb_case();
  std::ostringstream warn;
  auto p = estimate_naive_bayes_propensity(ds, kDefaultClipFloor, &warn);
  EXPECT_NE(warn.str().find("warning"), std::string::npos);
  // Bins present in train reduce to P(observed).
  for (double r : {1.0, 2.0, 3.0, 4.0, 5.0}) EXPECT_NEAR(p(0, 0, r), 0.05, 1e-12);
}

TEST(NaiveBayesPropensity, ZeroBinNamed) {
  auto ds = nb_case();
  try {
    estimate_naive_bayes_propensity(ds, RatingHistogram{1, 1, 0, 1, 1});
    FAIL() << "expected EstimationError";
  } catch (const EstimationError& e) {
    EXPECT_NE(std::string(e.what()).find("bin 3"), std::string::npos);
  }
}

TEST(PropensityModel, ClippedIntoRange) {
  auto p = PropensityModel::rating_scores({1.3, 0.001, 0.5, 1.0, 0.0}, 0.01);
  EXPECT_EQ(p(0, 0, 1.0), 1.0);
  EXPECT_EQ(p(0, 0, 2.0), 0.01);
  EXPECT_EQ(p(0, 0, 3.0), 0.5);
  EXPECT_EQ(p(0, 0, 5.0), 0.01);
  EXPECT_THROW(p.with_clip_floor(0.0), ValidationError);
  EXPECT_THROW(p.with_clip_floor(1.0), ValidationError);
}

TEST(PropensityModel, EveryPairWithinBounds) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto ds = fbtest::random_dataset(seed, 30, 40, 0.2);
    for (double floor : {0.01, 0.2}) {
      auto item = estimate_item_propensity(ds, floor);
      auto nb = estimate_naive_bayes_propensity(ds, RatingHistogram{1, 3, 5, 3, 1}, floor);
      for (Index u = 0; u < ds.n_users; ++u) {
        for (Index m = 0; m < ds.n_items + 2; ++m) {
          for (double r : {1.0, 3.0, 5.0}) {
            for (double p : {item(u, m, r), nb(u, m, r)}) {
              EXPECT_GE(p, floor);
              EXPECT_LE(p, 1.0);
            }
          }
        }
      }
    }
  }
}

TEST(IpsWeights, MeanOne) {
  auto ds = fbtest::random_dataset(2, 30, 40, 0.2);
  auto w = ips_weights(ds.train, estimate_item_propensity(ds));
  double s = 0.0;
  for (double x : w) s += x;
  EXPECT_NEAR(s / static_cast<double>(w.size()), 1.0, 1e-12);
}

TEST(TrainMfIps, UniformPropensityMatchesPlainMf) {
  auto ds = fbtest::random_dataset(3, 30, 40, 0.2);
  MfHyperparams hp;
  hp.epochs = 5;
  hp.seed = 12;
  EXPECT_EQ(train_mf_ips(ds, PropensityModel::uniform(0.3), hp), train_mf(ds, hp));
}

namespace {

struct Summary {
  double mean = 0.0, var = 0.0, se = 0.0;
};

Summary summarize(const std::vector<double>& xs) {
  Summary s;
  const double n = static_cast<double>(xs.size());
  for (double x : xs) s.mean += x / n;
  for (double x : xs) s.var += (x - s.mean) * (x - s.mean) / (n - 1);
  s.se = std::sqrt(s.var / n);
  return s;
}

}  // namespace

TEST(IpsLoss, TrueFloorVarianceShrinks) {
  auto uni = gen_synthetic_mnar(8, 40, 60, 2.0);
  auto pred = [](Index, Index) { return 3.5; };
  std::vector<double> low, high;
  auto p_low = true_propensities(uni, 0.01);
  auto p_high = true_propensities(uni, 0.5);
  for (int r = 0; r < 200; ++r) {
    auto obs = sample_observations(uni, derive_seed(5, "ips", r));
    low.push_back(ips_loss(pred, obs, p_low, uni.cells(), DeltaKind::kMse));
    high.push_back(ips_loss(pred, obs, p_high, uni.cells(), DeltaKind::kMse));
  }
  EXPECT_LT(summarize(high).var, summarize(low).var);
}

TEST(IpsLoss, UnbiasedWithTruePropensities) {
  auto uni = gen_synthetic_mnar(21, 40, 60, 2.0);
  auto pred = [](Index u, Index m) { return 2.0 + 0.05 * static_cast<double>((u * 3 + m) % 40); };
  const double ideal = ideal_loss(pred, uni, DeltaKind::kMse);
  auto prop = true_propensities(uni, 1e-6);
  std::vector<double> est;
  for (int r = 0; r < 400; ++r) {
    est.push_back(ips_loss(pred, sample_observations(uni, derive_seed(6, "ips", r)), prop, uni.cells(),
                           DeltaKind::kMse));
  }
  auto s = summarize(est);
  EXPECT_LT(std::fabs(s.mean - ideal), 2.0 * s.se);
}
