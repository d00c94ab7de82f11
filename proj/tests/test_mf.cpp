#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace fairboost;

namespace {

MfHyperparams small(std::size_t d, std::size_t epochs, double lr = 0.05, double reg = 0.0) {
  MfHyperparams hp;
  hp.latent_dim = d;
  hp.epochs = epochs;
  hp.learning_rate = lr;
  hp.regularization = reg;
  hp.seed = 3;
  return hp;
}

std::vector<Rating> toy3x3() {
  return {{0, 0, 4.0}, {0, 1, 2.0}, {1, 0, 5.0}, {1, 2, 1.0}, {2, 1, 3.0}, {2, 2, 4.5}, {0, 2, 2.5}};
}

}  // namespace

TEST(TrainWeightedMf, ConstantRatings) {
  std::vector<Rating> rs;
  for (Index u = 0; u < 6; ++u) {
    for (Index m = 0; m < 5; ++m) rs.push_back({u, m, 3.0});
  }
  std::vector<double> w(rs.size(), 1.0);
  auto model = train_weighted_mf(rs, w, MfHyperparams{});
  for (const auto& r : rs) EXPECT_NEAR(model.predict(r.user, r.item), 3.0, 0.05);
}

TEST(TrainWeightedMf, RankOneMatrix) {
  const std::vector<double> a{1.0, 1.5, 2.0, 0.8}, b{1.2, 2.0, 2.4, 1.6};
  std::vector<Rating> rs;
  for (Index u = 0; u < 4; ++u) {
    for (Index m = 0; m < 4; ++m) rs.push_back({u, m, clip_rating(a[u] * b[m])});
  }
  std::vector<double> w(rs.size(), 1.0);
  auto model = train_weighted_mf(rs, w, small(2, 2000, 0.02));
  double se = 0.0;
  for (const auto& r : rs) se += std::pow(r.value - model.predict(r.user, r.item), 2);
  EXPECT_LT(std::sqrt(se / static_cast<double>(rs.size())), 0.1);
}

TEST(TrainWeightedMf, Errors) {
  auto rs = toy3x3();
  std::vector<double> zeros(rs.size(), 0.0), shortw(2, 1.0), neg(rs.size(), 1.0);
  neg[1] = -1.0;
  EXPECT_THROW(train_weighted_mf(rs, zeros, MfHyperparams{}), DegenerateWeightsError);
  EXPECT_THROW(train_weighted_mf(rs, shortw, MfHyperparams{}), ValidationError);
  EXPECT_THROW(train_weighted_mf(rs, neg, MfHyperparams{}), ValidationError);
  MfHyperparams bad;
  bad.latent_dim = 0;
  EXPECT_THROW(bad.validate(), ValidationError);
  bad = {};
  bad.epochs = 0;
  EXPECT_THROW(bad.validate(), ValidationError);
}

TEST(TrainWeightedMf, DivergenceNamesEpoch) {
  auto rs = toy3x3();
  std::vector<double> w(rs.size(), 1e150);
  try {
    train_weighted_mf(rs, w, small(2, 5, 1.0));
    FAIL() << "expected DivergenceError";
  } catch (const DivergenceError& e) {
    EXPECT_GE(e.epoch(), 1u);
    EXPECT_LE(e.epoch(), 5u);
  }
}

TEST(TrainWeightedMf, Deterministic) {
  auto ds = fbtest::random_dataset(1, 30, 20, 0.3);
  std::vector<double> w(ds.train.size(), 1.0);
  auto a = train_weighted_mf(ds.train, w, small(4, 10), ds.n_users, ds.n_items);
  auto b = train_weighted_mf(ds.train, w, small(4, 10), ds.n_users, ds.n_items);
  EXPECT_EQ(a, b);
  auto hp = small(4, 10);
  hp.seed = 4;
  EXPECT_NE(a, train_weighted_mf(ds.train, w, hp, ds.n_users, ds.n_items));
}

TEST(TrainWeightedMf, GlobalMeanIsWeightedMean) {
  std::vector<Rating> rs{{0, 0, 1.0}, {1, 1, 5.0}};
  std::vector<double> w{3.0, 1.0};
  auto model = train_weighted_mf(rs, w, small(2, 1));
  EXPECT_NEAR(model.global_mean, 2.0, 1e-12);
}

TEST(TrainWeightedMf, ZeroWeightEntitiesStayCold) {
  std::vector<Rating> rs{{0, 0, 4.0}, {1, 1, 2.0}, {2, 2, 5.0}};
  std::vector<double> w{1.0, 1.0, 0.0};
  auto model = train_weighted_mf(rs, w, small(3, 20));
  EXPECT_EQ(model.user_bias[2], 0.0);
  EXPECT_EQ(model.item_bias[2], 0.0);
  for (double x : model.user_row(2)) EXPECT_EQ(x, 0.0);
  for (double x : model.item_row(2)) EXPECT_EQ(x, 0.0);
}

TEST(TrainWeightedMf, LossNonIncreasingAtSmallRate) {
  auto rs = toy3x3();
  std::vector<double> w{1.0, 2.0, 0.5, 1.0, 1.5, 1.0, 0.7};
  auto hp = small(2, 200, 0.005, 0.02);
  std::vector<double> losses;
  train_weighted_mf(rs, w, hp, 3, 3, [&](std::size_t, const FactorModel& m) {
    losses.push_back(weighted_objective(m, rs, w, hp.regularization));
  });
  ASSERT_EQ(losses.size(), hp.epochs);
  for (std::size_t i = 1; i < losses.size(); ++i) EXPECT_LE(losses[i], losses[i - 1] + 1e-12) << "epoch " << i + 1;
}

TEST(Gradient, MatchesCentralDifferences) {
  auto rs = toy3x3();
  std::vector<double> w{1.0, 2.0, 0.5, 1.0, 1.5, 1.0, 0.7};
  const double reg = 0.05, h = 1e-5;
  auto model = train_weighted_mf(rs, w, small(2, 3, 0.01, reg), 3, 3);
  auto g = objective_gradient(model, rs, w, reg);

  auto check = [&](std::vector<double> FactorModel::*field, const std::vector<double>& analytic) {
    for (std::size_t i = 0; i < analytic.size(); ++i) {
      FactorModel plus = model, minus = model;
      (plus.*field)[i] += h;
      (minus.*field)[i] -= h;
      double fd = (weighted_objective(plus, rs, w, reg) - weighted_objective(minus, rs, w, reg)) / (2 * h);
      double rel = std::fabs(fd - analytic[i]) / std::max({std::fabs(fd), std::fabs(analytic[i]), 1e-8});
      EXPECT_LT(rel, 1e-4) << "parameter " << i << " fd " << fd << " analytic " << analytic[i];
    }
  };
  check(&FactorModel::user_factors, g.user_factors);
  check(&FactorModel::item_factors, g.item_factors);
  check(&FactorModel::user_bias, g.user_bias);
  check(&FactorModel::item_bias, g.item_bias);
}

TEST(Gradient, SgdStepIsHalfGradientOfExampleLoss) {
  auto rs = toy3x3();
  const double lr = 0.01, reg = 0.1, wt = 1.7;
  auto model = train_weighted_mf(rs, std::vector<double>(rs.size(), 1.0), small(2, 2, 0.01, reg), 3, 3);
  const Rating r = rs[3];
  // Example loss: w (r - s)^2 + reg * |theta_example|^2 over (b_u, b_m, p_u, q_m).
  std::vector<Rating> one{r};
  std::vector<double> ow{wt};
  FactorModel masked = model;
  auto g = objective_gradient(masked, one, ow, 0.0);
  FactorModel stepped = model;
  sgd_step(stepped, r, wt, lr, reg);
  EXPECT_NEAR(stepped.user_bias[r.user] - model.user_bias[r.user],
              -lr / 2 * (g.user_bias[r.user] + 2 * reg * model.user_bias[r.user]), 1e-12);
  for (std::size_t f = 0; f < model.dim; ++f) {
    std::size_t k = r.item * model.dim + f;
    EXPECT_NEAR(stepped.item_factors[k] - model.item_factors[k],
                -lr / 2 * (g.item_factors[k] + 2 * reg * model.item_factors[k]), 1e-12);
  }
}

TEST(WeightedObjective, DuplicateEqualsDoubleWeight) {
  auto rs = toy3x3();
  auto model = train_weighted_mf(rs, std::vector<double>(rs.size(), 1.0), small(2, 5), 3, 3);
  auto dup = rs;
  dup.push_back(rs[2]);
  std::vector<double> ones(dup.size(), 1.0), doubled(rs.size(), 1.0);
  doubled[2] = 2.0;
  EXPECT_NEAR(weighted_objective(model, dup, ones, 0.1), weighted_objective(model, rs, doubled, 0.1), 1e-12);
  auto ga = objective_gradient(model, dup, ones, 0.1);
  auto gb = objective_gradient(model, rs, doubled, 0.1);
  for (std::size_t i = 0; i < ga.item_factors.size(); ++i) EXPECT_NEAR(ga.item_factors[i], gb.item_factors[i], 1e-12);
}

TEST(Predict, Contract) {
  FactorModel m;
  m.n_users = 2;
  m.n_items = 2;
  m.dim = 1;
  m.user_factors = {0.0, 0.0};
  m.item_factors = {0.0, 0.0};
  m.user_bias = {0.0, 0.0};
  m.item_bias = {0.0, 0.0};
  m.global_mean = 3.6;
  EXPECT_EQ(predict(m, 0, 1), 3.6);
  EXPECT_EQ(predict(m, 1, 0), 3.6);

  m.user_bias = {2.0, -0.5};
  m.item_bias = {0.3, 0.0};
  EXPECT_DOUBLE_EQ(m.raw_score(0, 0), 5.9);
  EXPECT_EQ(predict(m, 0, 0), 5.0);

  m.user_factors = {1.0, 1.0};
  m.item_factors = {1.0, 1.0};
  EXPECT_NEAR(predict(m, 1, 7), 3.6 - 0.5, 1e-12);  // cold item
  EXPECT_NEAR(predict(m, 9, 0), 3.6 + 0.3, 1e-12);  // cold user
  EXPECT_EQ(predict(m, 9, 9), 3.6);
}
