#ifndef FAIRBOOST_MF_HPP_
#define FAIRBOOST_MF_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "fairboost/error.hpp"
#include "fairboost/random.hpp"
#include "fairboost/ratings.hpp"

namespace fairboost {

struct MfHyperparams {
  std::size_t latent_dim = 16;
  double learning_rate = 0.005;
  double regularization = 0.02;
  std::size_t epochs = 30;
  std::uint64_t seed = 0;

  void validate() const {
    if (latent_dim < 1) throw ValidationError("latent_dim must be >= 1");
    if (epochs < 1) throw ValidationError("epochs must be >= 1");
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
      throw ValidationError("learning_rate must be > 0");
    }
    if (!(regularization >= 0.0) || !std::isfinite(regularization)) {
      throw ValidationError("regularization must be >= 0");
    }
  }

  friend bool operator==(const MfHyperparams&, const MfHyperparams&) = default;
};

/// Biased latent-factor model:
///   pred(u, m) = clip(mu + b_u + b_m + <p_u, q_m>, 1, 5)
/// Indices outside the trained ranges contribute zero bias and zero factors.
struct FactorModel {
  Index n_users = 0;
  Index n_items = 0;
  std::size_t dim = 0;
  std::vector<double> user_factors;  // n_users x dim, row-major
  std::vector<double> item_factors;  // n_items x dim, row-major
  std::vector<double> user_bias;
  std::vector<double> item_bias;
  double global_mean = 0.0;
  MfHyperparams hyperparams;

  std::span<const double> user_row(Index u) const { return {user_factors.data() + u * dim, dim}; }
  std::span<const double> item_row(Index m) const { return {item_factors.data() + m * dim, dim}; }

  double raw_score(Index u, Index m) const {
    double s = global_mean;
    const bool has_u = u < n_users, has_m = m < n_items;
    if (has_u) s += user_bias[u];
    if (has_m) s += item_bias[m];
    if (has_u && has_m) {
      const double* p = user_factors.data() + std::size_t{u} * dim;
      const double* q = item_factors.data() + std::size_t{m} * dim;
      for (std::size_t f = 0; f < dim; ++f) s += p[f] * q[f];
    }
    return s;
  }

  double predict(Index u, Index m) const { return clip_rating(raw_score(u, m)); }
  double operator()(Index u, Index m) const { return predict(u, m); }

  friend bool operator==(const FactorModel&, const FactorModel&) = default;
};

inline double predict(const FactorModel& model, Index u, Index m) { return model.predict(u, m); }

/// Training objective on raw (unclipped) scores:
///   sum_i w_i (r_i - s_i)^2 + reg * (|P|^2 + |Q|^2 + |b_u|^2 + |b_m|^2)
inline double weighted_objective(const FactorModel& model, std::span<const Rating> ratings,
                                 std::span<const double> weights, double reg) {
  double loss = 0.0;
  for (std::size_t i = 0; i < ratings.size(); ++i) {
    double e = ratings[i].value - model.raw_score(ratings[i].user, ratings[i].item);
    loss += weights[i] * e * e;
  }
  auto sq = [](const std::vector<double>& v) { return std::inner_product(v.begin(), v.end(), v.begin(), 0.0); };
  return loss + reg * (sq(model.user_factors) + sq(model.item_factors) + sq(model.user_bias) +
                       sq(model.item_bias));
}

/// Same layout as FactorModel's parameter arrays.
struct FactorGradient {
  std::vector<double> user_factors, item_factors, user_bias, item_bias;
};

/// Analytic gradient of weighted_objective.
inline FactorGradient objective_gradient(const FactorModel& model, std::span<const Rating> ratings,
                                         std::span<const double> weights, double reg) {
  FactorGradient g;
  g.user_factors.resize(model.user_factors.size());
  g.item_factors.resize(model.item_factors.size());
  g.user_bias.resize(model.user_bias.size());
  g.item_bias.resize(model.item_bias.size());
  for (std::size_t i = 0; i < ratings.size(); ++i) {
    const auto& r = ratings[i];
    double c = -2.0 * weights[i] * (r.value - model.raw_score(r.user, r.item));
    g.user_bias[r.user] += c;
    g.item_bias[r.item] += c;
    for (std::size_t f = 0; f < model.dim; ++f) {
      g.user_factors[r.user * model.dim + f] += c * model.item_factors[r.item * model.dim + f];
      g.item_factors[r.item * model.dim + f] += c * model.user_factors[r.user * model.dim + f];
    }
  }
  auto add_reg = [reg](std::vector<double>& gv, const std::vector<double>& v) {
    for (std::size_t i = 0; i < v.size(); ++i) gv[i] += 2.0 * reg * v[i];
  };
  add_reg(g.user_factors, model.user_factors);
  add_reg(g.item_factors, model.item_factors);
  add_reg(g.user_bias, model.user_bias);
  add_reg(g.item_bias, model.item_bias);
  return g;
}

/// One stochastic step on a single example. The step is
///   theta -= (lr / 2) * grad[ w (r - s)^2 + reg * |theta_example|^2 ]
/// where theta_example is (b_u, b_m, p_u, q_m). Returns the pre-step residual.
inline double sgd_step(FactorModel& model, const Rating& r, double weight, double lr, double reg) {
  const double e = r.value - model.raw_score(r.user, r.item);
  const double we = weight * e;
  double& bu = model.user_bias[r.user];
  double& bm = model.item_bias[r.item];
  bu += lr * (we - reg * bu);
  bm += lr * (we - reg * bm);
  double* p = model.user_factors.data() + std::size_t{r.user} * model.dim;
  double* q = model.item_factors.data() + std::size_t{r.item} * model.dim;
  for (std::size_t f = 0; f < model.dim; ++f) {
    const double pf = p[f], qf = q[f];
    p[f] += lr * (we * qf - reg * pf);
    q[f] += lr * (we * pf - reg * qf);
  }
  return e;
}

/// Called after every epoch with the 1-based epoch number.
using EpochObserver = std::function<void(std::size_t epoch, const FactorModel&)>;

/// Fits a FactorModel by seeded SGD with per-example weights on the squared
/// error. `global_mean` is the weighted mean rating and stays fixed. Users and
/// items without positive-weight examples end with zero factors and biases.
inline FactorModel train_weighted_mf(std::span<const Rating> ratings, std::span<const double> weights,
                                     const MfHyperparams& hp, Index n_users, Index n_items,
                                     const EpochObserver& observer = {}) {
  hp.validate();
  if (weights.size() != ratings.size()) {
    throw ValidationError("weights length " + std::to_string(weights.size()) +
                          " != ratings length " + std::to_string(ratings.size()));
  }
  double wsum = 0.0, wr = 0.0;
  for (std::size_t i = 0; i < ratings.size(); ++i) {
    if (!(weights[i] >= 0.0) || !std::isfinite(weights[i])) {
      throw ValidationError("weights must be finite and non-negative");
    }
    if (ratings[i].user >= n_users || ratings[i].item >= n_items) {
      throw ValidationError("rating index outside model dimensions");
    }
    wsum += weights[i];
    wr += weights[i] * ratings[i].value;
  }
  if (!(wsum > 0.0)) throw DegenerateWeightsError("no training example has positive weight");

  FactorModel model;
  model.n_users = n_users;
  model.n_items = n_items;
  model.dim = hp.latent_dim;
  model.hyperparams = hp;
  model.global_mean = wr / wsum;
  model.user_bias.assign(n_users, 0.0);
  model.item_bias.assign(n_items, 0.0);
  model.user_factors.resize(std::size_t{n_users} * hp.latent_dim);
  model.item_factors.resize(std::size_t{n_items} * hp.latent_dim);

  Rng rng(derive_seed(hp.seed, "mf"));
  std::normal_distribution<double> init(0.0, 0.1 / std::sqrt(static_cast<double>(hp.latent_dim)));
  for (auto& x : model.user_factors) x = init(rng);
  for (auto& x : model.item_factors) x = init(rng);

  std::vector<std::size_t> order;
  order.reserve(ratings.size());
  std::vector<char> seen_user(n_users, 0), seen_item(n_items, 0);
  for (std::size_t i = 0; i < ratings.size(); ++i) {
    if (weights[i] > 0.0) {
      order.push_back(i);
      seen_user[ratings[i].user] = 1;
      seen_item[ratings[i].item] = 1;
    }
  }

  for (std::size_t epoch = 1; epoch <= hp.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss = 0.0;
    for (std::size_t i : order) {
      double e = sgd_step(model, ratings[i], weights[i], hp.learning_rate, hp.regularization);
      loss += weights[i] * e * e;
    }
    if (!std::isfinite(loss)) throw DivergenceError(epoch, "non-finite weighted loss");
    if (observer) observer(epoch, model);
  }

  for (Index u = 0; u < n_users; ++u) {
    if (seen_user[u]) continue;
    std::fill_n(model.user_factors.begin() + std::size_t{u} * model.dim, model.dim, 0.0);
  }
  for (Index m = 0; m < n_items; ++m) {
    if (seen_item[m]) continue;
    std::fill_n(model.item_factors.begin() + std::size_t{m} * model.dim, model.dim, 0.0);
  }
  return model;
}

/// Dimensions inferred from the largest indices present.
inline FactorModel train_weighted_mf(std::span<const Rating> ratings, std::span<const double> weights,
                                     const MfHyperparams& hp) {
  Index nu = 0, nm = 0;
  for (const auto& r : ratings) {
    nu = std::max(nu, r.user + 1);
    nm = std::max(nm, r.item + 1);
  }
  return train_weighted_mf(ratings, weights, hp, nu, nm);
}

/// Unweighted baseline.
inline FactorModel train_mf(const Dataset& data, const MfHyperparams& hp) {
  std::vector<double> ones(data.train.size(), 1.0);
  return train_weighted_mf(data.train, ones, hp, data.n_users, data.n_items);
}

}  // namespace fairboost

#endif  // FAIRBOOST_MF_HPP_
