#ifndef FAIRBOOST_IPS_HPP_
#define FAIRBOOST_IPS_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <iostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fairboost/error.hpp"
#include "fairboost/metrics.hpp"
#include "fairboost/mf.hpp"
#include "fairboost/ratings.hpp"

namespace fairboost {

inline constexpr double kDefaultClipFloor = 0.01;

enum class PropensityKind { kItemCount, kNaiveBayes, kExplicit };

inline std::string_view to_string(PropensityKind k) {
  switch (k) {
    case PropensityKind::kItemCount: return "ITEM_COUNT";
    case PropensityKind::kNaiveBayes: return "NAIVE_BAYES";
    case PropensityKind::kExplicit: return "EXPLICIT";
  }
  return "?";
}

/// Counts (or masses) of rating values 1..5; bin i holds value i + 1.
using RatingHistogram = std::array<double, 5>;

inline std::size_t rating_bin(double r) {
  auto b = static_cast<long>(std::lround(clip_rating(r))) - 1;
  return static_cast<std::size_t>(std::clamp(b, 0L, 4L));
}

inline RatingHistogram rating_histogram(std::span<const Rating> ratings) {
  RatingHistogram h{};
  for (const auto& r : ratings) h[rating_bin(r.value)] += 1.0;
  return h;
}

/// Observation propensities, always returned within [clip_floor, 1].
///   ITEM_COUNT:  per-item score, independent of user and rating
///   NAIVE_BAYES: per-rating-value score
///   EXPLICIT:    a full n_users x n_items matrix (e.g. known true propensities)
class PropensityModel {
 public:
  static PropensityModel item_scores(std::vector<double> scores, double clip_floor) {
    PropensityModel p(PropensityKind::kItemCount, clip_floor);
    p.item_scores_ = std::move(scores);
    return p;
  }

  static PropensityModel rating_scores(const RatingHistogram& scores, double clip_floor) {
    PropensityModel p(PropensityKind::kNaiveBayes, clip_floor);
    p.rating_scores_ = scores;
    return p;
  }

  static PropensityModel matrix(Index n_users, Index n_items, std::vector<double> scores,
                                double clip_floor) {
    if (scores.size() != std::size_t{n_users} * n_items) {
      throw ValidationError("propensity matrix size mismatch");
    }
    PropensityModel p(PropensityKind::kExplicit, clip_floor);
    p.n_users_ = n_users;
    p.n_items_ = n_items;
    p.matrix_ = std::move(scores);
    return p;
  }

  static PropensityModel uniform(double value, double clip_floor = kDefaultClipFloor) {
    return item_scores({}, clip_floor).with_default(value);
  }

  /// Propensity of observing `rating` at (u, m).
  double operator()(Index u, Index m, double rating) const {
    double raw = default_;
    switch (kind_) {
      case PropensityKind::kItemCount:
        if (m < item_scores_.size()) raw = item_scores_[m];
        break;
      case PropensityKind::kNaiveBayes:
        raw = rating_scores_[rating_bin(rating)];
        break;
      case PropensityKind::kExplicit:
        if (u < n_users_ && m < n_items_) raw = matrix_[std::size_t{u} * n_items_ + m];
        break;
    }
    return std::clamp(raw, clip_floor_, 1.0);
  }

  PropensityKind kind() const noexcept { return kind_; }
  double clip_floor() const noexcept { return clip_floor_; }
  double fallback() const noexcept { return default_; }
  const std::vector<double>& item_scores() const noexcept { return item_scores_; }
  const RatingHistogram& rating_scores() const noexcept { return rating_scores_; }
  const std::vector<double>& matrix_scores() const noexcept { return matrix_; }
  Index matrix_users() const noexcept { return n_users_; }
  Index matrix_items() const noexcept { return n_items_; }

  PropensityModel with_clip_floor(double floor) const {
    PropensityModel p = *this;
    p.clip_floor_ = checked_floor(floor);
    return p;
  }

  /// Raw score for cells the model has no entry for (before clipping).
  PropensityModel with_default(double value) const {
    PropensityModel p = *this;
    p.default_ = value;
    return p;
  }

  friend bool operator==(const PropensityModel&, const PropensityModel&) = default;

 private:
  PropensityModel(PropensityKind kind, double floor) : kind_(kind), clip_floor_(checked_floor(floor)) {}

  static double checked_floor(double floor) {
    if (!(floor > 0.0 && floor < 1.0)) throw ValidationError("clip_floor must lie in (0, 1)");
    return floor;
  }

  PropensityKind kind_;
  double clip_floor_;
  double default_ = 0.0;
  std::vector<double> item_scores_;
  RatingHistogram rating_scores_{};
  Index n_users_ = 0, n_items_ = 0;
  std::vector<double> matrix_;
};

/// p(u, m) = count(m) / max_m' count(m') over the training split.
inline PropensityModel estimate_item_propensity(const Dataset& train,
                                                double clip_floor = kDefaultClipFloor) {
  if (train.train.empty()) throw ValidationError("item propensity needs training data");
  auto counts = item_counts(train.train, train.n_items);
  double max_count = static_cast<double>(*std::max_element(counts.begin(), counts.end()));
  std::vector<double> scores(counts.size());
  for (std::size_t m = 0; m < counts.size(); ++m) scores[m] = static_cast<double>(counts[m]) / max_count;
  return PropensityModel::item_scores(std::move(scores), clip_floor);
}

/// p(r) = P(r | observed) * P(observed) / P(r). P(r | observed) and
/// P(observed) come from the training split, P(r) from `marginal_source`.
inline PropensityModel estimate_naive_bayes_propensity(const Dataset& train,
                                                       const RatingHistogram& marginal_source,
                                                       double clip_floor = kDefaultClipFloor) {
  if (train.train.empty()) throw ValidationError("naive Bayes propensity needs training data");
  double marginal_mass = 0.0;
  for (std::size_t b = 0; b < marginal_source.size(); ++b) {
    if (!(marginal_source[b] > 0.0)) {
      throw EstimationError("marginal rating histogram has zero mass in bin " + std::to_string(b + 1));
    }
    marginal_mass += marginal_source[b];
  }
  auto observed = rating_histogram(train.train);
  const double n_obs = static_cast<double>(train.train.size());
  const double p_observed = n_obs / (static_cast<double>(train.n_users) * train.n_items);
  RatingHistogram scores{};
  for (std::size_t b = 0; b < scores.size(); ++b) {
    double p_r_given_o = observed[b] / n_obs;
    double p_r = marginal_source[b] / marginal_mass;
    scores[b] = p_r_given_o * p_observed / p_r;
  }
  return PropensityModel::rating_scores(scores, clip_floor).with_default(p_observed);
}

/// Fallback with the training marginal as P(r); every propensity collapses to
/// P(observed). Emits a warning on `warn` when given.
inline PropensityModel estimate_naive_bayes_propensity(const Dataset& train,
                                                       double clip_floor = kDefaultClipFloor,
                                                       std::ostream* warn = &std::clog) {
  if (warn) {
    *warn << "warning: naive Bayes propensity uses the training marginal for P(r); "
             "propensities reduce to a constant\n";
  }
  return estimate_naive_bayes_propensity(train, rating_histogram(train.train), clip_floor);
}

/// Per-pair inverse propensities scaled to mean 1.
inline std::vector<double> ips_weights(std::span<const Rating> ratings, const PropensityModel& prop) {
  std::vector<double> w(ratings.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < ratings.size(); ++i) {
    w[i] = 1.0 / prop(ratings[i].user, ratings[i].item, ratings[i].value);
    sum += w[i];
  }
  // Constant weights map to exact ones, matching unweighted training bit for bit.
  if (std::all_of(w.begin(), w.end(), [&](double x) { return x == w.front(); })) {
    std::fill(w.begin(), w.end(), 1.0);
    return w;
  }
  const double scale = static_cast<double>(w.size()) / sum;
  for (auto& x : w) x *= scale;
  return w;
}

inline FactorModel train_mf_ips(const Dataset& train, const PropensityModel& prop, const MfHyperparams& hp) {
  auto w = ips_weights(train.train, prop);
  return train_weighted_mf(train.train, w, hp, train.n_users, train.n_items);
}

/// IPS estimate of the ideal loss: (1 / n_cells) * sum_observed delta / p.
template <Predictor P>
double ips_loss(const P& predictor, std::span<const Rating> observed, const PropensityModel& prop,
                std::size_t n_cells, DeltaKind kind) {
  double sum = 0.0;
  for (const auto& r : observed) {
    sum += delta(kind, r.value, predictor(r.user, r.item)) / prop(r.user, r.item, r.value);
  }
  return sum / static_cast<double>(n_cells);
}

inline PropensityModel true_propensities(const SyntheticUniverse& uni, double clip_floor) {
  return PropensityModel::matrix(uni.n_users, uni.n_items, uni.observation_probs, clip_floor);
}

}  // namespace fairboost

#endif  // FAIRBOOST_IPS_HPP_
