#ifndef FAIRBOOST_BOOSTING_HPP_
#define FAIRBOOST_BOOSTING_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fairboost/error.hpp"
#include "fairboost/metrics.hpp"
#include "fairboost/mf.hpp"
#include "fairboost/random.hpp"
#include "fairboost/ratings.hpp"

namespace fairboost {

enum class ResidualMode { kAbsolute, kSigned };

/// How a round's weak learner sees the pair weights.
///   kSampleOnly:      train unweighted on a sample drawn by weight
///   kSampleAndWeight: train on the sample with each example scaled by its weight
///   kWeightOnly:      no sampling; every pair once, scaled by its weight
enum class LearnerWeighting { kSampleOnly, kSampleAndWeight, kWeightOnly };

inline std::string_view to_string(ResidualMode m) { return m == ResidualMode::kAbsolute ? "ABSOLUTE" : "SIGNED"; }
inline std::string_view to_string(LearnerWeighting m) {
  switch (m) {
    case LearnerWeighting::kSampleOnly: return "SAMPLE_ONLY";
    case LearnerWeighting::kSampleAndWeight: return "SAMPLE_AND_WEIGHT";
    case LearnerWeighting::kWeightOnly: return "WEIGHT_ONLY";
  }
  return "?";
}

inline ResidualMode parse_residual_mode(std::string_view s) {
  if (s == "ABSOLUTE" || s == "absolute") return ResidualMode::kAbsolute;
  if (s == "SIGNED" || s == "signed") return ResidualMode::kSigned;
  throw ValidationError("unknown residual mode '" + std::string(s) + "'");
}

inline LearnerWeighting parse_learner_weighting(std::string_view s) {
  if (s == "SAMPLE_ONLY" || s == "sample_only") return LearnerWeighting::kSampleOnly;
  if (s == "SAMPLE_AND_WEIGHT" || s == "sample_and_weight") return LearnerWeighting::kSampleAndWeight;
  if (s == "WEIGHT_ONLY" || s == "weight_only") return LearnerWeighting::kWeightOnly;
  throw ValidationError("unknown learner weighting '" + std::string(s) + "'");
}

/// Which group pays the popularity cost.
///   kPrinted:  popular items when pb > 0, non-popular items when pb < 0
///   kMirrored: popular items when pb < 0, non-popular items when pb > 0
/// kPrinted upweights the group that already has the lower error; kMirrored
/// upweights the group with the higher error.
enum class CostRule { kPrinted, kMirrored };

inline std::string_view to_string(CostRule r) { return r == CostRule::kPrinted ? "PRINTED" : "MIRRORED"; }

inline CostRule parse_cost_rule(std::string_view s) {
  if (s == "PRINTED" || s == "printed") return CostRule::kPrinted;
  if (s == "MIRRORED" || s == "mirrored") return CostRule::kMirrored;
  throw ValidationError("unknown cost rule '" + std::string(s) + "'");
}

/// Bound value that disables the popularity cost (no |PB| exceeds it).
inline constexpr double kDisabledBound = std::numeric_limits<double>::infinity();
inline constexpr double kMinEpsilon = 1e-5;
inline constexpr double kMaxEpsilon = 1.0;

struct BoostConfig {
  std::size_t rounds = 10;
  double epsilon1 = 0.5;   // residual bound
  double epsilon2 = 0.01;  // popularity-bias bound
  std::size_t tau = 100;
  std::size_t sample_size = 0;  // 0 means one draw per training pair
  DeltaKind delta = DeltaKind::kMse;
  MfHyperparams mf;
  std::uint64_t seed = 0;
  ResidualMode residual_mode = ResidualMode::kAbsolute;
  LearnerWeighting learner_weighting = LearnerWeighting::kSampleOnly;
  double holdout_fraction = 0.1;  // carved from train for the per-round bias signal
  CostRule cost_rule = CostRule::kPrinted;

  void validate() const {
    if (rounds < 1) throw ValidationError("rounds must be >= 1");
    auto in_range = [](double e) { return e >= kMinEpsilon && e <= kMaxEpsilon; };
    if (!in_range(epsilon1) && epsilon1 != kDisabledBound) {
      throw ValidationError("epsilon1 must lie in [1e-5, 1]");
    }
    if (!in_range(epsilon2) && epsilon2 != kDisabledBound) {
      throw ValidationError("epsilon2 must lie in [1e-5, 1]");
    }
    if (!(holdout_fraction >= 0.0 && holdout_fraction < 1.0)) {
      throw ValidationError("holdout_fraction must lie in [0, 1)");
    }
    mf.validate();
  }

  friend bool operator==(const BoostConfig&, const BoostConfig&) = default;
};

/// Per-training-pair weights, kept normalized to sum 1.
class WeightVector {
 public:
  WeightVector() = default;

  static WeightVector uniform(std::size_t n) {
    WeightVector w;
    w.values_.assign(n, n == 0 ? 0.0 : 1.0 / static_cast<double>(n));
    return w;
  }

  /// Normalizes `raw` by its sum.
  static WeightVector normalized(std::vector<double> raw) {
    double z = std::accumulate(raw.begin(), raw.end(), 0.0);
    if (!(z > 0.0) || !std::isfinite(z)) {
      throw DegenerateUpdateError("weight normalizer is " + std::to_string(z));
    }
    for (auto& x : raw) x /= z;
    WeightVector w;
    w.values_ = std::move(raw);
    return w;
  }

  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  std::span<const double> values() const noexcept { return values_; }
  double sum() const { return std::accumulate(values_.begin(), values_.end(), 0.0); }

  friend bool operator==(const WeightVector&, const WeightVector&) = default;

 private:
  std::vector<double> values_;
};

/// `n` draws with replacement; index i is drawn with probability w[i].
inline std::vector<std::size_t> sample_by_weight(std::span<const double> w, std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> out;
  out.reserve(n);
  if (w.empty() || n == 0) return out;
  Rng rng(seed);
  std::discrete_distribution<std::size_t> dist(w.begin(), w.end());
  for (std::size_t i = 0; i < n; ++i) out.push_back(dist(rng));
  return out;
}

inline double residual(double truth, double pred, ResidualMode mode) noexcept {
  double r = truth - pred;
  return mode == ResidualMode::kAbsolute ? std::abs(r) : r;
}

/// err = sum_i w_i (1 - exp(-r_i / r_max)) with w renormalized over the sample.
/// Zero when r_max is zero.
inline double compute_error_rate(std::span<const double> weights, std::span<const double> residuals) {
  if (weights.size() != residuals.size()) throw ValidationError("weights/residuals length mismatch");
  if (residuals.empty()) throw ValidationError("error rate over an empty sample");
  const double r_max = *std::max_element(residuals.begin(), residuals.end());
  if (r_max == 0.0) return 0.0;
  const double z = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (!(z > 0.0)) throw DegenerateWeightsError("sampled pairs carry no weight");
  double err = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    err += (weights[i] / z) * (1.0 - std::exp(-residuals[i] / r_max));
  }
  return err;
}

inline constexpr double kErrorClamp = 1e-10;

/// alpha = 0.5 * ln((1 - err) / err), err clamped to [1e-10, 1 - 1e-10].
inline double learner_weight(double err) {
  double e = std::clamp(err, kErrorClamp, 1.0 - kErrorClamp);
  return 0.5 * std::log((1.0 - e) / e);
}

/// Popularity-bias cost per sampled pair. A pair pays |pb| when its residual
/// exceeds eps1, |pb| exceeds eps2, and either the item is popular with pb > 0
/// or non-popular with pb < 0. An undefined pb yields no cost.
inline std::vector<double> compute_costs(std::span<const Index> items, std::span<const double> residuals,
                                         const PopularityPartition& partition, std::optional<double> pb,
                                         double eps1, double eps2,
                                         CostRule rule = CostRule::kPrinted) {
  if (items.size() != residuals.size()) throw ValidationError("items/residuals length mismatch");
  std::vector<double> costs(items.size(), 0.0);
  if (!pb) return costs;
  const double mag = std::abs(*pb);
  if (!(mag > eps2)) return costs;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (!(residuals[i] > eps1)) continue;
    auto g = partition.group(items[i]);
    const bool pos = rule == CostRule::kPrinted ? *pb > 0.0 : *pb < 0.0;
    if ((g == ItemGroup::kPopular && pos) || (g == ItemGroup::kNonPopular && !pos)) {
      costs[i] = mag;
    }
  }
  return costs;
}

/// w_i <- w_i * exp(alpha * rhat_i) * (1 + cost_i) for sampled (distinct)
/// indices, unchanged elsewhere, then renormalized.
inline WeightVector update_weights(const WeightVector& w, std::span<const std::size_t> sampled, double alpha,
                                   std::span<const double> normalized_residuals, std::span<const double> costs) {
  if (sampled.size() != normalized_residuals.size() || sampled.size() != costs.size()) {
    throw ValidationError("update inputs are not aligned");
  }
  std::vector<double> next(w.values().begin(), w.values().end());
  for (std::size_t k = 0; k < sampled.size(); ++k) {
    next.at(sampled[k]) *= std::exp(alpha * normalized_residuals[k]) * (1.0 + costs[k]);
  }
  return WeightVector::normalized(std::move(next));
}

struct EnsembleMember {
  double alpha = 0.0;
  FactorModel model;

  friend bool operator==(const EnsembleMember&, const EnsembleMember&) = default;
};

/// Telemetry for one boosting round. Holdout figures use the training holdout,
/// never the test split.
struct RoundTrace {
  std::size_t round = 0;
  double error_rate = 0.0;
  double alpha = 0.0;
  std::optional<double> round_pb;     // learner's PB under the round partition
  std::size_t round_tau = 0;
  std::size_t n_sampled = 0;          // distinct pairs in the sample
  std::size_t n_costed = 0;
  double cost_mass = 0.0;             // sum of costs over sampled pairs
  double holdout_error = 0.0;         // learner alone
  double ensemble_error = 0.0;        // ensemble of rounds 1..round
  std::optional<double> ensemble_pb;  // under the fit-set partition

  friend bool operator==(const RoundTrace&, const RoundTrace&) = default;
};

struct Ensemble {
  std::vector<EnsembleMember> members;
  BoostConfig config;
  std::vector<RoundTrace> trace;

  /// sum_j alpha_j * pred_j / sum_j alpha_j, clipped to [1, 5]; the plain mean
  /// of member predictions when sum_j alpha_j <= 0.
  double predict(Index u, Index m) const {
    double num = 0.0, den = 0.0, plain = 0.0;
    for (const auto& mem : members) {
      double p = mem.model.predict(u, m);
      num += mem.alpha * p;
      den += mem.alpha;
      plain += p;
    }
    if (den > 0.0) return clip_rating(num / den);
    return clip_rating(plain / static_cast<double>(members.size()));
  }

  double operator()(Index u, Index m) const { return predict(u, m); }

  friend bool operator==(const Ensemble&, const Ensemble&) = default;
};

inline double ensemble_predict(const Ensemble& ens, Index u, Index m) { return ens.predict(u, m); }

/// Training pairs used for fitting and the holdout used for round-level bias.
struct BoostingSplit {
  std::vector<Rating> fit;
  std::vector<Rating> holdout;
};

/// Seeded holdout of round(holdout_fraction * N) training pairs; both parts
/// keep the original pair order.
inline BoostingSplit split_for_boosting(std::span<const Rating> train, const BoostConfig& cfg) {
  BoostingSplit s;
  const auto n_hold = static_cast<std::size_t>(std::llround(cfg.holdout_fraction * static_cast<double>(train.size())));
  if (n_hold == 0 || n_hold >= train.size()) {
    s.fit.assign(train.begin(), train.end());
    return s;
  }
  std::vector<std::size_t> idx(train.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng(derive_seed(cfg.seed, "boost-holdout"));
  std::shuffle(idx.begin(), idx.end(), rng);
  std::vector<char> held(train.size(), 0);
  for (std::size_t k = 0; k < n_hold; ++k) held[idx[k]] = 1;
  for (std::size_t i = 0; i < train.size(); ++i) (held[i] ? s.holdout : s.fit).push_back(train[i]);
  return s;
}

inline std::uint64_t round_sample_seed(const BoostConfig& cfg, std::size_t round) {
  return derive_seed(cfg.seed, "boost-sample", round);
}

inline MfHyperparams round_learner_params(const BoostConfig& cfg, std::size_t round) {
  MfHyperparams hp = cfg.mf;
  hp.seed = derive_seed(cfg.seed, "boost-learner", round);
  return hp;
}

namespace detail {

inline Ensemble boost(const Dataset& data, const BoostConfig& cfg, bool with_costs) {
  cfg.validate();
  if (data.train.empty()) throw ValidationError("boosting needs a non-empty training split");

  const BoostingSplit split = split_for_boosting(data.train, cfg);
  const auto& fit = split.fit;
  const std::span<const Rating> eval = split.holdout.empty() ? std::span<const Rating>(fit)
                                                             : std::span<const Rating>(split.holdout);
  const std::size_t n = fit.size();
  const std::size_t draws = cfg.sample_size == 0 ? n : cfg.sample_size;
  const auto fit_partition = partition_by_counts(item_counts(fit, data.n_items), cfg.tau);

  Ensemble ens;
  ens.config = cfg;
  WeightVector w = WeightVector::uniform(n);
  std::vector<double> ens_num(eval.size(), 0.0), ens_den_plain(eval.size(), 0.0);
  double alpha_sum = 0.0;

  for (std::size_t j = 1; j <= cfg.rounds; ++j) {
    const bool sampled = cfg.learner_weighting != LearnerWeighting::kWeightOnly;
    std::vector<std::size_t> drawn;
    if (sampled) {
      drawn = sample_by_weight(w.values(), draws, round_sample_seed(cfg, j));
    } else {
      drawn.resize(n);
      std::iota(drawn.begin(), drawn.end(), std::size_t{0});
    }

    std::vector<Rating> sample;
    sample.reserve(drawn.size());
    for (auto i : drawn) sample.push_back(fit[i]);
    std::vector<double> learner_w(sample.size(), 1.0);
    if (cfg.learner_weighting != LearnerWeighting::kSampleOnly) {
      double s = 0.0;
      for (std::size_t k = 0; k < drawn.size(); ++k) s += (learner_w[k] = w[drawn[k]]);
      for (auto& x : learner_w) x *= static_cast<double>(learner_w.size()) / s;
    }
    FactorModel model = train_weighted_mf(sample, learner_w, round_learner_params(cfg, j), data.n_users,
                                          data.n_items);

    std::vector<std::size_t> distinct = drawn;
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());

    std::vector<double> resid(distinct.size()), sw(distinct.size());
    std::vector<Index> items(distinct.size());
    for (std::size_t k = 0; k < distinct.size(); ++k) {
      const auto& r = fit[distinct[k]];
      resid[k] = residual(r.value, model.predict(r.user, r.item), cfg.residual_mode);
      sw[k] = w[distinct[k]];
      items[k] = r.item;
    }
    const double err = compute_error_rate(sw, resid);
    const double alpha = learner_weight(err);

    // Popularity in this round is judged on the sample itself, with tau
    // scaled to the sample size.
    const auto round_tau = static_cast<std::size_t>(std::llround(
        static_cast<double>(cfg.tau) * static_cast<double>(drawn.size()) / static_cast<double>(n)));
    const auto round_partition = partition_by_counts(item_counts(sample, data.n_items), round_tau);
    const auto round_report = popularity_bias(model, eval, round_partition, cfg.delta);

    std::vector<double> costs(distinct.size(), 0.0);
    if (with_costs) {
      costs = compute_costs(items, resid, round_partition, round_report.popularity_bias, cfg.epsilon1,
                            cfg.epsilon2, cfg.cost_rule);
    }

    const double r_max = *std::max_element(resid.begin(), resid.end());
    std::vector<double> rhat(resid.size(), 0.0);
    if (r_max != 0.0) {
      for (std::size_t k = 0; k < resid.size(); ++k) rhat[k] = resid[k] / r_max;
    }
    w = update_weights(w, distinct, alpha, rhat, costs);

    RoundTrace t;
    t.round = j;
    t.error_rate = err;
    t.alpha = alpha;
    t.round_pb = round_report.popularity_bias;
    t.round_tau = round_tau;
    t.n_sampled = distinct.size();
    for (double c : costs) {
      if (c > 0.0) ++t.n_costed;
      t.cost_mass += c;
    }
    t.holdout_error = round_report.overall_error;

    alpha_sum += alpha;
    for (std::size_t k = 0; k < eval.size(); ++k) {
      double p = model.predict(eval[k].user, eval[k].item);
      ens_num[k] += alpha * p;
      ens_den_plain[k] += p;
    }
    ens.members.push_back({alpha, std::move(model)});

    // Same aggregation as Ensemble::predict, reusing the accumulated sums.
    double total = 0.0, pop = 0.0, nonpop = 0.0;
    std::size_t n_pop = 0, n_nonpop = 0;
    for (std::size_t k = 0; k < eval.size(); ++k) {
      double p = alpha_sum > 0.0 ? ens_num[k] / alpha_sum : ens_den_plain[k] / static_cast<double>(j);
      double d = delta(cfg.delta, eval[k].value, clip_rating(p));
      total += d;
      auto g = fit_partition.group(eval[k].item);
      if (g == ItemGroup::kPopular) {
        pop += d;
        ++n_pop;
      } else if (g == ItemGroup::kNonPopular) {
        nonpop += d;
        ++n_nonpop;
      }
    }
    t.ensemble_error = total / static_cast<double>(eval.size());
    if (n_pop > 0 && n_nonpop > 0) {
      t.ensemble_pb = nonpop / static_cast<double>(n_nonpop) - pop / static_cast<double>(n_pop);
    }
    ens.trace.push_back(t);
  }
  return ens;
}

}  // namespace detail

/// Boosted ensemble of weighted-MF learners with the popularity-bias cost in
/// the weight update. Deterministic given cfg.seed.
inline Ensemble fairboost_train(const Dataset& train, const BoostConfig& cfg) {
  return detail::boost(train, cfg, true);
}

/// Same procedure with every cost forced to zero.
inline Ensemble adaboost_train(const Dataset& train, const BoostConfig& cfg) {
  return detail::boost(train, cfg, false);
}

}  // namespace fairboost

#endif  // FAIRBOOST_BOOSTING_HPP_
