#ifndef FAIRBOOST_METRICS_HPP_
#define FAIRBOOST_METRICS_HPP_

#include <cmath>
#include <concepts>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "fairboost/error.hpp"
#include "fairboost/ratings.hpp"

namespace fairboost {

enum class DeltaKind { kMse, kMae };

inline std::string_view to_string(DeltaKind k) { return k == DeltaKind::kMse ? "MSE" : "MAE"; }

inline DeltaKind parse_delta(std::string_view s) {
  if (s == "MSE" || s == "mse") return DeltaKind::kMse;
  if (s == "MAE" || s == "mae") return DeltaKind::kMae;
  throw ValidationError("unknown delta '" + std::string(s) + "' (expected MSE or MAE)");
}

/// Anything that maps (user, item) to a predicted rating.
template <class P>
concept Predictor = requires(const P& p, Index u, Index m) {
  { p(u, m) } -> std::convertible_to<double>;
};

inline double delta(DeltaKind kind, double truth, double pred) noexcept {
  double d = truth - pred;
  return kind == DeltaKind::kMse ? d * d : std::abs(d);
}

/// Mean delta over observed pairs.
template <Predictor P>
double naive_loss(const P& predictor, std::span<const Rating> pairs, DeltaKind kind) {
  if (pairs.empty()) throw UndefinedMetricError("naive loss over an empty pair set");
  double sum = 0.0;
  for (const auto& r : pairs) sum += delta(kind, r.value, predictor(r.user, r.item));
  return sum / static_cast<double>(pairs.size());
}

/// Mean delta over every cell of a fully known universe.
template <Predictor P>
double ideal_loss(const P& predictor, const SyntheticUniverse& universe, DeltaKind kind) {
  double sum = 0.0;
  for (Index u = 0; u < universe.n_users; ++u) {
    for (Index m = 0; m < universe.n_items; ++m) {
      sum += delta(kind, universe.truth(u, m), predictor(u, m));
    }
  }
  return sum / static_cast<double>(universe.cells());
}

/// Error summary on a test split. Group errors and the bias are empty when the
/// corresponding group has no test pairs; the bias is never reported as 0 in
/// that case.
struct MetricsReport {
  double overall_error = 0.0;
  std::optional<double> error_popular;
  std::optional<double> error_nonpopular;
  std::optional<double> popularity_bias;  // error_nonpopular - error_popular
  DeltaKind delta = DeltaKind::kMse;
  std::size_t tau = 0;
  std::size_t n_test_pairs = 0;
  std::size_t n_popular_pairs = 0;
  std::size_t n_nonpopular_pairs = 0;
  std::size_t n_excluded_pairs = 0;  // items unrated in the partition's data

  friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

template <Predictor P>
MetricsReport popularity_bias(const P& predictor, std::span<const Rating> test_pairs,
                              const PopularityPartition& partition, DeltaKind kind) {
  if (test_pairs.empty()) throw UndefinedMetricError("popularity bias over an empty test set");
  MetricsReport rep;
  rep.delta = kind;
  rep.tau = partition.tau;
  rep.n_test_pairs = test_pairs.size();
  double total = 0.0, pop = 0.0, nonpop = 0.0;
  for (const auto& r : test_pairs) {
    double d = delta(kind, r.value, predictor(r.user, r.item));
    total += d;
    switch (partition.group(r.item)) {
      case ItemGroup::kPopular:
        pop += d;
        ++rep.n_popular_pairs;
        break;
      case ItemGroup::kNonPopular:
        nonpop += d;
        ++rep.n_nonpopular_pairs;
        break;
      case ItemGroup::kUnrated:
        ++rep.n_excluded_pairs;
        break;
    }
  }
  rep.overall_error = total / static_cast<double>(rep.n_test_pairs);
  if (rep.n_popular_pairs > 0) rep.error_popular = pop / static_cast<double>(rep.n_popular_pairs);
  if (rep.n_nonpopular_pairs > 0) {
    rep.error_nonpopular = nonpop / static_cast<double>(rep.n_nonpopular_pairs);
  }
  if (rep.error_popular && rep.error_nonpopular) {
    rep.popularity_bias = *rep.error_nonpopular - *rep.error_popular;
  }
  return rep;
}

}  // namespace fairboost

#endif  // FAIRBOOST_METRICS_HPP_
