#ifndef FAIRBOOST_EXPERIMENT_HPP_
#define FAIRBOOST_EXPERIMENT_HPP_

// Benchmark runner: load, split, partition, train each algorithm, score on
// the test split.
//
// Seed derivation from ExperimentConfig::seed (all via derive_seed):
//   subsample            derive(seed, "subsample")
//   untimed split        seed, passed to temporal_split
//   repeat r root        root_r = derive(seed, "repeat", r)
//   MF / MF_IPS          derive(root_r, "mf")
//   ADABOOST / FAIRBOOST derive(root_r, "boost")   (shared, so the two agree
//                                                   whenever no cost fires)
//   search draws         derive(root_r, "search")
//   search validation    derive(root_r, "validation")

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "fairboost/boosting.hpp"
#include "fairboost/error.hpp"
#include "fairboost/ips.hpp"
#include "fairboost/metrics.hpp"
#include "fairboost/mf.hpp"
#include "fairboost/random.hpp"
#include "fairboost/ratings.hpp"
#include "fairboost/serialize.hpp"

namespace fairboost {

enum class Algorithm { kMf, kMfIps, kAdaBoost, kFairBoost };

inline std::string_view to_string(Algorithm a) {
  switch (a) {
    case Algorithm::kMf: return "MF";
    case Algorithm::kMfIps: return "MF_IPS";
    case Algorithm::kAdaBoost: return "ADABOOST";
    case Algorithm::kFairBoost: return "FAIRBOOST";
  }
  return "?";
}

inline std::string_view display_name(Algorithm a) {
  switch (a) {
    case Algorithm::kMf: return "Matrix factorization";
    case Algorithm::kMfIps: return "Matrix factorization with IPS";
    case Algorithm::kAdaBoost: return "Adaboost";
    case Algorithm::kFairBoost: return "FairBoost";
  }
  return "?";
}

inline Algorithm parse_algorithm(std::string_view s) {
  std::string u(s);
  for (auto& c : u) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  if (u == "MF") return Algorithm::kMf;
  if (u == "MF_IPS" || u == "MF-IPS" || u == "IPS") return Algorithm::kMfIps;
  if (u == "ADABOOST" || u == "ADA") return Algorithm::kAdaBoost;
  if (u == "FAIRBOOST" || u == "FAIR") return Algorithm::kFairBoost;
  throw ValidationError("unknown algorithm '" + std::string(s) + "'");
}

enum class SearchObjective { kMinPbAbs, kMinPbSubjectToError };

inline std::string_view to_string(SearchObjective o) {
  return o == SearchObjective::kMinPbAbs ? "MIN_PB_ABS" : "MIN_PB_SUBJECT_TO_ERROR";
}

inline SearchObjective parse_objective(std::string_view s) {
  if (s == "MIN_PB_ABS" || s == "min_pb_abs") return SearchObjective::kMinPbAbs;
  if (s == "MIN_PB_SUBJECT_TO_ERROR" || s == "min_pb_subject_to_error") return SearchObjective::kMinPbSubjectToError;
  throw ValidationError("unknown search objective '" + std::string(s) + "'");
}

struct SearchSpec {
  std::size_t n_trials = 16;
  double eps1_lo = kMinEpsilon, eps1_hi = kMaxEpsilon;
  double eps2_lo = kMinEpsilon, eps2_hi = kMaxEpsilon;
  SearchObjective objective = SearchObjective::kMinPbSubjectToError;
  double error_budget = 0.10;  // relative to the MF baseline's validation error
  double validation_fraction = 0.1;

  void validate() const {
    if (n_trials < 1) throw ValidationError("search needs at least one trial");
    auto range_ok = [](double lo, double hi) { return lo >= kMinEpsilon && hi <= kMaxEpsilon && lo < hi; };
    if (!range_ok(eps1_lo, eps1_hi)) throw ValidationError("eps1 range must satisfy 1e-5 <= lo < hi <= 1");
    if (!range_ok(eps2_lo, eps2_hi)) throw ValidationError("eps2 range must satisfy 1e-5 <= lo < hi <= 1");
    if (!(error_budget >= 0.0)) throw ValidationError("error budget must be >= 0");
    if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
      throw ValidationError("validation fraction must lie in (0, 1)");
    }
  }
};

enum class Loader { kMovieLens, kCsv };

struct DatasetSpec {
  std::filesystem::path path;
  Loader loader = Loader::kMovieLens;
  CsvSchema csv;
  double subsample = 1.0;  // seeded fraction of records kept before splitting
};

enum class ReportFormat { kJson, kCsv, kMarkdown };

struct OutputSpec {
  std::filesystem::path dir;
  std::vector<ReportFormat> formats{ReportFormat::kJson, ReportFormat::kCsv, ReportFormat::kMarkdown};
};

struct ExperimentConfig {
  DatasetSpec dataset;
  std::vector<Algorithm> algorithms{Algorithm::kMf, Algorithm::kMfIps, Algorithm::kAdaBoost, Algorithm::kFairBoost};
  std::size_t tau = 100;
  DeltaKind delta = DeltaKind::kMse;
  double split_fraction = 0.8;
  BoostConfig boost;
  std::optional<SearchSpec> search;
  std::uint64_t seed = 0;
  std::size_t repeats = 1;
  PropensityKind propensity = PropensityKind::kItemCount;
  double clip_floor = kDefaultClipFloor;
  OutputSpec output;

  void validate() const {
    if (!(split_fraction > 0.0 && split_fraction < 1.0)) throw ValidationError("split_fraction must lie in (0, 1)");
    if (algorithms.empty()) throw ValidationError("no algorithms requested");
    if (repeats < 1) throw ValidationError("repeats must be >= 1");
    if (!(dataset.subsample > 0.0 && dataset.subsample <= 1.0)) {
      throw ValidationError("subsample must lie in (0, 1]");
    }
    if (propensity == PropensityKind::kExplicit) throw ValidationError("experiments estimate propensities");
    if (!(clip_floor > 0.0 && clip_floor < 1.0)) throw ValidationError("clip_floor must lie in (0, 1)");
    effective_boost().validate();
    if (search) search->validate();
  }

  /// Boost settings with the experiment-level tau and delta applied.
  BoostConfig effective_boost() const {
    BoostConfig b = boost;
    b.tau = tau;
    b.delta = delta;
    return b;
  }
};

struct DatasetSummary {
  std::size_t n_records = 0;
  Index n_users = 0, n_items = 0;
  std::size_t n_train = 0, n_test = 0;
  std::size_t train_users = 0, train_items = 0, test_users = 0, test_items = 0;
  std::size_t n_popular = 0, n_nonpopular = 0;
};

struct SearchTrial {
  double epsilon1 = 0.0;
  double epsilon2 = 0.0;
  double validation_error = 0.0;
  std::optional<double> validation_pb;
};

struct SearchResult {
  std::vector<SearchTrial> trials;
  std::size_t best = 0;
  double mf_validation_error = 0.0;
  SearchObjective objective = SearchObjective::kMinPbSubjectToError;

  const SearchTrial& best_trial() const { return trials.at(best); }
};

struct AlgorithmResult {
  Algorithm algorithm = Algorithm::kMf;
  MetricsReport report;                 // averaged over repeats
  std::vector<MetricsReport> repeats;   // one per repeat
  std::vector<RoundTrace> trace;        // boosting only, first repeat
  std::optional<SearchResult> search;   // FAIRBOOST with a search spec, first repeat
  std::optional<double> epsilon1, epsilon2;
};

struct ExperimentResult {
  DatasetSummary dataset;
  std::vector<AlgorithmResult> results;

  const AlgorithmResult* find(Algorithm a) const {
    for (const auto& r : results) {
      if (r.algorithm == a) return &r;
    }
    return nullptr;
  }
};

inline InteractionLog load_dataset(const DatasetSpec& spec, std::uint64_t seed) {
  InteractionLog log = spec.loader == Loader::kMovieLens ? load_movielens(spec.path) : load_csv(spec.path, spec.csv);
  if (spec.subsample < 1.0) {
    Rng rng(derive_seed(seed, "subsample"));
    std::bernoulli_distribution keep(spec.subsample);
    InteractionLog kept;
    for (auto& r : log.records) {
      if (keep(rng)) kept.records.push_back(std::move(r));
    }
    log = std::move(kept);
  }
  return log;
}

/// Moves a seeded fraction of `data.train` into `test`; the original test
/// split is dropped.
inline Dataset holdout_from_train(const Dataset& data, double fraction, std::uint64_t seed) {
  Dataset out;
  out.n_users = data.n_users;
  out.n_items = data.n_items;
  out.user_ids = data.user_ids;
  out.item_ids = data.item_ids;
  out.user_index = data.user_index;
  out.item_index = data.item_index;
  std::vector<std::size_t> idx(data.train.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  const auto n_hold = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(idx.size())));
  std::vector<char> held(idx.size(), 0);
  for (std::size_t k = 0; k < n_hold; ++k) held[idx[k]] = 1;
  for (std::size_t i = 0; i < data.train.size(); ++i) (held[i] ? out.test : out.train).push_back(data.train[i]);
  return out;
}

namespace detail {

inline double pb_key(const std::optional<double>& pb) {
  return pb ? std::abs(*pb) : std::numeric_limits<double>::infinity();
}

inline std::size_t select_trial(const std::vector<SearchTrial>& trials, SearchObjective objective,
                                double mf_error, double budget) {
  std::size_t best = trials.size();
  auto better = [&](std::size_t a, std::size_t b) {
    return b == trials.size() || pb_key(trials[a].validation_pb) < pb_key(trials[b].validation_pb);
  };
  for (std::size_t i = 0; i < trials.size(); ++i) {
    if (objective == SearchObjective::kMinPbSubjectToError &&
        trials[i].validation_error > (1.0 + budget) * mf_error) {
      continue;
    }
    if (better(i, best)) best = i;
  }
  if (best == trials.size()) {
    // Nothing within budget: fall back to the most accurate trial.
    best = 0;
    for (std::size_t i = 1; i < trials.size(); ++i) {
      if (trials[i].validation_error < trials[best].validation_error) best = i;
    }
  }
  return best;
}

}  // namespace detail

/// Selects the winning trial index under `objective`.
inline std::size_t select_trial(const std::vector<SearchTrial>& trials, SearchObjective objective,
                                double mf_error = 0.0, double budget = 0.0) {
  if (trials.empty()) throw ValidationError("no trials to select from");
  return detail::select_trial(trials, objective, mf_error, budget);
}

/// Log-uniform random search over (eps1, eps2). Each trial trains FairBoost on
/// the training split minus a seeded validation holdout and is scored on that
/// holdout; the test split is never touched.
inline SearchResult random_search(const Dataset& data, const ExperimentConfig& cfg, const SearchSpec& spec,
                                  std::uint64_t root_seed) {
  spec.validate();
  const Dataset inner = holdout_from_train(data, spec.validation_fraction, derive_seed(root_seed, "validation"));
  if (inner.train.empty() || inner.test.empty()) throw ValidationError("training split too small for search");
  const auto partition = partition_popularity(inner, cfg.tau);

  SearchResult result;
  result.objective = spec.objective;
  if (spec.objective == SearchObjective::kMinPbSubjectToError) {
    MfHyperparams hp = cfg.boost.mf;
    hp.seed = derive_seed(root_seed, "mf");
    result.mf_validation_error = popularity_bias(train_mf(inner, hp), inner.test, partition, cfg.delta).overall_error;
  }

  BoostConfig bc = cfg.effective_boost();
  bc.seed = derive_seed(root_seed, "boost");
  Rng rng(derive_seed(root_seed, "search"));
  std::uniform_real_distribution<double> u1(std::log(spec.eps1_lo), std::log(spec.eps1_hi));
  std::uniform_real_distribution<double> u2(std::log(spec.eps2_lo), std::log(spec.eps2_hi));
  for (std::size_t t = 0; t < spec.n_trials; ++t) {
    SearchTrial trial;
    trial.epsilon1 = std::clamp(std::exp(u1(rng)), spec.eps1_lo, spec.eps1_hi);
    trial.epsilon2 = std::clamp(std::exp(u2(rng)), spec.eps2_lo, spec.eps2_hi);
    bc.epsilon1 = trial.epsilon1;
    bc.epsilon2 = trial.epsilon2;
    auto ens = fairboost_train(inner, bc);
    auto rep = popularity_bias(ens, inner.test, partition, cfg.delta);
    trial.validation_error = rep.overall_error;
    trial.validation_pb = rep.popularity_bias;
    result.trials.push_back(trial);
  }
  result.best = detail::select_trial(result.trials, spec.objective, result.mf_validation_error, spec.error_budget);
  return result;
}

inline DatasetSummary summarize(const InteractionLog& log, const Dataset& ds, const PopularityPartition& part) {
  DatasetSummary s;
  s.n_records = log.size();
  s.n_users = ds.n_users;
  s.n_items = ds.n_items;
  s.n_train = ds.train.size();
  s.n_test = ds.test.size();
  auto distinct = [](const std::vector<Rating>& rs, auto key, std::size_t n) {
    std::vector<char> seen(n, 0);
    std::size_t c = 0;
    for (const auto& r : rs) {
      auto k = key(r);
      if (!seen[k]) {
        seen[k] = 1;
        ++c;
      }
    }
    return c;
  };
  auto user = [](const Rating& r) { return r.user; };
  auto item = [](const Rating& r) { return r.item; };
  s.train_users = distinct(ds.train, user, ds.n_users);
  s.train_items = distinct(ds.train, item, ds.n_items);
  s.test_users = distinct(ds.test, user, ds.n_users);
  s.test_items = distinct(ds.test, item, ds.n_items);
  s.n_popular = part.popular.size();
  s.n_nonpopular = part.non_popular.size();
  return s;
}

/// Field-wise mean of repeat reports; a group value stays defined only if it
/// is defined in every repeat.
inline MetricsReport average_reports(const std::vector<MetricsReport>& reps) {
  MetricsReport out = reps.front();
  if (reps.size() == 1) return out;
  const double n = static_cast<double>(reps.size());
  auto mean_opt = [&](auto field) -> std::optional<double> {
    double s = 0.0;
    for (const auto& r : reps) {
      if (!(r.*field)) return std::nullopt;
      s += *(r.*field);
    }
    return s / n;
  };
  double total = 0.0;
  for (const auto& r : reps) total += r.overall_error;
  out.overall_error = total / n;
  out.error_popular = mean_opt(&MetricsReport::error_popular);
  out.error_nonpopular = mean_opt(&MetricsReport::error_nonpopular);
  out.popularity_bias.reset();
  if (out.error_popular && out.error_nonpopular) out.popularity_bias = *out.error_nonpopular - *out.error_popular;
  return out;
}

/// Runs every configured algorithm on an already split dataset.
inline ExperimentResult run_on_dataset(const Dataset& ds, const ExperimentConfig& cfg) {
  cfg.validate();
  if (ds.train.empty() || ds.test.empty()) throw SplitError("train and test splits must both be non-empty");
  const auto partition = partition_popularity(ds, cfg.tau);

  ExperimentResult out;
  for (Algorithm algo : cfg.algorithms) {
    AlgorithmResult ar;
    ar.algorithm = algo;
    for (std::size_t r = 0; r < cfg.repeats; ++r) {
      const std::uint64_t root = derive_seed(cfg.seed, "repeat", r);
      try {
        MetricsReport rep;
        switch (algo) {
          case Algorithm::kMf: {
            MfHyperparams hp = cfg.boost.mf;
            hp.seed = derive_seed(root, "mf");
            rep = popularity_bias(train_mf(ds, hp), ds.test, partition, cfg.delta);
            break;
          }
          case Algorithm::kMfIps: {
            MfHyperparams hp = cfg.boost.mf;
            hp.seed = derive_seed(root, "mf");
            auto prop = cfg.propensity == PropensityKind::kItemCount
                            ? estimate_item_propensity(ds, cfg.clip_floor)
                            : estimate_naive_bayes_propensity(ds, cfg.clip_floor);
            rep = popularity_bias(train_mf_ips(ds, prop, hp), ds.test, partition, cfg.delta);
            break;
          }
          case Algorithm::kAdaBoost:
          case Algorithm::kFairBoost: {
            BoostConfig bc = cfg.effective_boost();
            bc.seed = derive_seed(root, "boost");
            if (algo == Algorithm::kFairBoost && cfg.search) {
              auto sr = random_search(ds, cfg, *cfg.search, root);
              bc.epsilon1 = sr.best_trial().epsilon1;
              bc.epsilon2 = sr.best_trial().epsilon2;
              if (r == 0) ar.search = std::move(sr);
            }
            auto ens = algo == Algorithm::kFairBoost ? fairboost_train(ds, bc) : adaboost_train(ds, bc);
            rep = popularity_bias(ens, ds.test, partition, cfg.delta);
            if (r == 0) {
              ar.trace = ens.trace;
              if (algo == Algorithm::kFairBoost) {
                ar.epsilon1 = bc.epsilon1;
                ar.epsilon2 = bc.epsilon2;
              }
            }
            break;
          }
        }
        ar.repeats.push_back(rep);
      } catch (const InputError&) {
        throw;
      } catch (const Error& e) {
        throw Error(std::string(to_string(algo)) + ": " + e.what());
      }
    }
    ar.report = average_reports(ar.repeats);
    out.results.push_back(std::move(ar));
  }
  return out;
}

inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  auto log = load_dataset(cfg.dataset, cfg.seed);
  auto ds = temporal_split(log, cfg.split_fraction, cfg.seed);
  auto out = run_on_dataset(ds, cfg);
  out.dataset = summarize(log, ds, partition_popularity(ds, cfg.tau));
  return out;
}

/// Search on the configured dataset's training split (first repeat's seeds).
inline SearchResult random_search(const ExperimentConfig& cfg, const SearchSpec& spec) {
  cfg.validate();
  if (std::find(cfg.algorithms.begin(), cfg.algorithms.end(), Algorithm::kFairBoost) == cfg.algorithms.end()) {
    throw ValidationError("random search tunes FAIRBOOST, which is not among the configured algorithms");
  }
  auto log = load_dataset(cfg.dataset, cfg.seed);
  auto ds = temporal_split(log, cfg.split_fraction, cfg.seed);
  return random_search(ds, cfg, spec, derive_seed(cfg.seed, "repeat", 0));
}

}  // namespace fairboost

#endif  // FAIRBOOST_EXPERIMENT_HPP_
