#ifndef FAIRBOOST_SERIALIZE_HPP_
#define FAIRBOOST_SERIALIZE_HPP_

// JSON encodings for models, configs and reports. Every blob carries a
// "format" tag and a "version"; doubles are written in shortest round-trip
// form, so decode(encode(x)) == x exactly.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <string>

#include "json.hpp"

#include "fairboost/boosting.hpp"
#include "fairboost/error.hpp"
#include "fairboost/ips.hpp"
#include "fairboost/metrics.hpp"
#include "fairboost/mf.hpp"

namespace fairboost {

using nlohmann::json;

inline constexpr int kFormatVersion = 1;

namespace detail {

// JSON has no infinity; the disabled-bound sentinel is written as "inf".
inline json bound_to_json(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

inline double bound_from_json(const json& j) {
  if (j.is_string()) {
    auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    throw ValidationError("bad numeric value '" + s + "'");
  }
  return j.get<double>();
}

inline json opt_to_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

inline std::optional<double> opt_from_json(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

inline void expect_format(const json& j, const char* format) {
  if (!j.is_object() || j.value("format", "") != format) {
    throw ValidationError(std::string("expected a '") + format + "' blob");
  }
  if (j.value("version", 0) != kFormatVersion) {
    throw ValidationError(std::string("unsupported '") + format + "' version");
  }
}

}  // namespace detail

inline void to_json(json& j, const MfHyperparams& hp) {
  j = json{{"latent_dim", hp.latent_dim},
           {"learning_rate", hp.learning_rate},
           {"regularization", hp.regularization},
           {"epochs", hp.epochs},
           {"seed", hp.seed}};
}

inline void from_json(const json& j, MfHyperparams& hp) {
  MfHyperparams d;
  hp.latent_dim = j.value("latent_dim", d.latent_dim);
  hp.learning_rate = j.value("learning_rate", d.learning_rate);
  hp.regularization = j.value("regularization", d.regularization);
  hp.epochs = j.value("epochs", d.epochs);
  hp.seed = j.value("seed", d.seed);
}

inline void to_json(json& j, const FactorModel& m) {
  j = json{{"format", "fairboost.factor_model"},
           {"version", kFormatVersion},
           {"n_users", m.n_users},
           {"n_items", m.n_items},
           {"dim", m.dim},
           {"hyperparams", m.hyperparams},
           {"global_mean", m.global_mean},
           {"user_bias", m.user_bias},
           {"item_bias", m.item_bias},
           {"user_factors", m.user_factors},
           {"item_factors", m.item_factors}};
}

inline void from_json(const json& j, FactorModel& m) {
  detail::expect_format(j, "fairboost.factor_model");
  m.n_users = j.at("n_users").get<Index>();
  m.n_items = j.at("n_items").get<Index>();
  m.dim = j.at("dim").get<std::size_t>();
  m.hyperparams = j.at("hyperparams").get<MfHyperparams>();
  m.global_mean = j.at("global_mean").get<double>();
  m.user_bias = j.at("user_bias").get<std::vector<double>>();
  m.item_bias = j.at("item_bias").get<std::vector<double>>();
  m.user_factors = j.at("user_factors").get<std::vector<double>>();
  m.item_factors = j.at("item_factors").get<std::vector<double>>();
  if (m.user_bias.size() != m.n_users || m.item_bias.size() != m.n_items ||
      m.user_factors.size() != std::size_t{m.n_users} * m.dim ||
      m.item_factors.size() != std::size_t{m.n_items} * m.dim) {
    throw ValidationError("factor model arrays disagree with its dimensions");
  }
}

inline void to_json(json& j, const BoostConfig& c) {
  j = json{{"rounds", c.rounds},
           {"epsilon1", detail::bound_to_json(c.epsilon1)},
           {"epsilon2", detail::bound_to_json(c.epsilon2)},
           {"tau", c.tau},
           {"sample_size", c.sample_size},
           {"delta", to_string(c.delta)},
           {"mf", c.mf},
           {"seed", c.seed},
           {"residual_mode", to_string(c.residual_mode)},
           {"learner_weighting", to_string(c.learner_weighting)},
           {"cost_rule", to_string(c.cost_rule)},
           {"holdout_fraction", c.holdout_fraction}};
}

inline void from_json(const json& j, BoostConfig& c) {
  BoostConfig d;
  c.rounds = j.value("rounds", d.rounds);
  c.epsilon1 = j.contains("epsilon1") ? detail::bound_from_json(j["epsilon1"]) : d.epsilon1;
  c.epsilon2 = j.contains("epsilon2") ? detail::bound_from_json(j["epsilon2"]) : d.epsilon2;
  c.tau = j.value("tau", d.tau);
  c.sample_size = j.value("sample_size", d.sample_size);
  c.delta = parse_delta(j.value("delta", std::string(to_string(d.delta))));
  c.mf = j.value("mf", d.mf);
  c.seed = j.value("seed", d.seed);
  c.residual_mode = parse_residual_mode(j.value("residual_mode", std::string(to_string(d.residual_mode))));
  c.learner_weighting =
      parse_learner_weighting(j.value("learner_weighting", std::string(to_string(d.learner_weighting))));
  c.cost_rule = parse_cost_rule(j.value("cost_rule", std::string(to_string(d.cost_rule))));
  c.holdout_fraction = j.value("holdout_fraction", d.holdout_fraction);
}

inline void to_json(json& j, const RoundTrace& t) {
  j = json{{"round", t.round},
           {"error_rate", t.error_rate},
           {"alpha", t.alpha},
           {"round_pb", detail::opt_to_json(t.round_pb)},
           {"round_tau", t.round_tau},
           {"n_sampled", t.n_sampled},
           {"n_costed", t.n_costed},
           {"cost_mass", t.cost_mass},
           {"holdout_error", t.holdout_error},
           {"ensemble_error", t.ensemble_error},
           {"ensemble_pb", detail::opt_to_json(t.ensemble_pb)}};
}

inline void from_json(const json& j, RoundTrace& t) {
  t.round = j.at("round").get<std::size_t>();
  t.error_rate = j.at("error_rate").get<double>();
  t.alpha = j.at("alpha").get<double>();
  t.round_pb = detail::opt_from_json(j.at("round_pb"));
  t.round_tau = j.at("round_tau").get<std::size_t>();
  t.n_sampled = j.at("n_sampled").get<std::size_t>();
  t.n_costed = j.at("n_costed").get<std::size_t>();
  t.cost_mass = j.at("cost_mass").get<double>();
  t.holdout_error = j.at("holdout_error").get<double>();
  t.ensemble_error = j.at("ensemble_error").get<double>();
  t.ensemble_pb = detail::opt_from_json(j.at("ensemble_pb"));
}

inline void to_json(json& j, const Ensemble& e) {
  json members = json::array();
  for (const auto& m : e.members) members.push_back({{"alpha", m.alpha}, {"model", m.model}});
  j = json{{"format", "fairboost.ensemble"},
           {"version", kFormatVersion},
           {"config", e.config},
           {"members", members},
           {"trace", e.trace}};
}

inline void from_json(const json& j, Ensemble& e) {
  detail::expect_format(j, "fairboost.ensemble");
  e.config = j.at("config").get<BoostConfig>();
  e.members.clear();
  for (const auto& m : j.at("members")) {
    e.members.push_back({m.at("alpha").get<double>(), m.at("model").get<FactorModel>()});
  }
  e.trace = j.at("trace").get<std::vector<RoundTrace>>();
  if (e.members.empty()) throw ValidationError("ensemble has no members");
}

inline json to_json(const PropensityModel& p) {
  json j{{"format", "fairboost.propensity"},
         {"version", kFormatVersion},
         {"kind", to_string(p.kind())},
         {"clip_floor", p.clip_floor()},
         {"fallback", p.fallback()}};
  switch (p.kind()) {
    case PropensityKind::kItemCount: j["item_scores"] = p.item_scores(); break;
    case PropensityKind::kNaiveBayes: j["rating_scores"] = p.rating_scores(); break;
    case PropensityKind::kExplicit:
      j["n_users"] = p.matrix_users();
      j["n_items"] = p.matrix_items();
      j["scores"] = p.matrix_scores();
      break;
  }
  return j;
}

inline PropensityModel propensity_from_json(const json& j) {
  detail::expect_format(j, "fairboost.propensity");
  auto kind = j.at("kind").get<std::string>();
  double floor = j.at("clip_floor").get<double>();
  double fallback = j.at("fallback").get<double>();
  if (kind == "ITEM_COUNT") {
    return PropensityModel::item_scores(j.at("item_scores").get<std::vector<double>>(), floor).with_default(fallback);
  }
  if (kind == "NAIVE_BAYES") {
    return PropensityModel::rating_scores(j.at("rating_scores").get<RatingHistogram>(), floor).with_default(fallback);
  }
  if (kind == "EXPLICIT") {
    return PropensityModel::matrix(j.at("n_users").get<Index>(), j.at("n_items").get<Index>(),
                                   j.at("scores").get<std::vector<double>>(), floor)
        .with_default(fallback);
  }
  throw ValidationError("unknown propensity kind '" + kind + "'");
}

/// Flat object with the report's field names; undefined values are null.
inline void to_json(json& j, const MetricsReport& r) {
  j = json{{"overall_error", r.overall_error},
           {"error_popular", detail::opt_to_json(r.error_popular)},
           {"error_nonpopular", detail::opt_to_json(r.error_nonpopular)},
           {"popularity_bias", detail::opt_to_json(r.popularity_bias)},
           {"delta", to_string(r.delta)},
           {"tau", r.tau},
           {"n_test_pairs", r.n_test_pairs},
           {"n_popular_pairs", r.n_popular_pairs},
           {"n_nonpopular_pairs", r.n_nonpopular_pairs},
           {"n_excluded_pairs", r.n_excluded_pairs}};
}

inline void from_json(const json& j, MetricsReport& r) {
  r.overall_error = j.at("overall_error").get<double>();
  r.error_popular = detail::opt_from_json(j.at("error_popular"));
  r.error_nonpopular = detail::opt_from_json(j.at("error_nonpopular"));
  r.popularity_bias = detail::opt_from_json(j.at("popularity_bias"));
  r.delta = parse_delta(j.at("delta").get<std::string>());
  r.tau = j.at("tau").get<std::size_t>();
  r.n_test_pairs = j.at("n_test_pairs").get<std::size_t>();
  r.n_popular_pairs = j.value("n_popular_pairs", std::size_t{0});
  r.n_nonpopular_pairs = j.value("n_nonpopular_pairs", std::size_t{0});
  r.n_excluded_pairs = j.value("n_excluded_pairs", std::size_t{0});
}

inline void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw Error("write failed for " + path.string());
}

inline json read_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

}  // namespace fairboost

#endif  // FAIRBOOST_SERIALIZE_HPP_
