#ifndef FAIRBOOST_CONFIG_HPP_
#define FAIRBOOST_CONFIG_HPP_

// ExperimentConfig <-> JSON. Keys mirror the struct field names; unknown keys
// are rejected so typos surface as validation errors.

#include <filesystem>
#include <set>
#include <string>

#include "fairboost/experiment.hpp"
#include "fairboost/serialize.hpp"

namespace fairboost {

inline std::string_view to_string(ReportFormat f) {
  switch (f) {
    case ReportFormat::kJson: return "json";
    case ReportFormat::kCsv: return "csv";
    case ReportFormat::kMarkdown: return "markdown";
  }
  return "?";
}

inline ReportFormat parse_format(std::string_view s) {
  if (s == "json") return ReportFormat::kJson;
  if (s == "csv") return ReportFormat::kCsv;
  if (s == "markdown" || s == "md") return ReportFormat::kMarkdown;
  throw ValidationError("unknown report format '" + std::string(s) + "'");
}

inline PropensityKind parse_propensity(std::string_view s) {
  if (s == "ITEM_COUNT" || s == "item_count") return PropensityKind::kItemCount;
  if (s == "NAIVE_BAYES" || s == "naive_bayes") return PropensityKind::kNaiveBayes;
  throw ValidationError("unknown propensity estimator '" + std::string(s) + "'");
}

namespace detail {

inline void check_keys(const json& j, std::initializer_list<const char*> allowed, const char* where) {
  if (!j.is_object()) throw ValidationError(std::string(where) + " must be an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [k, v] : j.items()) {
    if (!ok.count(k)) throw ValidationError(std::string("unknown key '") + k + "' in " + where);
  }
}

inline json column_to_json(const Column& c) {
  if (auto* i = std::get_if<std::size_t>(&c)) return *i;
  return std::get<std::string>(c);
}

inline Column column_from_json(const json& j) {
  if (j.is_number_unsigned()) return j.get<std::size_t>();
  if (j.is_string()) return j.get<std::string>();
  throw ValidationError("column must be a non-negative index or a header name");
}

inline std::pair<double, double> range_from_json(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 2) throw ValidationError(std::string(what) + " must be [lo, hi]");
  return {j[0].get<double>(), j[1].get<double>()};
}

}  // namespace detail

inline json config_to_json(const ExperimentConfig& c) {
  json csv{{"user", detail::column_to_json(c.dataset.csv.user)},
           {"item", detail::column_to_json(c.dataset.csv.item)},
           {"rating", detail::column_to_json(c.dataset.csv.rating)},
           {"timestamp", c.dataset.csv.timestamp ? detail::column_to_json(*c.dataset.csv.timestamp) : json(nullptr)},
           {"delimiter", std::string(1, c.dataset.csv.delimiter)},
           {"has_header", c.dataset.csv.has_header}};
  json algos = json::array();
  for (auto a : c.algorithms) algos.push_back(to_string(a));
  json formats = json::array();
  for (auto f : c.output.formats) formats.push_back(to_string(f));
  json j{{"dataset",
          {{"path", c.dataset.path.generic_string()},
           {"loader", c.dataset.loader == Loader::kMovieLens ? "movielens" : "csv"},
           {"csv", csv},
           {"subsample", c.dataset.subsample}}},
         {"algorithms", algos},
         {"tau", c.tau},
         {"delta", to_string(c.delta)},
         {"split_fraction", c.split_fraction},
         {"boost", c.boost},
         {"seed", c.seed},
         {"repeats", c.repeats},
         {"propensity", to_string(c.propensity)},
         {"clip_floor", c.clip_floor},
         {"output", {{"dir", c.output.dir.generic_string()}, {"formats", formats}}}};
  if (c.search) {
    j["search"] = {{"n_trials", c.search->n_trials},
                   {"eps1_range", {c.search->eps1_lo, c.search->eps1_hi}},
                   {"eps2_range", {c.search->eps2_lo, c.search->eps2_hi}},
                   {"objective", to_string(c.search->objective)},
                   {"error_budget", c.search->error_budget},
                   {"validation_fraction", c.search->validation_fraction}};
  } else {
    j["search"] = nullptr;
  }
  return j;
}

inline SearchSpec search_from_json(const json& s) {
  detail::check_keys(s, {"n_trials", "eps1_range", "eps2_range", "objective", "error_budget", "validation_fraction"},
                     "search");
  SearchSpec spec;
  spec.n_trials = s.value("n_trials", spec.n_trials);
  if (s.contains("eps1_range")) std::tie(spec.eps1_lo, spec.eps1_hi) = detail::range_from_json(s["eps1_range"], "eps1_range");
  if (s.contains("eps2_range")) std::tie(spec.eps2_lo, spec.eps2_hi) = detail::range_from_json(s["eps2_range"], "eps2_range");
  if (s.contains("objective")) spec.objective = parse_objective(s["objective"].get<std::string>());
  spec.error_budget = s.value("error_budget", spec.error_budget);
  spec.validation_fraction = s.value("validation_fraction", spec.validation_fraction);
  return spec;
}

/// Relative dataset and output paths resolve against `base_dir`.
inline ExperimentConfig config_from_json(const json& j, const std::filesystem::path& base_dir = {}) {
  try {
    detail::check_keys(j,
                       {"dataset", "algorithms", "tau", "delta", "split_fraction", "boost", "search", "seed",
                        "repeats", "propensity", "clip_floor", "output"},
                       "config");
    ExperimentConfig c;
    if (j.contains("dataset")) {
      const auto& d = j["dataset"];
      detail::check_keys(d, {"path", "loader", "csv", "subsample"}, "dataset");
      if (d.contains("path")) {
        std::filesystem::path p = d["path"].get<std::string>();
        c.dataset.path = p.is_relative() && !base_dir.empty() ? base_dir / p : p;
      }
      auto loader = d.value("loader", std::string("movielens"));
      if (loader == "movielens") {
        c.dataset.loader = Loader::kMovieLens;
      } else if (loader == "csv") {
        c.dataset.loader = Loader::kCsv;
      } else {
        throw ValidationError("unknown loader '" + loader + "'");
      }
      if (d.contains("csv")) {
        const auto& s = d["csv"];
        detail::check_keys(s, {"user", "item", "rating", "timestamp", "delimiter", "has_header"}, "dataset.csv");
        if (s.contains("user")) c.dataset.csv.user = detail::column_from_json(s["user"]);
        if (s.contains("item")) c.dataset.csv.item = detail::column_from_json(s["item"]);
        if (s.contains("rating")) c.dataset.csv.rating = detail::column_from_json(s["rating"]);
        if (s.contains("timestamp") && !s["timestamp"].is_null()) {
          c.dataset.csv.timestamp = detail::column_from_json(s["timestamp"]);
        }
        if (s.contains("delimiter")) {
          auto del = s["delimiter"].get<std::string>();
          if (del == "\\t" || del == "tab") del = "\t";
          if (del.size() != 1) throw ValidationError("csv delimiter must be one character");
          c.dataset.csv.delimiter = del[0];
        }
        c.dataset.csv.has_header = s.value("has_header", c.dataset.csv.has_header);
      }
      c.dataset.subsample = d.value("subsample", c.dataset.subsample);
    }
    if (j.contains("algorithms")) {
      c.algorithms.clear();
      for (const auto& a : j["algorithms"]) c.algorithms.push_back(parse_algorithm(a.get<std::string>()));
    }
    c.tau = j.value("tau", c.tau);
    if (j.contains("delta")) c.delta = parse_delta(j["delta"].get<std::string>());
    c.split_fraction = j.value("split_fraction", c.split_fraction);
    if (j.contains("boost")) {
      detail::check_keys(j["boost"],
                         {"rounds", "epsilon1", "epsilon2", "tau", "sample_size", "delta", "mf", "seed",
                          "residual_mode", "learner_weighting", "cost_rule", "holdout_fraction"},
                         "boost");
      c.boost = j["boost"].get<BoostConfig>();
    }
    if (j.contains("search") && !j["search"].is_null()) c.search = search_from_json(j["search"]);
    c.seed = j.value("seed", c.seed);
    c.repeats = j.value("repeats", c.repeats);
    if (j.contains("propensity")) c.propensity = parse_propensity(j["propensity"].get<std::string>());
    c.clip_floor = j.value("clip_floor", c.clip_floor);
    if (j.contains("output")) {
      const auto& o = j["output"];
      detail::check_keys(o, {"dir", "formats"}, "output");
      if (o.contains("dir")) {
        std::filesystem::path p = o["dir"].get<std::string>();
        c.output.dir = p.is_relative() && !base_dir.empty() ? base_dir / p : p;
      }
      if (o.contains("formats")) {
        c.output.formats.clear();
        for (const auto& f : o["formats"]) c.output.formats.push_back(parse_format(f.get<std::string>()));
      }
    }
    return c;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  return config_from_json(read_json(path), path.parent_path());
}

}  // namespace fairboost

#endif  // FAIRBOOST_CONFIG_HPP_
