#ifndef FAIRBOOST_REPORT_HPP_
#define FAIRBOOST_REPORT_HPP_

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "fairboost/config.hpp"
#include "fairboost/experiment.hpp"
#include "fairboost/serialize.hpp"

namespace fairboost {

namespace detail {

inline std::string fmt_num(double v, const char* spec) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

inline std::string fmt_opt(const std::optional<double>& v, const char* spec, const char* missing) {
  return v ? fmt_num(*v, spec) : std::string(missing);
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("write failed for " + path.string());
}

}  // namespace detail

inline json to_json(const SearchResult& s) {
  json trials = json::array();
  for (const auto& t : s.trials) {
    trials.push_back({{"epsilon1", t.epsilon1},
                      {"epsilon2", t.epsilon2},
                      {"validation_error", t.validation_error},
                      {"validation_pb", detail::opt_to_json(t.validation_pb)}});
  }
  return {{"objective", to_string(s.objective)},
          {"mf_validation_error", s.mf_validation_error},
          {"best", s.best},
          {"trials", trials}};
}

inline json to_json(const DatasetSummary& d) {
  return {{"n_records", d.n_records},     {"n_users", d.n_users},         {"n_items", d.n_items},
          {"n_train", d.n_train},         {"n_test", d.n_test},           {"train_users", d.train_users},
          {"train_items", d.train_items}, {"test_users", d.test_users},   {"test_items", d.test_items},
          {"n_popular_items", d.n_popular}, {"n_nonpopular_items", d.n_nonpopular}};
}

inline json result_to_json(const ExperimentResult& res, const ExperimentConfig& cfg) {
  json algos = json::array();
  for (const auto& r : res.results) {
    json a{{"algorithm", to_string(r.algorithm)}, {"report", r.report}, {"repeats", r.repeats}};
    if (!r.trace.empty()) a["trace"] = r.trace;
    if (r.epsilon1) a["epsilon1"] = *r.epsilon1;
    if (r.epsilon2) a["epsilon2"] = *r.epsilon2;
    if (r.search) a["search"] = to_json(*r.search);
    algos.push_back(std::move(a));
  }
  // The output location is left out so relocated reruns compare equal.
  json echoed = config_to_json(cfg);
  echoed["output"].erase("dir");
  return {{"format", "fairboost.experiment_report"},
          {"version", kFormatVersion},
          {"config", echoed},
          {"dataset", to_json(res.dataset)},
          {"results", algos}};
}

/// Table layout: Algorithm | Error | Error on popular items |
/// Error on non-popular items | Popularity Bias.
inline std::string markdown_table(const ExperimentResult& res) {
  std::ostringstream md;
  md << "| Algorithm | Error | Error on popular items | Error on non-popular items | Popularity Bias |\n";
  md << "|---|---|---|---|---|\n";
  for (const auto& r : res.results) {
    const auto& m = r.report;
    md << "| " << display_name(r.algorithm) << " | " << detail::fmt_num(m.overall_error, "%.4f") << " | "
       << detail::fmt_opt(m.error_popular, "%.4f", "undefined") << " | "
       << detail::fmt_opt(m.error_nonpopular, "%.4f", "undefined") << " | "
       << detail::fmt_opt(m.popularity_bias, "%.4f", "undefined") << " |\n";
  }
  return md.str();
}

inline std::string csv_table(const ExperimentResult& res) {
  std::ostringstream csv;
  csv << "algorithm,overall_error,error_popular,error_nonpopular,popularity_bias,delta,tau,n_test_pairs,"
         "n_popular_pairs,n_nonpopular_pairs,n_excluded_pairs\n";
  for (const auto& r : res.results) {
    const auto& m = r.report;
    csv << to_string(r.algorithm) << ',' << detail::fmt_num(m.overall_error, "%.10g") << ','
        << detail::fmt_opt(m.error_popular, "%.10g", "") << ',' << detail::fmt_opt(m.error_nonpopular, "%.10g", "")
        << ',' << detail::fmt_opt(m.popularity_bias, "%.10g", "") << ',' << to_string(m.delta) << ',' << m.tau
        << ',' << m.n_test_pairs << ',' << m.n_popular_pairs << ',' << m.n_nonpopular_pairs << ','
        << m.n_excluded_pairs << '\n';
  }
  return csv.str();
}

/// Per-round series for plotting bias and error against the number of rounds.
inline std::string rounds_table(const ExperimentResult& res) {
  std::ostringstream csv;
  csv << "algorithm,round,error_rate,alpha,round_pb,holdout_error,ensemble_error,ensemble_pb,n_costed,cost_mass\n";
  for (const auto& r : res.results) {
    for (const auto& t : r.trace) {
      csv << to_string(r.algorithm) << ',' << t.round << ',' << detail::fmt_num(t.error_rate, "%.10g") << ','
          << detail::fmt_num(t.alpha, "%.10g") << ',' << detail::fmt_opt(t.round_pb, "%.10g", "") << ','
          << detail::fmt_num(t.holdout_error, "%.10g") << ',' << detail::fmt_num(t.ensemble_error, "%.10g") << ','
          << detail::fmt_opt(t.ensemble_pb, "%.10g", "") << ',' << t.n_costed << ','
          << detail::fmt_num(t.cost_mass, "%.10g") << '\n';
    }
  }
  return csv.str();
}

/// One JSON object per boosting round, tagged with its algorithm.
inline std::string trace_lines(const ExperimentResult& res) {
  std::string out;
  for (const auto& r : res.results) {
    for (const auto& t : r.trace) {
      json j = t;
      j["algorithm"] = to_string(r.algorithm);
      out += j.dump();
      out += '\n';
    }
  }
  return out;
}

/// Writes report.{json,csv,md} for the requested formats into `out.dir`, plus
/// rounds.csv and trace.jsonl whenever a boosting trace exists. Returns the
/// written paths.
inline std::vector<std::filesystem::path> emit_report(const ExperimentResult& res, const ExperimentConfig& cfg,
                                                      const OutputSpec& out) {
  if (res.results.empty()) throw ValidationError("no reports to emit");
  std::error_code ec;
  std::filesystem::create_directories(out.dir, ec);
  if (ec) throw Error("cannot create output directory " + out.dir.string() + ": " + ec.message());

  std::vector<std::filesystem::path> written;
  for (auto f : out.formats) {
    switch (f) {
      case ReportFormat::kJson:
        written.push_back(out.dir / "report.json");
        write_json(written.back(), result_to_json(res, cfg));
        break;
      case ReportFormat::kCsv:
        written.push_back(out.dir / "report.csv");
        detail::write_text(written.back(), csv_table(res));
        break;
      case ReportFormat::kMarkdown:
        written.push_back(out.dir / "report.md");
        detail::write_text(written.back(), markdown_table(res));
        break;
    }
  }
  bool traced = std::any_of(res.results.begin(), res.results.end(), [](const auto& r) { return !r.trace.empty(); });
  if (traced) {
    written.push_back(out.dir / "rounds.csv");
    detail::write_text(written.back(), rounds_table(res));
    written.push_back(out.dir / "trace.jsonl");
    detail::write_text(written.back(), trace_lines(res));
  }
  return written;
}

}  // namespace fairboost

#endif  // FAIRBOOST_REPORT_HPP_
