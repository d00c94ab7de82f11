// fairboost: benchmark runner and synthetic data generator.
//
//   fairboost run [config.json] [--dataset PATH] [--algos MF,FAIRBOOST] ...
//   fairboost search [config.json] [--trials N] [--eps1-range LO,HI] ...
//   fairboost gen-synth --seed S --users K --items L --skew X --out DIR
//
// Exit codes: 0 success, 1 invalid input, 2 runtime or training failure.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fairboost/fairboost.hpp"

namespace fb = fairboost;
namespace fs = std::filesystem;

namespace {

struct RunArgs {
  std::string config;
  std::string dataset;
  std::string loader;
  std::vector<std::string> algos;
  std::optional<std::size_t> tau;
  std::string delta;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::vector<std::string> formats;
  std::optional<std::size_t> rounds;
  std::optional<std::size_t> repeats;
  std::optional<double> eps1, eps2;
};

struct SearchArgs {
  std::optional<std::size_t> trials;
  std::vector<double> eps1_range, eps2_range;
  std::string objective;
  std::optional<double> budget;
};

struct SynthArgs {
  std::uint64_t seed = 0;
  fb::Index users = 200;
  fb::Index items = 300;
  double skew = 1.0;
  double max_prob = fb::SyntheticOptions{}.max_observation_prob;
  std::string out = "synth";
};

void add_common(CLI::App* cmd, RunArgs& a) {
  cmd->add_option("config", a.config, "experiment config (JSON)");
  cmd->add_option("--dataset", a.dataset, "ratings file; overrides the config");
  cmd->add_option("--loader", a.loader, "movielens or csv");
  cmd->add_option("--algos", a.algos, "subset of MF,MF_IPS,ADABOOST,FAIRBOOST")->delimiter(',');
  cmd->add_option("--tau", a.tau, "popularity threshold");
  cmd->add_option("--delta", a.delta, "MSE or MAE");
  cmd->add_option("--seed", a.seed, "root seed");
  cmd->add_option("--out", a.out, "output directory");
  cmd->add_option("--format", a.formats, "json,csv,markdown")->delimiter(',');
  cmd->add_option("--rounds", a.rounds, "boosting rounds");
  cmd->add_option("--repeats", a.repeats, "seeded repeats to average");
  cmd->add_option("--eps1", a.eps1, "FairBoost residual bound");
  cmd->add_option("--eps2", a.eps2, "FairBoost bias bound (inf disables costs)");
}

fb::ExperimentConfig build_config(const RunArgs& a) {
  fb::ExperimentConfig cfg = a.config.empty() ? fb::ExperimentConfig{} : fb::load_config(a.config);
  if (!a.dataset.empty()) cfg.dataset.path = a.dataset;
  if (!a.loader.empty()) {
    if (a.loader == "movielens") {
      cfg.dataset.loader = fb::Loader::kMovieLens;
    } else if (a.loader == "csv") {
      cfg.dataset.loader = fb::Loader::kCsv;
    } else {
      throw fb::ValidationError("unknown loader '" + a.loader + "'");
    }
  }
  if (!a.algos.empty()) {
    cfg.algorithms.clear();
    for (const auto& s : a.algos) cfg.algorithms.push_back(fb::parse_algorithm(s));
  }
  if (a.tau) cfg.tau = *a.tau;
  if (!a.delta.empty()) cfg.delta = fb::parse_delta(a.delta);
  if (a.seed) cfg.seed = *a.seed;
  if (!a.out.empty()) cfg.output.dir = a.out;
  if (!a.formats.empty()) {
    cfg.output.formats.clear();
    for (const auto& s : a.formats) cfg.output.formats.push_back(fb::parse_format(s));
  }
  if (a.rounds) cfg.boost.rounds = *a.rounds;
  if (a.repeats) cfg.repeats = *a.repeats;
  if (a.eps1) cfg.boost.epsilon1 = *a.eps1;
  if (a.eps2) cfg.boost.epsilon2 = *a.eps2;
  if (cfg.dataset.path.empty()) throw fb::ValidationError("no dataset given (config or --dataset)");
  if (cfg.output.dir.empty()) cfg.output.dir = "fairboost-out";
  return cfg;
}

std::pair<double, double> as_range(const std::vector<double>& v, const char* what) {
  if (v.size() != 2) throw fb::ValidationError(std::string(what) + " takes LO,HI");
  return {v[0], v[1]};
}

int cmd_run(const RunArgs& a) {
  auto cfg = build_config(a);
  auto res = fb::run_experiment(cfg);
  fb::emit_report(res, cfg, cfg.output);
  std::cout << fb::markdown_table(res);
  return 0;
}

int cmd_search(const RunArgs& a, const SearchArgs& s) {
  auto cfg = build_config(a);
  fb::SearchSpec spec = cfg.search.value_or(fb::SearchSpec{});
  if (s.trials) spec.n_trials = *s.trials;
  if (!s.eps1_range.empty()) std::tie(spec.eps1_lo, spec.eps1_hi) = as_range(s.eps1_range, "--eps1-range");
  if (!s.eps2_range.empty()) std::tie(spec.eps2_lo, spec.eps2_hi) = as_range(s.eps2_range, "--eps2-range");
  if (!s.objective.empty()) spec.objective = fb::parse_objective(s.objective);
  if (s.budget) spec.error_budget = *s.budget;
  cfg.search = spec;

  auto result = fb::random_search(cfg, spec);
  std::error_code ec;
  fs::create_directories(cfg.output.dir, ec);
  if (ec) throw fb::Error("cannot create output directory " + cfg.output.dir.string());
  fb::json j = fb::to_json(result);
  j["config"] = fb::config_to_json(cfg);
  fb::write_json(cfg.output.dir / "search.json", j);

  const auto& best = result.best_trial();
  std::printf("best trial %zu: epsilon1=%.6g epsilon2=%.6g validation_error=%.6f validation_pb=%s\n", result.best,
              best.epsilon1, best.epsilon2, best.validation_error,
              best.validation_pb ? std::to_string(*best.validation_pb).c_str() : "undefined");
  return 0;
}

int cmd_gen_synth(const SynthArgs& a) {
  fb::SyntheticOptions opt;
  opt.max_observation_prob = a.max_prob;
  auto uni = fb::gen_synthetic_mnar(a.seed, a.users, a.items, a.skew, opt);
  const fs::path dir = a.out;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw fb::Error("cannot create output directory " + dir.string());

  // Observed ratings in u.data layout; a seeded shuffle supplies the
  // timestamps so a temporal split of this file is a random split.
  const auto& obs = uni.observed.train;
  std::vector<std::size_t> order(obs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  fb::Rng rng(fb::derive_seed(a.seed, "gen-synth-order"));
  std::shuffle(order.begin(), order.end(), rng);
  std::ofstream data(dir / "u.data");
  if (!data) throw fb::Error("cannot write " + (dir / "u.data").string());
  char buf[128];
  for (std::size_t t = 0; t < order.size(); ++t) {
    const auto& r = obs[order[t]];
    std::snprintf(buf, sizeof buf, "%s\t%s\t%.17g\t%zu\n", uni.observed.user_ids[r.user].c_str(),
                  uni.observed.item_ids[r.item].c_str(), r.value, t);
    data << buf;
  }

  std::ofstream truth(dir / "truth.csv");
  if (!truth) throw fb::Error("cannot write " + (dir / "truth.csv").string());
  truth << "user,item,rating,propensity\n";
  for (fb::Index u = 0; u < uni.n_users; ++u) {
    for (fb::Index m = 0; m < uni.n_items; ++m) {
      std::snprintf(buf, sizeof buf, "%u,%u,%.17g,%.17g\n", u, m, uni.truth(u, m), uni.prob(u, m));
      truth << buf;
    }
  }

  fb::json meta{{"format", "fairboost.synthetic"},
                {"version", fb::kFormatVersion},
                {"seed", a.seed},
                {"n_users", uni.n_users},
                {"n_items", uni.n_items},
                {"skew", uni.skew},
                {"latent_rank", opt.latent_rank},
                {"max_observation_prob", opt.max_observation_prob},
                {"noise_sd", opt.noise_sd},
                {"n_observed", obs.size()},
                {"item_rank", uni.item_rank}};
  fb::write_json(dir / "meta.json", meta);
  std::printf("%zu observed ratings of %zu cells written to %s\n", obs.size(), uni.cells(), dir.string().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"FairBoost popularity-bias benchmark"};
  app.require_subcommand(1);

  RunArgs run_args, search_run_args;
  SearchArgs search_args;
  SynthArgs synth;

  auto* run = app.add_subcommand("run", "train and evaluate the configured algorithms");
  add_common(run, run_args);

  auto* search = app.add_subcommand("search", "random search over FairBoost's epsilon1/epsilon2");
  add_common(search, search_run_args);
  search->add_option("--trials", search_args.trials, "number of trials");
  search->add_option("--eps1-range", search_args.eps1_range, "LO,HI")->delimiter(',');
  search->add_option("--eps2-range", search_args.eps2_range, "LO,HI")->delimiter(',');
  search->add_option("--objective", search_args.objective, "MIN_PB_ABS or MIN_PB_SUBJECT_TO_ERROR");
  search->add_option("--budget", search_args.budget, "relative error budget over MF");

  auto* gen = app.add_subcommand("gen-synth", "write a synthetic MNAR universe");
  gen->add_option("--seed", synth.seed, "seed");
  gen->add_option("--users", synth.users, "number of users");
  gen->add_option("--items", synth.items, "number of items");
  gen->add_option("--skew", synth.skew, "popularity skew (0 = MCAR)");
  gen->add_option("--max-prob", synth.max_prob, "observation probability of the top-ranked item");
  gen->add_option("--out", synth.out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (run->parsed()) return cmd_run(run_args);
    if (search->parsed()) return cmd_search(search_run_args, search_args);
    return cmd_gen_synth(synth);
  } catch (const fb::InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
