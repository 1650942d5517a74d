#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "peps/algorithms.hpp"
#include "peps/design.hpp"
#include "peps/errors.hpp"
#include "peps/harness.hpp"
#include "peps/instances.hpp"
#include "peps/plots.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kConfigExit = 2;
constexpr int kNumericalExit = 3;

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw peps::ConfigError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw peps::ConfigError(path.string() + ": " + e.what());
  }
}

peps::Instance read_instance(const fs::path& path) {
  return peps::load_instance_spec(read_json(path), path.parent_path());
}

void emit(const std::string& text, const std::string& out) {
  if (out.empty() || out == "-") {
    std::cout << text;
    return;
  }
  std::ofstream file(out);
  if (!file) throw peps::ConfigError("cannot write " + out);
  file << text;
}

void print_crossing_table(const peps::ExperimentConfig& config,
                          const std::vector<peps::MetricRow>& rows) {
  std::printf("%-20s %-14s", "instance", "strategy");
  for (double d : config.delta_levels) std::printf("  delta=%-4g", d);
  std::printf("\n");
  const auto first = peps::samples_to_delta(rows, config.delta_levels.front());
  for (std::size_t i = 0; i < first.size(); ++i) {
    std::printf("%-20s %-14s", first[i].instance_id.c_str(),
                first[i].strategy.c_str());
    for (double d : config.delta_levels) {
      std::printf(" %10s", peps::samples_to_delta(rows, d)[i].display().c_str());
    }
    std::printf("\n");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Best-arm identification in linear bandits"};
  app.require_subcommand(1);
  spdlog::set_level(spdlog::level::warn);

  auto* bench = app.add_subcommand("bench", "run a benchmark experiment");
  std::string config_path, out_dir;
  bool no_plots = false;
  bench->add_option("--config", config_path, "experiment JSON")->required();
  bench->add_option("--out", out_dir, "output directory")->required();
  bench->add_flag("--no-plots", no_plots, "skip SVG emission");

  auto* run = app.add_subcommand("run", "one seeded run, CSV on stdout");
  std::string instance_path, strategy = "peps", mode = "practical", run_out;
  std::string strategy_json;
  long horizon = 1000;
  std::uint64_t seed = 0;
  std::size_t mc_draws = 1000;
  long stride = 0;
  run->add_option("--instance", instance_path, "instance JSON")->required();
  run->add_option("--strategy", strategy, "peps, lints, lingame or fixed");
  run->add_option("--strategy-config", strategy_json,
                  "strategy JSON file (overrides --strategy/--mode)");
  run->add_option("--mode", mode, "practical or theoretical");
  run->add_option("--T", horizon, "horizon")->check(CLI::PositiveNumber);
  run->add_option("--seed", seed, "seed");
  run->add_option("--mc-draws", mc_draws, "Monte Carlo draws for confidence");
  run->add_option("--stride", stride, "checkpoint stride (default 10/100)");
  run->add_option("--out", run_out, "CSV path (default stdout)");

  auto* tau = app.add_subcommand("tau-star", "solve the allocation game");
  int iters = 2000;
  tau->add_option("--instance", instance_path, "instance JSON")->required();
  tau->add_option("--iters", iters, "iterations")->check(CLI::PositiveNumber);

  auto* gdesign = app.add_subcommand("gdesign", "G-optimal design of the arms");
  double tol = 1e-4;
  gdesign->add_option("--instance", instance_path, "instance JSON")->required();
  gdesign->add_option("--tol", tol, "relative leverage tolerance");

  auto* gen = app.add_subcommand("gen-instance", "emit an instance as JSON");
  std::string kind, gen_out;
  double omega = 0.1;
  int dim = 6, n_arms = 20, k = 3;
  std::uint64_t gen_seed = 1;
  gen->add_option("--kind", kind, "soare, sphere or topk")
      ->required()
      ->check(CLI::IsMember({"soare", "sphere", "topk"}));
  gen->add_option("--omega", omega, "soare angle");
  gen->add_option("--d", dim, "dimension");
  gen->add_option("--n-arms", n_arms, "number of sphere arms");
  gen->add_option("--k", k, "top-k size");
  gen->add_option("--seed", gen_seed, "sphere generator seed");
  gen->add_option("--out", gen_out, "output path (default stdout)");

  auto* plot = app.add_subcommand("plot", "SVG plots from a results CSV");
  std::string csv_in;
  plot->add_option("--in", csv_in, "results CSV")->required();
  plot->add_option("--out", out_dir, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigExit;
  }

  try {
    if (*bench) {
      const auto config =
          peps::experiment_config_from_json(read_json(config_path),
                                            fs::path(config_path).parent_path());
      const auto store = peps::run_experiment(config);
      peps::write_experiment(config, store, out_dir);
      if (!no_plots && !store.rows.empty()) {
        peps::emit_plots(store.rows, fs::path(out_dir) / "plots");
      }
      print_crossing_table(config, store.rows);
      if (!store.errors.empty()) {
        spdlog::error("{} repetition(s) failed; see errors.csv",
                      store.errors.size());
        return kNumericalExit;
      }
    } else if (*run) {
      const auto instance = read_instance(instance_path);
      const json doc = strategy_json.empty()
                           ? json{{"strategy", strategy}, {"mode", mode}}
                           : read_json(strategy_json);
      const auto config = peps::strategy_config_from_json(doc);
      peps::RunOptions options;
      options.t_max = horizon;
      options.mc_draws = mc_draws;
      options.checkpoints = stride > 0 ? peps::stride_checkpoints(horizon, stride)
                                       : peps::default_checkpoints(horizon);
      const auto trace = peps::run_repetition(instance, config, seed, options);
      if (run_out.empty()) {
        peps::write_csv(std::cout, trace.rows);
      } else {
        std::ofstream out(run_out);
        peps::write_csv(out, trace.rows);
      }
    } else if (*tau) {
      const auto instance = read_instance(instance_path);
      const auto sol = peps::tau_star(instance, iters);
      const auto& w = sol.lambda_star.values();
      const json out{{"instance", instance.name},
                     {"tau_star", sol.tau_star},
                     {"lambda_star", std::vector<double>(w.begin(), w.end())},
                     {"gap", sol.duality_gap_estimate},
                     {"iterations", sol.iterations},
                     {"converged", sol.converged}};
      std::cout << out.dump(2) << '\n';
    } else if (*gdesign) {
      const auto instance = read_instance(instance_path);
      const auto lambda = peps::g_optimal(instance.arms, tol);
      const auto& w = lambda.values();
      const json out{{"instance", instance.name},
                     {"dim", instance.dim},
                     {"weights", std::vector<double>(w.begin(), w.end())},
                     {"max_leverage", peps::max_leverage(instance.arms, lambda)}};
      std::cout << out.dump(2) << '\n';
    } else if (*gen) {
      peps::Instance instance;
      if (kind == "soare") {
        instance = peps::make_soare(omega);
      } else if (kind == "sphere") {
        peps::RngStream rng(gen_seed);
        instance = peps::make_sphere(rng, dim, n_arms);
      } else {
        instance = peps::make_topk(dim, k);
      }
      emit(peps::to_json(instance).dump(2) + "\n", gen_out);
    } else if (*plot) {
      std::ifstream in(csv_in);
      if (!in) throw peps::ConfigError("cannot open " + csv_in);
      for (const auto& p : peps::emit_plots(peps::read_csv(in), out_dir)) {
        std::cout << p.string() << '\n';
      }
    }
  } catch (const peps::NumericalError& e) {
    spdlog::error("numerical failure: {}", e.what());
    return kNumericalExit;
  } catch (const peps::RankError& e) {
    spdlog::error("numerical failure: {}", e.what());
    return kNumericalExit;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kConfigExit;
  }
  return 0;
}
