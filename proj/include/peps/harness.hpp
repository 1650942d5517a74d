#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "peps/algorithms.hpp"
#include "peps/instances.hpp"

namespace peps {

/// Every 10 steps up to 1000, every 100 beyond; t_max is always included.
std::vector<long> default_checkpoints(long t_max);
std::vector<long> stride_checkpoints(long t_max, long stride);

struct ExperimentConfig {
  Instance instance;
  std::vector<StrategyConfig> strategies;
  long t_max = 1000;
  int repetitions = 1;
  std::uint64_t master_seed = 0;
  std::vector<long> checkpoints;
  std::size_t mc_draws = 1000;
  std::vector<double> delta_levels{0.1, 0.05, 0.01};

  void validate() const;
};

/// Resolves an instance description: {"file": path}, a generator
/// ({"kind": "soare", "omega": w}, {"kind": "sphere", "d", "n_arms", "seed"},
/// {"kind": "topk", "d", "k"}) or an inline instance document.
Instance load_instance_spec(const nlohmann::json& spec,
                            const std::filesystem::path& base_dir = {});

ExperimentConfig experiment_config_from_json(
    const nlohmann::json& doc, const std::filesystem::path& base_dir = {});

/// One CSV row; column order is the member order.
struct MetricRow {
  std::string instance_id;
  std::string strategy;
  std::uint64_t seed = 0;
  long t = 0;
  double posterior_confidence = 0.0;
  int z_hat_correct = 0;
  long long rejections_cumulative = 0;
  double wall_ms = 0.0;

  bool operator==(const MetricRow&) const = default;
};

struct ErrorRow {
  std::string instance_id;
  std::string strategy;
  std::uint64_t seed = 0;
  std::string message;
};

struct RunOptions {
  long t_max = 1000;
  std::vector<long> checkpoints;
  std::size_t mc_draws = 1000;
  bool keep_steps = false;
};

/// Output of one repetition. The per-step vectors are filled only with
/// RunOptions::keep_steps.
struct RunTrace {
  std::vector<MetricRow> rows;
  std::vector<std::size_t> arms;
  std::vector<TargetId> z_hats;
  std::vector<std::size_t> rejections;
};

/// Seed of repetition `rep` of a strategy label.
std::uint64_t repetition_seed(std::uint64_t master_seed,
                              const std::string& label, int rep);

/// Steps one strategy to t_max. The strategy consumes a stream derived from
/// `seed`; posterior confidence at checkpoints uses a separate stream so that
/// checkpoint density does not perturb the trajectory.
RunTrace run_repetition(const Instance& instance, const StrategyConfig& config,
                        std::uint64_t seed, const RunOptions& options);

struct ResultStore {
  std::vector<MetricRow> rows;
  std::vector<ErrorRow> errors;
};

/// Runs every (strategy, repetition) pair on a worker pool and merges rows in
/// (strategy, repetition) order. Worker count: BANDIT_THREADS, else hardware
/// concurrency. A failing repetition yields an ErrorRow and no metric rows.
ResultStore run_experiment(const ExperimentConfig& config);

/// Number of workers run_experiment will use.
unsigned worker_count();

inline constexpr const char* kCsvHeader =
    "instance_id,strategy,seed,t,posterior_confidence,z_hat_correct,"
    "rejections_cumulative,wall_ms";

void write_csv(std::ostream& out, const std::vector<MetricRow>& rows,
               bool include_wall = true);
std::vector<MetricRow> read_csv(std::istream& in);
void write_error_csv(std::ostream& out, const std::vector<ErrorRow>& rows);

/// Mean and standard error of the posterior confidence across repetitions at
/// each checkpoint of one (instance, strategy) group.
struct ConfidenceCurve {
  std::string instance_id;
  std::string strategy;
  std::vector<long> t;
  std::vector<double> mean;
  std::vector<double> std_error;  // 0 when only one repetition
  std::vector<int> count;
};

/// Groups sorted by (instance_id, strategy).
std::vector<ConfidenceCurve> aggregate_confidence(
    const std::vector<MetricRow>& rows);

struct CrossingEntry {
  std::string instance_id;
  std::string strategy;
  double delta = 0.0;
  std::optional<long> samples;  // first checkpoint with mean > 1 - delta
  long t_max = 0;

  /// "1027" or ">5000".
  std::string display() const;
};

std::vector<CrossingEntry> samples_to_delta(const std::vector<MetricRow>& rows,
                                            double delta);
std::optional<long> first_crossing(const ConfidenceCurve& curve, double delta);

nlohmann::json summary_json(const std::vector<MetricRow>& rows,
                            const std::vector<double>& delta_levels);

/// Run metadata (strategy settings, M, budgets, seeds) for reproducibility.
nlohmann::json experiment_metadata(const ExperimentConfig& config);

/// Writes results.csv, errors.csv (if any), summary.json and metadata.json
/// under out_dir.
void write_experiment(const ExperimentConfig& config, const ResultStore& store,
                      const std::filesystem::path& out_dir);

}  // namespace peps
