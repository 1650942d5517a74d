#include "peps/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <thread>

#include <spdlog/spdlog.h>

#include "peps/errors.hpp"

namespace peps {

std::vector<long> default_checkpoints(long t_max) {
  std::vector<long> out;
  for (long t = 10; t <= std::min(t_max, 1000L); t += 10) out.push_back(t);
  for (long t = 1100; t <= t_max; t += 100) out.push_back(t);
  if (out.empty() || out.back() != t_max) out.push_back(t_max);
  return out;
}

std::vector<long> stride_checkpoints(long t_max, long stride) {
  if (stride < 1) throw ConfigError("checkpoint stride must be >= 1");
  std::vector<long> out;
  for (long t = stride; t <= t_max; t += stride) out.push_back(t);
  if (out.empty() || out.back() != t_max) out.push_back(t_max);
  return out;
}

void ExperimentConfig::validate() const {
  if (repetitions < 1) throw ConfigError("repetitions must be >= 1");
  if (t_max < 1) throw ConfigError("T_max must be >= 1");
  if (strategies.empty()) throw ConfigError("no strategies configured");
  if (mc_draws < 1) throw ConfigError("mc_draws must be >= 1");
  if (!std::is_sorted(checkpoints.begin(), checkpoints.end()) ||
      std::adjacent_find(checkpoints.begin(), checkpoints.end()) !=
          checkpoints.end()) {
    throw ConfigError("checkpoints must be strictly increasing");
  }
  if (!checkpoints.empty() &&
      (checkpoints.front() < 1 || checkpoints.back() > t_max)) {
    throw ConfigError("checkpoints must lie in [1, T_max]");
  }
  for (double d : delta_levels) {
    if (!(d > 0.0 && d < 1.0)) throw ConfigError("delta levels must be in (0,1)");
  }
  std::vector<std::string> labels;
  for (const auto& s : strategies) labels.push_back(s.label);
  std::sort(labels.begin(), labels.end());
  if (std::adjacent_find(labels.begin(), labels.end()) != labels.end()) {
    throw ConfigError("strategy labels must be unique");
  }
}

Instance load_instance_spec(const nlohmann::json& spec,
                            const std::filesystem::path& base_dir) {
  try {
    if (spec.is_string() || spec.contains("file")) {
      std::filesystem::path path =
          spec.is_string() ? spec.get<std::string>()
                           : spec.at("file").get<std::string>();
      if (path.is_relative()) path = base_dir / path;
      std::ifstream in(path);
      if (!in) throw ConfigError("cannot open instance file " + path.string());
      return instance_from_json(nlohmann::json::parse(in));
    }
    if (spec.contains("arms")) return instance_from_json(spec);
    const std::string kind = spec.at("kind").get<std::string>();
    if (kind == "soare") return make_soare(spec.at("omega").get<double>());
    if (kind == "topk") {
      return make_topk(spec.at("d").get<int>(), spec.at("k").get<int>());
    }
    if (kind == "sphere") {
      RngStream rng(spec.value("seed", std::uint64_t{1}));
      return make_sphere(rng, spec.at("d").get<int>(),
                         spec.at("n_arms").get<int>());
    }
    throw ConfigError("unknown instance kind: " + kind);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed instance spec: ") + e.what());
  }
}

ExperimentConfig experiment_config_from_json(
    const nlohmann::json& doc, const std::filesystem::path& base_dir) {
  try {
    ExperimentConfig cfg;
    cfg.instance = load_instance_spec(doc.at("instance"), base_dir);
    for (const auto& s : doc.at("strategies")) {
      cfg.strategies.push_back(strategy_config_from_json(s));
    }
    cfg.t_max = doc.at("T_max").get<long>();
    cfg.repetitions = doc.value("repetitions", 1);
    cfg.master_seed = doc.value("master_seed", std::uint64_t{0});
    cfg.mc_draws = doc.value("mc_draws", std::size_t{1000});
    if (doc.contains("delta_levels")) {
      cfg.delta_levels = doc["delta_levels"].get<std::vector<double>>();
    }
    if (!doc.contains("checkpoints")) {
      cfg.checkpoints = default_checkpoints(cfg.t_max);
    } else if (doc["checkpoints"].is_array()) {
      cfg.checkpoints = doc["checkpoints"].get<std::vector<long>>();
    } else if (doc["checkpoints"].is_object() &&
               doc["checkpoints"].contains("stride")) {
      cfg.checkpoints =
          stride_checkpoints(cfg.t_max, doc["checkpoints"]["stride"].get<long>());
    } else {
      throw ConfigError("checkpoints must be a list or {\"stride\": n}");
    }
    cfg.validate();
    return cfg;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed experiment config: ") + e.what());
  }
}

std::uint64_t repetition_seed(std::uint64_t master_seed,
                              const std::string& label, int rep) {
  return derive_seed(master_seed, label, static_cast<std::uint64_t>(rep));
}

RunTrace run_repetition(const Instance& instance, const StrategyConfig& config,
                        std::uint64_t seed, const RunOptions& options) {
  using Clock = std::chrono::steady_clock;
  RngStream algo(derive_seed(seed, "algorithm", 0));
  RngStream eval(derive_seed(seed, "evaluation", 0));
  auto strategy = make_strategy(config, instance, static_cast<int>(options.t_max));

  RunTrace trace;
  if (options.keep_steps) {
    trace.arms.reserve(options.t_max);
    trace.z_hats.reserve(options.t_max);
    trace.rejections.reserve(options.t_max);
  }
  long long rejections = 0;
  Clock::duration elapsed{};
  auto next = options.checkpoints.begin();
  for (long t = 1; t <= options.t_max; ++t) {
    const auto start = Clock::now();
    const StrategyStep step = strategy->step(algo);
    elapsed += Clock::now() - start;
    rejections += static_cast<long long>(step.rejections_used);
    if (options.keep_steps) {
      trace.arms.push_back(step.chosen_arm);
      trace.z_hats.push_back(step.z_hat);
      trace.rejections.push_back(step.rejections_used);
    }
    if (next != options.checkpoints.end() && *next == t) {
      ++next;
      const auto& ls = strategy->posterior();
      const PosteriorSpec spec{ls.theta_hat(), ls.gram(), 1.0};
      MetricRow row;
      row.instance_id = instance.name;
      row.strategy = config.label;
      row.seed = seed;
      row.t = t;
      row.posterior_confidence =
          posterior_confidence(eval, spec, instance.targets,
                               instance.best_target, options.mc_draws)
              .value;
      row.z_hat_correct = strategy->recommendation() == instance.best_target;
      row.rejections_cumulative = rejections;
      row.wall_ms =
          std::chrono::duration<double, std::milli>(elapsed).count();
      trace.rows.push_back(std::move(row));
    }
  }
  return trace;
}

unsigned worker_count() {
  if (const char* env = std::getenv("BANDIT_THREADS")) {
    const long n = std::strtol(env, nullptr, 10);
    if (n >= 1) return static_cast<unsigned>(n);
    spdlog::warn("ignoring invalid BANDIT_THREADS={}", env);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

ResultStore run_experiment(const ExperimentConfig& input) {
  ExperimentConfig config = input;
  config.validate();
  // The fixed-design oracle defaults to lambda*; solve once, not per rep.
  for (auto& s : config.strategies) {
    if (s.kind == StrategyKind::FixedWeight && !s.weights) {
      const auto sol = tau_star(config.instance);
      s.weights.emplace(sol.lambda_star.values().begin(),
                        sol.lambda_star.values().end());
    }
  }

  RunOptions options;
  options.t_max = config.t_max;
  options.checkpoints = config.checkpoints;
  options.mc_draws = config.mc_draws;

  struct Task {
    std::size_t strategy = 0;
    int rep = 0;
    std::vector<MetricRow> rows;
    std::optional<ErrorRow> error;
  };
  std::vector<Task> tasks;
  for (std::size_t s = 0; s < config.strategies.size(); ++s) {
    for (int r = 0; r < config.repetitions; ++r) tasks.push_back({s, r, {}, {}});
  }

  std::atomic<std::size_t> cursor{0};
  auto worker = [&] {
    while (true) {
      const std::size_t i = cursor.fetch_add(1);
      if (i >= tasks.size()) return;
      Task& task = tasks[i];
      const auto& strat = config.strategies[task.strategy];
      const auto seed =
          repetition_seed(config.master_seed, strat.label, task.rep);
      try {
        task.rows = run_repetition(config.instance, strat, seed, options).rows;
      } catch (const std::exception& e) {
        task.error =
            ErrorRow{config.instance.name, strat.label, seed, e.what()};
      }
    }
  };
  const unsigned n_workers =
      std::min<unsigned>(worker_count(), static_cast<unsigned>(tasks.size()));
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < n_workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  ResultStore store;
  for (auto& task : tasks) {
    if (task.error) {
      spdlog::error("repetition {} of {} failed: {}", task.rep,
                    task.error->strategy, task.error->message);
      store.errors.push_back(std::move(*task.error));
      continue;
    }
    std::move(task.rows.begin(), task.rows.end(), std::back_inserter(store.rows));
  }
  return store;
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string escape_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

template <typename T>
T parse_number(const std::string& s, const char* column) {
  std::istringstream in(s);
  T v{};
  in >> v;
  if (!in || !in.eof()) {
    throw ConfigError(std::string("bad CSV value in column ") + column + ": " + s);
  }
  return v;
}

}  // namespace

void write_csv(std::ostream& out, const std::vector<MetricRow>& rows,
               bool include_wall) {
  out << (include_wall ? kCsvHeader
                       : "instance_id,strategy,seed,t,posterior_confidence,"
                         "z_hat_correct,rejections_cumulative")
      << '\n';
  for (const auto& r : rows) {
    out << escape_field(r.instance_id) << ',' << escape_field(r.strategy) << ','
        << r.seed << ',' << r.t << ',' << format_double(r.posterior_confidence)
        << ',' << r.z_hat_correct << ',' << r.rejections_cumulative;
    if (include_wall) out << ',' << format_double(r.wall_ms);
    out << '\n';
  }
}

std::vector<MetricRow> read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) {
    throw ConfigError("CSV header does not match the metric schema");
  }
  std::vector<MetricRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 8) throw ConfigError("CSV row has wrong field count");
    MetricRow r;
    r.instance_id = f[0];
    r.strategy = f[1];
    r.seed = parse_number<std::uint64_t>(f[2], "seed");
    r.t = parse_number<long>(f[3], "t");
    r.posterior_confidence = std::strtod(f[4].c_str(), nullptr);
    r.z_hat_correct = parse_number<int>(f[5], "z_hat_correct");
    r.rejections_cumulative =
        parse_number<long long>(f[6], "rejections_cumulative");
    r.wall_ms = std::strtod(f[7].c_str(), nullptr);
    rows.push_back(std::move(r));
  }
  return rows;
}

void write_error_csv(std::ostream& out, const std::vector<ErrorRow>& rows) {
  out << "instance_id,strategy,seed,message\n";
  for (const auto& r : rows) {
    out << escape_field(r.instance_id) << ',' << escape_field(r.strategy) << ','
        << r.seed << ',' << escape_field(r.message) << '\n';
  }
}

// ---------------------------------------------------------------------------
// Aggregates

std::vector<ConfidenceCurve> aggregate_confidence(
    const std::vector<MetricRow>& rows) {
  // (instance, strategy) -> t -> (sum, sum of squares, count)
  struct Acc {
    double sum = 0.0;
    double sq = 0.0;
    int n = 0;
  };
  std::map<std::pair<std::string, std::string>, std::map<long, Acc>> groups;
  for (const auto& r : rows) {
    auto& acc = groups[{r.instance_id, r.strategy}][r.t];
    acc.sum += r.posterior_confidence;
    acc.sq += r.posterior_confidence * r.posterior_confidence;
    ++acc.n;
  }
  std::vector<ConfidenceCurve> curves;
  for (const auto& [key, by_t] : groups) {
    ConfidenceCurve c;
    c.instance_id = key.first;
    c.strategy = key.second;
    for (const auto& [t, acc] : by_t) {
      const double mean = acc.sum / acc.n;
      double se = 0.0;
      if (acc.n > 1) {
        const double var =
            std::max(0.0, (acc.sq - acc.n * mean * mean) / (acc.n - 1));
        se = std::sqrt(var / acc.n);
      }
      c.t.push_back(t);
      c.mean.push_back(mean);
      c.std_error.push_back(se);
      c.count.push_back(acc.n);
    }
    curves.push_back(std::move(c));
  }
  return curves;
}

std::optional<long> first_crossing(const ConfidenceCurve& curve, double delta) {
  for (std::size_t i = 0; i < curve.t.size(); ++i) {
    if (curve.mean[i] > 1.0 - delta) return curve.t[i];
  }
  return std::nullopt;
}

std::string CrossingEntry::display() const {
  if (samples) return std::to_string(*samples);
  return ">" + std::to_string(t_max);
}

std::vector<CrossingEntry> samples_to_delta(const std::vector<MetricRow>& rows,
                                            double delta) {
  std::vector<CrossingEntry> out;
  for (const auto& curve : aggregate_confidence(rows)) {
    CrossingEntry e;
    e.instance_id = curve.instance_id;
    e.strategy = curve.strategy;
    e.delta = delta;
    e.samples = first_crossing(curve, delta);
    e.t_max = curve.t.empty() ? 0 : curve.t.back();
    out.push_back(std::move(e));
  }
  return out;
}

nlohmann::json summary_json(const std::vector<MetricRow>& rows,
                            const std::vector<double>& delta_levels) {
  nlohmann::json table = nlohmann::json::array();
  for (double delta : delta_levels) {
    for (const auto& e : samples_to_delta(rows, delta)) {
      table.push_back({{"instance_id", e.instance_id},
                       {"strategy", e.strategy},
                       {"delta", delta},
                       {"samples", e.display()}});
    }
  }
  return {{"samples_to_delta", table}};
}

nlohmann::json experiment_metadata(const ExperimentConfig& config) {
  nlohmann::json strategies = nlohmann::json::array();
  for (const auto& s : config.strategies) strategies.push_back(to_json(s));
  return {{"instance", to_json(config.instance)},
          {"strategies", strategies},
          {"T_max", config.t_max},
          {"repetitions", config.repetitions},
          {"master_seed", config.master_seed},
          {"mc_draws", config.mc_draws},
          {"checkpoints", config.checkpoints},
          {"delta_levels", config.delta_levels},
          {"confidence_metric",
           "P_{theta ~ N(theta_hat, V^-1)}(argmax theta = z*), mean over reps; "
           "exact when |Z| = 2, Monte Carlo with mc_draws otherwise"}};
}

void write_experiment(const ExperimentConfig& config, const ResultStore& store,
                      const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  {
    std::ofstream out(out_dir / "results.csv");
    write_csv(out, store.rows);
  }
  if (!store.errors.empty()) {
    std::ofstream out(out_dir / "errors.csv");
    write_error_csv(out, store.errors);
  }
  {
    std::ofstream out(out_dir / "summary.json");
    out << summary_json(store.rows, config.delta_levels).dump(2) << '\n';
  }
  {
    std::ofstream out(out_dir / "metadata.json");
    out << experiment_metadata(config).dump(2) << '\n';
  }
}

}  // namespace peps
