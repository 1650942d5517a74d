// Acceptance checks. Usage: acceptance [id ...]; with no ids every check runs.
// Prints one PASS/FAIL line per check and exits non-zero if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <spdlog/spdlog.h>

#include "oracles.hpp"
#include "peps/algorithms.hpp"
#include "peps/design.hpp"
#include "peps/harness.hpp"
#include "peps/learners.hpp"
#include "peps/sampling.hpp"

using namespace peps;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Check {
  int id;
  const char* name;
  double budget_s;
  std::function<Outcome()> run;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Vector gaussian(RngStream& rng, int d) {
  Vector v(d);
  for (int i = 0; i < d; ++i) v[i] = rng.normal();
  return v;
}

std::optional<long> crossing(const std::vector<MetricRow>& rows,
                             const std::string& strategy, double delta,
                             long* t_max = nullptr) {
  for (const auto& e : samples_to_delta(rows, delta)) {
    if (e.strategy != strategy) continue;
    if (t_max) *t_max = e.t_max;
    return e.samples;
  }
  return std::nullopt;
}

std::string show(std::optional<long> v, long t_max) {
  return v ? std::to_string(*v) : ">" + std::to_string(t_max);
}

// Strictly earlier crossing; a strategy that never crosses loses to one that does.
bool earlier(std::optional<long> a, std::optional<long> b) {
  if (!a) return false;
  if (!b) return true;
  return *a < *b;
}

ExperimentConfig bench_config(Instance instance, std::vector<std::string> names,
                              long t_max, int reps, std::uint64_t seed) {
  ExperimentConfig cfg;
  cfg.instance = std::move(instance);
  for (const auto& n : names) {
    cfg.strategies.push_back(strategy_config_from_json({{"strategy", n}}));
  }
  cfg.t_max = t_max;
  cfg.repetitions = reps;
  cfg.master_seed = seed;
  cfg.checkpoints = default_checkpoints(t_max);
  return cfg;
}

// 1. Step-wise least squares against a dense ridge solve at every step.
Outcome ls_recursive_vs_batch() {
  RngStream rng(101);
  double worst = 0.0;
  for (int traj = 0; traj < 100; ++traj) {
    const int d = std::vector<int>{2, 4, 8}[traj % 3];
    std::vector<Vector> arms;
    for (int i = 0; i < 2 * d; ++i) arms.push_back(gaussian(rng, d));
    const Vector theta = gaussian(rng, d);
    LeastSquares ls(d);
    Matrix V = Matrix::Identity(d, d);
    Vector s = Vector::Zero(d);
    for (int t = 0; t < 500; ++t) {
      const Vector& x = arms[static_cast<std::size_t>(rng.uniform() * arms.size())];
      const double y = theta.dot(x) + rng.normal();
      ls.observe(x, y);
      V += x * x.transpose();
      s += y * x;
      const Vector batch = V.colPivHouseholderQr().solve(s);
      worst = std::max(worst, (ls.theta_hat() - batch).cwiseAbs().maxCoeff());
    }
  }
  return {worst < 1e-8, fmt("max deviation %.3g (want < 1e-8)", worst)};
}

// 2. Kiefer-Wolfowitz certificate of the G-optimal design.
Outcome g_optimal_leverage() {
  RngStream rng(202);
  std::vector<std::vector<Vector>> sets;
  for (int i = 0; i < 50; ++i) {
    const int d = 2 + static_cast<int>(rng.uniform() * 7);
    const int n = d + static_cast<int>(rng.uniform() * (41 - d));
    std::vector<Vector> arms;
    for (int j = 0; j < n; ++j) arms.push_back(gaussian(rng, d));
    sets.push_back(std::move(arms));
  }
  sets.push_back(make_soare(0.1).arms);
  sets.push_back(make_soare(0.5).arms);
  double lo = 1e9, hi = 0.0;
  bool pass = true;
  for (const auto& arms : sets) {
    const int d = static_cast<int>(arms[0].size());
    const DesignWeights w = g_optimal(arms);
    Matrix A = Matrix::Zero(d, d);
    for (std::size_t i = 0; i < arms.size(); ++i) A += w[i] * arms[i] * arms[i].transpose();
    const Matrix Ainv = A.inverse();
    double lev = 0.0;
    for (const auto& x : arms) lev = std::max(lev, x.dot(Ainv * x));
    const double ratio = lev / d;
    lo = std::min(lo, ratio);
    hi = std::max(hi, ratio);
    pass = pass && ratio >= 1.0 && ratio <= 1.001;
  }
  return {pass, fmt("max leverage / d in [%.9f, %.9f] over %zu sets (want [1, 1.001])",
                    lo, hi, sets.size())};
}

// 3. Frank-Wolfe tau* against a simplex grid search.
Outcome tau_star_grid() {
  RngStream rng(303);
  std::vector<Instance> instances;
  while (instances.size() < 20) {
    std::vector<Vector> arms{gaussian(rng, 2), gaussian(rng, 2), gaussian(rng, 2)};
    try {
      instances.push_back(make_instance("random", arms, TargetSet::explicit_set(arms),
                                        gaussian(rng, 2)));
    } catch (const std::exception&) {
    }
  }
  for (double w : {0.1, 0.3, 1.0}) instances.push_back(make_soare(w));
  double worst = 0.0;
  for (const auto& inst : instances) {
    const double fw = tau_star(inst).tau_star;
    const double grid = oracle::grid_tau_star_2d(
        inst.arms, inst.targets.explicit_vectors(), inst.theta_star, 1e-3);
    worst = std::max(worst, std::abs(fw - grid) / grid);
  }
  const std::vector<Vector> e{make_vector({1.0, 0.0}), make_vector({0.0, 1.0})};
  const double basis = tau_star(make_instance("e1e2", e, TargetSet::explicit_set(e),
                                              make_vector({1.0, 0.0})))
                           .tau_star;
  const bool pass = worst <= 1e-2 && std::abs(basis - 0.125) <= 1e-4;
  return {pass, fmt("max relative error vs grid %.3g (want <= 1e-2); "
                    "tau*(e1,e2) = %.7f (want 0.125 +- 1e-4)",
                    worst, basis)};
}

// 4. Rejection sampler support and acceptance rate.
Outcome sampling_oracle() {
  RngStream rng(404);
  long calls = 0, bad = 0, returned = 0;
  // Fuzzed instances: random explicit target sets and top-k families.
  while (calls < 500000) {
    const bool topk = rng.uniform() < 0.3;
    const int d = 2 + static_cast<int>(rng.uniform() * 5);
    TargetSet z;
    if (topk) {
      z = TargetSet::top_k(d, 1 + static_cast<int>(rng.uniform() * (d - 1)));
    } else {
      std::vector<Vector> zs;
      const int m = 2 + static_cast<int>(rng.uniform() * 6);
      for (int i = 0; i < m; ++i) zs.push_back(gaussian(rng, d));
      z = TargetSet::explicit_set(std::move(zs));
    }
    SpdState gram(d);
    const int pulls = static_cast<int>(rng.uniform() * 30);
    for (int i = 0; i < pulls; ++i) gram.update(gaussian(rng, d));
    const Vector mean = gaussian(rng, d);
    const double scale = 0.25 + 2.0 * rng.uniform();
    const TargetId z_hat = argmax_oracle(z, mean).id;
    for (int i = 0; i < 500; ++i, ++calls) {
      const auto r = sample_alternative(rng, {mean, gram, scale}, z, z_hat, 20);
      if (!r.sample) continue;
      ++returned;
      if (argmax_oracle(z, *r.sample).id == z_hat) ++bad;
    }
  }
  // Two-target cases: single-draw acceptance frequency vs the exact mass.
  int outside = 0;
  double worst_z = 0.0;
  for (int c = 0; c < 50; ++c) {
    const std::vector<Vector> zs{gaussian(rng, 2), gaussian(rng, 2)};
    const TargetSet z = TargetSet::explicit_set(zs);
    SpdState gram(2);
    for (int i = 0; i < 3; ++i) gram.update(gaussian(rng, 2));
    const Vector v = zs[0] - zs[1];
    const double sd = std::sqrt(v.dot(gram.V().inverse() * v));
    // Mean placed so that the alternative mass lies in [0.05, 0.5].
    const double target_mass = 0.05 + 0.45 * rng.uniform();
    // Solve phi(-k) = target_mass by bisection on the oracle CDF.
    double lo = 0.0, hi = 10.0;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (oracle::phi_cdf(-mid) > target_mass ? lo : hi) = mid;
    }
    const double k = 0.5 * (lo + hi);
    const Vector mean = v * (k * sd / v.squaredNorm());
    const TargetId z_hat = argmax_oracle(z, mean).id;
    const double g = mean.dot(z_hat == 0 ? v : Vector(-v));
    const double p = 1.0 - oracle::phi_cdf(g / sd);
    const int n = 10000;
    int accepted = 0;
    for (int i = 0; i < n; ++i, ++calls) {
      const auto r = sample_alternative(rng, {mean, gram, 1.0}, z, z_hat, 1);
      if (r.sample) {
        ++accepted;
        ++returned;
        if (argmax_oracle(z, *r.sample).id == z_hat) ++bad;
      }
    }
    const double se = std::sqrt(p * (1 - p) / n);
    const double zscore = std::abs(accepted / double(n) - p) / se;
    worst_z = std::max(worst_z, zscore);
    if (zscore > 3.0) ++outside;
  }
  const bool pass = bad == 0 && outside == 0 && calls >= 1000000;
  return {pass, fmt("%ld calls, %ld samples, %ld with argmax = z_hat (want 0); "
                    "%d/50 two-target cases beyond 3 SE (max |z| %.2f)",
                    calls, returned, bad, outside, worst_z)};
}

// 5. Hedge regret against ln K / eta + eta T G^2 / 2.
Outcome hedge_regret() {
  RngStream rng(505);
  int violations = 0;
  double tightest = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    const int k = 2 + static_cast<int>(rng.uniform() * 7);
    const int T = 1 + static_cast<int>(rng.uniform() * 1000);
    const double G = 0.1 + 10.0 * rng.uniform();
    const double eta = (rep % 2 ? std::sqrt(2.0 * std::log(k) / T) : 0.01 + rng.uniform()) / G;
    Hedge h(k, eta, G);
    std::vector<double> total(k, 0.0);
    double earned = 0.0;
    const int leader = static_cast<int>(rng.uniform() * k);
    for (int t = 0; t < T; ++t) {
      std::vector<double> g(k);
      for (int i = 0; i < k; ++i) {
        // Mix of noise, a hidden leader and periodic switching.
        double u = rng.uniform();
        if (rep % 3 == 1) u = (i == leader) ? 0.6 + 0.4 * u : 0.5 * u;
        if (rep % 3 == 2) u = ((t / 50) % k == i) ? 1.0 : 0.0;
        g[i] = G * u;
        total[i] += g[i];
      }
      const DesignWeights w = h.distribution();
      for (int i = 0; i < k; ++i) earned += w[i] * g[i];
      h.update(g);
    }
    const double regret = *std::max_element(total.begin(), total.end()) - earned;
    const double bound = std::log(k) / eta + eta * T * G * G / 2.0;
    if (!(regret <= bound)) ++violations;
    tightest = std::max(tightest, regret / bound);
  }
  return {violations == 0,
          fmt("%d/100 sequences violate the bound; max regret/bound %.3f", violations,
              tightest)};
}

// 6. Error exponent of the fixed design at lambda*.
Outcome fixed_weight_rate() {
  const Instance inst = make_soare(0.5);
  const GameSolution sol = tau_star(inst);
  StrategyConfig cfg;
  cfg.kind = StrategyKind::FixedWeight;
  cfg.label = "fixed";
  cfg.weights.emplace(sol.lambda_star.values().begin(), sol.lambda_star.values().end());
  const int T = 4000;
  double rate_lo = 0.0, rate_hi = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    auto s = make_strategy(cfg, inst, T);
    RngStream rng(derive_seed(606, "fixed", rep));
    for (int t = 0; t < T; ++t) s->step(rng);
    const auto& ls = s->posterior();
    const auto b = posterior_log_error({ls.theta_hat(), ls.gram(), 1.0}, inst.targets,
                                       inst.best_target);
    // log(1 - c_T) lies in [lower, upper].
    rate_lo += -b.upper / T;
    rate_hi += -b.lower / T;
  }
  rate_lo /= 100;
  rate_hi /= 100;
  const double tau = sol.tau_star;
  const bool pass = rate_lo >= 0.5 * tau && rate_hi <= 1.5 * tau;
  return {pass, fmt("mean -(1/T) log(1 - c_T) in [%.5f, %.5f]; tau* = %.5f "
                    "(want within [%.5f, %.5f])",
                    rate_lo, rate_hi, tau, 0.5 * tau, 1.5 * tau)};
}

// 7. Soare omega = 0.1 samples-to-0.9.
Outcome soare_table() {
  const auto cfg = bench_config(make_soare(0.1), {"peps", "lints", "lingame"}, 5000, 100, 7001);
  const auto store = run_experiment(cfg);
  long tm = 0;
  const auto peps = crossing(store.rows, "peps", 0.1, &tm);
  const auto lints = crossing(store.rows, "lints", 0.1);
  const auto game = crossing(store.rows, "lingame", 0.1);
  const bool ok_peps = peps && *peps >= 600 && *peps <= 1800;
  const bool ok_ts = !lints;
  const bool ok_game = game && *game >= 500 && *game <= 1700;
  return {store.errors.empty() && ok_peps && ok_ts && ok_game,
          fmt("peps %s (want [600,1800]) %s; lints %s (want >5000) %s; "
              "lingame %s (want [500,1700]) %s",
              show(peps, tm).c_str(), ok_peps ? "ok" : "MISS", show(lints, tm).c_str(),
              ok_ts ? "ok" : "MISS", show(game, tm).c_str(), ok_game ? "ok" : "MISS")};
}

// 8. Sphere d = 6, 20 arms, generator seed 1.
Outcome sphere_table() {
  RngStream gen(1);
  const auto cfg = bench_config(make_sphere(gen, 6, 20), {"peps", "lints"}, 1000, 100, 8001);
  const auto store = run_experiment(cfg);
  long tm = 0;
  const auto peps = crossing(store.rows, "peps", 0.1, &tm);
  const auto lints = crossing(store.rows, "lints", 0.1);
  const bool ok_range = peps && *peps >= 170 && *peps <= 600;
  const bool ok_order = earlier(peps, lints);
  return {store.errors.empty() && ok_range && ok_order,
          fmt("peps %s (want [170,600]) %s; lints %s; peps earlier %s",
              show(peps, tm).c_str(), ok_range ? "ok" : "MISS", show(lints, tm).c_str(),
              ok_order ? "ok" : "MISS")};
}

// 9. Top-k ordering at delta = 0.1.
Outcome topk_ordering() {
  const auto cfg = bench_config(make_topk(12, 3), {"peps", "lingame"}, 30000, 50, 9001);
  const auto store = run_experiment(cfg);
  long tm = 0;
  const auto peps = crossing(store.rows, "peps", 0.1, &tm);
  const auto game = crossing(store.rows, "lingame", 0.1);
  return {store.errors.empty() && earlier(peps, game),
          fmt("peps %s, lingame %s (want peps earlier)", show(peps, tm).c_str(),
              show(game, tm).c_str())};
}

// 10. Median rejection draws per step before mean confidence exceeds 0.99.
Outcome rejection_profile() {
  const Instance inst = make_soare(0.1);
  const auto cfg = strategy_config_from_json({{"strategy", "peps"}});
  RunOptions opt;
  opt.t_max = 5000;
  opt.checkpoints = default_checkpoints(opt.t_max);
  opt.keep_steps = true;
  const int reps = 100;
  std::vector<std::vector<std::size_t>> draws;
  std::vector<MetricRow> rows;
  for (int r = 0; r < reps; ++r) {
    auto trace = run_repetition(inst, cfg, repetition_seed(1010, "peps", r), opt);
    draws.push_back(std::move(trace.rejections));
    rows.insert(rows.end(), trace.rows.begin(), trace.rows.end());
  }
  const auto first = crossing(rows, "peps", 0.01);
  const long horizon = first ? *first : opt.t_max;
  double worst = 0.0;
  long worst_t = 0;
  std::vector<double> column(reps);
  for (long t = 0; t < horizon; ++t) {
    for (int r = 0; r < reps; ++r) column[r] = static_cast<double>(draws[r][t]);
    std::sort(column.begin(), column.end());
    const double med = 0.5 * (column[(reps - 1) / 2] + column[reps / 2]);
    if (med > worst) worst = med, worst_t = t + 1;
  }
  return {worst < 30,
          fmt("confidence > 0.99 first at %s; max per-step median draws before it %.1f "
              "(at t=%ld, want < 30)",
              show(first, opt.t_max).c_str(), worst, worst_t)};
}

std::string strip_wall(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream out;
  std::string line;
  while (std::getline(in, line)) out << line.substr(0, line.rfind(',')) << '\n';
  return out.str();
}

// 11. Byte-identical `run` output for the same seed.
Outcome run_determinism() {
  const auto dir = std::filesystem::temp_directory_path() / "peps_acceptance_11";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  const std::string cli = PEPS_CLI;
  auto sh = [](const std::string& cmd) { return std::system(cmd.c_str()); };
  bool ok = true;
  std::string detail;
  struct Case {
    const char* gen;
    const char* strategy;
  };
  for (const Case& c : {Case{"--kind soare --omega 0.1", "peps"},
                        Case{"--kind topk --d 6 --k 2", "lingame"},
                        Case{"--kind sphere --d 4 --n-arms 10 --seed 3", "lints"}}) {
    const auto inst = dir / (std::string(c.strategy) + ".json");
    ok = ok && sh(cli + " gen-instance " + c.gen + " --out " + inst.string()) == 0;
    std::vector<std::string> outs;
    for (int i = 0; i < 2; ++i) {
      const auto csv = dir / (std::string(c.strategy) + std::to_string(i) + ".csv");
      ok = ok && sh(cli + " run --instance " + inst.string() + " --strategy " + c.strategy +
                    " --T 3000 --seed 7 --out " + csv.string()) == 0;
      outs.push_back(strip_wall(csv));
    }
    const bool same = outs[0] == outs[1] && !outs[0].empty();
    ok = ok && same;
    detail += fmt("%s%s %s (%zu bytes)", detail.empty() ? "" : "; ", c.strategy, same ? "identical" : "DIFFERENT",
                  outs[0].size());
  }
  std::filesystem::remove_all(dir);
  return {ok, detail};
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_level(spdlog::level::err);
  const std::vector<Check> checks{
      {1, "recursive least squares vs batch ridge", 10, ls_recursive_vs_batch},
      {2, "G-optimal design leverage", 30, g_optimal_leverage},
      {3, "tau* vs simplex grid", 60, tau_star_grid},
      {4, "rejection sampler support and acceptance", 60, sampling_oracle},
      {5, "Hedge regret bound", 5, hedge_regret},
      {6, "fixed design error exponent", 120, fixed_weight_rate},
      {7, "Soare samples-to-0.9", 900, soare_table},
      {8, "sphere samples-to-0.9", 600, sphere_table},
      {9, "top-k ordering", 1800, topk_ordering},
      {10, "rejection draws before 0.99", 300, rejection_profile},
      {11, "run determinism", 60, run_determinism},
  };
  std::vector<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.push_back(std::atoi(argv[i]));
  int failures = 0;
  for (const auto& c : checks) {
    if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), c.id) == wanted.end()) {
      continue;
    }
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs <= c.budget_s;
    const bool pass = o.pass && in_time;
    failures += !pass;
    std::printf("%s criterion %d (%s): %s; %.1f s (budget %.0f s%s)\n", pass ? "PASS" : "FAIL",
                c.id, c.name, o.detail.c_str(), secs, c.budget_s,
                in_time ? "" : ", EXCEEDED");
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
