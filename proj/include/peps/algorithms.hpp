#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "peps/design.hpp"
#include "peps/instances.hpp"
#include "peps/learners.hpp"
#include "peps/linalg.hpp"
#include "peps/rng.hpp"
#include "peps/sampling.hpp"

namespace peps {

enum class LearnerKind { Hedge, AdaHedge };
enum class Mode { Practical, Theoretical };

/// Which definition of C_3 feeds the doubling-trick step sizes: the short
/// form Delta_max + L^2 sqrt(d log(T l^2)) (default), or the longer
/// B_X + Delta_max + L^2 beta(T, l^2).
enum class C3Variant { Notation, AppendixTable };

/// Problem constants for bounded Theta (a ball of radius B).
struct TheoreticalConstants {
  int dim = 0;
  std::size_t n_arms = 0;
  double B = 0.0;
  double L = 0.0;
  double delta_max = 0.0;  // 2 L B
  double B_X = 0.0;        // max_x max_theta x^T theta = L B

  /// Throws ConfigError for unbounded Theta.
  static TheoreticalConstants from(const Instance& instance,
                                   const ThetaSpace& space);

  /// B + sqrt(2 log(inv_delta) + d log((d + t L^2) / d)).
  double beta(double t, double inv_delta) const;

  /// C_3 at epoch l (horizon 2^l). l^2 is floored at 1 so that epoch 0 is
  /// defined.
  double c3(int epoch, C3Variant variant = C3Variant::Notation) const;
};

/// sqrt(log|X| / (c3^2 T)).
double doubling_eta_lambda(std::size_t n_arms, double c3, double horizon);
/// sqrt(d log(T c3) / (c3^2 T)), with the log argument floored at e.
double doubling_eta_p(int dim, double c3, double horizon);

struct PepsConfig {
  int horizon = 1000;
  double alpha = 0.25;
  std::optional<double> eta_lambda;  // nullopt: theoretical formula
  std::optional<double> eta_p;       // nullopt: theoretical formula
  LearnerKind learner = LearnerKind::AdaHedge;
  bool forced_exploration = false;
  ThetaSpace theta_space = Unbounded{};
  std::size_t rejection_budget = kDefaultRejectionBudget;
  C3Variant c3_variant = C3Variant::Notation;

  /// AdaHedge, eta_p = 1, Theta = R^d, no forced exploration.
  static PepsConfig practical(int horizon);
  /// Hedge, forced exploration, step sizes from the problem constants.
  static PepsConfig theoretical(int horizon, double ball_radius);

  void validate() const;
};

struct StepDiagnostics {
  std::vector<double> gains;         // fed to the max-learner
  std::vector<double> sampling_law;  // distribution x_t was drawn from
  std::optional<Vector> challenger;  // sampled or projected alternative
  bool exhausted = false;            // rejection budget ran out
  double gamma = 0.0;                // forced-exploration weight
};

struct StrategyStep {
  std::size_t chosen_arm = 0;
  TargetId z_hat = 0;
  std::size_t rejections_used = 0;
  StepDiagnostics aux;
};

/// Running least squares with V_0 = I: V_t, S_t and theta_hat_{t+1}.
class LeastSquares {
 public:
  explicit LeastSquares(int dim);

  /// theta += V^{-1} x (y - x^T theta) / (1 + x^T V^{-1} x), then V += x x^T.
  void observe(const Vector& x, double y);

  const SpdState& gram() const { return gram_; }
  const Vector& sums() const { return sums_; }
  const Vector& theta_hat() const { return theta_; }
  long count() const { return count_; }

 private:
  SpdState gram_;
  Vector sums_;
  Vector theta_;
  Vector gain_;
  long count_ = 0;
};

/// A sequential identification strategy on a fixed instance. Each step pulls
/// one arm, observes y = <theta*, x> + noise and updates the estimate.
class Strategy {
 public:
  explicit Strategy(const Instance& instance);
  virtual ~Strategy() = default;

  virtual std::string_view name() const = 0;
  virtual StrategyStep step(RngStream& rng) = 0;

  const Instance& instance() const { return instance_; }
  const LeastSquares& posterior() const { return ls_; }
  long t() const { return t_; }
  /// argmax_z <z, theta_hat>.
  TargetId recommendation() const;

 protected:
  double pull(std::size_t arm, RngStream& rng);

  const Instance& instance_;
  LeastSquares ls_;
  long t_ = 0;
};

/// Top-two sampling with a max-learner over the arms.
class Peps final : public Strategy {
 public:
  Peps(const Instance& instance, PepsConfig config);

  std::string_view name() const override { return "peps"; }
  StrategyStep step(RngStream& rng) override;

  struct Final {
    Vector theta_tilde;
    TargetId z_out = 0;
    bool exhausted = false;  // ball rejection failed; theta_tilde is a fallback
  };
  /// Samples theta from the posterior restricted to Theta and returns its
  /// best target.
  Final finalize(RngStream& rng) const;

  const PepsConfig& config() const { return config_; }
  double eta_lambda() const { return eta_lambda_; }
  double eta_p() const { return eta_p_; }
  const MaxLearner& learner() const { return *learner_; }
  const std::optional<DesignWeights>& g_design() const { return g_design_; }

 private:
  PepsConfig config_;
  double eta_lambda_ = 0.0;
  double eta_p_ = 1.0;
  std::unique_ptr<MaxLearner> learner_;
  std::optional<DesignWeights> g_design_;
  std::vector<double> gains_;
};

/// Linear Thompson sampling: pull argmax_x <x, theta>, theta ~ N(theta_hat,
/// V^{-1}). Requires Z = X.
class LinTs final : public Strategy {
 public:
  explicit LinTs(const Instance& instance);
  std::string_view name() const override { return "lints"; }
  StrategyStep step(RngStream& rng) override;
};

/// Game baseline: the max-learner is fed the gains of the exact closest
/// alternative under A(lambda_t) (a projection for every competing target).
/// Uses the same learner, arm mixing and least squares as Peps.
class LinGame final : public Strategy {
 public:
  LinGame(const Instance& instance, PepsConfig config);
  std::string_view name() const override { return "lingame"; }
  StrategyStep step(RngStream& rng) override;

  const MaxLearner& learner() const { return *learner_; }

 private:
  PepsConfig config_;
  std::unique_ptr<MaxLearner> learner_;
  std::optional<DesignWeights> g_design_;
  std::vector<double> gains_;
};

/// Pulls arms iid from a fixed design.
class FixedWeight final : public Strategy {
 public:
  FixedWeight(const Instance& instance, DesignWeights weights);
  std::string_view name() const override { return "fixed"; }
  StrategyStep step(RngStream& rng) override;
  const DesignWeights& weights() const { return weights_; }

 private:
  DesignWeights weights_;
};

/// min over z != z_hat of sqrt(2 * best_response value) in the V_t metric,
/// i.e. the distance from theta_hat to the alternative in ||.||_{V_t}.
double glrt_statistic(const LeastSquares& state, const TargetSet& targets);

struct EpochResult {
  int epoch = 0;
  long horizon = 0;
  double c3 = 0.0;
  double eta_lambda = 0.0;
  double eta_p = 0.0;
  TargetId z_hat = 0;
  bool correct = false;
  double confidence = 0.0;  // P_{theta ~ pi_l}(argmax theta = z*)
  double gram_trace = 0.0;  // trace(V_T) at the end of the epoch
};

/// Runs fresh PEPS instances with horizons 2^0 .. 2^max_epoch and the
/// doubling-trick step sizes. Requires a Ball parameter space.
std::vector<EpochResult> doubling_run(const Instance& instance, RngStream& rng,
                                      int max_epoch, const ThetaSpace& space,
                                      C3Variant variant = C3Variant::Notation,
                                      std::size_t mc_draws = 1000);

enum class StrategyKind { Peps, LinTs, LinGame, FixedWeight };

/// A strategy entry in an experiment configuration.
struct StrategyConfig {
  StrategyKind kind = StrategyKind::Peps;
  std::string label;  // name used in result tables; defaults to the kind
  Mode mode = Mode::Practical;
  PepsConfig settings;
  std::optional<std::vector<double>> weights;  // fixed: default is lambda*
};

StrategyConfig strategy_config_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const StrategyConfig& config);
std::string_view kind_name(StrategyKind kind);

std::unique_ptr<Strategy> make_strategy(const StrategyConfig& config,
                                        const Instance& instance, int horizon);

}  // namespace peps
