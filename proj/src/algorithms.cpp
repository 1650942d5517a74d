#include "peps/algorithms.hpp"

#include <cmath>
#include <numbers>

#include <spdlog/spdlog.h>

#include "peps/errors.hpp"

namespace peps {

// ---------------------------------------------------------------------------
// Constants and step sizes

TheoreticalConstants TheoreticalConstants::from(const Instance& instance,
                                                const ThetaSpace& space) {
  const auto* ball = std::get_if<Ball>(&space);
  if (ball == nullptr) {
    throw ConfigError(
        "theoretical constants need a bounded Theta (ball); use practical "
        "mode for Theta = R^d");
  }
  if (!(ball->radius > 0.0)) throw ConfigError("ball radius must be positive");
  if (instance.theta_star.norm() > ball->radius) {
    throw ConfigError("ball radius is smaller than ||theta*||");
  }
  TheoreticalConstants c;
  c.dim = instance.dim;
  c.n_arms = instance.arms.size();
  c.B = ball->radius;
  c.L = instance.max_arm_norm;
  c.delta_max = *peps::delta_max(instance, space);
  c.B_X = c.L * c.B;
  return c;
}

double TheoreticalConstants::beta(double t, double inv_delta) const {
  const double d = dim;
  return B + std::sqrt(2.0 * std::log(inv_delta) +
                       d * std::log((d + t * L * L) / d));
}

double TheoreticalConstants::c3(int epoch, C3Variant variant) const {
  const double horizon = std::ldexp(1.0, epoch);
  const double l2 = std::max(1.0, static_cast<double>(epoch) * epoch);
  if (variant == C3Variant::AppendixTable) {
    return B_X + delta_max + L * L * beta(horizon, l2);
  }
  return delta_max + L * L * std::sqrt(dim * std::log(horizon * l2));
}

double doubling_eta_lambda(std::size_t n_arms, double c3, double horizon) {
  if (n_arms < 2) throw ConfigError("Hedge step size needs at least two arms");
  return std::sqrt(std::log(static_cast<double>(n_arms)) /
                   (c3 * c3 * horizon));
}

double doubling_eta_p(int dim, double c3, double horizon) {
  const double arg = std::max(horizon * c3, std::numbers::e);
  return std::sqrt(dim * std::log(arg) / (c3 * c3 * horizon));
}

PepsConfig PepsConfig::practical(int horizon) {
  PepsConfig c;
  c.horizon = horizon;
  c.eta_p = 1.0;
  c.learner = LearnerKind::AdaHedge;
  c.forced_exploration = false;
  c.theta_space = Unbounded{};
  return c;
}

PepsConfig PepsConfig::theoretical(int horizon, double ball_radius) {
  PepsConfig c;
  c.horizon = horizon;
  c.learner = LearnerKind::Hedge;
  c.forced_exploration = true;
  c.theta_space = Ball{ball_radius};
  return c;
}

void PepsConfig::validate() const {
  if (horizon < 1) throw ConfigError("horizon must be >= 1");
  if (!(alpha > 0.0 && alpha < 0.5)) {
    throw ConfigError("alpha must lie in (0, 1/2)");
  }
  if (eta_lambda && !(*eta_lambda > 0.0)) {
    throw ConfigError("eta_lambda must be positive");
  }
  if (eta_p && !(*eta_p > 0.0)) throw ConfigError("eta_p must be positive");
  if (rejection_budget < 1) throw ConfigError("rejection_budget must be >= 1");
  if (const auto* ball = std::get_if<Ball>(&theta_space)) {
    if (!(ball->radius > 0.0)) throw ConfigError("ball radius must be positive");
  }
}

// ---------------------------------------------------------------------------
// Least squares

LeastSquares::LeastSquares(int dim)
    : gram_(dim), sums_(Vector::Zero(dim)), theta_(Vector::Zero(dim)),
      gain_(dim) {}

void LeastSquares::observe(const Vector& x, double y) {
  gain_.noalias() = gram_.Vinv() * x;
  const double denom = 1.0 + x.dot(gain_);
  theta_ += gain_ * ((y - x.dot(theta_)) / denom);
  sums_ += x * y;
  gram_.update(x);
  ++count_;
  if (gram_.updates() % SpdState::kRefactorInterval == 0) {
    theta_.noalias() = gram_.Vinv() * sums_;
  }
}

// ---------------------------------------------------------------------------
// Strategies

namespace {

std::unique_ptr<MaxLearner> build_learner(LearnerKind kind, std::size_t n,
                                          double eta) {
  if (kind == LearnerKind::AdaHedge) return std::make_unique<AdaHedge>(n);
  return std::make_unique<Hedge>(n, eta);
}

int epoch_for(int horizon) {
  int epoch = 0;
  while ((1L << epoch) < horizon) ++epoch;
  return epoch;
}

void require_alternatives(const Instance& instance) {
  if (instance.targets.size() < 2) {
    throw DegenerateTargetError("nothing to identify: |Z| = 1");
  }
}

// Resolves eta_lambda for a learner; Hedge without an explicit step size
// falls back to the doubling-trick formula.
double resolve_eta_lambda(const PepsConfig& config, const Instance& instance) {
  if (config.learner == LearnerKind::AdaHedge) return 0.0;
  if (config.eta_lambda) return *config.eta_lambda;
  const auto consts = TheoreticalConstants::from(instance, config.theta_space);
  const int epoch = epoch_for(config.horizon);
  return doubling_eta_lambda(instance.arms.size(),
                             consts.c3(epoch, config.c3_variant),
                             config.horizon);
}

}  // namespace

Strategy::Strategy(const Instance& instance)
    : instance_(instance), ls_(instance.dim) {
  require_alternatives(instance);
}

TargetId Strategy::recommendation() const {
  return argmax_oracle(instance_.targets, ls_.theta_hat()).id;
}

double Strategy::pull(std::size_t arm, RngStream& rng) {
  const Vector& x = instance_.arms[arm];
  const double y =
      instance_.theta_star.dot(x) + instance_.noise_std * rng.normal();
  ls_.observe(x, y);
  return y;
}

Peps::Peps(const Instance& instance, PepsConfig config)
    : Strategy(instance), config_(std::move(config)) {
  config_.validate();
  eta_lambda_ = resolve_eta_lambda(config_, instance);
  if (config_.eta_p) {
    eta_p_ = *config_.eta_p;
  } else {
    const auto consts =
        TheoreticalConstants::from(instance, config_.theta_space);
    const int epoch = epoch_for(config_.horizon);
    eta_p_ = doubling_eta_p(instance.dim, consts.c3(epoch, config_.c3_variant),
                            config_.horizon);
  }
  learner_ = build_learner(config_.learner, instance.arms.size(), eta_lambda_);
  if (config_.forced_exploration) g_design_ = g_optimal(instance.arms);
  gains_.assign(instance.arms.size(), 0.0);
}

StrategyStep Peps::step(RngStream& rng) {
  ++t_;
  const auto& arms = instance_.arms;
  const Vector theta_hat = ls_.theta_hat();

  StrategyStep out;
  out.z_hat = argmax_oracle(instance_.targets, theta_hat).id;
  const PosteriorSpec spec{theta_hat, ls_.gram(), 1.0 / eta_p_};
  RejectionReport report = sample_alternative(
      rng, spec, instance_.targets, out.z_hat, config_.rejection_budget);
  out.rejections_used = report.draws_used;
  out.aux.exhausted = report.exhausted;

  DesignWeights law = learner_->distribution();
  if (config_.forced_exploration) {
    out.aux.gamma = std::pow(static_cast<double>(t_), -config_.alpha);
    law = mix(law, *g_design_, out.aux.gamma);
  }
  out.chosen_arm = rng.categorical(law.values());

  // Exhaustion: zero gains, the learner state is left as is.
  if (report.sample) {
    const Vector diff = *report.sample - theta_hat;
    for (std::size_t i = 0; i < arms.size(); ++i) {
      const double p = arms[i].dot(diff);
      gains_[i] = p * p;
    }
  } else {
    std::fill(gains_.begin(), gains_.end(), 0.0);
  }

  pull(out.chosen_arm, rng);
  learner_->update(gains_);

  out.aux.gains = gains_;
  out.aux.sampling_law.assign(law.values().begin(), law.values().end());
  out.aux.challenger = std::move(report.sample);
  return out;
}

Peps::Final Peps::finalize(RngStream& rng) const {
  const Vector& theta_hat = ls_.theta_hat();
  const PosteriorSpec spec{theta_hat, ls_.gram(), 1.0};
  RejectionReport report =
      sample_theta_space(rng, spec, config_.theta_space, config_.rejection_budget);
  Final fin;
  if (report.sample) {
    fin.theta_tilde = std::move(*report.sample);
  } else {
    const double radius = std::get<Ball>(config_.theta_space).radius;
    const double norm = theta_hat.norm();
    fin.theta_tilde = norm > radius ? Vector(theta_hat * (radius / norm))
                                    : theta_hat;
    fin.exhausted = true;
    spdlog::info("peps finalize: ball rejection exhausted, using projected mean");
  }
  fin.z_out = argmax_oracle(instance_.targets, fin.theta_tilde).id;
  return fin;
}

LinTs::LinTs(const Instance& instance) : Strategy(instance) {
  bool same = !instance.targets.is_top_k() &&
              instance.targets.explicit_vectors().size() == instance.arms.size();
  if (same) {
    const auto& zs = instance.targets.explicit_vectors();
    for (std::size_t i = 0; i < zs.size() && same; ++i) {
      same = zs[i] == instance.arms[i];
    }
  }
  if (!same) {
    throw ConfigError("linear Thompson sampling is only defined when Z = X");
  }
}

StrategyStep LinTs::step(RngStream& rng) {
  ++t_;
  StrategyStep out;
  out.z_hat = recommendation();
  const Vector theta =
      sample_gaussian(rng, ls_.theta_hat(), ls_.gram(), 1.0);
  const auto& arms = instance_.arms;
  double best = arms[0].dot(theta);
  for (std::size_t i = 1; i < arms.size(); ++i) {
    const double v = arms[i].dot(theta);
    if (v > best) {
      best = v;
      out.chosen_arm = i;
    }
  }
  out.rejections_used = 1;
  out.aux.challenger = theta;
  pull(out.chosen_arm, rng);
  return out;
}

LinGame::LinGame(const Instance& instance, PepsConfig config)
    : Strategy(instance), config_(std::move(config)) {
  config_.validate();
  learner_ = build_learner(config_.learner, instance.arms.size(),
                           resolve_eta_lambda(config_, instance));
  if (config_.forced_exploration) g_design_ = g_optimal(instance.arms);
  gains_.assign(instance.arms.size(), 0.0);
}

StrategyStep LinGame::step(RngStream& rng) {
  ++t_;
  const auto& arms = instance_.arms;
  const Vector theta_hat = ls_.theta_hat();

  StrategyStep out;
  out.z_hat = argmax_oracle(instance_.targets, theta_hat).id;
  const DesignWeights lambda = learner_->distribution();
  BestResponse alt =
      closest_alternative(lambda, arms, theta_hat, instance_.targets);
  const Vector diff = theta_hat - alt.minimizer;
  for (std::size_t i = 0; i < arms.size(); ++i) {
    const double p = arms[i].dot(diff);
    gains_[i] = p * p;
  }

  DesignWeights law = lambda;
  if (config_.forced_exploration) {
    out.aux.gamma = std::pow(static_cast<double>(t_), -config_.alpha);
    law = mix(law, *g_design_, out.aux.gamma);
  }
  out.chosen_arm = rng.categorical(law.values());
  pull(out.chosen_arm, rng);
  learner_->update(gains_);

  out.aux.gains = gains_;
  out.aux.sampling_law.assign(law.values().begin(), law.values().end());
  out.aux.challenger = std::move(alt.minimizer);
  return out;
}

FixedWeight::FixedWeight(const Instance& instance, DesignWeights weights)
    : Strategy(instance), weights_(std::move(weights)) {
  if (weights_.size() != instance.arms.size()) {
    throw ConfigError("fixed design does not match the arm count");
  }
}

StrategyStep FixedWeight::step(RngStream& rng) {
  ++t_;
  StrategyStep out;
  out.z_hat = recommendation();
  out.chosen_arm = rng.categorical(weights_.values());
  pull(out.chosen_arm, rng);
  return out;
}

double glrt_statistic(const LeastSquares& state, const TargetSet& targets) {
  const BestResponse r =
      closest_alternative(state.gram().V(), state.theta_hat(), targets);
  return std::sqrt(2.0 * r.value);
}

std::vector<EpochResult> doubling_run(const Instance& instance, RngStream& rng,
                                      int max_epoch, const ThetaSpace& space,
                                      C3Variant variant,
                                      std::size_t mc_draws) {
  if (max_epoch < 0 || max_epoch > 30) {
    throw ConfigError("max_epoch must lie in [0, 30]");
  }
  const auto consts = TheoreticalConstants::from(instance, space);
  std::vector<EpochResult> results;
  for (int epoch = 0; epoch <= max_epoch; ++epoch) {
    EpochResult r;
    r.epoch = epoch;
    r.horizon = 1L << epoch;
    r.c3 = consts.c3(epoch, variant);
    r.eta_lambda = doubling_eta_lambda(instance.arms.size(), r.c3, r.horizon);
    r.eta_p = doubling_eta_p(instance.dim, r.c3, r.horizon);

    PepsConfig cfg;
    cfg.horizon = static_cast<int>(r.horizon);
    cfg.alpha = 0.25;
    cfg.eta_lambda = r.eta_lambda;
    cfg.eta_p = r.eta_p;
    cfg.learner = LearnerKind::Hedge;
    cfg.forced_exploration = true;
    cfg.theta_space = space;
    cfg.c3_variant = variant;
    Peps peps(instance, cfg);
    for (long t = 0; t < r.horizon; ++t) peps.step(rng);

    const auto fin = peps.finalize(rng);
    r.z_hat = fin.z_out;
    r.correct = fin.z_out == instance.best_target;
    const PosteriorSpec spec{peps.posterior().theta_hat(),
                             peps.posterior().gram(), 1.0};
    r.confidence = posterior_confidence(rng, spec, instance.targets,
                                        instance.best_target, mc_draws)
                       .value;
    r.gram_trace = peps.posterior().gram().V().trace();
    results.push_back(r);
  }
  return results;
}

// ---------------------------------------------------------------------------
// Configuration

std::string_view kind_name(StrategyKind kind) {
  switch (kind) {
    case StrategyKind::Peps: return "peps";
    case StrategyKind::LinTs: return "lints";
    case StrategyKind::LinGame: return "lingame";
    case StrategyKind::FixedWeight: return "fixed";
  }
  return "unknown";
}

namespace {

ThetaSpace theta_space_from_json(const nlohmann::json& doc) {
  if (doc.is_string()) {
    if (doc.get<std::string>() == "unbounded") return Unbounded{};
    throw ConfigError("theta_space must be \"unbounded\" or {\"ball\": B}");
  }
  if (doc.is_object() && doc.contains("ball")) {
    return Ball{doc.at("ball").get<double>()};
  }
  throw ConfigError("theta_space must be \"unbounded\" or {\"ball\": B}");
}

std::optional<double> step_size_from_json(const nlohmann::json& doc) {
  if (doc.is_string() && doc.get<std::string>() == "auto") return std::nullopt;
  if (doc.is_number()) return doc.get<double>();
  throw ConfigError("step sizes must be numbers or \"auto\"");
}

}  // namespace

StrategyConfig strategy_config_from_json(const nlohmann::json& doc) {
  try {
    StrategyConfig cfg;
    const std::string kind = doc.at("strategy").get<std::string>();
    if (kind == "peps") {
      cfg.kind = StrategyKind::Peps;
    } else if (kind == "lints") {
      cfg.kind = StrategyKind::LinTs;
    } else if (kind == "lingame") {
      cfg.kind = StrategyKind::LinGame;
    } else if (kind == "fixed") {
      cfg.kind = StrategyKind::FixedWeight;
    } else {
      throw ConfigError("unknown strategy: " + kind);
    }
    cfg.label = doc.value("label", kind);

    const std::string mode = doc.value("mode", std::string("practical"));
    ThetaSpace space = Unbounded{};
    if (doc.contains("theta_space")) space = theta_space_from_json(doc["theta_space"]);
    if (mode == "practical") {
      cfg.mode = Mode::Practical;
      cfg.settings = PepsConfig::practical(1);
      cfg.settings.theta_space = space;
    } else if (mode == "theoretical") {
      cfg.mode = Mode::Theoretical;
      const auto* ball = std::get_if<Ball>(&space);
      if (ball == nullptr) {
        throw ConfigError("theoretical mode requires theta_space {\"ball\": B}");
      }
      cfg.settings = PepsConfig::theoretical(1, ball->radius);
    } else {
      throw ConfigError("mode must be practical or theoretical");
    }

    auto& s = cfg.settings;
    if (doc.contains("alpha")) s.alpha = doc["alpha"].get<double>();
    if (doc.contains("eta_p")) s.eta_p = step_size_from_json(doc["eta_p"]);
    if (doc.contains("eta_lambda")) {
      s.eta_lambda = step_size_from_json(doc["eta_lambda"]);
    }
    if (doc.contains("learner")) {
      const auto name = doc["learner"].get<std::string>();
      if (name == "hedge") {
        s.learner = LearnerKind::Hedge;
      } else if (name == "adahedge") {
        s.learner = LearnerKind::AdaHedge;
      } else {
        throw ConfigError("learner must be hedge or adahedge");
      }
    }
    if (doc.contains("rejection_budget")) {
      const auto budget = doc["rejection_budget"].get<long long>();
      if (budget < 1) throw ConfigError("rejection_budget must be >= 1");
      s.rejection_budget = static_cast<std::size_t>(budget);
    }
    if (doc.contains("forced_exploration")) {
      s.forced_exploration = doc["forced_exploration"].get<bool>();
    }
    if (doc.contains("c3_variant")) {
      const auto name = doc["c3_variant"].get<std::string>();
      if (name == "notation") {
        s.c3_variant = C3Variant::Notation;
      } else if (name == "appendix") {
        s.c3_variant = C3Variant::AppendixTable;
      } else {
        throw ConfigError("c3_variant must be notation or appendix");
      }
    }
    if (doc.contains("weights")) {
      cfg.weights = doc["weights"].get<std::vector<double>>();
    }
    return cfg;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed strategy config: ") + e.what());
  }
}

nlohmann::json to_json(const StrategyConfig& config) {
  const auto& s = config.settings;
  nlohmann::json doc;
  doc["strategy"] = kind_name(config.kind);
  doc["label"] = config.label;
  doc["mode"] = config.mode == Mode::Practical ? "practical" : "theoretical";
  doc["alpha"] = s.alpha;
  doc["eta_p"] = s.eta_p ? nlohmann::json(*s.eta_p) : nlohmann::json("auto");
  doc["eta_lambda"] =
      s.eta_lambda ? nlohmann::json(*s.eta_lambda) : nlohmann::json("auto");
  doc["learner"] = s.learner == LearnerKind::Hedge ? "hedge" : "adahedge";
  doc["rejection_budget"] = s.rejection_budget;
  doc["forced_exploration"] = s.forced_exploration;
  doc["c3_variant"] =
      s.c3_variant == C3Variant::Notation ? "notation" : "appendix";
  if (const auto* ball = std::get_if<Ball>(&s.theta_space)) {
    doc["theta_space"] = {{"ball", ball->radius}};
  } else {
    doc["theta_space"] = "unbounded";
  }
  if (config.weights) doc["weights"] = *config.weights;
  return doc;
}

std::unique_ptr<Strategy> make_strategy(const StrategyConfig& config,
                                        const Instance& instance, int horizon) {
  PepsConfig settings = config.settings;
  settings.horizon = horizon;
  switch (config.kind) {
    case StrategyKind::Peps:
      return std::make_unique<Peps>(instance, settings);
    case StrategyKind::LinTs:
      return std::make_unique<LinTs>(instance);
    case StrategyKind::LinGame:
      return std::make_unique<LinGame>(instance, settings);
    case StrategyKind::FixedWeight: {
      DesignWeights w = config.weights
                            ? DesignWeights(*config.weights)
                            : tau_star(instance).lambda_star;
      return std::make_unique<FixedWeight>(instance, std::move(w));
    }
  }
  throw ConfigError("unknown strategy kind");
}

}  // namespace peps
