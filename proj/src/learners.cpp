#include "peps/learners.hpp"

#include <algorithm>
#include <cmath>

#include <spdlog/spdlog.h>

#include "peps/errors.hpp"

namespace peps {

namespace {

void check_gains(std::span<const double> gains, std::size_t n) {
  if (gains.size() != n) throw DimensionError("gain vector size mismatch");
  for (double g : gains) {
    if (std::isnan(g)) throw InputError("NaN gain");
    if (!std::isfinite(g)) throw InputError("infinite gain");
  }
}

}  // namespace

Hedge::Hedge(std::size_t n, double eta, double gain_bound)
    : log_weights_(n, 0.0), eta_(eta), gain_bound_(gain_bound) {
  if (n == 0) throw ConfigError("Hedge needs at least one expert");
  if (!(eta > 0.0) || !std::isfinite(eta)) {
    throw ConfigError("Hedge step size must be positive");
  }
}

void Hedge::update(std::span<const double> gains) {
  check_gains(gains, log_weights_.size());
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < gains.size(); ++i) {
    if (!warned_ && std::abs(gains[i]) > gain_bound_) {
      spdlog::warn("Hedge: gain {} exceeds configured bound {}", gains[i],
                   gain_bound_);
      warned_ = true;
    }
    log_weights_[i] += eta_ * gains[i];
    top = std::max(top, log_weights_[i]);
  }
  for (double& lw : log_weights_) lw -= top;
  ++t_;
}

DesignWeights Hedge::distribution() const {
  std::vector<double> w(log_weights_.size());
  double total = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    w[i] = std::exp(log_weights_[i]);
    total += w[i];
  }
  for (double& v : w) v /= total;
  return DesignWeights(std::move(w));
}

std::unique_ptr<MaxLearner> Hedge::clone() const {
  return std::make_unique<Hedge>(*this);
}

AdaHedge::AdaHedge(std::size_t n) : cumulative_loss_(n, 0.0) {
  if (n == 0) throw ConfigError("AdaHedge needs at least one expert");
}

double AdaHedge::eta() const {
  if (gap_sum_ <= 0.0) return std::numeric_limits<double>::infinity();
  return std::log(static_cast<double>(cumulative_loss_.size())) / gap_sum_;
}

std::vector<double> AdaHedge::weights() const {
  const std::size_t n = cumulative_loss_.size();
  std::vector<double> w(n, 0.0);
  const double lead =
      *std::min_element(cumulative_loss_.begin(), cumulative_loss_.end());
  const double rate = eta();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (std::isinf(rate)) {
      w[i] = cumulative_loss_[i] == lead ? 1.0 : 0.0;
    } else {
      w[i] = std::exp(-rate * (cumulative_loss_[i] - lead));
    }
    total += w[i];
  }
  for (double& v : w) v /= total;
  return w;
}

void AdaHedge::update(std::span<const double> gains) {
  const std::size_t n = cumulative_loss_.size();
  check_gains(gains, n);
  const auto w = weights();
  const double rate = eta();

  double expected = 0.0;
  double lowest = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    if (w[i] <= 0.0) continue;
    expected += w[i] * -gains[i];
    lowest = std::min(lowest, -gains[i]);
  }
  double mix_loss = lowest;
  if (!std::isinf(rate)) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (w[i] <= 0.0) continue;
      acc += w[i] * std::exp(-rate * (-gains[i] - lowest));
    }
    mix_loss = lowest - std::log(acc) / rate;
  }
  last_gap_ = expected - mix_loss;
  gap_sum_ += std::max(0.0, last_gap_);
  for (std::size_t i = 0; i < n; ++i) cumulative_loss_[i] -= gains[i];
}

DesignWeights AdaHedge::distribution() const { return DesignWeights(weights()); }

std::unique_ptr<MaxLearner> AdaHedge::clone() const {
  return std::make_unique<AdaHedge>(*this);
}

}  // namespace peps
