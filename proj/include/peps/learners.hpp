#pragma once

#include <cstddef>
#include <limits>
#include <memory>
#include <span>
#include <vector>

#include "peps/design.hpp"

namespace peps {

/// Online learner for the max-player over the simplex on the arms. Consumes
/// gain vectors (larger is better).
class MaxLearner {
 public:
  virtual ~MaxLearner() = default;
  virtual void update(std::span<const double> gains) = 0;
  virtual DesignWeights distribution() const = 0;
  virtual std::size_t size() const = 0;
  virtual std::unique_ptr<MaxLearner> clone() const = 0;
};

/// Exponential weights with a fixed step: lambda_{t+1} ∝ lambda_t e^{eta g_t}.
class Hedge final : public MaxLearner {
 public:
  /// gain_bound only triggers a warning when exceeded; gains are not clamped.
  Hedge(std::size_t n, double eta,
        double gain_bound = std::numeric_limits<double>::infinity());

  void update(std::span<const double> gains) override;
  DesignWeights distribution() const override;
  std::size_t size() const override { return log_weights_.size(); }
  std::unique_ptr<MaxLearner> clone() const override;

  double eta() const { return eta_; }
  long steps() const { return t_; }
  std::span<const double> log_weights() const { return log_weights_; }

 private:
  std::vector<double> log_weights_;  // max entry kept at 0
  double eta_;
  double gain_bound_;
  long t_ = 0;
  bool warned_ = false;
};

/// AdaHedge (de Rooij, van Erven, Grünwald, Koolen 2014) on losses = -gains.
///
/// Plays w_t ∝ exp(-eta_t L_{t-1}) with eta_t = ln K / Delta_{t-1}, and
/// uniform weight on the current leaders while Delta = 0. After each round
/// the mixability gap delta_t = h_t - m_t is added to Delta, where
/// h_t = <w_t, l_t> and m_t = -(1/eta_t) ln <w_t, e^{-eta_t l_t}> (m_t =
/// min over the support of w_t when eta_t is infinite). No loss range is
/// assumed.
class AdaHedge final : public MaxLearner {
 public:
  explicit AdaHedge(std::size_t n);

  void update(std::span<const double> gains) override;
  DesignWeights distribution() const override;
  std::size_t size() const override { return cumulative_loss_.size(); }
  std::unique_ptr<MaxLearner> clone() const override;

  double mixability_gap_sum() const { return gap_sum_; }
  double last_mixability_gap() const { return last_gap_; }
  /// Current learning rate; +inf while the gap sum is zero.
  double eta() const;

 private:
  std::vector<double> weights() const;

  std::vector<double> cumulative_loss_;
  double gap_sum_ = 0.0;
  double last_gap_ = 0.0;
};

}  // namespace peps
