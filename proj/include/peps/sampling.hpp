#pragma once

#include <cstddef>
#include <optional>

#include "peps/instances.hpp"
#include "peps/linalg.hpp"
#include "peps/rng.hpp"

namespace peps {

/// The Gaussian N(mean, scale * V^{-1}) with V taken from a Gram state.
struct PosteriorSpec {
  const Vector& mean;
  const SpdState& precision;
  double scale = 1.0;
};

struct RejectionReport {
  std::optional<Vector> sample;
  std::size_t draws_used = 0;
  bool exhausted = false;
};

inline constexpr std::size_t kDefaultRejectionBudget = 1000;

/// Rejection sampling from the Gaussian restricted to the alternative of
/// z_hat: draws until argmax_oracle(theta) != z_hat or `budget` draws are
/// spent. Exhaustion is reported, not thrown.
RejectionReport sample_alternative(RngStream& rng, const PosteriorSpec& spec,
                                   const TargetSet& targets, TargetId z_hat,
                                   std::size_t budget = kDefaultRejectionBudget);

/// Rejection sampling from the Gaussian restricted to Theta. For R^d the first
/// draw is accepted.
RejectionReport sample_theta_space(RngStream& rng, const PosteriorSpec& spec,
                                   const ThetaSpace& space,
                                   std::size_t budget = kDefaultRejectionBudget);

struct ConfidenceEstimate {
  double value = 0.0;
  bool exact = false;
};

/// P_{theta ~ spec}(argmax_oracle(theta) = z_ref). Closed form through the
/// normal CDF when |Z| = 2, Monte Carlo with n_draws otherwise.
ConfidenceEstimate posterior_confidence(RngStream& rng,
                                        const PosteriorSpec& spec,
                                        const TargetSet& targets,
                                        TargetId z_ref, std::size_t n_draws);

/// Bracket on log P_{theta ~ spec}(argmax_oracle(theta) != z_ref) that stays
/// finite when the probability underflows. `upper` is the log of the union
/// bound over alternative directions, `lower` the largest single term. Both
/// agree when |Z| = 2.
struct LogErrorBracket {
  double lower = 0.0;
  double upper = 0.0;
  bool exact = false;
};
LogErrorBracket posterior_log_error(const PosteriorSpec& spec,
                                    const TargetSet& targets, TargetId z_ref);

/// Standard normal CDF and its logarithm (accurate far into the lower tail).
double normal_cdf(double x);
double log_normal_cdf(double x);

}  // namespace peps
