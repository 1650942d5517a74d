#include "peps/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "peps/errors.hpp"

namespace peps {

namespace {

void check_scale(const PosteriorSpec& spec) {
  if (!(spec.scale > 0.0)) throw InputError("posterior scale must be positive");
  if (spec.mean.size() != spec.precision.dim()) {
    throw DimensionError("posterior mean does not match precision");
  }
}

bool inside(const ThetaSpace& space, const Vector& theta) {
  if (const auto* ball = std::get_if<Ball>(&space)) {
    return theta.norm() <= ball->radius;
  }
  return true;
}

// Mean and standard deviation of <theta, v> under the posterior.
std::pair<double, double> projected_moments(const PosteriorSpec& spec,
                                            const Vector& v) {
  const double mean = spec.mean.dot(v);
  const double var = spec.scale * quad_norm(spec.precision, v, NormMode::Vinv);
  return {mean, std::sqrt(var)};
}

}  // namespace

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double log_normal_cdf(double x) {
  if (x > -30.0) return std::log(normal_cdf(x));
  // Asymptotic expansion of the Mills ratio.
  const double z = -x;
  const double z2 = z * z;
  const double series = 1.0 - 1.0 / z2 + 3.0 / (z2 * z2) - 15.0 / (z2 * z2 * z2);
  return -0.5 * z2 - std::log(z) - 0.5 * std::log(2.0 * std::numbers::pi) +
         std::log(series);
}

RejectionReport sample_alternative(RngStream& rng, const PosteriorSpec& spec,
                                   const TargetSet& targets, TargetId z_hat,
                                   std::size_t budget) {
  check_scale(spec);
  if (budget == 0) throw InputError("rejection budget must be >= 1");
  const Matrix& chol = spec.precision.chol();
  RejectionReport report;
  Vector noise;
  Vector theta;
  while (report.draws_used < budget) {
    sample_gaussian_into(rng, spec.mean, chol, spec.scale, noise, theta);
    ++report.draws_used;
    if (argmax_oracle(targets, theta).id != z_hat) {
      report.sample = std::move(theta);
      return report;
    }
  }
  report.exhausted = true;
  return report;
}

RejectionReport sample_theta_space(RngStream& rng, const PosteriorSpec& spec,
                                   const ThetaSpace& space,
                                   std::size_t budget) {
  check_scale(spec);
  if (budget == 0) throw InputError("rejection budget must be >= 1");
  const Matrix& chol = spec.precision.chol();
  RejectionReport report;
  Vector noise;
  Vector theta;
  while (report.draws_used < budget) {
    sample_gaussian_into(rng, spec.mean, chol, spec.scale, noise, theta);
    ++report.draws_used;
    if (inside(space, theta)) {
      report.sample = std::move(theta);
      return report;
    }
  }
  report.exhausted = true;
  return report;
}

ConfidenceEstimate posterior_confidence(RngStream& rng,
                                        const PosteriorSpec& spec,
                                        const TargetSet& targets,
                                        TargetId z_ref, std::size_t n_draws) {
  check_scale(spec);
  if (n_draws == 0) throw InputError("posterior_confidence needs M >= 1");
  if (targets.size() == 2) {
    const auto dirs = alternative_directions(targets, z_ref);
    const auto [m, s] = projected_moments(spec, dirs.front().second);
    if (s == 0.0) return {m > 0.0 ? 1.0 : (m == 0.0 ? 0.5 : 0.0), true};
    return {normal_cdf(m / s), true};
  }
  const Matrix& chol = spec.precision.chol();
  Vector noise;
  Vector theta;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < n_draws; ++i) {
    sample_gaussian_into(rng, spec.mean, chol, spec.scale, noise, theta);
    if (argmax_oracle(targets, theta).id == z_ref) ++hits;
  }
  return {static_cast<double>(hits) / static_cast<double>(n_draws), false};
}

LogErrorBracket posterior_log_error(const PosteriorSpec& spec,
                                    const TargetSet& targets, TargetId z_ref) {
  check_scale(spec);
  const auto dirs = alternative_directions(targets, z_ref);
  if (dirs.empty()) throw DegenerateTargetError("no alternative targets");
  std::vector<double> logs;
  logs.reserve(dirs.size());
  for (const auto& [id, v] : dirs) {
    const auto [m, s] = projected_moments(spec, v);
    if (s == 0.0) {
      logs.push_back(m > 0.0 ? -std::numeric_limits<double>::infinity()
                             : std::log(m == 0.0 ? 0.5 : 1.0));
    } else {
      logs.push_back(log_normal_cdf(-m / s));
    }
  }
  const double top = *std::max_element(logs.begin(), logs.end());
  LogErrorBracket out;
  out.lower = top;
  out.exact = dirs.size() == 1;
  if (std::isinf(top)) {
    out.upper = top;
    return out;
  }
  double acc = 0.0;
  for (double l : logs) acc += std::exp(l - top);
  out.upper = std::min(0.0, top + std::log(acc));
  return out;
}

}  // namespace peps
