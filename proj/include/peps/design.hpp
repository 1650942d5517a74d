#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "peps/instances.hpp"
#include "peps/linalg.hpp"

namespace peps {

/// A point on the simplex over the arms.
class DesignWeights {
 public:
  DesignWeights() = default;
  /// Entries in [-1e-12, 0) are clamped to zero; the result is renormalized.
  /// Throws InputError for non-finite or negative entries, or a sum more than
  /// 1e-6 away from one.
  explicit DesignWeights(std::vector<double> weights);

  static DesignWeights uniform(std::size_t n);
  static DesignWeights point_mass(std::size_t n, std::size_t i);

  std::size_t size() const { return weights_.size(); }
  double operator[](std::size_t i) const { return weights_[i]; }
  std::span<const double> values() const { return weights_; }

 private:
  std::vector<double> weights_;
};

/// (1 - gamma) base + gamma other.
DesignWeights mix(const DesignWeights& base, const DesignWeights& other,
                  double gamma);

/// A(lambda) = sum_x lambda_x x x^T.
Matrix design_matrix(std::span<const Vector> arms, const DesignWeights& lambda);

/// max_x x^T A(lambda)^{-1} x.
double max_leverage(std::span<const Vector> arms, const DesignWeights& lambda);

/// G-optimal design, certified by max leverage <= d (1 + tol). Throws
/// RankError when the arms do not span R^d.
DesignWeights g_optimal(std::span<const Vector> arms, double tol = 1e-4);

/// Regularization added to A(lambda) before any solve.
inline constexpr double kDesignRidge = 1e-10;

struct BestResponse {
  double value = 0.0;  // 1/2 ||minimizer - theta_ref||^2_A
  Vector minimizer;
  TargetId target = 0;
};

/// Projection of theta_ref onto the halfspace {theta : <z_star - z, theta> <= 0}
/// in the A metric.
BestResponse best_response(const Matrix& A, const Vector& theta_ref,
                           const Vector& z_star, const Vector& z);
BestResponse best_response(const DesignWeights& lambda,
                           std::span<const Vector> arms,
                           const Vector& theta_ref, const Vector& z_star,
                           const Vector& z);

/// Closest point of the alternative set of argmax(theta_ref), minimizing
/// best_response over the competing targets (single swaps for top-k).
BestResponse closest_alternative(const Matrix& A, const Vector& theta_ref,
                                 const TargetSet& targets);
BestResponse closest_alternative(const DesignWeights& lambda,
                                 std::span<const Vector> arms,
                                 const Vector& theta_ref,
                                 const TargetSet& targets);

/// Inner value min_{z != z*} g_z^2 / (2 v_z^T A(lambda)^{-1} v_z) at theta*.
double game_value(const Instance& instance, const DesignWeights& lambda);

struct GameSolution {
  double tau_star = 0.0;
  DesignWeights lambda_star;
  double duality_gap_estimate = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// max_lambda min_{theta in alt(z*)} 1/2 ||theta - theta*||^2_{A(lambda)} for
/// Theta = R^d, by Frank-Wolfe on a soft-min smoothing of the inner minimum.
/// The returned gap is an upper bound (from a mixture of best responses)
/// minus the inner value at lambda_star. Stops early once gap <= tol * value.
GameSolution tau_star(const Instance& instance, int iters = 2000,
                      double tol = 1e-4);

}  // namespace peps
