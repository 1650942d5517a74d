#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <initializer_list>
#include <optional>
#include <span>

#include "peps/rng.hpp"

namespace peps {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Builds a vector, rejecting NaN/Inf entries with InputError.
Vector make_vector(std::initializer_list<double> entries);
Vector make_vector(std::span<const double> entries);

/// Throws InputError if any entry is not finite.
void require_finite(const Vector& v, const char* what);

enum class NormMode { V, Vinv };

/// Regularized Gram matrix V = I + sum x x^T with its inverse maintained by
/// Sherman-Morrison updates.
///
/// The Cholesky factor of V^{-1} (used for Gaussian sampling) is computed on
/// demand and cached until the next update. Every kRefactorInterval updates the
/// inverse is rebuilt from V to bound the drift of the recursive updates.
/// A single SpdState must not be used from several threads at once, including
/// const access, since chol() fills the cache.
class SpdState {
 public:
  static constexpr std::size_t kRefactorInterval = 1000;

  explicit SpdState(int dim);

  int dim() const { return static_cast<int>(V_.rows()); }
  const Matrix& V() const { return V_; }
  const Matrix& Vinv() const { return Vinv_; }
  double logdet() const { return logdet_; }
  std::size_t updates() const { return updates_; }

  /// Lower-triangular L with L L^T = V^{-1}. Throws NumericalError if the
  /// maintained inverse has lost positive definiteness.
  const Matrix& chol() const;

  /// V += x x^T. Returns 1 + x^T V^{-1} x evaluated before the update.
  double update(const Vector& x);

  /// Recomputes V^{-1} and log det V from V directly.
  void refactorize();

 private:
  Matrix V_;
  Matrix Vinv_;
  double logdet_ = 0.0;
  std::size_t updates_ = 0;
  Vector scratch_;
  mutable std::optional<Matrix> chol_;
};

/// v^T V v or v^T V^{-1} v.
double quad_norm(const SpdState& state, const Vector& v, NormMode mode);

/// Value-returning form of SpdState::update.
SpdState rank_one_update(SpdState state, const Vector& x);

/// mean + sqrt(scale) * L eta, L L^T = V^{-1}, eta iid standard normal.
Vector sample_gaussian(RngStream& rng, const Vector& mean,
                       const SpdState& state, double scale);

/// Allocation-free variant for hot loops; `noise` and `out` are resized as
/// needed.
void sample_gaussian_into(RngStream& rng, const Vector& mean,
                          const Matrix& chol, double scale, Vector& noise,
                          Vector& out);

}  // namespace peps
