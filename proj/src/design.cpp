#include "peps/design.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <spdlog/spdlog.h>

#include "peps/errors.hpp"

namespace peps {

DesignWeights::DesignWeights(std::vector<double> weights)
    : weights_(std::move(weights)) {
  double sum = 0.0;
  for (double& w : weights_) {
    if (!std::isfinite(w)) throw InputError("design weight is not finite");
    if (w < 0.0) {
      if (w < -1e-12) throw InputError("negative design weight");
      w = 0.0;
    }
    sum += w;
  }
  if (weights_.empty() || std::abs(sum - 1.0) > 1e-6) {
    throw InputError("design weights must sum to one");
  }
  for (double& w : weights_) w /= sum;
}

DesignWeights DesignWeights::uniform(std::size_t n) {
  return DesignWeights(std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

DesignWeights DesignWeights::point_mass(std::size_t n, std::size_t i) {
  std::vector<double> w(n, 0.0);
  w.at(i) = 1.0;
  return DesignWeights(std::move(w));
}

DesignWeights mix(const DesignWeights& base, const DesignWeights& other,
                  double gamma) {
  if (base.size() != other.size()) throw DimensionError("mix: size mismatch");
  std::vector<double> w(base.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    w[i] = (1.0 - gamma) * base[i] + gamma * other[i];
  }
  return DesignWeights(std::move(w));
}

Matrix design_matrix(std::span<const Vector> arms,
                     const DesignWeights& lambda) {
  if (arms.size() != lambda.size()) {
    throw DimensionError("design weights do not match the arm count");
  }
  const auto d = arms.front().size();
  Matrix A = Matrix::Zero(d, d);
  for (std::size_t i = 0; i < arms.size(); ++i) {
    if (lambda[i] == 0.0) continue;
    A.selfadjointView<Eigen::Lower>().rankUpdate(arms[i], lambda[i]);
  }
  return A.selfadjointView<Eigen::Lower>();
}

namespace {

std::vector<double> leverages(std::span<const Vector> arms, const Matrix& A) {
  Eigen::LLT<Matrix> llt(A);
  if (llt.info() != Eigen::Success) {
    throw RankError("design matrix is singular");
  }
  std::vector<double> lev(arms.size());
  for (std::size_t i = 0; i < arms.size(); ++i) {
    lev[i] = arms[i].dot(llt.solve(arms[i]));
  }
  return lev;
}

}  // namespace

double max_leverage(std::span<const Vector> arms, const DesignWeights& lambda) {
  const auto lev = leverages(arms, design_matrix(arms, lambda));
  return *std::max_element(lev.begin(), lev.end());
}

// Frank-Wolfe with away steps on log det A(lambda) (Wolfe-Atwood). By
// Kiefer-Wolfowitz the maximizer is G-optimal and has max leverage d.
DesignWeights g_optimal(std::span<const Vector> arms, double tol) {
  if (arms.empty()) throw RankError("no arms");
  if (!(tol > 0.0)) throw InputError("g_optimal requires tol > 0");
  const auto n = arms.size();
  const double d = static_cast<double>(arms.front().size());
  {
    Matrix X(arms.front().size(), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) X.col(i) = arms[i];
    Eigen::FullPivLU<Matrix> lu(X);
    lu.setThreshold(1e-10);
    if (lu.rank() < X.rows()) {
      throw RankError("arms do not span R^d");
    }
  }

  std::vector<double> w(n, 1.0 / static_cast<double>(n));
  constexpr int kMaxIter = 200000;
  for (int it = 0; it < kMaxIter; ++it) {
    const auto lev = leverages(arms, design_matrix(arms, DesignWeights(w)));
    std::size_t up = 0;
    std::size_t down = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (lev[i] > lev[up]) up = i;
      if (w[i] > 0.0 && (down == n || lev[i] < lev[down])) down = i;
    }
    if (lev[up] <= d * (1.0 + tol)) break;

    if (d - lev[down] > lev[up] - d && w[down] < 1.0) {
      // Away step: shrink the least useful support point.
      // For leverage <= 1 log det keeps increasing until the weight hits 0.
      const double floor = -w[down] / (1.0 - w[down]);
      double gamma = floor;
      if (lev[down] > 1.0) {
        gamma = std::max(floor, (lev[down] / d - 1.0) / (lev[down] - 1.0));
      }
      for (double& v : w) v *= (1.0 - gamma);
      w[down] += gamma;
      if (gamma == floor) w[down] = 0.0;
    } else {
      const double gamma = (lev[up] / d - 1.0) / (lev[up] - 1.0);
      for (double& v : w) v *= (1.0 - gamma);
      w[up] += gamma;
    }
    for (double& v : w) v = std::max(v, 0.0);
    const double s = std::accumulate(w.begin(), w.end(), 0.0);
    for (double& v : w) v /= s;
    if (it + 1 == kMaxIter) {
      spdlog::warn("g_optimal: iteration cap reached before certificate");
    }
  }
  return DesignWeights(std::move(w));
}

namespace {

BestResponse project(const Eigen::LLT<Matrix>& llt, const Vector& theta_ref,
                     const Vector& v, TargetId target) {
  if (v.squaredNorm() == 0.0) {
    throw DegenerateTargetError("z_star - z is the zero vector");
  }
  const double g = theta_ref.dot(v);
  if (g <= 0.0) return {0.0, theta_ref, target};
  const Vector w = llt.solve(v);
  const double q = v.dot(w);
  return {g * g / (2.0 * q), theta_ref - (g / q) * w, target};
}

Eigen::LLT<Matrix> regularized_factor(const Matrix& A) {
  Matrix reg = A;
  reg.diagonal().array() += kDesignRidge;
  Eigen::LLT<Matrix> llt(reg);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("design matrix is not positive semidefinite");
  }
  return llt;
}

}  // namespace

BestResponse best_response(const Matrix& A, const Vector& theta_ref,
                           const Vector& z_star, const Vector& z) {
  if (theta_ref.size() != A.rows() || z_star.size() != A.rows() ||
      z.size() != A.rows()) {
    throw DimensionError("best_response: dimension mismatch");
  }
  return project(regularized_factor(A), theta_ref, z_star - z, 0);
}

BestResponse best_response(const DesignWeights& lambda,
                           std::span<const Vector> arms,
                           const Vector& theta_ref, const Vector& z_star,
                           const Vector& z) {
  return best_response(design_matrix(arms, lambda), theta_ref, z_star, z);
}

BestResponse closest_alternative(const Matrix& A, const Vector& theta_ref,
                                 const TargetSet& targets) {
  if (targets.size() < 2) {
    throw DegenerateTargetError("target set has a single element");
  }
  const auto llt = regularized_factor(A);
  const TargetId z_hat = argmax_oracle(targets, theta_ref).id;
  BestResponse best;
  bool first = true;
  for (const auto& [id, v] : alternative_directions(targets, z_hat)) {
    BestResponse r = project(llt, theta_ref, v, id);
    if (first || r.value < best.value) {
      best = std::move(r);
      first = false;
    }
  }
  return best;
}

BestResponse closest_alternative(const DesignWeights& lambda,
                                 std::span<const Vector> arms,
                                 const Vector& theta_ref,
                                 const TargetSet& targets) {
  return closest_alternative(design_matrix(arms, lambda), theta_ref, targets);
}

double game_value(const Instance& instance, const DesignWeights& lambda) {
  const auto llt = regularized_factor(design_matrix(instance.arms, lambda));
  double value = std::numeric_limits<double>::infinity();
  for (const auto& [id, v] :
       alternative_directions(instance.targets, instance.best_target)) {
    value = std::min(value, project(llt, instance.theta_star, v, id).value);
  }
  return value;
}

GameSolution tau_star(const Instance& instance, int iters, double tol) {
  const auto& arms = instance.arms;
  const std::size_t n = arms.size();
  const auto dirs =
      alternative_directions(instance.targets, instance.best_target);
  if (dirs.empty()) throw DegenerateTargetError("no alternative targets");
  const double log_m = std::log(std::max<double>(2.0, dirs.size()));

  std::vector<double> w(n, 1.0 / static_cast<double>(n));
  GameSolution sol;
  sol.tau_star = -1.0;
  double best_upper = std::numeric_limits<double>::infinity();

  std::vector<double> f(dirs.size());
  std::vector<Vector> solved(dirs.size());
  std::vector<double> grad(n);

  for (int it = 1; it <= iters; ++it) {
    const DesignWeights lambda(w);
    const auto llt = regularized_factor(design_matrix(arms, lambda));
    double f_min = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < dirs.size(); ++j) {
      const Vector& v = dirs[j].second;
      const double g = instance.theta_star.dot(v);
      solved[j] = llt.solve(v);
      const double q = v.dot(solved[j]);
      f[j] = g * g / (2.0 * q);
      solved[j] *= g / q;  // theta* - theta_z
      f_min = std::min(f_min, f[j]);
    }
    if (f_min > sol.tau_star) {
      sol.tau_star = f_min;
      sol.lambda_star = lambda;
    }

    // Soft-min weights over alternatives; temperature shrinks with it.
    const double mu = f_min * 0.05 / (log_m * std::sqrt(static_cast<double>(it)));
    double total = 0.0;
    std::vector<double> p(dirs.size());
    for (std::size_t j = 0; j < dirs.size(); ++j) {
      p[j] = mu > 0.0 ? std::exp(-(f[j] - f_min) / mu) : (f[j] == f_min);
      total += p[j];
    }
    for (double& pj : p) pj /= total;

    // grad_x = E_p 1/2 (x^T (theta_z - theta*))^2; max_x grad_x bounds tau*.
    std::size_t vertex = 0;
    for (std::size_t i = 0; i < n; ++i) {
      double gi = 0.0;
      for (std::size_t j = 0; j < dirs.size(); ++j) {
        if (p[j] < 1e-300) continue;
        const double proj = arms[i].dot(solved[j]);
        gi += p[j] * 0.5 * proj * proj;
      }
      grad[i] = gi;
      if (gi > grad[vertex]) vertex = i;
    }
    best_upper = std::min(best_upper, grad[vertex]);
    sol.iterations = it;
    sol.duality_gap_estimate = std::max(0.0, best_upper - sol.tau_star);
    if (sol.duality_gap_estimate <= tol * sol.tau_star) {
      sol.converged = true;
      break;
    }

    const double step = 2.0 / (it + 2.0);
    for (double& v : w) v *= (1.0 - step);
    w[vertex] += step;
  }
  return sol;
}

}  // namespace peps
