#include "peps/linalg.hpp"

#include <cmath>
#include <string>

#include "peps/errors.hpp"

namespace peps {

namespace {

void check_dim(const SpdState& state, const Vector& v) {
  if (v.size() != state.dim()) {
    throw DimensionError("vector of dimension " + std::to_string(v.size()) +
                         " used with state of dimension " +
                         std::to_string(state.dim()));
  }
}

void symmetrize(Matrix& m) {
  const Eigen::Index n = m.rows();
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double avg = 0.5 * (m(i, j) + m(j, i));
      m(i, j) = avg;
      m(j, i) = avg;
    }
  }
}

}  // namespace

Vector make_vector(std::initializer_list<double> entries) {
  return make_vector(std::span<const double>(entries.begin(), entries.size()));
}

Vector make_vector(std::span<const double> entries) {
  Vector v(static_cast<Eigen::Index>(entries.size()));
  for (std::size_t i = 0; i < entries.size(); ++i) v[i] = entries[i];
  require_finite(v, "vector");
  return v;
}

void require_finite(const Vector& v, const char* what) {
  if (!v.allFinite()) {
    throw InputError(std::string(what) + " has non-finite entries");
  }
}

SpdState::SpdState(int dim)
    : V_(Matrix::Identity(dim, dim)),
      Vinv_(Matrix::Identity(dim, dim)),
      scratch_(dim) {
  if (dim < 1) throw DimensionError("SpdState dimension must be >= 1");
}

const Matrix& SpdState::chol() const {
  if (!chol_) {
    Eigen::LLT<Matrix> llt(Vinv_);
    if (llt.info() != Eigen::Success) {
      throw NumericalError("Cholesky factorization of V^{-1} failed");
    }
    chol_ = llt.matrixL();
  }
  return *chol_;
}

double SpdState::update(const Vector& x) {
  check_dim(*this, x);
  scratch_.noalias() = Vinv_ * x;
  const double denom = 1.0 + x.dot(scratch_);
  Vinv_.noalias() -= (scratch_ * scratch_.transpose()) / denom;
  symmetrize(Vinv_);
  V_.noalias() += x * x.transpose();
  logdet_ += std::log(denom);
  chol_.reset();
  ++updates_;
  if (updates_ % kRefactorInterval == 0) refactorize();
  return denom;
}

void SpdState::refactorize() {
  Eigen::LLT<Matrix> llt(V_);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("Cholesky factorization of V failed");
  }
  Vinv_ = llt.solve(Matrix::Identity(dim(), dim()));
  symmetrize(Vinv_);
  const Matrix L = llt.matrixL();
  logdet_ = 2.0 * L.diagonal().array().log().sum();
  chol_.reset();
}

double quad_norm(const SpdState& state, const Vector& v, NormMode mode) {
  check_dim(state, v);
  const Matrix& m = mode == NormMode::V ? state.V() : state.Vinv();
  return std::max(0.0, v.dot(m * v));
}

SpdState rank_one_update(SpdState state, const Vector& x) {
  state.update(x);
  return state;
}

Vector sample_gaussian(RngStream& rng, const Vector& mean,
                       const SpdState& state, double scale) {
  check_dim(state, mean);
  if (!(scale > 0.0)) throw InputError("sample_gaussian requires scale > 0");
  Vector noise;
  Vector out;
  sample_gaussian_into(rng, mean, state.chol(), scale, noise, out);
  return out;
}

void sample_gaussian_into(RngStream& rng, const Vector& mean,
                          const Matrix& chol, double scale, Vector& noise,
                          Vector& out) {
  const Eigen::Index d = mean.size();
  noise.resize(d);
  for (Eigen::Index i = 0; i < d; ++i) noise[i] = rng.normal();
  out.noalias() = chol.triangularView<Eigen::Lower>() * noise;
  out *= std::sqrt(scale);
  out += mean;
}

}  // namespace peps
