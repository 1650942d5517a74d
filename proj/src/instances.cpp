#include "peps/instances.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include <spdlog/spdlog.h>

#include "peps/errors.hpp"

namespace peps {

namespace {

std::uint64_t binomial(int n, int k) {
  std::uint64_t r = 1;
  for (int i = 1; i <= k; ++i) {
    r = r * static_cast<std::uint64_t>(n - k + i) / static_cast<std::uint64_t>(i);
  }
  return r;
}

TargetId mask_of(const std::vector<int>& indices) {
  TargetId m = 0;
  for (int i : indices) m |= TargetId{1} << i;
  return m;
}

// Orthonormal basis of span(arms) via SVD.
Matrix span_basis(const std::vector<Vector>& arms, int dim) {
  Matrix X(dim, static_cast<Eigen::Index>(arms.size()));
  for (std::size_t j = 0; j < arms.size(); ++j) X.col(j) = arms[j];
  Eigen::JacobiSVD<Matrix> svd(X, Eigen::ComputeThinU);
  const auto& sv = svd.singularValues();
  const double cutoff = 1e-10 * std::max(1.0, sv.size() > 0 ? sv[0] : 0.0);
  Eigen::Index rank = 0;
  while (rank < sv.size() && sv[rank] > cutoff) ++rank;
  return svd.matrixU().leftCols(rank);
}

}  // namespace

TargetSet TargetSet::explicit_set(std::vector<Vector> vectors) {
  if (vectors.empty()) throw ConfigError("empty target set");
  const auto d = vectors.front().size();
  for (const auto& v : vectors) {
    if (v.size() != d) throw DimensionError("targets of mixed dimension");
    require_finite(v, "target");
  }
  TargetSet t;
  t.rep_ = std::move(vectors);
  return t;
}

TargetSet TargetSet::top_k(int d, int k) {
  if (d < 2 || d > 63) throw ConfigError("top-k requires 2 <= d <= 63");
  if (k < 1 || k >= d) throw ConfigError("top-k requires 1 <= k < d");
  TargetSet t;
  t.rep_ = TopK{d, k};
  return t;
}

int TargetSet::dim() const {
  if (const auto* tk = std::get_if<TopK>(&rep_)) return tk->d;
  const auto& v = std::get<std::vector<Vector>>(rep_);
  return v.empty() ? 0 : static_cast<int>(v.front().size());
}

std::uint64_t TargetSet::size() const {
  if (const auto* tk = std::get_if<TopK>(&rep_)) return binomial(tk->d, tk->k);
  return std::get<std::vector<Vector>>(rep_).size();
}

Vector TargetSet::vector(TargetId id) const {
  if (const auto* tk = std::get_if<TopK>(&rep_)) {
    Vector z = Vector::Zero(tk->d);
    for (int i = 0; i < tk->d; ++i) {
      if (id & (TargetId{1} << i)) z[i] = 1.0;
    }
    return z;
  }
  return std::get<std::vector<Vector>>(rep_).at(id);
}

const std::vector<Vector>& TargetSet::explicit_vectors() const {
  if (is_top_k()) throw ConfigError("top-k target set has no explicit list");
  return std::get<std::vector<Vector>>(rep_);
}

const TopK& TargetSet::top_k_descriptor() const {
  if (!is_top_k()) throw ConfigError("target set is not a top-k family");
  return std::get<TopK>(rep_);
}

std::vector<TargetId> TargetSet::enumerate() const {
  const std::uint64_t n = size();
  if (n > 1'000'000) throw ConfigError("target set too large to enumerate");
  std::vector<TargetId> ids;
  ids.reserve(n);
  if (!is_top_k()) {
    for (std::uint64_t i = 0; i < n; ++i) ids.push_back(i);
    return ids;
  }
  const auto& tk = std::get<TopK>(rep_);
  std::vector<int> idx(tk.k);
  std::iota(idx.begin(), idx.end(), 0);
  while (true) {
    ids.push_back(mask_of(idx));
    int pos = tk.k - 1;
    while (pos >= 0 && idx[pos] == tk.d - tk.k + pos) --pos;
    if (pos < 0) break;
    ++idx[pos];
    for (int j = pos + 1; j < tk.k; ++j) idx[j] = idx[j - 1] + 1;
  }
  return ids;
}

std::string TargetSet::label(TargetId id) const {
  if (!is_top_k()) return std::to_string(id);
  std::string out = "{";
  bool first = true;
  for (int i = 0; i < 64; ++i) {
    if (id & (TargetId{1} << i)) {
      if (!first) out += ",";
      out += std::to_string(i);
      first = false;
    }
  }
  return out + "}";
}

ArgmaxResult argmax_oracle(const TargetSet& targets, const Vector& theta) {
  if (theta.size() != targets.dim()) {
    throw DimensionError("argmax_oracle: theta dimension mismatch");
  }
  if (targets.is_top_k()) {
    const auto& tk = targets.top_k_descriptor();
    // Selection of the k largest entries, ties broken toward lower index.
    std::array<int, 64> order{};
    std::iota(order.begin(), order.begin() + tk.d, 0);
    std::partial_sort(order.begin(), order.begin() + tk.k,
                      order.begin() + tk.d, [&](int a, int b) {
                        if (theta[a] != theta[b]) return theta[a] > theta[b];
                        return a < b;
                      });
    ArgmaxResult r;
    for (int i = 0; i < tk.k; ++i) {
      r.id |= TargetId{1} << order[i];
      r.value += theta[order[i]];
    }
    return r;
  }
  const auto& zs = targets.explicit_vectors();
  if (zs.empty()) throw ConfigError("argmax_oracle: empty target set");
  ArgmaxResult r{0, zs[0].dot(theta)};
  for (std::size_t i = 1; i < zs.size(); ++i) {
    const double v = zs[i].dot(theta);
    if (v > r.value) r = {i, v};
  }
  return r;
}

std::vector<std::pair<TargetId, Vector>> alternative_directions(
    const TargetSet& targets, TargetId z_ref) {
  std::vector<std::pair<TargetId, Vector>> out;
  if (targets.is_top_k()) {
    const auto& tk = targets.top_k_descriptor();
    for (int i = 0; i < tk.d; ++i) {
      if (!(z_ref & (TargetId{1} << i))) continue;
      for (int j = 0; j < tk.d; ++j) {
        if (z_ref & (TargetId{1} << j)) continue;
        Vector v = Vector::Zero(tk.d);
        v[i] = 1.0;
        v[j] = -1.0;
        const TargetId swapped =
            (z_ref & ~(TargetId{1} << i)) | (TargetId{1} << j);
        out.emplace_back(swapped, std::move(v));
      }
    }
    return out;
  }
  const auto& zs = targets.explicit_vectors();
  const Vector& ref = zs.at(z_ref);
  for (std::size_t i = 0; i < zs.size(); ++i) {
    if (i == z_ref) continue;
    out.emplace_back(i, ref - zs[i]);
  }
  return out;
}

Instance make_instance(std::string name, std::vector<Vector> arms,
                       TargetSet targets, Vector theta_star,
                       double noise_std) {
  if (arms.empty()) throw ConfigError("instance has no arms");
  const int d = static_cast<int>(theta_star.size());
  require_finite(theta_star, "theta_star");
  for (const auto& x : arms) {
    if (x.size() != d) throw DimensionError("arm dimension mismatch");
    require_finite(x, "arm");
  }
  if (targets.dim() != d) throw DimensionError("target dimension mismatch");
  if (!(noise_std > 0.0) || !std::isfinite(noise_std)) {
    throw ConfigError("noise_std must be positive");
  }

  const Matrix basis = span_basis(arms, d);
  auto check_in_span = [&](const Vector& z) {
    const Vector residual = z - basis * (basis.transpose() * z);
    if (residual.norm() >= 1e-8 * std::max(1.0, z.norm())) {
      throw ConfigError("span(Z) is not contained in span(X)");
    }
  };
  if (targets.is_top_k()) {
    // Indicator vectors of k-subsets span R^d for 1 <= k < d.
    for (int i = 0; i < d; ++i) check_in_span(Vector::Unit(d, i));
  } else {
    for (const auto& z : targets.explicit_vectors()) check_in_span(z);
  }

  Instance inst;
  inst.name = std::move(name);
  inst.dim = d;
  inst.arms = std::move(arms);
  inst.targets = std::move(targets);
  inst.theta_star = std::move(theta_star);
  inst.noise_std = noise_std;
  for (const auto& x : inst.arms) {
    inst.max_arm_norm = std::max(inst.max_arm_norm, x.norm());
  }
  const ArgmaxResult best = argmax_oracle(inst.targets, inst.theta_star);
  inst.best_target = best.id;
  if (inst.targets.size() < 2) {
    throw DegenerateTargetError("target set has a single element");
  }
  double gap = std::numeric_limits<double>::infinity();
  for (const auto& [id, v] : alternative_directions(inst.targets, best.id)) {
    gap = std::min(gap, inst.theta_star.dot(v));
  }
  inst.gap_min = gap;
  if (!(gap > 0.0)) throw ConfigError("best target is not unique");
  return inst;
}

std::optional<double> delta_max(const Instance& instance,
                                const ThetaSpace& space) {
  if (const auto* ball = std::get_if<Ball>(&space)) {
    return 2.0 * instance.max_arm_norm * ball->radius;
  }
  return std::nullopt;
}

Instance make_soare(double omega) {
  if (!(omega > 0.0 && omega < std::numbers::pi / 2)) {
    throw ConfigError("Soare instance requires 0 < omega < pi/2");
  }
  std::vector<Vector> arms{make_vector({1.0, 0.0}), make_vector({0.0, 1.0}),
                           make_vector({std::cos(omega), std::sin(omega)})};
  auto targets = TargetSet::explicit_set(arms);
  return make_instance("soare", std::move(arms), std::move(targets),
                       make_vector({1.0, 0.0}));
}

Instance make_sphere(RngStream& rng, int d, int n_arms) {
  if (d < 2 || n_arms <= d) {
    throw ConfigError("sphere instance requires n_arms > d >= 2");
  }
  while (true) {
    std::vector<Vector> arms;
    arms.reserve(n_arms);
    for (int i = 0; i < n_arms; ++i) {
      Vector x(d);
      double norm = 0.0;
      do {
        for (int j = 0; j < d; ++j) x[j] = rng.normal();
        norm = x.norm();
      } while (norm == 0.0);
      arms.push_back(x / norm);
    }
    int best_i = 0;
    int best_j = 1;
    double best_dist = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n_arms; ++i) {
      for (int j = i + 1; j < n_arms; ++j) {
        const double dist = (arms[i] - arms[j]).norm();
        if (dist < best_dist) {
          best_dist = dist;
          best_i = i;
          best_j = j;
        }
      }
    }
    if (best_dist == 0.0) {
      spdlog::warn("sphere instance: coincident closest pair, redrawing");
      continue;
    }
    Vector theta = arms[best_i] + 0.01 * (arms[best_j] - arms[best_i]);
    auto targets = TargetSet::explicit_set(arms);
    return make_instance("sphere", std::move(arms), std::move(targets),
                         std::move(theta));
  }
}

Instance make_topk(int d, int k) {
  if (d < 2 || d > 20) throw ConfigError("top-k instance requires 2 <= d <= 20");
  if (k < 1 || k >= d) throw ConfigError("top-k instance requires 1 <= k < d");
  std::vector<Vector> arms;
  Vector theta(d);
  for (int i = 0; i < d; ++i) {
    arms.push_back(Vector::Unit(d, i));
    theta[i] = 1.0 - 0.05 * i;
  }
  return make_instance("topk", std::move(arms), TargetSet::top_k(d, k),
                       std::move(theta));
}

namespace {

nlohmann::json vector_json(const Vector& v) {
  auto arr = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

Vector vector_from_json(const nlohmann::json& arr) {
  if (!arr.is_array()) throw ConfigError("expected a numeric array");
  std::vector<double> values;
  for (const auto& e : arr) {
    if (!e.is_number()) throw ConfigError("expected a numeric array");
    values.push_back(e.get<double>());
  }
  return make_vector(values);
}

}  // namespace

nlohmann::json to_json(const Instance& instance) {
  nlohmann::json doc;
  doc["name"] = instance.name;
  doc["dim"] = instance.dim;
  doc["arms"] = nlohmann::json::array();
  for (const auto& x : instance.arms) doc["arms"].push_back(vector_json(x));
  if (instance.targets.is_top_k()) {
    const auto& tk = instance.targets.top_k_descriptor();
    doc["targets"] = {{"kind", "topk"}, {"d", tk.d}, {"k", tk.k}};
  } else {
    auto vecs = nlohmann::json::array();
    for (const auto& z : instance.targets.explicit_vectors()) {
      vecs.push_back(vector_json(z));
    }
    doc["targets"] = {{"kind", "explicit"}, {"vectors", vecs}};
  }
  doc["theta_star"] = vector_json(instance.theta_star);
  doc["noise_std"] = instance.noise_std;
  return doc;
}

Instance instance_from_json(const nlohmann::json& doc) {
  try {
    std::vector<Vector> arms;
    for (const auto& row : doc.at("arms")) arms.push_back(vector_from_json(row));
    Vector theta = vector_from_json(doc.at("theta_star"));
    if (doc.contains("dim") && doc.at("dim").get<int>() != theta.size()) {
      throw ConfigError("instance dim does not match theta_star");
    }
    const auto& tdoc = doc.at("targets");
    const std::string kind = tdoc.at("kind").get<std::string>();
    TargetSet targets;
    if (kind == "topk") {
      targets = TargetSet::top_k(tdoc.at("d").get<int>(), tdoc.at("k").get<int>());
    } else if (kind == "explicit") {
      std::vector<Vector> zs;
      for (const auto& row : tdoc.at("vectors")) zs.push_back(vector_from_json(row));
      targets = TargetSet::explicit_set(std::move(zs));
    } else {
      throw ConfigError("unknown target kind: " + kind);
    }
    return make_instance(doc.value("name", std::string("custom")),
                         std::move(arms), std::move(targets), std::move(theta),
                         doc.value("noise_std", 1.0));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed instance JSON: ") + e.what());
  }
}

}  // namespace peps
