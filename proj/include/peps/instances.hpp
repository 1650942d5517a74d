#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "peps/linalg.hpp"
#include "peps/rng.hpp"

namespace peps {

/// Identifies an element of a target set: the position in an explicit list,
/// or the bitmask of selected coordinates for a top-k family.
using TargetId = std::uint64_t;

struct TopK {
  int d = 0;
  int k = 0;
};

/// The set Z of candidate answers. Top-k families are never materialized for
/// argmax computations.
class TargetSet {
 public:
  TargetSet() = default;
  static TargetSet explicit_set(std::vector<Vector> vectors);
  static TargetSet top_k(int d, int k);

  bool is_top_k() const { return std::holds_alternative<TopK>(rep_); }
  int dim() const;
  /// |Z|. For top-k this is C(d, k).
  std::uint64_t size() const;

  Vector vector(TargetId id) const;
  const std::vector<Vector>& explicit_vectors() const;
  const TopK& top_k_descriptor() const;

  /// All ids in lowest-first order. Throws ConfigError above 10^6 elements.
  std::vector<TargetId> enumerate() const;

  /// Human-readable id: "2" for explicit sets, "{0,1,2}" for top-k.
  std::string label(TargetId id) const;

 private:
  std::variant<std::vector<Vector>, TopK> rep_;
};

struct ArgmaxResult {
  TargetId id = 0;
  double value = 0.0;
};

/// argmax_{z in Z} <z, theta>. Ties go to the lowest index (explicit) or the
/// lexicographically lowest subset (top-k).
ArgmaxResult argmax_oracle(const TargetSet& targets, const Vector& theta);

/// Alternative pairs (z_ref - z) that generate the alternative set of z_ref:
/// all other targets for explicit sets, the k(d-k) single swaps for top-k.
/// Each entry is (z id, z_ref - z).
std::vector<std::pair<TargetId, Vector>> alternative_directions(
    const TargetSet& targets, TargetId z_ref);

struct Unbounded {};
struct Ball {
  double radius = 1.0;
};
/// Parameter space: R^d, or a closed Euclidean ball of the given radius.
using ThetaSpace = std::variant<Unbounded, Ball>;

struct Instance {
  std::string name;
  int dim = 0;
  std::vector<Vector> arms;
  TargetSet targets;
  Vector theta_star;
  double noise_std = 1.0;

  // Derived at construction by make_instance.
  double max_arm_norm = 0.0;  // L
  TargetId best_target = 0;   // z*
  double gap_min = 0.0;       // min_{z != z*} <theta*, z* - z>
};

/// Validates and fills the derived fields: span(Z) within span(X), unique z*.
Instance make_instance(std::string name, std::vector<Vector> arms,
                       TargetSet targets, Vector theta_star,
                       double noise_std = 1.0);

/// max_x max_{theta, theta' in Theta} |x^T (theta - theta')| = 2 L B for a
/// ball; undefined for R^d.
std::optional<double> delta_max(const Instance& instance,
                                const ThetaSpace& space);

/// Arms {e1, e2, (cos w, sin w)}, Z = X, theta* = e1.
Instance make_soare(double omega);

/// n_arms uniform points on the unit sphere; theta* = x + 0.01 (x' - x) for
/// the closest pair (x, x').
Instance make_sphere(RngStream& rng, int d, int n_arms);

/// X = standard basis, Z = size-k subsets, theta*_i = 1 - 0.05 (i - 1).
Instance make_topk(int d, int k);

nlohmann::json to_json(const Instance& instance);
Instance instance_from_json(const nlohmann::json& doc);

}  // namespace peps
