#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "peps/errors.hpp"
#include "peps/instances.hpp"

using namespace peps;

namespace {

Vector random_vector(RngStream& rng, int d) {
  Vector v(d);
  for (int i = 0; i < d; ++i) v[i] = rng.normal();
  return v;
}

// Brute-force argmax over the materialized vectors; ties to the first seen.
TargetId brute_argmax(const TargetSet& z, const Vector& theta) {
  const auto ids = z.enumerate();
  TargetId best = ids.front();
  double best_value = z.vector(best).dot(theta);
  for (TargetId id : ids) {
    const double v = z.vector(id).dot(theta);
    if (v > best_value) {
      best = id;
      best_value = v;
    }
  }
  return best;
}

}  // namespace

TEST(Soare, Layout) {
  const Instance inst = make_soare(0.1);
  ASSERT_EQ(inst.arms.size(), 3u);
  EXPECT_EQ(inst.dim, 2);
  EXPECT_DOUBLE_EQ(inst.arms[2][0], std::cos(0.1));
  EXPECT_DOUBLE_EQ(inst.arms[2][1], std::sin(0.1));
  EXPECT_EQ(inst.best_target, 0u);
  EXPECT_NEAR(inst.gap_min, 1.0 - std::cos(0.1), 1e-15);
  EXPECT_NEAR(inst.max_arm_norm, 1.0, 1e-15);
  EXPECT_THROW(make_soare(0.0), ConfigError);
}

TEST(Sphere, ClosestPairDefinesTheta) {
  RngStream rng(1);
  const Instance inst = make_sphere(rng, 6, 20);
  ASSERT_EQ(inst.arms.size(), 20u);
  for (const auto& x : inst.arms) EXPECT_NEAR(x.norm(), 1.0, 1e-12);
  // The best arm and its nearest neighbour are the globally closest pair.
  double closest = 1e9;
  std::size_t a = 0, b = 0;
  for (std::size_t i = 0; i < 20; ++i) {
    for (std::size_t j = i + 1; j < 20; ++j) {
      const double dist = (inst.arms[i] - inst.arms[j]).norm();
      if (dist < closest) closest = dist, a = i, b = j;
    }
  }
  const std::size_t x = inst.best_target;
  ASSERT_TRUE(x == a || x == b);
  const std::size_t other = x == a ? b : a;
  const Vector expected = inst.arms[x] + 0.01 * (inst.arms[other] - inst.arms[x]);
  EXPECT_LT((inst.theta_star - expected).norm(), 1e-14);
}

TEST(Sphere, SameSeedSameInstance) {
  RngStream r1(4), r2(4);
  const Instance a = make_sphere(r1, 4, 10), b = make_sphere(r2, 4, 10);
  EXPECT_EQ(a.theta_star, b.theta_star);
}

TEST(TopK, ArgmaxMatchesBruteForce) {
  RngStream rng(2);
  for (int d : {4, 7, 10}) {
    for (int k = 1; k < d; ++k) {
      const TargetSet z = TargetSet::top_k(d, k);
      for (int rep = 0; rep < 20; ++rep) {
        const Vector theta = random_vector(rng, d);
        EXPECT_EQ(argmax_oracle(z, theta).id, brute_argmax(z, theta));
      }
    }
  }
}

TEST(TopK, TiesGoToLowestSubset) {
  const TargetSet z = TargetSet::top_k(4, 2);
  const ArgmaxResult r = argmax_oracle(z, Vector::Ones(4));
  EXPECT_EQ(r.id, 0b0011u);
  EXPECT_EQ(z.label(r.id), "{0,1}");
}

TEST(TopK, SizeAndSwaps) {
  const TargetSet z = TargetSet::top_k(12, 3);
  EXPECT_EQ(z.size(), 220u);
  const auto dirs = alternative_directions(z, 0b111);
  EXPECT_EQ(dirs.size(), 27u);
  for (const auto& [id, v] : dirs) {
    EXPECT_EQ(std::popcount(id), 3);
    EXPECT_DOUBLE_EQ(v.sum(), 0.0);
    EXPECT_DOUBLE_EQ(v.squaredNorm(), 2.0);
  }
}

TEST(TopK, InstanceGaps) {
  const Instance inst = make_topk(12, 3);
  EXPECT_EQ(inst.best_target, 0b111u);
  EXPECT_NEAR(inst.gap_min, 0.05, 1e-12);
  EXPECT_NEAR(inst.theta_star[11], 1.0 - 0.05 * 11, 1e-15);
}

TEST(ExplicitSet, ArgmaxTiesLowestIndex) {
  const TargetSet z = TargetSet::explicit_set(
      {make_vector({1.0, 0.0}), make_vector({1.0, 0.0}), make_vector({0.0, 1.0})});
  EXPECT_EQ(argmax_oracle(z, make_vector({1.0, 0.5})).id, 0u);
  EXPECT_THROW(argmax_oracle(z, make_vector({1.0})), DimensionError);
}

TEST(ExplicitSet, AlternativeDirections) {
  const TargetSet z = TargetSet::explicit_set(
      {make_vector({1.0, 0.0}), make_vector({0.0, 1.0}), make_vector({1.0, 1.0})});
  const auto dirs = alternative_directions(z, 2);
  ASSERT_EQ(dirs.size(), 2u);
  EXPECT_EQ(dirs[0].first, 0u);
  EXPECT_EQ(dirs[0].second, make_vector({0.0, 1.0}));
}

TEST(MakeInstance, Validation) {
  const std::vector<Vector> arms{make_vector({1.0, 0.0, 0.0}),
                                 make_vector({0.0, 1.0, 0.0})};
  // Target outside span(X).
  EXPECT_THROW(make_instance("x", arms,
                             TargetSet::explicit_set({make_vector({1.0, 0.0, 0.0}),
                                                      make_vector({0.0, 0.0, 1.0})}),
                             make_vector({1.0, 0.0, 0.0})),
               ConfigError);
  // Tied best target.
  EXPECT_THROW(make_instance("x", arms, TargetSet::explicit_set(arms),
                             make_vector({1.0, 1.0, 0.0})),
               ConfigError);
  // Single target.
  EXPECT_THROW(make_instance("x", arms, TargetSet::explicit_set({arms[0]}),
                             make_vector({1.0, 0.0, 0.0})),
               DegenerateTargetError);
  EXPECT_THROW(make_instance("x", arms, TargetSet::explicit_set(arms),
                             make_vector({1.0, 0.0})),
               DimensionError);
}

TEST(DeltaMax, BallOnly) {
  const Instance inst = make_soare(0.3);
  EXPECT_FALSE(delta_max(inst, Unbounded{}).has_value());
  EXPECT_DOUBLE_EQ(*delta_max(inst, Ball{2.0}), 4.0);
}

TEST(InstanceJson, RoundTrip) {
  RngStream rng(3);
  for (const Instance& inst : {make_soare(0.5), make_topk(6, 2), make_sphere(rng, 3, 8)}) {
    const Instance back = instance_from_json(nlohmann::json::parse(to_json(inst).dump()));
    EXPECT_EQ(back.name, inst.name);
    EXPECT_EQ(back.theta_star, inst.theta_star);
    EXPECT_EQ(back.best_target, inst.best_target);
    EXPECT_EQ(back.targets.size(), inst.targets.size());
    ASSERT_EQ(back.arms.size(), inst.arms.size());
    for (std::size_t i = 0; i < inst.arms.size(); ++i) EXPECT_EQ(back.arms[i], inst.arms[i]);
  }
}

TEST(InstanceJson, MalformedIsConfigError) {
  EXPECT_THROW(instance_from_json(nlohmann::json::parse(R"({"arms": 3})")), ConfigError);
  EXPECT_THROW(instance_from_json(nlohmann::json::parse(
                   R"({"name":"a","arms":[[1,0],[0,1]],"theta_star":[1,0],
                       "targets":{"kind":"weird"}})")),
               ConfigError);
}
