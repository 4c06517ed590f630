#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "levystore/quad.hpp"
#include "levystore/scale.hpp"

using namespace levystore;

namespace {

constexpr auto storage = Orientation::Storage;
constexpr auto inventory = Orientation::Inventory;

// CP-exp with rate lambda, mean mu, c = 1 - lambda mu:
// W(x) = (1 - lambda mu e^{-c x / mu}) / c, W'(x) = lambda e^{-c x / mu}.
struct CpClosedForm {
  double lambda, mu;
  double c() const { return 1.0 - lambda * mu; }
  double w(double x) const { return (1.0 - lambda * mu * std::exp(-c() * x / mu)) / c(); }
  double dw(double x) const { return lambda * std::exp(-c() * x / mu); }
  double wbar(double x) const {
    return (x - lambda * mu * mu / c() * (1.0 - std::exp(-c() * x / mu))) / c();
  }
};

}  // namespace

TEST(FirstPassage, ZeroRateGivesOne) {
  for (auto o : {storage, inventory}) {
    const FirstPassageQuery q{LevyModel::gamma(1, 1, o), 0.3, 1.0};
    const auto v = o == storage ? fp_transform_storage(q, 0.0) : fp_transform_inventory(q, 0.0);
    EXPECT_EQ(v.value, 1.0);
  }
}

TEST(FirstPassage, InventoryAtThresholdIsImmediate) {
  const FirstPassageQuery q{LevyModel::inverse_gaussian(1, 1, inventory), 1.0, 1.0};
  EXPECT_NEAR(fp_transform_inventory(q, 2.0).value, 1.0, 1e-12);
  EXPECT_EQ(expected_tau_inventory(q).value, 0.0);
  EXPECT_EQ(overflow_by_time(q, 0.5).value, 1.0);
}

TEST(FirstPassage, InfiniteVariationStorageAtThresholdIsImmediate) {
  const FirstPassageQuery q{LevyModel::stable(1.5, 1.0, storage), 1.0, 1.0};
  EXPECT_NEAR(fp_transform_storage(q, 1.0).value, 1.0, 1e-6);
}

TEST(FirstPassage, TransformDecreasesInRate) {
  for (auto o : {storage, inventory}) {
    const FirstPassageQuery q{LevyModel::gamma(1, 1, o), 0.0, 1.0};
    double prev = 1.0;
    for (double r : {0.1, 0.5, 1.0, 2.0, 5.0}) {
      const auto v = o == storage ? fp_transform_storage(q, r) : fp_transform_inventory(q, r);
      EXPECT_GT(v.value, 0.0);
      EXPECT_LT(v.value, prev) << to_string(o) << " r=" << r;
      prev = v.value;
    }
  }
}

TEST(FirstPassage, StartingCloserIsFaster) {
  const auto m = LevyModel::gamma(1, 1, inventory);
  const double far = expected_tau_inventory({m, 0.0, 1.5}).value;
  const double near = expected_tau_inventory({m, 0.8, 1.5}).value;
  EXPECT_LT(near, far);
  EXPECT_GT(fp_transform_inventory({m, 0.8, 1.5}, 1.0).value,
            fp_transform_inventory({m, 0.0, 1.5}, 1.0).value);
}

TEST(FirstPassage, DegenerateInventoryIsDeterministic) {
  // Z(t) = z + t, so tau(u) = u - z exactly.
  const auto m = LevyModel::degenerate(inventory);
  for (double z : {0.0, 0.4}) {
    const FirstPassageQuery q{m, z, 1.0};
    EXPECT_NEAR(expected_tau_inventory(q).value, 1.0 - z, 1e-9);
    for (double r : {0.5, 2.0}) {
      EXPECT_NEAR(fp_transform_inventory(q, r).value, std::exp(-r * (1.0 - z)), 1e-9);
    }
  }
}

TEST(FirstPassage, DegenerateInventoryStepInTime) {
  const FirstPassageQuery q{LevyModel::degenerate(inventory), 0.0, 1.0};
  EXPECT_EQ(overflow_by_time(q, 0.9).value, 0.0);
  EXPECT_NEAR(overflow_by_time(q, 1.1).value, 1.0, 1e-3);
}

TEST(FirstPassage, DegenerateStorageNeverReachesThreshold) {
  const FirstPassageQuery q{LevyModel::degenerate(storage), 0.0, 1.0};
  EXPECT_TRUE(std::isinf(expected_tau_storage(q).value));
}

TEST(FirstPassage, CompoundPoissonInventoryMeanClosedForm) {
  const CpClosedForm cf{0.5, 1.0};
  const auto m = LevyModel::compound_poisson_exp(cf.lambda, cf.mu, inventory);
  for (double u : {0.5, 2.0}) {
    EXPECT_NEAR(expected_tau_inventory({m, 0.0, u}).value, cf.wbar(u), 1e-7) << u;
    EXPECT_NEAR(expected_tau_inventory({m, 0.2, u}).value, cf.wbar(u) - cf.wbar(0.2), 1e-7);
  }
}

TEST(FirstPassage, CompoundPoissonStorageMeanClosedForm) {
  const CpClosedForm cf{0.5, 1.0};
  const auto m = LevyModel::compound_poisson_exp(cf.lambda, cf.mu, storage);
  for (double u : {0.5, 2.0}) {
    for (double z : {0.0, 0.3}) {
      const double x = u - z;
      const double exact = cf.w(x) * cf.w(u) / cf.dw(u) - cf.wbar(x);
      EXPECT_NEAR(expected_tau_storage({m, z, u}).value, exact, 1e-6 * exact) << u << " " << z;
    }
  }
}

// (1 - E e^{-r tau}) / r tends to E tau as r -> 0.
TEST(FirstPassage, MeanIsSlopeOfTransform) {
  for (auto o : {storage, inventory}) {
    const FirstPassageQuery q{LevyModel::gamma(1, 1, o), 0.0, 1.0};
    const double mean =
        o == storage ? expected_tau_storage(q).value : expected_tau_inventory(q).value;
    const double r = 1e-3;
    const double v = o == storage ? fp_transform_storage(q, r).value : fp_transform_inventory(q, r).value;
    EXPECT_NEAR((1.0 - v) / r, mean, 0.02 * mean) << to_string(o);
  }
}

// E e^{-r tau} = int_0^inf r e^{-r t} P(tau < t) dt, and tau >= u here.
TEST(FirstPassage, TransformMatchesTimeDomain) {
  const FirstPassageQuery q{LevyModel::gamma(1, 1, inventory), 0.0, 1.0};
  const double r = 2.0;
  quad::QuadOptions o;
  o.max_evaluations = 4000;
  const auto lhs = quad::integrate(
      [&](double t) { return r * std::exp(-r * t) * overflow_by_time(q, t).value; }, 1.0, 20.0, 1e-6,
      o);
  EXPECT_NEAR(lhs.value, fp_transform_inventory(q, r).value, 1e-5);
}

TEST(FirstPassage, OverflowByTimeIsDistribution) {
  for (auto o : {storage, inventory}) {
    const FirstPassageQuery q{LevyModel::gamma(1, 1, o), 0.0, 1.0};
    double prev = 0.0;
    for (double t : {1.0, 2.0, 4.0, 8.0}) {
      const double p = overflow_by_time(q, t).value;
      EXPECT_GE(p, prev - 1e-6) << to_string(o) << " t=" << t;
      EXPECT_LE(p, 1.0);
      prev = p;
    }
    EXPECT_GT(prev, 0.5);
  }
}

TEST(FirstPassage, UnstableInversionIsReported) {
  const FirstPassageQuery q{LevyModel::inverse_gaussian(2, 1, storage), 0.0, 1.0};
  EXPECT_THROW(overflow_by_time(q, 0.5), NumericalFailure);
}

// The reflected level sits above the free process, so it crosses first.
TEST(FirstPassage, ReflectedCrossesBeforeFreeProcess) {
  const auto m = LevyModel::gamma(1, 1, inventory);
  for (double t : {1.5, 3.0}) {
    const double z = overflow_by_time({m, 0.0, 1.0}, t).value;
    const double y = passage_unreflected_by_time(m, 1.0, t).value;
    EXPECT_GE(z, y - 1e-6);
  }
}

TEST(FirstPassage, KendallMatchesUnreflectedInversion) {
  for (const auto& m : {LevyModel::gamma(1, 1, inventory), LevyModel::inverse_gaussian(1, 1, inventory)}) {
    for (double t : {1.5, 3.0}) {
      EXPECT_NEAR(kendall_cross_check(m, 1.0, t).value, passage_unreflected_by_time(m, 1.0, t).value,
                  1e-5)
          << m.describe() << " t=" << t;
    }
  }
}

TEST(FirstPassage, CachedTableSourceIsUsed) {
  const FirstPassageQuery q{LevyModel::gamma(1, 1, inventory), 0.0, 1.0};
  int calls = 0;
  TableSource source = [&](const LaplaceExponent& psi, double r, const std::vector<double>& grid) {
    ++calls;
    return scale_function(psi, r, grid);
  };
  EXPECT_NEAR(fp_transform_inventory(q, 1.0, {}, source).value, fp_transform_inventory(q, 1.0).value,
              1e-15);
  EXPECT_EQ(calls, 1);
}

TEST(FirstPassage, Preconditions) {
  const auto s = LevyModel::gamma(1, 1, storage);
  EXPECT_THROW(fp_transform_storage({s, 1.5, 1.0}, 1.0), InvalidParameter);
  EXPECT_THROW(fp_transform_storage({s, 0.0, 0.0}, 1.0), InvalidParameter);
  EXPECT_THROW(fp_transform_storage({s, 0.0, 1.0}, -1.0), InvalidParameter);
  EXPECT_THROW(fp_transform_inventory({s, 0.0, 1.0}, 1.0), InvalidParameter);
  EXPECT_THROW(kendall_cross_check(s, 1.0, 1.0), InvalidParameter);
  EXPECT_THROW(overflow_by_time({s, 0.0, 1.0}, 0.0), InvalidParameter);
}
