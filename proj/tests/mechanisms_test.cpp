#include <cmath>
#include <random>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "intervene/intervene.hpp"

namespace intervene {
namespace {

using TwoArg = std::function<double(double a0, double ai)>;

/// Users on [0,1] whose utility depends on the scalar manager action and
/// their own action only.
InterventionGame separable_game(const std::vector<TwoArg>& us) {
  InterventionGame g;
  for (std::size_t i = 0; i < us.size(); ++i) {
    g.actions.push_back(ActionSpace::interval(0.0, 1.0));
    UtilityOracle o;
    o.value = [i, u = us[i]](const ManagerAction& a0, std::span<const double> a) { return u(a0[0], a[i]); };
    g.users.push_back(std::move(o));
  }
  g.manager_actions = {ActionSpace::interval(0.0, 1.0)};
  g.bounds = InterventionBounds::scalar(0.0, 1.0);
  g.weights.assign(us.size(), 1.0);
  g.manager = benevolent_manager(g.users, g.weights);
  return g;
}

const InterventionBounds kUnit = InterventionBounds::scalar(0.0, 1.0);

TEST(MaxPunishment, Examples) {
  const Mechanism f = max_punishment({0.5, 0.5}, kUnit);
  EXPECT_EQ(f(Profile{0.5, 0.5}), ManagerAction{0.0});
  EXPECT_EQ(f(Profile{0.6, 0.5}), ManagerAction{1.0});
  EXPECT_EQ(f(Profile{0.5, 0.5 + 1e-13}), ManagerAction{0.0});  // inside the membership tolerance
  EXPECT_EQ(f(Profile{0.5, 0.5 + 1e-9}), ManagerAction{1.0});
  EXPECT_EQ(f.name(), "max_punishment");
}

TEST(MaxPunishment, TwoValuedEverywhere) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0, 1);
  const Mechanism f = max_punishment({0.3, 0.8}, InterventionBounds::scalar(0.1, 0.7));
  for (int k = 0; k < 500; ++k) {
    const double v = f(Profile{u(rng), u(rng)})[0];
    EXPECT_TRUE(v == 0.1 || v == 0.7) << v;
  }
}

TEST(Affine, Examples) {
  const Mechanism f = affine({0.5, 0.5}, {2, 2}, kUnit);
  EXPECT_EQ(f(Profile{0.5, 0.5})[0], 0.0);
  EXPECT_DOUBLE_EQ(f(Profile{0.6, 0.5})[0], 0.2);
  EXPECT_EQ(f(Profile{0.4, 0.4})[0], 0.0);
  EXPECT_EQ(f(Profile{1.0, 1.0})[0], 1.0);
  EXPECT_THROW(affine({0.5}, {1, 2}, kUnit), PreconditionError);
}

TEST(Affine, LipschitzInEachCoordinate) {
  std::mt19937_64 rng(22);
  std::uniform_real_distribution<double> u(0, 1), c(-5, 5);
  for (int k = 0; k < 300; ++k) {
    const std::vector<double> rates{c(rng), c(rng)};
    const Mechanism f = affine({u(rng), u(rng)}, rates, kUnit);
    const Profile a{u(rng), u(rng)};
    for (std::size_t i = 0; i < 2; ++i) {
      Profile b = a;
      b[i] = u(rng);
      EXPECT_LE(std::abs(f(a)[0] - f(b)[0]), std::abs(rates[i]) * std::abs(a[i] - b[i]) + 1e-12);
    }
  }
}

TEST(Constant, Examples) {
  const Mechanism f = constant(0.3, kUnit);
  EXPECT_EQ(f(Profile{0.1, 0.9})[0], 0.3);
  EXPECT_EQ(f(Profile{0.7, 0.2})[0], 0.3);
  EXPECT_THROW(constant(1.2, kUnit), PreconditionError);
}

TEST(Tabulated, LookupAndMissingProfile) {
  const Mechanism f = tabulated({{{0, 0}, {0}}, {{0, 1}, {1}}});
  EXPECT_EQ(f(Profile{0, 1})[0], 1.0);
  EXPECT_THROW(f(Profile{1, 1}), PreconditionError);
}

TEST(AffineRates, RandomAccessSymmetric) {
  const auto g = random_access_game(RandomAccessSpec::uniform(2));
  const auto c = compute_affine_rates(g, {0.5, 0.5});
  EXPECT_NEAR(c[0], 2.0, 1e-6);
  EXPECT_NEAR(c[1], 2.0, 1e-6);
}

TEST(AffineRates, RandomAccessAsymmetricTarget) {
  const auto g = random_access_game(RandomAccessSpec::uniform(2));
  const auto c = compute_affine_rates(g, {0.25, 0.8});
  EXPECT_NEAR(c[0], 4.0, 1e-6);
  EXPECT_NEAR(c[1], 1.25, 1e-6);
}

TEST(AffineRates, InvariantToBenefitAndPeakRate) {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(0.05, 0.95), gam(0.2, 5.0);
  const std::vector<BenefitFunction> family{BenefitFunction::identity(), BenefitFunction::power(3.0),
                                            BenefitFunction::power(0.5), BenefitFunction::log_shifted(),
                                            BenefitFunction::saturating_exp(1.0)};
  for (int k = 0; k < 20; ++k) {
    const Profile t{u(rng), u(rng), u(rng)};
    RandomAccessSpec spec{{gam(rng), gam(rng), gam(rng)}, {family[k % 5], family[(k + 1) % 5], family[(k + 2) % 5]}, {}, {0, 1}};
    const auto c = compute_affine_rates(random_access_game(spec), t);
    for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(c[i], 1.0 / t[i], 1e-6) << "user " << i + 1;
  }
}

TEST(AffineRates, ZeroWhenOwnActionIsStationary) {
  auto bump = [](double a0, double x) { return (1 - a0) * (1 - (x - 0.5) * (x - 0.5)); };
  const auto g = separable_game({bump, bump});
  const auto c = compute_affine_rates(g, {0.5, 0.5});
  EXPECT_NEAR(c[0], 0.0, 1e-8);
  EXPECT_NEAR(c[1], 0.0, 1e-8);
}

TEST(AffineRates, Errors) {
  const auto g = random_access_game(RandomAccessSpec::uniform(2));
  EXPECT_THROW(compute_affine_rates(g, {0.0, 0.5}), PreconditionError);
  EXPECT_THROW(compute_affine_rates(g, {0.5, 1.0}), PreconditionError);

  auto indifferent = [](double, double x) { return x; };
  try {
    compute_affine_rates(separable_game({[](double a0, double x) { return (1 - a0) * x; }, indifferent}), {0.5, 0.5});
    FAIL();
  } catch (const SingularityError& e) {
    EXPECT_NE(std::string(e.what()).find("user 2"), std::string::npos) << e.what();
  }
  EXPECT_THROW(compute_affine_rates(separable_game({[](double a0, double x) { return a0 + x; }}), {0.5}),
               PreconditionError);
}

TEST(AffineConditions, RandomAccessIdentityPasses) {
  const auto g = random_access_game(RandomAccessSpec::uniform(2));
  const Profile t{0.5, 0.5};
  const auto rep = verify_prop4_conditions(g, t, compute_affine_rates(g, t));
  EXPECT_TRUE(rep.passed) << rep.summary();
  ASSERT_EQ(rep.users.size(), 2u);
  for (const auto& u : rep.users) {
    EXPECT_EQ(u.sign, RateSign::positive);
    ASSERT_EQ(u.conditions.size(), 3u);
    // concavity below the target holds with equality for a linear benefit
    EXPECT_EQ(u.conditions[0].status, ConditionStatus::non_strict);
    // u along the ramp is -c^2 x^2 + ..., strictly concave
    EXPECT_EQ(u.conditions[1].status, ConditionStatus::strict);
    EXPECT_NEAR(u.conditions[1].worst_margin, 2.0, 1e-3);
    // the ramp saturates exactly at a_i = 1: nothing left to check
    EXPECT_EQ(u.conditions[2].status, ConditionStatus::vacuous);
  }
  EXPECT_TRUE(rep.unique_maximizer);
}

TEST(AffineConditions, ConvexUtilityFailsWithWitness) {
  auto convex = [](double a0, double x) { return (1 - a0) * (x - 0.5) * (x - 0.5); };
  const auto g = separable_game({convex});
  const auto rep = verify_prop4_conditions(g, {0.5}, {0.0});
  EXPECT_FALSE(rep.passed);
  ASSERT_EQ(rep.users[0].conditions.size(), 1u);
  const auto& c = rep.users[0].conditions[0];
  EXPECT_EQ(c.status, ConditionStatus::failed);
  EXPECT_NEAR(c.worst_margin, -2.0, 1e-4);
  EXPECT_TRUE(c.witness > 0.0 && c.witness < 1.0);
  EXPECT_NE(rep.summary().find("FAIL"), std::string::npos);
}

TEST(AffineConditions, ZeroRateConcaveUserPassesStrictly) {
  auto bump = [](double a0, double x) { return (1 - a0) * (1 - (x - 0.5) * (x - 0.5)); };
  const auto g = separable_game({bump});
  const auto rep = verify_prop4_conditions(g, {0.5}, {0.0});
  EXPECT_TRUE(rep.passed);
  EXPECT_TRUE(rep.strict);
  EXPECT_EQ(rep.users[0].sign, RateSign::zero);
}

TEST(AffineConditions, NegativeRateReadings) {
  // own action hurts the user, so the manager rewards lower a_i: c < 0
  auto u = [](double a0, double x) { return (1 - a0) * (1 - x) - 0.5 * (x - 0.2) * (x - 0.2); };
  const auto g = separable_game({u});
  const Profile t{0.6};
  const auto c = compute_affine_rates(g, t);
  ASSERT_LT(c[0], 0.0);
  Prop4Options printed;
  const auto a = verify_prop4_conditions(g, t, c, printed);
  Prop4Options mirrored;
  mirrored.negative_reading = NegativeRampReading::mirrored;
  const auto b = verify_prop4_conditions(g, t, c, mirrored);
  EXPECT_EQ(a.users[0].sign, RateSign::negative);
  EXPECT_TRUE(a.users[0].conditions[1].vacuous);   // as printed: empty for interior targets
  EXPECT_FALSE(b.users[0].conditions[1].vacuous);  // mirrored: a real interval below the target
}

TEST(AffineConditions, PassingConditionsImplySupport) {
  std::mt19937_64 rng(24);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  for (const auto& benefit : {BenefitFunction::identity(), BenefitFunction::power(0.5), BenefitFunction::log_shifted()}) {
    const auto g = random_access_game(RandomAccessSpec::uniform(2, 1.0, benefit));
    for (int k = 0; k < 5; ++k) {
      const Profile t{u(rng), u(rng)};
      const auto c = compute_affine_rates(g, t);
      const auto rep = verify_prop4_conditions(g, t, c);
      if (!rep.passed) continue;
      const auto s = supports(g, affine(t, c, g.bounds), t, GridSpec{201, 2, 0.1}, 1e-7);
      EXPECT_TRUE(s.verdict) << benefit.label() << " at " << format_point(t) << " gain " << s.max_gain();
    }
  }
}

} // namespace
} // namespace intervene
