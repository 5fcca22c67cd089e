#include <gtest/gtest.h>

#include <cmath>

#include "agmec/oracle.hpp"

using namespace agmec;

namespace {

FiniteMdp single(double reward)
{
  FiniteMdp m;
  m.states = 1;
  m.actions = 1;
  m.post_states = 1;
  m.feasible = {1};
  m.reward = {reward};
  m.post = {0};
  m.next = {{{0, 1.0}}};
  return m;
}

// 0 -a0-> 1 (ℓ=1), 0 -a1-> 0 (ℓ=0.2), 1 -a0-> 0 (ℓ=0), 1 -a1 infeasible.
FiniteMdp chain()
{
  FiniteMdp m;
  m.states = 2;
  m.actions = 2;
  m.post_states = 4;
  m.feasible = {1, 1, 1, 0};
  m.reward = {1.0, 0.2, 0.0, 0.0};
  m.post = {0, 1, 2, 3};
  m.next = {{{1, 1.0}}, {{0, 1.0}}, {{0, 1.0}}, {{0, 1.0}}};
  return m;
}

}  // namespace

TEST(ValueIteration, ZeroRewardAndSingleState)
{
  auto z = single(0.0);
  EXPECT_EQ(value_iteration(z, 0.9).v[0], 0.0);
  EXPECT_NEAR(value_iteration(single(2.5), 0.9).v[0], 2.5, 1e-8);
}

TEST(ValueIteration, ChainClosedForm)
{
  // V0 = max((1−γ)·1 + γV1, (1−γ)·0.2 + γV0), V1 = γV0. Taking a0:
  // V0 = (1−γ)/(1−γ²) = 1/(1+γ).
  const double g = 0.5;
  const auto r = value_iteration(chain(), g);
  EXPECT_NEAR(r.v[0], 1.0 / (1 + g), 1e-8);
  EXPECT_NEAR(r.v[1], g / (1 + g), 1e-8);
  EXPECT_LT(consistency_check(r, chain(), g), 1e-12);
  for (std::size_t i = 1; i < r.diffs.size(); ++i) EXPECT_LE(r.diffs[i], g * r.diffs[i - 1] + 1e-15);
}

TEST(ValueIteration, RejectsMalformedModels)
{
  auto m = chain();
  m.next[0] = {{1, 0.5}};
  EXPECT_THROW(value_iteration(m, 0.5), ConfigError);
  m = chain();
  m.feasible = {0, 0, 1, 0};
  EXPECT_THROW(value_iteration(m, 0.5), ConfigError);
  EXPECT_THROW(value_iteration(chain(), 1.0), ConfigError);
}

TEST(Tabular, ChainConverges)
{
  const double g = 0.5;
  Rng rng = make_stream(1, 1);
  const auto t = learn_tabular(chain(), 0, 200000, g, rng);
  EXPECT_NEAR(t.q(0, 0), 1.0 / (1 + g), 1e-3);
  EXPECT_NEAR(t.q(1, 0), g / (1 + g), 1e-3);
  EXPECT_NEAR(t.q(0, 1), (1 - g) * 0.2 + g / (1 + g), 1e-3);
  EXPECT_LT(consistency_check(t, chain(), g), 1e-3);
}

TEST(Tabular, ZeroDiscountLearnsPayoff)
{
  Rng rng = make_stream(1, 2);
  const auto t = learn_tabular(chain(), 0, 1000, 0.0, rng);
  EXPECT_DOUBLE_EQ(t.q(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(t.q(0, 1), 0.2);
  EXPECT_EQ(t.q_post(0, 0), 0.0);
  EXPECT_DOUBLE_EQ(consistency_check(t, chain(), 0.0), 0.0);
}

TEST(Tabular, ZeroStepSizeLeavesTables)
{
  TabularQ t(2, 2, 4);
  const auto m = chain();
  t.update(0, 0, 0, 1.0, 1, m.mask(1), 0.5, 0.0);
  EXPECT_EQ(t.q(0, 0), 0.0);
  EXPECT_EQ(t.q_post(0, 0), 0.0);
  EXPECT_EQ(t.visits(0, 0), 0);
  t.update(0, 0, 0, 1.0, 1, m.mask(1), 0.5);
  EXPECT_EQ(t.visits(0, 0), 1);
  EXPECT_DOUBLE_EQ(t.q(0, 0), 0.5);  // α = 1 on first visit
}

TEST(Tabular, RandomMdpPolicyAgrees)
{
  Rng gen = make_stream(7, 1);
  const auto m = random_mdp(20, 4, 3, gen);
  const auto exact = value_iteration(m, 0.5);
  Rng walk = make_stream(7, 2);
  const auto t = learn_tabular(m, 0, 200000, 0.5, walk);
  EXPECT_GE(policy_match(t, exact, m).fraction(), 0.95);
}

TEST(Tiny, InstanceIsWellFormed)
{
  const auto inst = build_tiny_instance();
  EXPECT_NO_THROW(inst.mdp.check());
  EXPECT_EQ(inst.delta, 2);
  EXPECT_GT(inst.mdp.states, 10);
  EXPECT_EQ(inst.mdp.actions, action_count(2));
  const auto exact = value_iteration(inst.mdp, inst.world.discount);
  EXPECT_LT(consistency_check(exact, inst.mdp, inst.world.discount), 1e-9);
  auto w = tiny_world();
  w.num_users = 2;
  EXPECT_THROW(build_tiny_instance(w), ConfigError);
}
