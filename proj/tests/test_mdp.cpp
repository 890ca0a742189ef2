#include <doctest.h>

#include <cmath>
#include <set>

#include "support.hpp"
#include "tmis/errors.hpp"
#include "tmis/harness.hpp"
#include "tmis/mdp.hpp"
#include "tmis/rng.hpp"

using namespace tmis;
namespace tt = tmis::testing;

namespace {

// Two states, two actions, H = 2, tables set by hand. Under hand_target()
// the value is 397/512 (exact-fraction hand computation).
TabularMDP hand_mdp() {
  return TabularMDP({2, 2, 2}, {0.5, 0.5},
                    {1.0, 0.0, 0.5, 0.5, 0.25, 0.75, 0.0, 1.0},
                    {1.0, 0.0, 0.5, 0.0, 0.0, 1.0, 1.0, 0.25});
}

}  // namespace

TEST_CASE("counter rng is keyed and reproducible") {
  CounterRng a(42), b(42), c(43);
  for (int i = 0; i < 100; ++i) {
    const auto x = a();
    CHECK(x == b());
    CHECK(x != c());
  }
  CounterRng s = CounterRng(7).substream(3);
  CHECK(s.key() == derive_key({7, 3}));
  CHECK(derive_key({1, 2}) != derive_key({2, 1}));
  CounterRng u(9);
  for (int i = 0; i < 10000; ++i) {
    const double x = u.uniform();
    CHECK((x >= 0.0 && x < 1.0));
  }
}

TEST_CASE("model construction rejects malformed tables") {
  CHECK_THROWS_AS(TabularMDP({1, 1, 2}, {0.9}, {1.0}, {0.0, 0.0}), ConfigError);
  CHECK_THROWS_AS(TabularMDP({1, 1, 2}, {1.0}, {1.0, 0.0}, {0.0, 0.0}), ConfigError);
  CHECK_THROWS_AS(TabularMDP({1, 1, 2}, {1.0}, {1.0}, {0.0, 1.5}), ConfigError);
  CHECK_THROWS_AS(TabularMDP({2, 1, 2}, {0.5, 0.5}, {0.5, 0.5, 1.0 + 1e-9, 0.0}, {0.0, 0.0, 0.0, 0.0}),
                  ConfigError);
  CHECK_THROWS_AS(TabularMDP({0, 1, 1}, {}, {}, {}), ConfigError);
  CHECK_THROWS_AS(Policy({1, 2, 1}, {0.5, 0.6}), ConfigError);
  CHECK_NOTHROW(Policy({1, 2, 1}, {0.25, 0.75}));
}

TEST_CASE("single-path model samples the only path") {
  const Instance inst = single_path_instance(3);
  CounterRng rng(5);
  const Trajectory tr = sample_trajectory(inst.mdp, inst.target, rng);
  REQUIRE(tr.steps.size() == 3);
  for (const Step& s : tr.steps) CHECK(s == Step{0, 0, 1.0});

  CHECK(sample_dataset(inst.mdp, inst.target, 20, 1) == sample_dataset(inst.mdp, inst.target, 20, 2));
  CHECK(exact_value(inst.mdp, inst.target).policy_value == 3.0);

  const MarginalDistributions m = marginal_distributions(inst.mdp, inst.target);
  for (int t = 0; t < 3; ++t) CHECK(m.state(t, 0) == 1.0);
}

TEST_CASE("zero-mean rewards are realised as zero under either noise law") {
  CounterRng rng(11);
  for (RewardNoise noise : {RewardNoise::Deterministic, RewardNoise::Bernoulli}) {
    const Dims d{3, 2, 4};
    const TabularMDP base = tt::random_mdp(d, rng);
    const TabularMDP mdp(d, {base.initial_dist().begin(), base.initial_dist().end()}, base.raw_transitions(),
                         std::vector<double>(4 * 3 * 2, 0.0), noise);
    const Dataset data = sample_dataset(mdp, Policy::uniform(d), 200, 3);
    for (std::size_t i = 0; i < data.size(); ++i)
      for (int t = 0; t < d.horizon; ++t) CHECK(data.reward(i, t) == 0.0);
    const ValueTables v = exact_value(mdp, Policy::uniform(d));
    CHECK(v.policy_value == 0.0);
    for (double x : v.v_fn) CHECK(x == 0.0);
    for (double x : v.q_fn) CHECK(x == 0.0);
  }
}

TEST_CASE("sample_dataset uses one derived stream per episode") {
  CounterRng rng(21);
  const Dims d{3, 2, 5};
  const TabularMDP mdp = tt::random_mdp(d, rng);
  const Policy pol = tt::random_policy(d, rng);

  const Dataset one = sample_dataset(mdp, pol, 1, 99);
  CounterRng stream = episode_stream(99, 0);
  CHECK(one.episode(0) == sample_trajectory(mdp, pol, stream));

  const Dataset a = sample_dataset(mdp, pol, 50, 99);
  const Dataset b = sample_dataset(mdp, pol, 50, 99);
  CHECK(a == b);
  CounterRng tenth = episode_stream(99, 10);
  CHECK(a.episode(10) == sample_trajectory(mdp, pol, tenth));
  CHECK(!(a == sample_dataset(mdp, pol, 50, 100)));
}

TEST_CASE("hand-set two-state model: value against frozen fraction and enumeration") {
  const TabularMDP mdp = hand_mdp();
  const Policy pi = tt::hand_target();
  const ValueTables v = exact_value(mdp, pi);
  CHECK(v.policy_value == doctest::Approx(397.0 / 512.0).epsilon(1e-15));
  CHECK(v.v(0, 0) == doctest::Approx(63.0 / 64.0).epsilon(1e-15));
  CHECK(v.v(0, 1) == doctest::Approx(145.0 / 256.0).epsilon(1e-15));
  CHECK(v.v(1, 1) == doctest::Approx(7.0 / 16.0).epsilon(1e-15));
  CHECK(v.v(2, 0) == 0.0);
  CHECK(std::abs(v.policy_value - tt::brute_force(mdp, pi).value) <= 1e-12);
}

TEST_CASE("exact values on random models: both routes, enumeration, Bellman consistency") {
  CounterRng rng(31);
  for (int i = 0; i < 200; ++i) {
    const Dims d{1 + static_cast<int>(rng() % 4), 1 + static_cast<int>(rng() % 3), 1 + static_cast<int>(rng() % 5)};
    const TabularMDP mdp = tt::random_mdp(d, rng, RewardNoise::Bernoulli, i % 2 == 0);
    const Policy pi = tt::random_policy(d, rng);
    const ValueTables v = exact_value(mdp, pi);
    CHECK(std::abs(v.policy_value - v.forward_value) <= 1e-10);
    CHECK(v.policy_value >= 0.0);
    CHECK(v.policy_value <= d.horizon * mdp.reward_max());
    if (d.states * d.actions <= 4 && d.horizon <= 4) CHECK(std::abs(v.policy_value - tt::brute_force(mdp, pi).value) <= 1e-12);

    for (int t = 0; t < d.horizon; ++t)
      for (int s = 0; s < d.states; ++s)
        for (int a = 0; a < d.actions; ++a) {
          double q = mdp.mean_reward(t, s, a);
          if (t + 1 < d.horizon)
            for (int s2 = 0; s2 < d.states; ++s2) q += mdp.transition(t, s, a)[s2] * v.v(t + 1, s2);
          CHECK(std::abs(q - v.q(t, s, a)) <= 1e-10);
        }

    const MarginalDistributions m = marginal_distributions(mdp, pi);
    for (int s = 0; s < d.states; ++s) CHECK(m.state(0, s) == mdp.initial_dist()[s]);
    for (int t = 0; t < d.horizon; ++t) {
      double mass = 0.0;
      for (int s = 0; s < d.states; ++s) {
        mass += m.state(t, s);
        for (int a = 0; a < d.actions; ++a) CHECK(m.state_action(t, s, a) == m.state(t, s) * pi.prob(t, s, a));
      }
      CHECK(std::abs(mass - 1.0) <= 1e-10);
    }
  }
}

TEST_CASE("benchmark MDP H=4: sampled frequencies match the model within 3 standard errors") {
  const Instance inst = build_paper_mdp(4);
  const std::size_t n = 100000;
  const Dataset data = sample_dataset(inst.mdp, inst.logging, n, 2024);
  const MarginalDistributions m = marginal_distributions(inst.mdp, inst.logging);
  const Dims d = inst.mdp.dims();

  for (int t = 0; t < d.horizon; ++t)
    for (int s = 0; s < d.states; ++s) {
      std::size_t hits = 0;
      for (std::size_t i = 0; i < n; ++i) hits += data.state(i, t) == s;
      const double p = m.state(t, s);
      const double se = std::sqrt(p * (1.0 - p) / n);
      CHECK(std::abs(static_cast<double>(hits) / n - p) <= 3.0 * se + 1e-15);
    }

  for (int t = 0; t + 1 < d.horizon; ++t)
    for (int s = 0; s < d.states; ++s)
      for (int a = 0; a < d.actions; ++a) {
        std::size_t visits = 0, to_s0 = 0;
        for (std::size_t i = 0; i < n; ++i)
          if (data.state(i, t) == s && data.action(i, t) == a) {
            ++visits;
            to_s0 += data.state(i, t + 1) == 0;
          }
        if (visits == 0) continue;
        const double p = inst.mdp.transition(t, s, a)[0];
        const double se = std::sqrt(p * (1.0 - p) / visits);
        CHECK(std::abs(static_cast<double>(to_s0) / visits - p) <= 3.0 * se + 1e-15);
      }
}

TEST_CASE("diagnostic ratios") {
  CounterRng rng(41);
  const Dims d{3, 2, 4};
  const TabularMDP mdp = tt::random_mdp(d, rng);
  const Policy mu = tt::random_policy(d, rng, 0.2);
  const DiagnosticRatios same = diagnostic_ratios(mdp, mu, mu);
  CHECK(same.tau_s == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(same.tau_a == 1.0);

  const Instance paper = build_paper_mdp(8);
  CHECK(diagnostic_ratios(paper.mdp, paper.logging, paper.target).tau_a == 1.5);

  const Instance single = single_path_instance(4);
  CHECK(diagnostic_ratios(single.mdp, single.target, single.target).d_m == 1.0);

  const DiagnosticRatios r = diagnostic_ratios(mdp, mu, tt::random_policy(d, rng));
  CHECK(r.tau_s <= 1.0 / r.d_m + 1e-12);
  CHECK(r.d_m_sa > 0.0);
}

TEST_CASE("coverage violations are reported") {
  // Logger always plays action 0, which keeps s0; action 1 moves to s1.
  const TabularMDP mdp({2, 2, 2}, {1.0, 0.0}, {1.0, 0.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0}, std::vector<double>(8, 0.5));
  const Policy logger({2, 2, 2}, {1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0});
  const Policy reaches_s1({2, 2, 2}, {0.5, 0.5, 0.5, 0.5, 1.0, 0.0, 1.0, 0.0});
  CHECK_THROWS_AS(diagnostic_ratios(mdp, logger, reaches_s1), CoverageError);
  CHECK_NOTHROW(diagnostic_ratios(mdp, logger, logger));
}

TEST_CASE("benchmark MDP layout") {
  for (int H : {2, 4, 16, 100}) {
    const Instance inst = build_paper_mdp(H);
    const std::vector<int> risky = paper_risky_actions(H, 100);
    REQUIRE(risky.size() == static_cast<std::size_t>(H - 1));
    for (int t = 0; t < H; ++t)
      for (int a = 0; a < 2; ++a) {
        // 0-based step t is 1-based step t + 1.
        CHECK(inst.mdp.mean_reward(t, 0, a) == (t + 1 > H / 2 ? 1.0 : 0.0));
        CHECK(inst.mdp.mean_reward(t, 1, a) == 0.0);
        if (t + 1 < H) {
          CHECK(inst.mdp.transition(t, 0, a)[0] == 1.0);
          CHECK(inst.mdp.transition(t, 1, a)[0] == (a == risky[t] ? 2.0 / H : 0.0));
        }
      }
    CHECK(inst.target.prob(0, 1, 0) == 0.25);
    CHECK(inst.target.prob(0, 1, 1) == 0.75);
    CHECK(inst.logging.prob(0, 1, 0) == 0.5);
  }
  const Instance a = build_paper_mdp(16, 7), b = build_paper_mdp(16, 7);
  CHECK(a.mdp.raw_transitions() == b.mdp.raw_transitions());
  CHECK(a.mdp.raw_mean_rewards() == b.mdp.raw_mean_rewards());
  const std::vector<int> risky = paper_risky_actions(100, 100);
  const std::set<int> seen(risky.begin(), risky.end());
  CHECK(seen.size() == 2);
  CHECK_THROWS_AS(build_paper_mdp(3), ConfigError);
  CHECK_THROWS_AS(build_paper_mdp(0), ConfigError);
}
