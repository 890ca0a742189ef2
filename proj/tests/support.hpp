#pragma once

// Shared fixtures for the unit tests and the acceptance binary: random
// instance generators, a brute-force trajectory oracle that shares no code
// with the library's dynamic programming, and a few fixed small models.

#include <cmath>
#include <cstdint>
#include <tuple>
#include <vector>

#include "tmis/mdp.hpp"
#include "tmis/rng.hpp"

namespace tmis::testing {

/// A random probability vector of length k. With `sparse`, each entry is
/// zeroed with probability 1/3 (one entry always survives).
inline std::vector<double> random_simplex(int k, CounterRng& rng, bool sparse = false) {
  std::vector<double> p(static_cast<std::size_t>(k));
  double total = 0.0;
  const int keep = static_cast<int>(rng() % static_cast<std::uint64_t>(k));
  for (int i = 0; i < k; ++i) {
    double x = -std::log(1.0 - rng.uniform());
    if (sparse && i != keep && rng.uniform() < 1.0 / 3.0) x = 0.0;
    p[i] = x;
    total += x;
  }
  for (double& x : p) x /= total;
  return p;
}

inline TabularMDP random_mdp(Dims d, CounterRng& rng, RewardNoise noise = RewardNoise::Bernoulli,
                             bool sparse = false) {
  std::vector<double> d1 = random_simplex(d.states, rng, sparse);
  std::vector<double> transitions;
  for (int t = 0; t + 1 < d.horizon; ++t)
    for (int s = 0; s < d.states; ++s)
      for (int a = 0; a < d.actions; ++a) {
        const auto p = random_simplex(d.states, rng, sparse);
        transitions.insert(transitions.end(), p.begin(), p.end());
      }
  std::vector<double> rewards;
  for (int i = 0; i < d.horizon * d.states * d.actions; ++i) rewards.push_back(rng.uniform());
  return TabularMDP(d, std::move(d1), std::move(transitions), std::move(rewards), noise, 1.0);
}

/// Random stochastic policy with every probability at least `floor_mass / A`.
inline Policy random_policy(Dims d, CounterRng& rng, double floor_mass = 0.0) {
  std::vector<double> table;
  for (int t = 0; t < d.horizon; ++t)
    for (int s = 0; s < d.states; ++s) {
      const auto p = random_simplex(d.actions, rng);
      for (double x : p) table.push_back(floor_mass / d.actions + (1.0 - floor_mass) * x);
    }
  return Policy(d, std::move(table));
}

struct BruteForce {
  double value = 0.0;
  double variance = 0.0;  // of the realised return, reward noise included
};

/// Enumerates every (s_0, a_0, ..., s_{H-1}, a_{H-1}) with an odometer and
/// accumulates exact path probabilities.
inline BruteForce brute_force(const TabularMDP& mdp, const Policy& pi) {
  const Dims d = mdp.dims();
  const int per_step = d.states * d.actions;
  std::vector<int> digits(static_cast<std::size_t>(d.horizon), 0);
  std::vector<std::tuple<double, double, double>> paths;  // prob, mean return, reward variance
  while (true) {
    double prob = 1.0, ret = 0.0, noise = 0.0;
    int prev_s = -1, prev_a = -1;
    for (int t = 0; t < d.horizon && prob > 0.0; ++t) {
      const int s = digits[t] / d.actions;
      const int a = digits[t] % d.actions;
      prob *= t == 0 ? mdp.initial_dist()[s] : mdp.transition(t - 1, prev_s, prev_a)[s];
      prob *= pi.prob(t, s, a);
      ret += mdp.mean_reward(t, s, a);
      noise += mdp.reward_variance(t, s, a);
      prev_s = s;
      prev_a = a;
    }
    if (prob > 0.0) paths.emplace_back(prob, ret, noise);
    int t = d.horizon - 1;
    while (t >= 0 && ++digits[t] == per_step) digits[t--] = 0;
    if (t < 0) break;
  }
  BruteForce out;
  for (const auto& [p, r, v] : paths) out.value += p * r;
  for (const auto& [p, r, v] : paths) out.variance += p * ((r - out.value) * (r - out.value) + v);
  return out;
}

/// Builds a dataset from literal (s, a, r) triples.
inline Dataset make_dataset(Dims d, const std::vector<std::vector<std::tuple<int, int, double>>>& episodes) {
  Dataset data(d);
  for (const auto& ep : episodes) {
    Trajectory tr;
    for (const auto& [s, a, r] : ep) tr.steps.push_back({s, a, r});
    data.append(tr);
  }
  return data;
}

/// S = A = 2, H = 2 hand fixture: pi(a0|s0) = 1/2, pi(a0|s1) = 1/4 at both
/// steps, mu uniform. The first three episodes are the small fixture.
inline Dims hand_dims() { return {2, 2, 2}; }

inline Policy hand_target() { return Policy(hand_dims(), {0.5, 0.5, 0.25, 0.75, 0.5, 0.5, 0.25, 0.75}); }

inline Dataset hand_dataset(int episodes = 3) {
  const std::vector<std::vector<std::tuple<int, int, double>>> all{
      {{0, 0, 1.0}, {1, 1, 0.0}}, {{0, 1, 0.0}, {0, 0, 1.0}}, {{1, 0, 1.0}, {1, 0, 0.0}},
      {{1, 1, 0.5}, {0, 1, 1.0}}, {{0, 0, 0.0}, {1, 1, 1.0}}, {{0, 1, 1.0}, {0, 1, 0.0}},
  };
  return make_dataset(hand_dims(), {all.begin(), all.begin() + episodes});
}

/// Two states, two actions, H = 8, Bernoulli rewards; every cell reachable
/// under both policies below.
inline TabularMDP bernoulli_two_state(int horizon = 8) {
  const Dims d{2, 2, horizon};
  std::vector<double> transitions, rewards;
  for (int t = 0; t < horizon; ++t) {
    const double phase = 0.15 * std::sin(0.7 * t);
    for (int s = 0; s < 2; ++s)
      for (int a = 0; a < 2; ++a) {
        const double stay = 0.35 + 0.3 * a + 0.1 * s + phase;
        if (t + 1 < horizon) {
          transitions.push_back(s == 0 ? stay : 1.0 - stay);
          transitions.push_back(s == 0 ? 1.0 - stay : stay);
        }
        rewards.push_back(0.2 + 0.25 * s + 0.3 * a - 0.1 * phase);
      }
  }
  return TabularMDP(d, {0.6, 0.4}, std::move(transitions), std::move(rewards), RewardNoise::Bernoulli, 1.0);
}

inline Policy bernoulli_logging(int horizon = 8) {
  std::vector<double> table;
  for (int t = 0; t < horizon; ++t) table.insert(table.end(), {0.5, 0.5, 0.6, 0.4});
  return Policy({2, 2, horizon}, std::move(table));
}

inline Policy bernoulli_target(int horizon = 8) {
  std::vector<double> table;
  for (int t = 0; t < horizon; ++t) table.insert(table.end(), {0.3, 0.7, 0.75, 0.25});
  return Policy({2, 2, horizon}, std::move(table));
}

}  // namespace tmis::testing
