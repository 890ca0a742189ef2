#pragma once

// Ground-truth model of a nonstationary finite-horizon tabular MDP, episode
// sampling, and exact dynamic-programming quantities (values, marginals,
// weight diagnostics).
//
// Conventions: time steps are 0-based, t = 0..H-1. transition(t, s, a) is
// the distribution of the state at step t+1 given (s_t, a_t) and exists for
// t = 0..H-2 only; the state after the last step never affects a reward.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "tmis/rng.hpp"

namespace tmis {

/// Shape shared by a model, its policies and datasets drawn from it.
struct Dims {
  int states = 0;
  int actions = 0;
  int horizon = 0;

  friend bool operator==(const Dims&, const Dims&) = default;
};

enum class RewardNoise { Deterministic, Bernoulli };

/// Absolute tolerance for "sums to one" checks at construction.
inline constexpr double kProbabilityTolerance = 1e-12;

class TabularMDP {
 public:
  /// transitions: flat [t][s][a][s'] for t < H-1, size (H-1)*S*A*S.
  /// mean_rewards: flat [t][s][a], size H*S*A.
  /// Throws ConfigError on any shape or probability violation.
  TabularMDP(Dims dims, std::vector<double> initial_dist, std::vector<double> transitions,
             std::vector<double> mean_rewards, RewardNoise noise = RewardNoise::Deterministic,
             double reward_max = 1.0);

  const Dims& dims() const noexcept { return dims_; }
  int num_states() const noexcept { return dims_.states; }
  int num_actions() const noexcept { return dims_.actions; }
  int horizon() const noexcept { return dims_.horizon; }
  RewardNoise noise() const noexcept { return noise_; }
  double reward_max() const noexcept { return reward_max_; }

  std::span<const double> initial_dist() const noexcept { return initial_dist_; }

  std::span<const double> transition(int t, int s, int a) const noexcept {
    const auto S = static_cast<std::size_t>(dims_.states);
    return {transitions_.data() + cell(t, s, a) * S, S};
  }

  double mean_reward(int t, int s, int a) const noexcept { return mean_rewards_[cell(t, s, a)]; }

  /// Var[r_t | s, a] under the noise law.
  double reward_variance(int t, int s, int a) const noexcept {
    if (noise_ == RewardNoise::Deterministic) return 0.0;
    const double p = mean_reward(t, s, a);
    return p * (1.0 - p);
  }

  const std::vector<double>& raw_transitions() const noexcept { return transitions_; }
  const std::vector<double>& raw_mean_rewards() const noexcept { return mean_rewards_; }

 private:
  std::size_t cell(int t, int s, int a) const noexcept {
    return (static_cast<std::size_t>(t) * dims_.states + s) * dims_.actions + a;
  }

  Dims dims_;
  std::vector<double> initial_dist_;
  std::vector<double> transitions_;
  std::vector<double> mean_rewards_;
  RewardNoise noise_;
  double reward_max_;
};

/// Nonstationary stochastic policy pi_t(a | s), stored flat [t][s][a].
class Policy {
 public:
  Policy(Dims dims, std::vector<double> table);

  static Policy uniform(Dims dims);
  /// actions: flat [t][s] action indices.
  static Policy deterministic(Dims dims, std::span<const int> actions);

  const Dims& dims() const noexcept { return dims_; }

  double prob(int t, int s, int a) const noexcept {
    return table_[(static_cast<std::size_t>(t) * dims_.states + s) * dims_.actions + a];
  }

  std::span<const double> row(int t, int s) const noexcept {
    const auto A = static_cast<std::size_t>(dims_.actions);
    return {table_.data() + (static_cast<std::size_t>(t) * dims_.states + s) * A, A};
  }

  const std::vector<double>& table() const noexcept { return table_; }

 private:
  Dims dims_;
  std::vector<double> table_;
};

/// Throws ConfigError unless the policy's (S, A, H) equals `dims`.
void require_same_dims(const Dims& expected, const Policy& policy, const char* what);

struct Step {
  int state = 0;
  int action = 0;
  double reward = 0.0;

  friend bool operator==(const Step&, const Step&) = default;
};

struct Trajectory {
  std::vector<Step> steps;

  friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

/// n episodes of equal length H, stored column-wise: index i*H + t.
class Dataset {
 public:
  explicit Dataset(Dims dims) : dims_(dims) {}

  /// Validates length and index bounds; throws ConfigError.
  void append(const Trajectory& episode);
  void reserve(std::size_t episodes);

  const Dims& dims() const noexcept { return dims_; }
  int horizon() const noexcept { return dims_.horizon; }
  std::size_t size() const noexcept { return rewards_.size() / static_cast<std::size_t>(dims_.horizon); }
  bool empty() const noexcept { return rewards_.empty(); }

  int state(std::size_t i, int t) const noexcept { return states_[index(i, t)]; }
  int action(std::size_t i, int t) const noexcept { return actions_[index(i, t)]; }
  double reward(std::size_t i, int t) const noexcept { return rewards_[index(i, t)]; }

  Trajectory episode(std::size_t i) const;

  friend bool operator==(const Dataset&, const Dataset&) = default;

 private:
  std::size_t index(std::size_t i, int t) const noexcept {
    return i * static_cast<std::size_t>(dims_.horizon) + static_cast<std::size_t>(t);
  }

  Dims dims_;
  std::vector<int> states_;
  std::vector<int> actions_;
  std::vector<double> rewards_;
};

/// V_h(s) for h = 0..H (row H is the zero boundary), Q_h(s, a) for h < H.
struct ValueTables {
  Dims dims;
  std::vector<double> v_fn;
  std::vector<double> q_fn;
  double policy_value = 0.0;
  /// Same quantity via sum_t <d_t, r_t^pi>; agrees with policy_value to 1e-10.
  double forward_value = 0.0;

  double v(int h, int s) const noexcept { return v_fn[static_cast<std::size_t>(h) * dims.states + s]; }
  double q(int h, int s, int a) const noexcept {
    return q_fn[(static_cast<std::size_t>(h) * dims.states + s) * dims.actions + a];
  }
};

struct MarginalDistributions {
  Dims dims;
  std::vector<double> state_marginals;         // [t][s]
  std::vector<double> state_action_marginals;  // [t][s][a]

  double state(int t, int s) const noexcept {
    return state_marginals[static_cast<std::size_t>(t) * dims.states + s];
  }
  double state_action(int t, int s, int a) const noexcept {
    return state_action_marginals[(static_cast<std::size_t>(t) * dims.states + s) * dims.actions + a];
  }
};

/// Weight bounds between a target and a logging policy. d_m and d_m_sa are
/// minima over cells the logging policy actually reaches (d^mu > 0).
struct DiagnosticRatios {
  double tau_s = 0.0;
  double tau_a = 0.0;
  double d_m = 0.0;
  double d_m_sa = 0.0;
};

/// s_1 ~ d_1, a_t ~ pi_t(.|s_t), s_{t+1} ~ P_t(.|s_t, a_t), rewards per the
/// model's noise law.
Trajectory sample_trajectory(const TabularMDP& mdp, const Policy& policy, CounterRng& rng);

/// Episode i is drawn from the stream keyed by (seed, i).
Dataset sample_dataset(const TabularMDP& mdp, const Policy& policy, std::size_t n, std::uint64_t seed);

/// The stream sample_dataset uses for episode `index`.
CounterRng episode_stream(std::uint64_t seed, std::size_t index) noexcept;

ValueTables exact_value(const TabularMDP& mdp, const Policy& policy);

MarginalDistributions marginal_distributions(const TabularMDP& mdp, const Policy& policy);

/// Throws CoverageError naming the first (t, s) or (t, s, a) the target
/// reaches with positive probability but the logger never does.
DiagnosticRatios diagnostic_ratios(const TabularMDP& mdp, const Policy& mu, const Policy& pi);

/// Samples an index from a probability vector using one uniform draw.
int sample_categorical(std::span<const double> probs, CounterRng& rng) noexcept;

}  // namespace tmis
