#include "tmis/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include "tmis/errors.hpp"

namespace tmis {
namespace {

void require_dims(const Dims& d) {
  if (d.states < 1 || d.actions < 1 || d.horizon < 1) {
    std::ostringstream os;
    os << "dimensions must be positive (S=" << d.states << ", A=" << d.actions << ", H=" << d.horizon << ")";
    throw ConfigError(os.str());
  }
}

void require_size(const char* what, std::size_t got, std::size_t expected) {
  if (got != expected) {
    std::ostringstream os;
    os << what << " has " << got << " entries, expected " << expected;
    throw ConfigError(os.str());
  }
}

void require_distribution(std::span<const double> p, const std::string& where) {
  double total = 0.0;
  for (double x : p) {
    if (!(x >= 0.0) || !std::isfinite(x)) throw ConfigError(where + " has a negative or non-finite entry");
    total += x;
  }
  if (std::abs(total - 1.0) > kProbabilityTolerance) {
    std::ostringstream os;
    os.precision(17);
    os << where << " sums to " << total << ", not 1";
    throw ConfigError(os.str());
  }
}

std::string cell_name(const char* what, int t, int s, int a = -1) {
  std::ostringstream os;
  os << what << "[t=" << t << "][s=" << s << "]";
  if (a >= 0) os << "[a=" << a << "]";
  return os.str();
}

}  // namespace

TabularMDP::TabularMDP(Dims dims, std::vector<double> initial_dist, std::vector<double> transitions,
                       std::vector<double> mean_rewards, RewardNoise noise, double reward_max)
    : dims_(dims),
      initial_dist_(std::move(initial_dist)),
      transitions_(std::move(transitions)),
      mean_rewards_(std::move(mean_rewards)),
      noise_(noise),
      reward_max_(reward_max) {
  require_dims(dims_);
  const auto S = static_cast<std::size_t>(dims_.states);
  const auto A = static_cast<std::size_t>(dims_.actions);
  const auto H = static_cast<std::size_t>(dims_.horizon);
  if (!(reward_max_ > 0.0) || !std::isfinite(reward_max_)) throw ConfigError("r_max must be a positive real");

  require_size("d1", initial_dist_.size(), S);
  require_distribution(initial_dist_, "d1");

  require_size("P", transitions_.size(), (H - 1) * S * A * S);
  for (int t = 0; t + 1 < dims_.horizon; ++t)
    for (int s = 0; s < dims_.states; ++s)
      for (int a = 0; a < dims_.actions; ++a) require_distribution(transition(t, s, a), cell_name("P", t, s, a));

  require_size("r", mean_rewards_.size(), H * S * A);
  for (int t = 0; t < dims_.horizon; ++t)
    for (int s = 0; s < dims_.states; ++s)
      for (int a = 0; a < dims_.actions; ++a) {
        const double r = mean_reward(t, s, a);
        if (!(r >= 0.0 && r <= reward_max_)) throw ConfigError(cell_name("r", t, s, a) + " is outside [0, r_max]");
      }

  if (noise_ == RewardNoise::Bernoulli && reward_max_ != 1.0)
    throw ConfigError("Bernoulli reward noise requires r_max = 1");
}

Policy::Policy(Dims dims, std::vector<double> table) : dims_(dims), table_(std::move(table)) {
  require_dims(dims_);
  require_size("policy table", table_.size(),
               static_cast<std::size_t>(dims_.horizon) * dims_.states * dims_.actions);
  for (int t = 0; t < dims_.horizon; ++t)
    for (int s = 0; s < dims_.states; ++s) require_distribution(row(t, s), cell_name("pi", t, s));
}

Policy Policy::uniform(Dims dims) {
  require_dims(dims);
  const std::size_t size = static_cast<std::size_t>(dims.horizon) * dims.states * dims.actions;
  return Policy(dims, std::vector<double>(size, 1.0 / dims.actions));
}

Policy Policy::deterministic(Dims dims, std::span<const int> actions) {
  require_dims(dims);
  require_size("deterministic action table", actions.size(), static_cast<std::size_t>(dims.horizon) * dims.states);
  std::vector<double> table(actions.size() * dims.actions, 0.0);
  for (std::size_t cell = 0; cell < actions.size(); ++cell) {
    if (actions[cell] < 0 || actions[cell] >= dims.actions) throw ConfigError("deterministic action out of range");
    table[cell * dims.actions + actions[cell]] = 1.0;
  }
  return Policy(dims, std::move(table));
}

void require_same_dims(const Dims& expected, const Policy& policy, const char* what) {
  if (policy.dims() != expected) {
    std::ostringstream os;
    os << what << " has dimensions (S=" << policy.dims().states << ", A=" << policy.dims().actions
       << ", H=" << policy.dims().horizon << "), expected (S=" << expected.states << ", A=" << expected.actions
       << ", H=" << expected.horizon << ")";
    throw ConfigError(os.str());
  }
}

void Dataset::append(const Trajectory& episode) {
  if (episode.steps.size() != static_cast<std::size_t>(dims_.horizon)) {
    std::ostringstream os;
    os << "episode has " << episode.steps.size() << " steps, expected H=" << dims_.horizon;
    throw ConfigError(os.str());
  }
  for (const Step& step : episode.steps) {
    if (step.state < 0 || step.state >= dims_.states || step.action < 0 || step.action >= dims_.actions)
      throw ConfigError("episode step has a state or action index out of range");
    if (!std::isfinite(step.reward) || step.reward < 0.0) throw ConfigError("episode reward must be finite and >= 0");
  }
  for (const Step& step : episode.steps) {
    states_.push_back(step.state);
    actions_.push_back(step.action);
    rewards_.push_back(step.reward);
  }
}

void Dataset::reserve(std::size_t episodes) {
  const std::size_t total = episodes * static_cast<std::size_t>(dims_.horizon);
  states_.reserve(total);
  actions_.reserve(total);
  rewards_.reserve(total);
}

Trajectory Dataset::episode(std::size_t i) const {
  Trajectory out;
  out.steps.reserve(static_cast<std::size_t>(dims_.horizon));
  for (int t = 0; t < dims_.horizon; ++t) out.steps.push_back({state(i, t), action(i, t), reward(i, t)});
  return out;
}

int sample_categorical(std::span<const double> probs, CounterRng& rng) noexcept {
  const double u = rng.uniform();
  double cumulative = 0.0;
  int last_positive = 0;
  for (std::size_t k = 0; k < probs.size(); ++k) {
    if (probs[k] <= 0.0) continue;
    cumulative += probs[k];
    last_positive = static_cast<int>(k);
    if (u < cumulative) return last_positive;
  }
  // Rounding left u above the running total; fall back to the last support point.
  return last_positive;
}

Trajectory sample_trajectory(const TabularMDP& mdp, const Policy& policy, CounterRng& rng) {
  require_same_dims(mdp.dims(), policy, "policy");
  const int H = mdp.horizon();
  Trajectory out;
  out.steps.reserve(static_cast<std::size_t>(H));
  int s = sample_categorical(mdp.initial_dist(), rng);
  for (int t = 0; t < H; ++t) {
    const int a = sample_categorical(policy.row(t, s), rng);
    const double mean = mdp.mean_reward(t, s, a);
    double r = mean;
    if (mdp.noise() == RewardNoise::Bernoulli) r = rng.bernoulli(mean) ? 1.0 : 0.0;
    out.steps.push_back({s, a, r});
    if (t + 1 < H) s = sample_categorical(mdp.transition(t, s, a), rng);
  }
  return out;
}

CounterRng episode_stream(std::uint64_t seed, std::size_t index) noexcept {
  return CounterRng(seed).substream(static_cast<std::uint64_t>(index));
}

Dataset sample_dataset(const TabularMDP& mdp, const Policy& policy, std::size_t n, std::uint64_t seed) {
  if (n < 1) throw ConfigError("a dataset needs at least one episode");
  require_same_dims(mdp.dims(), policy, "policy");
  Dataset data(mdp.dims());
  data.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    CounterRng rng = episode_stream(seed, i);
    data.append(sample_trajectory(mdp, policy, rng));
  }
  return data;
}

MarginalDistributions marginal_distributions(const TabularMDP& mdp, const Policy& policy) {
  require_same_dims(mdp.dims(), policy, "policy");
  const Dims d = mdp.dims();
  const auto S = static_cast<std::size_t>(d.states);
  MarginalDistributions out{d, std::vector<double>(d.horizon * S, 0.0),
                            std::vector<double>(d.horizon * S * d.actions, 0.0)};
  std::copy(mdp.initial_dist().begin(), mdp.initial_dist().end(), out.state_marginals.begin());
  for (int t = 0; t < d.horizon; ++t) {
    double* next = t + 1 < d.horizon ? &out.state_marginals[(t + 1) * S] : nullptr;
    for (int s = 0; s < d.states; ++s) {
      const double mass = out.state(t, s);
      for (int a = 0; a < d.actions; ++a) {
        const double joint = mass * policy.prob(t, s, a);
        out.state_action_marginals[(t * S + s) * d.actions + a] = joint;
        if (next == nullptr || joint == 0.0) continue;
        const auto p = mdp.transition(t, s, a);
        for (std::size_t s2 = 0; s2 < S; ++s2) next[s2] += joint * p[s2];
      }
    }
  }
  return out;
}

ValueTables exact_value(const TabularMDP& mdp, const Policy& policy) {
  require_same_dims(mdp.dims(), policy, "policy");
  const Dims d = mdp.dims();
  const auto S = static_cast<std::size_t>(d.states);
  ValueTables out{d, std::vector<double>((d.horizon + 1) * S, 0.0),
                  std::vector<double>(d.horizon * S * d.actions, 0.0), 0.0, 0.0};

  // Backward Bellman recursion with V_H = 0.
  for (int h = d.horizon - 1; h >= 0; --h) {
    for (int s = 0; s < d.states; ++s) {
      double v = 0.0;
      for (int a = 0; a < d.actions; ++a) {
        double q = mdp.mean_reward(h, s, a);
        if (h + 1 < d.horizon) {
          const auto p = mdp.transition(h, s, a);
          for (std::size_t s2 = 0; s2 < S; ++s2) q += p[s2] * out.v_fn[(h + 1) * S + s2];
        }
        out.q_fn[(h * S + s) * d.actions + a] = q;
        v += policy.prob(h, s, a) * q;
      }
      out.v_fn[h * S + s] = v;
    }
  }
  for (int s = 0; s < d.states; ++s) out.policy_value += mdp.initial_dist()[s] * out.v(0, s);

  // Forward route: sum_t <d_t^pi, r_t^pi>.
  const MarginalDistributions marg = marginal_distributions(mdp, policy);
  for (int t = 0; t < d.horizon; ++t)
    for (int s = 0; s < d.states; ++s)
      for (int a = 0; a < d.actions; ++a) out.forward_value += marg.state_action(t, s, a) * mdp.mean_reward(t, s, a);

  const double scale = std::max(1.0, std::abs(out.policy_value));
  if (std::abs(out.policy_value - out.forward_value) > 1e-10 * scale)
    throw std::logic_error("exact_value: backward and forward evaluations disagree");
  return out;
}

DiagnosticRatios diagnostic_ratios(const TabularMDP& mdp, const Policy& mu, const Policy& pi) {
  require_same_dims(mdp.dims(), mu, "logging policy");
  require_same_dims(mdp.dims(), pi, "target policy");
  const Dims d = mdp.dims();
  const MarginalDistributions dmu = marginal_distributions(mdp, mu);
  const MarginalDistributions dpi = marginal_distributions(mdp, pi);

  DiagnosticRatios out;
  out.d_m = std::numeric_limits<double>::infinity();
  out.d_m_sa = std::numeric_limits<double>::infinity();
  for (int t = 0; t < d.horizon; ++t) {
    for (int s = 0; s < d.states; ++s) {
      const double logged = dmu.state(t, s);
      const double target = dpi.state(t, s);
      if (logged == 0.0) {
        if (target > 0.0) {
          std::ostringstream os;
          os << "target policy reaches state " << s << " at t=" << t << " but the logging policy never does";
          throw CoverageError(os.str());
        }
        continue;
      }
      out.d_m = std::min(out.d_m, logged);
      out.tau_s = std::max(out.tau_s, target / logged);
      for (int a = 0; a < d.actions; ++a) {
        const double m = mu.prob(t, s, a);
        const double p = pi.prob(t, s, a);
        if (m == 0.0) {
          if (p > 0.0 && target > 0.0) {
            std::ostringstream os;
            os << "target policy takes action " << a << " at (t=" << t << ", s=" << s
               << ") where the logging policy has zero probability";
            throw CoverageError(os.str());
          }
          continue;
        }
        out.tau_a = std::max(out.tau_a, p / m);
        out.d_m_sa = std::min(out.d_m_sa, dmu.state_action(t, s, a));
      }
    }
  }
  return out;
}

}  // namespace tmis
