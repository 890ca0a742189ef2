#include "tmis/estimators.hpp"

#include <sstream>

#include "tmis/errors.hpp"

namespace tmis {
namespace {

void require_nonempty(const Dataset& data) {
  if (data.empty()) throw ConfigError("dataset has no episodes");
}

double single_ratio(const Policy& mu, const Policy& pi, int t, int s, int a) {
  const double m = mu.prob(t, s, a);
  if (m <= 0.0) {
    std::ostringstream os;
    os << "logging policy has mu(a=" << a << " | s=" << s << ") = 0 at t=" << t
       << " but that action appears in the data";
    throw InvalidLoggingPolicyError(os.str());
  }
  return pi.prob(t, s, a) / m;
}

}  // namespace

EmpiricalModel build_empirical_model(const Dataset& data) { return build_empirical_model(data, 0, data.size()); }

EmpiricalModel build_empirical_model(const Dataset& data, std::size_t first, std::size_t count) {
  require_nonempty(data);
  if (count == 0 || first + count > data.size()) throw ConfigError("episode range is empty or out of bounds");
  const Dims d = data.dims();
  const auto S = static_cast<std::size_t>(d.states);
  const auto H = static_cast<std::size_t>(d.horizon);
  const std::size_t cells = H * S * d.actions;

  EmpiricalModel m;
  m.dims = d;
  m.n = count;
  m.counts_sa.assign(cells, 0);
  m.counts_s.assign(H * S, 0);
  m.p_hat.assign((H - 1) * S * d.actions * S, 0.0);
  m.r_hat.assign(cells, 0.0);
  m.d_mu_hat.assign(H * S, 0.0);

  for (std::size_t i = first; i < first + count; ++i) {
    for (int t = 0; t < d.horizon; ++t) {
      const int s = data.state(i, t);
      const int a = data.action(i, t);
      const std::size_t c = m.sa_index(t, s, a);
      ++m.counts_sa[c];
      ++m.counts_s[m.s_index(t, s)];
      m.r_hat[c] += data.reward(i, t);
      if (t + 1 < d.horizon) m.p_hat[c * S + data.state(i, t + 1)] += 1.0;
    }
  }

  const double inv_n = 1.0 / static_cast<double>(count);
  for (std::size_t k = 0; k < m.counts_s.size(); ++k) m.d_mu_hat[k] = static_cast<double>(m.counts_s[k]) * inv_n;
  for (std::size_t c = 0; c < cells; ++c) {
    if (m.counts_sa[c] == 0) continue;
    const double inv = 1.0 / static_cast<double>(m.counts_sa[c]);
    m.r_hat[c] *= inv;
    if (c < (H - 1) * S * d.actions)
      for (std::size_t s2 = 0; s2 < S; ++s2) m.p_hat[c * S + s2] *= inv;
  }
  return m;
}

double evaluate_tmis(const EmpiricalModel& model, const Policy& pi, std::vector<double>* marginals) {
  require_same_dims(model.dims, pi, "target policy");
  const Dims d = model.dims;
  const auto S = static_cast<std::size_t>(d.states);

  std::vector<double> current(model.d_mu_hat.begin(), model.d_mu_hat.begin() + static_cast<std::ptrdiff_t>(S));
  std::vector<double> next(S);
  if (marginals != nullptr) marginals->assign(static_cast<std::size_t>(d.horizon) * S, 0.0);

  double value = 0.0;
  for (int t = 0; t < d.horizon; ++t) {
    if (marginals != nullptr) std::copy(current.begin(), current.end(), marginals->begin() + t * S);
    std::fill(next.begin(), next.end(), 0.0);
    for (int s = 0; s < d.states; ++s) {
      const double mass = current[s];
      if (mass == 0.0) continue;
      for (int a = 0; a < d.actions; ++a) {
        const double w = mass * pi.prob(t, s, a);
        if (w == 0.0) continue;
        value += w * model.reward(t, s, a);
        if (t + 1 < d.horizon) {
          const auto p = model.transition(t, s, a);
          for (std::size_t s2 = 0; s2 < S; ++s2) next[s2] += w * p[s2];
        }
      }
    }
    current.swap(next);
  }
  return value;
}

double estimate_tmis(const Dataset& data, const Policy& pi) {
  require_same_dims(data.dims(), pi, "target policy");
  return evaluate_tmis(build_empirical_model(data), pi);
}

EstimateDiagnostics tmis_diagnostics(const EmpiricalModel& model, const Policy& pi) {
  std::vector<double> marginals;
  evaluate_tmis(model, pi, &marginals);
  EstimateDiagnostics out;
  for (std::int64_t c : model.counts_sa)
    if (c == 0) ++out.empty_cells;
  out.zero_mass_states.assign(static_cast<std::size_t>(model.dims.horizon), 0);
  for (int t = 0; t < model.dims.horizon; ++t)
    for (int s = 0; s < model.dims.states; ++s)
      if (marginals[model.s_index(t, s)] == 0.0) ++out.zero_mass_states[t];
  return out;
}

CumulativeWeights cumulative_weights(const Dataset& data, const Policy& mu, const Policy& pi) {
  require_nonempty(data);
  require_same_dims(data.dims(), mu, "logging policy");
  require_same_dims(data.dims(), pi, "target policy");
  CumulativeWeights w{data.size(), data.horizon(), std::vector<double>(data.size() * data.horizon())};
  for (std::size_t i = 0; i < data.size(); ++i) {
    double running = 1.0;
    for (int t = 0; t < data.horizon(); ++t) {
      running *= single_ratio(mu, pi, t, data.state(i, t), data.action(i, t));
      w.rho[i * data.horizon() + t] = running;
    }
  }
  return w;
}

double estimate_is(const Dataset& data, const Policy& mu, const Policy& pi) {
  const CumulativeWeights w = cumulative_weights(data, mu, pi);
  const int H = data.horizon();
  double total = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    double ret = 0.0;
    for (int t = 0; t < H; ++t) ret += data.reward(i, t);
    total += w.at(i, H - 1) * ret;
  }
  return total / static_cast<double>(data.size());
}

double estimate_step_is(const Dataset& data, const Policy& mu, const Policy& pi) {
  const CumulativeWeights w = cumulative_weights(data, mu, pi);
  double total = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    double ret = 0.0;
    for (int t = 0; t < data.horizon(); ++t) ret += w.at(i, t) * data.reward(i, t);
    total += ret;
  }
  return total / static_cast<double>(data.size());
}

double estimate_smis(const Dataset& data, const Policy& mu, const Policy& pi) {
  require_nonempty(data);
  require_same_dims(data.dims(), mu, "logging policy");
  require_same_dims(data.dims(), pi, "target policy");
  const Dims d = data.dims();
  const auto S = static_cast<std::size_t>(d.states);
  const std::size_t n = data.size();

  // Per step: weighted reward sums and weighted transition counts out of
  // each state, both with the single-step ratio at the source step.
  std::vector<std::int64_t> visits(S);
  std::vector<double> reward_sum(S);
  std::vector<double> flow(S * S);
  std::vector<double> d_pi(S, 0.0);
  std::vector<double> next(S);

  for (std::size_t i = 0; i < n; ++i) d_pi[data.state(i, 0)] += 1.0;
  for (double& x : d_pi) x /= static_cast<double>(n);

  double value = 0.0;
  for (int t = 0; t < d.horizon; ++t) {
    std::fill(visits.begin(), visits.end(), 0);
    std::fill(reward_sum.begin(), reward_sum.end(), 0.0);
    std::fill(flow.begin(), flow.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const int s = data.state(i, t);
      const double rho = single_ratio(mu, pi, t, s, data.action(i, t));
      ++visits[s];
      reward_sum[s] += rho * data.reward(i, t);
      if (t + 1 < d.horizon) flow[s * S + data.state(i, t + 1)] += rho;
    }
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t s = 0; s < S; ++s) {
      if (visits[s] == 0) continue;
      const double inv = 1.0 / static_cast<double>(visits[s]);
      value += d_pi[s] * reward_sum[s] * inv;
      if (t + 1 < d.horizon)
        for (std::size_t s2 = 0; s2 < S; ++s2) next[s2] += d_pi[s] * flow[s * S + s2] * inv;
    }
    d_pi.swap(next);
  }
  return value;
}

std::vector<std::pair<std::size_t, std::size_t>> fold_ranges(std::size_t n, SplitConfig split) {
  if (split.folds < 1 || static_cast<std::size_t>(split.folds) > n) {
    std::ostringstream os;
    os << "split-TMIS needs 1 <= folds <= n (folds=" << split.folds << ", n=" << n << ")";
    throw ConfigError(os.str());
  }
  const auto N = static_cast<std::size_t>(split.folds);
  const std::size_t M = n / N;
  std::vector<std::pair<std::size_t, std::size_t>> out;
  out.reserve(N);
  for (std::size_t k = 0; k < N; ++k) out.emplace_back(k * M, k + 1 == N ? n - k * M : M);
  return out;
}

double estimate_split_tmis(const Dataset& data, const Policy& pi, SplitConfig split) {
  require_nonempty(data);
  require_same_dims(data.dims(), pi, "target policy");
  const auto folds = fold_ranges(data.size(), split);
  if (folds.size() == 1) return evaluate_tmis(build_empirical_model(data), pi);
  double total = 0.0;
  for (const auto& [first, count] : folds) total += evaluate_tmis(build_empirical_model(data, first, count), pi);
  return total / static_cast<double>(folds.size());
}

}  // namespace tmis
