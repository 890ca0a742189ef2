#include "tmis/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "tmis/errors.hpp"
#include "tmis/numeric.hpp"

namespace tmis {
namespace {

double initial_value_variance(const TabularMDP& mdp, const ValueTables& values) {
  const auto d1 = mdp.initial_dist();
  double var = 0.0;
  for (int s = 0; s < mdp.num_states(); ++s) {
    const double dev = values.v(0, s) - values.policy_value;
    var += d1[s] * dev * dev;
  }
  return var;
}

struct Ingredients {
  ValueTables values;
  MarginalDistributions d_mu;
  MarginalDistributions d_pi;
  std::vector<double> cond_var;
  DiagnosticRatios ratios;
};

Ingredients ingredients(const TabularMDP& mdp, const Policy& mu, const Policy& pi) {
  DiagnosticRatios ratios = diagnostic_ratios(mdp, mu, pi);
  ValueTables values = exact_value(mdp, pi);
  std::vector<double> cond = conditional_variances(mdp, values);
  return {std::move(values), marginal_distributions(mdp, mu), marginal_distributions(mdp, pi), std::move(cond),
          ratios};
}

// (d^pi(s)^2 / d^mu(s)) * sum_a pi^2 / mu * Var[. | s, a] at one (t, s).
double efficient_cell(const Ingredients& in, const Policy& mu, const Policy& pi, int t, int s) {
  const Dims& d = in.values.dims;
  const double logged = in.d_mu.state(t, s);
  const double target = in.d_pi.state(t, s);
  if (logged == 0.0 || target == 0.0) return 0.0;
  double inner = 0.0;
  for (int a = 0; a < d.actions; ++a) {
    const double m = mu.prob(t, s, a);
    const double p = pi.prob(t, s, a);
    if (m == 0.0 || p == 0.0) continue;
    inner += p * p / m * in.cond_var[(static_cast<std::size_t>(t) * d.states + s) * d.actions + a];
  }
  return target * target / logged * inner;
}

}  // namespace

std::vector<double> conditional_variances(const TabularMDP& mdp, const ValueTables& values) {
  const Dims d = mdp.dims();
  const auto S = static_cast<std::size_t>(d.states);
  std::vector<double> out(static_cast<std::size_t>(d.horizon) * S * d.actions, 0.0);
  for (int t = 0; t < d.horizon; ++t)
    for (int s = 0; s < d.states; ++s)
      for (int a = 0; a < d.actions; ++a) {
        double var = mdp.reward_variance(t, s, a);
        if (t + 1 < d.horizon) {
          const auto p = mdp.transition(t, s, a);
          double mean = 0.0;
          for (std::size_t s2 = 0; s2 < S; ++s2) mean += p[s2] * values.v(t + 1, static_cast<int>(s2));
          for (std::size_t s2 = 0; s2 < S; ++s2) {
            const double dev = values.v(t + 1, static_cast<int>(s2)) - mean;
            var += p[s2] * dev * dev;
          }
        }
        out[(t * S + s) * d.actions + a] = var;
      }
  return out;
}

std::vector<double> cr_lower_bound_terms(const TabularMDP& mdp, const Policy& mu, const Policy& pi) {
  const Ingredients in = ingredients(mdp, mu, pi);
  const Dims d = mdp.dims();
  std::vector<double> terms(static_cast<std::size_t>(d.horizon) + 1, 0.0);
  terms[0] = initial_value_variance(mdp, in.values);
  for (int t = 0; t < d.horizon; ++t)
    for (int s = 0; s < d.states; ++s) terms[t + 1] += efficient_cell(in, mu, pi, t, s);
  return terms;
}

double cr_lower_bound(const TabularMDP& mdp, const Policy& mu, const Policy& pi) {
  const auto terms = cr_lower_bound_terms(mdp, mu, pi);
  return pairwise_sum(terms);
}

double smis_asymptotic_mse(const TabularMDP& mdp, const Policy& mu, const Policy& pi) {
  const Ingredients in = ingredients(mdp, mu, pi);
  const Dims d = mdp.dims();
  std::vector<double> terms(static_cast<std::size_t>(d.horizon) + 1, 0.0);
  terms[0] = initial_value_variance(mdp, in.values);
  for (int t = 0; t < d.horizon; ++t) {
    for (int s = 0; s < d.states; ++s) {
      const double logged = in.d_mu.state(t, s);
      const double target = in.d_pi.state(t, s);
      if (logged == 0.0 || target == 0.0) continue;
      // Var_mu[rho Q | s] = sum_a mu (rho Q - V)^2, since E_mu[rho Q | s] = V.
      const double v = in.values.v(t, s);
      double spread = 0.0;
      for (int a = 0; a < d.actions; ++a) {
        const double m = mu.prob(t, s, a);
        if (m == 0.0) continue;
        const double dev = pi.prob(t, s, a) / m * in.values.q(t, s, a) - v;
        spread += m * dev * dev;
      }
      terms[t + 1] += efficient_cell(in, mu, pi, t, s) + target * target / logged * spread;
    }
  }
  return pairwise_sum(terms);
}

VarianceReport tmis_mse_bound(const TabularMDP& mdp, const Policy& mu, const Policy& pi, std::size_t n) {
  if (n < 1) throw ConfigError("tmis_mse_bound needs n >= 1");
  const Dims d = mdp.dims();
  const DiagnosticRatios ratios = diagnostic_ratios(mdp, mu, pi);

  VarianceReport r;
  r.n = n;
  r.per_timestep_terms = cr_lower_bound_terms(mdp, mu, pi);
  r.crlb_asymptotic = pairwise_sum(r.per_timestep_terms);
  r.smis_asymptotic = smis_asymptotic_mse(mdp, mu, pi);

  const double nn = static_cast<double>(n);
  const double log_n = std::log(nn);
  const double H3 = std::pow(static_cast<double>(d.horizon), 3);
  const double R2 = mdp.reward_max() * mdp.reward_max();
  r.tmis_bound_leading = r.crlb_asymptotic / nn * (1.0 + std::sqrt(16.0 * log_n / (nn * ratios.d_m)));
  r.tmis_bound_higher_order = 8.0 * ratios.tau_a * ratios.tau_a * ratios.tau_s * H3 * R2 / (nn * nn * ratios.d_m) +
                              3.0 * H3 * d.states * d.actions * R2 / (nn * nn);

  // n > max(16 log n / min d^mu(s,a), 4 H tau_a tau_s / min_{t,s} max(d^pi, d^mu)).
  const MarginalDistributions d_mu = marginal_distributions(mdp, mu);
  const MarginalDistributions d_pi = marginal_distributions(mdp, pi);
  double min_max = std::numeric_limits<double>::infinity();
  for (int t = 0; t < d.horizon; ++t)
    for (int s = 0; s < d.states; ++s) {
      const double m = std::max(d_mu.state(t, s), d_pi.state(t, s));
      if (m > 0.0) min_max = std::min(min_max, m);
    }
  r.regime_threshold =
      std::max(16.0 * log_n / ratios.d_m_sa, 4.0 * d.horizon * ratios.tau_a * ratios.tau_s / min_max);
  r.in_regime = nn > r.regime_threshold;
  return r;
}

double VarianceDecomposition::term_sum() const noexcept {
  double total = initial_term;
  for (std::size_t t = 0; t < within_terms.size(); ++t) total += within_terms[t] + across_terms[t];
  return total;
}

double VarianceDecomposition::within_total() const noexcept {
  double total = 0.0;
  for (double x : within_terms) total += x;
  return total;
}

namespace {

// Depth-first walk over every (s_1, a_1, ..., s_H, a_H) with positive
// probability. Each visit reports (weight, sum of mean rewards, sum of
// reward variances) for a complete path.
template <class Visit>
void enumerate_paths(const TabularMDP& mdp, const Policy& pi, int t, int s, double weight, double mean_sum,
                     double var_sum, Visit& visit) {
  const int H = mdp.horizon();
  for (int a = 0; a < mdp.num_actions(); ++a) {
    const double wa = weight * pi.prob(t, s, a);
    if (wa == 0.0) continue;
    const double m = mean_sum + mdp.mean_reward(t, s, a);
    const double v = var_sum + mdp.reward_variance(t, s, a);
    if (t + 1 == H) {
      visit(wa, m, v);
      continue;
    }
    const auto p = mdp.transition(t, s, a);
    for (int s2 = 0; s2 < mdp.num_states(); ++s2)
      if (p[s2] > 0.0) enumerate_paths(mdp, pi, t + 1, s2, wa * p[s2], m, v, visit);
  }
}

}  // namespace

VarianceDecomposition total_variance_decomposition(const TabularMDP& mdp, const Policy& pi, std::size_t cap) {
  require_same_dims(mdp.dims(), pi, "policy");
  const Dims d = mdp.dims();

  const double per_step = static_cast<double>(d.states) * d.actions;
  const double paths = std::pow(per_step, d.horizon);
  if (paths > static_cast<double>(cap)) {
    std::ostringstream os;
    os << "exact variance enumeration needs (S*A)^H = " << paths << " paths, above the cap of " << cap;
    throw SizeError(os.str());
  }

  VarianceDecomposition out;

  // Direct route: two passes over all paths (mean, then centred second moment).
  double mean = 0.0;
  auto first = [&](double w, double m, double) { mean += w * m; };
  for (int s = 0; s < d.states; ++s)
    if (mdp.initial_dist()[s] > 0.0) enumerate_paths(mdp, pi, 0, s, mdp.initial_dist()[s], 0.0, 0.0, first);
  double second = 0.0;
  auto centred = [&](double w, double m, double v) { second += w * ((m - mean) * (m - mean) + v); };
  for (int s = 0; s < d.states; ++s)
    if (mdp.initial_dist()[s] > 0.0) enumerate_paths(mdp, pi, 0, s, mdp.initial_dist()[s], 0.0, 0.0, centred);
  out.lhs = second;

  // Recursive route from the Bellman tables.
  const ValueTables values = exact_value(mdp, pi);
  const MarginalDistributions marg = marginal_distributions(mdp, pi);
  const std::vector<double> cond = conditional_variances(mdp, values);
  out.initial_term = initial_value_variance(mdp, values);
  out.within_terms.assign(static_cast<std::size_t>(d.horizon), 0.0);
  out.across_terms.assign(static_cast<std::size_t>(d.horizon), 0.0);
  for (int t = 0; t < d.horizon; ++t)
    for (int s = 0; s < d.states; ++s) {
      const double v = values.v(t, s);
      double spread = 0.0;
      for (int a = 0; a < d.actions; ++a) {
        out.within_terms[t] += marg.state_action(t, s, a) * cond[(static_cast<std::size_t>(t) * d.states + s) * d.actions + a];
        const double dev = values.q(t, s, a) - v;
        spread += pi.prob(t, s, a) * dev * dev;
      }
      out.across_terms[t] += marg.state(t, s) * spread;
    }
  return out;
}

}  // namespace tmis
