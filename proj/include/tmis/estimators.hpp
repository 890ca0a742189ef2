#pragma once

// Off-policy value estimators over a logged Dataset.
//
// Tabular-MIS (TMIS) fits the per-step empirical model (counts, P_hat,
// r_hat) and pushes the empirical initial distribution through it under the
// target policy; it never looks at the logging policy. State-MIS (SMIS) and
// the two importance-sampling baselines need the logging probabilities.

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "tmis/mdp.hpp"

namespace tmis {

/// Count-based estimate of the model from a range of episodes. Cells that
/// were never visited keep zero transitions and zero rewards; every
/// estimator below inherits that convention from here.
struct EmpiricalModel {
  Dims dims;
  std::size_t n = 0;
  std::vector<std::int64_t> counts_sa;  // [t][s][a]
  std::vector<std::int64_t> counts_s;   // [t][s]
  std::vector<double> p_hat;            // [t][s][a][s'], t < H-1
  std::vector<double> r_hat;            // [t][s][a]
  std::vector<double> d_mu_hat;         // [t][s]

  std::size_t sa_index(int t, int s, int a) const noexcept {
    return (static_cast<std::size_t>(t) * dims.states + s) * dims.actions + a;
  }
  std::size_t s_index(int t, int s) const noexcept { return static_cast<std::size_t>(t) * dims.states + s; }

  std::int64_t count(int t, int s, int a) const noexcept { return counts_sa[sa_index(t, s, a)]; }
  std::int64_t count(int t, int s) const noexcept { return counts_s[s_index(t, s)]; }
  double reward(int t, int s, int a) const noexcept { return r_hat[sa_index(t, s, a)]; }
  std::span<const double> transition(int t, int s, int a) const noexcept {
    const auto S = static_cast<std::size_t>(dims.states);
    return {p_hat.data() + sa_index(t, s, a) * S, S};
  }
  std::span<double> transition(int t, int s, int a) noexcept {
    const auto S = static_cast<std::size_t>(dims.states);
    return {p_hat.data() + sa_index(t, s, a) * S, S};
  }
};

EmpiricalModel build_empirical_model(const Dataset& data);
/// Model from episodes [first, first + count).
EmpiricalModel build_empirical_model(const Dataset& data, std::size_t first, std::size_t count);

/// Advisory counters reported next to an estimate.
struct EstimateDiagnostics {
  std::size_t empty_cells = 0;               // (t, s, a) with n_{s,a} = 0
  std::vector<std::size_t> zero_mass_states; // per t: states with d_hat_t^pi(s) = 0
};

/// Forward pass of the TMIS recursion on a fitted (or patched) model.
/// `marginals`, when non-null, receives d_hat_t^pi flat [t][s].
double evaluate_tmis(const EmpiricalModel& model, const Policy& pi, std::vector<double>* marginals = nullptr);

double estimate_tmis(const Dataset& data, const Policy& pi);

EstimateDiagnostics tmis_diagnostics(const EmpiricalModel& model, const Policy& pi);

/// rho[i][t] = prod_{t' <= t} pi(a_t'|s_t') / mu(a_t'|s_t').
struct CumulativeWeights {
  std::size_t episodes = 0;
  int horizon = 0;
  std::vector<double> rho;

  double at(std::size_t i, int t) const noexcept { return rho[i * static_cast<std::size_t>(horizon) + t]; }
};

/// Throws InvalidLoggingPolicyError naming the first observed (t, s, a)
/// where mu is zero.
CumulativeWeights cumulative_weights(const Dataset& data, const Policy& mu, const Policy& pi);

double estimate_is(const Dataset& data, const Policy& mu, const Policy& pi);
double estimate_step_is(const Dataset& data, const Policy& mu, const Policy& pi);

double estimate_smis(const Dataset& data, const Policy& mu, const Policy& pi);

/// Split-TMIS fold layout. Folds take consecutive episodes in index order,
/// each of size floor(n / N); the remainder joins the last fold.
struct SplitConfig {
  int folds = 1;
};

/// (first, count) per fold. Throws ConfigError unless 1 <= N <= n.
std::vector<std::pair<std::size_t, std::size_t>> fold_ranges(std::size_t n, SplitConfig split);

/// Mean of per-fold TMIS estimates.
double estimate_split_tmis(const Dataset& data, const Policy& pi, SplitConfig split);

}  // namespace tmis
