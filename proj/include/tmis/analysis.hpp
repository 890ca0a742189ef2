#pragma once

// Closed-form model-side variance quantities.
//
// Per-step sums run over h = 0..H: index 0 is the initial-state boundary
// term Var_{d_1}[V_1(s_1)], index h >= 1 covers time step h-1 in the 0-based
// convention of mdp.hpp. Cells the logging policy never reaches contribute
// nothing (the target cannot reach them either, or diagnostic_ratios throws).

#include <cstddef>
#include <vector>

#include "tmis/mdp.hpp"

namespace tmis {

/// Var[V_{t+1}(s') + r_t | s, a] flat [t][s][a], from the target's values.
std::vector<double> conditional_variances(const TabularMDP& mdp, const ValueTables& values);

/// Asymptotic n * MSE floor:
/// sum_h E_mu[(d^pi(s,a) / d^mu(s,a))^2 Var[V_{h+1}(s') + r_h | s, a]].
double cr_lower_bound(const TabularMDP& mdp, const Policy& mu, const Policy& pi);

/// Per-step terms of cr_lower_bound, length H + 1.
std::vector<double> cr_lower_bound_terms(const TabularMDP& mdp, const Policy& mu, const Policy& pi);

/// Asymptotic n * MSE of State-MIS:
/// sum_h E_mu[(d^pi(s) / d^mu(s))^2 Var_mu[rho (V_{h+1}(s') + r_h) | s]].
double smis_asymptotic_mse(const TabularMDP& mdp, const Policy& mu, const Policy& pi);

struct VarianceReport {
  std::size_t n = 0;
  double crlb_asymptotic = 0.0;
  double smis_asymptotic = 0.0;
  double tmis_bound_leading = 0.0;
  double tmis_bound_higher_order = 0.0;
  std::vector<double> per_timestep_terms;  // length H + 1
  /// Whether n meets the sample-size condition under which the bound holds.
  bool in_regime = false;
  double regime_threshold = 0.0;

  double tmis_bound_total() const noexcept { return tmis_bound_leading + tmis_bound_higher_order; }
};

/// Finite-sample TMIS MSE bound at n episodes:
///   leading = (crlb / n) * (1 + sqrt(16 log n / (n d_m)))
///   higher  = 8 tau_a^2 tau_s H^3 R^2 / (n^2 d_m) + 3 H^3 S A R^2 / n^2
/// Out-of-regime n still yields numbers, with in_regime = false.
VarianceReport tmis_mse_bound(const TabularMDP& mdp, const Policy& mu, const Policy& pi, std::size_t n);

inline constexpr std::size_t kDefaultEnumerationCap = 10'000'000;

/// Law-of-total-variance split of the return variance under pi.
struct VarianceDecomposition {
  /// Var_pi[sum_t r_t], by exhaustive trajectory enumeration.
  double lhs = 0.0;
  /// Var_{d_1}[V_1(s_1)].
  double initial_term = 0.0;
  /// E_pi[Var[r_t + V_{t+1}(s_{t+1}) | s_t, a_t]] per t.
  std::vector<double> within_terms;
  /// E_pi[Var[Q_t(s_t, a_t) | s_t]] per t.
  std::vector<double> across_terms;

  double term_sum() const noexcept;
  double within_total() const noexcept;
};

/// Throws SizeError when (S*A)^H exceeds `cap`.
VarianceDecomposition total_variance_decomposition(const TabularMDP& mdp, const Policy& pi,
                                                   std::size_t cap = kDefaultEnumerationCap);

}  // namespace tmis
