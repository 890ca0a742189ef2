#pragma once

// Fictitious TMIS: TMIS with the true P and r substituted at every (t, s, a)
// whose count falls below n * d_t^mu(s, a) * (1 - theta). It needs the true
// model and logging policy, so it serves only as an unbiased reference for
// tests and the acceptance suite.

#include <vector>

#include "tmis/estimators.hpp"
#include "tmis/mdp.hpp"

namespace tmis::oracle {

/// theta = min(1/2, sqrt(4 log n / (n * d_m_sa))).
double default_theta(std::size_t n, double d_m_sa);

class FictitiousConfig {
 public:
  /// Throws ConfigError unless 0 < theta < 1. The model and logging policy
  /// must outlive the config.
  FictitiousConfig(const TabularMDP& mdp, const Policy& logging, double theta);

  const TabularMDP& mdp() const noexcept { return *mdp_; }
  const Policy& logging() const noexcept { return *logging_; }
  double theta() const noexcept { return theta_; }
  /// d_t^mu(s, a) flat [t][s][a].
  const std::vector<double>& logging_marginals() const noexcept { return d_mu_sa_; }

 private:
  const TabularMDP* mdp_;
  const Policy* logging_;
  double theta_;
  std::vector<double> d_mu_sa_;
};

/// Replaces under-visited cells of `model` with the truth.
EmpiricalModel fictitious_model(const EmpiricalModel& model, const FictitiousConfig& config);

double estimate_fictitious_tmis(const Dataset& data, const Policy& pi, const FictitiousConfig& config);

}  // namespace tmis::oracle
