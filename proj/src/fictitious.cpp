#include "tmis/fictitious.hpp"

#include <algorithm>
#include <cmath>

#include "tmis/errors.hpp"

namespace tmis::oracle {

double default_theta(std::size_t n, double d_m_sa) {
  const double nn = static_cast<double>(n);
  if (!(d_m_sa > 0.0) || n < 2) return 0.5;
  return std::min(0.5, std::sqrt(4.0 * std::log(nn) / (nn * d_m_sa)));
}

FictitiousConfig::FictitiousConfig(const TabularMDP& mdp, const Policy& logging, double theta)
    : mdp_(&mdp), logging_(&logging), theta_(theta) {
  if (!(theta > 0.0 && theta < 1.0)) throw ConfigError("fictitious theta must lie in (0, 1)");
  d_mu_sa_ = marginal_distributions(mdp, logging).state_action_marginals;
}

EmpiricalModel fictitious_model(const EmpiricalModel& model, const FictitiousConfig& config) {
  const TabularMDP& mdp = config.mdp();
  if (mdp.dims() != model.dims) throw ConfigError("fictitious config model does not match the data dimensions");
  const Dims d = model.dims;
  const double n = static_cast<double>(model.n);
  EmpiricalModel out = model;
  for (int t = 0; t < d.horizon; ++t)
    for (int s = 0; s < d.states; ++s)
      for (int a = 0; a < d.actions; ++a) {
        const std::size_t c = model.sa_index(t, s, a);
        const double threshold = n * config.logging_marginals()[c] * (1.0 - config.theta());
        if (static_cast<double>(model.counts_sa[c]) >= threshold) continue;
        out.r_hat[c] = mdp.mean_reward(t, s, a);
        if (t + 1 < d.horizon) {
          const auto truth = mdp.transition(t, s, a);
          std::copy(truth.begin(), truth.end(), out.transition(t, s, a).begin());
        }
      }
  return out;
}

double estimate_fictitious_tmis(const Dataset& data, const Policy& pi, const FictitiousConfig& config) {
  require_same_dims(data.dims(), pi, "target policy");
  return evaluate_tmis(fictitious_model(build_empirical_model(data), config), pi);
}

}  // namespace tmis::oracle
