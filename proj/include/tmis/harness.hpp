#pragma once

// Experiment orchestration: the two-state benchmark environment, macro-
// replicated RMSE sweeps, and uniform evaluation over deterministic policies.
//
// run_sweep spreads (cell, replication) work items over OpenMP threads;
// run_sweep_serial is the plain-loop reference it is tested against. Both
// derive every dataset from (seed, estimator, n, H, replication) and reduce
// squared errors in index order, so their rows agree bitwise apart from
// wall_seconds.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "tmis/estimators.hpp"
#include "tmis/mdp.hpp"

namespace tmis {

enum class EstimatorKind { IS, StepIS, SMIS, TMIS, SplitTMIS };

std::string_view estimator_name(EstimatorKind kind) noexcept;
/// Accepts "is", "step-is", "smis", "tmis", "split-tmis"; throws ConfigError.
EstimatorKind parse_estimator(std::string_view name);
bool needs_logging_policy(EstimatorKind kind) noexcept;

/// A model with its logging and target policies.
struct Instance {
  TabularMDP mdp;
  Policy logging;
  Policy target;
};

/// Two states (s0 = 0 absorbing, s1 = 1) and two actions. At each transition
/// out of step t a uniform draw p_t (stream keyed by p_seed) picks the risky
/// action at s1: action 0 if p_t < 0.5, else action 1. The risky action moves
/// s1 -> s0 with probability 2/H; the other keeps s1. Reward 1 in s0 at
/// 1-based steps t > H/2, else 0. Episodes start in s1. Logging is uniform;
/// the target plays (1/4, 3/4) at s1 and is uniform at s0.
/// Throws ConfigError unless H >= 2 is even.
Instance build_paper_mdp(int horizon, std::uint64_t p_seed = 100);

/// The per-transition risky action used by build_paper_mdp, length H-1.
std::vector<int> paper_risky_actions(int horizon, std::uint64_t p_seed);

/// S = A = 1, reward `reward` at every step: all estimators are exact on it.
Instance single_path_instance(int horizon, double reward = 1.0);

/// How split-TMIS chooses its fold count from n.
struct FoldRule {
  enum class Kind { Fixed, Sqrt };
  Kind kind = Kind::Sqrt;
  int folds = 1;

  /// Fixed: min(folds, n). Sqrt: N = floor(sqrt(n)), so folds hold about sqrt(n) episodes.
  SplitConfig for_size(std::size_t n) const;
};

/// Evaluates one estimator on one dataset. TMIS-family estimators ignore
/// the instance's logging policy.
double run_estimator(EstimatorKind kind, const Dataset& data, const Instance& instance, const FoldRule& folds);

struct SweepConfig {
  std::vector<EstimatorKind> estimators{EstimatorKind::TMIS, EstimatorKind::SMIS};
  std::vector<std::size_t> n_values{128, 256, 512, 1024, 2048, 4096, 8192};
  std::vector<int> horizons{100};
  std::size_t replications = 100;
  std::uint64_t seed = 0;
  FoldRule fold_rule;
  /// Builds the instance for a horizon; defaults to build_paper_mdp(H, 100).
  std::function<Instance(int)> environment;
  std::string output_path;
  /// OpenMP thread count; 0 keeps the runtime default.
  int workers = 0;
  /// When false, wall_seconds is written as 0 so outputs are byte-stable.
  bool record_timing = true;
};

struct SweepRow {
  std::string estimator;
  int horizon = 0;
  std::size_t n = 0;
  std::size_t replications = 0;
  double mean_estimate = 0.0;
  double true_value = 0.0;
  double rmse = 0.0;
  double relative_rmse = 0.0;
  double wall_seconds = 0.0;
  /// Set when an estimator precondition failed in any replication; the
  /// numeric fields are then NaN.
  std::optional<std::string> error;
};

struct SweepResult {
  std::vector<SweepRow> rows;
};

/// Throws ConfigError on empty grids, K = 0 or unknown environments.
void validate(const SweepConfig& config);

std::uint64_t replication_seed(std::uint64_t master, EstimatorKind kind, std::size_t n, int horizon,
                               std::size_t replication) noexcept;

SweepResult run_sweep(const SweepConfig& config);
SweepResult run_sweep_serial(const SweepConfig& config);

struct ErrorSummary {
  double mean_estimate = 0.0;
  double rmse = 0.0;
};

/// sqrt(sum_k (v_k - truth)^2 / K) with index-ordered pairwise summation.
ErrorSummary summarize_errors(std::span<const double> estimates, double truth);

inline constexpr std::string_view kSweepCsvHeader =
    "estimator,H,n,K,mean_estimate,true_value,rmse,relative_rmse,wall_seconds";

void write_sweep_csv(std::ostream& out, const SweepResult& result);

/// Reads the sweep JSON schema (see README). Relative model paths resolve
/// against `base_dir`.
SweepConfig sweep_config_from_json(const nlohmann::json& j, const std::string& base_dir = ".");

inline constexpr std::size_t kDefaultPolicyCap = 1'000'000;

/// A^(H*S), or SizeError if it exceeds `cap`.
std::size_t deterministic_policy_count(const Dims& dims, std::size_t cap = kDefaultPolicyCap);

struct UniformEvaluation {
  double sup_error = 0.0;
  Policy best_policy;
  /// Action per (t, s), flat [t][s], of best_policy.
  std::vector<int> best_actions;
  double best_estimate = 0.0;
  std::size_t policies_evaluated = 0;
};

/// Split-TMIS over every deterministic nonstationary policy: the largest
/// |v_hat - v| and the argmax of v_hat (ties go to the lexicographically
/// smallest action table in (t, s) order).
UniformEvaluation uniform_evaluate(const Dataset& data, const TabularMDP& mdp, SplitConfig split,
                                   std::size_t cap = kDefaultPolicyCap);

}  // namespace tmis
