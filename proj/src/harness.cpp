#include "tmis/harness.hpp"

#include <omp.h>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <limits>
#include <ostream>
#include <sstream>

#include "tmis/errors.hpp"
#include "tmis/io.hpp"
#include "tmis/numeric.hpp"
#include "tmis/rng.hpp"

namespace tmis {

std::string_view estimator_name(EstimatorKind kind) noexcept {
  switch (kind) {
    case EstimatorKind::IS: return "is";
    case EstimatorKind::StepIS: return "step-is";
    case EstimatorKind::SMIS: return "smis";
    case EstimatorKind::TMIS: return "tmis";
    case EstimatorKind::SplitTMIS: return "split-tmis";
  }
  return "unknown";
}

EstimatorKind parse_estimator(std::string_view name) {
  for (EstimatorKind k : {EstimatorKind::IS, EstimatorKind::StepIS, EstimatorKind::SMIS, EstimatorKind::TMIS,
                          EstimatorKind::SplitTMIS})
    if (estimator_name(k) == name) return k;
  throw ConfigError("unknown estimator \"" + std::string(name) + "\" (expected is, step-is, smis, tmis, split-tmis)");
}

bool needs_logging_policy(EstimatorKind kind) noexcept {
  return kind == EstimatorKind::IS || kind == EstimatorKind::StepIS || kind == EstimatorKind::SMIS;
}

std::vector<int> paper_risky_actions(int horizon, std::uint64_t p_seed) {
  CounterRng rng(derive_key({p_seed}));
  std::vector<int> out;
  for (int t = 0; t + 1 < horizon; ++t) out.push_back(rng.uniform() < 0.5 ? 0 : 1);
  return out;
}

Instance build_paper_mdp(int horizon, std::uint64_t p_seed) {
  if (horizon < 2 || horizon % 2 != 0) throw ConfigError("the benchmark environment needs an even H >= 2");
  constexpr int S = 2, A = 2;
  constexpr int s0 = 0, s1 = 1;
  const Dims dims{S, A, horizon};
  const double leave = 2.0 / horizon;

  const std::vector<int> risky = paper_risky_actions(horizon, p_seed);
  std::vector<double> P(static_cast<std::size_t>(horizon - 1) * S * A * S, 0.0);
  auto p = [&](int t, int s, int a, int next) -> double& { return P[((t * S + s) * A + a) * S + next]; };
  for (int t = 0; t + 1 < horizon; ++t) {
    for (int a = 0; a < A; ++a) {
      p(t, s0, a, s0) = 1.0;
      if (a == risky[t]) {
        p(t, s1, a, s0) = leave;
        p(t, s1, a, s1) = 1.0 - leave;
      } else {
        p(t, s1, a, s1) = 1.0;
      }
    }
  }

  std::vector<double> r(static_cast<std::size_t>(horizon) * S * A, 0.0);
  for (int t = horizon / 2; t < horizon; ++t)
    for (int a = 0; a < A; ++a) r[(t * S + s0) * A + a] = 1.0;

  std::vector<double> target(static_cast<std::size_t>(horizon) * S * A);
  for (int t = 0; t < horizon; ++t) {
    target[(t * S + s0) * A + 0] = 0.5;
    target[(t * S + s0) * A + 1] = 0.5;
    target[(t * S + s1) * A + 0] = 0.25;
    target[(t * S + s1) * A + 1] = 0.75;
  }

  return Instance{TabularMDP(dims, {0.0, 1.0}, std::move(P), std::move(r), RewardNoise::Deterministic, 1.0),
                  Policy::uniform(dims), Policy(dims, std::move(target))};
}

Instance single_path_instance(int horizon, double reward) {
  const Dims dims{1, 1, horizon};
  const auto H = static_cast<std::size_t>(horizon < 1 ? 0 : horizon);
  return Instance{TabularMDP(dims, {1.0}, std::vector<double>(H > 0 ? H - 1 : 0, 1.0), std::vector<double>(H, reward),
                             RewardNoise::Deterministic, std::max(1.0, reward)),
                  Policy::uniform(dims), Policy::uniform(dims)};
}

SplitConfig FoldRule::for_size(std::size_t n) const {
  if (kind == Kind::Sqrt) {
    auto N = static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(n))));
    while ((N + 1) * (N + 1) <= n) ++N;
    while (N * N > n) --N;
    return SplitConfig{static_cast<int>(std::max<std::size_t>(N, 1))};
  }
  if (folds < 1) throw ConfigError("fixed fold count must be >= 1");
  return SplitConfig{static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(folds), n))};
}

double run_estimator(EstimatorKind kind, const Dataset& data, const Instance& instance, const FoldRule& folds) {
  switch (kind) {
    case EstimatorKind::IS: return estimate_is(data, instance.logging, instance.target);
    case EstimatorKind::StepIS: return estimate_step_is(data, instance.logging, instance.target);
    case EstimatorKind::SMIS: return estimate_smis(data, instance.logging, instance.target);
    case EstimatorKind::TMIS: return estimate_tmis(data, instance.target);
    case EstimatorKind::SplitTMIS: return estimate_split_tmis(data, instance.target, folds.for_size(data.size()));
  }
  throw ConfigError("unknown estimator");
}

void validate(const SweepConfig& config) {
  if (config.estimators.empty()) throw ConfigError("sweep needs at least one estimator");
  if (config.n_values.empty()) throw ConfigError("sweep needs a nonempty n grid");
  if (config.horizons.empty()) throw ConfigError("sweep needs a nonempty H grid");
  if (config.replications < 1) throw ConfigError("sweep needs K >= 1 replications");
  for (std::size_t n : config.n_values)
    if (n < 1) throw ConfigError("every n in the grid must be >= 1");
  for (int h : config.horizons)
    if (h < 1) throw ConfigError("every H in the grid must be >= 1");
  if (config.workers < 0) throw ConfigError("workers must be >= 0");
}

std::uint64_t replication_seed(std::uint64_t master, EstimatorKind kind, std::size_t n, int horizon,
                               std::size_t replication) noexcept {
  return derive_key({master, hash_name(estimator_name(kind)), static_cast<std::uint64_t>(n),
                     static_cast<std::uint64_t>(horizon), static_cast<std::uint64_t>(replication)});
}

ErrorSummary summarize_errors(std::span<const double> estimates, double truth) {
  std::vector<double> sq(estimates.size());
  for (std::size_t k = 0; k < estimates.size(); ++k) sq[k] = (estimates[k] - truth) * (estimates[k] - truth);
  const double K = static_cast<double>(estimates.size());
  return {pairwise_sum(estimates) / K, std::sqrt(pairwise_sum(sq) / K)};
}

namespace {

struct Cell {
  EstimatorKind kind;
  std::size_t n;
  std::size_t horizon_index;
};

// Everything a work item reads; built serially before any fan-out.
struct Plan {
  std::vector<Instance> instances;
  std::vector<double> true_values;
  std::vector<Cell> cells;
  std::size_t replications = 0;
};

Plan make_plan(const SweepConfig& config) {
  validate(config);
  Plan plan;
  plan.replications = config.replications;
  for (int h : config.horizons) {
    Instance inst = config.environment ? config.environment(h) : build_paper_mdp(h, 100);
    if (inst.mdp.horizon() != h) throw ConfigError("environment returned a model with the wrong horizon");
    plan.true_values.push_back(exact_value(inst.mdp, inst.target).policy_value);
    plan.instances.push_back(std::move(inst));
  }
  for (EstimatorKind kind : config.estimators)
    for (std::size_t hi = 0; hi < config.horizons.size(); ++hi)
      for (std::size_t n : config.n_values) plan.cells.push_back({kind, n, hi});
  return plan;
}

struct ItemOutcome {
  double estimate = 0.0;
  double seconds = 0.0;
  std::string error;
};

// One replication of one cell. Pure apart from timing.
ItemOutcome run_item(const SweepConfig& config, const Plan& plan, std::size_t item) {
  using clock = std::chrono::steady_clock;
  const Cell& cell = plan.cells[item / plan.replications];
  const std::size_t rep = item % plan.replications;
  const Instance& inst = plan.instances[cell.horizon_index];
  const int horizon = config.horizons[cell.horizon_index];

  ItemOutcome out;
  const auto start = clock::now();
  try {
    const std::uint64_t seed = replication_seed(config.seed, cell.kind, cell.n, horizon, rep);
    const Dataset data = sample_dataset(inst.mdp, inst.logging, cell.n, seed);
    out.estimate = run_estimator(cell.kind, data, inst, config.fold_rule);
  } catch (const std::exception& e) {
    out.estimate = std::numeric_limits<double>::quiet_NaN();
    out.error = e.what();
  }
  out.seconds = std::chrono::duration<double>(clock::now() - start).count();
  return out;
}

SweepResult reduce(const SweepConfig& config, const Plan& plan, const std::vector<ItemOutcome>& items) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  SweepResult result;
  const std::size_t K = plan.replications;
  for (std::size_t c = 0; c < plan.cells.size(); ++c) {
    const Cell& cell = plan.cells[c];
    SweepRow row;
    row.estimator = std::string(estimator_name(cell.kind));
    row.horizon = config.horizons[cell.horizon_index];
    row.n = cell.n;
    row.replications = K;
    row.true_value = plan.true_values[cell.horizon_index];

    std::vector<double> estimates(K);
    std::vector<double> seconds(K);
    for (std::size_t k = 0; k < K; ++k) {
      const ItemOutcome& item = items[c * K + k];
      estimates[k] = item.estimate;
      seconds[k] = item.seconds;
      if (!row.error && !item.error.empty()) row.error = item.error;
    }
    row.wall_seconds = config.record_timing ? pairwise_sum(seconds) : 0.0;
    if (row.error) {
      row.mean_estimate = row.rmse = row.relative_rmse = nan;
    } else {
      const ErrorSummary summary = summarize_errors(estimates, row.true_value);
      row.mean_estimate = summary.mean_estimate;
      row.rmse = summary.rmse;
      row.relative_rmse = row.true_value > 0.0 ? row.rmse / row.true_value : nan;
    }
    result.rows.push_back(std::move(row));
  }
  return result;
}

}  // namespace

SweepResult run_sweep(const SweepConfig& config) {
  const Plan plan = make_plan(config);
  const auto total = static_cast<std::ptrdiff_t>(plan.cells.size() * plan.replications);
  std::vector<ItemOutcome> items(static_cast<std::size_t>(total));
  const int threads = config.workers > 0 ? config.workers : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
  for (std::ptrdiff_t i = 0; i < total; ++i) items[i] = run_item(config, plan, static_cast<std::size_t>(i));
  return reduce(config, plan, items);
}

SweepResult run_sweep_serial(const SweepConfig& config) {
  const Plan plan = make_plan(config);
  const std::size_t total = plan.cells.size() * plan.replications;
  std::vector<ItemOutcome> items;
  items.reserve(total);
  for (std::size_t i = 0; i < total; ++i) items.push_back(run_item(config, plan, i));
  return reduce(config, plan, items);
}

namespace {

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

}  // namespace

void write_sweep_csv(std::ostream& out, const SweepResult& result) {
  out << kSweepCsvHeader << '\n';
  for (const SweepRow& row : result.rows) {
    out << row.estimator << ',' << row.horizon << ',' << row.n << ',' << row.replications << ','
        << format_number(row.mean_estimate) << ',' << format_number(row.true_value) << ','
        << format_number(row.rmse) << ',' << format_number(row.relative_rmse) << ','
        << format_number(row.wall_seconds) << '\n';
  }
}

SweepConfig sweep_config_from_json(const nlohmann::json& j, const std::string& base_dir) {
  if (!j.is_object()) throw ConfigError("sweep config must be a JSON object");
  static const std::vector<std::string> known{"estimators", "n_values", "horizons", "replications", "seed",
                                              "folds",      "environment", "output", "workers", "record_timing"};
  for (const auto& [key, _] : j.items())
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw ConfigError("unknown sweep config field \"" + key + "\"");

  SweepConfig c;
  try {
    if (j.contains("estimators")) {
      c.estimators.clear();
      for (const auto& e : j.at("estimators")) c.estimators.push_back(parse_estimator(e.get<std::string>()));
    }
    if (j.contains("n_values")) c.n_values = j.at("n_values").get<std::vector<std::size_t>>();
    if (j.contains("horizons")) c.horizons = j.at("horizons").get<std::vector<int>>();
    if (j.contains("replications")) c.replications = j.at("replications").get<std::size_t>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("workers")) c.workers = j.at("workers").get<int>();
    if (j.contains("record_timing")) c.record_timing = j.at("record_timing").get<bool>();
    if (j.contains("output")) c.output_path = j.at("output").get<std::string>();
    if (j.contains("folds")) {
      const auto& f = j.at("folds");
      if (f.is_string() && f.get<std::string>() == "sqrt") {
        c.fold_rule = FoldRule{FoldRule::Kind::Sqrt, 1};
      } else if (f.is_number_integer()) {
        c.fold_rule = FoldRule{FoldRule::Kind::Fixed, f.get<int>()};
        if (c.fold_rule.folds < 1) throw ConfigError("folds must be >= 1");
      } else {
        throw ConfigError("folds must be \"sqrt\" or a positive integer");
      }
    }

    std::string kind = "paper";
    nlohmann::json env = nlohmann::json::object();
    if (j.contains("environment")) {
      env = j.at("environment");
      kind = env.value("kind", "paper");
    }
    if (kind == "paper") {
      const std::uint64_t p_seed = env.value("p_seed", std::uint64_t{100});
      c.environment = [p_seed](int h) { return build_paper_mdp(h, p_seed); };
    } else if (kind == "single-path") {
      c.environment = [](int h) { return single_path_instance(h); };
    } else if (kind == "files") {
      const std::filesystem::path base(base_dir);
      auto resolve = [&](const char* key) {
        if (!env.contains(key)) throw ConfigError(std::string("files environment needs \"") + key + "\"");
        std::filesystem::path p = env.at(key).get<std::string>();
        return p.is_relative() ? base / p : p;
      };
      auto shared = std::make_shared<Instance>(
          Instance{io::read_mdp(resolve("mdp")), io::read_policy(resolve("mu")), io::read_policy(resolve("pi"))});
      require_same_dims(shared->mdp.dims(), shared->logging, "logging policy");
      require_same_dims(shared->mdp.dims(), shared->target, "target policy");
      c.environment = [shared](int h) {
        if (h != shared->mdp.horizon())
          throw ConfigError("H grid value " + std::to_string(h) + " does not match the model file's H=" +
                            std::to_string(shared->mdp.horizon()));
        return *shared;
      };
    } else {
      throw ConfigError("unknown environment kind \"" + kind + "\" (expected paper, single-path, files)");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("sweep config: ") + e.what());
  }
  validate(c);
  return c;
}

std::size_t deterministic_policy_count(const Dims& dims, std::size_t cap) {
  const int cells = dims.horizon * dims.states;
  std::size_t count = 1;
  for (int k = 0; k < cells; ++k) {
    if (count > cap / static_cast<std::size_t>(dims.actions)) {
      std::ostringstream os;
      os << "A^(H*S) = " << dims.actions << "^" << cells << " deterministic policies exceed the cap of " << cap;
      throw SizeError(os.str());
    }
    count *= static_cast<std::size_t>(dims.actions);
  }
  if (count > cap) {
    std::ostringstream os;
    os << "A^(H*S) = " << count << " deterministic policies exceed the cap of " << cap;
    throw SizeError(os.str());
  }
  return count;
}

UniformEvaluation uniform_evaluate(const Dataset& data, const TabularMDP& mdp, SplitConfig split, std::size_t cap) {
  if (data.dims() != mdp.dims()) throw ConfigError("dataset dimensions do not match the model");
  const Dims dims = mdp.dims();
  const std::size_t count = deterministic_policy_count(dims, cap);

  std::vector<EmpiricalModel> folds;
  for (const auto& [first, size] : fold_ranges(data.size(), split))
    folds.push_back(build_empirical_model(data, first, size));

  const std::size_t cells = static_cast<std::size_t>(dims.horizon) * dims.states;
  std::vector<int> actions(cells, 0);
  std::optional<UniformEvaluation> best;
  double sup_error = 0.0;

  // Odometer over action tables with cell 0 as the most significant digit,
  // so codes come out in lexicographic order.
  for (std::size_t code = 0; code < count; ++code) {
    const Policy policy = Policy::deterministic(dims, actions);
    double estimate = 0.0;
    for (const EmpiricalModel& m : folds) estimate += evaluate_tmis(m, policy);
    estimate /= static_cast<double>(folds.size());
    const double truth = exact_value(mdp, policy).policy_value;
    sup_error = std::max(sup_error, std::abs(estimate - truth));
    if (!best || estimate > best->best_estimate) best = UniformEvaluation{0.0, policy, actions, estimate, 0};

    for (std::size_t k = cells; k-- > 0;) {
      if (++actions[k] < dims.actions) break;
      actions[k] = 0;
    }
  }
  best->sup_error = sup_error;
  best->policies_evaluated = count;
  return *best;
}

}  // namespace tmis
