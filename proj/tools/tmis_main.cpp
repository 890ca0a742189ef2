// Command-line front end: simulate, evaluate, sweep, bounds, select-policy,
// and paper-model (writes the benchmark environment as model/policy files).
//
// Errors exit nonzero with {"error": <kind>, "message": <text>} on stderr.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "tmis/analysis.hpp"
#include "tmis/errors.hpp"
#include "tmis/estimators.hpp"
#include "tmis/fictitious.hpp"
#include "tmis/harness.hpp"
#include "tmis/io.hpp"
#include "tmis/mdp.hpp"

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

int fail(const std::string& kind, const std::string& message, int code = 2) {
  std::cerr << json{{"error", kind}, {"message", message}}.dump() << '\n';
  return code;
}

std::string format_scalar(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
  } else {
    tmis::io::write_text_file(path, text);
  }
}

struct SimulateArgs {
  std::string mdp, policy, out, format;
  std::size_t n = 100;
  std::uint64_t seed = 0;
};

struct EvaluateArgs {
  std::string data, pi, mu, mdp, estimator = "tmis";
  int folds = 1;
  std::uint64_t seed = 0;
  double theta = 0.0;
  bool test_oracles = false;
};

struct SweepArgs {
  std::string config, out;
  int workers = -1;
  std::int64_t seed = -1;
  bool no_timing = false;
};

struct BoundsArgs {
  std::string mdp, mu, pi, out;
  std::size_t n = 1024;
  std::uint64_t seed = 0;
};

struct SelectArgs {
  std::string data, mdp, out;
  int folds = 1;
  std::size_t cap = tmis::kDefaultPolicyCap;
  std::uint64_t seed = 0;
};

struct PaperModelArgs {
  int horizon = 100;
  std::uint64_t p_seed = 100;
  std::string out_mdp = "mdp.json", out_mu = "mu.json", out_pi = "pi.json";
};

void run_simulate(const SimulateArgs& a) {
  const tmis::TabularMDP mdp = tmis::io::read_mdp(a.mdp);
  const tmis::Policy policy = tmis::io::read_policy(a.policy);
  const tmis::Dataset data = tmis::sample_dataset(mdp, policy, a.n, a.seed);
  std::string format = a.format;
  if (format.empty()) format = fs::path(a.out).extension() == ".csv" ? "csv" : "jsonl";
  std::ostringstream os;
  if (format == "csv") {
    tmis::io::write_dataset_csv(os, data);
  } else if (format == "jsonl") {
    tmis::io::write_dataset_jsonl(os, data);
  } else {
    throw tmis::ConfigError("unknown dataset format \"" + format + "\" (expected jsonl or csv)");
  }
  emit(a.out, os.str());
}

void run_evaluate(const EvaluateArgs& a) {
  const bool fictitious = a.estimator == "fictitious-tmis";
  if (fictitious && !a.test_oracles)
    throw tmis::ConfigError("fictitious-tmis is a test oracle; pass --enable-test-oracles to use it");

  const tmis::Policy pi = tmis::io::read_policy(a.pi);
  const tmis::Dataset data = tmis::io::read_dataset(a.data, pi.dims().states, pi.dims().actions);
  tmis::require_same_dims(data.dims(), pi, "target policy");

  json diag{{"n", data.size()}, {"H", data.horizon()}};
  double estimate = 0.0;
  if (fictitious) {
    if (a.mu.empty() || a.mdp.empty()) throw tmis::ConfigError("fictitious-tmis needs --mu and --mdp");
    const tmis::Policy mu = tmis::io::read_policy(a.mu);
    const tmis::TabularMDP mdp = tmis::io::read_mdp(a.mdp);
    const double theta = a.theta > 0.0
                             ? a.theta
                             : tmis::oracle::default_theta(data.size(), tmis::diagnostic_ratios(mdp, mu, pi).d_m_sa);
    estimate = tmis::oracle::estimate_fictitious_tmis(data, pi, tmis::oracle::FictitiousConfig(mdp, mu, theta));
    diag["estimator"] = a.estimator;
    diag["theta"] = theta;
  } else {
    const tmis::EstimatorKind kind = tmis::parse_estimator(a.estimator);
    diag["estimator"] = std::string(tmis::estimator_name(kind));
    if (tmis::needs_logging_policy(kind)) {
      if (a.mu.empty()) throw tmis::ConfigError(a.estimator + " needs the logging policy (--mu)");
      const tmis::Policy mu = tmis::io::read_policy(a.mu);
      if (kind == tmis::EstimatorKind::IS) estimate = tmis::estimate_is(data, mu, pi);
      if (kind == tmis::EstimatorKind::StepIS) estimate = tmis::estimate_step_is(data, mu, pi);
      if (kind == tmis::EstimatorKind::SMIS) estimate = tmis::estimate_smis(data, mu, pi);
      const tmis::CumulativeWeights w = tmis::cumulative_weights(data, mu, pi);
      double max_weight = 0.0;
      for (double x : w.rho) max_weight = std::max(max_weight, x);
      diag["max_cumulative_weight"] = max_weight;
    } else {
      if (!a.mu.empty())
        throw tmis::ConfigError(a.estimator + " does not use the logging policy; drop --mu");
      const tmis::SplitConfig split{kind == tmis::EstimatorKind::SplitTMIS ? a.folds : 1};
      estimate = kind == tmis::EstimatorKind::TMIS ? tmis::estimate_tmis(data, pi)
                                                   : tmis::estimate_split_tmis(data, pi, split);
      const tmis::EstimateDiagnostics d = tmis::tmis_diagnostics(tmis::build_empirical_model(data), pi);
      diag["folds"] = split.folds;
      diag["empty_cells"] = d.empty_cells;
      diag["zero_mass_states"] = d.zero_mass_states;
    }
  }
  std::cout << format_scalar(estimate) << '\n' << diag.dump() << '\n';
}

void run_sweep(const SweepArgs& a) {
  const json j = tmis::io::read_json_file(a.config);
  tmis::SweepConfig config = tmis::sweep_config_from_json(j, fs::path(a.config).parent_path().string());
  if (!a.out.empty()) config.output_path = a.out;
  if (a.workers >= 0) config.workers = a.workers;
  if (a.seed >= 0) config.seed = static_cast<std::uint64_t>(a.seed);
  if (a.no_timing) config.record_timing = false;
  if (config.output_path.empty()) throw tmis::ConfigError("sweep needs an output path (config \"output\" or --out)");

  const tmis::SweepResult result = tmis::run_sweep(config);
  std::ostringstream os;
  tmis::write_sweep_csv(os, result);
  emit(config.output_path, os.str());
  for (const tmis::SweepRow& row : result.rows)
    if (row.error)
      std::cerr << json{{"warning", "estimator_failed"},
                        {"estimator", row.estimator},
                        {"H", row.horizon},
                        {"n", row.n},
                        {"message", *row.error}}
                       .dump()
                << '\n';
}

void run_bounds(const BoundsArgs& a) {
  const tmis::TabularMDP mdp = tmis::io::read_mdp(a.mdp);
  const tmis::Policy mu = tmis::io::read_policy(a.mu);
  const tmis::Policy pi = tmis::io::read_policy(a.pi);
  const tmis::VarianceReport r = tmis::tmis_mse_bound(mdp, mu, pi, a.n);
  const json j{{"n", r.n},
               {"crlb_asymptotic", r.crlb_asymptotic},
               {"smis_asymptotic", r.smis_asymptotic},
               {"tmis_bound_leading", r.tmis_bound_leading},
               {"tmis_bound_higher_order", r.tmis_bound_higher_order},
               {"per_timestep_terms", r.per_timestep_terms},
               {"in_regime", r.in_regime},
               {"regime_threshold", r.regime_threshold}};
  emit(a.out, j.dump(2) + "\n");
}

void run_select(const SelectArgs& a) {
  const tmis::TabularMDP mdp = tmis::io::read_mdp(a.mdp);
  const tmis::Dataset data = tmis::io::read_dataset(a.data, mdp.num_states(), mdp.num_actions());
  const tmis::UniformEvaluation u = tmis::uniform_evaluate(data, mdp, tmis::SplitConfig{a.folds}, a.cap);
  json actions = json::array();
  for (int t = 0; t < mdp.horizon(); ++t) {
    json row = json::array();
    for (int s = 0; s < mdp.num_states(); ++s) row.push_back(u.best_actions[t * mdp.num_states() + s]);
    actions.push_back(row);
  }
  const json j{{"sup_error", u.sup_error},
               {"best_estimate", u.best_estimate},
               {"best_actions", actions},
               {"best_policy", tmis::io::to_json(u.best_policy)},
               {"policies_evaluated", u.policies_evaluated}};
  emit(a.out, j.dump(2) + "\n");
}

void run_paper_model(const PaperModelArgs& a) {
  const tmis::Instance inst = tmis::build_paper_mdp(a.horizon, a.p_seed);
  tmis::io::write_text_file(a.out_mdp, tmis::io::to_json(inst.mdp).dump() + "\n");
  tmis::io::write_text_file(a.out_mu, tmis::io::to_json(inst.logging).dump() + "\n");
  tmis::io::write_text_file(a.out_pi, tmis::io::to_json(inst.target).dump() + "\n");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tabular off-policy evaluation toolkit"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Sample a dataset from a model under a policy");
  simulate->add_option("--mdp", sim.mdp, "Model JSON")->required()->check(CLI::ExistingFile);
  simulate->add_option("--policy", sim.policy, "Behaviour policy JSON")->required()->check(CLI::ExistingFile);
  simulate->add_option("--n", sim.n, "Number of episodes")->check(CLI::PositiveNumber);
  simulate->add_option("--seed", sim.seed, "Master seed; episode i uses the substream (seed, i)");
  simulate->add_option("--out", sim.out, "Output path, '-' for stdout")->required();
  simulate->add_option("--format", sim.format, "jsonl or csv (default: from the --out extension)");

  EvaluateArgs ev;
  auto* evaluate = app.add_subcommand("evaluate", "Run one estimator on a dataset file");
  evaluate->add_option("--data", ev.data, "Dataset (.jsonl or .csv)")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--pi", ev.pi, "Target policy JSON")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--estimator", ev.estimator, "is, step-is, smis, tmis or split-tmis");
  evaluate->add_option("--mu", ev.mu, "Logging policy JSON (is, step-is and smis only)")->check(CLI::ExistingFile);
  evaluate->add_option("--folds", ev.folds, "Fold count N for split-tmis")->check(CLI::PositiveNumber);
  evaluate->add_option("--seed", ev.seed, "Accepted for uniformity; estimators are deterministic");
  evaluate->add_option("--mdp", ev.mdp, "True model (fictitious-tmis test oracle only)")->check(CLI::ExistingFile);
  evaluate->add_option("--theta", ev.theta, "Fictitious threshold in (0,1); 0 picks the default rule");
  evaluate->add_flag("--enable-test-oracles", ev.test_oracles, "Allow --estimator fictitious-tmis");

  SweepArgs sw;
  auto* sweep = app.add_subcommand("sweep", "Macro-replicated RMSE sweep written as CSV");
  sweep->add_option("--config", sw.config, "Sweep config JSON")->required()->check(CLI::ExistingFile);
  sweep->add_option("--out", sw.out, "CSV path (overrides the config's \"output\")");
  sweep->add_option("--workers", sw.workers, "OpenMP threads (-1: from config, 0: runtime default)");
  sweep->add_option("--seed", sw.seed, "Master seed (-1: from config)");
  sweep->add_flag("--no-timing", sw.no_timing, "Write wall_seconds as 0 for byte-stable output");

  BoundsArgs bd;
  auto* bounds = app.add_subcommand("bounds", "Asymptotic variances and the finite-sample TMIS MSE bound");
  bounds->add_option("--mdp", bd.mdp, "Model JSON")->required()->check(CLI::ExistingFile);
  bounds->add_option("--mu", bd.mu, "Logging policy JSON")->required()->check(CLI::ExistingFile);
  bounds->add_option("--pi", bd.pi, "Target policy JSON")->required()->check(CLI::ExistingFile);
  bounds->add_option("--n", bd.n, "Episode count for the finite-sample bound")->check(CLI::PositiveNumber);
  bounds->add_option("--seed", bd.seed, "Accepted for uniformity; the report is deterministic");
  bounds->add_option("--out", bd.out, "Output path, '-' for stdout");

  SelectArgs sel;
  auto* select = app.add_subcommand("select-policy", "Split-TMIS over all deterministic policies");
  select->add_option("--data", sel.data, "Dataset (.jsonl or .csv)")->required()->check(CLI::ExistingFile);
  select->add_option("--mdp", sel.mdp, "True model JSON, for the sup error")->required()->check(CLI::ExistingFile);
  select->add_option("--folds", sel.folds, "Fold count N")->check(CLI::PositiveNumber);
  select->add_option("--cap", sel.cap, "Maximum number of policies to enumerate");
  select->add_option("--seed", sel.seed, "Accepted for uniformity; the search is deterministic");
  select->add_option("--out", sel.out, "Output path, '-' for stdout");

  PaperModelArgs pm;
  auto* paper = app.add_subcommand("paper-model", "Write the two-state benchmark model and policies");
  paper->add_option("--H", pm.horizon, "Horizon (even, >= 2)");
  paper->add_option("--p-seed", pm.p_seed, "Seed of the risky-action sequence");
  paper->add_option("--out-mdp", pm.out_mdp, "Model output path");
  paper->add_option("--out-mu", pm.out_mu, "Logging policy output path");
  paper->add_option("--out-pi", pm.out_pi, "Target policy output path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    return fail("usage", e.what(), e.get_exit_code());
  }

  try {
    if (*simulate) run_simulate(sim);
    if (*evaluate) run_evaluate(ev);
    if (*sweep) run_sweep(sw);
    if (*bounds) run_bounds(bd);
    if (*select) run_select(sel);
    if (*paper) run_paper_model(pm);
  } catch (const tmis::Error& e) {
    return fail(e.kind(), e.what());
  } catch (const std::exception& e) {
    return fail("internal", e.what(), 3);
  }
  return 0;
}
