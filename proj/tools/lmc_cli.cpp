// Command-line front end: plan, sample, couple, sweep, plot, audit, run.
#include "lmc/harness.hpp"
#include "lmc/plan.hpp"
#include "lmc/potentials.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

using namespace lmc;

namespace {

struct Flags {
  std::string config, name, potential, output_dir, reference;
  std::optional<double> epsilon, delta, substep, practical_scale, friction_c, horizon;
  std::optional<std::uint64_t> ensemble, seed, n, max_steps, reference_size;
  std::optional<int> projections, checkpoints, resamples;
  std::vector<double> x0, deltas;
  bool no_write = false;
};

json parse_potential(const std::string& s) {
  std::string text = s;
  if (!s.empty() && s[0] != '{') {
    std::ifstream in(s);
    if (!in) throw UsageError("--potential: neither inline JSON nor a readable file: " + s);
    std::stringstream ss;
    ss << in.rdbuf();
    text = ss.str();
  }
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw UsageError(std::string("--potential: ") + e.what());
  }
}

void add_common(CLI::App* app, Flags& f, bool with_config = true) {
  if (with_config) app->add_option("--config", f.config, "TOML or JSON config; flags override its fields")->check(CLI::ExistingFile);
  app->add_option("--name", f.name, "experiment name (output file stem)");
  app->add_option("--potential", f.potential, "potential spec: inline JSON or a JSON file");
  app->add_option("--epsilon", f.epsilon, "target accuracy");
  app->add_option("--ensemble", f.ensemble, "chains, pairs or trajectories");
  app->add_option("--seed", f.seed, "master seed");
  app->add_option("--x0", f.x0, "start point")->expected(1, -1);
  app->add_option("--output-dir", f.output_dir, "output directory")->envname("LMC_OUTPUT_DIR");
  app->add_option("--reference", f.reference, "CSV of reference samples")->check(CLI::ExistingFile);
  app->add_option("--delta", f.delta, "step size override");
  app->add_option("--n", f.n, "iteration count override");
  app->add_option("--substep", f.substep, "inner integrator step");
  app->add_option("--projections", f.projections, "sliced-distance projections");
  app->add_option("--practical-scale", f.practical_scale, "planner scale in (0, 1]");
  app->add_option("--friction-c", f.friction_c, "underdamped friction constant c");
  app->add_option("--horizon", f.horizon, "simulated time");
  app->add_option("--checkpoints", f.checkpoints, "recorded checkpoints");
  app->add_option("--deltas", f.deltas, "sweep step sizes, decreasing")->expected(1, -1);
  app->add_option("--max-steps", f.max_steps, "per-chain step budget");
  app->add_option("--reference-size", f.reference_size, "exact reference sample count");
  app->add_option("--resamples", f.resamples, "bootstrap resamples per checkpoint");
  app->add_flag("--no-write", f.no_write, "print the report without writing files");
}

ExperimentConfig build_config(const Flags& f, const std::string& sampler) {
  ExperimentConfig c;
  if (!f.config.empty()) c = load_config(f.config);
  if (!sampler.empty()) c.sampler = sampler;
  if (!f.name.empty()) c.name = f.name;
  if (!f.potential.empty()) c.potential = parse_potential(f.potential);
  if (f.epsilon) c.epsilon = *f.epsilon;
  if (f.ensemble) c.ensemble = *f.ensemble;
  if (f.seed) c.seed = *f.seed;
  if (!f.x0.empty()) c.x0 = f.x0;
  if (!f.output_dir.empty()) c.output_dir = f.output_dir;
  if (!f.reference.empty()) c.reference = f.reference;
  auto& o = c.overrides;
  if (f.delta) o.delta = f.delta;
  if (f.n) o.n = f.n;
  if (f.substep) o.substep = f.substep;
  if (f.projections) o.projections = f.projections;
  if (f.practical_scale) o.practical_scale = f.practical_scale;
  if (f.friction_c) o.friction_c = f.friction_c;
  if (f.horizon) o.horizon = f.horizon;
  if (f.checkpoints) o.checkpoints = f.checkpoints;
  if (!f.deltas.empty()) o.deltas = f.deltas;
  if (f.max_steps) o.max_steps = f.max_steps;
  if (f.reference_size) o.reference_size = f.reference_size;
  if (f.resamples) o.resamples = f.resamples;
  if (c.potential.is_null()) throw UsageError("no potential given (--potential or config)");
  return c;
}

int execute(const ExperimentConfig& c, bool write) {
  auto out = run_experiment(c, write);
  std::cout << out.report.dump(2) << '\n';
  for (const auto& w : out.report["warnings"]) std::cerr << "warning: " << w.get<std::string>() << '\n';
  for (const auto& p : out.files) std::cerr << "wrote " << p.string() << '\n';
  return out.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Langevin sampler experiments"};
  app.set_version_flag("--version", software_version());
  app.require_subcommand(1);

  Flags f;
  std::string mode = "od", sampler_for_plan = "od", report_path, plot_dir, run_path;
  std::uint64_t audit_pairs = 20000;

  auto* plan = app.add_subcommand("plan", "print the step size and iteration count");
  plan->add_option("--potential", f.potential, "potential spec")->required();
  plan->add_option("--sampler", sampler_for_plan, "od or ud")->check(CLI::IsMember({"od", "ud"}));
  plan->add_option("--epsilon", f.epsilon, "target accuracy")->required();
  plan->add_option("--practical-scale", f.practical_scale, "planner scale in (0, 1]");

  auto* sample = app.add_subcommand("sample", "run an ensemble and track distance to the target");
  add_common(sample, f);
  sample->add_option("--sampler", mode, "od or ud")->check(CLI::IsMember({"od", "ud"}));

  auto* couple = app.add_subcommand("couple", "run a coupling experiment");
  add_common(couple, f);
  couple->add_option("--sampler", mode, "od or ud")->check(CLI::IsMember({"od", "ud"}));

  auto* sweep = app.add_subcommand("sweep", "step-size error sweep");
  add_common(sweep, f);
  sweep->add_option("--sampler", mode, "od or ud")->check(CLI::IsMember({"od", "ud"}));

  auto* plot = app.add_subcommand("plot", "SVG figures from a report");
  plot->add_option("report", report_path, "report JSON")->required()->check(CLI::ExistingFile);
  plot->add_option("--out", plot_dir, "directory for the figures (default: next to the report)");

  auto* audit = app.add_subcommand("audit", "check the declared L, m, R of a potential");
  audit->add_option("--potential", f.potential, "potential spec")->required();
  audit->add_option("--pairs", audit_pairs, "random pairs");
  audit->add_option("--seed", f.seed, "seed");

  auto* run = app.add_subcommand("run", "run a config file as is");
  run->add_option("config", run_path, "TOML or JSON config")->required()->check(CLI::ExistingFile);
  run->add_option("--output-dir", f.output_dir, "output directory")->envname("LMC_OUTPUT_DIR");
  run->add_flag("--no-write", f.no_write, "print the report without writing files");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (*plan) {
      const auto U = make_potential(parse_potential(f.potential));
      const double s = f.practical_scale.value_or(1.0);
      const auto p = sampler_for_plan == "od" ? plan_overdamped(*U, *f.epsilon, U->dim(), s)
                                              : plan_underdamped(*U, *f.epsilon, U->dim(), s);
      std::cout << p.to_json().dump(2) << '\n';
      return 0;
    }
    if (*sample) return execute(build_config(f, mode), !f.no_write);
    if (*couple) return execute(build_config(f, "coupled-" + mode), !f.no_write);
    if (*sweep) return execute(build_config(f, "discretization-" + mode), !f.no_write);
    if (*plot) {
      const auto out = emit_plots(report_path, plot_dir);
      for (const auto& w : out.warnings) std::cerr << "warning: " << w << '\n';
      for (const auto& p : out.files) std::cout << p.string() << '\n';
      return 0;
    }
    if (*audit) {
      const auto U = make_potential(parse_potential(f.potential));
      AuditOptions opt;
      opt.pair_budget = audit_pairs;
      opt.seed = f.seed.value_or(0);
      const auto rep = audit_constants(*U, opt);
      std::cout << rep.to_json().dump(2) << '\n';
      return rep.passed() ? 0 : 2;
    }
    if (*run) {
      auto c = load_config(run_path);
      if (!f.output_dir.empty() && c.output_dir.empty()) c.output_dir = f.output_dir;
      return execute(c, !f.no_write);
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << '\n';
    return 3;
  }
  return 1;
}
