// Command-line front end: simulate, experiment, oracle-check.

#include <CLI11.hpp>

#include <exception>
#include <iostream>
#include <string>

#include "agmec/agmec.hpp"

namespace {

agmec::SimConfig load(const std::string& path)
{
  return path.empty() ? agmec::full_profile() : agmec::load_config(path);
}

int oracle_check()
{
  const auto r = agmec::run_oracle_suite();
  const bool exact_ok = r.exact_residual < 1e-9;
  const bool learned_ok = r.learned_residual < 0.05;
  const bool tiny_ok = r.tiny_policy.fraction() >= 0.95;
  const bool random_ok = r.random_policy.fraction() >= 0.95;
  auto mark = [](bool ok) { return ok ? "PASS" : "FAIL"; };
  std::cout << "tiny instance: " << r.tiny_states << " states, " << r.tiny_pairs << " feasible pairs\n"
            << mark(exact_ok) << " value-iteration consistency residual " << r.exact_residual << '\n'
            << mark(r.contraction) << " value-iteration sweeps contract by gamma\n"
            << mark(learned_ok) << " tabular consistency residual " << r.learned_residual << '\n'
            << mark(tiny_ok) << " tiny-instance policy match " << r.tiny_policy.matched << '/'
            << r.tiny_policy.compared << '\n'
            << mark(random_ok) << " random-MDP policy match " << r.random_policy.matched << '/'
            << r.random_policy.compared << '\n';
  return exact_ok && r.contraction && learned_ok && tiny_ok && random_ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv)
{
  CLI::App app{"AoI-aware air-ground MEC simulator"};
  app.require_subcommand(1);

  std::string config_path, scheme = "deeprl", out_dir, kind;
  long epochs = 0;
  std::uint64_t seed = 0;
  bool seed_set = false;

  auto* sim = app.add_subcommand("simulate", "run one scheme and write metrics");
  sim->add_option("--config", config_path, "key=value config file (default: full profile)");
  sim->add_option("--scheme", scheme, "deeprl|local|server|uav|greedy")
      ->check(CLI::IsMember({"deeprl", "local", "server", "uav", "greedy"}));
  sim->add_option("--epochs", epochs, "override the epoch count")->check(CLI::PositiveNumber);
  sim->add_option_function<std::uint64_t>(
      "--seed", [&](std::uint64_t s) { seed = s, seed_set = true; }, "override the RNG seed");
  sim->add_option("--out", out_dir, "output directory")->required();

  auto* exp = app.add_subcommand("experiment", "run a parameter sweep");
  exp->add_option("--kind", kind, "convergence|lambda|channels")
      ->required()
      ->check(CLI::IsMember({"convergence", "lambda", "channels"}));
  exp->add_option("--config", config_path, "key=value config file (default: full profile)");
  exp->add_option("--out", out_dir, "output directory")->required();

  auto* oracle = app.add_subcommand("oracle-check", "tabular learning vs value iteration");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sim) {
      auto cfg = load(config_path);
      if (epochs > 0) cfg.run.epochs = epochs;
      if (seed_set) cfg.world.seed = seed;
      cfg.run.scheme = scheme;
      agmec::validate(cfg);
      const auto s = agmec::simulate_to(cfg, agmec::parse_scheme(scheme), out_dir);
      std::cout << scheme << ": avg AoI " << s.aoi << " s, avg energy " << s.energy << " J, avg utility "
                << s.utility << " (epochs " << s.first_epoch << '-' << s.last_epoch << ")\n";
      return 0;
    }
    if (*exp) {
      agmec::run_experiment(agmec::parse_experiment(kind), load(config_path), out_dir);
      std::cout << "wrote " << kind << " results to " << out_dir << '\n';
      return 0;
    }
    if (*oracle) return oracle_check();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
