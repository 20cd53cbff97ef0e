#include <CLI11.hpp>

#include <iostream>

#include "isopimc/commands.hpp"

int main(int argc, char** argv) {
  using namespace isopimc;
  CLI::App app{"Path-integral Monte Carlo isotope effects"};
  app.require_subcommand(1);

  CommandOptions options;
  std::uint64_t seed = 0;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", options.config, "Study configuration (YAML)")
        ->required();
    sub->add_option("--seed-override", seed, "Replace the configured master seed");
    sub->add_option("--jobs", options.jobs, "Parallel workers")
        ->check(CLI::PositiveNumber);
    sub->add_option("--out-dir", options.out_dir, "Output directory");
  };
  auto* eie = app.add_subcommand("eie", "Isotope effects by thermodynamic integration");
  auto* converge = app.add_subcommand("converge", "Trotter-number convergence table");
  auto* oracle = app.add_subcommand("oracle", "Exact 1D references and order fits");
  auto* harmonic = app.add_subcommand("harmonic", "Harmonic-approximation table");
  for (auto* sub : {eie, converge, oracle, harmonic}) add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }
  for (auto* sub : {eie, converge, oracle, harmonic}) {
    if (sub->count("--seed-override")) options.seed_override = seed;
  }

  return run_guarded(
      [&] {
        if (*eie) return cmd_eie(options, std::cout);
        if (*converge) return cmd_converge(options, std::cout);
        if (*oracle) return cmd_oracle(options, std::cout);
        return cmd_harmonic(options, std::cout);
      },
      std::cerr);
}
