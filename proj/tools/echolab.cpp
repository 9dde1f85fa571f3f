// echolab: command-line front end for the photon-echo decoherence toolkit.
#include <CLI11.hpp>
#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "echolab/commands.hpp"
#include "echolab/error.hpp"

int main(int argc, char** argv) {
  using namespace echolab;
  CLI::App app{"Photon-echo decoherence analysis"};
  app.set_version_flag("--version", std::string(kVersion));

  std::string command;
  std::vector<std::string> inputs;
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  std::string tm_variant;
  int divisor = 0;
  bool allow = false;
  bool quiet = false;

  app.add_option("command", command, "simulate | fit-decay | fit-sweep | extract-traces | estimate | table1")
      ->required()
      ->check(CLI::IsMember({"simulate", "fit-decay", "fit-sweep", "extract-traces", "estimate", "table1"}));
  app.add_option("inputs", inputs, "input files (command dependent)");
  app.add_option("--config", config_path, "JSON run configuration");
  app.add_option("--out", out_dir, "output directory");
  auto* seed_opt = app.add_option("--seed", seed, "master seed");
  app.add_option("--tm-variant", tm_variant, "phase-memory expression")->check(CLI::IsMember({"paper", "sqrt"}));
  app.add_option("--thermal-divisor", divisor, "divisor in tanh/coth arguments")->check(CLI::IsMember({1, 2}));
  app.add_flag("--allow-nonconverged", allow, "exit 0 even if a fit does not converge");
  app.add_flag("-q,--quiet", quiet, "do not print the report table");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(ExitCode::kValidation);
  }

  try {
    RunConfig cfg = config_path.empty() ? RunConfig{} : RunConfig::load(config_path);
    for (const auto& p : inputs) cfg.inputs.emplace_back(p);
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (*seed_opt) cfg.seed = seed;
    if (!tm_variant.empty())
      cfg.model.tm_variant = tm_variant == "paper" ? TmVariant::kLiteral : TmVariant::kSqrtCorrected;
    if (divisor) cfg.model.thermal_divisor = divisor;
    if (allow) cfg.allow_nonconverged = true;

    const Report report = run_command(command, cfg);
    write_report(report, cfg);
    if (!quiet) std::cout << report.table;
    if (report.exit_code != ExitCode::kSuccess)
      std::cerr << "echolab: a fit did not converge (use --allow-nonconverged to accept)\n";
    return static_cast<int>(report.exit_code);
  } catch (const Error& e) {
    std::cerr << "echolab: " << e.what() << '\n';
    return static_cast<int>(e.exit_code());
  } catch (const std::exception& e) {
    std::cerr << "echolab: " << e.what() << '\n';
    return static_cast<int>(ExitCode::kValidation);
  }
}
