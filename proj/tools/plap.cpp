#include "plap/pipeline.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <map>

int main(int argc, char** argv) {
  CLI::App app{"p-Laplacian resonance solver"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;

  const std::map<std::string, std::pair<plap::Subcommand, const char*>> commands = {
      {"eig", {plap::Subcommand::eig, "first eigenpair of the p-Laplacian"}},
      {"check", {plap::Subcommand::check, "sample the hypotheses on the nonlinearity"}},
      {"geometry", {plap::Subcommand::geometry, "certify the mountain-pass geometry"}},
      {"solve", {plap::Subcommand::solve, "full pipeline ending in a mountain-pass critical point"}},
  };
  for (const auto& [name, entry] : commands) {
    CLI::App* sub = app.add_subcommand(name, entry.second);
    sub->add_option("--config", config_path, "run configuration file")->required();
    sub->add_option("--out", out_dir, "output directory")->required();
    sub->add_option("--seed", seed, "random seed (overrides [solver] seed)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : plap::exit_usage;
  }

  const plap::Subcommand cmd = commands.at(app.get_subcommands().front()->get_name()).first;
  plap::RunOutcome outcome;
  try {
    outcome = plap::run_from_file(cmd, config_path, out_dir, seed);
  } catch (const std::exception& e) {
    std::cerr << "plap: " << e.what() << "\n";
    return plap::exit_usage;
  }
  const auto& report = outcome.report;
  if (outcome.exit_code != plap::exit_ok)
    std::cerr << "plap " << plap::to_string(cmd) << ": " << report.value("message", std::string{}) << "\n";
  if (report.contains("eigenpair")) std::cout << "lambda1 = " << report["eigenpair"]["lambda1"].get<double>() << "\n";
  if (report.contains("hypotheses")) std::cout << "hypotheses: " << report["hypotheses"]["overall"].get<std::string>() << "\n";
  if (report.contains("certificate"))
    std::cout << "certificate: rho = " << report["certificate"]["rho"].get<double>()
              << ", a = " << report["certificate"]["a_estimate"].get<double>() << "\n";
  if (report.contains("solution"))
    std::cout << "level c = " << report["solution"]["level"].get<double>()
              << ", residual = " << report["solution"]["residual"].get<double>() << "\n";
  std::cout << "report: " << (std::filesystem::path(out_dir) / "report.json").string() << "\n";
  return outcome.exit_code;
}
