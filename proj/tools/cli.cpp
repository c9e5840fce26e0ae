#include <CLI11.hpp>

#include "igabem/config.hpp"
#include "igabem/runner.hpp"

#include <iostream>

namespace {

int load_config(const std::string& path, igabem::RunConfig& config) {
  try {
    igabem::ParseResult parsed = igabem::parse_config_file(path);
    if (!parsed.config) {
      std::cerr << "config invalid (" << parsed.errors.size() << " problems):\n";
      for (const std::string& e : parsed.errors) std::cerr << "  " << e << "\n";
      return igabem::kConfigError;
    }
    config = std::move(*parsed.config);
    return igabem::kOk;
  } catch (const igabem::Error& e) {
    std::cerr << e.what() << "\n";
    return igabem::kConfigError;
  }
}

int finish(const igabem::RunOutcome& outcome) {
  (outcome.exit_code == igabem::kOk ? std::cout : std::cerr)
      << outcome.message << "\n";
  return outcome.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Isogeometric boundary-element kit for underground excavations"};
  app.require_subcommand(1);

  std::string config_path;

  auto* check = app.add_subcommand("check", "validate a config file");
  check->add_option("config", config_path, "config file")->required();

  auto* mesh = app.add_subcommand("mesh", "generate the cell mesh only");
  mesh->add_option("config", config_path, "config file")->required();

  auto* run = app.add_subcommand("run", "run the full pipeline");
  run->add_option("config", config_path, "config file")->required();

  auto* report = app.add_subcommand("report", "re-emit outputs from cached state");
  report->add_option("config", config_path, "config file")->required();

  CLI11_PARSE(app, argc, argv);

  igabem::RunConfig config;
  if (const int rc = load_config(config_path, config); rc != igabem::kOk)
    return rc;

  if (check->parsed()) {
    std::cout << "config ok: " << config.patches.size() << " patches\n";
    return igabem::kOk;
  }
  if (mesh->parsed()) return finish(igabem::run_mesh_only(config));
  if (run->parsed()) return finish(igabem::run_pipeline(config));
  return finish(igabem::run_report(config));
}
