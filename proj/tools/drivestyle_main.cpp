#include "drivestyle/cli/commands.hpp"
#include "drivestyle/numkit/tensor.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"drivestyle: style-conditioned diffusion behavior cloning pipeline"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  bool force = false;
  bool checked = false;
  app.add_option("-c,--config", config_path, "Config file ([section] key = value)");
  app.add_option("-s,--set", overrides, "Override config values as section.key=value");
  app.add_flag("--force", force, "Ignore config fingerprint mismatches");
  app.add_flag("--checked", checked, "Enable NaN/shape guards (slower)");

  const std::vector<std::string> commands = {
      "synth",        "ingest",      "preprocess",     "train-style", "train-prior",
      "train-policy", "train-baseline", "eval-crash",  "eval-f1",     "report"};
  std::map<std::string, CLI::App*> subs;
  std::vector<std::string> baseline_kinds;
  std::vector<std::string> report_files;
  for (const std::string& name : commands) {
    subs[name] = app.add_subcommand(name);
  }
  subs["train-baseline"]->add_option("kind", baseline_kinds, "Baseline kind to train")
      ->required();
  subs["report"]->add_option("reports", report_files, "Report JSON files to aggregate")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    drivestyle::cli::RunConfig config = config_path.empty()
                                            ? drivestyle::cli::RunConfig()
                                            : drivestyle::cli::RunConfig::from_file(config_path);
    config.apply_overrides(overrides);
    if (force) config.set("cli.allow_fingerprint_mismatch", "1");
    drivestyle::numkit::set_checked_mode(checked);

    for (const std::string& name : commands) {
      if (!subs[name]->parsed()) continue;
      std::vector<std::string> args;
      if (name == "train-baseline") args = baseline_kinds;
      if (name == "report") args = report_files;
      if (name == "train-baseline" && args.size() > 1) {
        int rc = 0;
        for (const std::string& kind : args) {
          rc |= drivestyle::cli::run_command(name, config, {kind}, std::cout, std::cerr);
        }
        return rc;
      }
      return drivestyle::cli::run_command(name, config, args, std::cout, std::cerr);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
