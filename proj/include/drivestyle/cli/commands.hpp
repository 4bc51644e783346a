#pragma once

#include "drivestyle/cli/config.hpp"

#include <ostream>
#include <string>
#include <vector>

namespace drivestyle::cli {

/// Stage names used for the master-seed derivation and manifest records.
/// stage_seed(master, name) with the names below gives every stage its own
/// deterministic stream.
void cmd_synth(const RunConfig& config, std::ostream& out);
void cmd_ingest(const RunConfig& config, std::ostream& out);
void cmd_preprocess(const RunConfig& config, std::ostream& out);
void cmd_train_style(const RunConfig& config, std::ostream& out);
void cmd_train_prior(const RunConfig& config, std::ostream& out);
void cmd_train_policy(const RunConfig& config, std::ostream& out);
void cmd_train_baseline(const RunConfig& config, const std::string& kind, std::ostream& out);
void cmd_eval(const RunConfig& config, const std::string& metric, std::ostream& out);
void cmd_report(const RunConfig& config, const std::vector<std::string>& report_paths,
                std::ostream& out);

/// Dispatch by subcommand name; returns a process exit code and reports
/// errors on `err`.
int run_command(const std::string& command, const RunConfig& config,
                const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace drivestyle::cli
