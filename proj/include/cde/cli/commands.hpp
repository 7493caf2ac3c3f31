#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "cde/cli/run_config.hpp"

namespace cde::cli {

/// One subcommand run: what the parser or a manifest produced.
struct Invocation {
  std::string command;
  /// Named arguments: input paths ("pairs", "plan", "model", ...) and the
  /// train variant ("variant").
  std::map<std::string, std::string> args;
  RunConfig config;
  std::filesystem::path out_dir = ".";
};

/// Subcommand names, in help order.
const std::vector<std::string>& command_names();

/// Runs the subcommand, writes its outputs and `<command>.manifest.json`
/// into out_dir, and returns the manifest path.
std::filesystem::path run_command(Invocation inv);

/// Rebuilds the invocation recorded in a manifest.
Invocation invocation_from_manifest(const std::filesystem::path& manifest);

/// Exit status for an exception escaping a subcommand: 2 missing or
/// malformed input, 3 configuration, 4 numerical failure, 1 otherwise.
int exit_code_for(const std::exception& e);

/// {"error": kind, "exit_code": n, "message": text} on one line.
std::string error_line(const std::exception& e);

/// Entry point of the `cde` tool.
int main_entry(int argc, char** argv);

}  // namespace cde::cli
