#pragma once

// Run manifests. Keys are emitted sorted, so two runs with the same
// command, config, seed and input bytes produce identical manifests apart
// from the two timestamp fields.

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace cde::cli {

inline constexpr std::string_view kToolName = "cde";
inline constexpr std::string_view kToolVersion = "0.3.0";

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

struct Manifest {
  std::string command;
  /// Subcommand arguments other than config keys (input paths, variant).
  std::map<std::string, std::string> args;
  nlohmann::json config;
  nlohmann::json seeds;
  /// Input path -> SHA-256 of its bytes.
  std::map<std::string, std::string> inputs;
  /// Output files relative to the output directory.
  std::vector<std::string> outputs;
  std::string started_at;
  std::string finished_at;

  nlohmann::json to_json() const;
  static Manifest from_json(const nlohmann::json& j);
};

/// UTC, second resolution, ISO 8601.
std::string utc_timestamp();

}  // namespace cde::cli
