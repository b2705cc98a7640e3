#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

namespace shtnet::cli {

inline constexpr const char* kToolName = "shtnet";
inline constexpr const char* kToolVersion = "0.1.0";

enum ExitCode : int { kOk = 0, kUserError = 2, kIoError = 3 };

/// Entry point for the `shtnet` binary. Never throws; returns the exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Runs tasks on up to `jobs` threads. Every task runs; if any throw, the
/// exception of the lowest-index failing task is rethrown.
void run_batch(std::vector<std::function<void()>> tasks, std::size_t jobs);

/// Manifest written next to every output as `<output>.manifest.json`.
nlohmann::json make_manifest(const std::string& command, const nlohmann::json& args);
std::filesystem::path manifest_path(const std::filesystem::path& output);
/// Returns the "args" object of a manifest for `command`; throws
/// Errc::config if the manifest belongs to another subcommand.
nlohmann::json load_manifest_args(const std::filesystem::path& path, const std::string& command);

}  // namespace shtnet::cli
