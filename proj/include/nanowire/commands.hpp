#pragma once

#include "nanowire/config.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace nanowire {

struct CommandContext {
  std::filesystem::path out_dir;
  std::uint64_t seed = 20240607;
  int threads = 1;  // accepted for interface stability; the drivers run sequentially
  bool verbose = false;
};

const std::vector<std::string>& command_verbs();

/// Runs one verb, writes its artifacts under ctx.out_dir and returns a summary
/// listing them. Throws the library's errors unchanged.
nlohmann::ordered_json run_command(const std::string& verb, const RunConfig& config, const CommandContext& ctx);

/// Machine-readable description of an exception, with its exit status.
struct ErrorReport {
  nlohmann::ordered_json json;
  int exit_code = 1;
};
ErrorReport describe_error(const std::exception& e);

}  // namespace nanowire
