#pragma once

#include "nanowire/types.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace nanowire {

inline constexpr const char* kToolVersion = "1.0.0";

/// What every artifact header records besides its columns.
struct Provenance {
  std::string config_hash;
  std::string grid;  // one-line grid descriptor
  std::string verb;
  std::uint64_t seed = 0;
};

/// %.17g, which round-trips every double; nan and inf are spelled out.
std::string format_number(double v);

/// CSV with a `#` header block (tool, config hash, grid, verb, seed, columns),
/// comma separators and LF line endings.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const Provenance& prov, const std::vector<std::string>& columns);
  void row(const std::vector<double>& values);
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  std::size_t columns_;
};

/// Writes a JSON summary with insertion-ordered keys; the provenance goes in a "header" object.
void write_json(const std::filesystem::path& path, const Provenance& prov, nlohmann::ordered_json body);

nlohmann::ordered_json to_json(const Vector& v);
nlohmann::ordered_json to_json(const std::vector<double>& v);

}  // namespace nanowire
