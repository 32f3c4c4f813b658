#include "nanowire/output.hpp"

#include <cmath>
#include <cstdio>

namespace nanowire {

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

CsvWriter::CsvWriter(const std::filesystem::path& path, const Provenance& prov,
                     const std::vector<std::string>& columns)
    : path_(path), out_(path, std::ios::binary | std::ios::trunc), columns_(columns.size()) {
  if (!out_) throw Error("cannot write " + path.string());
  out_ << "# tool: nanowire " << kToolVersion << '\n'
       << "# config_hash: " << prov.config_hash << '\n'
       << "# grid: " << prov.grid << '\n'
       << "# verb: " << prov.verb << '\n'
       << "# seed: " << prov.seed << '\n'
       << "# columns: ";
  for (std::size_t i = 0; i < columns.size(); ++i) out_ << (i ? "," : "") << columns[i];
  out_ << '\n';
}

void CsvWriter::row(const std::vector<double>& values) {
  require(values.size() == columns_, "CSV row width does not match the column schema of " + path_.string());
  for (std::size_t i = 0; i < values.size(); ++i) out_ << (i ? "," : "") << format_number(values[i]);
  out_ << '\n';
  if (!out_) throw Error("write failed for " + path_.string());
}

void write_json(const std::filesystem::path& path, const Provenance& prov, nlohmann::ordered_json body) {
  nlohmann::ordered_json doc;
  doc["header"] = {{"tool", std::string("nanowire ") + kToolVersion},
                   {"config_hash", prov.config_hash},
                   {"grid", prov.grid},
                   {"verb", prov.verb},
                   {"seed", prov.seed}};
  for (auto& [k, v] : body.items()) doc[k] = std::move(v);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << doc.dump(2) << '\n';
}

nlohmann::ordered_json to_json(const Vector& v) {
  auto a = nlohmann::ordered_json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

nlohmann::ordered_json to_json(const std::vector<double>& v) {
  auto a = nlohmann::ordered_json::array();
  for (double x : v) a.push_back(x);
  return a;
}

}  // namespace nanowire
