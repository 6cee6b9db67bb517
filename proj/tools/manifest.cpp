#include "manifest.hpp"

#include <fstream>

#include "bpr/errors.hpp"

#ifndef BPR_VERSION_STRING
#define BPR_VERSION_STRING "unknown"
#endif

namespace bpr::cli {

const char* version_string() noexcept { return BPR_VERSION_STRING; }

nlohmann::ordered_json to_json(const RunManifest& m) {
  nlohmann::ordered_json j;
  j["command"] = m.command;
  j["version"] = version_string();
  j["seed"] = m.seed;
  j["config"] = m.config;
  j["inputs"] = m.inputs;
  j["outputs"] = m.outputs;
  j["args"] = m.args;
  j["duration_seconds"] = m.duration_seconds;
  return j;
}

void write_manifest(const std::filesystem::path& path, const RunManifest& m) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write manifest " + path.string());
  out << to_json(m).dump(2) << '\n';
  if (!out) throw DataError("failed writing manifest " + path.string());
}

std::vector<std::string> read_manifest_args(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  if (!j.contains("args") || !j["args"].is_array()) throw DataError(path.string() + ": manifest has no args array");
  std::vector<std::string> args;
  for (const auto& a : j["args"]) {
    if (!a.is_string()) throw DataError(path.string() + ": manifest args must be strings");
    args.push_back(a.get<std::string>());
  }
  if (args.empty()) throw DataError(path.string() + ": manifest args are empty");
  return args;
}

}  // namespace bpr::cli
