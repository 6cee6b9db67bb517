#pragma once

#include <chrono>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace bpr::cli {

// One JSON document per command run, written next to its outputs.
struct RunManifest {
  std::string command;
  std::uint64_t seed = 0;
  nlohmann::ordered_json config = nlohmann::ordered_json::object();
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::vector<std::string> args;  // argv after the program name
  double duration_seconds = 0.0;
};

nlohmann::ordered_json to_json(const RunManifest& m);
void write_manifest(const std::filesystem::path& path, const RunManifest& m);
// Returns the recorded argument vector. Throws DataError on a malformed file.
std::vector<std::string> read_manifest_args(const std::filesystem::path& path);

const char* version_string() noexcept;

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

}  // namespace bpr::cli
