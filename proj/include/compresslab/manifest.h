#ifndef COMPRESSLAB_MANIFEST_H_
#define COMPRESSLAB_MANIFEST_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

namespace compresslab {

inline constexpr const char* kToolkitVersion = "0.3.0";

// Provenance record written next to every artifact a command produces.
struct RunManifest {
  std::string command;
  std::vector<std::string> argv;
  nlohmann::json config = nlohmann::json::object();
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::vector<std::uint64_t> seeds;
  std::string version = kToolkitVersion;
  std::string started;
  std::string finished;
};

nlohmann::json manifest_to_json(const RunManifest& manifest);
RunManifest manifest_from_json(const nlohmann::json& value);
void write_manifest(const std::filesystem::path& path, const RunManifest& manifest);
RunManifest read_manifest(const std::filesystem::path& path);

// "<output>.manifest.json", or "<dir>/manifest.json" when output is a directory.
std::filesystem::path manifest_path_for(const std::filesystem::path& output);

}  // namespace compresslab

#endif  // COMPRESSLAB_MANIFEST_H_
