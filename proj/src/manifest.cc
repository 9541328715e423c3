#include "compresslab/manifest.h"

#include <fstream>

#include "compresslab/corpus.h"

namespace compresslab {

using nlohmann::json;

json manifest_to_json(const RunManifest& m) {
  return {{"command", m.command}, {"argv", m.argv},       {"config", m.config},
          {"inputs", m.inputs},   {"outputs", m.outputs}, {"seeds", m.seeds},
          {"version", m.version}, {"started", m.started}, {"finished", m.finished}};
}

RunManifest manifest_from_json(const json& value) {
  RunManifest m;
  m.command = value.at("command").get<std::string>();
  m.argv = value.at("argv").get<std::vector<std::string>>();
  m.config = value.at("config");
  m.inputs = value.at("inputs").get<std::vector<std::string>>();
  m.outputs = value.at("outputs").get<std::vector<std::string>>();
  m.seeds = value.at("seeds").get<std::vector<std::uint64_t>>();
  m.version = value.at("version").get<std::string>();
  m.started = value.at("started").get<std::string>();
  m.finished = value.at("finished").get<std::string>();
  return m;
}

void write_manifest(const std::filesystem::path& path, const RunManifest& manifest) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write manifest " + path.string());
  out << manifest_to_json(manifest).dump(2) << '\n';
}

RunManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest " + path.string());
  try {
    return manifest_from_json(json::parse(in));
  } catch (const json::exception& e) {
    throw DataError("malformed manifest " + path.string() + ": " + e.what());
  }
}

std::filesystem::path manifest_path_for(const std::filesystem::path& output) {
  if (std::filesystem::is_directory(output)) return output / "manifest.json";
  std::filesystem::path path = output;
  path += ".manifest.json";
  return path;
}

}  // namespace compresslab
