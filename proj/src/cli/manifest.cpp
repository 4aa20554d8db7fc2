#include "damro/cli.hpp"
#include "damro/json_io.hpp"

namespace damro::cli {

nlohmann::json RunManifest::to_json() const {
  const auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  std::vector<std::string> listed = outputs;
  listed.push_back("manifest.json");
  return {
      {"command", command},
      {"tool_version", kToolVersion},
      {"seed", seed},
      {"config", config},
      {"inputs", inputs},
      {"outputs", listed},
      {"wall_clock_seconds", elapsed},
  };
}

void RunManifest::write(const std::filesystem::path& out_dir) const {
  json_io::write_file(out_dir / "manifest.json", to_json());
}

}  // namespace damro::cli
