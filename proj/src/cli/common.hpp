#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include <spdlog/spdlog.h>

#include "damro/errors.hpp"
#include "damro/json_io.hpp"
#include "damro/lvlm.hpp"

namespace damro::cli {

// stderr logger; level from DAMRO_LOG (trace|debug|info|warn|error|off),
// default warn.
std::shared_ptr<spdlog::logger> logger();

inline void require_file(const std::filesystem::path& path, const char* what) {
  if (path.empty()) throw InputError(std::string("missing required path: ") + what);
  if (!std::filesystem::is_regular_file(path)) throw InputError(std::string(what) + " not found: " + path.string());
}

inline void prepare_out_dir(const std::filesystem::path& out) {
  if (out.empty()) throw InputError("missing required --out directory");
  std::error_code ec;
  std::filesystem::create_directories(out, ec);
  if (ec) throw InputError("cannot create output directory " + out.string() + ": " + ec.message());
}

inline lvlm::ImageInput load_image(const std::filesystem::path& path, const lvlm::ModelConfig& config) {
  require_file(path, "image file");
  try {
    return lvlm::image_from_json(json_io::read_file(path), config);
  } catch (const InputError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

inline lvlm::ModelConfig load_config(const std::filesystem::path& path) {
  require_file(path, "model config");
  return lvlm::load_model_config(path);
}

}  // namespace damro::cli
