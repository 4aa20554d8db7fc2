#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"

namespace damro::json_io {

using nlohmann::json;

// Parse a whole file as one JSON document. Throws InputError naming the path.
json read_file(const std::filesystem::path& path);

// Pretty-printed (2-space) document plus trailing newline. Output for a given
// value is byte-stable.
void write_file(const std::filesystem::path& path, const json& doc);

void write_text(const std::filesystem::path& path, const std::string& text);

// Typed field access with errors that name the field.
const json& require(const json& obj, const char* field);

}  // namespace damro::json_io
