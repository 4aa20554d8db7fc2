#include "damro/json_io.hpp"

#include <fstream>
#include <sstream>

#include "damro/errors.hpp"

namespace damro::json_io {

json read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw InputError("malformed JSON in " + path.string() + ": " + e.what());
  }
}

void write_file(const std::filesystem::path& path, const json& doc) {
  write_text(path, doc.dump(2) + "\n");
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  out << text;
  if (!out) throw InputError("write failed for " + path.string());
}

const json& require(const json& obj, const char* field) {
  if (!obj.is_object()) throw InputError(std::string("expected an object holding field '") + field + "'");
  auto it = obj.find(field);
  if (it == obj.end()) throw InputError(std::string("missing field '") + field + "'");
  return *it;
}

}  // namespace damro::json_io
