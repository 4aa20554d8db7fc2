#include <cmath>

#include "damro/consistency.hpp"
#include "damro/errors.hpp"
#include "damro/json_io.hpp"

namespace damro::analysis {

AttentionDump attention_dump_from_json(const nlohmann::json& doc) {
  using json_io::require;
  AttentionDump dump;
  const auto& source = require(doc, "source");
  if (!source.is_string()) throw InputError("attention dump: 'source' must be a string");
  dump.source = source.get<std::string>();
  const auto& n = require(doc, "n");
  if (!n.is_number_unsigned()) throw InputError("attention dump: 'n' must be a nonnegative integer");
  const auto& weights = require(doc, "weights");
  if (!weights.is_array()) throw InputError("attention dump: 'weights' must be an array");
  for (const auto& w : weights) {
    if (!w.is_number()) throw InputError("attention dump: non-numeric weight");
    const double v = w.get<double>();
    if (!std::isfinite(v) || v < 0.0) throw InputError("attention dump: weights must be finite and nonnegative");
    dump.weights.push_back(v);
  }
  if (dump.weights.size() != n.get<std::size_t>())
    throw InputError("attention dump: 'n' is " + std::to_string(n.get<std::size_t>()) + " but weights has " +
                     std::to_string(dump.weights.size()) + " entries");
  return dump;
}

AttentionDump load_attention_dump(const std::filesystem::path& path) {
  try {
    return attention_dump_from_json(json_io::read_file(path));
  } catch (const InputError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

nlohmann::json to_json(const AttentionDump& dump) {
  return {{"source", dump.source}, {"n", dump.weights.size()}, {"weights", dump.weights}};
}

}  // namespace damro::analysis
