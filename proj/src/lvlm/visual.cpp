#include <algorithm>
#include <charconv>
#include <cmath>
#include <string>

#include "damro/errors.hpp"
#include "damro/lvlm.hpp"

namespace damro::lvlm {

VisualTokenGrid keep_only(const VisualTokenGrid& visual, std::span<const std::size_t> indices) {
  if (indices.empty()) throw InputError("keep_only: empty index set");
  std::vector<std::size_t> wanted(indices.begin(), indices.end());
  std::sort(wanted.begin(), wanted.end());
  wanted.erase(std::unique(wanted.begin(), wanted.end()), wanted.end());

  VisualTokenGrid out;
  out.cls_state = visual.cls_state;
  out.grid_size = visual.grid_size;
  for (std::size_t pos : wanted) {
    if (pos >= visual.grid_size)
      throw InputError("keep_only: position " + std::to_string(pos) + " outside [0, " +
                       std::to_string(visual.grid_size) + ")");
    auto it = std::lower_bound(visual.positions.begin(), visual.positions.end(), pos);
    if (it == visual.positions.end() || *it != pos)
      throw InputError("keep_only: position " + std::to_string(pos) + " not present in this grid");
    const auto row = static_cast<std::size_t>(it - visual.positions.begin());
    out.tokens.append_row(visual.tokens.row(row));
    out.positions.push_back(pos);
  }
  return out;
}

PromptTokens parse_prompt_ids(const std::string& csv) {
  PromptTokens out;
  std::size_t start = 0;
  while (start <= csv.size()) {
    std::size_t end = csv.find(',', start);
    if (end == std::string::npos) end = csv.size();
    std::string_view piece(csv.data() + start, end - start);
    while (!piece.empty() && piece.front() == ' ') piece.remove_prefix(1);
    while (!piece.empty() && piece.back() == ' ') piece.remove_suffix(1);
    if (!piece.empty()) {
      TokenId id = 0;
      auto [ptr, ec] = std::from_chars(piece.data(), piece.data() + piece.size(), id);
      if (ec != std::errc{} || ptr != piece.data() + piece.size())
        throw InputError("prompt ids: '" + std::string(piece) + "' is not a token id");
      out.ids.push_back(id);
    } else if (end != csv.size() || start != 0) {
      throw InputError("prompt ids: empty entry");
    }
    start = end + 1;
  }
  return out;
}

ImageInput image_from_json(const nlohmann::json& doc, const ModelConfig& config) {
  if (!doc.is_object() || !doc.contains("pixels") || !doc["pixels"].is_array())
    throw InputError("image: expected an object with a 'pixels' array");
  if (doc.contains("patch_grid_side") && doc["patch_grid_side"] != config.patch_grid_side)
    throw InputError("image: patch_grid_side does not match the model config");
  if (doc.contains("patch_dim") && doc["patch_dim"] != config.patch_dim)
    throw InputError("image: patch_dim does not match the model config");
  ImageInput img;
  img.pixels.reserve(doc["pixels"].size());
  for (const auto& v : doc["pixels"]) {
    if (!v.is_number()) throw InputError("image: non-numeric pixel");
    img.pixels.push_back(v.get<double>());
  }
  return img;
}

nlohmann::json to_json(const ImageInput& image, const ModelConfig& config) {
  return {{"patch_grid_side", config.patch_grid_side}, {"patch_dim", config.patch_dim}, {"pixels", image.pixels}};
}

nlohmann::json to_json(const AttentionRecord& record) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : record.rows)
    rows.push_back({{"layer", r.layer}, {"head", r.head}, {"image_mass", r.image_mass}, {"weights", r.weights}});
  return {
      {"source", record.source == AttentionSource::encoder_cls ? "encoder_cls" : "decoder_step"},
      {"step_index", record.step_index},
      {"n", record.positions.size()},
      {"positions", record.positions},
      {"weights", record.aggregate},
      {"rows", std::move(rows)},
  };
}

}  // namespace damro::lvlm
