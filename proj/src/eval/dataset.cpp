#include <fstream>
#include <string>

#include "damro/errors.hpp"
#include "damro/eval.hpp"

namespace damro::eval {

namespace {

class LineError : public InputError {
 public:
  LineError(const std::filesystem::path& path, std::size_t line, const std::string& what)
      : InputError(path.string() + ": line " + std::to_string(line) + ": " + what) {}
};

const nlohmann::json& field(const nlohmann::json& obj, const char* name, const std::filesystem::path& path,
                            std::size_t line) {
  auto it = obj.find(name);
  if (it == obj.end()) throw LineError(path, line, std::string("missing field '") + name + "'");
  return *it;
}

std::string string_field(const nlohmann::json& obj, const char* name, const std::filesystem::path& path,
                         std::size_t line) {
  const auto& v = field(obj, name, path, line);
  if (!v.is_string()) throw LineError(path, line, std::string("field '") + name + "' must be a string");
  return v.get<std::string>();
}

template <typename Fn>
void for_each_record(const std::filesystem::path& path, Fn&& fn) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  std::string text;
  std::size_t line = 0, items = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      throw LineError(path, line, std::string("malformed JSON: ") + e.what());
    }
    if (!obj.is_object()) throw LineError(path, line, "expected a JSON object");
    fn(obj, line);
    ++items;
  }
  if (items == 0) throw InputError(path.string() + ": no items");
}

}  // namespace

std::vector<CaptionItem> load_caption_dataset(const std::filesystem::path& path) {
  std::vector<CaptionItem> out;
  for_each_record(path, [&](const nlohmann::json& obj, std::size_t line) {
    CaptionItem item;
    item.image_id = string_field(obj, "image_id", path, line);
    item.caption = string_field(obj, "caption", path, line);
    const auto& gt = field(obj, "ground_truth_objects", path, line);
    if (!gt.is_array()) throw LineError(path, line, "field 'ground_truth_objects' must be an array of strings");
    for (const auto& o : gt) {
      if (!o.is_string()) throw LineError(path, line, "field 'ground_truth_objects' must be an array of strings");
      item.ground_truth_objects.insert(o.get<std::string>());
    }
    out.push_back(std::move(item));
  });
  return out;
}

std::vector<PopeItem> load_pope_dataset(const std::filesystem::path& path) {
  std::vector<PopeItem> out;
  for_each_record(path, [&](const nlohmann::json& obj, std::size_t line) {
    PopeItem item;
    item.image_id = string_field(obj, "image_id", path, line);
    item.question = string_field(obj, "question", path, line);
    const std::string label = string_field(obj, "label", path, line);
    if (label == "yes") item.label = Answer::yes;
    else if (label == "no") item.label = Answer::no;
    else throw LineError(path, line, "field 'label' must be \"yes\" or \"no\"");
    item.model_answer = string_field(obj, "model_answer", path, line);
    if (obj.contains("split")) item.split = string_field(obj, "split", path, line);
    out.push_back(std::move(item));
  });
  return out;
}

Dataset load_dataset(const std::filesystem::path& path, DatasetKind kind) {
  if (kind == DatasetKind::caption) return load_caption_dataset(path);
  return load_pope_dataset(path);
}

}  // namespace damro::eval
