#include <algorithm>
#include <cctype>

#include "damro/errors.hpp"
#include "damro/eval.hpp"
#include "damro/json_io.hpp"

namespace damro::eval {

namespace {

std::vector<std::string> words_of(std::string_view text) {
  std::vector<std::string> words;
  std::string cur;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      words.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) words.push_back(std::move(cur));
  return words;
}

std::string join(const std::vector<std::string>& words, std::size_t from, std::size_t count) {
  std::string out;
  for (std::size_t i = from; i < from + count; ++i) {
    if (i > from) out.push_back(' ');
    out += words[i];
  }
  return out;
}

// Lowercase, single-space separated, no leading/trailing space.
bool is_normalized(const std::string& s) {
  if (s.empty()) return false;
  return join(words_of(s), 0, words_of(s).size()) == s;
}

}  // namespace

void ObjectLexicon::validate() const {
  if (categories.empty()) throw InputError("lexicon: no categories");
  for (const auto& c : categories)
    if (!is_normalized(c)) throw InputError("lexicon: category '" + c + "' must be lowercase words separated by spaces");
  for (const auto& [surface, target] : synonyms) {
    if (!is_normalized(surface))
      throw InputError("lexicon: synonym '" + surface + "' must be lowercase words separated by spaces");
    if (!categories.contains(target))
      throw InputError("lexicon: synonym '" + surface + "' maps to unknown category '" + target + "'");
  }
}

std::optional<std::string> ObjectLexicon::lookup(const std::string& surface) const {
  if (auto it = synonyms.find(surface); it != synonyms.end()) return it->second;
  if (categories.contains(surface)) return surface;
  return std::nullopt;
}

std::size_t ObjectLexicon::max_phrase_words() const {
  std::size_t best = 1;
  auto count = [](const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), ' ')) + 1; };
  for (const auto& c : categories) best = std::max(best, count(c));
  for (const auto& [s, _] : synonyms) best = std::max(best, count(s));
  return best;
}

ObjectLexicon lexicon_from_json(const nlohmann::json& doc) {
  ObjectLexicon lex;
  const auto& cats = json_io::require(doc, "categories");
  if (!cats.is_array()) throw InputError("lexicon: 'categories' must be an array of strings");
  for (const auto& c : cats) {
    if (!c.is_string()) throw InputError("lexicon: 'categories' must be an array of strings");
    if (!lex.categories.insert(c.get<std::string>()).second)
      throw InputError("lexicon: duplicate category '" + c.get<std::string>() + "'");
  }
  if (auto it = doc.find("synonyms"); it != doc.end()) {
    if (!it->is_object()) throw InputError("lexicon: 'synonyms' must map surface forms to categories");
    for (const auto& [surface, target] : it->items()) {
      if (!target.is_string()) throw InputError("lexicon: synonym '" + surface + "' must map to a string");
      lex.synonyms.emplace(surface, target.get<std::string>());
    }
  }
  lex.validate();
  return lex;
}

ObjectLexicon load_lexicon(const std::filesystem::path& path) {
  try {
    return lexicon_from_json(json_io::read_file(path));
  } catch (const InputError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

std::set<std::string> extract_objects(std::string_view caption, const ObjectLexicon& lexicon) {
  const auto words = words_of(caption);
  const std::size_t longest = lexicon.max_phrase_words();
  std::set<std::string> found;
  std::size_t w = 0;
  while (w < words.size()) {
    std::size_t matched = 0;
    for (std::size_t len = std::min(longest, words.size() - w); len >= 1; --len) {
      std::string phrase = join(words, w, len);
      auto hit = lexicon.lookup(phrase);
      if (!hit && phrase.size() > 1 && phrase.back() == 's') {
        phrase.pop_back();
        hit = lexicon.lookup(phrase);
      }
      if (hit) {
        found.insert(*hit);
        matched = len;
        break;
      }
    }
    w += matched > 0 ? matched : 1;
  }
  return found;
}

}  // namespace damro::eval
