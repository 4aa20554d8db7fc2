#pragma once

// Object-hallucination scoring: CHAIR over captions with ground-truth object
// sets, and POPE-style yes/no accounting.

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"

namespace damro::eval {

struct ObjectLexicon {
  std::set<std::string> categories;
  // surface form (lowercase, words separated by single spaces) -> category.
  // Every category is also its own surface form unless listed here.
  std::map<std::string, std::string> synonyms;

  void validate() const;
  std::optional<std::string> lookup(const std::string& surface) const;
  std::size_t max_phrase_words() const;
};

ObjectLexicon lexicon_from_json(const nlohmann::json& doc);
ObjectLexicon load_lexicon(const std::filesystem::path& path);

// Lowercased word scan, longest phrase first. A phrase that misses is retried
// once with a trailing 's' removed.
std::set<std::string> extract_objects(std::string_view caption, const ObjectLexicon& lexicon);

struct CaptionItem {
  std::string image_id;
  std::string caption;
  std::set<std::string> ground_truth_objects;
};

enum class Answer { yes, no };

struct PopeItem {
  std::string image_id;
  std::string question;
  Answer label = Answer::no;
  std::string model_answer;
  std::string split = "default";
};

// First whole word equal to "yes" or "no", case-insensitive. Anything else
// counts as no.
Answer parse_answer(std::string_view text);

using Metric = std::optional<double>;  // nullopt: undefined (zero denominator)

struct ChairCounts {
  std::size_t captions = 0;
  std::size_t hallucinated_captions = 0;
  std::size_t mentioned = 0;     // canonical objects, deduplicated per caption
  std::size_t hallucinated = 0;  // mentioned objects absent from ground truth
  std::size_t ground_truth = 0;
  std::size_t covered = 0;  // ground-truth objects that were mentioned
};

struct ChairScores {
  Metric chair_s;
  Metric chair_i;
  Metric recall;
  ChairCounts counts;
};

ChairScores chair(std::span<const CaptionItem> items, const ObjectLexicon& lexicon);

struct Confusion {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  std::size_t total() const noexcept { return tp + fp + fn + tn; }
};

struct PopeScores {
  Metric precision;
  Metric recall;
  Metric f1;
  Metric accuracy;
  Confusion confusion;
};

PopeScores pope_metrics(const Confusion& c);

struct NamedMetric {
  std::string name;
  Metric value;
};

struct EvalReport {
  std::string metric;  // "chair" or "pope"
  std::vector<NamedMetric> values;
  struct Split {
    std::string name;
    std::vector<NamedMetric> values;
    nlohmann::json counts;
  };
  std::vector<Split> splits;
  nlohmann::json counts;
  nlohmann::json config;

  Metric value(std::string_view name) const;
};

EvalReport chair_scores(std::span<const CaptionItem> items, const ObjectLexicon& lexicon);

// Per-split scores plus their macro average (mean over the splits where the
// metric is defined).
EvalReport pope_scores(std::span<const PopeItem> items);

nlohmann::json to_json(const EvalReport& report);

// CHAIR: "C_S,C_I,Recall"; POPE: "Split,Precision,Recall,F1 Score,Accuracy".
// Values are x100 with two decimals; undefined metrics are empty cells.
std::string to_csv(const EvalReport& report);

enum class DatasetKind { caption, pope };

using Dataset = std::variant<std::vector<CaptionItem>, std::vector<PopeItem>>;

// JSONL, one item per line; blank lines are skipped. Errors carry the 1-based
// line number and the offending field.
Dataset load_dataset(const std::filesystem::path& path, DatasetKind kind);
std::vector<CaptionItem> load_caption_dataset(const std::filesystem::path& path);
std::vector<PopeItem> load_pope_dataset(const std::filesystem::path& path);

}  // namespace damro::eval
