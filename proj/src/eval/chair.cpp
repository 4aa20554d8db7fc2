#include <algorithm>
#include <iterator>

#include "damro/errors.hpp"
#include "damro/eval.hpp"

namespace damro::eval {

ChairScores chair(std::span<const CaptionItem> items, const ObjectLexicon& lexicon) {
  if (items.empty()) throw InputError("chair: no captions");
  ChairScores out;
  ChairCounts& c = out.counts;
  for (const auto& item : items) {
    for (const auto& gt : item.ground_truth_objects)
      if (!lexicon.categories.contains(gt))
        throw InputError("chair: image '" + item.image_id + "' ground truth object '" + gt + "' is not a category");
    const auto mentioned = extract_objects(item.caption, lexicon);
    std::size_t bad = 0;
    for (const auto& obj : mentioned) {
      if (item.ground_truth_objects.contains(obj)) {
        ++c.covered;
      } else {
        ++bad;
      }
    }
    ++c.captions;
    c.mentioned += mentioned.size();
    c.hallucinated += bad;
    c.ground_truth += item.ground_truth_objects.size();
    if (bad > 0) ++c.hallucinated_captions;
  }
  auto ratio = [](std::size_t num, std::size_t den) -> Metric {
    if (den == 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
  };
  out.chair_s = ratio(c.hallucinated_captions, c.captions);
  out.chair_i = ratio(c.hallucinated, c.mentioned);
  out.recall = ratio(c.covered, c.ground_truth);
  return out;
}

EvalReport chair_scores(std::span<const CaptionItem> items, const ObjectLexicon& lexicon) {
  const ChairScores s = chair(items, lexicon);
  EvalReport r;
  r.metric = "chair";
  r.values = {{"chair_s", s.chair_s}, {"chair_i", s.chair_i}, {"recall", s.recall}};
  r.counts = {
      {"captions", s.counts.captions},         {"hallucinated_captions", s.counts.hallucinated_captions},
      {"mentioned", s.counts.mentioned},       {"hallucinated", s.counts.hallucinated},
      {"ground_truth", s.counts.ground_truth}, {"covered", s.counts.covered},
  };
  return r;
}

}  // namespace damro::eval
