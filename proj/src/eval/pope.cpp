#include <cctype>
#include <map>

#include "damro/errors.hpp"
#include "damro/eval.hpp"

namespace damro::eval {

Answer parse_answer(std::string_view text) {
  std::string word;
  auto judge = [&word]() -> std::optional<Answer> {
    if (word == "yes") return Answer::yes;
    if (word == "no") return Answer::no;
    return std::nullopt;
  };
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isalpha(c)) {
      word.push_back(static_cast<char>(std::tolower(c)));
      continue;
    }
    if (auto a = judge()) return *a;
    word.clear();
  }
  if (auto a = judge()) return *a;
  return Answer::no;
}

PopeScores pope_metrics(const Confusion& c) {
  auto ratio = [](std::size_t num, std::size_t den) -> Metric {
    if (den == 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
  };
  PopeScores s;
  s.confusion = c;
  s.precision = ratio(c.tp, c.tp + c.fp);
  s.recall = ratio(c.tp, c.tp + c.fn);
  s.accuracy = ratio(c.tp + c.tn, c.total());
  if (s.precision && s.recall) {
    const double p = *s.precision, r = *s.recall;
    s.f1 = p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
  }
  return s;
}

namespace {

std::vector<NamedMetric> named(const PopeScores& s) {
  return {{"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1}, {"accuracy", s.accuracy}};
}

nlohmann::json counts_json(const Confusion& c) {
  return {{"tp", c.tp}, {"fp", c.fp}, {"fn", c.fn}, {"tn", c.tn}};
}

}  // namespace

EvalReport pope_scores(std::span<const PopeItem> items) {
  if (items.empty()) throw InputError("pope: no items");
  std::map<std::string, Confusion> per_split;
  Confusion all;
  for (const auto& item : items) {
    const bool predicted_yes = parse_answer(item.model_answer) == Answer::yes;
    const bool actual_yes = item.label == Answer::yes;
    Confusion& c = per_split[item.split];
    for (Confusion* t : {&c, &all}) {
      if (predicted_yes && actual_yes) ++t->tp;
      else if (predicted_yes) ++t->fp;
      else if (actual_yes) ++t->fn;
      else ++t->tn;
    }
  }

  EvalReport r;
  r.metric = "pope";
  std::vector<PopeScores> split_scores;
  for (const auto& [name, c] : per_split) {
    split_scores.push_back(pope_metrics(c));
    r.splits.push_back({name, named(split_scores.back()), counts_json(c)});
  }

  auto macro = [&](Metric PopeScores::*field) -> Metric {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& s : split_scores) {
      if (const Metric& m = s.*field) {
        sum += *m;
        ++n;
      }
    }
    if (n == 0) return std::nullopt;
    return sum / static_cast<double>(n);
  };
  r.values = {{"precision", macro(&PopeScores::precision)},
              {"recall", macro(&PopeScores::recall)},
              {"f1", macro(&PopeScores::f1)},
              {"accuracy", macro(&PopeScores::accuracy)}};
  r.counts = counts_json(all);
  return r;
}

}  // namespace damro::eval
