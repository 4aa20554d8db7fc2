#include <cstdio>

#include "damro/eval.hpp"

namespace damro::eval {

Metric EvalReport::value(std::string_view name) const {
  for (const auto& v : values)
    if (v.name == name) return v.value;
  return std::nullopt;
}

namespace {

nlohmann::json metrics_json(const std::vector<NamedMetric>& values, double scale) {
  nlohmann::json out = nlohmann::json::object();
  for (const auto& v : values) out[v.name] = v.value ? nlohmann::json(*v.value * scale) : nlohmann::json(nullptr);
  return out;
}

std::string cell(const Metric& m) {
  if (!m) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", *m * 100.0);
  return buf;
}

std::string row_of(const std::vector<NamedMetric>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out.push_back(',');
    out += cell(values[i].value);
  }
  return out;
}

}  // namespace

nlohmann::json to_json(const EvalReport& r) {
  nlohmann::json splits = nlohmann::json::array();
  for (const auto& s : r.splits)
    splits.push_back({{"split", s.name},
                      {"values", metrics_json(s.values, 1.0)},
                      {"values_x100", metrics_json(s.values, 100.0)},
                      {"counts", s.counts}});
  return {
      {"metric", r.metric},
      {"values", metrics_json(r.values, 1.0)},
      {"values_x100", metrics_json(r.values, 100.0)},
      {"counts", r.counts},
      {"splits", std::move(splits)},
      {"config", r.config.is_null() ? nlohmann::json::object() : r.config},
  };
}

std::string to_csv(const EvalReport& r) {
  if (r.metric == "chair") return "C_S,C_I,Recall\n" + row_of(r.values) + "\n";
  std::string out = "Split,Precision,Recall,F1 Score,Accuracy\n";
  for (const auto& s : r.splits) out += s.name + "," + row_of(s.values) + "\n";
  out += "average," + row_of(r.values) + "\n";
  return out;
}

}  // namespace damro::eval
