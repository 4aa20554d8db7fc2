#include "damro/consistency.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <sstream>
#include <string>

#include "damro/attention_tap.hpp"
#include "damro/errors.hpp"

namespace damro::analysis {

namespace {

void check_weights(std::span<const double> w, const char* what) {
  for (double v : w)
    if (!std::isfinite(v) || v < 0.0) throw InputError(std::string(what) + ": weights must be finite and nonnegative");
}

void check_pair(std::span<const double> enc, std::span<const double> dec) {
  if (enc.size() != dec.size())
    throw InputError("length mismatch: encoder n=" + std::to_string(enc.size()) +
                     ", decoder n=" + std::to_string(dec.size()));
  check_weights(enc, "encoder attention");
  check_weights(dec, "decoder attention");
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

std::vector<std::size_t> top_set(std::span<const double> attn, std::size_t i) {
  auto out = tap::top_positions(attn, i);
  std::sort(out.begin(), out.end());
  return out;
}

double h_consistency(std::span<const double> encoder_attn, std::span<const double> decoder_attn, std::size_t i) {
  check_pair(encoder_attn, decoder_attn);
  const auto a = top_set(encoder_attn, i);
  const auto b = top_set(decoder_attn, i);
  std::vector<std::size_t> both;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(both));
  return static_cast<double>(both.size()) / static_cast<double>(i);
}

double f_influence(std::span<const double> encoder_attn, std::span<const double> decoder_attn) {
  check_pair(encoder_attn, decoder_attn);
  if (encoder_attn.size() < 3) throw InputError("f_influence: needs n >= 3");
  const auto top3 = tap::top_positions(encoder_attn, 3);
  double top = 0.0;
  for (std::size_t pos : top3) top += decoder_attn[pos];
  double rest = 0.0;
  for (std::size_t i = 0; i < decoder_attn.size(); ++i)
    if (std::find(top3.begin(), top3.end(), i) == top3.end()) rest += decoder_attn[i];
  const double total = top + rest;
  if (!(total > 0.0)) throw InputError("f_influence: decoder attention has zero total mass");
  return top / total;
}

std::vector<double> concentration_curve(std::span<const double> attn, std::size_t j_max) {
  check_weights(attn, "concentration_curve");
  if (j_max < 1 || j_max > attn.size())
    throw InputError("concentration_curve: j_max=" + std::to_string(j_max) + " outside [1, " +
                     std::to_string(attn.size()) + "]");
  std::vector<double> sorted(attn.begin(), attn.end());
  std::partial_sort(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(j_max), sorted.end(),
                    std::greater<>());
  std::vector<double> out(j_max);
  double running = 0.0;
  for (std::size_t j = 0; j < j_max; ++j) {
    running += sorted[j];
    out[j] = running;
  }
  return out;
}

ConsistencyReport analyze_pair(std::span<const double> encoder_attn, std::span<const double> decoder_attn,
                               std::size_t i_max, std::size_t j_max, Labels labels) {
  check_pair(encoder_attn, decoder_attn);
  if (i_max < 1 || i_max > encoder_attn.size()) throw InputError("analyze: i_max outside [1, n]");
  ConsistencyReport r;
  for (std::size_t i = 1; i <= i_max; ++i) r.h_curve.push_back(h_consistency(encoder_attn, decoder_attn, i));
  r.f_value = f_influence(encoder_attn, decoder_attn);
  r.concentration = concentration_curve(encoder_attn, j_max);
  r.labels = std::move(labels);
  return r;
}

const char* to_string(Granularity g) { return g == Granularity::sentence ? "sentence-level" : "object-level"; }

Granularity granularity_from_string(const std::string& s) {
  if (s == "sentence" || s == "sentence-level") return Granularity::sentence;
  if (s == "object" || s == "object-level") return Granularity::object;
  throw InputError("granularity must be sentence-level or object-level, got '" + s + "'");
}

std::vector<GroupRow> aggregate_reports(std::span<const ConsistencyReport> reports, GroupBy by) {
  if (reports.empty()) throw InputError("aggregate_reports: no reports");
  auto key_of = [by](const ConsistencyReport& r) -> std::string {
    const std::string ha = r.labels.hallucination.value_or("unlabeled");
    const std::string gr = r.labels.granularity ? to_string(*r.labels.granularity) : "unlabeled";
    switch (by) {
      case GroupBy::none: return "all";
      case GroupBy::hallucination: return ha;
      case GroupBy::granularity: return gr;
      case GroupBy::both: return gr + "/" + ha;
    }
    return "all";
  };

  std::map<std::string, std::vector<const ConsistencyReport*>> groups;
  for (const auto& r : reports) groups[key_of(r)].push_back(&r);

  std::vector<GroupRow> out;
  for (const auto& [key, members] : groups) {
    const ConsistencyReport& first = *members.front();
    GroupRow row;
    row.group = key;
    row.count = members.size();
    row.mean.h_curve.assign(first.h_curve.size(), 0.0);
    row.mean.concentration.assign(first.concentration.size(), 0.0);
    for (const ConsistencyReport* m : members) {
      if (m->h_curve.size() != first.h_curve.size() || m->concentration.size() != first.concentration.size())
        throw InputError("aggregate_reports: curve lengths differ within group '" + key + "'");
      for (std::size_t i = 0; i < m->h_curve.size(); ++i) row.mean.h_curve[i] += m->h_curve[i];
      for (std::size_t j = 0; j < m->concentration.size(); ++j) row.mean.concentration[j] += m->concentration[j];
      row.mean.f_value += m->f_value;
    }
    const double count = static_cast<double>(members.size());
    for (double& v : row.mean.h_curve) v /= count;
    for (double& v : row.mean.concentration) v /= count;
    row.mean.f_value /= count;
    if (by == GroupBy::hallucination || by == GroupBy::both) row.mean.labels.hallucination = first.labels.hallucination;
    if (by == GroupBy::granularity || by == GroupBy::both) row.mean.labels.granularity = first.labels.granularity;
    out.push_back(std::move(row));
  }
  return out;
}

nlohmann::json to_json(const ConsistencyReport& r) {
  nlohmann::json j = {{"h_curve", r.h_curve}, {"f_value", r.f_value}, {"concentration", r.concentration}};
  j["label"] = r.labels.hallucination ? nlohmann::json(*r.labels.hallucination) : nlohmann::json(nullptr);
  j["granularity"] = r.labels.granularity ? nlohmann::json(to_string(*r.labels.granularity)) : nlohmann::json(nullptr);
  return j;
}

nlohmann::json to_json(std::span<const GroupRow> rows) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& row : rows) {
    nlohmann::json j = to_json(row.mean);
    j["group"] = row.group;
    j["count"] = row.count;
    out.push_back(std::move(j));
  }
  return out;
}

std::string h_curve_csv(std::span<const GroupRow> rows) {
  std::string out = "group,i,H_i\n";
  for (const auto& row : rows)
    for (std::size_t i = 0; i < row.mean.h_curve.size(); ++i)
      out += row.group + "," + std::to_string(i + 1) + "," + fmt(row.mean.h_curve[i]) + "\n";
  return out;
}

std::string concentration_csv(std::span<const GroupRow> rows) {
  std::string out = "group,j,share\n";
  for (const auto& row : rows)
    for (std::size_t j = 0; j < row.mean.concentration.size(); ++j)
      out += row.group + "," + std::to_string(j + 1) + "," + fmt(row.mean.concentration[j]) + "\n";
  return out;
}

}  // namespace damro::analysis
