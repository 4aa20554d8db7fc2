#include <algorithm>
#include <fstream>

#include "common.hpp"
#include "damro/cli.hpp"
#include "damro/consistency.hpp"

namespace damro::cli {

namespace {

struct Pair {
  std::filesystem::path encoder;
  std::filesystem::path decoder;
  analysis::Labels labels;
};

analysis::Labels make_labels(const std::optional<std::string>& label, const std::optional<std::string>& granularity) {
  analysis::Labels out;
  if (label) {
    if (*label != "HA" && *label != "Non-HA") throw InputError("label must be HA or Non-HA, got '" + *label + "'");
    out.hallucination = *label;
  }
  if (granularity) out.granularity = analysis::granularity_from_string(*granularity);
  return out;
}

std::vector<Pair> read_pairs(const std::filesystem::path& path) {
  require_file(path, "pairs file");
  std::ifstream in(path);
  std::vector<Pair> out;
  std::string text;
  std::size_t line = 0;
  const auto base = path.parent_path();
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto where = path.string() + ": line " + std::to_string(line) + ": ";
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      throw InputError(where + "malformed JSON");
    }
    auto str = [&](const char* f) -> std::optional<std::string> {
      if (!obj.contains(f) || obj[f].is_null()) return std::nullopt;
      if (!obj[f].is_string()) throw InputError(where + "field '" + f + "' must be a string");
      return obj[f].get<std::string>();
    };
    auto enc = str("encoder");
    auto dec = str("decoder");
    if (!enc) throw InputError(where + "missing field 'encoder'");
    if (!dec) throw InputError(where + "missing field 'decoder'");
    Pair p;
    p.encoder = std::filesystem::path(*enc).is_absolute() ? std::filesystem::path(*enc) : base / *enc;
    p.decoder = std::filesystem::path(*dec).is_absolute() ? std::filesystem::path(*dec) : base / *dec;
    try {
      p.labels = make_labels(str("label"), str("granularity"));
    } catch (const InputError& e) {
      throw InputError(where + e.what());
    }
    out.push_back(std::move(p));
  }
  if (out.empty()) throw InputError(path.string() + ": no pairs");
  return out;
}

analysis::GroupBy group_by_from(const std::string& s, const std::vector<Pair>& pairs) {
  if (s == "none") return analysis::GroupBy::none;
  if (s == "hallucination") return analysis::GroupBy::hallucination;
  if (s == "granularity") return analysis::GroupBy::granularity;
  if (s == "both") return analysis::GroupBy::both;
  if (s != "auto") throw InputError("--group-by must be auto, none, hallucination, granularity or both");
  const bool ha = std::any_of(pairs.begin(), pairs.end(), [](const Pair& p) { return p.labels.hallucination; });
  const bool gr = std::any_of(pairs.begin(), pairs.end(), [](const Pair& p) { return p.labels.granularity; });
  if (ha && gr) return analysis::GroupBy::both;
  if (ha) return analysis::GroupBy::hallucination;
  if (gr) return analysis::GroupBy::granularity;
  return analysis::GroupBy::none;
}

}  // namespace

int run_analyze(const AnalyzeOptions& opt) {
  RunManifest manifest;
  manifest.command = "analyze";

  std::vector<Pair> pairs;
  if (!opt.pairs.empty()) {
    if (!opt.encoder.empty() || !opt.decoder.empty()) throw InputError("use either --pairs or --encoder/--decoder");
    pairs = read_pairs(opt.pairs);
    manifest.inputs.push_back(opt.pairs.string());
  } else {
    require_file(opt.encoder, "encoder attention dump");
    require_file(opt.decoder, "decoder attention dump");
    pairs.push_back({opt.encoder, opt.decoder, make_labels(opt.label, opt.granularity)});
  }
  prepare_out_dir(opt.out);

  std::vector<analysis::ConsistencyReport> reports;
  std::size_t i_max = 0, j_max = 0;
  for (const auto& p : pairs) {
    const auto enc = analysis::load_attention_dump(p.encoder);
    const auto dec = analysis::load_attention_dump(p.decoder);
    manifest.inputs.push_back(p.encoder.string());
    manifest.inputs.push_back(p.decoder.string());
    if (enc.weights.size() != dec.weights.size())
      throw InputError("length mismatch: " + p.encoder.string() + " has n=" + std::to_string(enc.weights.size()) +
                       ", " + p.decoder.string() + " has n=" + std::to_string(dec.weights.size()));
    const std::size_t n = enc.weights.size();
    i_max = opt.i_max.value_or(std::min<std::size_t>(10, n));
    j_max = opt.j_max.value_or(std::min<std::size_t>(10, n));
    reports.push_back(analysis::analyze_pair(enc.weights, dec.weights, i_max, j_max, p.labels));
  }

  const auto by = group_by_from(opt.group_by, pairs);
  const auto groups = analysis::aggregate_reports(reports, by);

  nlohmann::json per_pair = nlohmann::json::array();
  for (const auto& r : reports) per_pair.push_back(analysis::to_json(r));
  json_io::write_file(opt.out / "consistency_report.json",
                      {{"i_max", i_max}, {"j_max", j_max}, {"reports", per_pair}, {"groups", analysis::to_json(groups)}});
  json_io::write_text(opt.out / "h_curve.csv", analysis::h_curve_csv(groups));
  json_io::write_text(opt.out / "concentration.csv", analysis::concentration_csv(groups));

  manifest.config = {{"i_max", i_max}, {"j_max", j_max}, {"group_by", opt.group_by}};
  manifest.outputs = {"consistency_report.json", "h_curve.csv", "concentration.csv"};
  manifest.write(opt.out);
  return kExitOk;
}

}  // namespace damro::cli
