#pragma once

// Encoder/decoder attention consistency diagnostics: top-i overlap, the
// decoder mass landing on the encoder's top-3 positions, and sorted
// attention concentration curves.

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace damro::analysis {

enum class Granularity { sentence, object };

struct Labels {
  std::optional<std::string> hallucination;  // "HA" or "Non-HA"
  std::optional<Granularity> granularity;
};

struct ConsistencyReport {
  std::vector<double> h_curve;        // H_i for i = 1..i_max
  double f_value = 0.0;
  std::vector<double> concentration;  // cumulative top-j encoder mass, j = 1..j_max
  Labels labels;
};

// The i highest-weight positions, sorted ascending. Ties favour lower
// positions. Requires 1 <= i <= attn.size().
std::vector<std::size_t> top_set(std::span<const double> attn, std::size_t i);

// |top_i(encoder) ∩ top_i(decoder)| / i
double h_consistency(std::span<const double> encoder_attn, std::span<const double> decoder_attn, std::size_t i);

// Decoder mass on the encoder's three highest positions over total decoder
// mass. The decoder vector need not sum to 1. The top-3 mass is summed in
// encoder rank order, the remaining mass in position order, and the total is
// their sum, so the ratio lies in [0, 1] and is exactly 1 when the decoder
// puts no mass elsewhere.
double f_influence(std::span<const double> encoder_attn, std::span<const double> decoder_attn);

// Running sum of the weights sorted descending, first j_max entries.
std::vector<double> concentration_curve(std::span<const double> attn, std::size_t j_max);

ConsistencyReport analyze_pair(std::span<const double> encoder_attn, std::span<const double> decoder_attn,
                               std::size_t i_max, std::size_t j_max, Labels labels = {});

enum class GroupBy { none, hallucination, granularity, both };

struct GroupRow {
  std::string group;
  std::size_t count = 0;
  ConsistencyReport mean;
};

// Per-group arithmetic means, groups sorted by name. Unlabeled reports fall
// into group "unlabeled"; GroupBy::none puts everything in "all".
std::vector<GroupRow> aggregate_reports(std::span<const ConsistencyReport> reports, GroupBy by);

const char* to_string(Granularity g);
Granularity granularity_from_string(const std::string& s);

nlohmann::json to_json(const ConsistencyReport& report);
nlohmann::json to_json(std::span<const GroupRow> rows);

// CSV text, header "group,i,H_i".
std::string h_curve_csv(std::span<const GroupRow> rows);
// CSV text, header "group,j,share".
std::string concentration_csv(std::span<const GroupRow> rows);

// Attention dump: {"source": "...", "n": N, "weights": [...]}.
struct AttentionDump {
  std::string source;
  std::vector<double> weights;
};

AttentionDump attention_dump_from_json(const nlohmann::json& doc);
AttentionDump load_attention_dump(const std::filesystem::path& path);
nlohmann::json to_json(const AttentionDump& dump);

}  // namespace damro::analysis
