#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "damro/lvlm.hpp"
#include "json.hpp"

namespace damro::cli {

inline constexpr const char* kToolVersion = "0.1.0";

// Exit statuses.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;  // bad flags, missing files, invalid inputs

// Entry point shared by tools/damro.cpp and the integration tests. args[0] is
// the program name.
int run(const std::vector<std::string>& args);

struct GenerateOptions {
  std::filesystem::path model_config;
  std::filesystem::path image;
  std::string prompt_ids;
  bool damro = false;
  std::optional<double> alpha;  // default: default_alpha(n, caption)
  double beta = 0.1;
  std::size_t topk = 0;
  std::uint64_t seed = 42;
  std::size_t max_new_tokens = 1024;
  bool compact_positions = false;
  std::size_t keep_only = 0;
  std::filesystem::path out;
};

struct AnalyzeOptions {
  std::filesystem::path encoder;
  std::filesystem::path decoder;
  std::filesystem::path pairs;  // JSONL of {encoder, decoder, label?, granularity?}
  std::optional<std::string> label;
  std::optional<std::string> granularity;
  std::optional<std::size_t> i_max;  // default min(10, n)
  std::optional<std::size_t> j_max;  // default min(10, n)
  std::string group_by = "auto";     // auto|none|hallucination|granularity|both
  std::filesystem::path out;
};

struct EvalOptions {
  std::string kind;  // caption|pope
  std::filesystem::path dataset;
  std::filesystem::path lexicon;
  std::filesystem::path out;
};

struct SweepOptions {
  std::filesystem::path model_config;
  std::filesystem::path image;
  std::string prompt_ids;
  std::vector<double> alpha_grid;
  std::vector<std::size_t> topk_grid;
  std::vector<std::string> keep_only_grid;  // counts or "all"
  std::optional<double> alpha;              // fixed alpha for a top-k-only sweep
  std::size_t topk = 0;                     // fixed k for an alpha-only sweep
  double beta = 0.1;
  std::uint64_t seed = 42;
  std::size_t max_new_tokens = 64;
  bool compact_positions = false;
  std::size_t jobs = 1;
  std::filesystem::path out;
};

struct MakeImageOptions {
  std::filesystem::path model_config;
  std::string pattern = "blocks";  // noise|blocks|gradient
  std::uint64_t seed = 42;
  std::filesystem::path out;
};

int run_generate(const GenerateOptions& opt);
int run_analyze(const AnalyzeOptions& opt);
int run_eval(const EvalOptions& opt);
int run_sweep(const SweepOptions& opt);
int run_make_image(const MakeImageOptions& opt);

// Synthetic deterministic fixture images.
lvlm::ImageInput make_image(const lvlm::ModelConfig& config, const std::string& pattern, std::uint64_t seed);

// Written last by every command into its output directory.
struct RunManifest {
  std::string command;
  nlohmann::json config;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;  // file names relative to the output directory
  std::uint64_t seed = 0;
  std::chrono::steady_clock::time_point started = std::chrono::steady_clock::now();

  nlohmann::json to_json() const;
  void write(const std::filesystem::path& out_dir) const;
};

}  // namespace damro::cli
