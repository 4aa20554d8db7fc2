#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <thread>

#include "common.hpp"
#include "damro/attention_tap.hpp"
#include "damro/cli.hpp"
#include "damro/decoder.hpp"
#include "damro/numerics.hpp"

namespace damro::cli {

namespace {

struct GridPoint {
  std::string mode;  // "damro" or "keep_only"
  double alpha = 0.0;
  std::size_t topk = 0;
  std::size_t keep_only = 0;  // 0 for damro rows
  std::string keep_only_label;
};

struct RowResult {
  std::vector<decode::TokenId> tokens;
  bool eos = false;
  double mean_head_size = 0.0;
  double mean_max_prob = 0.0;
  double first_step_tv = 0.0;
  double first_step_max_abs_diff = 0.0;
  bool first_step_identical = false;
};

template <typename T>
std::vector<T> dedup(std::vector<T> values, const char* name) {
  std::sort(values.begin(), values.end());
  const auto before = values.size();
  values.erase(std::unique(values.begin(), values.end()), values.end());
  if (values.size() != before)
    logger()->warn("{}: dropped {} duplicate grid value(s)", name, before - values.size());
  return values;
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string digest(const std::vector<decode::TokenId>& tokens) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (auto t : tokens)
    for (int i = 0; i < 4; ++i) {
      h ^= (t >> (8 * i)) & 0xffu;
      h *= 0x100000001b3ULL;
    }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace

int run_sweep(const SweepOptions& opt) {
  RunManifest manifest;
  manifest.command = "sweep";
  manifest.seed = opt.seed;

  const lvlm::ModelConfig mc = load_config(opt.model_config);
  const lvlm::ImageInput image = load_image(opt.image, mc);
  const lvlm::PromptTokens prompt = lvlm::parse_prompt_ids(opt.prompt_ids);
  const std::size_t n = mc.num_patches();

  std::vector<std::size_t> keep_counts;
  for (const auto& s : opt.keep_only_grid) {
    if (s == "all") {
      keep_counts.push_back(n);
      continue;
    }
    std::size_t v = 0;
    try {
      std::size_t used = 0;
      v = std::stoul(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
    } catch (const std::exception&) {
      throw InputError("--keep-only-grid: '" + s + "' is neither a count nor 'all'");
    }
    if (v == 0 || v > n) throw InputError("--keep-only-grid: count " + s + " outside [1, " + std::to_string(n) + "]");
    keep_counts.push_back(v);
  }
  keep_counts = dedup(std::move(keep_counts), "keep-only grid");
  const auto alphas = dedup(opt.alpha_grid, "alpha grid");
  const auto ks = dedup(opt.topk_grid, "top-k grid");
  for (double a : alphas)
    if (!(a >= 0.0) || !std::isfinite(a)) throw InputError("--alpha-grid: values must be finite and >= 0");
  for (std::size_t k : ks)
    if (k == 0 || k > n) throw InputError("--topk-grid: k outside [1, " + std::to_string(n) + "]");

  std::vector<GridPoint> grid;
  if (!alphas.empty() || !ks.empty()) {
    const double fixed_alpha = opt.alpha.value_or(decode::default_alpha(n, decode::TaskStyle::caption));
    const std::size_t fixed_k = opt.topk ? opt.topk : tap::default_topk(n);
    for (double a : alphas.empty() ? std::vector<double>{fixed_alpha} : alphas)
      for (std::size_t k : ks.empty() ? std::vector<std::size_t>{fixed_k} : ks)
        grid.push_back({"damro", a, k, 0, ""});
  }
  for (std::size_t c : keep_counts) grid.push_back({"keep_only", 0.0, 0, c, c == n ? "all" : std::to_string(c)});
  if (grid.empty()) throw InputError("empty sweep grid: give --alpha-grid, --topk-grid and/or --keep-only-grid");
  prepare_out_dir(opt.out);

  const auto model = lvlm::build_model(mc);
  decode::DecodeConfig base;
  base.beta = opt.beta;
  base.seed = opt.seed;
  base.max_new_tokens = opt.max_new_tokens;
  base.keep_original_positions = !opt.compact_positions;
  base.validate();

  decode::DecodeConfig ref_cfg = base;
  ref_cfg.max_new_tokens = 1;
  const auto reference = decode::baseline_generate(model, image, prompt, ref_cfg);
  const std::vector<double>& ref_logits = reference.trace.steps.front().full_logits;
  const std::vector<double> ref_probs = softmax(ref_logits);

  std::vector<RowResult> rows(grid.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&] {
    for (std::size_t idx = next++; idx < grid.size(); idx = next++) {
      try {
        const GridPoint& g = grid[idx];
        decode::DecodeConfig cfg = base;
        decode::GenerationResult res;
        if (g.mode == "damro") {
          cfg.alpha = g.alpha;
          cfg.k = g.topk;
          res = decode::damro_generate(model, image, prompt, cfg);
        } else {
          cfg.keep_only_count = g.keep_only;
          res = decode::baseline_generate(model, image, prompt, cfg);
        }
        RowResult& r = rows[idx];
        r.tokens = res.tokens;
        r.eos = res.trace.stopped_by_eos;
        for (const auto& s : res.trace.steps) {
          r.mean_head_size += static_cast<double>(s.head.size());
          r.mean_max_prob += *std::max_element(s.sampling.begin(), s.sampling.end());
        }
        r.mean_head_size /= static_cast<double>(res.trace.steps.size());
        r.mean_max_prob /= static_cast<double>(res.trace.steps.size());
        const auto& first = res.trace.steps.front();
        for (std::size_t i = 0; i < ref_probs.size(); ++i) {
          r.first_step_tv += 0.5 * std::fabs(first.contrastive[i] - ref_probs[i]);
          r.first_step_max_abs_diff = std::max(r.first_step_max_abs_diff, std::fabs(first.full_logits[i] - ref_logits[i]));
        }
        r.first_step_identical = first.full_logits == ref_logits;
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const std::size_t jobs = std::clamp<std::size_t>(opt.jobs, 1, grid.size());
  std::vector<std::thread> pool;
  for (std::size_t j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);

  std::string csv =
      "mode,alpha,topk,keep_only,tokens_generated,stopped_by_eos,token_digest,mean_head_size,mean_max_prob,"
      "first_step_tv_vs_full,first_step_max_abs_logit_diff,first_step_logits_identical\n";
  nlohmann::json json_rows = nlohmann::json::array();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const GridPoint& g = grid[i];
    const RowResult& r = rows[i];
    const bool damro_row = g.mode == "damro";
    csv += g.mode + "," + (damro_row ? num(g.alpha) : "") + "," + (damro_row ? std::to_string(g.topk) : "") + "," +
           g.keep_only_label + "," + std::to_string(r.tokens.size()) + "," + (r.eos ? "true" : "false") + "," +
           digest(r.tokens) + "," + num(r.mean_head_size) + "," + num(r.mean_max_prob) + "," + num(r.first_step_tv) +
           "," + num(r.first_step_max_abs_diff) + "," + (r.first_step_identical ? "true" : "false") + "\n";
    json_rows.push_back({
        {"mode", g.mode},
        {"alpha", damro_row ? nlohmann::json(g.alpha) : nlohmann::json(nullptr)},
        {"topk", damro_row ? nlohmann::json(g.topk) : nlohmann::json(nullptr)},
        {"keep_only", damro_row ? nlohmann::json(nullptr) : nlohmann::json(g.keep_only_label)},
        {"keep_only_count", damro_row ? nlohmann::json(nullptr) : nlohmann::json(g.keep_only)},
        {"tokens", r.tokens},
        {"stopped_by_eos", r.eos},
        {"mean_head_size", r.mean_head_size},
        {"mean_max_prob", r.mean_max_prob},
        {"first_step_tv_vs_full", r.first_step_tv},
        {"first_step_max_abs_logit_diff", r.first_step_max_abs_diff},
        {"first_step_logits_identical", r.first_step_identical},
    });
  }
  json_io::write_text(opt.out / "sweep.csv", csv);
  json_io::write_file(opt.out / "sweep.json", {{"n", n}, {"rows", json_rows}});

  manifest.config = {{"model", lvlm::to_json(mc)}, {"decode", decode::to_json(base)}, {"grid_points", grid.size()},
                     {"prompt_ids", prompt.ids}};
  manifest.inputs = {opt.model_config.string(), opt.image.string()};
  manifest.outputs = {"sweep.csv", "sweep.json"};
  manifest.write(opt.out);
  return kExitOk;
}

}  // namespace damro::cli
