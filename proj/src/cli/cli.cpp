#include <cstdlib>
#include <iostream>

#include <spdlog/sinks/stdout_sinks.h>

#include "CLI11.hpp"
#include "common.hpp"
#include "damro/cli.hpp"

namespace damro::cli {

std::shared_ptr<spdlog::logger> logger() {
  static std::shared_ptr<spdlog::logger> log = [] {
    auto l = std::make_shared<spdlog::logger>("damro", std::make_shared<spdlog::sinks::stderr_sink_mt>());
    l->set_pattern("[%l] %v");
    const char* env = std::getenv("DAMRO_LOG");
    l->set_level(env ? spdlog::level::from_str(env) : spdlog::level::warn);
    return l;
  }();
  return log;
}

namespace {

constexpr const char* kFooter =
    "Environment:\n"
    "  DAMRO_LOG      log verbosity on stderr: trace, debug, info, warn (default), error, off\n"
    "  DAMRO_KERNELS  force the arithmetic kernels: scalar or avx2 (default: best available)\n";

void add_model_flags(CLI::App* cmd, std::filesystem::path& config, std::filesystem::path& image, std::string& prompt) {
  cmd->add_option("--model-config", config, "Model config JSON")->required();
  cmd->add_option("--image", image, "Image fixture JSON (see make-image)")->required();
  cmd->add_option("--prompt-ids", prompt, "Comma-separated prompt token ids");
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"Outlier-contrastive decoding for a toy vision-language model", "damro"};
  app.footer(kFooter);
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);

  GenerateOptions gen;
  auto* g = app.add_subcommand("generate", "Sample a token sequence; --damro enables the contrastive branch");
  add_model_flags(g, gen.model_config, gen.image, gen.prompt_ids);
  g->add_flag("--damro", gen.damro, "Contrast against the outlier-only branch");
  g->add_option("--alpha", gen.alpha, "Contrast strength (default 0.5; 1.5 for 256-token grids)");
  g->add_option("--beta", gen.beta, "Plausibility threshold in [0, 1]")->capture_default_str();
  g->add_option("--topk", gen.topk, "Outlier token count (default scales with the grid)");
  g->add_option("--seed", gen.seed, "Sampling seed")->capture_default_str();
  g->add_option("--max-new-tokens", gen.max_new_tokens, "Generation limit")->capture_default_str();
  g->add_flag("--compact-positions", gen.compact_positions, "Re-index positions of subset grids");
  g->add_option("--keep-only", gen.keep_only, "Feed only the top-N CLS-attended tokens to the full branch");
  g->add_option("--out", gen.out, "Output directory")->required();

  AnalyzeOptions ana;
  auto* a = app.add_subcommand("analyze", "Encoder/decoder attention consistency (H_i, F, concentration)");
  a->add_option("--encoder", ana.encoder, "Encoder attention dump JSON");
  a->add_option("--decoder", ana.decoder, "Decoder attention dump JSON");
  a->add_option("--pairs", ana.pairs, "JSONL of {encoder, decoder, label, granularity}");
  a->add_option("--label", ana.label, "HA or Non-HA for a single pair");
  a->add_option("--granularity", ana.granularity, "sentence-level or object-level for a single pair");
  a->add_option("--i-max", ana.i_max, "Largest i for H_i (default min(10, n))");
  a->add_option("--j-max", ana.j_max, "Concentration curve length (default min(10, n))");
  a->add_option("--group-by", ana.group_by, "auto, none, hallucination, granularity or both")->capture_default_str();
  a->add_option("--out", ana.out, "Output directory")->required();

  EvalOptions ev;
  auto* e = app.add_subcommand("eval", "CHAIR or POPE scoring of a JSONL dataset");
  e->add_option("--kind", ev.kind, "caption or pope")->required();
  e->add_option("--dataset", ev.dataset, "JSONL dataset")->required();
  e->add_option("--lexicon", ev.lexicon, "Object lexicon JSON (caption mode)");
  e->add_option("--out", ev.out, "Output directory")->required();

  SweepOptions sw;
  auto* s = app.add_subcommand("sweep", "Grid over alpha, top-k and keep-only token counts");
  add_model_flags(s, sw.model_config, sw.image, sw.prompt_ids);
  s->add_option("--alpha-grid", sw.alpha_grid, "Alpha values")->delimiter(',');
  s->add_option("--topk-grid", sw.topk_grid, "Outlier counts")->delimiter(',');
  s->add_option("--keep-only-grid", sw.keep_only_grid, "Visual token counts, or 'all'")->delimiter(',');
  s->add_option("--alpha", sw.alpha, "Alpha used when only --topk-grid is given");
  s->add_option("--topk", sw.topk, "k used when only --alpha-grid is given");
  s->add_option("--beta", sw.beta, "Plausibility threshold")->capture_default_str();
  s->add_option("--seed", sw.seed, "Sampling seed")->capture_default_str();
  s->add_option("--max-new-tokens", sw.max_new_tokens, "Generation limit per grid point")->capture_default_str();
  s->add_flag("--compact-positions", sw.compact_positions, "Re-index positions of subset grids");
  s->add_option("--jobs", sw.jobs, "Grid points evaluated concurrently")->capture_default_str();
  s->add_option("--out", sw.out, "Output directory")->required();

  MakeImageOptions mk;
  auto* m = app.add_subcommand("make-image", "Write a synthetic image fixture");
  m->add_option("--model-config", mk.model_config, "Model config JSON")->required();
  m->add_option("--pattern", mk.pattern, "noise, blocks or gradient")->capture_default_str();
  m->add_option("--seed", mk.seed, "Pattern seed")->capture_default_str();
  m->add_option("--out", mk.out, "Output file")->required();

  std::vector<const char*> argv;
  for (const auto& s_ : args) argv.push_back(s_.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::Success& ok) {
    return app.exit(ok);
  } catch (const CLI::ParseError& err) {
    app.exit(err);
    return kExitUsage;
  }

  try {
    if (g->parsed()) return run_generate(gen);
    if (a->parsed()) return run_analyze(ana);
    if (e->parsed()) return run_eval(ev);
    if (s->parsed()) return run_sweep(sw);
    if (m->parsed()) return run_make_image(mk);
  } catch (const InputError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitUsage;
  } catch (const ConfigError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace damro::cli
