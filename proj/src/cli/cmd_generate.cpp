#include <fstream>

#include "common.hpp"
#include "damro/cli.hpp"
#include "damro/decoder.hpp"

namespace damro::cli {

namespace {

nlohmann::json scatter_dump(const char* source, std::size_t n, const std::vector<std::size_t>& positions,
                            const std::vector<double>& weights) {
  std::vector<double> full(n, 0.0);
  for (std::size_t i = 0; i < positions.size(); ++i) full[positions[i]] = weights[i];
  return {{"source", source}, {"n", n}, {"weights", full}};
}

}  // namespace

int run_generate(const GenerateOptions& opt) {
  RunManifest manifest;
  manifest.command = opt.damro ? "generate --damro" : "generate";
  manifest.seed = opt.seed;

  const lvlm::ModelConfig mc = load_config(opt.model_config);
  const lvlm::ImageInput image = load_image(opt.image, mc);
  const lvlm::PromptTokens prompt = lvlm::parse_prompt_ids(opt.prompt_ids);
  prepare_out_dir(opt.out);

  decode::DecodeConfig dc;
  dc.alpha = opt.alpha.value_or(decode::default_alpha(mc.num_patches(), decode::TaskStyle::caption));
  dc.beta = opt.beta;
  dc.k = opt.topk;
  dc.seed = opt.seed;
  dc.max_new_tokens = opt.max_new_tokens;
  dc.keep_original_positions = !opt.compact_positions;
  dc.keep_only_count = opt.keep_only;

  const auto model = lvlm::build_model(mc);
  logger()->info("model weights {} ({} patches, vocab {})", model->weight_checksum(), mc.num_patches(), mc.vocab_size);
  const auto result = opt.damro ? decode::damro_generate(model, image, prompt, dc)
                                : decode::baseline_generate(model, image, prompt, dc);
  const auto& trace = result.trace;
  logger()->info("generated {} tokens ({})", result.tokens.size(), trace.stopped_by_eos ? "eos" : "limit");

  const std::size_t n = mc.num_patches();
  json_io::write_file(opt.out / "tokens.json",
                      {{"tokens", result.tokens}, {"stopped_by", trace.stopped_by_eos ? "eos" : "max_new_tokens"}});
  json_io::write_file(opt.out / "trace.json", decode::to_json(trace, result.tokens));
  json_io::write_file(opt.out / "attention_encoder.json",
                      scatter_dump("encoder_cls", n, trace.encoder_attention.positions, trace.encoder_attention.aggregate));

  // Sentence-level decoder map: mean of the per-step aggregates.
  std::vector<double> mean(trace.full_positions.size(), 0.0);
  std::string steps_jsonl;
  for (std::size_t t = 0; t < trace.steps.size(); ++t) {
    const auto& w = trace.steps[t].decoder_attention;
    for (std::size_t i = 0; i < w.size(); ++i) mean[i] += w[i];
    nlohmann::json line = scatter_dump("decoder_step", n, trace.full_positions, w);
    line["step_index"] = t;
    line["token"] = trace.steps[t].token;
    steps_jsonl += line.dump() + "\n";
  }
  for (double& v : mean) v /= static_cast<double>(trace.steps.size());
  json_io::write_file(opt.out / "attention_decoder.json", scatter_dump("decoder_mean", n, trace.full_positions, mean));
  json_io::write_text(opt.out / "attention_decoder_steps.jsonl", steps_jsonl);

  manifest.config = {{"model", lvlm::to_json(mc)}, {"decode", decode::to_json(trace.config)}, {"damro", opt.damro},
                     {"prompt_ids", prompt.ids}};
  manifest.inputs = {opt.model_config.string(), opt.image.string()};
  manifest.outputs = {"tokens.json", "trace.json", "attention_encoder.json", "attention_decoder.json",
                      "attention_decoder_steps.jsonl"};
  manifest.write(opt.out);
  return kExitOk;
}

int run_make_image(const MakeImageOptions& opt) {
  const lvlm::ModelConfig mc = load_config(opt.model_config);
  if (opt.out.empty()) throw InputError("missing required --out file");
  if (opt.out.has_parent_path()) std::filesystem::create_directories(opt.out.parent_path());
  json_io::write_file(opt.out, lvlm::to_json(make_image(mc, opt.pattern, opt.seed), mc));
  return kExitOk;
}

}  // namespace damro::cli
