#include "common.hpp"
#include "damro/cli.hpp"
#include "damro/eval.hpp"

namespace damro::cli {

int run_eval(const EvalOptions& opt) {
  RunManifest manifest;
  manifest.command = "eval";
  require_file(opt.dataset, "dataset");
  manifest.inputs.push_back(opt.dataset.string());

  eval::EvalReport report;
  if (opt.kind == "caption") {
    require_file(opt.lexicon, "lexicon");
    manifest.inputs.push_back(opt.lexicon.string());
    const auto lexicon = eval::load_lexicon(opt.lexicon);
    const auto items = eval::load_caption_dataset(opt.dataset);
    report = eval::chair_scores(items, lexicon);
    report.config = {{"kind", "caption"}, {"dataset", opt.dataset.filename().string()},
                     {"lexicon", opt.lexicon.filename().string()}, {"items", items.size()}};
  } else if (opt.kind == "pope") {
    const auto items = eval::load_pope_dataset(opt.dataset);
    report = eval::pope_scores(items);
    report.config = {{"kind", "pope"}, {"dataset", opt.dataset.filename().string()}, {"items", items.size()}};
  } else {
    throw InputError("--kind must be caption or pope");
  }
  prepare_out_dir(opt.out);

  json_io::write_file(opt.out / "eval_report.json", eval::to_json(report));
  json_io::write_text(opt.out / "eval_summary.csv", eval::to_csv(report));

  manifest.config = report.config;
  manifest.outputs = {"eval_report.json", "eval_summary.csv"};
  manifest.write(opt.out);
  return kExitOk;
}

}  // namespace damro::cli
