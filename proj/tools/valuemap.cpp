// Command-line front end for the survey value-alignment toolkit.
#include <iostream>

#include "CLI11.hpp"
#include "valuemap/config.hpp"
#include "valuemap/error.hpp"
#include "valuemap/io.hpp"
#include "valuemap/pipeline.hpp"
#include "valuemap/stats.hpp"
#include "valuemap/synthetic.hpp"

using namespace valuemap;

namespace {

struct Overrides {
  std::string output_dir;
  int min_n = 0;
  int parallelism = 0;
  long long seed = -1;
  double rpm = -1;
};

RunConfig load(const std::string& path, const Overrides& o) {
  RunConfig c = load_config(path);
  if (!o.output_dir.empty()) c.output_dir = o.output_dir;
  if (o.min_n > 0) c.min_n = o.min_n;
  if (o.parallelism > 0) c.parallelism = o.parallelism;
  if (o.seed >= 0) c.seed = static_cast<std::uint64_t>(o.seed);
  if (o.rpm >= 0) c.requests_per_minute = o.rpm;
  c.validate();
  return c;
}

void report(const CommandResult& r, bool verbose) {
  std::cout << r.summary;
  if (verbose)
    for (const auto& p : r.written) std::cout << "  wrote " << p.string() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Map value conflict across survey subgroups and evaluate persona-conditioned models"};
  app.require_subcommand(1);

  std::string config_path;
  Overrides ov;
  bool verbose = false;
  std::string split_text = "eval_ood";

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", config_path, "Run configuration (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--output-dir", ov.output_dir, "Override the output directory");
    sub->add_option("--min-n", ov.min_n, "Override the subgroup size threshold");
    sub->add_option("--parallelism", ov.parallelism, "Override the number of requests in flight");
    sub->add_option("--seed", ov.seed, "Override the bootstrap seed");
    sub->add_option("--rpm", ov.rpm, "Override the requests-per-minute limit (0 = none)");
    sub->add_flag("-v,--verbose", verbose, "List the files written");
  };
  auto add_split = [&](CLI::App* sub) {
    sub->add_option("--split", split_text, "train or eval_ood")->check(CLI::IsMember({"train", "eval_ood"}));
  };

  auto* landscape = app.add_subcommand("landscape", "Modal diversity, Wasserstein and category summaries");
  add_common(landscape);

  auto* build = app.add_subcommand("build-dataset", "Train and held-out prompt records with gold modal answers");
  add_common(build);

  EvalOptions eval;
  auto* numeric = app.add_subcommand("eval-numeric", "Query a model with numeric prompts and score the answers");
  add_common(numeric);
  add_split(numeric);
  numeric->add_option("-m,--model", eval.model, "Model label from the config")->required();
  numeric->add_flag("--replay", eval.replay, "Score stored responses only");
  numeric->add_flag("--fresh", eval.fresh, "Ignore stored responses");

  auto* open = app.add_subcommand("eval-open", "Collect open-ended responses for judging");
  add_common(open);
  add_split(open);
  open->add_option("-m,--model", eval.model, "Model label from the config")->required();
  open->add_flag("--replay", eval.replay, "Use stored responses only");
  open->add_flag("--fresh", eval.fresh, "Ignore stored responses");

  JudgeOptions jopt;
  auto* judge = app.add_subcommand("judge", "Double-pass pairwise judging of open-ended responses");
  add_common(judge);
  add_split(judge);
  judge->add_option("-e,--evaluatee", jopt.evaluatee, "Model being evaluated")->required();
  judge->add_option("-b,--baseline", jopt.baseline, "Reference model")->required();
  judge->add_flag("--replay", jopt.replay, "Use stored verdicts only");
  judge->add_flag("--fresh", jopt.fresh, "Ignore stored verdicts");

  CompareOptions copt;
  auto* compare = app.add_subcommand("compare", "Deltas, bootstrap intervals and disparity between two scored runs");
  add_common(compare);
  add_split(compare);
  compare->add_option("-a,--before", copt.run_a, "Run treated as the starting point")->required();
  compare->add_option("-b,--after", copt.run_b, "Run compared against it")->required();

  std::string baseline;
  auto* rep = app.add_subcommand("report", "Main results table over every scored run");
  add_common(rep);
  add_split(rep);
  rep->add_option("-b,--baseline", baseline, "Judge baseline whose win rates are shown");

  std::string synth_dir = "demo";
  std::uint64_t synth_seed = 2024;
  auto* synth = app.add_subcommand("synth-survey", "Write a synthetic survey and an example configuration");
  synth->add_option("-o,--out", synth_dir, "Target directory");
  synth->add_option("--seed", synth_seed, "Generator seed");

  std::string annotations, criterion = "overall", ann_a, ann_b;
  auto* agree = app.add_subcommand("agreement", "Agreement between two annotators on A/B/Tie labels");
  agree->add_option("annotations", annotations, "CSV with item_id, annotator_id, criterion, label")
      ->required()
      ->check(CLI::ExistingFile);
  agree->add_option("--criterion", criterion, "Criterion to compare");
  agree->add_option("--first", ann_a, "First annotator id")->required();
  agree->add_option("--second", ann_b, "Second annotator id")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) {
      auto paths = write_synthetic_survey(synth_dir, synth_seed);
      io::write_file(std::filesystem::path(synth_dir) / "config.json", example_config_json());
      std::cout << "wrote " << paths.codebook.string() << ", " << paths.responses.string() << " and "
                << (std::filesystem::path(synth_dir) / "config.json").string() << "\n";
      return 0;
    }
    if (agree->parsed()) {
      auto rows = stats::load_annotations(annotations);
      auto r = stats::annotator_agreement(rows, criterion, ann_a, ann_b);
      std::cout << "items " << r.n_items << "  accuracy " << io::fixed(r.accuracy, 3) << "  weighted kappa "
                << (r.kappa_defined ? io::fixed(r.weighted_kappa, 3) : std::string("undefined")) << "\n";
      return 0;
    }
    const RunConfig config = load(config_path, ov);
    const Split split = parse_split(split_text);
    eval.split = jopt.split = copt.split = split;
    if (landscape->parsed()) report(cmd_landscape(config), verbose);
    else if (build->parsed()) report(cmd_build_dataset(config), verbose);
    else if (numeric->parsed()) report(cmd_eval_numeric(config, eval), verbose);
    else if (open->parsed()) report(cmd_eval_open(config, eval), verbose);
    else if (judge->parsed()) report(cmd_judge(config, jopt), verbose);
    else if (compare->parsed()) report(cmd_compare(config, copt), verbose);
    else if (rep->parsed()) report(cmd_report(config, split, baseline), verbose);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
