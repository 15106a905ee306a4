// Copyright 2026 The refeval Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "refeval/commands.hpp"

namespace {

refeval::CountRange parse_range(const std::string& text) {
  const auto colon = text.find(':');
  try {
    if (colon == std::string::npos) {
      const auto v = static_cast<std::size_t>(std::stoull(text));
      return {v, v};
    }
    return {static_cast<std::size_t>(std::stoull(text.substr(0, colon))),
            static_cast<std::size_t>(std::stoull(text.substr(colon + 1)))};
  } catch (const std::exception&) {
    throw CLI::ValidationError("range", "expected N or LO:HI, got '" + text + "'");
  }
}

}  // namespace

int main(int argc, char** argv) {
  using namespace refeval;
  CLI::App app{"Multi-instance referring expression evaluation toolkit"};
  app.require_subcommand(1);

  const std::map<std::string, DensityNumerator> numerators{
      {"image-persons", DensityNumerator::kImagePersons},
      {"referring-gt", DensityNumerator::kReferringGt}};
  const unsigned env_workers = cli::default_workers();

  // evaluate
  cli::EvaluateArgs eval_args;
  eval_args.workers = env_workers;
  std::string eval_subset;
  auto* evaluate = app.add_subcommand("evaluate", "Score predictions against a dataset");
  evaluate->add_option("dataset", eval_args.dataset_path, "Dataset file (.jsonl)")->required();
  evaluate->add_option("predictions", eval_args.predictions_path, "Prediction file (.jsonl)")
      ->required();
  evaluate->add_flag("--point-eval", eval_args.point_eval,
                     "Require point predictions scored by point-in-mask containment");
  evaluate->add_option("--density-numerator", eval_args.numerator,
                       "Numerator of the density penalty")
      ->transform(CLI::CheckedTransformer(numerators, CLI::ignore_case));
  evaluate->add_option("--subset", eval_subset, "Only evaluate this subset");
  evaluate->add_option("--report", eval_args.report_path, "Write the JSON report here");
  evaluate->add_option("--table", eval_args.table_path, "Also write the text table here");
  evaluate->add_option("--workers", eval_args.workers, "Worker threads (env REFEVAL_WORKERS)")
      ->check(CLI::PositiveNumber);

  // validate
  std::string validate_dataset_path, validate_report;
  auto* validate = app.add_subcommand("validate", "Check dataset invariants");
  validate->add_option("dataset", validate_dataset_path, "Dataset file (.jsonl)")->required();
  validate->add_option("--report", validate_report, "Write violations as JSON here");

  // stats
  std::string stats_dataset, stats_report, stats_hist;
  auto* stats = app.add_subcommand("stats", "Dataset statistics");
  stats->add_option("dataset", stats_dataset, "Dataset file (.jsonl)")->required();
  stats->add_option("--report", stats_report, "Write the JSON statistics here");
  stats->add_option("--hist-csv", stats_hist, "Write histogram rows (CSV) here");

  // synth
  cli::SynthArgs synth_args;
  std::string persons_range, gts_range, refs_range;
  auto* synth = app.add_subcommand("synth", "Generate a seeded synthetic benchmark");
  synth->add_option("--config", synth_args.config_path, "JSON generator config");
  synth->add_option("--seed", synth_args.config.seed, "Generator seed");
  synth->add_option("--n-images", synth_args.config.n_images, "Number of images");
  synth->add_option("--persons", persons_range, "Persons per image, N or LO:HI");
  synth->add_option("--gts", gts_range, "Ground-truth boxes per referring, N or LO:HI");
  synth->add_option("--refs", refs_range, "Referrings per image, N or LO:HI");
  synth->add_option("--width", synth_args.config.image_width, "Image width");
  synth->add_option("--height", synth_args.config.image_height, "Image height");
  synth->add_option("--rejection-fraction", synth_args.config.rejection_fraction,
                    "Fraction of rejection referrings");
  synth->add_option("--jitter", synth_args.config.jitter, "Jitter recorded in the config");
  synth->add_flag("!--no-masks", synth_args.config.with_masks, "Omit person masks");
  synth->add_option("--out", synth_args.out_path, "Dataset output (default stdout)");
  synth->add_option("--ledger", synth_args.ledger_path, "Generation ledger sidecar (JSON)");

  // baseline
  std::string baseline_kind, baseline_dataset, baseline_out;
  std::uint64_t baseline_seed = 1;
  auto* baseline = app.add_subcommand("baseline", "Emit reference predictions");
  baseline
      ->add_option("kind", baseline_kind,
                   "all_persons | oracle | empty | top_k:K | jittered_oracle:J")
      ->required();
  baseline->add_option("dataset", baseline_dataset, "Dataset file (.jsonl)")->required();
  baseline->add_option("--seed", baseline_seed, "Seed for jittered_oracle");
  baseline->add_option("--out", baseline_out, "Prediction output (default stdout)");

  // figure6
  cli::Figure6Args fig_args;
  fig_args.workers = env_workers;
  auto* figure6 =
      app.add_subcommand("figure6", "Recall/precision by number of ground-truth instances");
  figure6->add_option("dataset", fig_args.dataset_path, "Dataset file (.jsonl)")->required();
  figure6->add_option("predictions", fig_args.predictions_path, "Prediction file (.jsonl)")
      ->required();
  figure6->add_option("--density-numerator", fig_args.numerator, "Numerator of the density penalty")
      ->transform(CLI::CheckedTransformer(numerators, CLI::ignore_case));
  figure6->add_option("--json", fig_args.json_path, "Write buckets as JSON here");
  figure6->add_option("--workers", fig_args.workers, "Worker threads (env REFEVAL_WORKERS)")
      ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? cli::kSuccess : cli::kUsage;
  }

  if (*evaluate) {
    if (!eval_subset.empty()) {
      eval_args.subset = parse_subset(eval_subset);
      if (!eval_args.subset) {
        std::cerr << "refeval: unknown subset '" << eval_subset << "'\n";
        return cli::kUsage;
      }
    }
    return cli::cmd_evaluate(eval_args, std::cout, std::cerr);
  }
  if (*validate) return cli::cmd_validate(validate_dataset_path, validate_report, std::cout, std::cerr);
  if (*stats) return cli::cmd_stats(stats_dataset, stats_report, stats_hist, std::cout, std::cerr);
  if (*synth) {
    try {
      if (!persons_range.empty()) synth_args.config.persons_per_image = parse_range(persons_range);
      if (!gts_range.empty()) synth_args.config.gts_per_ref = parse_range(gts_range);
      if (!refs_range.empty()) synth_args.config.refs_per_image = parse_range(refs_range);
    } catch (const CLI::ValidationError& e) {
      std::cerr << "refeval: " << e.what() << '\n';
      return cli::kUsage;
    }
    return cli::cmd_synth(synth_args, std::cout, std::cerr);
  }
  if (*baseline) {
    return cli::cmd_baseline(baseline_kind, baseline_seed, baseline_dataset, baseline_out,
                             std::cout, std::cerr);
  }
  if (*figure6) return cli::cmd_figure6(fig_args, std::cout, std::cerr);
  return cli::kUsage;
}
