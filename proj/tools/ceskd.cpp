// Command-line front end: score / distill / hypothesis / ablate / report.
// All commands are non-interactive; outputs land in the config's out dir.

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ceskd/harness.hpp"

namespace {

struct CommonOpts {
  std::string config_path;
  std::vector<std::uint64_t> seeds;
  std::string out;
  std::string method;
  std::string policy;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path, "experiment config file")->required();
  cmd->add_option("--seed", opts.seeds, "seed list override");
  cmd->add_option("--out", opts.out, "output directory override");
  cmd->add_option("--method", opts.method, "method override: noKD|blkd|takd|dgkd|ceskd");
  cmd->add_option("--policy", opts.policy, "selection policy override: baseline|anti|random");
}

ceskd::ExperimentConfig resolve(const CommonOpts& opts) {
  ceskd::ExperimentConfig cfg = ceskd::parse_config(opts.config_path);
  if (!opts.seeds.empty()) cfg.seeds = opts.seeds;
  if (!opts.out.empty()) cfg.out = opts.out;
  if (!opts.method.empty()) cfg.method = ceskd::method_from(opts.method);
  if (!opts.policy.empty()) cfg.policy = ceskd::selection_kind_from(opts.policy);
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"curriculum-based expert selection for knowledge distillation"};
  app.require_subcommand(1);

  CommonOpts score_opts, distill_opts, hyp_opts, ablate_opts, report_opts;
  add_common(app.add_subcommand("score", "score the training set and write the curriculum table"),
             score_opts);
  add_common(app.add_subcommand("distill", "run the configured distillation path per seed"),
             distill_opts);
  add_common(app.add_subcommand("hypothesis", "difficulty-tercile vs teacher-capacity grid"),
             hyp_opts);
  add_common(app.add_subcommand("ablate", "baseline/anti/random selection ablation"),
             ablate_opts);
  add_common(app.add_subcommand("report", "aggregate per-seed metrics into a summary row"),
             report_opts);

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand("score")) return ceskd::cmd_score(resolve(score_opts));
    if (app.got_subcommand("distill")) return ceskd::cmd_distill(resolve(distill_opts));
    if (app.got_subcommand("hypothesis")) return ceskd::cmd_hypothesis(resolve(hyp_opts));
    if (app.got_subcommand("ablate")) return ceskd::cmd_ablate(resolve(ablate_opts));
    if (app.got_subcommand("report")) return ceskd::cmd_report(resolve(report_opts));
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
