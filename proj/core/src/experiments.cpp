#include "ceskd/experiments.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "ceskd/error.hpp"

namespace ceskd {

namespace {

const char* tercile_name(int t) {
  switch (t) {
    case 0: return "Easy";
    case 1: return "Intermediate";
    case 2: return "Difficult";
  }
  return "?";
}

}  // namespace

std::string HypothesisReport::render() const {
  std::ostringstream out;
  out << "expert      Easy           Intermediate   Difficult\n";
  for (std::size_t e = 0; e < expert_tags.size(); ++e) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "tag %-6d", expert_tags[e]);
    out << buf;
    for (int t = 0; t < 3; ++t) {
      const SeedStats& s = cell(e, t).accuracy;
      std::snprintf(buf, sizeof(buf), " %-14s", format_mean_std(s.mean, s.stddev).c_str());
      out << buf;
    }
    out << "\n";
  }
  return out.str();
}

HypothesisReport run_hypothesis(const std::vector<ModelSpec>& expert_specs,
                                const ModelSpec& student_spec, const Dataset& train,
                                const Dataset& test, const RunConfig& cfg,
                                const RankedDataset& ranked,
                                const std::vector<std::uint64_t>& seeds) {
  if (expert_specs.size() < 2) throw ConfigError("hypothesis: need at least 2 experts");
  for (std::size_t i = 1; i < expert_specs.size(); ++i) {
    if (expert_specs[i].depth_tag <= expert_specs[i - 1].depth_tag) {
      throw ConfigError("hypothesis: expert specs must be ascending in depth_tag");
    }
  }
  const BucketPlan terciles = bucketize(ranked, train.labels, 3, cfg.class_balanced);
  std::vector<Dataset> subsets;
  for (int t = 0; t < 3; ++t) subsets.push_back(train.subset(terciles.buckets[t]));

  HypothesisReport report;
  for (const ModelSpec& sp : expert_specs) report.expert_tags.push_back(sp.depth_tag);
  report.cells.resize(expert_specs.size() * 3);
  std::vector<std::vector<std::vector<double>>> accs(expert_specs.size(),
                                                     std::vector<std::vector<double>>(3));
  for (std::size_t e = 0; e < expert_specs.size(); ++e) {
    for (int t = 0; t < 3; ++t) {
      report.cells[e * 3 + t].expert_tag = expert_specs[e].depth_tag;
      report.cells[e * 3 + t].tercile = t;
    }
  }
  for (std::uint64_t seed : seeds) {
    for (std::size_t e = 0; e < expert_specs.size(); ++e) {
      RunConfig expert_cfg = cfg;
      expert_cfg.seed = substream(seed, "hyp-expert", e);
      auto [expert, expert_metrics] = train_scratch(expert_specs[e], train, test, expert_cfg);
      for (int t = 0; t < 3; ++t) {
        RunConfig student_cfg = cfg;
        student_cfg.seed = substream(seed, "hyp-student", e * 3 + static_cast<std::size_t>(t));
        ExpertPool pool;
        pool.experts = {&expert};
        auto [student, metrics] = distill_step(student_spec, pool, Method::Blkd, nullptr,
                                               subsets[t], test, student_cfg);
        accs[e][t].push_back(metrics.final_top1);
        std::vector<double> curve;
        for (const EpochMetrics& em : metrics.epochs) curve.push_back(em.train_loss);
        report.cells[e * 3 + t].loss_curves.push_back(std::move(curve));
      }
    }
  }
  for (std::size_t e = 0; e < expert_specs.size(); ++e) {
    for (int t = 0; t < 3; ++t) report.cells[e * 3 + t].accuracy = seed_stats(accs[e][t]);
  }
  return report;
}

std::string AblationReport::render() const {
  std::ostringstream out;
  out << "selection  accuracy\n";
  out << "baseline   " << format_mean_std(baseline.mean, baseline.stddev) << "\n";
  out << "anti       " << format_mean_std(anti.mean, anti.stddev) << "\n";
  out << "random     " << format_mean_std(random.mean, random.stddev) << "\n";
  return out.str();
}

AblationReport run_selection_ablation(const std::vector<ModelSpec>& path, const Dataset& train,
                                      const Dataset& test, const RunConfig& cfg,
                                      const RankedDataset& ranked,
                                      const std::vector<std::uint64_t>& seeds) {
  if (path.size() < 2) throw ConfigError("ablation: path needs at least teacher and student");
  const std::vector<ModelSpec> prefix(path.begin(), path.end() - 1);
  std::vector<double> acc_baseline, acc_anti, acc_random;
  for (std::uint64_t seed : seeds) {
    RunConfig prefix_cfg = cfg;
    prefix_cfg.seed = seed;
    prefix_cfg.policy.kind = SelectionKind::Baseline;
    auto prefix_results = run_path(prefix, Method::Ceskd, &ranked, train, test, prefix_cfg);
    ExpertPool pool;
    for (const PathStepResult& r : prefix_results) pool.experts.push_back(&r.model);
    std::reverse(pool.experts.begin(), pool.experts.end());
    for (SelectionKind kind : {SelectionKind::Baseline, SelectionKind::Anti, SelectionKind::Random}) {
      RunConfig final_cfg = cfg;
      final_cfg.seed = substream(seed, "ablate-final");
      final_cfg.policy.kind = kind;
      auto [student, metrics] =
          distill_step(path.back(), pool, Method::Ceskd, &ranked, train, test, final_cfg);
      switch (kind) {
        case SelectionKind::Baseline: acc_baseline.push_back(metrics.final_top1); break;
        case SelectionKind::Anti: acc_anti.push_back(metrics.final_top1); break;
        case SelectionKind::Random: acc_random.push_back(metrics.final_top1); break;
      }
    }
  }
  AblationReport report;
  report.baseline = seed_stats(acc_baseline);
  report.anti = seed_stats(acc_anti);
  report.random = seed_stats(acc_random);
  return report;
}

std::string MethodComparison::render() const {
  std::ostringstream out;
  out << "method  final_acc      epochs_to_threshold  diverged\n";
  for (const auto& [method, stats] : final_accuracy) {
    char buf[96];
    const double ett = mean_epochs_to_threshold.count(method) ? mean_epochs_to_threshold.at(method) : -1.0;
    std::snprintf(buf, sizeof(buf), "%-7s %-14s %-20.1f %zu", method_name(method),
                  format_mean_std(stats.mean, stats.stddev).c_str(), ett,
                  diverged_runs.count(method) ? diverged_runs.at(method) : 0);
    out << buf << "\n";
  }
  return out.str();
}

MethodComparison run_method_comparison(const std::vector<ModelSpec>& path,
                                       const std::vector<Method>& methods, const Dataset& train,
                                       const Dataset& test, const RunConfig& cfg,
                                       const RankedDataset& ranked,
                                       const std::vector<std::uint64_t>& seeds,
                                       double fixed_threshold) {
  MethodComparison cmp;
  std::map<Method, std::vector<double>> accs;
  std::map<Method, std::vector<double>> etts;
  for (const Method m : methods) cmp.diverged_runs[m] = 0;
  for (std::uint64_t seed : seeds) {
    // scratch run defines the per-seed convergence threshold
    RunConfig scratch_cfg = cfg;
    scratch_cfg.seed = substream(seed, "scratch");
    auto [scratch_model, scratch_metrics] = train_scratch(path.back(), train, test, scratch_cfg);
    const double theta = fixed_threshold >= 0.0 ? fixed_threshold : scratch_metrics.final_top1;
    cmp.thresholds.push_back(theta);
    for (const Method m : methods) {
      Metrics student_metrics;
      if (m == Method::NoKD) {
        student_metrics = scratch_metrics;
      } else {
        // same seed for every method so the shared first step is identical
        RunConfig run_cfg = cfg;
        run_cfg.seed = seed;
        const auto results = run_path(path, m, &ranked, train, test, run_cfg);
        student_metrics = results.back().metrics;
      }
      cmp.student_metrics[m].push_back(student_metrics);
      if (student_metrics.diverged) {
        ++cmp.diverged_runs[m];
        continue;
      }
      accs[m].push_back(student_metrics.final_top1);
      etts[m].push_back(static_cast<double>(
          student_metrics.epochs_to_threshold(theta).value_or(cfg.epochs)));
    }
  }
  for (const Method m : methods) {
    cmp.final_accuracy[m] = seed_stats(accs[m]);
    cmp.mean_epochs_to_threshold[m] = seed_stats(etts[m]).mean;
  }
  return cmp;
}

}  // namespace ceskd
