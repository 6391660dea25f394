#pragma once

#include <map>
#include <string>
#include <vector>

#include "ceskd/distill.hpp"
#include "ceskd/report.hpp"

namespace ceskd {

// Difficulty-tercile grid: each expert guides the student via plain soft-target
// distillation on each of the Easy / Intermediate / Difficult subsets.
struct HypothesisCell {
  int expert_tag = 0;
  int tercile = 0;  // 0 easy, 1 intermediate, 2 difficult
  SeedStats accuracy;
  std::vector<std::vector<double>> loss_curves;  // per seed, per epoch
};

struct HypothesisReport {
  std::vector<int> expert_tags;  // ascending capacity
  std::vector<HypothesisCell> cells;  // indexed expert * 3 + tercile

  const HypothesisCell& cell(std::size_t expert, int tercile) const {
    return cells[expert * 3 + static_cast<std::size_t>(tercile)];
  }
  std::string render() const;
};

HypothesisReport run_hypothesis(const std::vector<ModelSpec>& expert_specs,
                                const ModelSpec& student_spec, const Dataset& train,
                                const Dataset& test, const RunConfig& cfg,
                                const RankedDataset& ranked,
                                const std::vector<std::uint64_t>& seeds);

// Final-step teacher-selection ablation: baseline vs anti vs random.
struct AblationReport {
  SeedStats baseline;
  SeedStats anti;
  SeedStats random;

  std::string render() const;
};

AblationReport run_selection_ablation(const std::vector<ModelSpec>& path, const Dataset& train,
                                      const Dataset& test, const RunConfig& cfg,
                                      const RankedDataset& ranked,
                                      const std::vector<std::uint64_t>& seeds);

// Full-path comparison of methods on one dataset; the convergence threshold
// defaults to each seed's scratch-student final accuracy. Seeds whose run
// diverged are excluded from means with a logged count.
struct MethodComparison {
  std::map<Method, SeedStats> final_accuracy;
  std::map<Method, std::vector<Metrics>> student_metrics;  // per seed
  std::map<Method, double> mean_epochs_to_threshold;       // capped at cfg.epochs when unreached
  std::map<Method, std::size_t> diverged_runs;
  std::vector<double> thresholds;  // per seed

  std::string render() const;
};

MethodComparison run_method_comparison(const std::vector<ModelSpec>& path,
                                       const std::vector<Method>& methods, const Dataset& train,
                                       const Dataset& test, const RunConfig& cfg,
                                       const RankedDataset& ranked,
                                       const std::vector<std::uint64_t>& seeds,
                                       double fixed_threshold = -1.0);

}  // namespace ceskd
