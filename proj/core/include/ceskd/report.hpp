#pragma once

#include <string>
#include <vector>

#include "ceskd/distill.hpp"

namespace ceskd {

struct SeedStats {
  std::vector<double> values;
  double mean = 0.0;
  double stddev = 0.0;  // sample std (n-1); 0 when fewer than 2 values
};

SeedStats seed_stats(const std::vector<double>& values);

// "63.58±0.045" style rendering.
std::string format_mean_std(double mean, double stddev);

// Summary line of one aggregated experiment.
struct ReportRow {
  std::string experiment;
  std::string method;
  std::string policy;
  std::size_t seed_count = 0;
  SeedStats accuracy;
  double mean_epochs_to_threshold = -1.0;  // negative: not applicable

  std::string render() const;
};

// Metrics table I/O: "epoch,train_loss,top1,top5" rows plus a trailing
// summary record. Stable across runs of the same config.
void save_metrics(const Metrics& metrics, const std::string& path);
Metrics load_metrics(const std::string& path);

void save_run_log(const RunLog& log, const std::string& path);

}  // namespace ceskd
