#pragma once

#include <string>
#include <utility>

#include "ceskd/checkpoint.hpp"
#include "ceskd/config.hpp"
#include "ceskd/experiments.hpp"

namespace ceskd {

// Train/test pair per the config's dataset section, normalized with
// train-split statistics.
std::pair<Dataset, Dataset> load_datasets(const ExperimentConfig& cfg);

// Worker cap for independent seeded runs; reads CESKD_WORKERS (default 1).
std::size_t worker_count();

// CLI command bodies. Each writes its artifacts under cfg.out and returns a
// process exit code (0 on success). Failures print a one-line cause.
int cmd_score(const ExperimentConfig& cfg);
int cmd_distill(const ExperimentConfig& cfg);
int cmd_hypothesis(const ExperimentConfig& cfg);
int cmd_ablate(const ExperimentConfig& cfg);
int cmd_report(const ExperimentConfig& cfg);

}  // namespace ceskd
