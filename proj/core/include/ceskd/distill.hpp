#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ceskd/curriculum.hpp"
#include "ceskd/data.hpp"
#include "ceskd/losses.hpp"
#include "ceskd/model.hpp"
#include "ceskd/optimizer.hpp"

namespace ceskd {

enum class Method { NoKD, Blkd, Takd, Dgkd, Ceskd };

const char* method_name(Method m);
Method method_from(const std::string& name);

// Everything one training run depends on. Identical configs (including the
// seed) reproduce identical metrics and checkpoints.
struct RunConfig {
  int epochs = 60;
  std::size_t batch_size = 32;
  KDHyperparams hp;
  SgdConfig sgd;
  LrSchedule lr{0.1, {12, 36, 48}, 0.1};
  std::uint64_t seed = 1;
  bool class_balanced = true;
  SelectionPolicy policy;
  bool augment_enabled = true;
  AugmentConfig aug;
};

struct EpochMetrics {
  int epoch = 0;
  double train_loss = 0.0;
  double top1 = 0.0;
  double top5 = 0.0;
  double seconds = 0.0;  // wall clock; excluded from serialized tables
};

struct Metrics {
  std::vector<EpochMetrics> epochs;
  double final_top1 = 0.0;
  double final_top5 = 0.0;
  bool diverged = false;

  // First epoch whose test accuracy reaches theta (0-indexed).
  std::optional<int> epochs_to_threshold(double theta) const;
};

// One line per optimizer step.
struct RunLogEntry {
  int epoch = 0;
  int step = 0;
  std::size_t bucket = 0;
  int expert_depth = -1;  // -1 when no single expert applies (scratch, ensemble)
  double loss = 0.0;
};
using RunLog = std::vector<RunLogEntry>;

// Capacity ladder of frozen experts, strictly ascending by depth_tag.
struct ExpertPool {
  std::vector<const Model*> experts;

  std::size_t size() const { return experts.size(); }
  void validate() const;
};

// (top-1 %, top-5 %) on the test set; deterministic, no augmentation.
std::pair<double, double> evaluate(const Model& model, const Dataset& test);

std::pair<Model, Metrics> train_scratch(const ModelSpec& spec, const Dataset& train,
                                        const Dataset& test, const RunConfig& cfg,
                                        RunLog* log = nullptr);

// One distillation step. ceskd needs the ranked dataset and a pool whose size
// sets the bucket count; blkd/takd need exactly one expert; dgkd takes all
// ancestors.
std::pair<Model, Metrics> distill_step(const ModelSpec& student_spec, const ExpertPool& pool,
                                       Method method, const RankedDataset* ranked,
                                       const Dataset& train, const Dataset& test,
                                       const RunConfig& cfg, RunLog* log = nullptr);

struct PathStepResult {
  Model model;
  Metrics metrics;
  Method method_used = Method::NoKD;
  std::size_t pool_size = 0;  // bucket count for ceskd steps
};

// Executes a capacity-descending path teacher -> ... -> student. The first
// distillation step is plain blkd for every comparative method; later steps
// follow the configured method. For ceskd the pool at step k is the teacher
// plus all previously produced assistants and the ranked dataset is
// re-bucketized to the pool size.
std::vector<PathStepResult> run_path(const std::vector<ModelSpec>& path, Method method,
                                     const RankedDataset* ranked, const Dataset& train,
                                     const Dataset& test, const RunConfig& cfg,
                                     RunLog* log = nullptr,
                                     const Model* pretrained_teacher = nullptr);

}  // namespace ceskd
