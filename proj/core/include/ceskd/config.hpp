#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ceskd/distill.hpp"

namespace ceskd {

// Fully resolved experiment description. Parsed strictly: unknown keys are
// errors so a mistyped hyperparameter can never pass silently.
struct ExperimentConfig {
  // dataset
  std::string dataset = "synthetic";  // synthetic | idx | cifar10
  int synthetic_classes = 10;
  int synthetic_dim = 16;
  int synthetic_train_size = 2000;
  double synthetic_hardness = 0.5;
  std::uint64_t data_seed = 7;
  std::string idx_train_images, idx_train_labels, idx_test_images, idx_test_labels;
  std::vector<std::string> cifar_train, cifar_test;

  // distillation path and model stand-ins
  std::vector<int> path{10, 8, 6, 4};
  std::map<int, std::string> model_defs;  // depth_tag -> layer stack DSL

  Method method = Method::Ceskd;
  SelectionKind policy = SelectionKind::Baseline;
  bool class_balanced = true;

  // training run
  int epochs = 30;
  int batch_size = 32;
  double alpha = 0.9;
  double temperature = 10.0;
  double lr = 0.1;
  std::vector<int> lr_milestones{12, 36, 48};
  double lr_factor = 0.1;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  bool nesterov = true;
  bool augment = true;
  int reference_epochs = 10;
  double threshold = -1.0;  // <0: derive from the scratch student

  std::vector<std::uint64_t> seeds{1, 2, 3};
  std::string out = "runs/exp";

  bool operator==(const ExperimentConfig&) const = default;

  RunConfig run_config(std::uint64_t seed) const;
  void validate() const;
};

ExperimentConfig parse_config(const std::string& path);
ExperimentConfig parse_config_text(const std::string& text, const std::string& origin);
std::string serialize_config(const ExperimentConfig& cfg);

// Layer-stack DSL: comma-separated "dense:N", "relu", "conv:OC:K:S:P",
// "pool:K:S", "flatten". A flatten and the dense classifier head onto
// num_classes are appended automatically.
ModelSpec build_model_spec(const std::string& stack, int depth_tag,
                           const std::vector<std::size_t>& input_shape, std::size_t num_classes);

// Stack string for a depth tag: explicit model_defs entry, or the default
// capacity ladder of (tag/2 - 1) hidden dense+relu pairs of width 4*tag.
std::string stack_for_tag(const ExperimentConfig& cfg, int tag);

ModelSpec model_spec_for(const ExperimentConfig& cfg, int tag,
                         const std::vector<std::size_t>& input_shape, std::size_t num_classes);

std::vector<ModelSpec> path_specs(const ExperimentConfig& cfg,
                                  const std::vector<std::size_t>& input_shape,
                                  std::size_t num_classes);

}  // namespace ceskd
