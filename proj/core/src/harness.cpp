#include "ceskd/harness.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include "ceskd/error.hpp"

namespace fs = std::filesystem;

namespace ceskd {

std::pair<Dataset, Dataset> load_datasets(const ExperimentConfig& cfg) {
  Dataset train, test;
  if (cfg.dataset == "synthetic") {
    auto [tr, te] = gen_synthetic(cfg.synthetic_classes, cfg.synthetic_dim,
                                  cfg.synthetic_train_size, cfg.synthetic_hardness, cfg.data_seed);
    train = std::move(tr);
    test = std::move(te);
  } else if (cfg.dataset == "idx") {
    if (cfg.idx_train_images.empty() || cfg.idx_train_labels.empty() ||
        cfg.idx_test_images.empty() || cfg.idx_test_labels.empty()) {
      throw ConfigError("idx dataset needs idx_train_images/labels and idx_test_images/labels");
    }
    train = load_idx(cfg.idx_train_images, cfg.idx_train_labels);
    test = load_idx(cfg.idx_test_images, cfg.idx_test_labels);
    test.num_classes = train.num_classes = std::max(train.num_classes, test.num_classes);
  } else if (cfg.dataset == "cifar10") {
    if (cfg.cifar_train.empty() || cfg.cifar_test.empty()) {
      throw ConfigError("cifar10 dataset needs cifar_train and cifar_test file lists");
    }
    train = load_cifar10_bin(cfg.cifar_train);
    test = load_cifar10_bin(cfg.cifar_test);
  } else {
    throw ConfigError("unknown dataset kind: " + cfg.dataset);
  }
  train.split = "train";
  test.split = "test";
  const NormalizationStats stats = compute_stats(train);
  normalize(train, stats);
  normalize(test, stats);
  return {std::move(train), std::move(test)};
}

std::size_t worker_count() {
  if (const char* env = std::getenv("CESKD_WORKERS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) return static_cast<std::size_t>(v);
  }
  return 1;
}

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path.string());
  out << text;
}

void prepare_out_dir(const ExperimentConfig& cfg) {
  fs::create_directories(cfg.out);
  write_text(fs::path(cfg.out) / "config.txt", serialize_config(cfg));
}

// Reference scorer: the largest spec in the path, trained for a short budget.
Model train_reference(const ExperimentConfig& cfg, const Dataset& train, const Dataset& test) {
  const ModelSpec ref_spec =
      model_spec_for(cfg, cfg.path.front(), train.sample_shape(),
                     static_cast<std::size_t>(train.num_classes));
  RunConfig ref_cfg = cfg.run_config(substream(cfg.data_seed, "reference"));
  ref_cfg.epochs = cfg.reference_epochs;
  auto [reference, metrics] = train_scratch(ref_spec, train, test, ref_cfg);
  return std::move(reference);
}

RankedDataset ranked_from_reference(const Model& reference, const Dataset& train) {
  return rank(score_dataset(reference, train));
}

fs::path curriculum_path(const ExperimentConfig& cfg) {
  return fs::path(cfg.out) / "curriculum.txt";
}

RankedDataset load_or_fail_curriculum(const ExperimentConfig& cfg) {
  const fs::path path = curriculum_path(cfg);
  if (!fs::exists(path)) {
    throw ConfigError("ceskd needs a curriculum file at " + path.string() +
                      "; run the 'score' command first");
  }
  const CurriculumFile file = load_curriculum(path.string());
  return file.ranked();
}

// Per-seed run of the configured path; writes one self-describing directory.
void run_one_seed(const ExperimentConfig& cfg, const Dataset& train, const Dataset& test,
                  const RankedDataset* ranked, std::uint64_t seed) {
  const fs::path seed_dir = fs::path(cfg.out) / ("seed" + std::to_string(seed));
  fs::create_directories(seed_dir);
  write_text(seed_dir / "config.txt", serialize_config(cfg));
  RunLog log;
  const auto specs = path_specs(cfg, train.sample_shape(),
                                static_cast<std::size_t>(train.num_classes));
  const RunConfig rc = cfg.run_config(seed);
  const auto results = run_path(specs, cfg.method, ranked, train, test, rc, &log);
  for (std::size_t i = 0; i < results.size(); ++i) {
    const std::string stem = "step" + std::to_string(i) + "_" +
                             method_name(results[i].method_used) + "_tag" +
                             std::to_string(results[i].model.depth_tag());
    save_metrics(results[i].metrics, (seed_dir / (stem + "_metrics.csv")).string());
    save_checkpoint(results[i].model, (seed_dir / (stem + ".ckpt")).string());
  }
  save_run_log(log, (seed_dir / "runlog.txt").string());
}

}  // namespace

int cmd_score(const ExperimentConfig& cfg) {
  try {
    prepare_out_dir(cfg);
    auto [train, test] = load_datasets(cfg);
    const Model reference = train_reference(cfg, train, test);
    const RankedDataset ranked = ranked_from_reference(reference, train);
    const std::size_t final_pool = cfg.path.size() > 1 ? cfg.path.size() - 1 : 1;
    const BucketPlan plan = bucketize(ranked, train.labels, final_pool, cfg.class_balanced);
    SelectionPolicy policy;
    policy.kind = cfg.policy;
    const CurriculumFile file = make_curriculum_file(ranked, train.labels, plan, policy,
                                                     cfg.data_seed, checkpoint_id(reference));
    save_curriculum(file, curriculum_path(cfg).string());
    save_checkpoint(reference, (fs::path(cfg.out) / "reference.ckpt").string());
    std::cout << "wrote " << curriculum_path(cfg).string() << " (" << file.rows.size()
              << " samples, L=" << plan.L << ")\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "score: " << e.what() << "\n";
    return 1;
  }
}

int cmd_distill(const ExperimentConfig& cfg) {
  try {
    prepare_out_dir(cfg);
    auto [train, test] = load_datasets(cfg);
    RankedDataset ranked;
    const RankedDataset* ranked_ptr = nullptr;
    if (cfg.method == Method::Ceskd) {
      ranked = load_or_fail_curriculum(cfg);
      ranked_ptr = &ranked;
    }
    const std::size_t workers = std::min(worker_count(), cfg.seeds.size());
    std::vector<std::thread> threads;
    std::vector<std::string> errors(cfg.seeds.size());
    auto work = [&](std::size_t slot) {
      for (std::size_t i = slot; i < cfg.seeds.size(); i += workers) {
        try {
          run_one_seed(cfg, train, test, ranked_ptr, cfg.seeds[i]);
        } catch (const std::exception& e) {
          errors[i] = e.what();
        }
      }
    };
    for (std::size_t w = 0; w < workers; ++w) threads.emplace_back(work, w);
    for (auto& t : threads) t.join();
    for (std::size_t i = 0; i < cfg.seeds.size(); ++i) {
      if (!errors[i].empty()) {
        std::cerr << "distill: seed " << cfg.seeds[i] << ": " << errors[i] << "\n";
        return 1;
      }
    }
    std::cout << "completed " << cfg.seeds.size() << " seeded run(s) under " << cfg.out << "\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "distill: " << e.what() << "\n";
    return 1;
  }
}

int cmd_hypothesis(const ExperimentConfig& cfg) {
  try {
    prepare_out_dir(cfg);
    auto [train, test] = load_datasets(cfg);
    const Model reference = train_reference(cfg, train, test);
    const RankedDataset ranked = ranked_from_reference(reference, train);
    const auto input_shape = train.sample_shape();
    const std::size_t k = static_cast<std::size_t>(train.num_classes);
    std::vector<ModelSpec> expert_specs;
    for (std::size_t i = 0; i + 1 < cfg.path.size(); ++i) {
      expert_specs.push_back(model_spec_for(cfg, cfg.path[i], input_shape, k));
    }
    std::reverse(expert_specs.begin(), expert_specs.end());  // ascending capacity
    const ModelSpec student_spec = model_spec_for(cfg, cfg.path.back(), input_shape, k);
    const HypothesisReport report = run_hypothesis(expert_specs, student_spec, train, test,
                                                   cfg.run_config(cfg.seeds.front()), ranked,
                                                   cfg.seeds);
    write_text(fs::path(cfg.out) / "hypothesis.txt", report.render());
    std::ofstream curves(fs::path(cfg.out) / "hypothesis_loss_curves.csv");
    curves << "expert_tag,tercile,seed_index,epoch,train_loss\n";
    for (const HypothesisCell& cell : report.cells) {
      for (std::size_t s = 0; s < cell.loss_curves.size(); ++s) {
        for (std::size_t e = 0; e < cell.loss_curves[s].size(); ++e) {
          curves << cell.expert_tag << ',' << cell.tercile << ',' << s << ',' << e << ','
                 << cell.loss_curves[s][e] << "\n";
        }
      }
    }
    std::cout << report.render();
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "hypothesis: " << e.what() << "\n";
    return 1;
  }
}

int cmd_ablate(const ExperimentConfig& cfg) {
  try {
    prepare_out_dir(cfg);
    auto [train, test] = load_datasets(cfg);
    const Model reference = train_reference(cfg, train, test);
    const RankedDataset ranked = ranked_from_reference(reference, train);
    const auto specs = path_specs(cfg, train.sample_shape(),
                                  static_cast<std::size_t>(train.num_classes));
    const AblationReport report = run_selection_ablation(
        specs, train, test, cfg.run_config(cfg.seeds.front()), ranked, cfg.seeds);
    write_text(fs::path(cfg.out) / "ablation.txt", report.render());
    std::cout << report.render();
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "ablate: " << e.what() << "\n";
    return 1;
  }
}

int cmd_report(const ExperimentConfig& cfg) {
  try {
    std::vector<double> finals;
    std::vector<double> etts;
    bool have_ett = cfg.threshold >= 0.0;
    for (std::uint64_t seed : cfg.seeds) {
      const fs::path seed_dir = fs::path(cfg.out) / ("seed" + std::to_string(seed));
      if (!fs::exists(seed_dir)) {
        throw ConfigError("missing run directory " + seed_dir.string() +
                          "; run the 'distill' command first");
      }
      // the student is the last path step
      fs::path latest;
      for (const auto& entry : fs::directory_iterator(seed_dir)) {
        const std::string name = entry.path().filename().string();
        if (name.rfind("step", 0) == 0 && name.size() > 11 &&
            name.substr(name.size() - 11) == "metrics.csv") {
          if (latest.empty() || name > latest.filename().string()) latest = entry.path();
        }
      }
      if (latest.empty()) throw ConfigError("no metrics files in " + seed_dir.string());
      const Metrics m = load_metrics(latest.string());
      if (m.diverged) continue;
      finals.push_back(m.final_top1);
      if (have_ett) {
        etts.push_back(static_cast<double>(m.epochs_to_threshold(cfg.threshold).value_or(cfg.epochs)));
      }
    }
    ReportRow row;
    row.experiment = cfg.out;
    row.method = method_name(cfg.method);
    if (cfg.method == Method::Ceskd) row.policy = selection_kind_name(cfg.policy);
    row.seed_count = finals.size();
    row.accuracy = seed_stats(finals);
    if (have_ett) row.mean_epochs_to_threshold = seed_stats(etts).mean;
    write_text(fs::path(cfg.out) / "report.txt", row.render() + "\n");
    std::cout << row.render() << "\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "report: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace ceskd
