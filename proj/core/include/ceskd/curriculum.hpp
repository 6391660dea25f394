#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ceskd/data.hpp"
#include "ceskd/model.hpp"

namespace ceskd {

struct ScoredSample {
  std::size_t sample_index = 0;
  int class_label = 0;
  double score = 0.0;  // reference-model loss on the sample
};

// Permutation of sample indices with aligned scores, non-decreasing.
// Ties break by ascending original index.
struct RankedDataset {
  std::vector<std::size_t> order;
  std::vector<double> scores;
};

// Partition of the training set into L difficulty strata.
struct BucketPlan {
  std::size_t L = 1;
  std::vector<std::vector<std::size_t>> buckets;
  bool class_balanced = false;
};

enum class SelectionKind { Baseline, Anti, Random };

const char* selection_kind_name(SelectionKind kind);
SelectionKind selection_kind_from(const std::string& name);

struct SelectionPolicy {
  SelectionKind kind = SelectionKind::Baseline;
  std::uint64_t seed = 0;  // random policy only

  bool operator==(const SelectionPolicy&) const = default;
};

// Per-sample cross entropy of the reference model at T=1, evaluation mode
// (no augmentation). Deterministic.
std::vector<ScoredSample> score_dataset(const Model& reference, const Dataset& data);

// Stable ascending sort by score.
RankedDataset rank(const std::vector<ScoredSample>& scored);

// Unbalanced: contiguous near-equal slices of the ranked order, the first
// (n mod L) buckets take one extra sample. Balanced: each class is split into
// L contiguous near-equal runs of its own ranked order and bucket j unions
// the j-th runs.
BucketPlan bucketize(const RankedDataset& ranked, const std::vector<int>& labels, std::size_t L,
                     bool class_balanced);

// Bucket -> expert bijection. Baseline pairs the easiest bucket with the
// smallest expert; anti reverses; random redraws each epoch from the policy
// seed and the epoch number.
std::vector<std::size_t> assign_experts(const BucketPlan& plan, std::size_t pool_size,
                                        const SelectionPolicy& policy, int epoch);

struct MiniBatch {
  std::vector<std::size_t> indices;
  std::size_t bucket = 0;
};

// Buckets presented in ascending difficulty order within every epoch;
// samples shuffled inside each bucket; no batch straddles two buckets.
// Bucket contents are canonicalized (sorted) before shuffling, so the batch
// stream depends only on the bucket sets, the seed, and the epoch.
std::vector<MiniBatch> epoch_batches(const BucketPlan& plan, std::size_t batch_size,
                                     std::uint64_t seed, int epoch);

// Text curriculum table: header records L, policy, seed, and the scorer
// checkpoint identity; rows are (sample_index, class_label, score, bucket).
struct CurriculumFile {
  std::size_t L = 1;
  std::string policy = "baseline";
  std::uint64_t seed = 0;
  std::string scorer_id;
  bool class_balanced = false;
  std::vector<ScoredSample> rows;          // in ranked order
  std::vector<std::size_t> bucket_of_row;  // 1-based bucket id per row

  RankedDataset ranked() const;
};

CurriculumFile make_curriculum_file(const RankedDataset& ranked, const std::vector<int>& labels,
                                    const BucketPlan& plan, const SelectionPolicy& policy,
                                    std::uint64_t seed, const std::string& scorer_id);
void save_curriculum(const CurriculumFile& file, const std::string& path);
CurriculumFile load_curriculum(const std::string& path);

}  // namespace ceskd
