#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ceskd/rng.hpp"
#include "ceskd/tensor.hpp"

namespace ceskd {

// Labelled split: images [n, c, h, w] or flat features [n, d].
struct Dataset {
  Tensor samples;
  std::vector<int> labels;
  int num_classes = 0;
  std::string split = "train";

  std::size_t size() const { return labels.size(); }
  bool is_image() const { return samples.ndim() == 4; }

  // Feature/image shape without the leading sample dimension.
  std::vector<std::size_t> sample_shape() const {
    return {samples.shape.begin() + 1, samples.shape.end()};
  }

  // One [batch, ...] tensor for the given sample indices.
  Tensor gather(const std::vector<std::size_t>& indices) const;
  std::vector<int> gather_labels(const std::vector<std::size_t>& indices) const;

  // Restriction to a subset of sample indices (order preserved).
  Dataset subset(const std::vector<std::size_t>& indices) const;

  void validate() const;
};

// Gaussian class clusters in feature space. hardness_spread in [0,1] controls
// how many samples are pulled toward a competing class mean, so the score
// distribution has genuine easy-to-hard structure. Balanced classes,
// deterministic per seed. The test split holds max(2k, n/5) samples.
std::pair<Dataset, Dataset> gen_synthetic(int num_classes, int dim, int n_train,
                                          double hardness_spread, std::uint64_t seed);

// Big-endian IDX container (magic 0x00000803 images / 0x00000801 labels);
// pixel bytes scaled to [0, 1].
Dataset load_idx(const std::string& images_path, const std::string& labels_path);

// CIFAR-10 binary batches: 3073-byte records, 1 label byte + 3x32x32
// channel-major pixel planes.
Dataset load_cifar10_bin(const std::vector<std::string>& paths);

struct AugmentConfig {
  std::size_t pad = 4;         // reflect padding before the random crop
  double flip_prob = 0.5;
  bool random_crop = true;
};

// Per-sample random crop + horizontal flip for image batches. Training only.
Tensor augment(const Tensor& batch, const AugmentConfig& cfg, Rng& rng);

struct NormalizationStats {
  std::vector<double> mean;
  std::vector<double> variance;
};

// Per-channel mean/variance of the train split; errors on a zero-variance
// channel. Feature datasets are treated as a single channel.
NormalizationStats compute_stats(const Dataset& train);

// x -> (x - mean) / sqrt(variance), in place.
void normalize(Dataset& ds, const NormalizationStats& stats);

}  // namespace ceskd
