#include "ceskd/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "ceskd/error.hpp"

namespace ceskd {

void Dataset::validate() const {
  if (labels.empty()) throw DataError("dataset: empty");
  if (samples.ndim() < 2 || samples.dim(0) != labels.size()) {
    throw DataError("dataset: sample/label count mismatch");
  }
  if (num_classes < 2) throw DataError("dataset: needs at least 2 classes");
  for (int y : labels) {
    if (y < 0 || y >= num_classes) throw DataError("dataset: label out of range [0, k)");
  }
  if (!samples.all_finite()) throw DataError("dataset: non-finite sample values");
}

Tensor Dataset::gather(const std::vector<std::size_t>& indices) const {
  const std::size_t stride = samples.numel() / samples.dim(0);
  std::vector<std::size_t> shape = samples.shape;
  shape[0] = indices.size();
  Tensor out(shape);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    std::copy_n(samples.data.begin() + static_cast<long>(indices[i] * stride), stride,
                out.data.begin() + static_cast<long>(i * stride));
  }
  return out;
}

std::vector<int> Dataset::gather_labels(const std::vector<std::size_t>& indices) const {
  std::vector<int> out(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) out[i] = labels[indices[i]];
  return out;
}

Dataset Dataset::subset(const std::vector<std::size_t>& indices) const {
  Dataset out;
  out.samples = gather(indices);
  out.labels = gather_labels(indices);
  out.num_classes = num_classes;
  out.split = split;
  return out;
}

namespace {

Dataset draw_clusters(int k, int dim, int n, double hardness, const std::vector<std::vector<double>>& means,
                      Rng& rng, const std::string& split) {
  Dataset ds;
  ds.num_classes = k;
  ds.split = split;
  ds.samples = Tensor({static_cast<std::size_t>(n), static_cast<std::size_t>(dim)});
  ds.labels.resize(n);
  for (int i = 0; i < n; ++i) {
    const int c = i % k;  // balanced classes
    ds.labels[i] = c;
    std::vector<double> center = means[c];
    if (hardness > 0.0 && rng.uniform() < hardness) {
      // pull toward a competing class mean, up to just past the midpoint
      int other = static_cast<int>(rng.below(static_cast<std::size_t>(k - 1)));
      if (other >= c) ++other;
      const double t = 0.55 * rng.uniform();
      for (int d = 0; d < dim; ++d) center[d] += t * (means[other][d] - center[d]);
    }
    for (int d = 0; d < dim; ++d) {
      ds.samples.at2(i, d) = static_cast<float>(center[d] + rng.normal());
    }
  }
  return ds;
}

}  // namespace

std::pair<Dataset, Dataset> gen_synthetic(int num_classes, int dim, int n_train,
                                          double hardness_spread, std::uint64_t seed) {
  if (num_classes < 2) throw ConfigError("gen_synthetic: need at least 2 classes");
  if (n_train < num_classes) throw ConfigError("gen_synthetic: n must be >= number of classes");
  if (hardness_spread < 0.0 || hardness_spread > 1.0) {
    throw ConfigError("gen_synthetic: hardness_spread must lie in [0, 1]");
  }
  Rng mean_rng(substream(seed, "synthetic-means"));
  const double separation = 6.0;
  std::vector<std::vector<double>> means(num_classes, std::vector<double>(dim));
  for (auto& m : means) {
    double norm = 0.0;
    for (double& v : m) {
      v = mean_rng.normal();
      norm += v * v;
    }
    norm = std::sqrt(norm);
    for (double& v : m) v *= separation / norm;
  }
  Rng train_rng(substream(seed, "synthetic-train"));
  Rng test_rng(substream(seed, "synthetic-test"));
  const int n_test = std::max(2 * num_classes, n_train / 5);
  Dataset train = draw_clusters(num_classes, dim, n_train, hardness_spread, means, train_rng, "train");
  Dataset test = draw_clusters(num_classes, dim, n_test, hardness_spread, means, test_rng, "test");
  return {std::move(train), std::move(test)};
}

namespace {

std::vector<unsigned char> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open file: " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t be32(const std::vector<unsigned char>& buf, std::size_t offset, const std::string& path) {
  if (offset + 4 > buf.size()) {
    throw ParseError(path + ": truncated header at byte offset " + std::to_string(offset));
  }
  return (std::uint32_t(buf[offset]) << 24) | (std::uint32_t(buf[offset + 1]) << 16) |
         (std::uint32_t(buf[offset + 2]) << 8) | std::uint32_t(buf[offset + 3]);
}

}  // namespace

Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
  const auto img = read_file(images_path);
  const auto lab = read_file(labels_path);

  const std::uint32_t img_magic = be32(img, 0, images_path);
  if (img_magic != 0x00000803u) {
    throw ParseError(images_path + ": bad IDX image magic at offset 0 (expected 0x00000803)");
  }
  const std::uint32_t n = be32(img, 4, images_path);
  const std::uint32_t h = be32(img, 8, images_path);
  const std::uint32_t w = be32(img, 12, images_path);
  const std::size_t expected = 16 + std::size_t(n) * h * w;
  if (img.size() != expected) {
    throw ParseError(images_path + ": expected " + std::to_string(expected) + " bytes, file has " +
                     std::to_string(img.size()));
  }

  const std::uint32_t lab_magic = be32(lab, 0, labels_path);
  if (lab_magic != 0x00000801u) {
    throw ParseError(labels_path + ": bad IDX label magic at offset 0 (expected 0x00000801)");
  }
  const std::uint32_t n_lab = be32(lab, 4, labels_path);
  if (n_lab != n) {
    throw ParseError(labels_path + ": label count " + std::to_string(n_lab) +
                     " does not match image count " + std::to_string(n));
  }
  if (lab.size() != 8 + std::size_t(n)) {
    throw ParseError(labels_path + ": expected " + std::to_string(8 + std::size_t(n)) +
                     " bytes, file has " + std::to_string(lab.size()));
  }

  Dataset ds;
  ds.samples = Tensor({n, 1, h, w});
  ds.labels.resize(n);
  int max_label = 0;
  for (std::size_t i = 0; i < n; ++i) {
    ds.labels[i] = lab[8 + i];
    max_label = std::max(max_label, ds.labels[i]);
  }
  ds.num_classes = max_label + 1;
  for (std::size_t j = 0; j < std::size_t(n) * h * w; ++j) {
    ds.samples.data[j] = static_cast<float>(img[16 + j]) / 255.0f;
  }
  return ds;
}

Dataset load_cifar10_bin(const std::vector<std::string>& paths) {
  constexpr std::size_t kRecord = 3073;  // 1 label byte + 3*32*32 pixels
  Dataset ds;
  ds.num_classes = 10;
  std::vector<float> pixels;
  for (const std::string& path : paths) {
    const auto buf = read_file(path);
    if (buf.empty() || buf.size() % kRecord != 0) {
      throw ParseError(path + ": file length " + std::to_string(buf.size()) +
                       " is not a positive multiple of 3073");
    }
    const std::size_t n = buf.size() / kRecord;
    for (std::size_t i = 0; i < n; ++i) {
      const unsigned char label = buf[i * kRecord];
      if (label >= 10) {
        throw ParseError(path + ": label byte " + std::to_string(int(label)) +
                         " out of range at record " + std::to_string(i));
      }
      ds.labels.push_back(label);
      for (std::size_t j = 0; j < 3072; ++j) {
        pixels.push_back(static_cast<float>(buf[i * kRecord + 1 + j]) / 255.0f);
      }
    }
  }
  ds.samples = Tensor({ds.labels.size(), 3, 32, 32}, std::move(pixels));
  return ds;
}

namespace {

// reflect-101 index mapping into [0, n)
std::size_t reflect(long i, long n) {
  if (i < 0) i = -i;
  if (i >= n) i = 2 * n - 2 - i;
  return static_cast<std::size_t>(i);
}

}  // namespace

Tensor augment(const Tensor& batch, const AugmentConfig& cfg, Rng& rng) {
  if (batch.ndim() != 4) throw ConfigError("augment: expects an image batch [n, c, h, w]");
  const std::size_t n = batch.dim(0), c = batch.dim(1), h = batch.dim(2), w = batch.dim(3);
  Tensor out(batch.shape);
  const long pad = static_cast<long>(cfg.random_crop ? cfg.pad : 0);
  for (std::size_t bi = 0; bi < n; ++bi) {
    const long dy = pad > 0 ? static_cast<long>(rng.below(2 * pad + 1)) - pad : 0;
    const long dx = pad > 0 ? static_cast<long>(rng.below(2 * pad + 1)) - pad : 0;
    const bool flip = cfg.flip_prob > 0.0 && rng.uniform() < cfg.flip_prob;
    for (std::size_t ch = 0; ch < c; ++ch) {
      for (std::size_t y = 0; y < h; ++y) {
        const std::size_t sy = reflect(static_cast<long>(y) + dy, static_cast<long>(h));
        for (std::size_t x = 0; x < w; ++x) {
          std::size_t sx = reflect(static_cast<long>(x) + dx, static_cast<long>(w));
          if (flip) sx = w - 1 - sx;
          out.data[((bi * c + ch) * h + y) * w + x] =
              batch.data[((bi * c + ch) * h + sy) * w + sx];
        }
      }
    }
  }
  return out;
}

NormalizationStats compute_stats(const Dataset& train) {
  train.validate();
  const std::size_t channels = train.is_image() ? train.samples.dim(1) : 1;
  const std::size_t per_channel = train.samples.numel() / (train.size() * channels);
  NormalizationStats stats;
  stats.mean.assign(channels, 0.0);
  stats.variance.assign(channels, 0.0);
  for (std::size_t i = 0; i < train.size(); ++i) {
    for (std::size_t ch = 0; ch < channels; ++ch) {
      const std::size_t base = (i * channels + ch) * per_channel;
      for (std::size_t j = 0; j < per_channel; ++j) {
        stats.mean[ch] += train.samples.data[base + j];
      }
    }
  }
  const double count = static_cast<double>(train.size() * per_channel);
  for (double& m : stats.mean) m /= count;
  for (std::size_t i = 0; i < train.size(); ++i) {
    for (std::size_t ch = 0; ch < channels; ++ch) {
      const std::size_t base = (i * channels + ch) * per_channel;
      for (std::size_t j = 0; j < per_channel; ++j) {
        const double d = train.samples.data[base + j] - stats.mean[ch];
        stats.variance[ch] += d * d;
      }
    }
  }
  for (std::size_t ch = 0; ch < channels; ++ch) {
    stats.variance[ch] /= count;
    if (stats.variance[ch] <= 0.0) {
      throw DataError("compute_stats: zero variance in channel " + std::to_string(ch));
    }
  }
  return stats;
}

void normalize(Dataset& ds, const NormalizationStats& stats) {
  const std::size_t channels = ds.is_image() ? ds.samples.dim(1) : 1;
  if (stats.mean.size() != channels || stats.variance.size() != channels) {
    throw ConfigError("normalize: stats channel count mismatch");
  }
  const std::size_t per_channel = ds.samples.numel() / (ds.size() * channels);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (std::size_t ch = 0; ch < channels; ++ch) {
      const std::size_t base = (i * channels + ch) * per_channel;
      const float mean = static_cast<float>(stats.mean[ch]);
      const float inv_std = static_cast<float>(1.0 / std::sqrt(stats.variance[ch]));
      for (std::size_t j = 0; j < per_channel; ++j) {
        ds.samples.data[base + j] = (ds.samples.data[base + j] - mean) * inv_std;
      }
    }
  }
}

}  // namespace ceskd
