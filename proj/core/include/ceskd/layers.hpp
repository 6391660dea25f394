#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "ceskd/error.hpp"

namespace ceskd {

enum class LayerKind { Dense, Conv2d, Relu, MaxPool2d, Flatten };

const char* layer_kind_name(LayerKind kind);

// One layer of a feed-forward stack. Only the fields of the given kind are
// meaningful; the rest stay zero.
struct LayerSpec {
  LayerKind kind = LayerKind::Relu;

  // dense
  std::size_t in_features = 0;
  std::size_t out_features = 0;

  // conv2d
  std::size_t in_channels = 0;
  std::size_t out_channels = 0;

  // conv2d / maxpool2d window
  std::size_t kernel = 0;
  std::size_t stride = 1;
  std::size_t padding = 0;

  static LayerSpec dense(std::size_t in, std::size_t out);
  static LayerSpec conv2d(std::size_t in_c, std::size_t out_c, std::size_t k,
                          std::size_t stride = 1, std::size_t padding = 0);
  static LayerSpec relu();
  static LayerSpec maxpool2d(std::size_t k, std::size_t stride);
  static LayerSpec flatten();

  bool has_params() const { return kind == LayerKind::Dense || kind == LayerKind::Conv2d; }
  bool operator==(const LayerSpec&) const = default;
};

// Output shape (batch dim excluded) of one layer; throws ConfigError naming
// the offending layer index on any incompatibility.
std::vector<std::size_t> infer_output_shape(const LayerSpec& spec,
                                            const std::vector<std::size_t>& in_shape,
                                            std::size_t layer_index);

}  // namespace ceskd
