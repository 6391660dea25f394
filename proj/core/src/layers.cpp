#include "ceskd/layers.hpp"

namespace ceskd {

const char* layer_kind_name(LayerKind kind) {
  switch (kind) {
    case LayerKind::Dense: return "dense";
    case LayerKind::Conv2d: return "conv2d";
    case LayerKind::Relu: return "relu";
    case LayerKind::MaxPool2d: return "maxpool2d";
    case LayerKind::Flatten: return "flatten";
  }
  return "?";
}

LayerSpec LayerSpec::dense(std::size_t in, std::size_t out) {
  LayerSpec s;
  s.kind = LayerKind::Dense;
  s.in_features = in;
  s.out_features = out;
  return s;
}

LayerSpec LayerSpec::conv2d(std::size_t in_c, std::size_t out_c, std::size_t k,
                            std::size_t stride, std::size_t padding) {
  LayerSpec s;
  s.kind = LayerKind::Conv2d;
  s.in_channels = in_c;
  s.out_channels = out_c;
  s.kernel = k;
  s.stride = stride;
  s.padding = padding;
  return s;
}

LayerSpec LayerSpec::relu() {
  LayerSpec s;
  s.kind = LayerKind::Relu;
  return s;
}

LayerSpec LayerSpec::maxpool2d(std::size_t k, std::size_t stride) {
  LayerSpec s;
  s.kind = LayerKind::MaxPool2d;
  s.kernel = k;
  s.stride = stride;
  return s;
}

LayerSpec LayerSpec::flatten() {
  LayerSpec s;
  s.kind = LayerKind::Flatten;
  return s;
}

namespace {

[[noreturn]] void bad_layer(std::size_t index, const LayerSpec& spec, const std::string& why) {
  throw ConfigError("layer " + std::to_string(index) + " (" + layer_kind_name(spec.kind) +
                    "): " + why);
}

std::size_t flat_size(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

}  // namespace

std::vector<std::size_t> infer_output_shape(const LayerSpec& spec,
                                            const std::vector<std::size_t>& in_shape,
                                            std::size_t layer_index) {
  switch (spec.kind) {
    case LayerKind::Dense: {
      if (in_shape.size() != 1 || in_shape[0] != spec.in_features) {
        bad_layer(layer_index, spec,
                  "expects a flat input of " + std::to_string(spec.in_features) + " features");
      }
      if (spec.out_features == 0) bad_layer(layer_index, spec, "out_features must be positive");
      return {spec.out_features};
    }
    case LayerKind::Conv2d: {
      if (in_shape.size() != 3 || in_shape[0] != spec.in_channels) {
        bad_layer(layer_index, spec,
                  "expects [channels=" + std::to_string(spec.in_channels) + ", H, W] input");
      }
      if (spec.kernel == 0 || spec.stride == 0) bad_layer(layer_index, spec, "kernel and stride must be positive");
      const std::size_t h = in_shape[1], w = in_shape[2];
      if (h + 2 * spec.padding < spec.kernel || w + 2 * spec.padding < spec.kernel) {
        bad_layer(layer_index, spec, "kernel larger than padded input");
      }
      const std::size_t oh = (h + 2 * spec.padding - spec.kernel) / spec.stride + 1;
      const std::size_t ow = (w + 2 * spec.padding - spec.kernel) / spec.stride + 1;
      return {spec.out_channels, oh, ow};
    }
    case LayerKind::Relu:
      return in_shape;
    case LayerKind::MaxPool2d: {
      if (in_shape.size() != 3) bad_layer(layer_index, spec, "expects [channels, H, W] input");
      if (spec.kernel == 0 || spec.stride == 0) bad_layer(layer_index, spec, "kernel and stride must be positive");
      const std::size_t h = in_shape[1], w = in_shape[2];
      if (h < spec.kernel || w < spec.kernel) bad_layer(layer_index, spec, "window larger than input");
      const std::size_t oh = (h - spec.kernel) / spec.stride + 1;
      const std::size_t ow = (w - spec.kernel) / spec.stride + 1;
      return {in_shape[0], oh, ow};
    }
    case LayerKind::Flatten: {
      if (in_shape.empty()) bad_layer(layer_index, spec, "empty input shape");
      return {flat_size(in_shape)};
    }
  }
  bad_layer(layer_index, spec, "unknown layer kind");
}

}  // namespace ceskd
