#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ceskd/layers.hpp"
#include "ceskd/rng.hpp"
#include "ceskd/tensor.hpp"

namespace ceskd {

// Architecture plus capacity label. input_shape excludes the batch dimension:
// [d] for feature vectors, [c, h, w] for images.
struct ModelSpec {
  std::vector<std::size_t> input_shape;
  std::vector<LayerSpec> layers;
  int depth_tag = 0;
  std::uint64_t init_seed = 0;

  bool operator==(const ModelSpec&) const = default;
};

// Validates shape compatibility of the whole stack. Returns per-boundary
// shapes: result[0] is the input shape, result[i+1] the output of layer i.
// Throws ConfigError naming the offending layer.
inline std::vector<std::vector<std::size_t>> validate_model(const ModelSpec& spec) {
  if (spec.input_shape.empty()) throw ConfigError("model: empty input shape");
  if (spec.layers.empty()) throw ConfigError("model: no layers");
  std::vector<std::vector<std::size_t>> shapes;
  shapes.push_back(spec.input_shape);
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    shapes.push_back(infer_output_shape(spec.layers[i], shapes.back(), i));
  }
  if (shapes.back().size() != 1) {
    throw ConfigError("model: final layer must produce a flat logit vector");
  }
  return shapes;
}

template <typename S>
struct ModelT {
  ModelSpec spec;
  // params[i] holds the tensors of layer i: {W, b} for dense/conv, {} otherwise.
  std::vector<std::vector<TensorT<S>>> params;

  int depth_tag() const { return spec.depth_tag; }
  std::size_t num_classes() const {
    return spec.layers.back().kind == LayerKind::Dense ? spec.layers.back().out_features : 0;
  }

  template <typename U>
  ModelT<U> cast() const {
    ModelT<U> out;
    out.spec = spec;
    out.params.reserve(params.size());
    for (const auto& layer : params) {
      std::vector<TensorT<U>> converted;
      converted.reserve(layer.size());
      for (const auto& t : layer) converted.push_back(t.template cast<U>());
      out.params.push_back(std::move(converted));
    }
    return out;
  }
};

using Model = ModelT<float>;
using ModelD = ModelT<double>;

template <typename S>
using GradientsT = std::vector<std::vector<TensorT<S>>>;

// Cached activations of one forward call; consumed by backward.
template <typename S>
struct ForwardTrace {
  bool valid = false;
  std::vector<TensorT<S>> acts;                        // acts[0] = input batch
  std::vector<std::vector<std::size_t>> pool_argmax;   // per layer, maxpool only
};

namespace detail {

template <typename S>
void dense_forward(const LayerSpec& spec, const TensorT<S>& w, const TensorT<S>& b,
                   const TensorT<S>& x, TensorT<S>& y) {
  const std::size_t n = x.dim(0), in = spec.in_features, out = spec.out_features;
  for (std::size_t r = 0; r < n; ++r) {
    const S* xr = &x.data[r * in];
    S* yr = &y.data[r * out];
    for (std::size_t o = 0; o < out; ++o) {
      S acc = b.data[o];
      const S* wr = &w.data[o * in];
      for (std::size_t i = 0; i < in; ++i) acc += wr[i] * xr[i];
      yr[o] = acc;
    }
  }
}

template <typename S>
void dense_backward(const LayerSpec& spec, const TensorT<S>& w, const TensorT<S>& x,
                    const TensorT<S>& dy, TensorT<S>& dw, TensorT<S>& db, TensorT<S>& dx) {
  const std::size_t n = x.dim(0), in = spec.in_features, out = spec.out_features;
  for (std::size_t r = 0; r < n; ++r) {
    const S* xr = &x.data[r * in];
    const S* dyr = &dy.data[r * out];
    S* dxr = &dx.data[r * in];
    for (std::size_t o = 0; o < out; ++o) {
      const S g = dyr[o];
      db.data[o] += g;
      S* dwr = &dw.data[o * in];
      const S* wr = &w.data[o * in];
      for (std::size_t i = 0; i < in; ++i) {
        dwr[i] += g * xr[i];
        dxr[i] += g * wr[i];
      }
    }
  }
}

template <typename S>
void conv2d_forward(const LayerSpec& sp, const TensorT<S>& w, const TensorT<S>& b,
                    const TensorT<S>& x, TensorT<S>& y) {
  const std::size_t n = x.dim(0), ic = sp.in_channels, h = x.dim(2), wd = x.dim(3);
  const std::size_t oc = sp.out_channels, oh = y.dim(2), ow = y.dim(3);
  const std::size_t k = sp.kernel, st = sp.stride;
  const long pad = static_cast<long>(sp.padding);
  for (std::size_t bi = 0; bi < n; ++bi) {
    for (std::size_t o = 0; o < oc; ++o) {
      for (std::size_t yy = 0; yy < oh; ++yy) {
        for (std::size_t xx = 0; xx < ow; ++xx) {
          S acc = b.data[o];
          for (std::size_t c = 0; c < ic; ++c) {
            for (std::size_t ky = 0; ky < k; ++ky) {
              const long iy = static_cast<long>(yy * st + ky) - pad;
              if (iy < 0 || iy >= static_cast<long>(h)) continue;
              for (std::size_t kx = 0; kx < k; ++kx) {
                const long ix = static_cast<long>(xx * st + kx) - pad;
                if (ix < 0 || ix >= static_cast<long>(wd)) continue;
                acc += w.data[((o * ic + c) * k + ky) * k + kx] *
                       x.data[((bi * ic + c) * h + iy) * wd + ix];
              }
            }
          }
          y.data[((bi * oc + o) * oh + yy) * ow + xx] = acc;
        }
      }
    }
  }
}

template <typename S>
void conv2d_backward(const LayerSpec& sp, const TensorT<S>& w, const TensorT<S>& x,
                     const TensorT<S>& dy, TensorT<S>& dw, TensorT<S>& db, TensorT<S>& dx) {
  const std::size_t n = x.dim(0), ic = sp.in_channels, h = x.dim(2), wd = x.dim(3);
  const std::size_t oc = sp.out_channels, oh = dy.dim(2), ow = dy.dim(3);
  const std::size_t k = sp.kernel, st = sp.stride;
  const long pad = static_cast<long>(sp.padding);
  for (std::size_t bi = 0; bi < n; ++bi) {
    for (std::size_t o = 0; o < oc; ++o) {
      for (std::size_t yy = 0; yy < oh; ++yy) {
        for (std::size_t xx = 0; xx < ow; ++xx) {
          const S g = dy.data[((bi * oc + o) * oh + yy) * ow + xx];
          db.data[o] += g;
          for (std::size_t c = 0; c < ic; ++c) {
            for (std::size_t ky = 0; ky < k; ++ky) {
              const long iy = static_cast<long>(yy * st + ky) - pad;
              if (iy < 0 || iy >= static_cast<long>(h)) continue;
              for (std::size_t kx = 0; kx < k; ++kx) {
                const long ix = static_cast<long>(xx * st + kx) - pad;
                if (ix < 0 || ix >= static_cast<long>(wd)) continue;
                const std::size_t wi = ((o * ic + c) * k + ky) * k + kx;
                const std::size_t xi = ((bi * ic + c) * h + iy) * wd + ix;
                dw.data[wi] += g * x.data[xi];
                dx.data[xi] += g * w.data[wi];
              }
            }
          }
        }
      }
    }
  }
}

template <typename S>
void maxpool_forward(const LayerSpec& sp, const TensorT<S>& x, TensorT<S>& y,
                     std::vector<std::size_t>& argmax) {
  const std::size_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  const std::size_t oh = y.dim(2), ow = y.dim(3), k = sp.kernel, st = sp.stride;
  argmax.assign(y.numel(), 0);
  std::size_t oi = 0;
  for (std::size_t bi = 0; bi < n; ++bi) {
    for (std::size_t ch = 0; ch < c; ++ch) {
      for (std::size_t yy = 0; yy < oh; ++yy) {
        for (std::size_t xx = 0; xx < ow; ++xx, ++oi) {
          std::size_t best = ((bi * c + ch) * h + yy * st) * w + xx * st;
          S bestv = x.data[best];
          for (std::size_t ky = 0; ky < k; ++ky) {
            for (std::size_t kx = 0; kx < k; ++kx) {
              const std::size_t xi = ((bi * c + ch) * h + yy * st + ky) * w + xx * st + kx;
              if (x.data[xi] > bestv) {
                bestv = x.data[xi];
                best = xi;
              }
            }
          }
          y.data[oi] = bestv;
          argmax[oi] = best;
        }
      }
    }
  }
}

}  // namespace detail

// Runs the stack on a batch; logits come back as [batch, num_classes].
// The trace captures everything backward needs.
template <typename S>
TensorT<S> forward(const ModelT<S>& model, const TensorT<S>& batch, ForwardTrace<S>& trace) {
  const auto shapes = validate_model(model.spec);
  if (batch.ndim() < 2 ||
      std::vector<std::size_t>(batch.shape.begin() + 1, batch.shape.end()) != shapes[0]) {
    throw ConfigError("forward: batch shape does not match model input shape");
  }
  const std::size_t n = batch.dim(0);
  trace.acts.clear();
  trace.pool_argmax.assign(model.spec.layers.size(), {});
  trace.acts.push_back(batch);
  for (std::size_t i = 0; i < model.spec.layers.size(); ++i) {
    const LayerSpec& sp = model.spec.layers[i];
    std::vector<std::size_t> out_shape = shapes[i + 1];
    out_shape.insert(out_shape.begin(), n);
    TensorT<S> out(out_shape);
    const TensorT<S>& in = trace.acts.back();
    switch (sp.kind) {
      case LayerKind::Dense:
        detail::dense_forward(sp, model.params[i][0], model.params[i][1], in, out);
        break;
      case LayerKind::Conv2d:
        detail::conv2d_forward(sp, model.params[i][0], model.params[i][1], in, out);
        break;
      case LayerKind::Relu:
        for (std::size_t j = 0; j < in.numel(); ++j) out.data[j] = in.data[j] > S(0) ? in.data[j] : S(0);
        break;
      case LayerKind::MaxPool2d:
        detail::maxpool_forward(sp, in, out, trace.pool_argmax[i]);
        break;
      case LayerKind::Flatten:
        out.data = in.data;
        break;
    }
    trace.acts.push_back(std::move(out));
  }
  trace.valid = true;
  return trace.acts.back();
}

// Gradients w.r.t. every parameter tensor given d(loss)/d(logits).
// Does not mutate the model.
template <typename S>
GradientsT<S> backward(const ModelT<S>& model, const ForwardTrace<S>& trace,
                       const TensorT<S>& grad_logits) {
  if (!trace.valid || trace.acts.size() != model.spec.layers.size() + 1) {
    throw StateError("backward: no matching forward trace");
  }
  if (!grad_logits.same_shape(trace.acts.back())) {
    throw ConfigError("backward: loss gradient shape does not match logits shape");
  }
  GradientsT<S> grads(model.spec.layers.size());
  TensorT<S> delta = grad_logits;
  for (std::size_t ri = model.spec.layers.size(); ri-- > 0;) {
    const LayerSpec& sp = model.spec.layers[ri];
    const TensorT<S>& in = trace.acts[ri];
    TensorT<S> dx(in.shape);
    switch (sp.kind) {
      case LayerKind::Dense: {
        TensorT<S> dw(model.params[ri][0].shape);
        TensorT<S> db(model.params[ri][1].shape);
        detail::dense_backward(sp, model.params[ri][0], in, delta, dw, db, dx);
        grads[ri] = {std::move(dw), std::move(db)};
        break;
      }
      case LayerKind::Conv2d: {
        TensorT<S> dw(model.params[ri][0].shape);
        TensorT<S> db(model.params[ri][1].shape);
        detail::conv2d_backward(sp, model.params[ri][0], in, delta, dw, db, dx);
        grads[ri] = {std::move(dw), std::move(db)};
        break;
      }
      case LayerKind::Relu:
        for (std::size_t j = 0; j < in.numel(); ++j) {
          dx.data[j] = in.data[j] > S(0) ? delta.data[j] : S(0);
        }
        break;
      case LayerKind::MaxPool2d:
        for (std::size_t j = 0; j < delta.numel(); ++j) {
          dx.data[trace.pool_argmax[ri][j]] += delta.data[j];
        }
        break;
      case LayerKind::Flatten:
        dx.data = delta.data;
        break;
    }
    delta = std::move(dx);
  }
  return grads;
}

// Fan-in-scaled uniform init; weights are drawn in double precision and cast,
// so the f32 and f64 variants of the same seed agree.
template <typename S>
ModelT<S> init_weights_as(const ModelSpec& spec, std::uint64_t seed) {
  validate_model(spec);
  ModelT<S> m;
  m.spec = spec;
  m.spec.init_seed = seed;
  m.params.resize(spec.layers.size());
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerSpec& sp = spec.layers[i];
    if (!sp.has_params()) continue;
    Rng rng(substream(seed, "init", i));
    std::size_t fan_in, wsize, bsize;
    std::vector<std::size_t> wshape;
    if (sp.kind == LayerKind::Dense) {
      fan_in = sp.in_features;
      wshape = {sp.out_features, sp.in_features};
      bsize = sp.out_features;
    } else {
      fan_in = sp.in_channels * sp.kernel * sp.kernel;
      wshape = {sp.out_channels, sp.in_channels, sp.kernel, sp.kernel};
      bsize = sp.out_channels;
    }
    wsize = TensorT<S>::numel_of(wshape);
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    TensorT<S> w(wshape);
    for (std::size_t j = 0; j < wsize; ++j) w.data[j] = static_cast<S>(rng.uniform(-bound, bound));
    TensorT<S> b({bsize});
    m.params[i] = {std::move(w), std::move(b)};
  }
  return m;
}

inline Model init_weights(const ModelSpec& spec, std::uint64_t seed) {
  return init_weights_as<float>(spec, seed);
}

// FNV-1a over the raw parameter bytes; used for expert-freezing audits and
// checkpoint identity.
template <typename S>
std::uint64_t param_checksum(const ModelT<S>& m) {
  std::uint64_t h = 1469598103934665603ull;
  for (const auto& layer : m.params) {
    for (const auto& t : layer) {
      const unsigned char* bytes = reinterpret_cast<const unsigned char*>(t.data.data());
      for (std::size_t j = 0; j < t.data.size() * sizeof(S); ++j) {
        h ^= bytes[j];
        h *= 1099511628211ull;
      }
    }
  }
  return h;
}

}  // namespace ceskd
