#include "ceskd/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "ceskd/error.hpp"

namespace ceskd {

namespace {

constexpr const char* kMagic = "CESKD-CKPT 1";

std::uint64_t fnv1a(const std::vector<unsigned char>& bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void append_f32_le(std::vector<unsigned char>& out, float v) {
  const std::uint32_t bits = std::bit_cast<std::uint32_t>(v);
  out.push_back(static_cast<unsigned char>(bits & 0xff));
  out.push_back(static_cast<unsigned char>((bits >> 8) & 0xff));
  out.push_back(static_cast<unsigned char>((bits >> 16) & 0xff));
  out.push_back(static_cast<unsigned char>((bits >> 24) & 0xff));
}

float read_f32_le(const unsigned char* p) {
  const std::uint32_t bits = std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) |
                             (std::uint32_t(p[2]) << 16) | (std::uint32_t(p[3]) << 24);
  return std::bit_cast<float>(bits);
}

std::string layer_line(const LayerSpec& sp) {
  std::ostringstream out;
  out << layer_kind_name(sp.kind);
  switch (sp.kind) {
    case LayerKind::Dense:
      out << ' ' << sp.in_features << ' ' << sp.out_features;
      break;
    case LayerKind::Conv2d:
      out << ' ' << sp.in_channels << ' ' << sp.out_channels << ' ' << sp.kernel << ' '
          << sp.stride << ' ' << sp.padding;
      break;
    case LayerKind::MaxPool2d:
      out << ' ' << sp.kernel << ' ' << sp.stride;
      break;
    default:
      break;
  }
  return out.str();
}

LayerSpec parse_layer_line(const std::string& line, const std::string& path) {
  std::istringstream in(line);
  std::string kind;
  in >> kind;
  auto want = [&](std::size_t n, LayerSpec sp) {
    std::vector<std::size_t> args;
    std::size_t v;
    while (in >> v) args.push_back(v);
    if (args.size() != n) throw ParseError(path + ": malformed layer line: " + line);
    if (sp.kind == LayerKind::Dense) {
      sp.in_features = args[0];
      sp.out_features = args[1];
    } else if (sp.kind == LayerKind::Conv2d) {
      sp.in_channels = args[0];
      sp.out_channels = args[1];
      sp.kernel = args[2];
      sp.stride = args[3];
      sp.padding = args[4];
    } else if (sp.kind == LayerKind::MaxPool2d) {
      sp.kernel = args[0];
      sp.stride = args[1];
    }
    return sp;
  };
  if (kind == "dense") return want(2, LayerSpec::dense(0, 0));
  if (kind == "conv2d") return want(5, LayerSpec::conv2d(0, 0, 1));
  if (kind == "maxpool2d") return want(2, LayerSpec::maxpool2d(1, 1));
  if (kind == "relu") return want(0, LayerSpec::relu());
  if (kind == "flatten") return want(0, LayerSpec::flatten());
  throw ParseError(path + ": unknown layer kind: " + kind);
}

}  // namespace

void save_checkpoint(const Model& model, const std::string& path) {
  validate_model(model.spec);
  std::vector<unsigned char> block;
  for (const auto& layer : model.params) {
    for (const auto& t : layer) {
      for (float v : t.data) append_f32_le(block, v);
    }
  }
  std::ostringstream header;
  header << kMagic << "\n";
  header << "depth_tag " << model.spec.depth_tag << "\n";
  header << "seed " << model.spec.init_seed << "\n";
  header << "input";
  for (std::size_t d : model.spec.input_shape) header << ' ' << d;
  header << "\n";
  header << "layers " << model.spec.layers.size() << "\n";
  for (const LayerSpec& sp : model.spec.layers) header << layer_line(sp) << "\n";
  header << "params " << block.size() / 4 << ' ' << hex64(fnv1a(block)) << "\n";
  header << "DATA\n";

  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write checkpoint: " + path);
  const std::string h = header.str();
  out.write(h.data(), static_cast<long>(h.size()));
  out.write(reinterpret_cast<const char*>(block.data()), static_cast<long>(block.size()));
  if (!out) throw ParseError("write failed: " + path);
}

Model load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open checkpoint: " + path);
  std::string line;
  auto next = [&](const char* what) {
    if (!std::getline(in, line)) throw ParseError(path + ": truncated header, missing " + std::string(what));
    return line;
  };
  if (next("magic") != kMagic) {
    throw ParseError(path + ": bad or unsupported checkpoint version (expected '" +
                     std::string(kMagic) + "')");
  }
  ModelSpec spec;
  {
    std::istringstream s(next("depth_tag"));
    std::string key;
    if (!(s >> key >> spec.depth_tag) || key != "depth_tag") throw ParseError(path + ": malformed depth_tag line");
  }
  {
    std::istringstream s(next("seed"));
    std::string key;
    if (!(s >> key >> spec.init_seed) || key != "seed") throw ParseError(path + ": malformed seed line");
  }
  {
    std::istringstream s(next("input"));
    std::string key;
    s >> key;
    if (key != "input") throw ParseError(path + ": malformed input line");
    std::size_t d;
    while (s >> d) spec.input_shape.push_back(d);
    if (spec.input_shape.empty()) throw ParseError(path + ": empty input shape");
  }
  std::size_t n_layers = 0;
  {
    std::istringstream s(next("layers"));
    std::string key;
    if (!(s >> key >> n_layers) || key != "layers") throw ParseError(path + ": malformed layers line");
  }
  for (std::size_t i = 0; i < n_layers; ++i) spec.layers.push_back(parse_layer_line(next("layer"), path));
  std::size_t n_params = 0;
  std::string checksum;
  {
    std::istringstream s(next("params"));
    std::string key;
    if (!(s >> key >> n_params >> checksum) || key != "params") throw ParseError(path + ": malformed params line");
  }
  if (next("DATA") != "DATA") throw ParseError(path + ": missing DATA marker");

  std::vector<unsigned char> block(n_params * 4);
  in.read(reinterpret_cast<char*>(block.data()), static_cast<long>(block.size()));
  if (static_cast<std::size_t>(in.gcount()) != block.size()) {
    throw ParseError(path + ": parameter block truncated, expected " +
                     std::to_string(block.size()) + " bytes, got " + std::to_string(in.gcount()));
  }
  char extra;
  if (in.read(&extra, 1)) throw ParseError(path + ": trailing bytes after parameter block");
  if (hex64(fnv1a(block)) != checksum) {
    throw ParseError(path + ": parameter block checksum mismatch");
  }

  Model model;
  model.spec = spec;
  const auto shapes = validate_model(spec);  // rejects inconsistent headers
  model.params.resize(spec.layers.size());
  std::size_t pos = 0;
  auto take = [&](std::vector<std::size_t> shape) {
    Tensor t(std::move(shape));
    if (pos + t.numel() * 4 > block.size()) {
      throw ParseError(path + ": parameter count does not cover all layers");
    }
    for (std::size_t j = 0; j < t.numel(); ++j) t.data[j] = read_f32_le(&block[pos + j * 4]);
    pos += t.numel() * 4;
    return t;
  };
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerSpec& sp = spec.layers[i];
    if (sp.kind == LayerKind::Dense) {
      model.params[i].push_back(take({sp.out_features, sp.in_features}));
      model.params[i].push_back(take({sp.out_features}));
    } else if (sp.kind == LayerKind::Conv2d) {
      model.params[i].push_back(take({sp.out_channels, sp.in_channels, sp.kernel, sp.kernel}));
      model.params[i].push_back(take({sp.out_channels}));
    }
  }
  if (pos != block.size()) throw ParseError(path + ": parameter count exceeds layer needs");
  (void)shapes;
  return model;
}

std::string checkpoint_id(const Model& model) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(param_checksum(model)));
  return buf;
}

}  // namespace ceskd
