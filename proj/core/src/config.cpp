#include "ceskd/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "ceskd/error.hpp"

namespace ceskd {

RunConfig ExperimentConfig::run_config(std::uint64_t seed) const {
  RunConfig rc;
  rc.epochs = epochs;
  rc.batch_size = static_cast<std::size_t>(batch_size);
  rc.hp.alpha = alpha;
  rc.hp.temperature = temperature;
  rc.sgd.momentum = momentum;
  rc.sgd.weight_decay = weight_decay;
  rc.sgd.nesterov = nesterov;
  rc.lr = LrSchedule{lr, lr_milestones, lr_factor};
  rc.seed = seed;
  rc.class_balanced = class_balanced;
  rc.policy.kind = policy;
  rc.augment_enabled = augment;
  return rc;
}

void ExperimentConfig::validate() const {
  if (dataset != "synthetic" && dataset != "idx" && dataset != "cifar10") {
    throw ConfigError("config: dataset must be synthetic, idx, or cifar10");
  }
  if (path.empty()) throw ConfigError("config: empty path");
  for (std::size_t i = 1; i < path.size(); ++i) {
    if (path[i] >= path[i - 1]) throw ConfigError("config: path depth tags must strictly decrease");
  }
  if (epochs < 0 || batch_size < 1 || reference_epochs < 1) {
    throw ConfigError("config: epochs/batch_size/reference_epochs out of range");
  }
  KDHyperparams{temperature, alpha}.validate();
  LrSchedule{lr, lr_milestones, lr_factor}.validate();
  if (seeds.empty()) throw ConfigError("config: at least one seed required");
  if (out.empty()) throw ConfigError("config: output directory required");
}

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string item;
  while (std::getline(in, item, sep)) out.push_back(trim(item));
  if (!out.empty() && out.back().empty()) out.pop_back();
  return out;
}

struct LineContext {
  const std::string& origin;
  std::size_t lineno;

  [[noreturn]] void fail(const std::string& why) const {
    throw ParseError(origin + ":" + std::to_string(lineno) + ": " + why);
  }
};

long long parse_int(const std::string& v, const LineContext& ctx) {
  try {
    std::size_t pos = 0;
    const long long out = std::stoll(v, &pos);
    if (pos != v.size()) ctx.fail("expected an integer, got '" + v + "'");
    return out;
  } catch (const std::exception&) {
    ctx.fail("expected an integer, got '" + v + "'");
  }
}

double parse_double(const std::string& v, const LineContext& ctx) {
  try {
    std::size_t pos = 0;
    const double out = std::stod(v, &pos);
    if (pos != v.size()) ctx.fail("expected a number, got '" + v + "'");
    return out;
  } catch (const std::exception&) {
    ctx.fail("expected a number, got '" + v + "'");
  }
}

bool parse_bool(const std::string& v, const LineContext& ctx) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  ctx.fail("expected true/false, got '" + v + "'");
}

template <typename T, typename F>
std::vector<T> parse_list(const std::string& v, const LineContext& ctx, F item) {
  std::vector<T> out;
  for (const std::string& s : split(v, ',')) out.push_back(item(s, ctx));
  if (out.empty()) ctx.fail("expected a comma-separated list, got '" + v + "'");
  return out;
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text, const std::string& origin) {
  ExperimentConfig cfg;
  cfg.model_defs.clear();
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const LineContext ctx{origin, lineno};
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const std::size_t eq = stripped.find('=');
    if (eq == std::string::npos) ctx.fail("expected 'key = value'");
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (key.empty()) ctx.fail("empty key");

    if (key == "dataset") cfg.dataset = value;
    else if (key == "synthetic_classes") cfg.synthetic_classes = static_cast<int>(parse_int(value, ctx));
    else if (key == "synthetic_dim") cfg.synthetic_dim = static_cast<int>(parse_int(value, ctx));
    else if (key == "synthetic_train_size") cfg.synthetic_train_size = static_cast<int>(parse_int(value, ctx));
    else if (key == "synthetic_hardness") cfg.synthetic_hardness = parse_double(value, ctx);
    else if (key == "data_seed") cfg.data_seed = static_cast<std::uint64_t>(parse_int(value, ctx));
    else if (key == "idx_train_images") cfg.idx_train_images = value;
    else if (key == "idx_train_labels") cfg.idx_train_labels = value;
    else if (key == "idx_test_images") cfg.idx_test_images = value;
    else if (key == "idx_test_labels") cfg.idx_test_labels = value;
    else if (key == "cifar_train") cfg.cifar_train = split(value, ',');
    else if (key == "cifar_test") cfg.cifar_test = split(value, ',');
    else if (key == "path") cfg.path = parse_list<int>(value, ctx, [](const std::string& s, const LineContext& c) {
        return static_cast<int>(parse_int(s, c));
      });
    else if (key.rfind("model_", 0) == 0) {
      const std::string tag_str = key.substr(6);
      const int tag = static_cast<int>(parse_int(tag_str, ctx));
      cfg.model_defs[tag] = value;
    }
    else if (key == "method") {
      try { cfg.method = method_from(value); } catch (const ParseError& e) { ctx.fail(e.what()); }
    }
    else if (key == "policy") {
      try { cfg.policy = selection_kind_from(value); } catch (const ParseError& e) { ctx.fail(e.what()); }
    }
    else if (key == "class_balanced") cfg.class_balanced = parse_bool(value, ctx);
    else if (key == "epochs") cfg.epochs = static_cast<int>(parse_int(value, ctx));
    else if (key == "batch_size") cfg.batch_size = static_cast<int>(parse_int(value, ctx));
    else if (key == "alpha") cfg.alpha = parse_double(value, ctx);
    else if (key == "temperature") cfg.temperature = parse_double(value, ctx);
    else if (key == "lr") cfg.lr = parse_double(value, ctx);
    else if (key == "lr_milestones") cfg.lr_milestones = parse_list<int>(value, ctx, [](const std::string& s, const LineContext& c) {
        return static_cast<int>(parse_int(s, c));
      });
    else if (key == "lr_factor") cfg.lr_factor = parse_double(value, ctx);
    else if (key == "momentum") cfg.momentum = parse_double(value, ctx);
    else if (key == "weight_decay") cfg.weight_decay = parse_double(value, ctx);
    else if (key == "nesterov") cfg.nesterov = parse_bool(value, ctx);
    else if (key == "augment") cfg.augment = parse_bool(value, ctx);
    else if (key == "reference_epochs") cfg.reference_epochs = static_cast<int>(parse_int(value, ctx));
    else if (key == "threshold") cfg.threshold = parse_double(value, ctx);
    else if (key == "seeds") cfg.seeds = parse_list<std::uint64_t>(value, ctx, [](const std::string& s, const LineContext& c) {
        return static_cast<std::uint64_t>(parse_int(s, c));
      });
    else if (key == "out") cfg.out = value;
    else ctx.fail("unknown key '" + key + "'");
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path);
}

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

template <typename T>
std::string join(const std::vector<T>& items) {
  std::ostringstream out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out << ',';
    out << items[i];
  }
  return out.str();
}

}  // namespace

std::string serialize_config(const ExperimentConfig& cfg) {
  std::ostringstream out;
  out << "# ceskd experiment config\n";
  out << "dataset = " << cfg.dataset << "\n";
  out << "synthetic_classes = " << cfg.synthetic_classes << "\n";
  out << "synthetic_dim = " << cfg.synthetic_dim << "\n";
  out << "synthetic_train_size = " << cfg.synthetic_train_size << "\n";
  out << "synthetic_hardness = " << fmt_double(cfg.synthetic_hardness) << "\n";
  out << "data_seed = " << cfg.data_seed << "\n";
  if (!cfg.idx_train_images.empty()) out << "idx_train_images = " << cfg.idx_train_images << "\n";
  if (!cfg.idx_train_labels.empty()) out << "idx_train_labels = " << cfg.idx_train_labels << "\n";
  if (!cfg.idx_test_images.empty()) out << "idx_test_images = " << cfg.idx_test_images << "\n";
  if (!cfg.idx_test_labels.empty()) out << "idx_test_labels = " << cfg.idx_test_labels << "\n";
  if (!cfg.cifar_train.empty()) out << "cifar_train = " << join(cfg.cifar_train) << "\n";
  if (!cfg.cifar_test.empty()) out << "cifar_test = " << join(cfg.cifar_test) << "\n";
  out << "path = " << join(cfg.path) << "\n";
  for (const auto& [tag, stack] : cfg.model_defs) {
    out << "model_" << tag << " = " << stack << "\n";
  }
  out << "method = " << method_name(cfg.method) << "\n";
  out << "policy = " << selection_kind_name(cfg.policy) << "\n";
  out << "class_balanced = " << (cfg.class_balanced ? "true" : "false") << "\n";
  out << "epochs = " << cfg.epochs << "\n";
  out << "batch_size = " << cfg.batch_size << "\n";
  out << "alpha = " << fmt_double(cfg.alpha) << "\n";
  out << "temperature = " << fmt_double(cfg.temperature) << "\n";
  out << "lr = " << fmt_double(cfg.lr) << "\n";
  out << "lr_milestones = " << join(cfg.lr_milestones) << "\n";
  out << "lr_factor = " << fmt_double(cfg.lr_factor) << "\n";
  out << "momentum = " << fmt_double(cfg.momentum) << "\n";
  out << "weight_decay = " << fmt_double(cfg.weight_decay) << "\n";
  out << "nesterov = " << (cfg.nesterov ? "true" : "false") << "\n";
  out << "augment = " << (cfg.augment ? "true" : "false") << "\n";
  out << "reference_epochs = " << cfg.reference_epochs << "\n";
  out << "threshold = " << fmt_double(cfg.threshold) << "\n";
  out << "seeds = " << join(cfg.seeds) << "\n";
  out << "out = " << cfg.out << "\n";
  return out.str();
}

ModelSpec build_model_spec(const std::string& stack, int depth_tag,
                           const std::vector<std::size_t>& input_shape, std::size_t num_classes) {
  ModelSpec spec;
  spec.input_shape = input_shape;
  spec.depth_tag = depth_tag;
  std::vector<std::size_t> shape = input_shape;
  auto ensure_flat = [&]() {
    if (shape.size() != 1) {
      spec.layers.push_back(LayerSpec::flatten());
      shape = infer_output_shape(spec.layers.back(), shape, spec.layers.size() - 1);
    }
  };
  for (const std::string& token : split(stack, ',')) {
    if (token.empty()) continue;
    const std::vector<std::string> parts = split(token, ':');
    auto arg = [&](std::size_t i) {
      if (i >= parts.size()) throw ConfigError("model stack: token '" + token + "' is missing arguments");
      try {
        return static_cast<std::size_t>(std::stoull(parts[i]));
      } catch (const std::exception&) {
        throw ConfigError("model stack: bad argument in token '" + token + "'");
      }
    };
    if (parts[0] == "dense") {
      ensure_flat();
      spec.layers.push_back(LayerSpec::dense(shape[0], arg(1)));
    } else if (parts[0] == "relu") {
      spec.layers.push_back(LayerSpec::relu());
    } else if (parts[0] == "flatten") {
      spec.layers.push_back(LayerSpec::flatten());
    } else if (parts[0] == "conv") {
      if (shape.size() != 3) throw ConfigError("model stack: conv needs [c,h,w] input at '" + token + "'");
      spec.layers.push_back(LayerSpec::conv2d(shape[0], arg(1), arg(2), arg(3), arg(4)));
    } else if (parts[0] == "pool") {
      spec.layers.push_back(LayerSpec::maxpool2d(arg(1), arg(2)));
    } else {
      throw ConfigError("model stack: unknown token '" + token + "'");
    }
    shape = infer_output_shape(spec.layers.back(), shape, spec.layers.size() - 1);
  }
  ensure_flat();
  spec.layers.push_back(LayerSpec::dense(shape[0], num_classes));
  validate_model(spec);
  return spec;
}

std::string stack_for_tag(const ExperimentConfig& cfg, int tag) {
  const auto it = cfg.model_defs.find(tag);
  if (it != cfg.model_defs.end()) return it->second;
  if (tag < 2) throw ConfigError("no model definition for depth tag " + std::to_string(tag));
  const int hidden_layers = std::max(1, tag / 2 - 1);
  const int width = 4 * tag;
  std::ostringstream out;
  for (int i = 0; i < hidden_layers; ++i) {
    if (i) out << ',';
    out << "dense:" << width << ",relu";
  }
  return out.str();
}

ModelSpec model_spec_for(const ExperimentConfig& cfg, int tag,
                         const std::vector<std::size_t>& input_shape, std::size_t num_classes) {
  return build_model_spec(stack_for_tag(cfg, tag), tag, input_shape, num_classes);
}

std::vector<ModelSpec> path_specs(const ExperimentConfig& cfg,
                                  const std::vector<std::size_t>& input_shape,
                                  std::size_t num_classes) {
  std::vector<ModelSpec> specs;
  for (int tag : cfg.path) specs.push_back(model_spec_for(cfg, tag, input_shape, num_classes));
  return specs;
}

}  // namespace ceskd
