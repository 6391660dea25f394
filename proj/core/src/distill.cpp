#include "ceskd/distill.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "ceskd/error.hpp"

namespace ceskd {

const char* method_name(Method m) {
  switch (m) {
    case Method::NoKD: return "noKD";
    case Method::Blkd: return "blkd";
    case Method::Takd: return "takd";
    case Method::Dgkd: return "dgkd";
    case Method::Ceskd: return "ceskd";
  }
  return "?";
}

Method method_from(const std::string& name) {
  if (name == "noKD" || name == "nokd") return Method::NoKD;
  if (name == "blkd") return Method::Blkd;
  if (name == "takd") return Method::Takd;
  if (name == "dgkd") return Method::Dgkd;
  if (name == "ceskd") return Method::Ceskd;
  throw ParseError("unknown method: " + name);
}

std::optional<int> Metrics::epochs_to_threshold(double theta) const {
  for (const EpochMetrics& e : epochs) {
    if (e.top1 >= theta) return e.epoch;
  }
  return std::nullopt;
}

void ExpertPool::validate() const {
  for (std::size_t i = 0; i < experts.size(); ++i) {
    if (experts[i] == nullptr) throw ConfigError("expert pool: null expert");
    if (i > 0 && experts[i]->depth_tag() <= experts[i - 1]->depth_tag()) {
      throw ConfigError("expert pool: depth tags must be strictly ascending");
    }
  }
}

std::pair<double, double> evaluate(const Model& model, const Dataset& test) {
  test.validate();
  const std::size_t k = model.num_classes();
  std::size_t hit1 = 0, hit5 = 0;
  constexpr std::size_t kChunk = 256;
  for (std::size_t start = 0; start < test.size(); start += kChunk) {
    const std::size_t end = std::min(start + kChunk, test.size());
    std::vector<std::size_t> idx(end - start);
    std::iota(idx.begin(), idx.end(), start);
    ForwardTrace<float> trace;
    const Tensor logits = forward(model, test.gather(idx), trace);
    for (std::size_t i = 0; i < idx.size(); ++i) {
      const std::size_t y = static_cast<std::size_t>(test.labels[idx[i]]);
      const float zy = logits.at2(i, y);
      std::size_t better = 0;
      for (std::size_t c = 0; c < k; ++c) {
        if (logits.at2(i, c) > zy || (logits.at2(i, c) == zy && c < y)) ++better;
      }
      if (better == 0) ++hit1;
      if (better < 5) ++hit5;
    }
  }
  const double n = static_cast<double>(test.size());
  return {100.0 * static_cast<double>(hit1) / n, 100.0 * static_cast<double>(hit5) / n};
}

namespace {

BucketPlan whole_set_plan(std::size_t n) {
  BucketPlan plan;
  plan.L = 1;
  plan.buckets.assign(1, std::vector<std::size_t>(n));
  std::iota(plan.buckets[0].begin(), plan.buckets[0].end(), 0);
  return plan;
}

// Shared inner loop of every method. `experts` is empty for scratch training,
// a single model for blkd/takd, all ancestors for dgkd, and the full
// capacity ladder (|experts| == plan.L) for ceskd.
Metrics run_training(Model& student, const std::vector<const Model*>& experts, Method method,
                     const BucketPlan& plan, const RunConfig& cfg, const Dataset& train,
                     const Dataset& test, RunLog* log) {
  const std::size_t k = static_cast<std::size_t>(train.num_classes);
  OptimizerState opt = OptimizerState::for_model(student, cfg.sgd);
  SelectionPolicy policy = cfg.policy;
  policy.seed = substream(cfg.seed, "policy");
  Metrics metrics;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    const double lr = lr_at(cfg.lr, epoch);
    std::vector<std::size_t> assignment;
    if (method == Method::Ceskd) {
      assignment = assign_experts(plan, experts.size(), policy, epoch);
    }
    const auto batches = epoch_batches(plan, cfg.batch_size, cfg.seed, epoch);
    Rng aug_rng(substream(cfg.seed, "augment", static_cast<std::uint64_t>(epoch)));
    double loss_sum = 0.0;
    bool diverged = false;
    int step = 0;
    for (const MiniBatch& mb : batches) {
      Tensor x = train.gather(mb.indices);
      if (train.is_image() && cfg.augment_enabled) x = augment(x, cfg.aug, aug_rng);
      const Tensor y = one_hot<float>(train.gather_labels(mb.indices), k);

      ForwardTrace<float> trace;
      const Tensor z_s = forward(student, x, trace);

      LossValue loss;
      int expert_depth = -1;
      switch (method) {
        case Method::NoKD:
          loss = cross_entropy_with_logits(z_s, y);
          break;
        case Method::Blkd:
        case Method::Takd: {
          ForwardTrace<float> et;
          const Tensor z_e = forward(*experts[0], x, et);
          loss = ceskd_total_loss(z_s, z_e, y, cfg.hp);
          expert_depth = experts[0]->depth_tag();
          break;
        }
        case Method::Dgkd: {
          std::vector<Tensor> ancestor_logits;
          ancestor_logits.reserve(experts.size());
          for (const Model* e : experts) {
            ForwardTrace<float> et;
            ancestor_logits.push_back(forward(*e, x, et));
          }
          loss = ensemble_kd_loss(z_s, ancestor_logits, y, cfg.hp);
          break;
        }
        case Method::Ceskd: {
          const Model* expert = experts[assignment[mb.bucket]];
          ForwardTrace<float> et;
          const Tensor z_e = forward(*expert, x, et);
          loss = ceskd_total_loss(z_s, z_e, y, cfg.hp);
          expert_depth = expert->depth_tag();
          break;
        }
      }
      if (!std::isfinite(loss.scalar)) {
        diverged = true;
        break;
      }
      const GradientsT<float> grads = backward(student, trace, loss.grad);
      sgd_step(student, grads, opt, lr);
      if (log) log->push_back({epoch, step, mb.bucket, expert_depth, loss.scalar});
      loss_sum += loss.scalar * static_cast<double>(mb.indices.size());
      ++step;
    }
    if (diverged) {
      metrics.diverged = true;
      break;
    }
    EpochMetrics em;
    em.epoch = epoch;
    em.train_loss = loss_sum / static_cast<double>(train.size());
    const auto [top1, top5] = evaluate(student, test);
    em.top1 = top1;
    em.top5 = top5;
    em.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    metrics.epochs.push_back(em);
    metrics.final_top1 = top1;
    metrics.final_top5 = top5;
  }
  return metrics;
}

}  // namespace

std::pair<Model, Metrics> train_scratch(const ModelSpec& spec, const Dataset& train,
                                        const Dataset& test, const RunConfig& cfg, RunLog* log) {
  train.validate();
  Model student = init_weights(spec, substream(cfg.seed, "init-student"));
  const BucketPlan plan = whole_set_plan(train.size());
  Metrics metrics = run_training(student, {}, Method::NoKD, plan, cfg, train, test, log);
  return {std::move(student), std::move(metrics)};
}

std::pair<Model, Metrics> distill_step(const ModelSpec& student_spec, const ExpertPool& pool,
                                       Method method, const RankedDataset* ranked,
                                       const Dataset& train, const Dataset& test,
                                       const RunConfig& cfg, RunLog* log) {
  train.validate();
  pool.validate();
  BucketPlan plan;
  switch (method) {
    case Method::NoKD:
      throw ConfigError("distill_step: use train_scratch for the noKD baseline");
    case Method::Blkd:
    case Method::Takd:
      if (pool.size() != 1) {
        throw ConfigError(std::string(method_name(method)) + " expects exactly one expert");
      }
      plan = whole_set_plan(train.size());
      break;
    case Method::Dgkd:
      if (pool.size() < 1) throw ConfigError("dgkd expects at least one ancestor expert");
      plan = whole_set_plan(train.size());
      break;
    case Method::Ceskd: {
      if (ranked == nullptr) {
        throw ConfigError("ceskd requires a ranked dataset; run the score command first");
      }
      if (ranked->order.size() != train.size()) {
        throw ConfigError("ceskd: curriculum covers a different dataset size");
      }
      plan = bucketize(*ranked, train.labels, pool.size(), cfg.class_balanced);
      break;
    }
  }
  Model student = init_weights(student_spec, substream(cfg.seed, "init-student"));
  Metrics metrics = run_training(student, pool.experts, method, plan, cfg, train, test, log);
  return {std::move(student), std::move(metrics)};
}

std::vector<PathStepResult> run_path(const std::vector<ModelSpec>& path, Method method,
                                     const RankedDataset* ranked, const Dataset& train,
                                     const Dataset& test, const RunConfig& cfg, RunLog* log,
                                     const Model* pretrained_teacher) {
  if (path.empty()) throw ConfigError("run_path: empty path");
  for (std::size_t i = 1; i < path.size(); ++i) {
    if (path[i].depth_tag >= path[i - 1].depth_tag) {
      throw ConfigError("run_path: depth tags must strictly decrease along the path");
    }
  }
  std::vector<PathStepResult> results;
  // stage 0: the teacher
  {
    PathStepResult r;
    RunConfig step_cfg = cfg;
    step_cfg.seed = substream(cfg.seed, "path-step", 0);
    if (pretrained_teacher != nullptr) {
      if (pretrained_teacher->spec.depth_tag != path[0].depth_tag) {
        throw ConfigError("run_path: pretrained teacher depth_tag does not match path");
      }
      r.model = *pretrained_teacher;
    } else {
      auto [teacher, metrics] = train_scratch(path[0], train, test, step_cfg, log);
      r.model = std::move(teacher);
      r.metrics = std::move(metrics);
    }
    r.method_used = Method::NoKD;
    results.push_back(std::move(r));
  }
  for (std::size_t k = 1; k < path.size(); ++k) {
    RunConfig step_cfg = cfg;
    step_cfg.seed = substream(cfg.seed, "path-step", k);
    PathStepResult r;
    if (method == Method::NoKD) {
      auto [m, metrics] = train_scratch(path[k], train, test, step_cfg, log);
      r.model = std::move(m);
      r.metrics = std::move(metrics);
      r.method_used = Method::NoKD;
    } else {
      // the first distillation step is shared: plain blkd from the teacher
      Method step_method = (k == 1) ? Method::Blkd : method;
      ExpertPool pool;
      switch (step_method) {
        case Method::Blkd:
          pool.experts = {&results[0].model};
          break;
        case Method::Takd:
          pool.experts = {&results[k - 1].model};
          break;
        case Method::Dgkd:
        case Method::Ceskd:
          for (std::size_t a = 0; a < k; ++a) pool.experts.push_back(&results[a].model);
          // ladder ascending by capacity: ancestors were produced descending
          std::reverse(pool.experts.begin(), pool.experts.end());
          break;
        default:
          break;
      }
      auto [m, metrics] =
          distill_step(path[k], pool, step_method, ranked, train, test, step_cfg, log);
      r.model = std::move(m);
      r.metrics = std::move(metrics);
      r.method_used = step_method;
      r.pool_size = pool.size();
    }
    results.push_back(std::move(r));
  }
  return results;
}

}  // namespace ceskd
