#include <doctest.h>

#include <cmath>

#include "ceskd/distill.hpp"

using namespace ceskd;

namespace {

ModelSpec feature_spec(int depth_tag, std::size_t in_dim, std::size_t hidden, std::size_t k) {
  ModelSpec spec;
  spec.input_shape = {in_dim};
  spec.layers = {LayerSpec::dense(in_dim, hidden), LayerSpec::relu(), LayerSpec::dense(hidden, k)};
  spec.depth_tag = depth_tag;
  return spec;
}

// identity logits: the sample features are read off as class scores
Model identity_model(std::size_t k) {
  ModelSpec spec;
  spec.input_shape = {k};
  spec.layers = {LayerSpec::dense(k, k)};
  spec.depth_tag = 1;
  Model m = init_weights(spec, 0);
  for (std::size_t r = 0; r < k; ++r) {
    for (std::size_t c = 0; c < k; ++c) m.params[0][0].at2(r, c) = r == c ? 1.0f : 0.0f;
    m.params[0][1].data[r] = 0.0f;
  }
  return m;
}

RunConfig quick_config(int epochs, std::uint64_t seed = 1) {
  RunConfig cfg;
  cfg.epochs = epochs;
  cfg.batch_size = 16;
  cfg.lr = {0.05, {}, 0.1};
  cfg.seed = seed;
  return cfg;
}

RankedDataset score_with_fresh_model(const ModelSpec& spec, const Dataset& train) {
  const Model reference = init_weights(spec, 777);
  return rank(score_dataset(reference, train));
}

std::vector<double> losses_of(const RunLog& log) {
  std::vector<double> out;
  out.reserve(log.size());
  for (const RunLogEntry& e : log) out.push_back(e.loss);
  return out;
}

}  // namespace

TEST_CASE("evaluate counts top-1 and top-5 with index tie-breaking") {
  const Model m = identity_model(6);
  Dataset test;
  test.num_classes = 6;
  test.split = "test";
  test.samples = Tensor({3, 6});
  test.labels = {0, 2, 5};
  // sample 0: correct class wins outright
  test.samples.at2(0, 0) = 5.0f;
  // sample 1: class 4 beats class 2 -> top-1 miss, top-5 hit
  test.samples.at2(1, 4) = 3.0f;
  test.samples.at2(1, 2) = 1.0f;
  // sample 2: all-zero logits tie; classes 0..4 precede label 5 -> not even top-5
  const auto [top1, top5] = evaluate(m, test);
  CHECK(top1 == doctest::Approx(100.0 / 3.0));
  CHECK(top5 == doctest::Approx(200.0 / 3.0));
}

TEST_CASE("scratch training separates the easy synthetic task") {
  auto [train, test] = gen_synthetic(3, 8, 240, 0.0, 5);
  auto [model, metrics] = train_scratch(feature_spec(4, 8, 16, 3), train, test, quick_config(12));
  CHECK_FALSE(metrics.diverged);
  REQUIRE(metrics.epochs.size() == 12);
  CHECK(metrics.final_top1 >= 95.0);
  CHECK(metrics.final_top5 == 100.0);
  // train loss fell substantially
  CHECK(metrics.epochs.back().train_loss < 0.5 * metrics.epochs.front().train_loss);
}

TEST_CASE("zero epochs yields an untouched student and empty metrics") {
  auto [train, test] = gen_synthetic(3, 8, 60, 0.0, 5);
  auto [model, metrics] = train_scratch(feature_spec(4, 8, 8, 3), train, test, quick_config(0));
  CHECK(metrics.epochs.empty());
  CHECK(metrics.final_top1 == 0.0);
  CHECK(param_checksum(model) ==
        param_checksum(init_weights(feature_spec(4, 8, 8, 3), substream(1ull, "init-student"))));
}

TEST_CASE("identical configs reproduce identical models and metrics") {
  auto [train, test] = gen_synthetic(4, 8, 120, 0.4, 9);
  const ModelSpec spec = feature_spec(4, 8, 12, 4);
  RunLog log_a, log_b;
  auto [ma, met_a] = train_scratch(spec, train, test, quick_config(4, 33), &log_a);
  auto [mb, met_b] = train_scratch(spec, train, test, quick_config(4, 33), &log_b);
  CHECK(param_checksum(ma) == param_checksum(mb));
  REQUIRE(met_a.epochs.size() == met_b.epochs.size());
  for (std::size_t i = 0; i < met_a.epochs.size(); ++i) {
    CHECK(met_a.epochs[i].train_loss == met_b.epochs[i].train_loss);
    CHECK(met_a.epochs[i].top1 == met_b.epochs[i].top1);
  }
  CHECK(losses_of(log_a) == losses_of(log_b));

  auto [mc, met_c] = train_scratch(spec, train, test, quick_config(4, 34));
  CHECK(param_checksum(ma) != param_checksum(mc));
}

TEST_CASE("single-bucket curriculum distillation collapses to plain distillation") {
  auto [train, test] = gen_synthetic(3, 8, 90, 0.5, 3);
  const ModelSpec teacher_spec = feature_spec(8, 8, 24, 3);
  const ModelSpec student_spec = feature_spec(2, 8, 6, 3);
  auto [teacher, tm] = train_scratch(teacher_spec, train, test, quick_config(4, 7));

  ExpertPool pool;
  pool.experts = {&teacher};
  const RankedDataset ranked = score_with_fresh_model(teacher_spec, train);

  RunLog log_blkd, log_ceskd;
  RunConfig cfg = quick_config(3, 21);
  auto [mb, met_b] =
      distill_step(student_spec, pool, Method::Blkd, nullptr, train, test, cfg, &log_blkd);
  auto [mc, met_c] =
      distill_step(student_spec, pool, Method::Ceskd, &ranked, train, test, cfg, &log_ceskd);

  CHECK(param_checksum(mb) == param_checksum(mc));
  CHECK(losses_of(log_blkd) == losses_of(log_ceskd));
}

TEST_CASE("ensemble distillation from one ancestor equals plain distillation") {
  auto [train, test] = gen_synthetic(3, 8, 90, 0.5, 3);
  auto [teacher, tm] =
      train_scratch(feature_spec(8, 8, 24, 3), train, test, quick_config(4, 7));
  ExpertPool pool;
  pool.experts = {&teacher};
  RunLog log_blkd, log_dgkd;
  RunConfig cfg = quick_config(3, 22);
  const ModelSpec student_spec = feature_spec(2, 8, 6, 3);
  auto [mb, met_b] =
      distill_step(student_spec, pool, Method::Blkd, nullptr, train, test, cfg, &log_blkd);
  auto [md, met_d] =
      distill_step(student_spec, pool, Method::Dgkd, nullptr, train, test, cfg, &log_dgkd);
  CHECK(param_checksum(mb) == param_checksum(md));
  CHECK(losses_of(log_blkd) == losses_of(log_dgkd));
}

TEST_CASE("experts are frozen during distillation") {
  auto [train, test] = gen_synthetic(3, 8, 90, 0.5, 13);
  auto [big, bm] = train_scratch(feature_spec(8, 8, 24, 3), train, test, quick_config(3, 7));
  auto [mid, mm] = train_scratch(feature_spec(4, 8, 12, 3), train, test, quick_config(3, 8));
  const std::uint64_t sum_big = param_checksum(big);
  const std::uint64_t sum_mid = param_checksum(mid);

  ExpertPool pool;
  pool.experts = {&mid, &big};
  const RankedDataset ranked = score_with_fresh_model(feature_spec(8, 8, 24, 3), train);
  distill_step(feature_spec(2, 8, 6, 3), pool, Method::Ceskd, &ranked, train, test,
               quick_config(3, 30));
  CHECK(param_checksum(big) == sum_big);
  CHECK(param_checksum(mid) == sum_mid);
}

TEST_CASE("every curriculum batch trains against its assigned expert") {
  auto [train, test] = gen_synthetic(3, 8, 120, 0.6, 17);
  auto [big, bm] = train_scratch(feature_spec(8, 8, 24, 3), train, test, quick_config(3, 7));
  auto [mid, mm] = train_scratch(feature_spec(4, 8, 12, 3), train, test, quick_config(3, 8));
  ExpertPool pool;
  pool.experts = {&mid, &big};
  const RankedDataset ranked = score_with_fresh_model(feature_spec(8, 8, 24, 3), train);

  RunConfig cfg = quick_config(3, 41);
  cfg.policy.kind = SelectionKind::Random;
  RunLog log;
  distill_step(feature_spec(2, 8, 6, 3), pool, Method::Ceskd, &ranked, train, test, cfg, &log);
  REQUIRE_FALSE(log.empty());

  // rebuild the per-epoch assignment the run must have used
  const BucketPlan plan = bucketize(ranked, train.labels, 2, cfg.class_balanced);
  SelectionPolicy policy = cfg.policy;
  policy.seed = substream(cfg.seed, "policy");
  bool saw_second_bucket = false;
  for (const RunLogEntry& e : log) {
    const auto assignment = assign_experts(plan, 2, policy, e.epoch);
    CHECK(e.expert_depth == pool.experts[assignment[e.bucket]]->depth_tag());
    if (e.bucket == 1) saw_second_bucket = true;
  }
  CHECK(saw_second_bucket);
}

TEST_CASE("distill_step validates its expert pool") {
  auto [train, test] = gen_synthetic(3, 8, 60, 0.5, 3);
  auto [big, bm] = train_scratch(feature_spec(8, 8, 24, 3), train, test, quick_config(2, 7));
  auto [mid, mm] = train_scratch(feature_spec(4, 8, 12, 3), train, test, quick_config(2, 8));
  const ModelSpec student = feature_spec(2, 8, 6, 3);

  ExpertPool two;
  two.experts = {&mid, &big};
  CHECK_THROWS_AS(distill_step(student, two, Method::Blkd, nullptr, train, test, quick_config(1)),
                  ConfigError);

  ExpertPool unordered;
  unordered.experts = {&big, &mid};
  CHECK_THROWS_AS(
      distill_step(student, unordered, Method::Dgkd, nullptr, train, test, quick_config(1)),
      ConfigError);

  // curriculum missing
  try {
    distill_step(student, two, Method::Ceskd, nullptr, train, test, quick_config(1));
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("score") != std::string::npos);
  }

  ExpertPool one;
  one.experts = {&big};
  CHECK_THROWS_AS(distill_step(student, one, Method::NoKD, nullptr, train, test, quick_config(1)),
                  ConfigError);
}

TEST_CASE("run_path grows the expert pool step by step") {
  auto [train, test] = gen_synthetic(3, 8, 90, 0.5, 19);
  const std::vector<ModelSpec> path = {feature_spec(8, 8, 24, 3), feature_spec(4, 8, 12, 3),
                                       feature_spec(2, 8, 6, 3)};
  const RankedDataset ranked = score_with_fresh_model(path[0], train);
  const auto results = run_path(path, Method::Ceskd, &ranked, train, test, quick_config(2, 51));
  REQUIRE(results.size() == 3);
  CHECK(results[0].method_used == Method::NoKD);
  CHECK(results[1].method_used == Method::Blkd);  // shared first step
  CHECK(results[1].pool_size == 1);
  CHECK(results[2].method_used == Method::Ceskd);
  CHECK(results[2].pool_size == 2);
  CHECK(results[0].model.depth_tag() == 8);
  CHECK(results[2].model.depth_tag() == 2);
}

TEST_CASE("the first distillation step is shared across comparative methods") {
  auto [train, test] = gen_synthetic(3, 8, 90, 0.5, 23);
  const std::vector<ModelSpec> path = {feature_spec(8, 8, 24, 3), feature_spec(4, 8, 12, 3),
                                       feature_spec(2, 8, 6, 3)};
  const RankedDataset ranked = score_with_fresh_model(path[0], train);
  const RunConfig cfg = quick_config(2, 61);
  const auto takd = run_path(path, Method::Takd, nullptr, train, test, cfg);
  const auto ceskd = run_path(path, Method::Ceskd, &ranked, train, test, cfg);
  const auto dgkd = run_path(path, Method::Dgkd, nullptr, train, test, cfg);
  CHECK(param_checksum(takd[1].model) == param_checksum(ceskd[1].model));
  CHECK(param_checksum(takd[1].model) == param_checksum(dgkd[1].model));
  // later steps diverge between methods
  CHECK(param_checksum(takd[2].model) != param_checksum(dgkd[2].model));
}

TEST_CASE("run_path enforces strictly decreasing capacity") {
  auto [train, test] = gen_synthetic(3, 8, 60, 0.5, 3);
  const std::vector<ModelSpec> bad = {feature_spec(4, 8, 12, 3), feature_spec(4, 8, 12, 3)};
  CHECK_THROWS_AS(run_path(bad, Method::Takd, nullptr, train, test, quick_config(1)), ConfigError);
  CHECK_THROWS_AS(run_path({}, Method::Takd, nullptr, train, test, quick_config(1)), ConfigError);
}

TEST_CASE("run_path accepts a pretrained teacher of the right capacity") {
  auto [train, test] = gen_synthetic(3, 8, 90, 0.5, 29);
  const std::vector<ModelSpec> path = {feature_spec(8, 8, 24, 3), feature_spec(2, 8, 6, 3)};
  auto [teacher, tm] = train_scratch(path[0], train, test, quick_config(3, 71));
  const auto results =
      run_path(path, Method::Takd, nullptr, train, test, quick_config(2, 72), nullptr, &teacher);
  CHECK(param_checksum(results[0].model) == param_checksum(teacher));

  const Model wrong = init_weights(feature_spec(5, 8, 24, 3), 1);
  CHECK_THROWS_AS(
      run_path(path, Method::Takd, nullptr, train, test, quick_config(2, 72), nullptr, &wrong),
      ConfigError);
}

TEST_CASE("method names round-trip") {
  CHECK(method_from("ceskd") == Method::Ceskd);
  CHECK(method_from("noKD") == Method::NoKD);
  CHECK(method_from("nokd") == Method::NoKD);
  CHECK(method_name(Method::Dgkd) == std::string("dgkd"));
  CHECK_THROWS_AS(method_from("bogus"), ParseError);
}

TEST_CASE("epochs_to_threshold finds the first qualifying epoch") {
  Metrics m;
  for (int e = 0; e < 3; ++e) {
    EpochMetrics em;
    em.epoch = e;
    em.top1 = 50.0 + 10.0 * e;  // 50, 60, 70
    m.epochs.push_back(em);
  }
  CHECK(m.epochs_to_threshold(65.0) == 2);
  CHECK(m.epochs_to_threshold(50.0) == 0);
  CHECK_FALSE(m.epochs_to_threshold(90.0).has_value());
}
