#include "ceskd/curriculum.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

#include "ceskd/error.hpp"
#include "ceskd/losses.hpp"

namespace ceskd {

const char* selection_kind_name(SelectionKind kind) {
  switch (kind) {
    case SelectionKind::Baseline: return "baseline";
    case SelectionKind::Anti: return "anti";
    case SelectionKind::Random: return "random";
  }
  return "?";
}

SelectionKind selection_kind_from(const std::string& name) {
  if (name == "baseline") return SelectionKind::Baseline;
  if (name == "anti") return SelectionKind::Anti;
  if (name == "random") return SelectionKind::Random;
  throw ParseError("unknown selection policy: " + name);
}

std::vector<ScoredSample> score_dataset(const Model& reference, const Dataset& data) {
  data.validate();
  const std::size_t k = reference.num_classes();
  if (k != static_cast<std::size_t>(data.num_classes)) {
    throw ConfigError("score_dataset: reference model class count does not match dataset");
  }
  std::vector<ScoredSample> scored(data.size());
  constexpr std::size_t kChunk = 256;
  for (std::size_t start = 0; start < data.size(); start += kChunk) {
    const std::size_t end = std::min(start + kChunk, data.size());
    std::vector<std::size_t> idx(end - start);
    std::iota(idx.begin(), idx.end(), start);
    ForwardTrace<float> trace;
    const Tensor logits = forward(reference, data.gather(idx), trace);
    const Tensor probs = tempered_softmax(logits, 1.0);
    for (std::size_t i = 0; i < idx.size(); ++i) {
      const int y = data.labels[idx[i]];
      const double p = std::max(static_cast<double>(probs.at2(i, static_cast<std::size_t>(y))),
                                kLogClamp);
      scored[idx[i]] = {idx[i], y, -std::log(p)};
    }
  }
  return scored;
}

RankedDataset rank(const std::vector<ScoredSample>& scored) {
  for (const ScoredSample& s : scored) {
    if (!std::isfinite(s.score)) throw DataError("rank: non-finite difficulty score");
  }
  std::vector<std::size_t> perm(scored.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::stable_sort(perm.begin(), perm.end(), [&](std::size_t a, std::size_t b) {
    return scored[a].score < scored[b].score;
  });
  RankedDataset ranked;
  ranked.order.reserve(scored.size());
  ranked.scores.reserve(scored.size());
  for (std::size_t p : perm) {
    ranked.order.push_back(scored[p].sample_index);
    ranked.scores.push_back(scored[p].score);
  }
  return ranked;
}

namespace {

// split n items into L contiguous runs, first (n mod L) runs one longer
std::vector<std::size_t> run_sizes(std::size_t n, std::size_t L) {
  std::vector<std::size_t> sizes(L, n / L);
  for (std::size_t i = 0; i < n % L; ++i) ++sizes[i];
  return sizes;
}

}  // namespace

BucketPlan bucketize(const RankedDataset& ranked, const std::vector<int>& labels, std::size_t L,
                     bool class_balanced) {
  const std::size_t n = ranked.order.size();
  if (L < 1) throw ConfigError("bucketize: L must be >= 1");
  if (L > n) throw ConfigError("bucketize: L exceeds dataset size");
  BucketPlan plan;
  plan.L = L;
  plan.class_balanced = class_balanced;
  plan.buckets.assign(L, {});
  if (!class_balanced) {
    const auto sizes = run_sizes(n, L);
    std::size_t pos = 0;
    for (std::size_t b = 0; b < L; ++b) {
      plan.buckets[b].assign(ranked.order.begin() + static_cast<long>(pos),
                             ranked.order.begin() + static_cast<long>(pos + sizes[b]));
      pos += sizes[b];
    }
    return plan;
  }
  // rank position per sample, to keep bucket contents in difficulty order
  std::vector<std::size_t> rank_pos(n);
  int max_label = 0;
  for (std::size_t p = 0; p < n; ++p) {
    const std::size_t s = ranked.order[p];
    if (s >= labels.size()) throw ConfigError("bucketize: ranked index outside label array");
    rank_pos[s] = p;
    max_label = std::max(max_label, labels[s]);
  }
  for (int c = 0; c <= max_label; ++c) {
    std::vector<std::size_t> members;
    for (std::size_t p = 0; p < n; ++p) {
      if (labels[ranked.order[p]] == c) members.push_back(ranked.order[p]);
    }
    if (members.empty()) continue;
    const auto sizes = run_sizes(members.size(), L);
    std::size_t pos = 0;
    for (std::size_t b = 0; b < L; ++b) {
      for (std::size_t j = 0; j < sizes[b]; ++j) plan.buckets[b].push_back(members[pos++]);
    }
  }
  for (auto& bucket : plan.buckets) {
    std::sort(bucket.begin(), bucket.end(),
              [&](std::size_t a, std::size_t b) { return rank_pos[a] < rank_pos[b]; });
  }
  return plan;
}

std::vector<std::size_t> assign_experts(const BucketPlan& plan, std::size_t pool_size,
                                        const SelectionPolicy& policy, int epoch) {
  if (pool_size != plan.L) {
    throw ConfigError("assign_experts: expert pool size " + std::to_string(pool_size) +
                      " does not match bucket count " + std::to_string(plan.L));
  }
  std::vector<std::size_t> assignment(plan.L);
  std::iota(assignment.begin(), assignment.end(), 0);
  switch (policy.kind) {
    case SelectionKind::Baseline:
      break;
    case SelectionKind::Anti:
      std::reverse(assignment.begin(), assignment.end());
      break;
    case SelectionKind::Random: {
      Rng rng(substream(policy.seed, "policy", static_cast<std::uint64_t>(epoch)));
      rng.shuffle(assignment);
      break;
    }
  }
  return assignment;
}

std::vector<MiniBatch> epoch_batches(const BucketPlan& plan, std::size_t batch_size,
                                     std::uint64_t seed, int epoch) {
  if (batch_size < 1) throw ConfigError("epoch_batches: batch_size must be >= 1");
  std::vector<MiniBatch> out;
  for (std::size_t b = 0; b < plan.L; ++b) {
    std::vector<std::size_t> indices = plan.buckets[b];
    std::sort(indices.begin(), indices.end());
    Rng rng(substream(seed, "shuffle", (static_cast<std::uint64_t>(epoch) << 20) + b));
    rng.shuffle(indices);
    for (std::size_t pos = 0; pos < indices.size(); pos += batch_size) {
      MiniBatch mb;
      mb.bucket = b;
      const std::size_t end = std::min(pos + batch_size, indices.size());
      mb.indices.assign(indices.begin() + static_cast<long>(pos),
                        indices.begin() + static_cast<long>(end));
      out.push_back(std::move(mb));
    }
  }
  return out;
}

RankedDataset CurriculumFile::ranked() const {
  RankedDataset r;
  r.order.reserve(rows.size());
  r.scores.reserve(rows.size());
  for (const ScoredSample& s : rows) {
    r.order.push_back(s.sample_index);
    r.scores.push_back(s.score);
  }
  return r;
}

CurriculumFile make_curriculum_file(const RankedDataset& ranked, const std::vector<int>& labels,
                                    const BucketPlan& plan, const SelectionPolicy& policy,
                                    std::uint64_t seed, const std::string& scorer_id) {
  CurriculumFile file;
  file.L = plan.L;
  file.policy = selection_kind_name(policy.kind);
  file.seed = seed;
  file.scorer_id = scorer_id;
  file.class_balanced = plan.class_balanced;
  std::vector<std::size_t> bucket_of_sample(labels.size(), 0);
  for (std::size_t b = 0; b < plan.L; ++b) {
    for (std::size_t s : plan.buckets[b]) bucket_of_sample[s] = b + 1;
  }
  for (std::size_t p = 0; p < ranked.order.size(); ++p) {
    const std::size_t s = ranked.order[p];
    file.rows.push_back({s, labels[s], ranked.scores[p]});
    file.bucket_of_row.push_back(bucket_of_sample[s]);
  }
  return file;
}

void save_curriculum(const CurriculumFile& file, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write curriculum file: " + path);
  out << "# ceskd-curriculum v1\n";
  out << "# L=" << file.L << " policy=" << file.policy << " seed=" << file.seed
      << " scorer=" << (file.scorer_id.empty() ? "none" : file.scorer_id)
      << " class_balanced=" << (file.class_balanced ? 1 : 0) << "\n";
  out << "# sample_index class_label score bucket\n";
  char buf[64];
  for (std::size_t i = 0; i < file.rows.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g", file.rows[i].score);
    out << file.rows[i].sample_index << ' ' << file.rows[i].class_label << ' ' << buf << ' '
        << file.bucket_of_row[i] << "\n";
  }
  if (!out) throw ParseError("write failed: " + path);
}

CurriculumFile load_curriculum(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open curriculum file: " + path);
  std::string line;
  if (!std::getline(in, line) || line != "# ceskd-curriculum v1") {
    throw ParseError(path + ": missing curriculum header (expected '# ceskd-curriculum v1')");
  }
  if (!std::getline(in, line)) throw ParseError(path + ": missing metadata line");
  CurriculumFile file;
  {
    unsigned long long L = 0, seed = 0;
    int balanced = 0;
    char policy[32] = {0}, scorer[64] = {0};
    if (std::sscanf(line.c_str(), "# L=%llu policy=%31s seed=%llu scorer=%63s class_balanced=%d",
                    &L, policy, &seed, scorer, &balanced) != 5) {
      throw ParseError(path + ": malformed metadata line: " + line);
    }
    file.L = L;
    file.policy = policy;
    file.seed = seed;
    file.scorer_id = scorer;
    file.class_balanced = balanced != 0;
    selection_kind_from(file.policy);  // validates
  }
  std::size_t lineno = 2;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream row(line);
    ScoredSample s;
    std::size_t bucket = 0;
    if (!(row >> s.sample_index >> s.class_label >> s.score >> bucket) || bucket < 1 ||
        bucket > file.L) {
      throw ParseError(path + ": malformed row at line " + std::to_string(lineno));
    }
    file.rows.push_back(s);
    file.bucket_of_row.push_back(bucket);
  }
  if (file.rows.empty()) throw ParseError(path + ": no data rows");
  for (std::size_t i = 1; i < file.rows.size(); ++i) {
    if (file.rows[i].score < file.rows[i - 1].score) {
      throw ParseError(path + ": scores not ascending at line " + std::to_string(i + 4));
    }
  }
  return file;
}

}  // namespace ceskd
