#include "ceskd/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "ceskd/error.hpp"

namespace ceskd {

SeedStats seed_stats(const std::vector<double>& values) {
  SeedStats s;
  s.values = values;
  if (values.empty()) return s;
  for (double v : values) s.mean += v;
  s.mean /= static_cast<double>(values.size());
  if (values.size() >= 2) {
    double acc = 0.0;
    for (double v : values) acc += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(acc / static_cast<double>(values.size() - 1));
  }
  return s;
}

std::string format_mean_std(double mean, double stddev) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f±%.3f", mean, stddev);
  return buf;
}

std::string ReportRow::render() const {
  std::ostringstream out;
  out << experiment << "  method=" << method;
  if (!policy.empty()) out << "  policy=" << policy;
  out << "  seeds=" << seed_count << "  acc=" << format_mean_std(accuracy.mean, accuracy.stddev);
  if (mean_epochs_to_threshold >= 0.0) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.1f", mean_epochs_to_threshold);
    out << "  epochs_to_threshold=" << buf;
  }
  return out.str();
}

void save_metrics(const Metrics& metrics, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write metrics file: " + path);
  out << "epoch,train_loss,top1,top5\n";
  char buf[128];
  for (const EpochMetrics& e : metrics.epochs) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g", e.epoch, e.train_loss, e.top1, e.top5);
    out << buf << "\n";
  }
  std::snprintf(buf, sizeof(buf), "final,%.17g,%.17g,%d", metrics.final_top1, metrics.final_top5,
                metrics.diverged ? 1 : 0);
  out << buf << "\n";
  if (!out) throw ParseError("write failed: " + path);
}

Metrics load_metrics(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open metrics file: " + path);
  std::string line;
  if (!std::getline(in, line) || line != "epoch,train_loss,top1,top5") {
    throw ParseError(path + ": bad metrics header");
  }
  Metrics m;
  bool saw_final = false;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line.rfind("final,", 0) == 0) {
      int diverged = 0;
      if (std::sscanf(line.c_str(), "final,%lf,%lf,%d", &m.final_top1, &m.final_top5, &diverged) != 3) {
        throw ParseError(path + ": malformed summary at line " + std::to_string(lineno));
      }
      m.diverged = diverged != 0;
      saw_final = true;
      continue;
    }
    EpochMetrics e;
    if (std::sscanf(line.c_str(), "%d,%lf,%lf,%lf", &e.epoch, &e.train_loss, &e.top1, &e.top5) != 4) {
      throw ParseError(path + ": malformed row at line " + std::to_string(lineno));
    }
    m.epochs.push_back(e);
  }
  if (!saw_final) throw ParseError(path + ": missing summary record");
  return m;
}

void save_run_log(const RunLog& log, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write run log: " + path);
  out << "epoch step bucket expert_depth loss\n";
  char buf[128];
  for (const RunLogEntry& e : log) {
    std::snprintf(buf, sizeof(buf), "%d %d %zu %d %.17g", e.epoch, e.step, e.bucket,
                  e.expert_depth, e.loss);
    out << buf << "\n";
  }
  if (!out) throw ParseError("write failed: " + path);
}

}  // namespace ceskd
