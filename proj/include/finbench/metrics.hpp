#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "finbench/backend.hpp"
#include "finbench/corpus.hpp"
#include "finbench/orchestrator.hpp"

namespace finbench::metrics {

struct FieldConfusion {
  int64_t tp = 0;
  int64_t fp = 0;
  int64_t fn = 0;
};

struct MetricOptions {
  schema::MatchRule match_rule;
  // strict-parity experiments may score abstention on absent gold as tp
  bool abstain_on_absent_is_tp = false;
};

struct Scores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Micro-averaged confusion over all (doc, field) pairs. A predicted-and-
// wrong field counts as fp+fn; an abstained gold-present field counts fn;
// absent gold with a non-absent prediction counts fp.
FieldConfusion confusion(const std::vector<orch::RunResult>& results,
                         const std::vector<corpus::GoldRecord>& gold,
                         const MetricOptions& opt = MetricOptions{});
Scores micro_f1(const std::vector<orch::RunResult>& results,
                const std::vector<corpus::GoldRecord>& gold,
                const MetricOptions& opt = MetricOptions{});

// strict = all 25 correct; relaxed = at least 23 correct.
std::pair<double, double> doc_accuracy(const std::vector<orch::RunResult>& results,
                                       const std::vector<corpus::GoldRecord>& gold,
                                       const MetricOptions& opt = MetricOptions{});

// per-document correct-field count (0..25), aligned with `results`
std::vector<int> per_doc_correct(const std::vector<orch::RunResult>& results,
                                 const std::vector<corpus::GoldRecord>& gold,
                                 const MetricOptions& opt = MetricOptions{});

// Nearest-rank percentile: value at index ceil(q/100 * n) of the sorted
// sample (1-based). Errors on an empty sample.
double percentile(std::vector<double> samples, double q);
std::vector<double> latency_percentiles(const std::vector<double>& samples,
                                        const std::vector<double>& qs = {50, 95, 99});

// total output tokens / (total input + total output tokens)
double token_efficiency(const backend::CostLedger& ledger);
double token_efficiency(int64_t input_tokens, int64_t output_tokens);

// Percentile-method bootstrap CI at 95%, n resamples, deterministic per seed.
std::pair<double, double> bootstrap_ci(
    const std::vector<double>& per_doc_values,
    const std::function<double(const std::vector<double>&)>& statistic, int n, uint64_t seed);

struct ParetoPoint {
  double cost = 0.0;
  double f1 = 0.0;
  std::string label;
};

// Non-dominated subset: a point is kept iff no other point has cost <= it
// and f1 >= it with at least one strict. Output sorted by cost; duplicate
// coordinates kept once (first label).
std::vector<ParetoPoint> pareto_frontier(const std::vector<ParetoPoint>& points);

struct MetricReport {
  Scores field_scores;
  double doc_acc_strict = 0.0;
  double doc_acc_relaxed = 0.0;
  double latency_p50 = 0.0;
  double latency_p95 = 0.0;
  double latency_p99 = 0.0;
  double mean_cost_usd = 0.0;
  int64_t mean_input_tokens = 0;
  int64_t mean_output_tokens = 0;
  double token_eff = 0.0;
  std::optional<std::pair<double, double>> f1_ci;
  int64_t documents = 0;
  int64_t failed_documents = 0;
};

MetricReport build_report(const std::vector<orch::RunResult>& results,
                          const std::vector<corpus::GoldRecord>& gold,
                          const MetricOptions& opt = MetricOptions{}, int bootstrap_n = 0,
                          uint64_t bootstrap_seed = 0);

}  // namespace finbench::metrics
