#pragma once

#include <string>
#include <vector>

#include "finbench/metrics.hpp"
#include "finbench/orchestrator.hpp"
#include "finbench/simulate.hpp"

namespace finbench::report {

// One benchmark run (architecture x model) with its aggregate metrics.
struct RunSummary {
  std::string architecture;
  std::string model;
  metrics::MetricReport metrics;
};

// Line-delimited results file: a version header, a meta line carrying the
// run summary, then one JSON record per document (sorted by id).
std::string render_results(const RunSummary& summary,
                           const std::vector<orch::RunResult>& results);
void write_results_file(const std::string& path, const RunSummary& summary,
                        const std::vector<orch::RunResult>& results);

struct ParsedResults {
  RunSummary summary;
  // per-document rows needed to recompute aggregate views
  struct DocRow {
    std::string doc_id;
    double cost = 0.0;
    double latency = 0.0;
    int iterations = 0;
    bool truncated = false;
    std::string error;
  };
  std::vector<DocRow> docs;
};

ParsedResults parse_results_file(const std::string& path);

// Benchmark-table file mirroring the primary results layout: one row per
// (architecture, model) with F1, doc accuracy, latency and cost columns.
std::string render_report_table(const std::vector<RunSummary>& rows);
void write_report_table(const std::string& path, const std::vector<RunSummary>& rows);

// (cost, f1, label) triples plus frontier membership.
std::string render_pareto(const std::vector<metrics::ParetoPoint>& points);
void write_pareto(const std::string& path, const std::vector<metrics::ParetoPoint>& points);

// simulator sweep curves: load, architecture, effective F1, p50, p95,
// truncation rate
std::string render_sim_curve(const std::vector<sim::SweepRow>& rows);
void write_sim_curve(const std::string& path, const std::vector<sim::SweepRow>& rows);

// Key-finding style ratio lines comparing hierarchical vs reflexive rows of
// the same model, printed at one-decimal percent precision.
std::vector<std::string> key_finding_ratios(const std::vector<RunSummary>& rows);

std::string format_pct_1dp(double fraction);  // 0.98515 -> "98.5%"

}  // namespace finbench::report
