#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "finbench/orchestrator.hpp"

namespace finbench::sim {

// (docs_per_day, F1) rows per architecture, lowest load first.
struct ArchAnchors {
  orch::Architecture arch = orch::Architecture::Sequential;
  std::vector<std::pair<double, double>> f1_by_load;
};

struct LatencyRow {
  orch::Architecture arch = orch::Architecture::Sequential;
  double p50 = 0.0;
  double p95 = 0.0;
};

// Published scaling and latency rows used for default calibration.
const std::vector<ArchAnchors>& default_anchors();
const std::vector<LatencyRow>& default_latency_rows();

struct ArchCalib {
  double mu = 0.0;     // per-call lognormal location
  double sigma = 0.0;  // per-call lognormal shape
  // pipeline latency is divided by the median-document critical-path call
  // count (one optional unit completed)
  int division_calls = 1;
  int mandatory_calls = 1;  // calls every document executes
  int parallel_width = 1;   // fan-out width of the middle stage
  int optional_units = 0;   // deadline-truncatable units (iterations/rounds)
  int calls_per_unit = 0;
  double anchor_f1 = 0.0;      // all units completed
  double iter_floor_f1 = 0.0;  // zero units completed
  double kill_floor_f1 = 0.0;  // document aborted at the deadline
  double default_deadline = 0.0;  // 3 x unloaded p95
};

struct CalibModel {
  std::map<orch::Architecture, ArchCalib> archs;
  const ArchCalib& of(orch::Architecture a) const;
};

struct CalibOptions {
  // F1 of an architecture that completes zero optional units; the reflexive
  // loop without corrections degrades to the sequential anchor
  double reflexive_iter_floor = 0.903;
  double hierarchical_iter_floor = 0.908;
  double deadline_multiple = 3.0;
};

CalibModel calibrate(const std::vector<ArchAnchors>& anchors,
                     const std::vector<LatencyRow>& latency_rows,
                     const CalibOptions& opts = CalibOptions{});

struct SimLoadSpec {
  double docs_per_day = 1000;
  int cluster_slots = 48;  // 8 nodes x 6 slots
  std::optional<double> deadline;  // seconds; default 3 x unloaded p95
  double duration_hours = 8.0;
  double warmup_hours = 1.0;  // arrivals in warmup are processed but not scored
  uint64_t seed = 0;
};

struct SimReport {
  double offered_docs_per_day = 0.0;
  double achieved_docs_per_day = 0.0;  // exits per day over the scored window
  double mean_queue_wait = 0.0;
  double truncation_rate = 0.0;  // lost >= 1 planned unit, or killed
  double effective_f1 = 0.0;
  double latency_p50 = 0.0;
  double latency_p95 = 0.0;
  int64_t arrivals = 0;
  int64_t completed = 0;  // includes killed documents (they exit degraded)
  int64_t killed = 0;
  int64_t in_flight = 0;
  int64_t rejected = 0;
};

// Event-driven FIFO queue over cluster slots; Poisson arrivals; per-call
// lognormal service draws; deadline checks gate optional units and, for
// iterative architectures, abort overdue documents at the next call
// boundary. Deterministic per seed.
SimReport simulate(const SimLoadSpec& spec, orch::Architecture arch, const CalibModel& calib);

struct SweepRow {
  double load = 0.0;
  orch::Architecture arch = orch::Architecture::Sequential;
  SimReport report;
};

std::vector<SweepRow> sweep(const std::vector<double>& loads,
                            const std::vector<orch::Architecture>& archs,
                            const CalibModel& calib, const SimLoadSpec& base);

}  // namespace finbench::sim
