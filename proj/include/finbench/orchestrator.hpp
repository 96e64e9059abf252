#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "finbench/backend.hpp"
#include "finbench/corpus.hpp"
#include "finbench/optimize.hpp"
#include "finbench/record.hpp"
#include "finbench/verify.hpp"

namespace finbench::orch {

enum class Architecture { Sequential, Parallel, Hierarchical, Reflexive };
const char* to_string(Architecture a);
std::optional<Architecture> architecture_from_string(std::string_view s);

struct PipelineConfig {
  Architecture architecture = Architecture::Sequential;
  std::string model = "Claude 3.5 Sonnet";
  double supervisor_conf_threshold = 0.85;
  int max_supervisor_reassign = 2;
  int max_reflexive_iters = 3;
  int64_t context_budget = 128000;
  std::optional<double> deadline;  // seconds, reflexive truncation
  bool formatter_call = false;     // explicit formatter call in par/hier/refl
  verify::VerifyConfig verify_config;
};

struct TraceEntry {
  std::string node;
  double start = 0.0;
  double end = 0.0;
};

struct RunResult {
  std::string doc_id;
  std::map<std::string, ExtractionRecord> extractions;  // all 25 catalog fields
  backend::CostLedger ledger;
  double wall_latency = 0.0;
  int iterations_used = 1;  // extraction passes performed
  bool truncated = false;
  std::vector<TraceEntry> branch_trace;
  std::vector<verify::CheckOutcome> unresolved_checks;
  std::string error;  // nonempty when the document failed

  bool failed() const { return !error.empty(); }
};

// State threaded through run_agent for single-role execution.
struct AgentState {
  const corpus::Document* doc = nullptr;
  std::vector<int> scope;  // visible sections; empty = all
  std::vector<std::string> normalized_sections;
  std::map<std::string, ExtractionRecord> records;
  std::vector<verify::CritiqueMessage> critiques;
  backend::CostLedger ledger;
  double clock = 0.0;
};

// Exactly one backend call per invocation.
void run_agent(backend::AgentRole role, AgentState& state, backend::Backend& be,
               const PipelineConfig& cfg, const std::vector<std::string>& fields = {});

RunResult exec_sequential(const corpus::Document& doc, const PipelineConfig& cfg,
                          backend::Backend& be, const optimize::OptimizeContext& opt = {});
RunResult exec_parallel(const corpus::Document& doc, const PipelineConfig& cfg,
                        backend::Backend& be, const optimize::OptimizeContext& opt = {});
RunResult exec_hierarchical(const corpus::Document& doc, const PipelineConfig& cfg,
                            backend::Backend& be, const optimize::OptimizeContext& opt = {});
RunResult exec_reflexive(const corpus::Document& doc, const PipelineConfig& cfg,
                         backend::Backend& be, const optimize::OptimizeContext& opt = {});

RunResult run_document(const corpus::Document& doc, const PipelineConfig& cfg,
                       backend::Backend& be, const optimize::OptimizeContext& opt = {});

// Deterministic regardless of `parallelism`: per-document results depend only
// on (backend seed, doc); output is ordered by doc id. Document-level errors
// are recorded in their RunResult, the run continues. Adaptive retry forces
// parallelism to 1 (cross-document EWMA state is order-dependent).
std::vector<RunResult> run_benchmark(const std::vector<corpus::Document>& docs,
                                     const PipelineConfig& cfg, backend::Backend& be,
                                     const optimize::OptimizeContext& opt = {},
                                     int parallelism = 1);

// Fields the sequential chain routes through the cross-reference resolver.
const std::vector<std::string>& crossref_fields();

}  // namespace finbench::orch
