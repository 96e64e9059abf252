#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "finbench/backend.hpp"
#include "finbench/corpus.hpp"
#include "finbench/optimize.hpp"
#include "finbench/orchestrator.hpp"
#include "finbench/simulate.hpp"

namespace finbench::cfg {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class BackendKind { Mock, Http };

struct HttpConfig {
  std::string endpoint;
  std::string api_key_env = "FINBENCH_API_KEY";
};

struct SimConfig {
  std::vector<double> loads = {1000, 5000, 10000, 25000, 50000, 100000};
  std::vector<orch::Architecture> architectures = {
      orch::Architecture::Sequential, orch::Architecture::Parallel,
      orch::Architecture::Hierarchical, orch::Architecture::Reflexive};
  int cluster_slots = 48;
  double duration_hours = 8.0;
  double warmup_hours = 1.0;
  std::optional<double> deadline;
  sim::CalibOptions calib;
  std::vector<sim::ArchAnchors> anchors = sim::default_anchors();
  std::vector<sim::LatencyRow> latency_rows = sim::default_latency_rows();
};

struct RunConfig {
  int schema_version = 1;
  uint64_t seed = 0;
  bool seed_set = false;

  // exactly one corpus source
  std::optional<std::string> corpus_path;
  std::optional<corpus::SynthSpec> synth;

  // pipeline sweep: cartesian product of architectures x models
  std::vector<orch::Architecture> architectures = {orch::Architecture::Sequential};
  std::vector<std::string> models = {"Claude 3.5 Sonnet"};
  orch::PipelineConfig pipeline;  // thresholds shared across the sweep

  BackendKind backend_kind = BackendKind::Mock;
  backend::MockBehavior mock = backend::MockBehavior::calibrated_default();
  HttpConfig http;

  optimize::CacheConfig cache;
  std::optional<optimize::RouterConfig> router;
  optimize::RetryPolicy retry;

  int bootstrap_n = 1000;
  int workers = 1;
  std::string output_dir = "out";

  SimConfig sim;
};

// Parses the JSON run configuration; throws ConfigError with the offending
// key on malformed input. The schema_version field is mandatory.
RunConfig parse_config_file(const std::string& path);
RunConfig parse_config_text(const std::string& text);

}  // namespace finbench::cfg
