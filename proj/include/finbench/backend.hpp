#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "finbench/corpus.hpp"
#include "finbench/schema.hpp"

namespace finbench::backend {

struct ModelProfile {
  std::string name;
  int64_t context_window = 0;    // tokens
  double input_price = 0.0;      // USD per 1M tokens
  double output_price = 0.0;
};

// The five shipped profiles carry the benchmark's pricing table exactly.
const std::vector<ModelProfile>& default_profiles();
const ModelProfile& profile_by_name(std::string_view name);

// Exact decimal pricing in 1e-8 USD units (prices have <= 2 decimals per 1M
// tokens, so cost = tokens x cents-per-1M lands on an integer grid).
int64_t price_e8(const ModelProfile& p, int64_t input_tokens, int64_t output_tokens);
double price_usd(const ModelProfile& p, int64_t input_tokens, int64_t output_tokens);

struct LedgerEntry {
  int64_t call_id = 0;
  std::string role;
  std::string model;
  int64_t input_tokens = 0;
  int64_t output_tokens = 0;
  int64_t cost_e8 = 0;
  double latency = 0.0;
};

// Append-only cost accounting; totals are kept in lockstep with entries.
class CostLedger {
 public:
  void append(LedgerEntry e);
  void merge(const CostLedger& other);
  const std::vector<LedgerEntry>& entries() const { return entries_; }
  int64_t total_cost_e8() const { return total_cost_e8_; }
  double total_cost_usd() const { return static_cast<double>(total_cost_e8_) / 1e8; }
  int64_t total_input_tokens() const { return total_in_; }
  int64_t total_output_tokens() const { return total_out_; }
  int64_t total_tokens() const { return total_in_ + total_out_; }
  int64_t calls() const { return static_cast<int64_t>(entries_.size()); }

 private:
  std::vector<LedgerEntry> entries_;
  int64_t total_cost_e8_ = 0;
  int64_t total_in_ = 0;
  int64_t total_out_ = 0;
};

enum class AgentRole {
  Parser,
  FieldExtractor,
  TableAnalyzer,
  CrossRefResolver,
  ConfidenceScorer,
  OutputFormatter,
  Dispatcher,
  MergeReconciler,
  SupervisorPlan,
  SupervisorVerify,
  Verifier,
  Critique,
};
const char* to_string(AgentRole r);
// 0.0 for extraction roles, 0.3 for supervisor/critique roles.
double default_temperature(AgentRole r);

struct FieldRequest {
  std::string field_id;
  int pass = 0;        // 0 = first extraction, k = k-th re-extraction
  int critiques = 0;   // critique messages attached to this retry
};

struct CompletionRequest {
  AgentRole role = AgentRole::FieldExtractor;
  std::string doc_id;
  std::vector<int> section_scope;  // visible original-section indices; empty = all
  std::vector<FieldRequest> fields;
  // distinguishes independent callers of the same (doc, field, pass),
  // e.g. "branch/FinancialMetrics" vs "extract"
  std::string stream_tag = "extract";
  int64_t prompt_tokens = 0;
  int64_t record_count = 0;  // prior records carried in context (verify/merge/format)
  double temperature = 0.0;
  bool raw_input = false;     // extraction reads unparsed sections
  // also emit records for unrequested fields grounded in the visible scope
  // (parallel branches extract what they see)
  bool opportunistic = false;
  int64_t nonce = 0;  // per-document call sequence, keeps latency draws distinct
  // cache sub-calls: emit a field only when its first grounded occurrence
  // within grounding_scope lies inside section_scope, so a batched call and
  // its per-section split produce identical record sets
  bool grounded_only = false;
  std::vector<int> grounding_scope;  // empty: same as section_scope
};

struct EmittedRecord {
  std::string field_id;
  schema::GoldValue value;
  double confidence = 0.0;
  int evidence_section = -1;
  int64_t evidence_offset = 0;
  int64_t evidence_length = 0;
  bool has_evidence = false;
  int pass = 0;
};

struct CompletionResult {
  std::vector<EmittedRecord> records;
  std::map<int, std::set<schema::Domain>> section_tags;  // dispatcher output
  int64_t input_tokens = 0;
  int64_t output_tokens = 0;
  double latency = 0.0;
};

struct ContextOverflowError : std::runtime_error {
  int64_t budget;
  int64_t requested;
  ContextOverflowError(int64_t b, int64_t r)
      : std::runtime_error("context window overflow: " + std::to_string(r) +
                           " tokens > budget " + std::to_string(b)),
        budget(b),
        requested(r) {}
};

struct DifficultyRates {
  double simple = 0.0;
  double medium = 0.0;
  double complex_ = 0.0;
  double rate(schema::Difficulty d) const {
    switch (d) {
      case schema::Difficulty::Simple: return simple;
      case schema::Difficulty::Medium: return medium;
      case schema::Difficulty::Complex: return complex_;
    }
    return 0.0;
  }
};

// Calibrated stochastic behavior of the mock model pool.
struct MockBehavior {
  std::map<std::string, DifficultyRates> error_rates;  // by model name
  // confidence sharpness: confidence ~ Beta(k*(1-e), k*e), correctness ~
  // Bernoulli(confidence) -- calibrated by construction
  double confidence_concentration = 16.0;
  // a critique-informed retry multiplies the error rate by gain^#critiques
  double iteration_gain = 0.40;
  // failure-mode mix (normalized internally)
  double mix_unit_scale = 0.18;
  double mix_prior_period = 0.22;
  double mix_cross_table = 0.18;
  double mix_hallucination = 0.22;
  double mix_absent = 0.20;
  // latency model: per-model speed factors relative to the reference model,
  // per-call lognormal fit so the 5-call sequential chain reproduces the
  // reference pipeline p50/p95
  std::map<std::string, double> speed_factors;
  double seq_pipeline_p50 = 38.7;
  double seq_pipeline_p95 = 62.4;

  static MockBehavior calibrated_default();
  double error_rate(const std::string& model, schema::Difficulty d) const;
};

class Backend {
 public:
  virtual ~Backend() = default;
  virtual CompletionResult complete(const ModelProfile& profile,
                                    const CompletionRequest& req) = 0;
  virtual bool is_mock() const { return false; }
  // median latency of one call for (role, model); used for deadline projections
  virtual double median_latency(AgentRole, const std::string&) const { return 1.0; }
};

// Deterministic-stochastic stand-in for the model pool. Reentrant: every
// draw comes from a stream derived from (master seed, doc, field, pass,
// stream tag), so concurrent documents never contend.
class MockBackend : public Backend {
 public:
  MockBackend(const std::vector<corpus::Document>& docs,
              const std::vector<corpus::GoldRecord>& gold, MockBehavior behavior,
              uint64_t master_seed);

  CompletionResult complete(const ModelProfile& profile, const CompletionRequest& req) override;
  bool is_mock() const override { return true; }

  const MockBehavior& behavior() const { return behavior_; }
  uint64_t master_seed() const { return seed_; }
  const corpus::Document* document(const std::string& id) const;
  const corpus::GoldRecord* gold(const std::string& id) const;
  const corpus::GroundingIndex* grounding(const std::string& id) const;

  double median_latency(AgentRole role, const std::string& model) const override;

 private:
  struct DocEntry {
    const corpus::Document* doc;
    const corpus::GoldRecord* gold;
    corpus::GroundingIndex grounding;
  };
  const DocEntry& entry(const std::string& id) const;
  double draw_latency(AgentRole role, const ModelProfile& profile, const std::string& doc_id,
                      const CompletionRequest& req) const;
  std::optional<EmittedRecord> extract_field(const DocEntry& de, const ModelProfile& profile,
                                             const FieldRequest& fr,
                                             const CompletionRequest& req) const;

  std::map<std::string, DocEntry> docs_;
  MockBehavior behavior_;
  uint64_t seed_;
  double latency_mu_ = 0.0;     // fitted per-call lognormal location
  double latency_sigma_ = 0.0;  // fitted per-call lognormal shape
};

// role weight of the per-call latency median (sums to 5 over the sequential chain)
double latency_role_weight(AgentRole r);

// Deterministic embedding: signed feature hashing over lowercased words,
// L2-normalized, dimension 256. Empty input maps to the first basis vector.
constexpr int kEmbedDim = 256;
std::array<float, kEmbedDim> embed(const std::string& text);
double cosine(const std::array<float, kEmbedDim>& a, const std::array<float, kEmbedDim>& b);

// Token-accounting model for mock calls: per-section input weights by role
// plus small per-section wrappers, so splitting a call per section is
// cost-neutral (the semantic cache depends on this). `raw_input` marks
// extraction calls that read unparsed sections (parallel branches, workers).
int64_t role_input_tokens(AgentRole role, bool raw_input,
                          const std::vector<int64_t>& section_tokens, int64_t record_count,
                          int64_t critique_count);
int64_t role_output_tokens(AgentRole role, int64_t records_emitted);

}  // namespace finbench::backend
