#pragma once

#include <list>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "finbench/backend.hpp"
#include "finbench/record.hpp"

namespace finbench::optimize {

enum class CacheMode { None, Section, Field, Hybrid };
const char* to_string(CacheMode m);
std::optional<CacheMode> cache_mode_from_string(std::string_view s);

struct CacheConfig {
  CacheMode mode = CacheMode::None;
  double cosine_threshold = 0.95;
  size_t capacity = 4096;
};

struct CacheStats {
  int64_t hits = 0;
  int64_t misses = 0;
  double hit_rate() const {
    const int64_t n = hits + misses;
    return n ? static_cast<double>(hits) / static_cast<double>(n) : 0.0;
  }
};

// Embedding-similarity cache over agent inputs. Entries are scoped by
// (mode, role, field set), so payloads never cross role boundaries. LRU at
// capacity; lookups and inserts are serialized.
class SemanticCache {
 public:
  explicit SemanticCache(CacheConfig cfg) : cfg_(cfg) {}

  std::optional<std::vector<backend::EmittedRecord>> lookup(const std::string& scope,
                                                            const std::string& key_text);
  void insert(const std::string& scope, const std::string& key_text,
              std::vector<backend::EmittedRecord> payload);
  CacheStats stats() const;
  const CacheConfig& config() const { return cfg_; }

 private:
  struct Entry {
    std::string scope;
    std::array<float, backend::kEmbedDim> embedding;
    std::vector<backend::EmittedRecord> payload;
  };
  CacheConfig cfg_;
  mutable std::mutex mu_;
  std::list<Entry> entries_;  // front = most recently used
  CacheStats stats_;
};

enum class RouterPreset { Single, TwoTier, ThreeTier };
const char* to_string(RouterPreset p);
std::optional<RouterPreset> router_preset_from_string(std::string_view s);

struct RouterConfig {
  RouterPreset preset = RouterPreset::Single;
  std::string single_model = "Claude 3.5 Sonnet";
  std::string cheap_model = "Mixtral 8x22B";
  std::string mid_model = "GPT-4o";
  std::string strong_model = "Claude 3.5 Sonnet";
};

// two_tier: simple+medium -> cheap, complex -> strong;
// three_tier: simple -> cheap, medium -> mid, complex -> strong.
const backend::ModelProfile& route(const schema::FieldSpec& field, const RouterConfig& router);

enum class RetryKind { None, FixedOnce, ConfidenceGated, Escalation, Adaptive };
const char* to_string(RetryKind k);
std::optional<RetryKind> retry_kind_from_string(std::string_view s);

struct RetryPolicy {
  RetryKind kind = RetryKind::None;
  double base_threshold = 0.85;
  double gated_margin = 0.05;   // confidence_gated retries below base - margin
  double adaptive_slope = 0.5;  // threshold = clamp(base + slope*ewma, base, cap)
  double adaptive_cap = 0.95;
  double ewma_decay = 0.9;
};

// Per-field error-rate EWMA for the adaptive policy. Updates are serialized;
// enabling this forces document-level parallelism to 1 so the update order
// is well-defined.
class AdaptiveState {
 public:
  explicit AdaptiveState(double decay = 0.9) : decay_(decay) {}
  void observe(const std::string& field_id, bool error);
  double ewma(const std::string& field_id) const;

 private:
  double decay_;
  mutable std::mutex mu_;
  std::map<std::string, double> ewma_;
};

enum class RetryAction { Accept, RetrySame, RetryEscalated };

struct RetryDecision {
  RetryAction action = RetryAction::Accept;
  const backend::ModelProfile* escalate_to = nullptr;
};

// `attempts_so_far` counts retries already spent on the field;
// `architecture_cap` is the executor's iteration limit.
RetryDecision decide_retry(const ExtractionRecord& record, const RetryPolicy& policy,
                           const backend::ModelProfile& assigned,
                           const std::vector<const backend::ModelProfile*>& ladder,
                           int attempts_so_far, int architecture_cap,
                           const AdaptiveState* adaptive);

// Everything the executors need from this layer, bundled.
struct OptimizeContext {
  SemanticCache* cache = nullptr;
  const RouterConfig* router = nullptr;
  RetryPolicy retry;  // RetryKind::None leaves the architecture default
  AdaptiveState* adaptive = nullptr;
};

struct HierarchicalOptimizedPreset {
  CacheConfig cache;    // hybrid
  RouterConfig router;  // two-tier
  RetryPolicy retry;    // adaptive
};

// The combined configuration: hierarchical architecture with hybrid
// caching, two-tier routing and adaptive retry thresholds.
HierarchicalOptimizedPreset hierarchical_optimized_preset();

}  // namespace finbench::optimize
