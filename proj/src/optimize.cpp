#include "finbench/optimize.hpp"

#include <algorithm>

namespace finbench::optimize {

const char* to_string(CacheMode m) {
  switch (m) {
    case CacheMode::None: return "none";
    case CacheMode::Section: return "section";
    case CacheMode::Field: return "field";
    case CacheMode::Hybrid: return "hybrid";
  }
  return "?";
}

std::optional<CacheMode> cache_mode_from_string(std::string_view s) {
  if (s == "none") return CacheMode::None;
  if (s == "section") return CacheMode::Section;
  if (s == "field") return CacheMode::Field;
  if (s == "hybrid") return CacheMode::Hybrid;
  return std::nullopt;
}

std::optional<std::vector<backend::EmittedRecord>> SemanticCache::lookup(
    const std::string& scope, const std::string& key_text) {
  const auto key = backend::embed(key_text);
  std::lock_guard<std::mutex> lock(mu_);
  double best = -1.0;
  auto best_it = entries_.end();
  for (auto it = entries_.begin(); it != entries_.end(); ++it) {
    if (it->scope != scope) continue;
    const double c = backend::cosine(key, it->embedding);
    if (c > best) {
      best = c;
      best_it = it;
    }
  }
  if (best_it != entries_.end() && best >= cfg_.cosine_threshold) {
    ++stats_.hits;
    entries_.splice(entries_.begin(), entries_, best_it);  // LRU touch
    return best_it->payload;
  }
  ++stats_.misses;
  return std::nullopt;
}

void SemanticCache::insert(const std::string& scope, const std::string& key_text,
                           std::vector<backend::EmittedRecord> payload) {
  Entry e{scope, backend::embed(key_text), std::move(payload)};
  std::lock_guard<std::mutex> lock(mu_);
  entries_.push_front(std::move(e));
  while (entries_.size() > cfg_.capacity) entries_.pop_back();
}

CacheStats SemanticCache::stats() const {
  std::lock_guard<std::mutex> lock(mu_);
  return stats_;
}

const char* to_string(RouterPreset p) {
  switch (p) {
    case RouterPreset::Single: return "single";
    case RouterPreset::TwoTier: return "two_tier";
    case RouterPreset::ThreeTier: return "three_tier";
  }
  return "?";
}

std::optional<RouterPreset> router_preset_from_string(std::string_view s) {
  if (s == "single") return RouterPreset::Single;
  if (s == "two_tier") return RouterPreset::TwoTier;
  if (s == "three_tier") return RouterPreset::ThreeTier;
  return std::nullopt;
}

const backend::ModelProfile& route(const schema::FieldSpec& field, const RouterConfig& router) {
  using schema::Difficulty;
  switch (router.preset) {
    case RouterPreset::Single:
      return backend::profile_by_name(router.single_model);
    case RouterPreset::TwoTier:
      return field.difficulty == Difficulty::Complex
                 ? backend::profile_by_name(router.strong_model)
                 : backend::profile_by_name(router.cheap_model);
    case RouterPreset::ThreeTier:
      switch (field.difficulty) {
        case Difficulty::Simple: return backend::profile_by_name(router.cheap_model);
        case Difficulty::Medium: return backend::profile_by_name(router.mid_model);
        case Difficulty::Complex: return backend::profile_by_name(router.strong_model);
      }
  }
  return backend::profile_by_name(router.single_model);
}

const char* to_string(RetryKind k) {
  switch (k) {
    case RetryKind::None: return "none";
    case RetryKind::FixedOnce: return "fixed_once";
    case RetryKind::ConfidenceGated: return "confidence_gated";
    case RetryKind::Escalation: return "escalation";
    case RetryKind::Adaptive: return "adaptive";
  }
  return "?";
}

std::optional<RetryKind> retry_kind_from_string(std::string_view s) {
  if (s == "none") return RetryKind::None;
  if (s == "fixed_once") return RetryKind::FixedOnce;
  if (s == "confidence_gated") return RetryKind::ConfidenceGated;
  if (s == "escalation") return RetryKind::Escalation;
  if (s == "adaptive") return RetryKind::Adaptive;
  return std::nullopt;
}

void AdaptiveState::observe(const std::string& field_id, bool error) {
  std::lock_guard<std::mutex> lock(mu_);
  double& v = ewma_[field_id];  // starts at 0
  v = decay_ * v + (1.0 - decay_) * (error ? 1.0 : 0.0);
}

double AdaptiveState::ewma(const std::string& field_id) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = ewma_.find(field_id);
  return it == ewma_.end() ? 0.0 : it->second;
}

RetryDecision decide_retry(const ExtractionRecord& record, const RetryPolicy& policy,
                           const backend::ModelProfile& assigned,
                           const std::vector<const backend::ModelProfile*>& ladder,
                           int attempts_so_far, int architecture_cap,
                           const AdaptiveState* adaptive) {
  RetryDecision d;
  if (attempts_so_far >= architecture_cap) return d;
  const double conf = record.confidence;
  switch (policy.kind) {
    case RetryKind::None:
      return d;
    case RetryKind::FixedOnce:
      if (attempts_so_far < 1 && conf < policy.base_threshold) d.action = RetryAction::RetrySame;
      return d;
    case RetryKind::ConfidenceGated:
      if (attempts_so_far < 1 && conf < policy.base_threshold - policy.gated_margin)
        d.action = RetryAction::RetrySame;
      return d;
    case RetryKind::Escalation: {
      if (conf >= policy.base_threshold) return d;
      // next-stronger profile on the ladder; at the top degrade to retry_same
      const backend::ModelProfile* next = nullptr;
      for (size_t i = 0; i < ladder.size(); ++i) {
        if (ladder[i]->name == assigned.name && i + 1 < ladder.size()) {
          next = ladder[i + 1];
          break;
        }
      }
      if (next) {
        d.action = RetryAction::RetryEscalated;
        d.escalate_to = next;
      } else {
        d.action = RetryAction::RetrySame;
      }
      return d;
    }
    case RetryKind::Adaptive: {
      const double ewma = adaptive ? adaptive->ewma(record.field_id) : 0.0;
      double threshold = policy.base_threshold + policy.adaptive_slope * ewma;
      threshold = std::min(std::max(threshold, policy.base_threshold), policy.adaptive_cap);
      if (conf < threshold) d.action = RetryAction::RetrySame;
      return d;
    }
  }
  return d;
}

HierarchicalOptimizedPreset hierarchical_optimized_preset() {
  HierarchicalOptimizedPreset p;
  p.cache.mode = CacheMode::Hybrid;
  p.cache.cosine_threshold = 0.95;
  p.router.preset = RouterPreset::TwoTier;
  p.retry.kind = RetryKind::Adaptive;
  p.retry.base_threshold = 0.85;
  return p;
}

}  // namespace finbench::optimize
