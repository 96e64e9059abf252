#include "finbench/backend.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "finbench/rng.hpp"
#include "finbench/text.hpp"

namespace finbench::backend {

using schema::Difficulty;
using schema::FieldKind;
using schema::FieldSpec;
using schema::GoldValue;
using schema::UnitScale;

const std::vector<ModelProfile>& default_profiles() {
  static const std::vector<ModelProfile> profiles = {
      {"GPT-4o", 128000, 2.50, 10.00},
      {"Claude 3.5 Sonnet", 200000, 3.00, 15.00},
      {"Gemini 1.5 Pro", 1000000, 1.25, 5.00},
      {"Llama 3 70B", 128000, 0.60, 0.80},
      {"Mixtral 8x22B", 64000, 0.50, 0.70},
  };
  return profiles;
}

const ModelProfile& profile_by_name(std::string_view name) {
  for (const auto& p : default_profiles())
    if (p.name == name) return p;
  throw std::runtime_error("unknown model profile: " + std::string(name));
}

int64_t price_e8(const ModelProfile& p, int64_t input_tokens, int64_t output_tokens) {
  if (input_tokens < 0 || output_tokens < 0)
    throw std::invalid_argument("price: negative token count");
  // price is USD per 1M tokens with two decimals; in cents-per-1M units a
  // token costs an integer number of 1e-8 USD
  const int64_t in_cents = std::llround(p.input_price * 100.0);
  const int64_t out_cents = std::llround(p.output_price * 100.0);
  return input_tokens * in_cents + output_tokens * out_cents;
}

double price_usd(const ModelProfile& p, int64_t input_tokens, int64_t output_tokens) {
  return static_cast<double>(price_e8(p, input_tokens, output_tokens)) / 1e8;
}

void CostLedger::append(LedgerEntry e) {
  total_cost_e8_ += e.cost_e8;
  total_in_ += e.input_tokens;
  total_out_ += e.output_tokens;
  entries_.push_back(std::move(e));
}

void CostLedger::merge(const CostLedger& other) {
  for (const auto& e : other.entries()) append(e);
}

const char* to_string(AgentRole r) {
  switch (r) {
    case AgentRole::Parser: return "parser";
    case AgentRole::FieldExtractor: return "field_extractor";
    case AgentRole::TableAnalyzer: return "table_analyzer";
    case AgentRole::CrossRefResolver: return "crossref_resolver";
    case AgentRole::ConfidenceScorer: return "confidence_scorer";
    case AgentRole::OutputFormatter: return "output_formatter";
    case AgentRole::Dispatcher: return "dispatcher";
    case AgentRole::MergeReconciler: return "merge_reconciler";
    case AgentRole::SupervisorPlan: return "supervisor_plan";
    case AgentRole::SupervisorVerify: return "supervisor_verify";
    case AgentRole::Verifier: return "verifier";
    case AgentRole::Critique: return "critique";
  }
  return "?";
}

double default_temperature(AgentRole r) {
  switch (r) {
    case AgentRole::SupervisorPlan:
    case AgentRole::SupervisorVerify:
    case AgentRole::Critique:
      return 0.3;
    default:
      return 0.0;
  }
}

double latency_role_weight(AgentRole r) {
  switch (r) {
    case AgentRole::Parser: return 1.2;
    case AgentRole::FieldExtractor: return 1.5;
    case AgentRole::TableAnalyzer: return 0.8;
    case AgentRole::CrossRefResolver: return 0.8;
    case AgentRole::OutputFormatter: return 0.7;
    case AgentRole::Dispatcher: return 0.9;
    case AgentRole::MergeReconciler: return 0.6;
    case AgentRole::SupervisorPlan: return 0.9;
    case AgentRole::SupervisorVerify: return 0.7;
    case AgentRole::Verifier: return 0.8;
    case AgentRole::Critique: return 0.5;
    case AgentRole::ConfidenceScorer: return 0.5;
  }
  return 1.0;
}

MockBehavior MockBehavior::calibrated_default() {
  MockBehavior b;
  b.error_rates = {
      {"Claude 3.5 Sonnet", {0.045, 0.112, 0.215}},
      {"GPT-4o", {0.050, 0.125, 0.240}},
      {"Gemini 1.5 Pro", {0.061, 0.151, 0.290}},
      {"Llama 3 70B", {0.095, 0.235, 0.452}},
      {"Mixtral 8x22B", {0.048, 0.135, 0.480}},
  };
  b.speed_factors = {
      {"GPT-4o", 0.8837}, {"Claude 3.5 Sonnet", 1.0}, {"Gemini 1.5 Pro", 0.7519},
      {"Llama 3 70B", 0.5788}, {"Mixtral 8x22B", 0.5116},
  };
  return b;
}

double MockBehavior::error_rate(const std::string& model, Difficulty d) const {
  auto it = error_rates.find(model);
  if (it == error_rates.end())
    throw std::runtime_error("mock behavior has no error rates for model '" + model + "'");
  return it->second.rate(d);
}

// ---------------------------------------------------------------------------
// Token accounting

namespace {

double role_section_weight(AgentRole role, bool raw_input) {
  switch (role) {
    case AgentRole::Parser: return 1.0;
    // chained extraction reads the parser's normalized state; fan-out
    // branches and correction retries re-read raw sections
    case AgentRole::FieldExtractor: return raw_input ? 1.0 : 0.50;
    case AgentRole::TableAnalyzer: return 0.35;
    case AgentRole::CrossRefResolver: return 0.05;
    case AgentRole::Dispatcher: return 1.0;
    case AgentRole::SupervisorPlan: return 1.0;
    case AgentRole::Verifier: return 0.30;
    default: return 0.0;  // record-driven roles
  }
}

}  // namespace

int64_t role_input_tokens(AgentRole role, bool raw_input,
                          const std::vector<int64_t>& section_tokens, int64_t record_count,
                          int64_t critique_count) {
  const double w = role_section_weight(role, raw_input);
  int64_t in = 40;
  if (w > 0) {
    for (int64_t t : section_tokens) in += static_cast<int64_t>(std::ceil(w * t)) + 30;
  }
  in += 6 * record_count;
  in += 25 * critique_count;
  return in;
}

int64_t role_output_tokens(AgentRole role, int64_t records_emitted) {
  switch (role) {
    case AgentRole::Parser: return 90;
    case AgentRole::Dispatcher: return 30;
    case AgentRole::SupervisorPlan: return 60;
    case AgentRole::SupervisorVerify: return 40 + 4 * records_emitted;
    case AgentRole::MergeReconciler: return 20 + 6 * records_emitted;
    case AgentRole::Critique: return 30 + 18 * records_emitted;
    case AgentRole::OutputFormatter: return 20 + 10 * records_emitted;
    case AgentRole::TableAnalyzer:
    case AgentRole::CrossRefResolver: return 20 + 8 * records_emitted;
    case AgentRole::Verifier: return 60 + 6 * records_emitted;
    default: return 20 + 14 * records_emitted;
  }
}

// ---------------------------------------------------------------------------
// Embedding

std::array<float, kEmbedDim> embed(const std::string& text) {
  std::array<float, kEmbedDim> v{};
  bool any = false;
  size_t i = 0;
  const std::string low = lower(text);
  while (i < low.size()) {
    while (i < low.size() && (low[i] == ' ' || low[i] == '\n' || low[i] == '\t' || low[i] == '\r'))
      ++i;
    size_t j = i;
    while (j < low.size() && !(low[j] == ' ' || low[j] == '\n' || low[j] == '\t' || low[j] == '\r'))
      ++j;
    if (j > i) {
      const uint64_t h = fnv1a(std::string_view(low).substr(i, j - i));
      const int idx = static_cast<int>(h & (kEmbedDim - 1));
      const float sign = ((h >> 8) & 1) ? 1.0f : -1.0f;
      v[idx] += sign;
      any = true;
    }
    i = j;
  }
  if (!any) {
    v[0] = 1.0f;
    return v;
  }
  double norm = 0;
  for (float x : v) norm += static_cast<double>(x) * x;
  norm = std::sqrt(norm);
  if (norm == 0) {
    v[0] = 1.0f;
    return v;
  }
  for (float& x : v) x = static_cast<float>(x / norm);
  return v;
}

double cosine(const std::array<float, kEmbedDim>& a, const std::array<float, kEmbedDim>& b) {
  double dot = 0;
  for (int i = 0; i < kEmbedDim; ++i) dot += static_cast<double>(a[i]) * b[i];
  return dot;
}

// ---------------------------------------------------------------------------
// Latency fit: per-call lognormal such that the 5-call sequential chain
// reproduces the reference pipeline percentiles.

namespace {

std::pair<double, double> fit_call_latency(double pipeline_p50, double pipeline_p95) {
  const AgentRole chain[5] = {AgentRole::Parser, AgentRole::FieldExtractor,
                              AgentRole::TableAnalyzer, AgentRole::CrossRefResolver,
                              AgentRole::OutputFormatter};
  const int kSamples = 32768;
  std::vector<double> z(static_cast<size_t>(kSamples) * 5);
  Rng rng(0x5eedBA5Eu);
  for (auto& x : z) x = rng.normal();
  auto quantiles = [&](double s, double& q50, double& q95) {
    std::vector<double> totals(kSamples);
    for (int i = 0; i < kSamples; ++i) {
      double t = 0;
      for (int r = 0; r < 5; ++r)
        t += latency_role_weight(chain[r]) * std::exp(s * z[static_cast<size_t>(i) * 5 + r]);
      totals[i] = t;
    }
    std::sort(totals.begin(), totals.end());
    q50 = totals[kSamples / 2];
    q95 = totals[static_cast<int>(std::ceil(0.95 * kSamples)) - 1];
  };
  const double target_ratio = pipeline_p95 / pipeline_p50;
  double lo = 0.02, hi = 2.0;
  double q50 = 1, q95 = 1;
  for (int it = 0; it < 48; ++it) {
    const double mid = 0.5 * (lo + hi);
    quantiles(mid, q50, q95);
    if (q95 / q50 < target_ratio) lo = mid;
    else hi = mid;
  }
  const double sigma = 0.5 * (lo + hi);
  quantiles(sigma, q50, q95);
  const double mu = std::log(pipeline_p50 / q50);
  return {mu, sigma};
}

}  // namespace

// ---------------------------------------------------------------------------
// MockBackend

MockBackend::MockBackend(const std::vector<corpus::Document>& docs,
                         const std::vector<corpus::GoldRecord>& gold, MockBehavior behavior,
                         uint64_t master_seed)
    : behavior_(std::move(behavior)), seed_(master_seed) {
  if (docs.size() != gold.size())
    throw std::runtime_error("MockBackend: corpus and gold are misaligned");
  for (size_t i = 0; i < docs.size(); ++i) {
    if (docs[i].id != gold[i].doc_id)
      throw std::runtime_error("MockBackend: gold record order mismatch at " + docs[i].id);
    DocEntry e{&docs[i], &gold[i], corpus::build_grounding_index(docs[i], gold[i])};
    docs_.emplace(docs[i].id, std::move(e));
  }
  auto [mu, sigma] = fit_call_latency(behavior_.seq_pipeline_p50, behavior_.seq_pipeline_p95);
  latency_mu_ = mu;
  latency_sigma_ = sigma;
}

const MockBackend::DocEntry& MockBackend::entry(const std::string& id) const {
  auto it = docs_.find(id);
  if (it == docs_.end()) throw std::runtime_error("mock backend: unknown document '" + id + "'");
  return it->second;
}

const corpus::Document* MockBackend::document(const std::string& id) const {
  return entry(id).doc;
}
const corpus::GoldRecord* MockBackend::gold(const std::string& id) const {
  return entry(id).gold;
}
const corpus::GroundingIndex* MockBackend::grounding(const std::string& id) const {
  return &entry(id).grounding;
}

double MockBackend::median_latency(AgentRole role, const std::string& model) const {
  auto it = behavior_.speed_factors.find(model);
  const double speed = it == behavior_.speed_factors.end() ? 1.0 : it->second;
  return std::exp(latency_mu_) * latency_role_weight(role) * speed;
}

double MockBackend::draw_latency(AgentRole role, const ModelProfile& profile,
                                 const std::string& doc_id, const CompletionRequest& req) const {
  auto it = behavior_.speed_factors.find(profile.name);
  const double speed = it == behavior_.speed_factors.end() ? 1.0 : it->second;
  std::string key = "latency/";
  key += doc_id;
  key += '/';
  key += to_string(role);
  key += '/';
  key += req.stream_tag;
  key += '/';
  key += std::to_string(req.nonce);
  Rng rng(derive_seed(seed_, key));
  const double mu = latency_mu_ + std::log(latency_role_weight(role)) + std::log(speed);
  return rng.lognormal(mu, latency_sigma_);
}

namespace {

struct NormalizedMix {
  double scale, prior, cross, halluc, absent;
};

NormalizedMix normalize_mix(const MockBehavior& b) {
  double s = b.mix_unit_scale + b.mix_prior_period + b.mix_cross_table + b.mix_hallucination +
             b.mix_absent;
  if (s <= 0) s = 1;
  return {b.mix_unit_scale / s, b.mix_prior_period / s, b.mix_cross_table / s,
          b.mix_hallucination / s, b.mix_absent / s};
}

double round_sig3(double v) {
  if (v == 0) return 0;
  const double mag =
      std::pow(10.0, 2 - static_cast<int>(std::floor(std::log10(std::fabs(v)))));
  return std::round(v * mag) / mag;
}

std::string shift_date(const std::string& iso, Rng& rng) {
  int y = std::atoi(iso.substr(0, 4).c_str());
  int m = std::atoi(iso.substr(5, 2).c_str());
  int d = std::atoi(iso.substr(8, 2).c_str());
  if (rng.bernoulli(0.2)) {
    // invalid calendar date, catchable by the format check
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04d-02-30", y);
    return buf;
  }
  int days = 10 + static_cast<int>(rng.uniform_int(80));
  static const int dim[12] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  while (days-- > 0) {
    int md = dim[m - 1];
    if (m == 2 && ((y % 4 == 0 && y % 100 != 0) || y % 400 == 0)) md = 29;
    if (++d > md) {
      d = 1;
      if (++m > 12) {
        m = 1;
        ++y;
      }
    }
  }
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", y, m, d);
  return buf;
}

GoldValue corrupt_value(const FieldSpec& spec, const GoldValue& gold, const NormalizedMix& mix,
                        Rng& rng, bool& has_evidence) {
  has_evidence = true;
  if (spec.kind == FieldKind::Numeric) {
    const double u = rng.uniform();
    if (u < mix.scale) {
      GoldValue v = gold;
      // misread unit scale: one step along raw <-> thousands <-> millions
      switch (gold.unit_scale) {
        case UnitScale::Raw: v.unit_scale = UnitScale::Thousands; break;
        case UnitScale::Millions: v.unit_scale = UnitScale::Thousands; break;
        case UnitScale::Thousands:
          v.unit_scale = rng.bernoulli(0.5) ? UnitScale::Raw : UnitScale::Millions;
          break;
      }
      return v;
    }
    if (u < mix.scale + mix.prior + mix.cross) {
      const bool prior = u < mix.scale + mix.prior;
      const double f = prior ? rng.uniform(0.78, 0.92) : rng.uniform(0.30, 0.70);
      double nv = round_sig3(gold.number * f);
      if (std::fabs(nv - gold.number) <= 0.025 * std::fabs(gold.number))
        nv = round_sig3(gold.number * 0.75);
      GoldValue v = gold;
      v.number = nv;
      return v;
    }
    if (u < mix.scale + mix.prior + mix.cross + mix.halluc) {
      double f = std::exp(rng.uniform(-1.1, 1.1));
      if (f > 0.97 && f < 1.03) f *= 1.5;
      GoldValue v = gold;
      v.number = round_sig3(gold.number * f);
      if (v.number == gold.number) v.number = round_sig3(gold.number * 1.31);
      return v;
    }
    has_evidence = false;
    return GoldValue::make_absent(spec.kind);
  }
  // non-numeric kinds: the scale/prior/cross mass collapses into a
  // kind-appropriate wrong value
  const double u = rng.uniform();
  if (u < mix.absent) {
    has_evidence = false;
    return GoldValue::make_absent(spec.kind);
  }
  switch (spec.kind) {
    case FieldKind::Integer: {
      int64_t delta = 1 + static_cast<int64_t>(rng.uniform_int(4));
      if (rng.bernoulli(0.5) && gold.integer - delta >= 1) delta = -delta;
      return GoldValue::make_integer(gold.integer + delta);
    }
    case FieldKind::Boolean:
      return GoldValue::make_boolean(!gold.flag);
    case FieldKind::Date:
      return GoldValue::make_date(shift_date(gold.text, rng));
    case FieldKind::String:
      return GoldValue::make_string("unverified disclosure " + std::to_string(rng.uniform_int(100000)));
    default:
      break;
  }
  return GoldValue::make_absent(spec.kind);
}

}  // namespace

std::optional<EmittedRecord> MockBackend::extract_field(const DocEntry& de,
                                                        const ModelProfile& profile,
                                                        const FieldRequest& fr,
                                                        const CompletionRequest& req) const {
  const FieldSpec* spec = schema::find_field(fr.field_id);
  if (!spec) throw std::runtime_error("mock: unknown field '" + fr.field_id + "'");
  EmittedRecord rec;
  rec.field_id = fr.field_id;
  rec.pass = fr.pass;

  std::string key = "mock/";
  key += de.doc->id;
  key += '/';
  key += fr.field_id;
  key += "/p";
  key += std::to_string(fr.pass);
  key += '/';
  key += req.stream_tag;
  Rng rng(derive_seed(seed_, key));

  const double kappa = behavior_.confidence_concentration;
  double e = behavior_.error_rate(profile.name, spec->difficulty) *
             std::pow(behavior_.iteration_gain, fr.critiques);
  e = std::min(std::max(e, 0.0), 1.0);
  const double ec = std::min(std::max(e, 1e-7), 1.0 - 1e-7);

  auto it = de.gold->values.find(fr.field_id);
  const GoldValue* gv = it == de.gold->values.end() ? nullptr : &it->second;

  // first grounded occurrence within the grounding scope
  const std::vector<int>& gscope =
      req.grounding_scope.empty() ? req.section_scope : req.grounding_scope;
  const corpus::Occurrence* occ = nullptr;
  if (gv && !gv->absent) {
    auto git = de.grounding.find(fr.field_id);
    if (git != de.grounding.end()) {
      for (const auto& o : git->second) {
        if (gscope.empty() || std::find(gscope.begin(), gscope.end(), o.section_index) !=
                                  gscope.end()) {
          occ = &o;
          break;
        }
      }
    }
  }
  if (req.grounded_only) {
    // split sub-call: only the sub-call holding the first occurrence emits
    if (!gv || gv->absent || !occ) return std::nullopt;
    if (std::find(req.section_scope.begin(), req.section_scope.end(), occ->section_index) ==
        req.section_scope.end())
      return std::nullopt;
  }

  if (!gv || gv->absent) {
    // field genuinely absent in the document
    const double conf = rng.beta(kappa * (1.0 - ec), kappa * ec);
    const bool correct = rng.bernoulli(conf);
    rec.confidence = conf;
    if (correct) {
      rec.value = GoldValue::make_absent(spec->kind);
    } else {
      // hallucinated value with no supporting evidence
      GoldValue fake;
      switch (spec->kind) {
        case FieldKind::Numeric: fake = GoldValue::make_numeric(round_sig3(rng.uniform(1e3, 9e6))); break;
        case FieldKind::Integer: fake = GoldValue::make_integer(1 + static_cast<int64_t>(rng.uniform_int(20))); break;
        case FieldKind::Boolean: fake = GoldValue::make_boolean(rng.bernoulli(0.5)); break;
        case FieldKind::Date: fake = GoldValue::make_date("2024-01-15"); break;
        case FieldKind::String: fake = GoldValue::make_string("speculative value"); break;
      }
      rec.value = fake;
    }
    return rec;
  }

  if (!occ) {
    // present in the document but not visible to this call: abstain at
    // low confidence so supervision has a signal to act on
    rec.confidence = rng.beta(kappa * 0.25, kappa * 0.75);
    rec.value = GoldValue::make_absent(spec->kind);
    return rec;
  }

  const double conf = rng.beta(kappa * (1.0 - ec), kappa * ec);
  const bool correct = rng.bernoulli(conf);
  rec.confidence = conf;
  if (correct) {
    rec.value = *gv;
    rec.has_evidence = true;
  } else {
    bool ev = true;
    rec.value = corrupt_value(*spec, *gv, normalize_mix(behavior_), rng, ev);
    rec.has_evidence = ev && !rec.value.absent;
  }
  if (rec.has_evidence) {
    rec.evidence_section = occ->section_index;
    rec.evidence_offset = occ->offset;
    rec.evidence_length = occ->length;
  }
  return rec;
}

CompletionResult MockBackend::complete(const ModelProfile& profile,
                                       const CompletionRequest& req) {
  const DocEntry& de = entry(req.doc_id);
  if (req.prompt_tokens > profile.context_window)
    throw ContextOverflowError(profile.context_window, req.prompt_tokens);

  CompletionResult out;
  out.input_tokens = req.prompt_tokens > 0 ? req.prompt_tokens : 40;
  switch (req.role) {
    case AgentRole::FieldExtractor:
    case AgentRole::TableAnalyzer:
    case AgentRole::CrossRefResolver: {
      for (const auto& fr : req.fields) {
        auto rec = extract_field(de, profile, fr, req);
        if (rec) out.records.push_back(std::move(*rec));
      }
      if (req.opportunistic) {
        const int pass = req.fields.empty() ? 0 : req.fields.front().pass;
        for (const auto& spec : schema::catalog()) {
          bool requested = false;
          for (const auto& fr : req.fields)
            if (fr.field_id == spec.field_id) {
              requested = true;
              break;
            }
          if (requested) continue;
          auto it = de.gold->values.find(spec.field_id);
          if (it == de.gold->values.end() || it->second.absent) continue;
          auto git = de.grounding.find(spec.field_id);
          if (git == de.grounding.end()) continue;
          bool grounded = false;
          for (const auto& o : git->second) {
            if (req.section_scope.empty() ||
                std::find(req.section_scope.begin(), req.section_scope.end(),
                          o.section_index) != req.section_scope.end()) {
              grounded = true;
              break;
            }
          }
          if (!grounded) continue;
          FieldRequest fr;
          fr.field_id = spec.field_id;
          fr.pass = pass;
          auto rec = extract_field(de, profile, fr, req);
          if (rec) out.records.push_back(std::move(*rec));
        }
      }
      break;
    }
    case AgentRole::Dispatcher: {
      for (size_t i = 0; i < de.doc->sections.size(); ++i) {
        if (!req.section_scope.empty() &&
            std::find(req.section_scope.begin(), req.section_scope.end(), static_cast<int>(i)) ==
                req.section_scope.end())
          continue;
        out.section_tags[static_cast<int>(i)] = de.doc->sections[i].domain_tags;
      }
      break;
    }
    default:
      break;  // plan/verify/merge/format/critique: accounting only
  }
  int64_t emitted = static_cast<int64_t>(out.records.size());
  if (req.role == AgentRole::Dispatcher) emitted = static_cast<int64_t>(out.section_tags.size());
  if (emitted == 0) emitted = req.record_count;
  out.output_tokens = role_output_tokens(req.role, emitted);
  out.latency = draw_latency(req.role, profile, req.doc_id, req);
  return out;
}

}  // namespace finbench::backend
