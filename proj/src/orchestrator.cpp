#include "finbench/orchestrator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <set>
#include <thread>

#include "finbench/rng.hpp"
#include "finbench/text.hpp"

namespace finbench::orch {

using backend::AgentRole;
using backend::CompletionRequest;
using backend::CompletionResult;
using backend::EmittedRecord;
using backend::FieldRequest;
using backend::ModelProfile;
using schema::Domain;
using schema::FieldKind;
using schema::GoldValue;

const char* to_string(Architecture a) {
  switch (a) {
    case Architecture::Sequential: return "sequential";
    case Architecture::Parallel: return "parallel";
    case Architecture::Hierarchical: return "hierarchical";
    case Architecture::Reflexive: return "reflexive";
  }
  return "?";
}

std::optional<Architecture> architecture_from_string(std::string_view s) {
  if (s == "sequential") return Architecture::Sequential;
  if (s == "parallel") return Architecture::Parallel;
  if (s == "hierarchical") return Architecture::Hierarchical;
  if (s == "reflexive") return Architecture::Reflexive;
  return std::nullopt;
}

const std::vector<std::string>& crossref_fields() {
  static const std::vector<std::string> fields = {
      "total_revenue",   "net_income",           "total_assets",
      "operating_cash_flow", "capital_expenditures", "eps_basic",
      "board_size",      "independent_directors", "audit_committee_size"};
  return fields;
}

namespace {

std::vector<std::string> all_field_ids() {
  std::vector<std::string> ids;
  for (const auto& f : schema::catalog()) ids.push_back(f.field_id);
  return ids;
}

std::vector<std::string> domain_field_ids(Domain d) {
  std::vector<std::string> ids;
  for (const auto& f : schema::catalog())
    if (f.domain == d) ids.push_back(f.field_id);
  return ids;
}

const std::vector<Domain> kDomains = {Domain::FinancialMetrics, Domain::Governance,
                                      Domain::ExecComp};

// Per-document execution context: ledger, virtual clock and trace.
struct DocRunner {
  const corpus::Document& doc;
  const PipelineConfig& cfg;
  backend::Backend& be;
  const optimize::OptimizeContext& opt;
  backend::CostLedger ledger;
  std::vector<TraceEntry> trace;
  int64_t call_seq = 0;

  DocRunner(const corpus::Document& d, const PipelineConfig& c, backend::Backend& b,
            const optimize::OptimizeContext& o)
      : doc(d), cfg(c), be(b), opt(o) {}

  const ModelProfile& base_profile() const { return backend::profile_by_name(cfg.model); }

  std::vector<int64_t> section_tokens(const std::vector<int>& scope) const {
    std::vector<int64_t> toks;
    if (scope.empty()) {
      for (const auto& s : doc.sections) toks.push_back(s.tokens());
    } else {
      for (int i : scope) toks.push_back(doc.sections[static_cast<size_t>(i)].tokens());
    }
    return toks;
  }

  CompletionResult call(AgentRole role, const ModelProfile& prof, const std::string& node,
                        const std::vector<int>& scope, std::vector<FieldRequest> fields,
                        const std::string& tag, bool raw_input, bool opportunistic,
                        int64_t record_count, int64_t critique_count, double start,
                        double* end_out,
                        const std::vector<int64_t>* token_override = nullptr) {
    CompletionRequest req;
    req.role = role;
    req.doc_id = doc.id;
    req.section_scope = scope;
    req.fields = std::move(fields);
    req.stream_tag = tag;
    req.raw_input = raw_input;
    req.opportunistic = opportunistic;
    req.record_count = record_count;
    req.temperature = backend::default_temperature(role);
    req.nonce = ++call_seq;
    const std::vector<int64_t> toks = token_override ? *token_override : section_tokens(scope);
    req.prompt_tokens =
        backend::role_input_tokens(role, raw_input, toks, record_count, critique_count);
    CompletionResult res = be.complete(prof, req);
    backend::LedgerEntry entry;
    entry.call_id = call_seq;
    entry.role = backend::to_string(role);
    entry.model = prof.name;
    entry.input_tokens = res.input_tokens;
    entry.output_tokens = res.output_tokens;
    entry.cost_e8 = backend::price_e8(prof, res.input_tokens, res.output_tokens);
    entry.latency = res.latency;
    ledger.append(entry);
    trace.push_back(TraceEntry{node, start, start + res.latency});
    if (end_out) *end_out = start + res.latency;
    return res;
  }
};

std::string fieldset_hash(const std::vector<FieldRequest>& fields) {
  std::string joined;
  std::vector<std::string> ids;
  for (const auto& f : fields) ids.push_back(f.field_id);
  std::sort(ids.begin(), ids.end());
  for (const auto& id : ids) {
    joined += id;
    joined += ',';
  }
  return std::to_string(fnv1a(joined));
}

// Extraction call with the semantic cache in front of it. With a cache the
// call is split into per-section sub-calls so a duplicate section can hit
// the entry its own document inserted moments earlier; the first-occurrence
// emission rule keeps the split byte- and cost-identical to the batched
// call. On a full hit no backend call is made.
std::vector<EmittedRecord> cached_extract(DocRunner& R, const ModelProfile& prof,
                                          const std::string& node, const std::vector<int>& scope,
                                          const std::vector<FieldRequest>& fields,
                                          const std::string& tag, bool raw_input,
                                          bool opportunistic, int64_t critique_count,
                                          double start, double* end_out) {
  using optimize::CacheMode;
  optimize::SemanticCache* cache = R.opt.cache;
  const CacheMode mode = cache ? cache->config().mode : CacheMode::None;
  if (!cache || mode == CacheMode::None) {
    auto res = R.call(AgentRole::FieldExtractor, prof, node, scope,
                      std::vector<FieldRequest>(fields), tag, raw_input, opportunistic, 0,
                      critique_count, start, end_out);
    return res.records;
  }

  const std::string fhash = fieldset_hash(fields);
  std::vector<EmittedRecord> merged;
  double end_max = start;

  std::vector<int> resolved = scope;
  if (resolved.empty())
    for (size_t i = 0; i < R.doc.sections.size(); ++i) resolved.push_back(static_cast<int>(i));

  for (int si : resolved) {
    const corpus::Section& sec = R.doc.sections[static_cast<size_t>(si)];
    const std::string text = sec.full_text();
    const bool bypass = mode == CacheMode::Hybrid && !sec.standard_format;
    const bool field_level =
        mode == CacheMode::Field || (mode == CacheMode::Hybrid && sec.standard_format);

    std::vector<std::string> missed_fields;  // field-level bookkeeping
    bool need_call = false;
    if (bypass) {
      need_call = true;
    } else if (!field_level) {
      const std::string scope_key = "section|" + tag + "|" + fhash;
      auto hit = cache->lookup(scope_key, text);
      if (hit) {
        for (auto rec : *hit) {
          rec.evidence_section = si;  // identical text within this document
          merged.push_back(std::move(rec));
        }
        continue;
      }
      need_call = true;
    } else {
      std::vector<EmittedRecord> partial;
      for (const auto& fr : fields) {
        const std::string scope_key = "field|" + tag + "|" + fr.field_id;
        auto hit = cache->lookup(scope_key, text);
        if (hit) {
          for (auto rec : *hit) {
            rec.evidence_section = si;
            partial.push_back(std::move(rec));
          }
        } else {
          missed_fields.push_back(fr.field_id);
        }
      }
      for (auto& r : partial) merged.push_back(std::move(r));
      need_call = !missed_fields.empty();
    }
    if (!need_call) continue;

    // one live sub-call per section; sub-calls of one stage run concurrently
    std::vector<FieldRequest> sub_fields;
    if (field_level) {
      for (const auto& fr : fields)
        if (std::find(missed_fields.begin(), missed_fields.end(), fr.field_id) !=
            missed_fields.end())
          sub_fields.push_back(fr);
    } else {
      sub_fields = fields;
    }
    CompletionRequest req;
    req.role = AgentRole::FieldExtractor;
    req.doc_id = R.doc.id;
    req.section_scope = {si};
    req.grounding_scope = resolved;
    req.grounded_only = true;
    req.fields = sub_fields;
    req.stream_tag = tag;
    req.raw_input = raw_input;
    req.opportunistic = opportunistic;
    req.temperature = backend::default_temperature(AgentRole::FieldExtractor);
    req.nonce = ++R.call_seq;
    req.prompt_tokens = backend::role_input_tokens(
        AgentRole::FieldExtractor, raw_input, {sec.tokens()}, 0, critique_count);
    backend::CompletionResult res = R.be.complete(prof, req);
    backend::LedgerEntry entry;
    entry.call_id = R.call_seq;
    entry.role = backend::to_string(AgentRole::FieldExtractor);
    entry.model = prof.name;
    entry.input_tokens = res.input_tokens;
    entry.output_tokens = res.output_tokens;
    entry.cost_e8 = backend::price_e8(prof, res.input_tokens, res.output_tokens);
    entry.latency = res.latency;
    R.ledger.append(entry);
    R.trace.push_back(TraceEntry{node + "/s" + std::to_string(si), start, start + res.latency});
    end_max = std::max(end_max, start + res.latency);

    if (!bypass) {
      if (!field_level) {
        std::vector<EmittedRecord> partial;
        for (const auto& rec : res.records)
          if (rec.has_evidence && rec.evidence_section == si) partial.push_back(rec);
        cache->insert("section|" + tag + "|" + fhash, text, std::move(partial));
      } else {
        for (const auto& fid : missed_fields) {
          std::vector<EmittedRecord> partial;
          for (const auto& rec : res.records)
            if (rec.field_id == fid && rec.has_evidence && rec.evidence_section == si)
              partial.push_back(rec);
          // empty payloads are negative entries: this section does not
          // ground the field
          cache->insert("field|" + tag + "|" + fid, text, std::move(partial));
        }
      }
    }
    for (const auto& rec : res.records) merged.push_back(rec);
  }

  if (end_out) *end_out = end_max;
  return merged;
}

ExtractionRecord make_absent_record(const std::string& field_id, double conf) {
  const schema::FieldSpec* spec = schema::find_field(field_id);
  ExtractionRecord r;
  r.field_id = field_id;
  r.value = GoldValue::make_absent(spec ? spec->kind : FieldKind::String);
  r.confidence = conf;
  return r;
}

void fill_missing_fields(std::map<std::string, ExtractionRecord>& records) {
  for (const auto& f : schema::catalog())
    if (!records.count(f.field_id)) records[f.field_id] = make_absent_record(f.field_id, 1.0);
}

// Canonicalization applied at the output stage: dates to ISO-8601, strings
// trimmed. Values are otherwise left as extracted.
void canonicalize_records(std::map<std::string, ExtractionRecord>& records) {
  for (auto& [fid, rec] : records) {
    if (rec.value.absent) continue;
    if (rec.value.kind == FieldKind::Date) {
      if (auto n = schema::normalize_date(rec.value.text)) rec.value.text = *n;
    } else if (rec.value.kind == FieldKind::String) {
      rec.value.text = std::string(trim(rec.value.text));
    }
  }
}

std::vector<FieldRequest> to_requests(const std::vector<std::string>& ids, int pass = 0,
                                      int critiques = 0) {
  std::vector<FieldRequest> out;
  for (const auto& id : ids) out.push_back(FieldRequest{id, pass, critiques});
  return out;
}

double wall_from_trace(const std::vector<TraceEntry>& trace) {
  double w = 0;
  for (const auto& t : trace) w = std::max(w, t.end);
  return w;
}

// Sections carrying a given tag. Sections with no tags reach no branch.
std::vector<int> sections_tagged(const std::map<int, std::set<Domain>>& tags, Domain d) {
  std::vector<int> out;
  for (const auto& [idx, doms] : tags)
    if (doms.count(d)) out.push_back(idx);
  return out;
}

const std::vector<const ModelProfile*>& escalation_ladder() {
  static const std::vector<const ModelProfile*> ladder = [] {
    std::vector<const ModelProfile*> l;
    for (const auto& p : backend::default_profiles()) l.push_back(&p);
    std::sort(l.begin(), l.end(), [](const ModelProfile* a, const ModelProfile* b) {
      return a->input_price < b->input_price;
    });
    return l;
  }();
  return ladder;
}

// Partition fields by their routed profile (router absent: one group).
std::map<std::string, std::vector<std::string>> route_fields(
    const std::vector<std::string>& ids, const optimize::OptimizeContext& opt,
    const std::string& default_model) {
  std::map<std::string, std::vector<std::string>> groups;
  for (const auto& id : ids) {
    std::string model = default_model;
    if (opt.router) {
      const schema::FieldSpec* spec = schema::find_field(id);
      if (spec) model = optimize::route(*spec, *opt.router).name;
    }
    groups[model].push_back(id);
  }
  return groups;
}

}  // namespace

// ---------------------------------------------------------------------------
// run_agent: single-role execution over AgentState

void run_agent(AgentRole role, AgentState& state, backend::Backend& be,
               const PipelineConfig& cfg, const std::vector<std::string>& fields) {
  if (!state.doc) throw std::invalid_argument("run_agent: state has no document");
  optimize::OptimizeContext no_opt;
  DocRunner R(*state.doc, cfg, be, no_opt);
  R.call_seq = static_cast<int64_t>(state.ledger.calls());
  double end = state.clock;
  switch (role) {
    case AgentRole::Parser: {
      R.call(role, R.base_profile(), "parser", state.scope, {}, "agent", false, false, 0, 0,
             state.clock, &end);
      state.normalized_sections.clear();
      const auto scope = state.scope;
      auto add = [&](const corpus::Section& s) {
        state.normalized_sections.push_back(std::string(trim(s.full_text())));
      };
      if (scope.empty())
        for (const auto& s : state.doc->sections) add(s);
      else
        for (int i : scope) add(state.doc->sections[static_cast<size_t>(i)]);
      break;
    }
    case AgentRole::FieldExtractor:
    case AgentRole::TableAnalyzer:
    case AgentRole::CrossRefResolver: {
      int critiques = static_cast<int>(state.critiques.size());
      auto reqs = to_requests(fields.empty() ? all_field_ids() : fields, 0, 0);
      if (critiques) {
        for (auto& fr : reqs) {
          int n = 0;
          for (const auto& c : state.critiques)
            if (c.field_id == fr.field_id) ++n;
          fr.critiques = n;
        }
      }
      auto res = R.call(role, R.base_profile(), backend::to_string(role), state.scope, reqs,
                        "agent", false, false, 0, critiques, state.clock, &end);
      for (const auto& rec : res.records)
        state.records[rec.field_id] = record_from_emitted(rec, role, cfg.model);
      break;
    }
    case AgentRole::ConfidenceScorer: {
      R.call(role, R.base_profile(), "confidence_scorer", {}, {}, "agent", false, false,
             static_cast<int64_t>(state.records.size()), 0, state.clock, &end);
      break;  // confidences are already calibrated at extraction time
    }
    case AgentRole::OutputFormatter: {
      R.call(role, R.base_profile(), "output_formatter", {}, {}, "agent", false, false,
             static_cast<int64_t>(state.records.size()), 0, state.clock, &end);
      canonicalize_records(state.records);
      break;
    }
    default: {
      R.call(role, R.base_profile(), backend::to_string(role), state.scope, {}, "agent", false,
             false, static_cast<int64_t>(state.records.size()), 0, state.clock, &end);
      break;
    }
  }
  state.ledger.merge(R.ledger);
  state.clock = end;
}

// ---------------------------------------------------------------------------
// Sequential pipeline

RunResult exec_sequential(const corpus::Document& doc, const PipelineConfig& cfg,
                          backend::Backend& be, const optimize::OptimizeContext& opt) {
  RunResult rr;
  rr.doc_id = doc.id;
  DocRunner R(doc, cfg, be, opt);
  const ModelProfile& prof = R.base_profile();
  const int64_t budget = std::min(cfg.context_budget, prof.context_window);
  auto slices = corpus::chunk_to_budget(doc, budget);

  struct SliceOut {
    std::map<std::string, ExtractionRecord> records;
    int index = 0;
  };
  std::vector<SliceOut> slice_outs;
  double t = 0.0;

  for (size_t si = 0; si < slices.size(); ++si) {
    const auto& slice = slices[si];
    const std::string suffix = slices.size() > 1 ? "/slice" + std::to_string(si) : "";
    const std::vector<int> scope = slice.scope();
    std::vector<int64_t> toks;
    for (int i : slice.section_indices) toks.push_back(doc.sections[static_cast<size_t>(i)].tokens());
    for (const auto& s : slice.synthetic_sections) toks.push_back(s.tokens());

    R.call(AgentRole::Parser, prof, "parser" + suffix, scope, {}, "extract", false, false, 0, 0,
           t, &t, &toks);

    std::vector<EmittedRecord> emitted;
    const bool plain_sections = slice.synthetic_sections.empty();
    const std::string tag = slices.size() > 1 ? "extract/s" + std::to_string(si) : "extract";
    if (plain_sections) {
      emitted = cached_extract(R, prof, "extract" + suffix, scope, to_requests(all_field_ids()),
                               tag, false, false, 0, t, &t);
    } else {
      auto res = R.call(AgentRole::FieldExtractor, prof, "extract" + suffix, scope,
                        to_requests(all_field_ids()), tag, false, false, 0, 0, t, &t, &toks);
      emitted = res.records;
    }

    // table analyzer and cross-reference resolver confirm their field
    // subsets; in the mock they agree with the extraction pass
    int64_t table_fields = 0;
    for (const auto& f : schema::catalog())
      if (f.table_housed) ++table_fields;
    R.call(AgentRole::TableAnalyzer, prof, "table" + suffix, scope, {}, tag, false, false,
           table_fields, 0, t, &t, &toks);
    R.call(AgentRole::CrossRefResolver, prof, "crossref" + suffix, scope, {}, tag, false, false,
           static_cast<int64_t>(crossref_fields().size()), 0, t, &t, &toks);
    R.call(AgentRole::OutputFormatter, prof, "format" + suffix, {}, {}, tag, false, false,
           static_cast<int64_t>(emitted.size()), 0, t, &t);

    SliceOut out;
    out.index = static_cast<int>(si);
    for (const auto& rec : emitted) {
      auto it = out.records.find(rec.field_id);
      ExtractionRecord er = record_from_emitted(rec, AgentRole::FieldExtractor, cfg.model);
      if (it == out.records.end() || (it->second.value.absent && !er.value.absent))
        out.records[rec.field_id] = std::move(er);
    }
    slice_outs.push_back(std::move(out));
  }

  // merge slices: first non-absent wins, ties by higher confidence, then
  // earlier slice
  for (const auto& f : schema::catalog()) {
    const ExtractionRecord* chosen = nullptr;
    for (const auto& so : slice_outs) {
      auto it = so.records.find(f.field_id);
      if (it == so.records.end()) continue;
      const ExtractionRecord& cand = it->second;
      if (!chosen) {
        chosen = &cand;
        continue;
      }
      if (chosen->value.absent && !cand.value.absent) {
        chosen = &cand;
      } else if (chosen->value.absent == cand.value.absent &&
                 cand.confidence > chosen->confidence) {
        chosen = &cand;
      }
    }
    if (chosen) rr.extractions[f.field_id] = *chosen;
  }
  fill_missing_fields(rr.extractions);
  canonicalize_records(rr.extractions);

  rr.ledger = std::move(R.ledger);
  rr.branch_trace = std::move(R.trace);
  rr.wall_latency = wall_from_trace(rr.branch_trace);
  rr.iterations_used = 1;
  return rr;
}

// ---------------------------------------------------------------------------
// Parallel fan-out with merge

RunResult exec_parallel(const corpus::Document& doc, const PipelineConfig& cfg,
                        backend::Backend& be, const optimize::OptimizeContext& opt) {
  RunResult rr;
  rr.doc_id = doc.id;
  DocRunner R(doc, cfg, be, opt);
  const ModelProfile& base = R.base_profile();

  double t_dispatch = 0.0;
  auto disp = R.call(AgentRole::Dispatcher, base, "dispatcher", {}, {}, "dispatch", false, false,
                     0, 0, 0.0, &t_dispatch);

  std::map<std::string, std::vector<ExtractionRecord>> candidates;
  double t_branches = t_dispatch;
  for (Domain d : kDomains) {
    const std::vector<int> scope = sections_tagged(disp.section_tags, d);
    const std::string node = std::string("branch/") + schema::to_string(d);
    const std::string tag = std::string("branch/") + schema::to_string(d);
    auto groups = route_fields(domain_field_ids(d), opt, cfg.model);
    double branch_end = t_dispatch;
    bool first_group = true;
    for (const auto& [model, ids] : groups) {
      const ModelProfile& prof = backend::profile_by_name(model);
      double end = t_dispatch;
      // opportunistic extraction rides on the first group's call
      auto emitted = cached_extract(R, prof, node, scope, to_requests(ids), tag, true,
                                    first_group, 0, t_dispatch, &end);
      first_group = false;
      branch_end = std::max(branch_end, end);
      for (const auto& rec : emitted)
        candidates[rec.field_id].push_back(
            record_from_emitted(rec, AgentRole::FieldExtractor, model));
    }
    t_branches = std::max(t_branches, branch_end);
  }

  int64_t total_cands = 0;
  for (const auto& [fid, v] : candidates) total_cands += static_cast<int64_t>(v.size());
  double t_merge = t_branches;
  R.call(AgentRole::MergeReconciler, base, "merge", {}, {}, "merge", false, false, total_cands, 0,
         t_branches, &t_merge);

  for (const auto& f : schema::catalog()) {
    auto it = candidates.find(f.field_id);
    if (it == candidates.end() || it->second.empty()) {
      rr.extractions[f.field_id] = make_absent_record(f.field_id, 1.0);
      continue;
    }
    rr.extractions[f.field_id] = verify::reconcile(it->second);
  }
  if (cfg.formatter_call) {
    R.call(AgentRole::OutputFormatter, base, "format", {}, {},
           "format", false, false, 25, 0, t_merge, &t_merge);
  }
  canonicalize_records(rr.extractions);

  rr.ledger = std::move(R.ledger);
  rr.branch_trace = std::move(R.trace);
  rr.wall_latency = wall_from_trace(rr.branch_trace);
  rr.iterations_used = 1;
  return rr;
}

// ---------------------------------------------------------------------------
// Hierarchical supervisor-worker

RunResult exec_hierarchical(const corpus::Document& doc, const PipelineConfig& cfg,
                            backend::Backend& be, const optimize::OptimizeContext& opt) {
  RunResult rr;
  rr.doc_id = doc.id;
  DocRunner R(doc, cfg, be, opt);
  const ModelProfile& base = R.base_profile();

  double t_plan = 0.0;
  R.call(AgentRole::SupervisorPlan, base, "plan", {}, {}, "plan", false, false, 0, 0, 0.0,
         &t_plan);

  std::map<int, std::set<Domain>> tags;
  for (size_t i = 0; i < doc.sections.size(); ++i)
    tags[static_cast<int>(i)] = doc.sections[i].domain_tags;

  struct FieldState {
    std::vector<ExtractionRecord> attempts;
    Domain domain = Domain::FinancialMetrics;
    const ExtractionRecord& best() const {
      size_t b = 0;
      for (size_t i = 1; i < attempts.size(); ++i)
        if (attempts[i].confidence > attempts[b].confidence) b = i;
      return attempts[b];
    }
  };
  std::map<std::string, FieldState> fields;
  for (const auto& f : schema::catalog()) fields[f.field_id].domain = f.domain;

  // first pass: one worker per domain (split per routed model when routing)
  double t_workers = t_plan;
  for (Domain d : kDomains) {
    const std::vector<int> scope = sections_tagged(tags, d);
    const std::string node = std::string("worker/") + schema::to_string(d);
    const std::string tag = std::string("worker/") + schema::to_string(d);
    auto groups = route_fields(domain_field_ids(d), opt, cfg.model);
    for (const auto& [model, ids] : groups) {
      const ModelProfile& prof = backend::profile_by_name(model);
      double end = t_plan;
      auto emitted = cached_extract(R, prof, node, scope, to_requests(ids), tag, true, false, 0,
                                    t_plan, &end);
      t_workers = std::max(t_workers, end);
      for (const auto& rec : emitted) {
        auto it = fields.find(rec.field_id);
        if (it != fields.end())
          it->second.attempts.push_back(
              record_from_emitted(rec, AgentRole::FieldExtractor, model));
      }
    }
  }
  for (auto& [fid, st] : fields)
    if (st.attempts.empty()) st.attempts.push_back(make_absent_record(fid, 0.0));

  double t_verify = t_workers;
  R.call(AgentRole::SupervisorVerify, base, "supervise", {}, {}, "supervise", false, false,
         static_cast<int64_t>(fields.size()), 0, t_workers, &t_verify);

  // adaptive retry learns from first-pass confidence
  if (opt.adaptive) {
    for (const auto& [fid, st] : fields)
      opt.adaptive->observe(fid, st.attempts.front().confidence < opt.retry.base_threshold);
  }

  // re-assignment rounds: fields below the supervisor threshold are
  // re-extracted, at most max_supervisor_reassign times, keeping the
  // best-confidence attempt
  int rounds_executed = 0;
  double t_round = t_verify;
  for (int round = 1; round <= cfg.max_supervisor_reassign; ++round) {
    // (domain, model) -> field ids to retry
    std::map<std::pair<std::string, std::string>, std::vector<std::string>> groups;
    for (auto& [fid, st] : fields) {
      const ExtractionRecord& best = st.best();
      const int attempts_so_far = static_cast<int>(st.attempts.size()) - 1;
      std::string model = st.attempts.back().producer_model;
      if (model.empty()) model = cfg.model;
      bool retry = false;
      const ModelProfile* escalate = nullptr;
      if (opt.retry.kind == optimize::RetryKind::None) {
        retry = best.confidence < cfg.supervisor_conf_threshold &&
                attempts_so_far < cfg.max_supervisor_reassign;
      } else {
        auto d = optimize::decide_retry(best, opt.retry, backend::profile_by_name(model),
                                        escalation_ladder(), attempts_so_far,
                                        cfg.max_supervisor_reassign, opt.adaptive);
        retry = d.action != optimize::RetryAction::Accept;
        if (d.action == optimize::RetryAction::RetryEscalated) escalate = d.escalate_to;
      }
      if (!retry) continue;
      std::string retry_model = escalate ? escalate->name : model;
      groups[{schema::to_string(st.domain), retry_model}].push_back(fid);
    }
    if (groups.empty()) break;
    ++rounds_executed;
    double t_next = t_round;
    for (const auto& [key, ids] : groups) {
      const auto& [dom_name, model] = key;
      Domain dom = *schema::domain_from_string(dom_name);
      const std::vector<int> scope = sections_tagged(tags, dom);
      const ModelProfile& prof = backend::profile_by_name(model);
      const std::string node = "reassign" + std::to_string(round) + "/" + dom_name;
      const std::string tag = std::string("worker/") + dom_name;
      double end = t_round;
      auto res = R.call(AgentRole::FieldExtractor, prof, node, scope, to_requests(ids, round),
                        tag, true, false, 0, 0, t_round, &end);
      t_next = std::max(t_next, end);
      for (const auto& rec : res.records) {
        auto it = fields.find(rec.field_id);
        if (it != fields.end())
          it->second.attempts.push_back(record_from_emitted(rec, AgentRole::FieldExtractor, model));
      }
    }
    t_round = t_next;
  }

  for (auto& [fid, st] : fields) {
    ExtractionRecord best = st.best();
    best.low_confidence_flag = best.confidence < cfg.supervisor_conf_threshold;
    rr.extractions[fid] = std::move(best);
  }
  if (cfg.formatter_call)
    R.call(AgentRole::OutputFormatter, base, "format", {}, {}, "format", false, false, 25, 0,
           t_round, &t_round);
  canonicalize_records(rr.extractions);

  rr.ledger = std::move(R.ledger);
  rr.branch_trace = std::move(R.trace);
  rr.wall_latency = wall_from_trace(rr.branch_trace);
  rr.iterations_used = 1 + rounds_executed;
  return rr;
}

// ---------------------------------------------------------------------------
// Reflexive verify-critique loop

RunResult exec_reflexive(const corpus::Document& doc, const PipelineConfig& cfg,
                         backend::Backend& be, const optimize::OptimizeContext& opt) {
  RunResult rr;
  rr.doc_id = doc.id;
  DocRunner R(doc, cfg, be, opt);
  const ModelProfile& prof = R.base_profile();

  double t = 0.0;
  R.call(AgentRole::Parser, prof, "parser", {}, {}, "extract", false, false, 0, 0, t, &t);

  std::map<std::string, std::vector<ExtractionRecord>> attempts;
  auto emitted = cached_extract(R, prof, "extract", {}, to_requests(all_field_ids()), "extract",
                                false, false, 0, t, &t);
  for (const auto& rec : emitted)
    attempts[rec.field_id].push_back(record_from_emitted(rec, AgentRole::FieldExtractor, cfg.model));
  for (const auto& f : schema::catalog())
    if (!attempts.count(f.field_id)) attempts[f.field_id].push_back(make_absent_record(f.field_id, 1.0));

  auto current_records = [&]() {
    std::map<std::string, ExtractionRecord> recs;
    for (const auto& [fid, v] : attempts) recs[fid] = v.back();
    return recs;
  };

  auto run_verifier = [&](int pass) {
    R.call(AgentRole::Verifier, prof, "verify" + std::to_string(pass), {}, {}, "verify", false,
           false, 25, 0, t, &t);
    auto recs = current_records();
    return verify::run_all_checks(recs, doc, cfg.verify_config);
  };

  auto outcomes = run_verifier(0);
  auto failed = [](const std::vector<verify::CheckOutcome>& ocs) {
    std::vector<verify::CheckOutcome> f;
    for (const auto& oc : ocs)
      if (!oc.passed) f.push_back(oc);
    return f;
  };

  int corrections = 0;
  std::vector<verify::CheckOutcome> failures = failed(outcomes);
  while (!failures.empty() && corrections < cfg.max_reflexive_iters) {
    if (cfg.deadline) {
      const double projected =
          t + be.median_latency(AgentRole::FieldExtractor, cfg.model) +
          be.median_latency(AgentRole::Verifier, cfg.model);
      if (projected > *cfg.deadline) {
        rr.truncated = true;
        break;
      }
    }
    ++corrections;
    auto critiques = verify::critique(failures);
    std::map<std::string, int> critique_count;
    for (const auto& c : critiques) critique_count[c.field_id]++;

    std::vector<FieldRequest> reqs;
    for (const auto& [fid, n] : critique_count)
      reqs.push_back(FieldRequest{fid, corrections, n});
    // the correction agent re-reads the raw source for the failed fields
    auto res = R.call(AgentRole::FieldExtractor, prof, "correct" + std::to_string(corrections),
                      {}, reqs, "extract", true, false, 0,
                      static_cast<int64_t>(critiques.size()), t, &t);
    for (const auto& rec : res.records)
      attempts[rec.field_id].push_back(record_from_emitted(rec, AgentRole::FieldExtractor, cfg.model));
    outcomes = run_verifier(corrections);
    failures = failed(outcomes);
  }

  // emit: latest attempt for settled fields; best-confidence attempt with a
  // low-confidence flag for fields still implicated at exhaustion
  std::set<std::string> still_failing;
  for (const auto& oc : failures)
    for (const auto& fid : oc.implicated_fields) still_failing.insert(fid);
  for (const auto& [fid, hist] : attempts) {
    if (still_failing.count(fid)) {
      size_t b = 0;
      for (size_t i = 1; i < hist.size(); ++i)
        if (hist[i].confidence > hist[b].confidence) b = i;
      ExtractionRecord rec = hist[b];
      rec.low_confidence_flag = true;
      rr.extractions[fid] = std::move(rec);
    } else {
      rr.extractions[fid] = hist.back();
    }
  }
  rr.unresolved_checks = failures;
  if (cfg.formatter_call)
    R.call(AgentRole::OutputFormatter, prof, "format", {}, {}, "format", false, false, 25, 0, t,
           &t);
  canonicalize_records(rr.extractions);

  rr.ledger = std::move(R.ledger);
  rr.branch_trace = std::move(R.trace);
  rr.wall_latency = wall_from_trace(rr.branch_trace);
  rr.iterations_used = 1 + corrections;
  return rr;
}

RunResult run_document(const corpus::Document& doc, const PipelineConfig& cfg,
                       backend::Backend& be, const optimize::OptimizeContext& opt) {
  switch (cfg.architecture) {
    case Architecture::Sequential: return exec_sequential(doc, cfg, be, opt);
    case Architecture::Parallel: return exec_parallel(doc, cfg, be, opt);
    case Architecture::Hierarchical: return exec_hierarchical(doc, cfg, be, opt);
    case Architecture::Reflexive: return exec_reflexive(doc, cfg, be, opt);
  }
  throw std::logic_error("unknown architecture");
}

std::vector<RunResult> run_benchmark(const std::vector<corpus::Document>& docs,
                                     const PipelineConfig& cfg, backend::Backend& be,
                                     const optimize::OptimizeContext& opt, int parallelism) {
  std::vector<RunResult> results(docs.size());
  if (docs.empty()) return results;
  // adaptive retry carries cross-document state whose update order matters
  if (opt.adaptive && opt.retry.kind == optimize::RetryKind::Adaptive) parallelism = 1;
  parallelism = std::max(1, std::min<int>(parallelism, static_cast<int>(docs.size())));

  auto work = [&](size_t i) {
    try {
      results[i] = run_document(docs[i], cfg, be, opt);
    } catch (const std::exception& e) {
      RunResult rr;
      rr.doc_id = docs[i].id;
      rr.error = e.what();
      fill_missing_fields(rr.extractions);
      results[i] = std::move(rr);
    }
  };

  if (parallelism == 1) {
    for (size_t i = 0; i < docs.size(); ++i) work(i);
  } else {
    std::atomic<size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(parallelism));
    for (int w = 0; w < parallelism; ++w) {
      pool.emplace_back([&]() {
        for (;;) {
          const size_t i = next.fetch_add(1);
          if (i >= docs.size()) return;
          work(i);
        }
      });
    }
    for (auto& th : pool) th.join();
  }

  std::stable_sort(results.begin(), results.end(),
                   [](const RunResult& a, const RunResult& b) { return a.doc_id < b.doc_id; });
  return results;
}

}  // namespace finbench::orch
