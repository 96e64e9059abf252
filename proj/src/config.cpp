#include "finbench/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace finbench::cfg {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& what) { throw ConfigError("config: " + what); }

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    bad(std::string("malformed value for '") + key + "'");
  }
}

std::vector<orch::Architecture> parse_archs(const json& arr, const char* key) {
  std::vector<orch::Architecture> out;
  for (const auto& a : arr) {
    auto arch = orch::architecture_from_string(a.get<std::string>());
    if (!arch) bad(std::string("unknown architecture in '") + key + "': " + a.get<std::string>());
    out.push_back(*arch);
  }
  if (out.empty()) bad(std::string("'") + key + "' must not be empty");
  return out;
}

}  // namespace

RunConfig parse_config_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    bad(std::string("invalid JSON: ") + e.what());
  }
  if (!j.contains("schema_version")) bad("missing mandatory 'schema_version'");
  RunConfig cfg;
  cfg.schema_version = j.at("schema_version").get<int>();
  if (cfg.schema_version != 1) bad("unsupported schema_version " + std::to_string(cfg.schema_version));

  if (j.contains("seed")) {
    cfg.seed = j.at("seed").get<uint64_t>();
    cfg.seed_set = true;
  }

  if (j.contains("corpus")) {
    const auto& c = j.at("corpus");
    if (c.contains("load_path") && c.contains("synthetic"))
      bad("corpus: exactly one of load_path/synthetic allowed");
    if (c.contains("load_path")) cfg.corpus_path = c.at("load_path").get<std::string>();
    if (c.contains("synthetic")) {
      const auto& s = c.at("synthetic");
      corpus::SynthSpec spec;
      spec.count = get_or(s, "count", 0);
      spec.weight_10k = get_or(s, "weight_10k", spec.weight_10k);
      spec.weight_10q = get_or(s, "weight_10q", spec.weight_10q);
      spec.weight_8k = get_or(s, "weight_8k", spec.weight_8k);
      spec.tokens_10k = get_or<int64_t>(s, "tokens_10k", spec.tokens_10k);
      spec.tokens_10q = get_or<int64_t>(s, "tokens_10q", spec.tokens_10q);
      spec.tokens_8k = get_or<int64_t>(s, "tokens_8k", spec.tokens_8k);
      spec.duplicate_section_rate = get_or(s, "duplicate_section_rate", 0.0);
      spec.ambiguity_rate = get_or(s, "ambiguity_rate", 0.0);
      spec.cross_table_rate = get_or(s, "cross_table_rate", 0.0);
      spec.unit_scale_trap_rate = get_or(s, "unit_scale_trap_rate", 0.0);
      spec.absent_rate = get_or(s, "absent_rate", 0.0);
      for (double r : {spec.duplicate_section_rate, spec.ambiguity_rate, spec.cross_table_rate,
                       spec.unit_scale_trap_rate, spec.absent_rate})
        if (r < 0.0 || r > 1.0) bad("corpus.synthetic: rates must lie in [0,1]");
      cfg.synth = spec;
    }
  }

  if (j.contains("pipeline")) {
    const auto& p = j.at("pipeline");
    if (p.contains("architectures")) cfg.architectures = parse_archs(p.at("architectures"), "architectures");
    if (p.contains("models")) {
      cfg.models = p.at("models").get<std::vector<std::string>>();
      if (cfg.models.empty()) bad("pipeline.models must not be empty");
      for (const auto& m : cfg.models) backend::profile_by_name(m);  // validates
    }
    cfg.pipeline.supervisor_conf_threshold =
        get_or(p, "supervisor_conf_threshold", cfg.pipeline.supervisor_conf_threshold);
    cfg.pipeline.max_supervisor_reassign =
        get_or(p, "max_supervisor_reassign", cfg.pipeline.max_supervisor_reassign);
    cfg.pipeline.max_reflexive_iters =
        get_or(p, "max_reflexive_iters", cfg.pipeline.max_reflexive_iters);
    cfg.pipeline.context_budget = get_or<int64_t>(p, "context_budget", cfg.pipeline.context_budget);
    if (p.contains("deadline") && !p.at("deadline").is_null())
      cfg.pipeline.deadline = p.at("deadline").get<double>();
    cfg.pipeline.formatter_call = get_or(p, "formatter_call", cfg.pipeline.formatter_call);
    if (cfg.pipeline.supervisor_conf_threshold <= 0 || cfg.pipeline.supervisor_conf_threshold >= 1)
      bad("pipeline.supervisor_conf_threshold must lie in (0,1)");
    if (cfg.pipeline.max_supervisor_reassign < 0 || cfg.pipeline.max_reflexive_iters < 0)
      bad("pipeline iteration caps must be nonnegative");
  }

  if (j.contains("backend")) {
    const auto& b = j.at("backend");
    const std::string kind = get_or<std::string>(b, "kind", "mock");
    if (kind == "mock") {
      cfg.backend_kind = BackendKind::Mock;
    } else if (kind == "http") {
      cfg.backend_kind = BackendKind::Http;
    } else {
      bad("backend.kind must be 'mock' or 'http'");
    }
    if (b.contains("mock")) {
      const auto& m = b.at("mock");
      cfg.mock.confidence_concentration =
          get_or(m, "confidence_concentration", cfg.mock.confidence_concentration);
      cfg.mock.iteration_gain = get_or(m, "iteration_gain", cfg.mock.iteration_gain);
      if (cfg.mock.iteration_gain <= 0 || cfg.mock.iteration_gain > 1)
        bad("backend.mock.iteration_gain must lie in (0,1]");
      if (m.contains("failure_mode_mix")) {
        const auto& mix = m.at("failure_mode_mix");
        cfg.mock.mix_unit_scale = get_or(mix, "unit_scale", cfg.mock.mix_unit_scale);
        cfg.mock.mix_prior_period = get_or(mix, "prior_period", cfg.mock.mix_prior_period);
        cfg.mock.mix_cross_table = get_or(mix, "cross_table", cfg.mock.mix_cross_table);
        cfg.mock.mix_hallucination = get_or(mix, "hallucination", cfg.mock.mix_hallucination);
        cfg.mock.mix_absent = get_or(mix, "absent", cfg.mock.mix_absent);
      }
      if (m.contains("error_rates")) {
        for (const auto& [model, rates] : m.at("error_rates").items()) {
          if (!rates.is_array() || rates.size() != 3)
            bad("backend.mock.error_rates values must be [simple, medium, complex]");
          backend::DifficultyRates r{rates[0].get<double>(), rates[1].get<double>(),
                                     rates[2].get<double>()};
          for (double v : {r.simple, r.medium, r.complex_})
            if (v < 0 || v > 1) bad("backend.mock.error_rates must lie in [0,1]");
          cfg.mock.error_rates[model] = r;
        }
      }
    }
    if (b.contains("http")) {
      cfg.http.endpoint = get_or<std::string>(b.at("http"), "endpoint", "");
      cfg.http.api_key_env = get_or<std::string>(b.at("http"), "api_key_env", cfg.http.api_key_env);
    }
  }

  if (j.contains("optimize")) {
    const auto& o = j.at("optimize");
    if (o.contains("cache")) {
      const auto& cj = o.at("cache");
      auto mode = optimize::cache_mode_from_string(get_or<std::string>(cj, "mode", "none"));
      if (!mode) bad("optimize.cache.mode must be none|section|field|hybrid");
      cfg.cache.mode = *mode;
      cfg.cache.cosine_threshold = get_or(cj, "cosine_threshold", cfg.cache.cosine_threshold);
      cfg.cache.capacity = get_or<size_t>(cj, "capacity", cfg.cache.capacity);
      if (cfg.cache.cosine_threshold <= 0 || cfg.cache.cosine_threshold > 1)
        bad("optimize.cache.cosine_threshold must lie in (0,1]");
      if (cfg.cache.capacity == 0) bad("optimize.cache.capacity must be positive");
    }
    if (o.contains("router")) {
      const auto& rj = o.at("router");
      optimize::RouterConfig rc;
      auto preset = optimize::router_preset_from_string(get_or<std::string>(rj, "preset", "single"));
      if (!preset) bad("optimize.router.preset must be single|two_tier|three_tier");
      rc.preset = *preset;
      rc.single_model = get_or<std::string>(rj, "single_model", rc.single_model);
      rc.cheap_model = get_or<std::string>(rj, "cheap_model", rc.cheap_model);
      rc.mid_model = get_or<std::string>(rj, "mid_model", rc.mid_model);
      rc.strong_model = get_or<std::string>(rj, "strong_model", rc.strong_model);
      cfg.router = rc;
    }
    if (o.contains("retry")) {
      const auto& rj = o.at("retry");
      auto kind = optimize::retry_kind_from_string(get_or<std::string>(rj, "kind", "none"));
      if (!kind) bad("optimize.retry.kind must be none|fixed_once|confidence_gated|escalation|adaptive");
      cfg.retry.kind = *kind;
      cfg.retry.base_threshold = get_or(rj, "base_threshold", cfg.retry.base_threshold);
      cfg.retry.gated_margin = get_or(rj, "gated_margin", cfg.retry.gated_margin);
      cfg.retry.adaptive_slope = get_or(rj, "adaptive_slope", cfg.retry.adaptive_slope);
      cfg.retry.adaptive_cap = get_or(rj, "adaptive_cap", cfg.retry.adaptive_cap);
      cfg.retry.ewma_decay = get_or(rj, "ewma_decay", cfg.retry.ewma_decay);
    }
  }

  if (j.contains("metrics")) {
    cfg.bootstrap_n = get_or(j.at("metrics"), "bootstrap_n", cfg.bootstrap_n);
  }
  cfg.workers = get_or(j, "workers", cfg.workers);
  cfg.output_dir = get_or<std::string>(j, "output_dir", cfg.output_dir);

  if (j.contains("simulate")) {
    const auto& s = j.at("simulate");
    if (s.contains("loads")) {
      cfg.sim.loads = s.at("loads").get<std::vector<double>>();
      if (cfg.sim.loads.empty()) bad("simulate.loads must not be empty");
    }
    if (s.contains("architectures"))
      cfg.sim.architectures = parse_archs(s.at("architectures"), "simulate.architectures");
    cfg.sim.cluster_slots = get_or(s, "cluster_slots", cfg.sim.cluster_slots);
    cfg.sim.duration_hours = get_or(s, "duration_hours", cfg.sim.duration_hours);
    cfg.sim.warmup_hours = get_or(s, "warmup_hours", cfg.sim.warmup_hours);
    if (s.contains("deadline") && !s.at("deadline").is_null())
      cfg.sim.deadline = s.at("deadline").get<double>();
    cfg.sim.calib.reflexive_iter_floor =
        get_or(s, "reflexive_iter_floor", cfg.sim.calib.reflexive_iter_floor);
    cfg.sim.calib.hierarchical_iter_floor =
        get_or(s, "hierarchical_iter_floor", cfg.sim.calib.hierarchical_iter_floor);
    cfg.sim.calib.deadline_multiple = get_or(s, "deadline_multiple", cfg.sim.calib.deadline_multiple);
    if (s.contains("anchors")) {
      cfg.sim.anchors.clear();
      for (const auto& a : s.at("anchors")) {
        if (!a.contains("architecture")) bad("simulate.anchors: missing 'architecture'");
        if (!a.contains("f1_by_load")) bad("simulate.anchors: missing 'f1_by_load'");
        sim::ArchAnchors an;
        auto arch = orch::architecture_from_string(a.at("architecture").get<std::string>());
        if (!arch) bad("simulate.anchors: unknown architecture");
        an.arch = *arch;
        for (const auto& row : a.at("f1_by_load"))
          an.f1_by_load.emplace_back(row.at(0).get<double>(), row.at(1).get<double>());
        cfg.sim.anchors.push_back(std::move(an));
      }
    }
    if (s.contains("latency_rows")) {
      cfg.sim.latency_rows.clear();
      for (const auto& r : s.at("latency_rows")) {
        if (!r.contains("architecture") || !r.contains("p50") || !r.contains("p95"))
          bad("simulate.latency_rows: need architecture/p50/p95");
        sim::LatencyRow row;
        auto arch = orch::architecture_from_string(r.at("architecture").get<std::string>());
        if (!arch) bad("simulate.latency_rows: unknown architecture");
        row.arch = *arch;
        row.p50 = r.at("p50").get<double>();
        row.p95 = r.at("p95").get<double>();
        cfg.sim.latency_rows.push_back(row);
      }
    }
  }

  return cfg;
}

RunConfig parse_config_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) bad("cannot open config file: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_config_text(ss.str());
}

}  // namespace finbench::cfg
