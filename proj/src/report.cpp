#include "finbench/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace finbench::report {

using nlohmann::json;

namespace {

constexpr const char* kResultsHeader = "#finbench results v1";
constexpr const char* kReportHeader = "#finbench report v1";
constexpr const char* kParetoHeader = "#finbench pareto v1";
constexpr const char* kSimHeader = "#finbench simcurve v1";

std::string fixed(double v, int dp) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", dp, v);
  return buf;
}

json summary_to_json(const RunSummary& s) {
  json j;
  j["architecture"] = s.architecture;
  j["model"] = s.model;
  j["precision"] = fixed(s.metrics.field_scores.precision, 6);
  j["recall"] = fixed(s.metrics.field_scores.recall, 6);
  j["f1"] = fixed(s.metrics.field_scores.f1, 6);
  j["doc_acc_strict"] = fixed(s.metrics.doc_acc_strict, 6);
  j["doc_acc_relaxed"] = fixed(s.metrics.doc_acc_relaxed, 6);
  j["latency_p50"] = fixed(s.metrics.latency_p50, 6);
  j["latency_p95"] = fixed(s.metrics.latency_p95, 6);
  j["latency_p99"] = fixed(s.metrics.latency_p99, 6);
  j["mean_cost"] = fixed(s.metrics.mean_cost_usd, 6);
  j["mean_input_tokens"] = s.metrics.mean_input_tokens;
  j["mean_output_tokens"] = s.metrics.mean_output_tokens;
  j["token_efficiency"] = fixed(s.metrics.token_eff, 6);
  j["documents"] = s.metrics.documents;
  j["failed_documents"] = s.metrics.failed_documents;
  if (s.metrics.f1_ci) {
    j["f1_ci_lo"] = fixed(s.metrics.f1_ci->first, 6);
    j["f1_ci_hi"] = fixed(s.metrics.f1_ci->second, 6);
  }
  return j;
}

RunSummary summary_from_json(const json& j) {
  RunSummary s;
  s.architecture = j.at("architecture").get<std::string>();
  s.model = j.at("model").get<std::string>();
  auto num = [&](const char* key) { return std::stod(j.at(key).get<std::string>()); };
  s.metrics.field_scores.precision = num("precision");
  s.metrics.field_scores.recall = num("recall");
  s.metrics.field_scores.f1 = num("f1");
  s.metrics.doc_acc_strict = num("doc_acc_strict");
  s.metrics.doc_acc_relaxed = num("doc_acc_relaxed");
  s.metrics.latency_p50 = num("latency_p50");
  s.metrics.latency_p95 = num("latency_p95");
  s.metrics.latency_p99 = num("latency_p99");
  s.metrics.mean_cost_usd = num("mean_cost");
  s.metrics.mean_input_tokens = j.at("mean_input_tokens").get<int64_t>();
  s.metrics.mean_output_tokens = j.at("mean_output_tokens").get<int64_t>();
  s.metrics.token_eff = num("token_efficiency");
  s.metrics.documents = j.at("documents").get<int64_t>();
  s.metrics.failed_documents = j.at("failed_documents").get<int64_t>();
  if (j.contains("f1_ci_lo"))
    s.metrics.f1_ci = std::make_pair(num("f1_ci_lo"), num("f1_ci_hi"));
  return s;
}

}  // namespace

std::string render_results(const RunSummary& summary,
                           const std::vector<orch::RunResult>& results) {
  std::ostringstream out;
  out << kResultsHeader << "\n";
  out << "#meta " << summary_to_json(summary).dump() << "\n";
  for (const auto& rr : results) {
    json j;
    j["doc"] = rr.doc_id;
    j["cost"] = fixed(rr.ledger.total_cost_usd(), 6);
    j["input_tokens"] = rr.ledger.total_input_tokens();
    j["output_tokens"] = rr.ledger.total_output_tokens();
    j["calls"] = rr.ledger.calls();
    j["latency"] = fixed(rr.wall_latency, 6);
    j["iterations"] = rr.iterations_used;
    j["truncated"] = rr.truncated;
    if (!rr.error.empty()) j["error"] = rr.error;
    json fields = json::object();
    for (const auto& [fid, rec] : rr.extractions) {
      json f;
      f["kind"] = schema::to_string(rec.value.kind);
      f["value"] = schema::value_to_field(rec.value);
      f["unit"] = schema::to_string(rec.value.unit_scale);
      f["confidence"] = fixed(rec.confidence, 6);
      f["flag"] = rec.low_confidence_flag;
      f["iteration"] = rec.iteration;
      fields[fid] = std::move(f);
    }
    j["fields"] = std::move(fields);
    out << j.dump() << "\n";
  }
  return out.str();
}

void write_results_file(const std::string& path, const RunSummary& summary,
                        const std::vector<orch::RunResult>& results) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write results file: " + path);
  f << render_results(summary, results);
}

ParsedResults parse_results_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open results file: " + path);
  std::string line;
  if (!std::getline(f, line) || line != kResultsHeader)
    throw std::runtime_error(path + ": not a finbench results file (bad or missing header)");
  if (!std::getline(f, line) || line.rfind("#meta ", 0) != 0)
    throw std::runtime_error(path + ": missing #meta line");
  ParsedResults out;
  out.summary = summary_from_json(json::parse(line.substr(6)));
  int lineno = 2;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": bad record: " + e.what());
    }
    ParsedResults::DocRow row;
    row.doc_id = j.at("doc").get<std::string>();
    row.cost = std::stod(j.at("cost").get<std::string>());
    row.latency = std::stod(j.at("latency").get<std::string>());
    row.iterations = j.at("iterations").get<int>();
    row.truncated = j.at("truncated").get<bool>();
    if (j.contains("error")) row.error = j.at("error").get<std::string>();
    out.docs.push_back(std::move(row));
  }
  return out;
}

std::string render_report_table(const std::vector<RunSummary>& rows) {
  std::ostringstream out;
  out << kReportHeader << "\n";
  out << "architecture\tmodel\tf1\tprecision\trecall\tdoc_acc_strict\tdoc_acc_relaxed"
      << "\tlatency_p50\tlatency_p95\tlatency_p99\tmean_cost\ttoken_efficiency"
      << "\tf1_ci_lo\tf1_ci_hi\tdocuments\tfailed\n";
  for (const auto& r : rows) {
    out << r.architecture << '\t' << r.model << '\t' << fixed(r.metrics.field_scores.f1, 6)
        << '\t' << fixed(r.metrics.field_scores.precision, 6) << '\t'
        << fixed(r.metrics.field_scores.recall, 6) << '\t' << fixed(r.metrics.doc_acc_strict, 6)
        << '\t' << fixed(r.metrics.doc_acc_relaxed, 6) << '\t' << fixed(r.metrics.latency_p50, 6)
        << '\t' << fixed(r.metrics.latency_p95, 6) << '\t' << fixed(r.metrics.latency_p99, 6)
        << '\t' << fixed(r.metrics.mean_cost_usd, 6) << '\t' << fixed(r.metrics.token_eff, 6)
        << '\t' << (r.metrics.f1_ci ? fixed(r.metrics.f1_ci->first, 6) : "-") << '\t'
        << (r.metrics.f1_ci ? fixed(r.metrics.f1_ci->second, 6) : "-") << '\t'
        << r.metrics.documents << '\t' << r.metrics.failed_documents << "\n";
  }
  return out.str();
}

void write_report_table(const std::string& path, const std::vector<RunSummary>& rows) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write report table: " + path);
  f << render_report_table(rows);
}

std::string render_pareto(const std::vector<metrics::ParetoPoint>& points) {
  const auto frontier = metrics::pareto_frontier(points);
  auto on_frontier = [&](const metrics::ParetoPoint& p) {
    for (const auto& q : frontier)
      if (q.cost == p.cost && q.f1 == p.f1) return true;
    return false;
  };
  std::ostringstream out;
  out << kParetoHeader << "\n";
  out << "cost\tf1\tlabel\tfrontier\n";
  for (const auto& p : points)
    out << fixed(p.cost, 6) << '\t' << fixed(p.f1, 6) << '\t' << p.label << '\t'
        << (on_frontier(p) ? 1 : 0) << "\n";
  return out.str();
}

void write_pareto(const std::string& path, const std::vector<metrics::ParetoPoint>& points) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write pareto file: " + path);
  f << render_pareto(points);
}

std::string render_sim_curve(const std::vector<sim::SweepRow>& rows) {
  std::ostringstream out;
  out << kSimHeader << "\n";
  out << "load\tarchitecture\teffective_f1\tp50\tp95\ttruncation_rate\n";
  for (const auto& r : rows)
    out << fixed(r.load, 0) << '\t' << orch::to_string(r.arch) << '\t'
        << fixed(r.report.effective_f1, 6) << '\t' << fixed(r.report.latency_p50, 6) << '\t'
        << fixed(r.report.latency_p95, 6) << '\t' << fixed(r.report.truncation_rate, 6) << "\n";
  return out.str();
}

void write_sim_curve(const std::string& path, const std::vector<sim::SweepRow>& rows) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write sim curve file: " + path);
  f << render_sim_curve(rows);
}

std::string format_pct_1dp(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f%%", fraction * 100.0);
  return buf;
}

std::vector<std::string> key_finding_ratios(const std::vector<RunSummary>& rows) {
  std::vector<std::string> lines;
  for (const auto& hier : rows) {
    if (hier.architecture != "hierarchical") continue;
    for (const auto& refl : rows) {
      if (refl.architecture != "reflexive" || refl.model != hier.model) continue;
      if (refl.metrics.field_scores.f1 <= 0 || refl.metrics.mean_cost_usd <= 0) continue;
      const double f1_ratio = hier.metrics.field_scores.f1 / refl.metrics.field_scores.f1;
      const double cost_ratio = hier.metrics.mean_cost_usd / refl.metrics.mean_cost_usd;
      lines.push_back("hierarchical reaches " + format_pct_1dp(f1_ratio) +
                      " of reflexive F1 at " + format_pct_1dp(cost_ratio) + " of its cost (" +
                      hier.model + ")");
    }
  }
  return lines;
}

}  // namespace finbench::report
