#include "finbench/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "finbench/rng.hpp"

namespace finbench::metrics {

namespace {

bool field_correct(const schema::FieldSpec& spec, const schema::GoldValue& gold,
                   const ExtractionRecord& rec, const MetricOptions& opt) {
  if (gold.absent) return rec.value.absent;
  if (rec.value.absent) return false;
  return schema::match(spec, gold, rec.value, opt.match_rule);
}

const corpus::GoldRecord& gold_for(const std::vector<corpus::GoldRecord>& gold,
                                   const std::string& doc_id) {
  for (const auto& g : gold)
    if (g.doc_id == doc_id) return g;
  throw std::runtime_error("metrics: no gold record for document '" + doc_id + "'");
}

}  // namespace

FieldConfusion confusion(const std::vector<orch::RunResult>& results,
                         const std::vector<corpus::GoldRecord>& gold, const MetricOptions& opt) {
  FieldConfusion c;
  for (const auto& rr : results) {
    const corpus::GoldRecord& g = gold_for(gold, rr.doc_id);
    for (const auto& spec : schema::catalog()) {
      auto git = g.values.find(spec.field_id);
      if (git == g.values.end()) throw std::runtime_error("gold missing field " + spec.field_id);
      const schema::GoldValue& gv = git->second;
      auto rit = rr.extractions.find(spec.field_id);
      const bool abstained = rit == rr.extractions.end() || rit->second.value.absent;
      if (gv.absent) {
        if (abstained) {
          if (opt.abstain_on_absent_is_tp) ++c.tp;
          // default: contributes nothing
        } else {
          ++c.fp;
        }
        continue;
      }
      if (abstained) {
        ++c.fn;
        continue;
      }
      if (schema::match(spec, gv, rit->second.value, opt.match_rule)) {
        ++c.tp;
      } else {
        ++c.fp;
        ++c.fn;
      }
    }
  }
  return c;
}

Scores micro_f1(const std::vector<orch::RunResult>& results,
                const std::vector<corpus::GoldRecord>& gold, const MetricOptions& opt) {
  const FieldConfusion c = confusion(results, gold, opt);
  Scores s;
  s.precision = (c.tp + c.fp) > 0 ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp) : 0.0;
  s.recall = (c.tp + c.fn) > 0 ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn) : 0.0;
  s.f1 = (s.precision + s.recall) > 0 ? 2 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
  return s;
}

std::vector<int> per_doc_correct(const std::vector<orch::RunResult>& results,
                                 const std::vector<corpus::GoldRecord>& gold,
                                 const MetricOptions& opt) {
  std::vector<int> out;
  out.reserve(results.size());
  for (const auto& rr : results) {
    const corpus::GoldRecord& g = gold_for(gold, rr.doc_id);
    int correct = 0;
    for (const auto& spec : schema::catalog()) {
      auto rit = rr.extractions.find(spec.field_id);
      if (rit == rr.extractions.end()) continue;
      if (field_correct(spec, g.values.at(spec.field_id), rit->second, opt)) ++correct;
    }
    out.push_back(correct);
  }
  return out;
}

std::pair<double, double> doc_accuracy(const std::vector<orch::RunResult>& results,
                                       const std::vector<corpus::GoldRecord>& gold,
                                       const MetricOptions& opt) {
  if (results.empty()) return {0.0, 0.0};
  const auto correct = per_doc_correct(results, gold, opt);
  int64_t strict = 0, relaxed = 0;
  for (int c : correct) {
    if (c >= 25) ++strict;
    if (c >= 23) ++relaxed;
  }
  const double n = static_cast<double>(correct.size());
  return {static_cast<double>(strict) / n, static_cast<double>(relaxed) / n};
}

double percentile(std::vector<double> samples, double q) {
  if (samples.empty()) throw std::invalid_argument("percentile: empty sample");
  std::sort(samples.begin(), samples.end());
  const size_t n = samples.size();
  size_t rank = static_cast<size_t>(std::ceil(q / 100.0 * static_cast<double>(n)));
  if (rank < 1) rank = 1;
  if (rank > n) rank = n;
  return samples[rank - 1];
}

std::vector<double> latency_percentiles(const std::vector<double>& samples,
                                        const std::vector<double>& qs) {
  std::vector<double> out;
  out.reserve(qs.size());
  for (double q : qs) out.push_back(percentile(samples, q));
  return out;
}

double token_efficiency(int64_t input_tokens, int64_t output_tokens) {
  const int64_t total = input_tokens + output_tokens;
  if (total <= 0) throw std::invalid_argument("token_efficiency: zero total tokens");
  return static_cast<double>(output_tokens) / static_cast<double>(total);
}

double token_efficiency(const backend::CostLedger& ledger) {
  return token_efficiency(ledger.total_input_tokens(), ledger.total_output_tokens());
}

std::pair<double, double> bootstrap_ci(
    const std::vector<double>& per_doc_values,
    const std::function<double(const std::vector<double>&)>& statistic, int n, uint64_t seed) {
  if (per_doc_values.size() < 2)
    throw std::invalid_argument("bootstrap_ci: need at least 2 documents");
  if (n < 2) throw std::invalid_argument("bootstrap_ci: need at least 2 resamples");
  Rng rng(derive_seed(seed, "bootstrap"));
  std::vector<double> stats(static_cast<size_t>(n));
  std::vector<double> resample(per_doc_values.size());
  for (int i = 0; i < n; ++i) {
    for (auto& v : resample)
      v = per_doc_values[rng.uniform_int(per_doc_values.size())];
    stats[static_cast<size_t>(i)] = statistic(resample);
  }
  return {percentile(stats, 2.5), percentile(stats, 97.5)};
}

std::vector<ParetoPoint> pareto_frontier(const std::vector<ParetoPoint>& points) {
  if (points.empty()) return {};
  std::vector<size_t> order(points.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    if (points[a].cost != points[b].cost) return points[a].cost < points[b].cost;
    if (points[a].f1 != points[b].f1) return points[a].f1 > points[b].f1;
    return a < b;
  });
  std::vector<ParetoPoint> out;
  double best_f1 = -std::numeric_limits<double>::infinity();
  double last_cost = std::numeric_limits<double>::quiet_NaN();
  double last_f1 = std::numeric_limits<double>::quiet_NaN();
  for (size_t idx : order) {
    const ParetoPoint& p = points[idx];
    if (p.cost == last_cost && p.f1 == last_f1) continue;  // duplicates kept once
    if (p.f1 > best_f1) {
      out.push_back(p);
      best_f1 = p.f1;
      last_cost = p.cost;
      last_f1 = p.f1;
    }
  }
  return out;
}

MetricReport build_report(const std::vector<orch::RunResult>& results,
                          const std::vector<corpus::GoldRecord>& gold, const MetricOptions& opt,
                          int bootstrap_n, uint64_t bootstrap_seed) {
  MetricReport rep;
  rep.documents = static_cast<int64_t>(results.size());
  for (const auto& rr : results)
    if (rr.failed()) ++rep.failed_documents;
  if (results.empty()) return rep;

  rep.field_scores = micro_f1(results, gold, opt);
  auto [strict, relaxed] = doc_accuracy(results, gold, opt);
  rep.doc_acc_strict = strict;
  rep.doc_acc_relaxed = relaxed;

  std::vector<double> latencies;
  int64_t in_tok = 0, out_tok = 0, cost_e8 = 0;
  for (const auto& rr : results) {
    latencies.push_back(rr.wall_latency);
    in_tok += rr.ledger.total_input_tokens();
    out_tok += rr.ledger.total_output_tokens();
    cost_e8 += rr.ledger.total_cost_e8();
  }
  const auto ps = latency_percentiles(latencies);
  rep.latency_p50 = ps[0];
  rep.latency_p95 = ps[1];
  rep.latency_p99 = ps[2];
  rep.mean_cost_usd = static_cast<double>(cost_e8) / 1e8 / static_cast<double>(results.size());
  rep.mean_input_tokens = in_tok / static_cast<int64_t>(results.size());
  rep.mean_output_tokens = out_tok / static_cast<int64_t>(results.size());
  rep.token_eff = token_efficiency(in_tok, out_tok);

  if (bootstrap_n >= 2 && results.size() >= 2) {
    // per-document F1 surrogate for CI purposes: correct-count fraction
    const auto correct = per_doc_correct(results, gold, opt);
    std::vector<double> vals;
    vals.reserve(correct.size());
    for (int c : correct) vals.push_back(static_cast<double>(c) / 25.0);
    auto mean = [](const std::vector<double>& v) {
      double s = 0;
      for (double x : v) s += x;
      return s / static_cast<double>(v.size());
    };
    rep.f1_ci = bootstrap_ci(vals, mean, bootstrap_n, bootstrap_seed);
  }
  return rep;
}

}  // namespace finbench::metrics
