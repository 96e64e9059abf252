// finbench: multi-agent extraction benchmark over financial filings.
// Subcommands: corpus gen | bench | simulate | report.

#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>

#include <CLI11.hpp>

#include "finbench/config.hpp"
#include "finbench/http_backend.hpp"
#include "finbench/metrics.hpp"
#include "finbench/orchestrator.hpp"
#include "finbench/report.hpp"
#include "finbench/rng.hpp"
#include "finbench/simulate.hpp"

namespace fs = std::filesystem;
using namespace finbench;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfigError = 2;
constexpr int kExitRuntimeErrors = 3;

struct CliOverrides {
  std::string config_path;
  std::optional<uint64_t> seed;
  std::optional<int> workers;
  std::optional<std::string> out_dir;
};

cfg::RunConfig load_config(const CliOverrides& cli) {
  if (cli.config_path.empty()) throw cfg::ConfigError("config: --config <path> is required");
  cfg::RunConfig rc = cfg::parse_config_file(cli.config_path);
  if (cli.seed) {
    rc.seed = *cli.seed;
    rc.seed_set = true;
  }
  if (cli.workers) rc.workers = *cli.workers;
  if (cli.out_dir) rc.output_dir = *cli.out_dir;
  return rc;
}

std::string slug(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c >= 'A' && c <= 'Z') out += static_cast<char>(c - 'A' + 'a');
    else if ((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9')) out += c;
    else if (!out.empty() && out.back() != '-') out += '-';
  }
  while (!out.empty() && out.back() == '-') out.pop_back();
  return out;
}

std::pair<std::vector<corpus::Document>, std::vector<corpus::GoldRecord>> obtain_corpus(
    const cfg::RunConfig& rc) {
  if (rc.corpus_path && rc.synth)
    throw cfg::ConfigError("config: corpus needs exactly one of load_path/synthetic");
  if (rc.corpus_path) return corpus::load_corpus(*rc.corpus_path);
  if (rc.synth) {
    if (!rc.seed_set) throw cfg::ConfigError("config: synthetic corpus requires a seed");
    return corpus::generate_synthetic(*rc.synth, rc.seed);
  }
  throw cfg::ConfigError("config: no corpus source given");
}

int cmd_corpus_gen(const CliOverrides& cli) {
  cfg::RunConfig rc = load_config(cli);
  if (!rc.synth) throw cfg::ConfigError("config: corpus gen requires a 'synthetic' block");
  if (!rc.seed_set) throw cfg::ConfigError("config: corpus gen requires a seed");
  auto [docs, gold] = corpus::generate_synthetic(*rc.synth, rc.seed);
  fs::create_directories(rc.output_dir);
  corpus::write_corpus(rc.output_dir, docs, gold);
  std::cout << "generated " << docs.size() << " documents with gold records in " << rc.output_dir
            << "\n";
  return kExitOk;
}

int cmd_bench(const CliOverrides& cli) {
  cfg::RunConfig rc = load_config(cli);
  auto [docs, gold] = obtain_corpus(rc);

  std::unique_ptr<backend::Backend> be;
  if (rc.backend_kind == cfg::BackendKind::Mock) {
    if (!rc.seed_set) throw cfg::ConfigError("config: mock runs require a seed");
    be = std::make_unique<backend::MockBackend>(docs, gold, rc.mock, derive_seed(rc.seed, "mock"));
  } else {
    if (rc.http.endpoint.empty()) throw cfg::ConfigError("config: backend.http.endpoint missing");
    be = std::make_unique<backend::HttpBackend>(rc.http.endpoint, rc.http.api_key_env);
  }

  fs::create_directories(rc.output_dir);
  std::vector<report::RunSummary> summaries;
  std::vector<metrics::ParetoPoint> points;
  bool any_doc_failed = false;

  for (auto arch : rc.architectures) {
    for (const auto& model : rc.models) {
      orch::PipelineConfig pc = rc.pipeline;
      pc.architecture = arch;
      pc.model = model;

      optimize::OptimizeContext octx;
      std::unique_ptr<optimize::SemanticCache> cache;
      std::unique_ptr<optimize::AdaptiveState> adaptive;
      if (rc.cache.mode != optimize::CacheMode::None) {
        cache = std::make_unique<optimize::SemanticCache>(rc.cache);
        octx.cache = cache.get();
      }
      if (rc.router) octx.router = &*rc.router;
      octx.retry = rc.retry;
      if (rc.retry.kind == optimize::RetryKind::Adaptive) {
        adaptive = std::make_unique<optimize::AdaptiveState>(rc.retry.ewma_decay);
        octx.adaptive = adaptive.get();
      }

      auto results = orch::run_benchmark(docs, pc, *be, octx, rc.workers);
      for (const auto& rr : results)
        if (rr.failed()) any_doc_failed = true;

      report::RunSummary summary;
      summary.architecture = orch::to_string(arch);
      summary.model = model;
      summary.metrics = metrics::build_report(results, gold, {}, rc.bootstrap_n,
                                              derive_seed(rc.seed, "bootstrap"));
      summaries.push_back(summary);
      points.push_back(metrics::ParetoPoint{summary.metrics.mean_cost_usd,
                                            summary.metrics.field_scores.f1,
                                            summary.architecture + "/" + slug(model)});

      const std::string path = rc.output_dir + "/results_" + summary.architecture + "_" +
                               slug(model) + ".jsonl";
      report::write_results_file(path, summary, results);
      std::cout << summary.architecture << " x " << model
                << ": F1=" << summary.metrics.field_scores.f1
                << " cost=$" << summary.metrics.mean_cost_usd
                << " p50=" << summary.metrics.latency_p50 << "s -> " << path << "\n";
      if (cache) {
        auto st = cache->stats();
        std::cout << "  cache: " << st.hits << " hits / " << st.misses << " misses (rate "
                  << st.hit_rate() << ")\n";
      }
    }
  }

  report::write_report_table(rc.output_dir + "/report.tsv", summaries);
  report::write_pareto(rc.output_dir + "/pareto.tsv", points);
  for (const auto& line : report::key_finding_ratios(summaries)) std::cout << line << "\n";
  std::cout << "report: " << rc.output_dir << "/report.tsv\n";
  return any_doc_failed ? kExitRuntimeErrors : kExitOk;
}

int cmd_simulate(const CliOverrides& cli) {
  cfg::RunConfig rc = load_config(cli);
  if (rc.sim.anchors.empty()) throw cfg::ConfigError("config: simulate.anchors missing");
  if (rc.sim.latency_rows.empty()) throw cfg::ConfigError("config: simulate.latency_rows missing");
  sim::CalibModel calib;
  try {
    calib = sim::calibrate(rc.sim.anchors, rc.sim.latency_rows, rc.sim.calib);
  } catch (const std::invalid_argument& e) {
    throw cfg::ConfigError(e.what());
  }
  sim::SimLoadSpec base;
  base.cluster_slots = rc.sim.cluster_slots;
  base.duration_hours = rc.sim.duration_hours;
  base.warmup_hours = rc.sim.warmup_hours;
  base.deadline = rc.sim.deadline;
  base.seed = derive_seed(rc.seed, "sim");
  auto rows = sim::sweep(rc.sim.loads, rc.sim.architectures, calib, base);
  fs::create_directories(rc.output_dir);
  report::write_sim_curve(rc.output_dir + "/sim_curve.tsv", rows);
  for (const auto& r : rows)
    std::cout << orch::to_string(r.arch) << " @ " << r.load
              << " docs/day: F1=" << r.report.effective_f1
              << " trunc=" << r.report.truncation_rate << " p50=" << r.report.latency_p50
              << "s\n";
  std::cout << "curves: " << rc.output_dir << "/sim_curve.tsv\n";
  return kExitOk;
}

int cmd_report(const std::vector<std::string>& inputs, const std::string& out_dir) {
  if (inputs.empty()) throw cfg::ConfigError("report: need at least one results file");
  std::vector<report::RunSummary> summaries;
  std::vector<metrics::ParetoPoint> points;
  for (const auto& path : inputs) {
    auto parsed = report::parse_results_file(path);
    summaries.push_back(parsed.summary);
    points.push_back(metrics::ParetoPoint{parsed.summary.metrics.mean_cost_usd,
                                          parsed.summary.metrics.field_scores.f1,
                                          parsed.summary.architecture + "/" +
                                              slug(parsed.summary.model)});
  }
  fs::create_directories(out_dir);
  report::write_report_table(out_dir + "/report.tsv", summaries);
  report::write_pareto(out_dir + "/pareto.tsv", points);
  const auto frontier = metrics::pareto_frontier(points);
  std::cout << "frontier members (" << frontier.size() << "):\n";
  for (const auto& p : frontier)
    std::cout << "  " << p.label << " cost=$" << p.cost << " f1=" << p.f1 << "\n";
  for (const auto& line : report::key_finding_ratios(summaries)) std::cout << line << "\n";
  std::cout << "report: " << out_dir << "/report.tsv\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multi-agent extraction benchmark for financial filings"};
  app.require_subcommand(1);

  CliOverrides cli;
  std::vector<std::string> report_inputs;
  std::string report_out = "out";

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", cli.config_path, "run configuration file (JSON)");
    sub->add_option("--seed", cli.seed, "master seed (overrides config)");
    sub->add_option("--workers", cli.workers, "document-level worker count");
    sub->add_option("--out", cli.out_dir, "output directory (overrides config)");
  };

  auto* corpus_cmd = app.add_subcommand("corpus", "corpus utilities");
  auto* gen_cmd = corpus_cmd->add_subcommand("gen", "generate a synthetic corpus");
  add_common(gen_cmd);
  auto* bench_cmd = app.add_subcommand("bench", "run the benchmark and emit reports");
  add_common(bench_cmd);
  auto* sim_cmd = app.add_subcommand("simulate", "run the load simulator sweep");
  add_common(sim_cmd);
  auto* report_cmd = app.add_subcommand("report", "merge results files into comparison tables");
  report_cmd->add_option("inputs", report_inputs, "results files")->required();
  report_cmd->add_option("--out", report_out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfigError;
  }

  try {
    if (gen_cmd->parsed()) return cmd_corpus_gen(cli);
    if (bench_cmd->parsed()) return cmd_bench(cli);
    if (sim_cmd->parsed()) return cmd_simulate(cli);
    if (report_cmd->parsed()) return cmd_report(report_inputs, report_out);
    std::cerr << "error: no subcommand given\n";
    return kExitConfigError;
  } catch (const cfg::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const corpus::CorpusError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntimeErrors;
  }
}
