#include "finbench/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <queue>
#include <stdexcept>

#include "finbench/metrics.hpp"
#include "finbench/rng.hpp"

namespace finbench::sim {

using orch::Architecture;

const std::vector<ArchAnchors>& default_anchors() {
  static const std::vector<ArchAnchors> anchors = {
      {Architecture::Sequential,
       {{1000, 0.903}, {5000, 0.903}, {10000, 0.901}, {25000, 0.899}, {50000, 0.894}, {100000, 0.886}}},
      {Architecture::Parallel,
       {{1000, 0.914}, {5000, 0.914}, {10000, 0.913}, {25000, 0.911}, {50000, 0.906}, {100000, 0.898}}},
      {Architecture::Hierarchical,
       {{1000, 0.929}, {5000, 0.928}, {10000, 0.926}, {25000, 0.919}, {50000, 0.907}, {100000, 0.891}}},
      {Architecture::Reflexive,
       {{1000, 0.943}, {5000, 0.941}, {10000, 0.937}, {25000, 0.924}, {50000, 0.898}, {100000, 0.871}}},
  };
  return anchors;
}

const std::vector<LatencyRow>& default_latency_rows() {
  static const std::vector<LatencyRow> rows = {
      {Architecture::Sequential, 38.7, 62.4},
      {Architecture::Parallel, 21.3, 41.7},
      {Architecture::Hierarchical, 46.2, 78.3},
      {Architecture::Reflexive, 74.1, 148.7},
  };
  return rows;
}

const ArchCalib& CalibModel::of(Architecture a) const {
  auto it = archs.find(a);
  if (it == archs.end()) throw std::runtime_error("simulator: architecture not calibrated");
  return it->second;
}

namespace {

struct Structure {
  int division = 1;
  int mandatory = 1;
  int width = 1;
  int units = 0;
  int calls_per_unit = 0;
};

Structure structure_of(Architecture a) {
  switch (a) {
    case Architecture::Sequential: return {5, 5, 1, 0, 0};
    case Architecture::Parallel: return {3, 5, 3, 0, 0};
    case Architecture::Hierarchical: return {4, 5, 3, 2, 1};
    case Architecture::Reflexive: return {5, 3, 1, 3, 2};
  }
  return {};
}

}  // namespace

CalibModel calibrate(const std::vector<ArchAnchors>& anchors,
                     const std::vector<LatencyRow>& latency_rows, const CalibOptions& opts) {
  CalibModel model;
  for (const auto& row : latency_rows) {
    if (row.p95 <= row.p50)
      throw std::invalid_argument("calibrate: p95 must exceed p50 for " +
                                  std::string(orch::to_string(row.arch)));
    const ArchAnchors* anchor = nullptr;
    for (const auto& a : anchors)
      if (a.arch == row.arch) anchor = &a;
    if (!anchor || anchor->f1_by_load.size() < 2)
      throw std::invalid_argument("calibrate: need at least 2 load levels for " +
                                  std::string(orch::to_string(row.arch)));
    auto sorted = anchor->f1_by_load;
    std::sort(sorted.begin(), sorted.end());

    ArchCalib c;
    const Structure st = structure_of(row.arch);
    c.division_calls = st.division;
    c.mandatory_calls = st.mandatory;
    c.parallel_width = st.width;
    c.optional_units = st.units;
    c.calls_per_unit = st.calls_per_unit;
    // sigma from the pipeline quantile ratio, mu from p50 divided by the
    // median-document critical-path call count
    c.sigma = (std::log(row.p95) - std::log(row.p50)) / 1.645;
    c.mu = std::log(row.p50 / static_cast<double>(st.division));
    c.anchor_f1 = sorted.front().second;
    c.kill_floor_f1 = sorted.back().second;
    switch (row.arch) {
      case Architecture::Reflexive: c.iter_floor_f1 = opts.reflexive_iter_floor; break;
      case Architecture::Hierarchical: c.iter_floor_f1 = opts.hierarchical_iter_floor; break;
      default: c.iter_floor_f1 = c.anchor_f1; break;
    }
    c.default_deadline = opts.deadline_multiple * row.p95;
    model.archs[row.arch] = c;
  }
  return model;
}

namespace {

// stage sequence of one document: mandatory stages then optional units
struct StagePlan {
  // number of parallel calls per mandatory stage
  std::vector<int> mandatory_stages;
  int units = 0;
  int calls_per_unit = 0;
};

StagePlan plan_of(Architecture a, const ArchCalib& c) {
  StagePlan p;
  switch (a) {
    case Architecture::Sequential: p.mandatory_stages = {1, 1, 1, 1, 1}; break;
    case Architecture::Parallel: p.mandatory_stages = {1, 3, 1}; break;
    case Architecture::Hierarchical: p.mandatory_stages = {1, 3, 1}; break;
    case Architecture::Reflexive: p.mandatory_stages = {1, 1, 1}; break;
  }
  p.units = c.optional_units;
  p.calls_per_unit = c.calls_per_unit;
  return p;
}

struct Doc {
  int64_t id = 0;
  double arrival = 0.0;
  int stage = 0;            // index into mandatory stages, then units
  int stage_remaining = 0;  // calls outstanding in the current stage
  int unit = 0;             // completed optional units
  int unit_call = 0;        // call index within the current unit
  bool killed = false;
  bool truncated = false;
  bool done = false;
  double finish = 0.0;
  double wait_accum = 0.0;
  int64_t waits = 0;
  int call_seq = 0;  // per-document service-draw counter
};

struct PendingCall {
  int64_t doc = 0;
  double enqueued = 0.0;
};

struct Event {
  double time = 0.0;
  int64_t seq = 0;
  enum Kind { Arrival, Finish } kind = Arrival;
  int64_t doc = 0;
  bool operator>(const Event& o) const {
    if (time != o.time) return time > o.time;
    return seq > o.seq;
  }
};

}  // namespace

SimReport simulate(const SimLoadSpec& spec, Architecture arch, const CalibModel& calib) {
  const ArchCalib& c = calib.of(arch);
  const StagePlan plan = plan_of(arch, c);
  const double deadline = spec.deadline.value_or(c.default_deadline);
  const bool iterative = plan.units > 0;
  const double duration = spec.duration_hours * 3600.0;
  const double warmup = spec.warmup_hours * 3600.0;
  const double rate = spec.docs_per_day / 86400.0;
  const double mean_call = std::exp(c.mu + 0.5 * c.sigma * c.sigma);

  SimReport rep;
  rep.offered_docs_per_day = spec.docs_per_day;
  if (rate <= 0 || duration <= 0 || spec.cluster_slots <= 0) return rep;

  Rng arrivals_rng(derive_seed(spec.seed, "sim/arrivals/" + std::string(orch::to_string(arch)) +
                                              "/" + std::to_string(spec.docs_per_day)));

  std::vector<Doc> docs;
  std::priority_queue<Event, std::vector<Event>, std::greater<Event>> events;
  int64_t event_seq = 0;
  {
    double t = arrivals_rng.exponential(1.0 / rate);
    while (t < duration) {
      Doc d;
      d.id = static_cast<int64_t>(docs.size());
      d.arrival = t;
      docs.push_back(d);
      events.push(Event{t, ++event_seq, Event::Arrival, d.id});
      t += arrivals_rng.exponential(1.0 / rate);
    }
  }
  rep.arrivals = static_cast<int64_t>(docs.size());
  if (docs.empty()) return rep;

  int free_slots = spec.cluster_slots;
  std::deque<PendingCall> fifo;
  std::vector<double> sojourns;
  std::vector<double> f1s;
  int64_t truncated_or_killed = 0;
  int64_t scored = 0;

  auto draw_service = [&](Doc& d) {
    Rng rng(derive_seed(spec.seed, "sim/service/" + std::string(orch::to_string(arch)) + "/" +
                                       std::to_string(spec.docs_per_day) + "/d" +
                                       std::to_string(d.id) + "/c" + std::to_string(d.call_seq++)));
    return rng.lognormal(c.mu, c.sigma);
  };

  auto doc_f1 = [&](const Doc& d) {
    if (d.killed) return c.kill_floor_f1;
    if (plan.units == 0) return c.anchor_f1;
    return c.iter_floor_f1 +
           (c.anchor_f1 - c.iter_floor_f1) * static_cast<double>(d.unit) / plan.units;
  };

  auto finish_doc = [&](Doc& d, double now) {
    d.done = true;
    d.finish = now;
    ++rep.completed;
    if (d.killed) ++rep.killed;
    if (d.killed || d.truncated) ++truncated_or_killed;
    if (d.arrival >= warmup) {
      ++scored;
      sojourns.push_back(now - d.arrival);
      f1s.push_back(doc_f1(d));
      rep.mean_queue_wait += d.wait_accum;
    }
  };

  // stage bookkeeping: enqueue the next block of calls for a document
  std::function<void(Doc&, double)> advance = [&](Doc& d, double now) {
    if (d.stage < static_cast<int>(plan.mandatory_stages.size())) {
      d.stage_remaining = plan.mandatory_stages[static_cast<size_t>(d.stage)];
      for (int i = 0; i < d.stage_remaining; ++i) fifo.push_back(PendingCall{d.id, now});
      return;
    }
    // optional units
    if (d.unit >= plan.units) {
      finish_doc(d, now);
      return;
    }
    // skip remaining units when the projected finish exceeds the deadline
    const int remaining_calls = plan.calls_per_unit - d.unit_call;
    if (now + remaining_calls * mean_call > d.arrival + deadline) {
      d.truncated = true;
      finish_doc(d, now);
      return;
    }
    d.stage_remaining = 1;  // unit calls run serially
    fifo.push_back(PendingCall{d.id, now});
  };

  auto start_calls = [&](double now) {
    while (free_slots > 0 && !fifo.empty()) {
      PendingCall pc = fifo.front();
      fifo.pop_front();
      Doc& d = docs[static_cast<size_t>(pc.doc)];
      if (d.done) continue;
      d.wait_accum += now - pc.enqueued;
      ++d.waits;
      // overdue iterative documents abort at the next call boundary
      if (iterative && now > d.arrival + deadline) {
        d.killed = true;
        finish_doc(d, now);
        continue;
      }
      --free_slots;
      const double service = draw_service(d);
      events.push(Event{now + service, ++event_seq, Event::Finish, d.id});
    }
  };

  while (!events.empty()) {
    Event ev = events.top();
    if (ev.time > duration) break;
    events.pop();
    const double now = ev.time;
    Doc& d = docs[static_cast<size_t>(ev.doc)];
    if (ev.kind == Event::Arrival) {
      advance(d, now);
    } else {
      ++free_slots;
      if (!d.done) {
        if (d.stage < static_cast<int>(plan.mandatory_stages.size())) {
          if (--d.stage_remaining == 0) {
            ++d.stage;
            advance(d, now);
          }
        } else {
          if (++d.unit_call >= plan.calls_per_unit) {
            d.unit_call = 0;
            ++d.unit;
          }
          advance(d, now);
        }
      }
    }
    start_calls(now);
  }

  rep.in_flight = rep.arrivals - rep.completed - rep.rejected;
  if (scored > 0) {
    double sum = 0;
    for (double f : f1s) sum += f;
    rep.effective_f1 = sum / static_cast<double>(scored);
    rep.mean_queue_wait /= static_cast<double>(scored);
    rep.latency_p50 = metrics::percentile(sojourns, 50);
    rep.latency_p95 = metrics::percentile(sojourns, 95);
    const double window_days = (duration - warmup) / 86400.0;
    rep.achieved_docs_per_day = window_days > 0 ? static_cast<double>(scored) / window_days : 0;
  }
  if (rep.completed > 0)
    rep.truncation_rate =
        static_cast<double>(truncated_or_killed) / static_cast<double>(rep.completed);
  return rep;
}

std::vector<SweepRow> sweep(const std::vector<double>& loads,
                            const std::vector<Architecture>& archs, const CalibModel& calib,
                            const SimLoadSpec& base) {
  std::vector<SweepRow> rows;
  for (Architecture a : archs) {
    for (double load : loads) {
      SimLoadSpec spec = base;
      spec.docs_per_day = load;
      SweepRow row;
      row.load = load;
      row.arch = a;
      row.report = simulate(spec, a, calib);
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

}  // namespace finbench::sim
