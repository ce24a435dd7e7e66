#include "staleguard/experiments.hpp"

#include <algorithm>
#include <iomanip>
#include <sstream>
#include <unordered_map>

namespace staleguard {

namespace {

const std::vector<std::string> kProfilerBenchmarks = {"profiler_microbenchmark", "profiler_rsa",
                                                      "profiler_shared"};

std::vector<std::filesystem::path> select(const ExperimentOptions& opt, const std::vector<std::string>& defaults) {
  const std::vector<std::string>& names = opt.benchmarks.empty() ? defaults : opt.benchmarks;
  if (names.empty()) return suite_files(opt.suite_dir);
  std::vector<std::filesystem::path> out;
  for (const auto& n : names) {
    auto p = opt.suite_dir / (n + ".mdyn");
    if (!std::filesystem::exists(p)) throw std::runtime_error("no benchmark " + p.string());
    out.push_back(p);
  }
  return out;
}

BenchmarkSpec make_spec(const ExperimentOptions& opt, const std::filesystem::path& file, ProfilerMode mode) {
  BenchmarkSpec s;
  s.source = file;
  s.iterations = opt.iterations;
  s.discard = opt.discard;
  s.defines = opt.defines;
  s.vm.profiler = mode;
  s.vm.config = opt.config;
  return s;
}

void note(const ExperimentOptions& opt, const std::string& msg) {
  if (opt.progress) *opt.progress << msg << std::endl;
}

bool same_outputs(const BenchmarkResult& a, const BenchmarkResult& b) {
  if (a.output != b.output || a.records.size() != b.records.size()) return false;
  for (std::size_t i = 0; i < a.records.size(); ++i)
    if (a.records[i].result != b.records[i].result) return false;
  return true;
}

std::string fixed(double v, int prec = 2) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(prec) << v;
  return os.str();
}

}  // namespace

// ---- overhead -------------------------------------------------------------

OverheadReport overhead_experiment(const ExperimentOptions& opt, const std::vector<std::uint64_t>& periods) {
  OverheadReport rep;
  for (const auto& file : select(opt, {})) {
    // Off and every record-only period advance one iteration at a time in a
    // rotating order. Each recorded iteration is compared with the off
    // iteration run next to it, so slow phases of the machine hit both sides.
    const std::size_t n = periods.size() + 1;
    std::vector<std::vector<double>> wall(n), ratio(periods.size());
    std::vector<bool> equal(periods.size(), true);
    std::uint64_t touches = 0;
    std::string name;
    for (std::uint32_t round = 0; round < std::max(1u, opt.rounds); ++round) {
      std::vector<BenchmarkRun> runs;
      runs.emplace_back(make_spec(opt, file, ProfilerMode::Off));
      for (auto p : periods) {
        BenchmarkSpec rec = make_spec(opt, file, ProfilerMode::RecordOnly);
        rec.vm.config.period = p;
        runs.emplace_back(rec);
      }
      for (std::uint32_t it = 0; !runs[0].done(); ++it) {
        std::vector<double> ms(n);
        for (std::size_t k = 0; k < n; ++k) {
          const std::size_t j = (k + it) % n;
          ms[j] = runs[j].step().wall_ms;
        }
        touches = std::max(touches, runs[0].vm().profiler_touches());
        if (it < opt.discard) continue;
        for (std::size_t j = 0; j < n; ++j) wall[j].push_back(ms[j]);
        for (std::size_t i = 0; i < periods.size(); ++i) ratio[i].push_back(ms[i + 1] / ms[0]);
      }
      std::vector<BenchmarkResult> res;
      for (auto& r : runs) res.push_back(r.finish());
      for (std::size_t i = 0; i < periods.size(); ++i) equal[i] = equal[i] && same_outputs(res[0], res[i + 1]);
      name = res[0].name;
    }
    note(opt, "overhead " + name + " done");
    for (std::size_t i = 0; i < periods.size(); ++i) {
      OverheadRow row;
      row.benchmark = name;
      row.period = periods[i];
      row.off_ms = median(wall[0]);
      row.record_ms = median(wall[i + 1]);
      row.ratio = median(ratio[i]);
      row.outputs_equal = equal[i];
      row.off_touches = touches;
      rep.all_outputs_equal = rep.all_outputs_equal && equal[i];
      rep.off_touches += touches;
      rep.rows.push_back(row);
    }
  }
  for (auto p : periods) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& r : rep.rows)
      if (r.period == p) sum += r.ratio - 1.0, ++n;
    rep.mean_slowdown[p] = n ? sum / static_cast<double>(n) : 0.0;
  }
  return rep;
}

// ---- threshold ------------------------------------------------------------

CycleStats cycle_stats(const std::vector<Event>& events) {
  CycleStats s;
  std::unordered_map<FunctionId, bool> armed;
  std::unordered_map<FunctionId, std::uint64_t> window;
  for (const auto& e : events) {
    switch (e.kind) {
      case EventKind::Recompile: armed[e.fn] = true; break;
      case EventKind::Deopt:
        if (armed[e.fn]) ++s.cycles, armed[e.fn] = false;
        s.max_window_deopts = std::max(s.max_window_deopts, ++window[e.fn]);
        break;
      case EventKind::Clear: window.clear(); break;
      default: break;
    }
  }
  return s;
}

const ThresholdRow* ThresholdReport::find(const std::string& bench, std::uint64_t period,
                                          std::uint32_t threshold) const {
  for (const auto& r : rows)
    if (r.benchmark == bench && r.period == period && r.threshold == threshold) return &r;
  return nullptr;
}

ThresholdReport threshold_experiment(const ExperimentOptions& opt, const std::vector<std::uint32_t>& thresholds,
                                     const std::vector<std::uint64_t>& periods) {
  ThresholdReport rep;
  for (const auto& file : select(opt, kProfilerBenchmarks)) {
    for (auto p : periods) {
      // The record-only reference and every threshold run advance in lockstep.
      std::vector<BenchmarkRun> runs;
      BenchmarkSpec ref = make_spec(opt, file, ProfilerMode::RecordOnly);
      ref.vm.config.period = p;
      runs.emplace_back(ref);
      for (auto t : thresholds) {
        BenchmarkSpec s = make_spec(opt, file, ProfilerMode::Full);
        s.vm.config.period = p;
        s.vm.config.threshold = t;
        runs.emplace_back(s);
      }
      for (std::uint32_t it = 0; !runs[0].done(); ++it)
        for (std::size_t k = 0; k < runs.size(); ++k) runs[(k + it) % runs.size()].step();
      const double ref_ms = runs[0].finish().median_ms();
      for (std::size_t i = 0; i < thresholds.size(); ++i) {
        auto r = runs[i + 1].finish();
        // outliers against the reference median
        std::uint64_t outliers = 0;
        for (const auto& rec : r.aggregated()) outliers += is_outlier(rec.wall_ms, ref_ms);
        ThresholdRow row;
        row.benchmark = r.name;
        row.period = p;
        row.threshold = thresholds[i];
        row.reference_ms = ref_ms;
        row.mean_ms = r.mean_ms();
        row.outliers = outliers;
        for (const auto& rec : r.records) row.recompiles += rec.recompiles, row.deopts += rec.deopts;
        auto cs = cycle_stats(r.events);
        row.cycles = cs.cycles;
        row.max_window_deopts = cs.max_window_deopts;
        rep.rows.push_back(row);
      }
      note(opt, "threshold " + file.stem().string() + " P=" + std::to_string(p) + " done");
    }
  }
  return rep;
}

// ---- improve --------------------------------------------------------------

ImproveReport improve_experiment(const ExperimentOptions& opt) {
  ImproveReport rep;
  for (const auto& file : select(opt, kProfilerBenchmarks)) {
    ImproveRow row;
    row.benchmark = file.stem().string();
    const auto clean_file = file.parent_path() / (row.benchmark + "_clean.mdyn");
    const bool has_clean = std::filesystem::exists(clean_file);

    // Polluted (record-only), profiled (full) and clean (full) runs advance
    // in lockstep so the three medians see the same machine conditions.
    std::vector<BenchmarkRun> runs;
    runs.emplace_back(make_spec(opt, file, ProfilerMode::RecordOnly));
    runs.emplace_back(make_spec(opt, file, ProfilerMode::Full));
    if (has_clean) runs.emplace_back(make_spec(opt, clean_file, ProfilerMode::Full));
    for (std::uint32_t it = 0; !runs[0].done(); ++it)
      for (std::size_t k = 0; k < runs.size(); ++k) runs[(k + it) % runs.size()].step();
    std::vector<BenchmarkResult> res;
    for (auto& r : runs) res.push_back(r.finish());

    row.polluted_ms = res[0].median_ms();
    const BenchmarkResult& full = res[1];
    for (const auto& r : full.records)
      if (r.recompiles) {
        row.recompiles += r.recompiles;
        row.last_recompile_iteration = r.iteration;
      }
    const std::uint32_t first = std::max<std::uint32_t>(
        opt.discard, row.last_recompile_iteration ? *row.last_recompile_iteration + 1 : 0);
    std::vector<double> steady;
    for (const auto& r : full.records)
      if (r.iteration >= first) steady.push_back(r.wall_ms);
    row.steady_iterations = static_cast<std::uint32_t>(steady.size());
    row.profiled_ms = median(steady);
    row.speedup = row.profiled_ms > 0 ? row.polluted_ms / row.profiled_ms : 0.0;
    if (has_clean) {
      row.clean_ms = res[2].median_ms();
      row.ceiling_ratio = *row.clean_ms > 0 ? row.profiled_ms / *row.clean_ms : 0.0;
    }
    note(opt, "improve " + row.benchmark + " done");
    rep.rows.push_back(row);
  }
  return rep;
}

// ---- impact ---------------------------------------------------------------

std::uint32_t ImpactReport::with_under_speculation() const {
  return static_cast<std::uint32_t>(
      std::count_if(rows.begin(), rows.end(), [](const ImpactRow& r) { return r.under_speculation(); }));
}

ImpactReport impact_experiment(const ExperimentOptions& opt) {
  struct Seen {
    FeedbackType observed;
    FeedbackType compiled;
  };
  // (marker, slot) -> observation, one map per iteration
  using Bucket = std::map<std::pair<std::uint64_t, std::uint32_t>, Seen>;

  ImpactReport rep;
  for (const auto& file : select(opt, {})) {
    BenchmarkSpec s = make_spec(opt, file, ProfilerMode::RecordOnly);
    s.vm.impact = true;
    std::vector<Bucket> buckets;
    auto harvest = [&](Vm& vm, std::uint32_t) {
      Bucket b;
      for (const auto& cf : vm.all_compiled()) {
        for (auto& e : cf->full_profile) {
          if (e.count == 0) continue;
          Seen& seen = b[{cf->marker, e.slot}];
          seen.observed = merge(seen.observed, e.sampled);
          seen.compiled = e.compiled;
          e.sampled = FeedbackType{};
          e.count = 0;
        }
      }
      buckets.push_back(std::move(b));
    };
    auto res = run_benchmark(s, harvest);

    ImpactRow row;
    row.benchmark = res.name;
    for (const auto& r : res.records)
      if (r.tierups || r.recompiles) row.boundary = r.iteration;

    Bucket warm, stable;
    for (std::size_t it = 0; it < buckets.size(); ++it) {
      Bucket& dst = row.boundary && it <= *row.boundary ? warm : stable;
      for (const auto& [k, v] : buckets[it]) {
        Seen& d = dst[k];
        d.observed = merge(d.observed, v.observed);
        d.compiled = v.compiled;
      }
    }
    auto classify = [](const Bucket& b) {
      ImpactCounts c;
      for (const auto& [k, v] : b) {
        if (!v.observed.is_partial()) continue;
        Comparison cmp = compare(v.observed, v.compiled);
        if (cmp.verdict == Verdict::Equal) continue;
        if (cmp.verdict == Verdict::Narrower) ++c.narrower;
        if (cmp.verdict == Verdict::Changed) ++c.changed;
        if (cmp.optimizable) {
          ++c.optimizable;
          if (cmp.verdict == Verdict::Narrower) ++c.narrower_optimizable;
        }
      }
      return c;
    };
    row.warmup = classify(warm);
    row.stable = classify(stable);
    note(opt, "impact " + row.benchmark + " done");
    rep.rows.push_back(row);
  }
  return rep;
}

// ---- printing -------------------------------------------------------------

void print(std::ostream& os, const OverheadReport& r) {
  os << std::left << std::setw(28) << "benchmark" << std::right << std::setw(10) << "period" << std::setw(11)
     << "off ms" << std::setw(11) << "record ms" << std::setw(9) << "ratio" << "  same-output\n";
  for (const auto& row : r.rows)
    os << std::left << std::setw(28) << row.benchmark << std::right << std::setw(10) << row.period
       << std::setw(11) << fixed(row.off_ms) << std::setw(11) << fixed(row.record_ms) << std::setw(9)
       << fixed(row.ratio, 3) << "  " << (row.outputs_equal ? "yes" : "NO") << '\n';
  for (const auto& [p, s] : r.mean_slowdown)
    os << "mean slowdown at P=" << p << ": " << fixed(100.0 * s) << "%\n";
  os << "profiler-off touches: " << r.off_touches << '\n';
}

void print(std::ostream& os, const ThresholdReport& r) {
  os << std::left << std::setw(28) << "benchmark" << std::right << std::setw(10) << "period" << std::setw(5)
     << "T" << std::setw(10) << "ref ms" << std::setw(10) << "mean ms" << std::setw(9) << "outliers"
     << std::setw(11) << "recompiles" << std::setw(8) << "deopts" << std::setw(8) << "cycles" << '\n';
  for (const auto& row : r.rows)
    os << std::left << std::setw(28) << row.benchmark << std::right << std::setw(10) << row.period << std::setw(5)
       << row.threshold << std::setw(10) << fixed(row.reference_ms) << std::setw(10) << fixed(row.mean_ms)
       << std::setw(9) << row.outliers << std::setw(11) << row.recompiles << std::setw(8) << row.deopts
       << std::setw(8) << row.cycles << '\n';
}

void print(std::ostream& os, const ImproveReport& r) {
  os << std::left << std::setw(28) << "benchmark" << std::right << std::setw(12) << "polluted ms" << std::setw(12)
     << "profiled ms" << std::setw(10) << "clean ms" << std::setw(9) << "speedup" << std::setw(10) << "vs clean"
     << std::setw(11) << "recompiles" << '\n';
  for (const auto& row : r.rows)
    os << std::left << std::setw(28) << row.benchmark << std::right << std::setw(12) << fixed(row.polluted_ms)
       << std::setw(12) << fixed(row.profiled_ms) << std::setw(10)
       << (row.clean_ms ? fixed(*row.clean_ms) : std::string("-")) << std::setw(9) << fixed(row.speedup, 3)
       << std::setw(10) << (row.ceiling_ratio ? fixed(*row.ceiling_ratio, 3) : std::string("-"))
       << std::setw(11) << row.recompiles << '\n';
}

void print(std::ostream& os, const ImpactReport& r) {
  os << std::left << std::setw(28) << "" << std::right << std::setw(30) << "warmup" << std::setw(30) << "stable"
     << '\n';
  os << std::left << std::setw(28) << "benchmark";
  for (int i = 0; i < 2; ++i)
    os << std::right << std::setw(10) << "narrower" << std::setw(9) << "changed" << std::setw(11) << "optimizable";
  os << '\n';
  for (const auto& row : r.rows) {
    os << std::left << std::setw(28) << row.benchmark;
    for (const ImpactCounts* c : {&row.warmup, &row.stable})
      os << std::right << std::setw(10) << c->narrower << std::setw(9) << c->changed << std::setw(11)
         << c->optimizable;
    os << '\n';
  }
  os << "benchmarks with under-speculation: " << r.with_under_speculation() << " of " << r.rows.size() << '\n';
}

}  // namespace staleguard
