#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "staleguard/harness.hpp"

namespace staleguard {

struct ExperimentOptions {
  std::filesystem::path suite_dir;
  // File stems to run; empty selects the experiment's default set.
  std::vector<std::string> benchmarks;
  std::uint32_t iterations = 15;
  std::uint32_t discard = 5;
  // Applied to every benchmark that declares the name.
  Defines defines;
  // Base configuration; each experiment overrides the parameter it sweeps.
  ProfilerConfig config;
  // Overhead only: independent repetitions pooled into the paired ratios.
  std::uint32_t rounds = 1;
  std::ostream* progress = nullptr;
};

// ---- overhead -------------------------------------------------------------

struct OverheadRow {
  std::string benchmark;
  std::uint64_t period = 0;
  double off_ms = 0.0;
  double record_ms = 0.0;
  double ratio = 1.0;  // median of per-iteration record / off ratios
  bool outputs_equal = true;
  std::uint64_t off_touches = 0;
};

struct OverheadReport {
  std::vector<OverheadRow> rows;
  // Mean slowdown (ratio - 1) over benchmarks, per period.
  std::map<std::uint64_t, double> mean_slowdown;
  bool all_outputs_equal = true;
  std::uint64_t off_touches = 0;
};

OverheadReport overhead_experiment(const ExperimentOptions& opt,
                                   const std::vector<std::uint64_t>& periods = {100'000, 500'000, 1'000'000});

// ---- threshold ------------------------------------------------------------

struct ThresholdRow {
  std::string benchmark;
  std::uint64_t period = 0;
  std::uint32_t threshold = 0;
  double reference_ms = 0.0;  // record-only median
  double mean_ms = 0.0;
  std::uint64_t outliers = 0;
  std::uint64_t recompiles = 0;
  std::uint64_t deopts = 0;
  std::uint64_t cycles = 0;  // RECOMPILE followed by a DEOPT of the same function
  std::uint64_t max_window_deopts = 0;  // per function, between CLEAR events
};

struct ThresholdReport {
  std::vector<ThresholdRow> rows;
  const ThresholdRow* find(const std::string& bench, std::uint64_t period, std::uint32_t threshold) const;
};

ThresholdReport threshold_experiment(const ExperimentOptions& opt,
                                     const std::vector<std::uint32_t>& thresholds = {10, 20, 50, 75, 100},
                                     const std::vector<std::uint64_t>& periods = {100'000, 500'000, 1'000'000});

// Recompile-then-deopt cycles and the worst per-window deopt count of any
// function in an event stream.
struct CycleStats {
  std::uint64_t cycles = 0;
  std::uint64_t max_window_deopts = 0;
};
CycleStats cycle_stats(const std::vector<Event>& events);

// ---- improve --------------------------------------------------------------

struct ImproveRow {
  std::string benchmark;
  double polluted_ms = 0.0;  // record-only steady state
  double profiled_ms = 0.0;  // full mode, iterations after the last recompile
  std::optional<double> clean_ms;
  double speedup = 0.0;  // polluted / profiled
  std::optional<double> ceiling_ratio;  // profiled / clean
  std::uint64_t recompiles = 0;
  std::optional<std::uint32_t> last_recompile_iteration;
  std::uint32_t steady_iterations = 0;
};

struct ImproveReport {
  std::vector<ImproveRow> rows;
};

ImproveReport improve_experiment(const ExperimentOptions& opt);

// ---- impact ---------------------------------------------------------------

struct ImpactCounts {
  std::uint32_t narrower = 0;
  std::uint32_t changed = 0;
  std::uint32_t optimizable = 0;
  std::uint32_t narrower_optimizable = 0;
};

struct ImpactRow {
  std::string benchmark;
  ImpactCounts warmup;
  ImpactCounts stable;
  // Last iteration with a tier-up or recompile; later iterations are stable.
  std::optional<std::uint32_t> boundary;
  bool under_speculation() const { return warmup.narrower_optimizable + stable.narrower_optimizable > 0; }
};

struct ImpactReport {
  std::vector<ImpactRow> rows;
  std::uint32_t with_under_speculation() const;
};

// Runs with every value through a mapped slot recorded and recompilation
// disabled (record-only mode).
ImpactReport impact_experiment(const ExperimentOptions& opt);

// Plain-text tables.
void print(std::ostream& os, const OverheadReport& r);
void print(std::ostream& os, const ThresholdReport& r);
void print(std::ostream& os, const ImproveReport& r);
void print(std::ostream& os, const ImpactReport& r);

}  // namespace staleguard
