#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "staleguard/vm.hpp"

namespace staleguard {

// MiniDyn literal as accepted by `# default NAME <- literal` pragmas and
// --define: TRUE/FALSE/T/F, integers with an L suffix, doubles, optional sign.
Value parse_literal(std::string_view text);

struct LoadedProgram {
  std::string name;
  std::shared_ptr<const Module> module;
  // Host bindings: pragma defaults with --define overrides applied.
  std::vector<std::pair<std::string, Value>> bindings;
  // Zero-argument `execute` function. When present the top level runs once
  // as setup and each iteration calls execute(); otherwise each iteration
  // re-runs the top level with fresh globals.
  std::optional<FunctionId> entry;
};

using Defines = std::map<std::string, std::string>;

LoadedProgram load_source(std::string name, const std::string& source, const Defines& defines = {});
LoadedProgram load_program(const std::filesystem::path& file, const Defines& defines = {});

// Sorted .mdyn files in a directory.
std::vector<std::filesystem::path> suite_files(const std::filesystem::path& dir);

struct BenchmarkSpec {
  std::string name;  // defaults to the file stem
  std::filesystem::path source;
  std::uint32_t iterations = 15;
  std::uint32_t discard = 5;
  VmOptions vm;
  Defines defines;
  // Outliers are iterations slower than 1.10x this median; defaults to the
  // run's own median.
  std::optional<double> outlier_reference_ms;
};

struct RunRecord {
  std::string benchmark;
  std::uint32_t iteration = 0;
  double wall_ms = 0.0;
  std::uint64_t units = 0;
  std::uint64_t recompiles = 0;
  std::uint64_t deopts = 0;
  bool outlier = false;
  std::uint64_t tierups = 0;
  std::string result;  // repr of the iteration's value
};

struct BenchmarkResult {
  std::string name;
  std::shared_ptr<const Module> module;
  std::vector<RunRecord> records;  // every iteration, warmup included
  std::uint32_t discard = 0;
  std::uint64_t setup_units = 0;   // units spent in the setup run
  std::vector<Event> events;
  std::vector<std::string> output;
  SamplerStats sampler;
  TriggerBackend backend = TriggerBackend::Virtual;
  std::string backend_warning;

  std::span<const RunRecord> aggregated() const;
  double mean_ms() const;
  double median_ms() const;
  std::uint64_t outliers() const;
};

using IterationHook = std::function<void(Vm&, std::uint32_t iteration)>;

// One benchmark run advanced an iteration at a time, so several runs can be
// interleaved and measured under the same machine conditions.
class BenchmarkRun {
 public:
  explicit BenchmarkRun(const BenchmarkSpec& spec);
  ~BenchmarkRun();
  BenchmarkRun(BenchmarkRun&&) noexcept;

  bool done() const;
  const RunRecord& step();
  Vm& vm();
  // Marks outliers and collects events and output. Call once.
  BenchmarkResult finish();

 private:
  struct State;
  std::unique_ptr<State> s_;
};

// Throws std::runtime_error naming the benchmark and iteration when the
// program fails.
BenchmarkResult run_benchmark(const BenchmarkSpec& spec, const IterationHook& after_iteration = {});

double median(std::vector<double> xs);
inline bool is_outlier(double ms, double reference_median) { return ms > 1.10 * reference_median; }

inline constexpr const char* kCsvHeader = "benchmark,iteration,wall_ms,units,recompiles,deopts,outlier";
void write_csv(std::ostream& os, std::span<const BenchmarkResult> results, bool header = true);

}  // namespace staleguard
