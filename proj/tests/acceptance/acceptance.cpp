// Acceptance checks. One PASS/FAIL line per criterion, details indented below
// it. Exit status is the number of failed criteria unless --exit-zero is
// given.

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstring>
#include <functional>
#include <iomanip>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <thread>

#include "../support/lattice_oracle.hpp"
#include "../support/program_gen.hpp"
#include "staleguard/experiments.hpp"
#include "staleguard/harness.hpp"
#include "staleguard/triggers.hpp"

#if defined(__linux__)
#include <linux/perf_event.h>
#include <sys/ioctl.h>
#include <sys/syscall.h>
#include <unistd.h>
#endif

using namespace staleguard;
using Clock = std::chrono::steady_clock;

namespace {

// ---- pinned tolerances ------------------------------------------------------

constexpr double kTransparencyBudgetS = 60.0;
constexpr int kRandomPrograms = 200;
constexpr int kCallsPerProgram = 12;

constexpr std::uint64_t kDetectP = 500'000;
constexpr std::uint32_t kDetectT = 20;
constexpr std::uint32_t kDetectC = 100;

constexpr double kMinSpeedup = 1.2;
constexpr double kMaxCeilingRatio = 1.25;
constexpr double kImproveBudgetS = 120.0;

constexpr double kMaxOverheadAt1M = 0.10;
// Allowed increase of the mean slowdown from one period to the next larger
// one. Timing on a shared host jitters by several percent between runs; the
// sampler's own cost at these periods is far below that.
constexpr double kMonotoneNoise = 0.02;

constexpr std::uint64_t kThresholdP = 100'000;
constexpr std::uint32_t kLowT = 10, kHighT = 75;
constexpr std::uint64_t kMaxWindowDeopts = 3;
// Mean iteration time under the profiler relative to record-only.
constexpr double kMaxMeanTimeRatio = 2.0;

constexpr std::uint64_t kPmuP = 100'000;
constexpr double kPmuCountTolerance = 0.20;
constexpr auto kBlockingRead = std::chrono::seconds(2);

const std::filesystem::path kSuite = STALEGUARD_SUITE_DIR;
const std::vector<std::string> kProfilerBenchmarks = {"profiler_microbenchmark", "profiler_rsa", "profiler_shared"};

// ---- reporting --------------------------------------------------------------

int g_failed = 0;
int g_total = 0;

void verdict(const std::string& name, bool pass, const std::string& detail, double seconds) {
  ++g_total;
  if (!pass) ++g_failed;
  std::cout << (pass ? "PASS " : "FAIL ") << name << " (" << std::fixed << std::setprecision(1) << seconds
            << " s)\n";
  std::istringstream in(detail);
  for (std::string line; std::getline(in, line);) std::cout << "    " << line << '\n';
  std::cout.flush();
}

void criterion(const std::string& name, const std::function<bool(std::ostream&)>& body) {
  const auto t0 = Clock::now();
  std::ostringstream detail;
  bool pass = false;
  try {
    pass = body(detail);
  } catch (const std::exception& e) {
    detail << "exception: " << e.what() << '\n';
  }
  verdict(name, pass, detail.str(), std::chrono::duration<double>(Clock::now() - t0).count());
}

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

// ---- transparency -----------------------------------------------------------

std::vector<std::string> run_calls(const LoadedProgram& p, VmOptions o, int calls, std::uint64_t* deopts) {
  std::vector<std::string> out;
  Vm vm(p.module, o);
  for (const auto& [k, v] : p.bindings) vm.set_global(k, v);
  try {
    vm.run();
  } catch (const std::exception& e) {
    out.push_back(std::string("error: ") + e.what());
    return out;
  }
  for (int i = 0; i < calls; ++i) {
    try {
      out.push_back(vm.call(*p.entry, {}).repr());
    } catch (const std::exception& e) {
      out.push_back(std::string("error: ") + e.what());
    }
  }
  for (const auto& line : vm.output()) out.push_back("out: " + line);
  if (deopts)
    for (FunctionId f = 0; f < p.module->functions.size(); ++f) *deopts += vm.state(f).deopts;
  return out;
}

bool transparency(std::ostream& d) {
  const auto t0 = Clock::now();
  VmOptions interp;
  interp.tier2 = false;
  VmOptions prof;
  prof.profiler = ProfilerMode::Full;
  prof.config.threshold = 2;
  prof.config.clear_interval = 4;

  staleguard::testing::ProgramGen gen(0x5eed);
  int mismatches = 0;
  std::uint64_t deopts = 0;
  for (int n = 0; n < kRandomPrograms; ++n) {
    LoadedProgram p = load_source("gen" + std::to_string(n), gen.generate());
    auto want = run_calls(p, interp, kCallsPerProgram, nullptr);
    prof.config.period = 101 + static_cast<std::uint64_t>(n);
    if (run_calls(p, VmOptions{}, kCallsPerProgram, &deopts) != want ||
        run_calls(p, prof, kCallsPerProgram, &deopts) != want) {
      if (++mismatches <= 3) d << "mismatch in random program " << n << '\n';
    }
  }
  int bench_mismatch = 0;
  for (const auto& file : suite_files(kSuite)) {
    LoadedProgram p = load_program(file);
    auto want = run_calls(p, interp, 3, nullptr);
    prof.config.period = 50'000;
    if (run_calls(p, prof, 3, &deopts) != want) {
      ++bench_mismatch;
      d << "mismatch in " << file.stem().string() << '\n';
    }
  }
  const double s = since(t0);
  d << kRandomPrograms << " random programs, " << suite_files(kSuite).size() << " benchmarks, " << deopts
    << " deopts exercised, " << mismatches + bench_mismatch << " mismatches, budget " << kTransparencyBudgetS
    << " s\n";
  return mismatches == 0 && bench_mismatch == 0 && deopts > 0 && s < kTransparencyBudgetS;
}

// ---- lattice ----------------------------------------------------------------

bool lattice(std::ostream& d) {
  const auto all = oracle::all_elements();
  std::uint64_t checks = 0, failures = 0;
  auto expect = [&](bool ok) {
    ++checks;
    failures += !ok;
  };
  const FeedbackType bot = FeedbackType::bottom();
  for (const auto& a : all) {
    expect(merge(a, a) == a);
    expect(merge(bot, a) == a && merge(a, bot) == a);
    for (const auto& b : all) {
      const FeedbackType ab = merge(a, b);
      expect(ab == merge(b, a));
      expect(ab == oracle::merge(a, b));
      if (a.is_partial()) {
        // a is narrower than b exactly when merging a into b changes nothing
        const bool narrower = compare(a, b).verdict == Verdict::Narrower;
        expect(narrower == (a != b && merge(a, b) == b));
        expect(static_cast<int>(compare(a, b).verdict) == static_cast<int>(oracle::verdict(a, b)));
      }
      for (const auto& c : all) expect(merge(merge(a, b), c) == merge(a, merge(b, c)));
    }
  }
  d << all.size() << " elements, " << checks << " checks, " << failures << " failures\n";
  return failures == 0;
}

// ---- stale-feedback detection -----------------------------------------------

struct DetectRun {
  std::uint64_t recompiles = 0;
  std::uint64_t post_deopts = 0;
  std::uint64_t latency = 0;
  std::vector<std::string> log;
};

DetectRun detect_once() {
  BenchmarkSpec s;
  s.source = kSuite / "profiler_microbenchmark.mdyn";
  s.iterations = 15;
  s.discard = 5;
  s.vm.profiler = ProfilerMode::Full;
  s.vm.config.period = kDetectP;
  s.vm.config.threshold = kDetectT;
  s.vm.config.clear_interval = kDetectC;
  BenchmarkResult r = run_benchmark(s);
  DetectRun out;
  bool seen = false;
  for (const auto& e : r.events) {
    out.log.push_back(EventLog::format(e, *r.module));
    if (e.kind == EventKind::Recompile) {
      if (!seen) out.latency = e.unit - r.setup_units;
      seen = true;
      ++out.recompiles;
    }
    if (e.kind == EventKind::Deopt && seen) ++out.post_deopts;
  }
  if (!seen) out.latency = UINT64_MAX;
  return out;
}

bool detection(std::ostream& d) {
  DetectRun a = detect_once();
  DetectRun b = detect_once();
  const std::uint64_t bound = (kDetectC + kDetectT) * kDetectP;
  d << "recompiles " << a.recompiles << ", deopts after recompile " << a.post_deopts << ", detected "
    << a.latency << " units after the phase change (bound " << bound << ")\n";
  d << "second run " << (a.log == b.log ? "identical" : "DIFFERENT") << '\n';
  return a.recompiles == 1 && a.post_deopts == 0 && a.latency <= bound && a.log == b.log;
}

// ---- convergence speedups ---------------------------------------------------

bool improve(std::ostream& d) {
  const auto t0 = Clock::now();
  ExperimentOptions o;
  o.suite_dir = kSuite;
  o.benchmarks = kProfilerBenchmarks;
  o.config.period = 500'000;
  o.config.threshold = 20;
  ImproveReport r = improve_experiment(o);
  print(d, r);
  bool ok = r.rows.size() == kProfilerBenchmarks.size();
  for (const auto& row : r.rows) {
    const bool fast = row.speedup >= kMinSpeedup;
    const bool near = row.ceiling_ratio && *row.ceiling_ratio <= kMaxCeilingRatio;
    if (!fast || !near)
      d << row.benchmark << ": " << (fast ? "" : "speedup below 1.2x ") << (near ? "" : "not within 25% of clean")
        << '\n';
    ok = ok && fast && near;
  }
  const double s = since(t0);
  d << "elapsed " << std::fixed << std::setprecision(1) << s << " s (budget " << kImproveBudgetS << " s)\n";
  return ok && s < kImproveBudgetS;
}

// ---- overhead, neutrality ---------------------------------------------------

std::optional<OverheadReport> g_overhead;

const OverheadReport& overhead_report() {
  if (!g_overhead) {
    ExperimentOptions o;
    o.suite_dir = kSuite;
    o.rounds = 2;
    g_overhead = overhead_experiment(o);
  }
  return *g_overhead;
}

bool neutrality(std::ostream& d) {
  const auto& r = overhead_report();
  std::set<std::string> benches;
  for (const auto& row : r.rows) {
    benches.insert(row.benchmark);
    if (!row.outputs_equal) d << "output differs: " << row.benchmark << " P=" << row.period << '\n';
  }
  d << benches.size() << " benchmarks x " << r.mean_slowdown.size() << " periods, outputs "
    << (r.all_outputs_equal ? "identical" : "DIFFER") << ", profiler touches with profiler off: " << r.off_touches
    << '\n';
  return r.all_outputs_equal && r.off_touches == 0 && benches.size() == suite_files(kSuite).size();
}

bool overhead(std::ostream& d) {
  const auto& r = overhead_report();
  print(d, r);
  bool monotone = true;
  std::optional<double> prev;
  for (const auto& [p, slow] : r.mean_slowdown) {
    if (prev && slow > *prev + kMonotoneNoise) monotone = false;
    prev = slow;
  }
  const double at1m = r.mean_slowdown.count(1'000'000) ? r.mean_slowdown.at(1'000'000) : 1.0;
  d << "monotone within " << kMonotoneNoise * 100 << " points: " << (monotone ? "yes" : "no")
    << "; slowdown at P=1M " << std::fixed << std::setprecision(2) << at1m * 100 << "% (limit " << kMaxOverheadAt1M * 100
    << "%)\n";
  return monotone && at1m <= kMaxOverheadAt1M;
}

// ---- threshold trend --------------------------------------------------------

bool threshold(std::ostream& d) {
  ExperimentOptions o;
  o.suite_dir = kSuite;
  o.benchmarks = kProfilerBenchmarks;
  ThresholdReport r = threshold_experiment(o, {kLowT, kHighT}, {kThresholdP});
  print(d, r);
  bool ok = true;
  for (const auto& b : kProfilerBenchmarks) {
    const ThresholdRow* lo = r.find(b, kThresholdP, kLowT);
    const ThresholdRow* hi = r.find(b, kThresholdP, kHighT);
    if (!lo || !hi) return false;
    if (lo->cycles < hi->cycles) {
      d << b << ": more cycles at T=" << kHighT << " than at T=" << kLowT << '\n';
      ok = false;
    }
    for (const ThresholdRow* row : {lo, hi}) {
      if (row->max_window_deopts > kMaxWindowDeopts) {
        d << b << " T=" << row->threshold << ": " << row->max_window_deopts << " deopts in one window\n";
        ok = false;
      }
      if (row->mean_ms > kMaxMeanTimeRatio * row->reference_ms) {
        d << b << " T=" << row->threshold << ": mean iteration time unbounded\n";
        ok = false;
      }
    }
  }
  return ok;
}

// ---- impact estimation ------------------------------------------------------

bool impact(std::ostream& d) {
  ExperimentOptions o;
  o.suite_dir = kSuite;
  o.benchmarks = {"pollution", "lcg", "sort", "matmul", "sieve", "nbody"};
  o.defines = {{"VECTOR_PHASES", "FALSE"}};
  ImpactReport r = impact_experiment(o);
  std::ostringstream table;
  print(table, r);
  d << table.str();
  bool ok = r.rows.size() == o.benchmarks.size();
  for (const auto& row : r.rows) {
    if (row.benchmark == "pollution") {
      if (row.stable.narrower_optimizable < 1) {
        d << "pollution: no narrower+optimizable slot in the stable phase\n";
        ok = false;
      }
    } else if (row.under_speculation()) {
      d << row.benchmark << ": monomorphic benchmark reports under-speculation\n";
      ok = false;
    }
  }
  const std::string header = table.str().substr(0, table.str().find('\n', table.str().find('\n') + 1));
  for (const char* col : {"narrower", "changed", "optimizable", "warmup", "stable"})
    if (header.find(col) == std::string::npos) {
      d << "table lacks column " << col << '\n';
      ok = false;
    }
  return ok;
}

// ---- PMU --------------------------------------------------------------------

#if defined(__linux__)
// Counts user-mode instructions of the calling thread.
class InstructionCounter {
 public:
  InstructionCounter() {
    perf_event_attr pe{};
    pe.size = sizeof(pe);
    pe.type = PERF_TYPE_HARDWARE;
    pe.config = PERF_COUNT_HW_INSTRUCTIONS;
    pe.exclude_kernel = 1;
    pe.exclude_hv = 1;
    fd_ = static_cast<int>(syscall(SYS_perf_event_open, &pe, 0, -1, -1, 0));
  }
  ~InstructionCounter() {
    if (fd_ >= 0) close(fd_);
  }
  bool ok() const { return fd_ >= 0; }
  std::uint64_t read_count() const {
    std::uint64_t v = 0;
    return ::read(fd_, &v, sizeof v) == sizeof v ? v : 0;
  }

 private:
  int fd_ = -1;
};
#endif

bool pmu(std::ostream& d) {
  const char* spin = "spin <- function(n) { s <- 0\n for (i in 1:n) s <- s + 1\n s }\n";
  VmOptions o;
  o.profiler = ProfilerMode::RecordOnly;
  o.config.backend = TriggerBackend::Pmu;
  o.config.period = kPmuP;
  auto p = load_source("spin", spin);

#if defined(__linux__)
  InstructionCounter counter;
  const std::uint64_t before_signals = delivered_signals();
  const std::uint64_t before_instr = counter.ok() ? counter.read_count() : 0;
#endif
  Vm vm(p.module, o);
  vm.run();

  if (vm.backend() != TriggerBackend::Pmu) {
    // Host without counter access: the VM must fall back and keep working.
    vm.call("spin", {Value::integer(2'000'000)});
    const std::uint64_t expect = vm.units() / kPmuP;
    d << "pmu unavailable (" << vm.backend_warning() << "); degraded to virtual counter\n";
    d << "virtual triggers " << vm.sampler_stats().triggers << " for " << vm.units() << " units\n";
    return vm.backend() == TriggerBackend::Virtual && !vm.backend_warning().empty() &&
           vm.sampler_stats().triggers == expect;
  }

#if defined(__linux__)
  // Syscall safety: a helper thread blocks in read() on a pipe while the VM
  // spins and the counter overflows deliver signals to the process.
  int fds[2];
  if (pipe(fds) != 0) throw std::runtime_error("pipe failed");
  std::atomic<int> interrupted{0};
  std::atomic<bool> read_ok{false};
  std::thread reader([&] {
    char c;
    for (;;) {
      ssize_t n = ::read(fds[0], &c, 1);
      if (n == 1) {
        read_ok = true;
        return;
      }
      if (n < 0 && errno == EINTR) {
        ++interrupted;
        continue;
      }
      return;
    }
  });
  const auto end = Clock::now() + kBlockingRead;
  while (Clock::now() < end) vm.call("spin", {Value::integer(200'000)});
  char c = 'x';
  if (::write(fds[1], &c, 1) != 1) throw std::runtime_error("pipe write failed");
  reader.join();
  close(fds[0]);
  close(fds[1]);

  const std::uint64_t instr = counter.ok() ? counter.read_count() - before_instr : 0;
  const std::uint64_t signals = delivered_signals() - before_signals;
  const double expect = static_cast<double>(instr) / static_cast<double>(kPmuP);
  const bool count_ok =
      counter.ok() && std::abs(static_cast<double>(signals) - expect) <= kPmuCountTolerance * expect;
  d << "interrupted reads " << interrupted.load() << ", read completed " << (read_ok ? "yes" : "no") << '\n';
  d << "signals " << signals << " for " << instr << " instructions (expected " << std::fixed << std::setprecision(0) << expect
    << " +-" << kPmuCountTolerance * 100 << "%)\n";
  return interrupted == 0 && read_ok && count_ok;
#else
  return false;
#endif
}

}  // namespace

int main(int argc, char** argv) {
  bool exit_zero = false;
  for (int i = 1; i < argc; ++i)
    if (std::strcmp(argv[i], "--exit-zero") == 0) exit_zero = true;

  criterion("semantic transparency: tier 2 equals tier 1 on random programs and the suite", transparency);
  criterion("lattice laws hold exhaustively", lattice);
  criterion("microbenchmark: one recompile, no deopt after it, detected within (C+T)*P", detection);
  criterion("convergence: >=1.2x over polluted and within 25% of clean", improve);
  criterion("record-only neutrality: identical outputs, zero touches when off", neutrality);
  criterion("overhead: monotone in P and <=10% at P=1M", overhead);
  criterion("threshold: cycles(T=10) >= cycles(T=75), <=3 deopts per window", threshold);
  criterion("impact estimation: pollution narrower+optimizable, monomorphic zero", impact);
  criterion("pmu backend: syscall safety and trigger rate, or clean fallback", pmu);

  std::cout << (g_total - g_failed) << "/" << g_total << " criteria passed\n";
  return exit_zero ? 0 : g_failed;
}
