// staleguard: run MiniDyn programs, benchmark suites and the profiler
// experiments.

#include <fstream>
#include <iostream>
#include <map>

#include <CLI11.hpp>

#include "staleguard/experiments.hpp"
#include "staleguard/harness.hpp"

using namespace staleguard;

namespace {

#ifndef STALEGUARD_DEFAULT_SUITE
#define STALEGUARD_DEFAULT_SUITE "benchmarks/suite"
#endif

const std::map<std::string, ProfilerMode> kModes = {
    {"off", ProfilerMode::Off}, {"record-only", ProfilerMode::RecordOnly}, {"full", ProfilerMode::Full}};
const std::map<std::string, TriggerBackend> kBackends = {
    {"virtual", TriggerBackend::Virtual}, {"timer", TriggerBackend::Timer}, {"pmu", TriggerBackend::Pmu}};

struct Common {
  ProfilerConfig config;
  ProfilerMode mode = ProfilerMode::Off;
  std::vector<std::string> defines;
  std::uint32_t iterations = 15;
  std::uint32_t discard = 5;

  void add_profiler(CLI::App* app, const std::string& mode_flag) {
    app->add_option("--sample-period,--period", config.period, "Units between profiler triggers (P)");
    app->add_option("--threshold", config.threshold, "Samples before a slot is trusted (T)");
    app->add_option("--clear-interval", config.clear_interval, "Triggers per sample-clearing window (C)");
    // String options plus IsMember: the enums are uint8_t and CLI11 would
    // print their values as characters.
    app->add_option_function<std::string>(
           "--trigger", [this](const std::string& s) { config.backend = kBackends.at(s); }, "Trigger backend")
        ->transform(CLI::IsMember({"virtual", "timer", "pmu"}, CLI::ignore_case));
    app->add_option("--timer-interval-us", config.timer_interval_us, "Interval of the timer backend");
    if (!mode_flag.empty())
      app->add_option_function<std::string>(
             mode_flag, [this](const std::string& s) { mode = kModes.at(s); }, "Profiler mode")
          ->transform(CLI::IsMember({"off", "record-only", "full"}, CLI::ignore_case));
  }
  void add_defines(CLI::App* app) {
    app->add_option("-D,--define", defines, "Override a program default, NAME=VALUE");
  }
  Defines parsed_defines() const {
    Defines d;
    for (const auto& s : defines) {
      auto eq = s.find('=');
      if (eq == std::string::npos || eq == 0) throw CLI::ValidationError("--define", "expected NAME=VALUE: " + s);
      d[s.substr(0, eq)] = s.substr(eq + 1);
    }
    return d;
  }
};

void print_summary(const BenchmarkResult& r) {
  std::uint64_t rc = 0, dc = 0;
  for (const auto& rec : r.records) rc += rec.recompiles, dc += rec.deopts;
  std::cout << std::left << std::setw(28) << r.name << std::right << " mean " << std::setw(9) << std::fixed
            << std::setprecision(2) << r.mean_ms() << " ms  median " << std::setw(9) << r.median_ms()
            << " ms  recompiles " << rc << "  deopts " << dc << "  outliers " << r.outliers() << '\n';
  if (!r.backend_warning.empty()) std::cerr << "warning: " << r.backend_warning << '\n';
}

int cmd_run(const Common& c, const std::string& file, bool events, bool trace, const std::string& dump_fn,
            bool verbose) {
  BenchmarkSpec spec;
  spec.source = file;
  spec.iterations = c.iterations;
  spec.discard = 0;
  spec.defines = c.parsed_defines();
  spec.vm.profiler = c.mode;
  spec.vm.config = c.config;
  spec.vm.verbose_events = verbose;

  auto hook = [&](Vm& vm, std::uint32_t it) {
    if (it + 1 != spec.iterations) return;
    const Module& m = vm.module();
    if (trace)
      for (const auto& f : m.functions) {
        if (f.record_sites.empty()) continue;
        std::cout << "feedback " << f.name << ":\n" << feedback_listing(f, vm.feedback(f.id));
      }
    if (!dump_fn.empty()) {
      auto fn = m.find_function(dump_fn);
      if (!fn) throw std::runtime_error("no function named " + dump_fn);
      const auto& cf = vm.state(*fn).compiled;
      if (!cf)
        std::cout << dump_fn << ": not compiled\n";
      else
        std::cout << "slot map " << dump_fn << ":\n"
                  << (cf->profile.empty() ? std::string("(no mapped slots)\n") : slot_map_listing(*cf));
    }
  };
  BenchmarkResult r = run_benchmark(spec, hook);
  for (const auto& line : r.output) std::cout << line << '\n';
  std::cout << r.records.back().result << '\n';
  if (events)
    for (const auto& e : r.events) std::cout << EventLog::format(e, *r.module) << '\n';
  if (c.iterations > 1) print_summary(r);
  if (!r.backend_warning.empty()) std::cerr << "warning: " << r.backend_warning << '\n';
  return 0;
}

int cmd_bench(const Common& c, const std::string& dir, const std::string& csv, const std::vector<std::string>& only) {
  std::vector<BenchmarkResult> results;
  for (const auto& file : suite_files(dir)) {
    if (!only.empty() && std::find(only.begin(), only.end(), file.stem().string()) == only.end()) continue;
    BenchmarkSpec spec;
    spec.source = file;
    spec.iterations = c.iterations;
    spec.discard = c.discard;
    spec.defines = c.parsed_defines();
    spec.vm.profiler = c.mode;
    spec.vm.config = c.config;
    results.push_back(run_benchmark(spec));
    print_summary(results.back());
  }
  if (!csv.empty()) {
    std::ofstream out(csv);
    if (!out) throw std::runtime_error("cannot write " + csv);
    write_csv(out, results);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-tier MiniDyn VM with a sampling profiler for stale type feedback"};
  app.require_subcommand(1);

  Common run_opts;
  std::string run_file, dump_fn;
  bool events = false, trace = false, verbose = false;
  auto* run = app.add_subcommand("run", "Run one program");
  run->add_option("file", run_file, "MiniDyn source")->required()->check(CLI::ExistingFile);
  run_opts.add_profiler(run, "--profiler");
  run_opts.add_defines(run);
  run_opts.iterations = 1;
  run->add_option("--iterations", run_opts.iterations, "Iterations in one process")->check(CLI::Range(1u, 1000000u));
  run->add_flag("--events", events, "Print the event log");
  run->add_flag("--verbose-events", verbose, "Also log TRIGGER and SAMPLE events");
  run->add_flag("--trace-feedback", trace, "Print baseline feedback after the run");
  run->add_option("--dump-slot-map", dump_fn, "Print the slot map of a compiled function");

  Common bench_opts;
  std::string bench_dir, csv;
  std::vector<std::string> only;
  auto* bench = app.add_subcommand("bench", "Run a benchmark suite");
  bench->add_option("suite-dir", bench_dir, "Directory of .mdyn programs")->required()->check(CLI::ExistingDirectory);
  bench_opts.add_profiler(bench, "--mode");
  bench_opts.add_defines(bench);
  bench->add_option("--iterations", bench_opts.iterations, "Iterations per benchmark");
  bench->add_option("--discard", bench_opts.discard, "Warmup iterations excluded from aggregates");
  bench->add_option("--csv", csv, "Write per-iteration records");
  bench->add_option("--only", only, "Benchmark names to run");

  Common exp_opts;
  std::string which, suite = STALEGUARD_DEFAULT_SUITE;
  std::vector<std::string> exp_benchmarks;
  std::uint32_t rounds = 1;
  auto* exp = app.add_subcommand("experiment", "Run one of the profiler experiments");
  exp->add_option("name", which, "overhead | threshold | improve | impact")
      ->required()
      ->check(CLI::IsMember({"overhead", "threshold", "improve", "impact"}));
  exp->add_option("--suite", suite, "Benchmark directory")->check(CLI::ExistingDirectory);
  exp->add_option("--benchmarks", exp_benchmarks, "Benchmark names (default depends on the experiment)");
  exp_opts.add_profiler(exp, "");
  exp_opts.add_defines(exp);
  exp->add_option("--iterations", exp_opts.iterations, "Iterations per run");
  exp->add_option("--discard", exp_opts.discard, "Warmup iterations excluded from aggregates");
  exp->add_option("--rounds", rounds, "Interleaved repetitions (overhead)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(run_opts, run_file, events, trace, dump_fn, verbose);
    if (*bench) return cmd_bench(bench_opts, bench_dir, csv, only);

    ExperimentOptions eo;
    eo.suite_dir = suite;
    eo.benchmarks = exp_benchmarks;
    eo.iterations = exp_opts.iterations;
    eo.discard = exp_opts.discard;
    eo.defines = exp_opts.parsed_defines();
    eo.config = exp_opts.config;
    eo.rounds = rounds;
    eo.progress = &std::cerr;
    if (which == "overhead") print(std::cout, overhead_experiment(eo));
    if (which == "threshold") print(std::cout, threshold_experiment(eo));
    if (which == "improve") print(std::cout, improve_experiment(eo));
    if (which == "impact") print(std::cout, impact_experiment(eo));
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
