#include <benchmark/benchmark.h>

#include "staleguard/harness.hpp"
#include "staleguard/profiler.hpp"

using namespace staleguard;

namespace {

constexpr const char* kLoop = R"(
f <- function(n) {
  s <- 0L
  for (i in 1:n) s <- (s + i) %% 1000L
  s
}
)";

void run_loop(benchmark::State& state, bool tier2, ProfilerMode mode) {
  auto prog = load_source("loop", kLoop);
  VmOptions o;
  o.tier2 = tier2;
  o.profiler = mode;
  Vm vm(prog.module, o);
  vm.run();
  for (int i = 0; i < 12; ++i) vm.call("f", {Value::integer(10)});
  const std::int32_t n = static_cast<std::int32_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(vm.call("f", {Value::integer(n)}));
  state.SetItemsProcessed(state.iterations() * n);
}

void BM_Tier1Loop(benchmark::State& s) { run_loop(s, false, ProfilerMode::Off); }
void BM_Tier2Loop(benchmark::State& s) { run_loop(s, true, ProfilerMode::Off); }
void BM_Tier2LoopRecordOnly(benchmark::State& s) { run_loop(s, true, ProfilerMode::RecordOnly); }
BENCHMARK(BM_Tier1Loop)->Arg(100000);
BENCHMARK(BM_Tier2Loop)->Arg(100000);
BENCHMARK(BM_Tier2LoopRecordOnly)->Arg(100000);

void BM_FeedbackMerge(benchmark::State& state) {
  const Value vals[] = {Value::integer(1), Value::dbl(2.0), Value::logical(true)};
  FeedbackType t;
  std::size_t i = 0;
  for (auto _ : state) {
    t = merge(t, type_of(vals[i++ % 3]));
    benchmark::DoNotOptimize(t);
    if (t.is_top()) t = FeedbackType::bottom();
  }
}
BENCHMARK(BM_FeedbackMerge);

// Cost of one profiler interruption landing in a compiled frame.
void BM_SamplerHit(benchmark::State& state) {
  auto prog = load_source("hit", "g <- function(x) x + x + x + x\n");
  Vm vm(prog.module);
  vm.run();
  auto fn = *prog.module->find_function("g");
  for (int i = 0; i < 11; ++i) vm.call(fn, {Value::integer(i)});
  auto cf = vm.state(fn).compiled;
  std::vector<Value> slots(cf->n_slots + 1, Value::integer(3));
  Activation act{fn, cf.get(), slots.data()};
  Sampler sampler;
  for (auto _ : state) benchmark::DoNotOptimize(sampler.on_trigger({&act, 1}, nullptr, 0));
}
BENCHMARK(BM_SamplerHit);

}  // namespace

BENCHMARK_MAIN();
