#include <gtest/gtest.h>

#include <chrono>
#include <thread>

#include "staleguard/harness.hpp"
#include "staleguard/triggers.hpp"

using namespace staleguard;

namespace {

constexpr const char* kSpin = "spin <- function(n) { s <- 0\n for (i in 1:n) s <- s + 1\n s }\n";

void burn_cpu(std::chrono::milliseconds d) {
  const auto end = std::chrono::steady_clock::now() + d;
  volatile double x = 0;
  while (std::chrono::steady_clock::now() < end)
    for (int i = 0; i < 10000; ++i) x = x + 1.0;
}

TEST(Pmu, RejectsShortPeriod) {
  EXPECT_THROW(make_pmu_trigger(9999), std::invalid_argument);
  EXPECT_THROW(make_pmu_trigger(0), std::invalid_argument);
}

// Either the counter opens or the VM falls back to the virtual counter and
// says why. Both are fine; silently doing neither is not.
TEST(Pmu, DegradesToVirtualWithWarning) {
  VmOptions o;
  o.profiler = ProfilerMode::RecordOnly;
  o.config.backend = TriggerBackend::Pmu;
  o.config.period = 100'000;
  auto p = load_source("t", kSpin);
  Vm vm(p.module, o);
  vm.run();
  vm.call("spin", {Value::integer(200'000)});
  if (vm.backend() == TriggerBackend::Pmu) {
    EXPECT_TRUE(vm.backend_warning().empty());
  } else {
    EXPECT_EQ(vm.backend(), TriggerBackend::Virtual);
    EXPECT_FALSE(vm.backend_warning().empty());
    EXPECT_GT(vm.sampler_stats().triggers, 0u);
  }
}

TEST(Timer, StartStopIdempotent) {
  TimerTrigger t(1000);
  t.start();
  EXPECT_TRUE(t.active());
  burn_cpu(std::chrono::milliseconds(30));
  t.stop();
  EXPECT_FALSE(t.active());
  t.stop();
  EXPECT_FALSE(t.active());
  EXPECT_GT(delivered_signals(), 0u);
}

TEST(Timer, NoSignalsAfterStop) {
  TimerTrigger t(500);
  t.start();
  burn_cpu(std::chrono::milliseconds(10));
  t.stop();
  const auto n = delivered_signals();
  burn_cpu(std::chrono::milliseconds(20));
  EXPECT_EQ(delivered_signals(), n);
}

TEST(Timer, DrivesTheSampler) {
  VmOptions o;
  o.profiler = ProfilerMode::RecordOnly;
  o.config.backend = TriggerBackend::Timer;
  o.config.timer_interval_us = 500;
  auto p = load_source("t", kSpin);
  Vm vm(p.module, o);
  vm.run();
  for (int i = 0; i < 40 && vm.sampler_stats().triggers == 0; ++i) vm.call("spin", {Value::integer(200'000)});
  EXPECT_EQ(vm.backend(), TriggerBackend::Timer);
  EXPECT_GT(vm.sampler_stats().triggers, 0u);
}

// Repeated configure/teardown: after each VM is gone no signal is delivered.
TEST(Teardown, Stress) {
  for (auto backend : {TriggerBackend::Timer, TriggerBackend::Pmu}) {
    for (int round = 0; round < 20; ++round) {
      VmOptions o;
      o.profiler = ProfilerMode::Full;
      o.config.backend = backend;
      o.config.timer_interval_us = 200;
      o.config.period = 10'000;
      auto p = load_source("t", kSpin);
      {
        Vm vm(p.module, o);
        vm.run();
        vm.call("spin", {Value::integer(20'000)});
      }
      const auto n = delivered_signals();
      burn_cpu(std::chrono::milliseconds(2));
      ASSERT_EQ(delivered_signals(), n) << "round " << round;
      EXPECT_EQ(trigger_pending().load(), 0);
    }
  }
}

}  // namespace
