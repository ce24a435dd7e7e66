// Differential tests: tier-2 code, with or without the profiler recompiling
// it, must produce what the interpreter produces.

#include <gtest/gtest.h>

#include "../support/program_gen.hpp"
#include "staleguard/harness.hpp"

using namespace staleguard;

namespace {

struct Trace {
  std::vector<std::string> results;  // repr or "error: ..."
  std::vector<std::string> output;
  std::uint64_t compiles = 0, deopts = 0, recompiles = 0;
};

Trace run(const LoadedProgram& p, VmOptions o, int calls) {
  Trace t;
  Vm vm(p.module, o);
  for (const auto& [k, v] : p.bindings) vm.set_global(k, v);
  try {
    vm.run();
    t.results.push_back("setup ok");
  } catch (const std::exception& e) {
    t.results.push_back(std::string("error: ") + e.what());
    return t;
  }
  for (int i = 0; i < calls; ++i) {
    try {
      t.results.push_back(vm.call(*p.entry, {}).repr());
    } catch (const std::exception& e) {
      t.results.push_back(std::string("error: ") + e.what());
    }
  }
  t.output = vm.output();
  for (FunctionId f = 0; f < p.module->functions.size(); ++f) {
    t.compiles += vm.state(f).compiles;
    t.deopts += vm.state(f).deopts;
    t.recompiles += vm.state(f).recompiles;
  }
  return t;
}

VmOptions interpreter_only() {
  VmOptions o;
  o.tier2 = false;
  return o;
}

VmOptions profiled(std::uint64_t period) {
  VmOptions o;
  o.profiler = ProfilerMode::Full;
  o.config.period = period;
  o.config.threshold = 2;
  o.config.clear_interval = 4;
  return o;
}

TEST(Transparency, RandomPrograms) {
  staleguard::testing::ProgramGen gen(20261019);
  std::uint64_t compiles = 0, deopts = 0, recompiles = 0;
  for (int n = 0; n < 200; ++n) {
    const std::string src = gen.generate();
    LoadedProgram p = load_source("gen", src);
    ASSERT_TRUE(p.entry);
    Trace want = run(p, interpreter_only(), 12);
    Trace plain = run(p, VmOptions{}, 12);
    Trace prof = run(p, profiled(97 + n), 12);
    ASSERT_EQ(plain.results, want.results) << src;
    ASSERT_EQ(prof.results, want.results) << src;
    ASSERT_EQ(prof.output, want.output) << src;
    compiles += plain.compiles + prof.compiles;
    deopts += plain.deopts + prof.deopts;
    recompiles += prof.recompiles;
  }
  // The corpus must actually exercise the second tier.
  EXPECT_GT(compiles, 200u);
  EXPECT_GT(deopts, 20u);
  EXPECT_GT(recompiles, 0u);
}

class SuiteTransparency : public ::testing::TestWithParam<std::string> {};

TEST_P(SuiteTransparency, SmallInputs) {
  const auto file = std::filesystem::path(STALEGUARD_SUITE_DIR) / (GetParam() + ".mdyn");
  // shrink every size knob the program declares
  Defines small;
  for (const auto& [k, v] : load_program(file).bindings)
    if (v.kind() == Kind::Integer && k != "WARM") small[k] = "300L";
  if (GetParam() == "matmul") small["N"] = "6L";
  if (GetParam() == "nbody") small = {{"K", "6L"}, {"STEPS", "4L"}};
  if (GetParam() == "sort") small["N"] = "60L";
  LoadedProgram p = load_program(file, small);
  Trace want = run(p, interpreter_only(), 14);
  Trace prof = run(p, profiled(1000), 14);
  EXPECT_EQ(prof.results, want.results);
  EXPECT_EQ(prof.output, want.output);
  EXPECT_GT(prof.compiles, 0u);
}

std::vector<std::string> suite_names() {
  std::vector<std::string> out;
  for (const auto& f : suite_files(STALEGUARD_SUITE_DIR)) out.push_back(f.stem().string());
  return out;
}

INSTANTIATE_TEST_SUITE_P(Suite, SuiteTransparency, ::testing::ValuesIn(suite_names()),
                         [](const auto& info) { return info.param; });

}  // namespace
