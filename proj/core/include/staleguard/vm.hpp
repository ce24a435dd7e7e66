#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "staleguard/bytecode.hpp"
#include "staleguard/compiled.hpp"
#include "staleguard/events.hpp"
#include "staleguard/feedback.hpp"
#include "staleguard/profiler.hpp"
#include "staleguard/triggers.hpp"

namespace staleguard {

struct VmOptions {
  std::uint32_t tier_up_threshold = 10;  // W
  bool tier2 = true;
  ProfilerMode profiler = ProfilerMode::Off;
  ProfilerConfig config;
  // Record every value flowing through a mapped slot into
  // CompiledFunction::full_profile.
  bool impact = false;
  bool verbose_events = false;
  std::uint32_t max_depth = 2000;
};

struct FunctionState {
  std::uint64_t invocations = 0;
  std::uint64_t deopts = 0;
  std::uint32_t window_deopts = 0;
  bool blacklisted = false;
  bool unspecializable = false;
  std::uint32_t compiles = 0;    // natural tier-ups
  std::uint32_t recompiles = 0;  // profiler-triggered
  std::shared_ptr<CompiledFunction> compiled;
};

// Loop register: remaining iterations of a `for` range.
struct LoopReg {
  std::int64_t cur = 0;
  std::int64_t remaining = 0;
  std::int64_t step = 1;
};

// Arguments as passed by either tier: boxed values from tier 1, or tier-2
// registers with their static representations.
struct ArgView {
  const Value* vals = nullptr;
  const Reg* regs = nullptr;
  const Rep* reps = nullptr;
  std::uint32_t n = 0;

  Value boxed(std::uint32_t i) const;
};

namespace detail {

// LIFO storage for frames. Slots are reset when released so no Value
// outlives its activation.
template <typename T>
class StackArena {
 public:
  T* alloc(std::size_t n) {
    for (;;) {
      if (cur_ < chunks_.size()) {
        Chunk& c = chunks_[cur_];
        if (c.cap - c.used >= n) {
          T* p = c.data.get() + c.used;
          c.used += n;
          return p;
        }
        if (cur_ + 1 == chunks_.size()) break;
        ++cur_;
        continue;
      }
      break;
    }
    const std::size_t cap = n > kChunk ? n : kChunk;
    chunks_.push_back(Chunk{std::make_unique<T[]>(cap), cap, 0});
    cur_ = chunks_.size() - 1;
    return alloc(n);
  }

  void release(T* p, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) p[i] = T{};
    chunks_[cur_].used -= n;
    while (cur_ > 0 && chunks_[cur_].used == 0) --cur_;
  }

 private:
  static constexpr std::size_t kChunk = 1 << 14;
  struct Chunk {
    std::unique_ptr<T[]> data;
    std::size_t cap = 0;
    std::size_t used = 0;
  };
  std::vector<Chunk> chunks_;
  std::size_t cur_ = 0;
};

}  // namespace detail

class Vm {
 public:
  Vm(std::shared_ptr<const Module> module, VmOptions opt = {});
  ~Vm();
  Vm(const Vm&) = delete;
  Vm& operator=(const Vm&) = delete;

  // Runs the top level. Globals keep their values from earlier runs unless
  // reset_globals() is called.
  Value run();
  Value call(FunctionId fn, std::vector<Value> args);
  Value call(std::string_view name, std::vector<Value> args);

  // Tier-1 execution regardless of compiled code. Counts the invocation.
  Value interpret(FunctionId fn, std::vector<Value> args);

  bool tier_up_check(FunctionId fn) const;
  void invalidate(FunctionId fn);
  // Specializes fn against its current baseline feedback and installs it.
  std::shared_ptr<CompiledFunction> compile(FunctionId fn, const Overrides& overrides = {});

  const FunctionState& state(FunctionId fn) const { return states_.at(fn); }
  const FeedbackTable& feedback(FunctionId fn) const { return feedback_.at(fn); }
  void reset_feedback(FunctionId fn);
  const Module& module() const { return *module_; }
  const VmOptions& options() const { return opt_; }

  void reset_globals();
  void set_global(std::string_view name, Value v);
  const Value& global(std::string_view name) const;

  const EventLog& events() const { return log_; }
  EventLog& events() { return log_; }
  std::uint64_t units() const { return units_; }
  const std::vector<std::string>& output() const { return output_; }
  void clear_output() { output_.clear(); }
  std::uint64_t profiler_touches() const { return touches_; }
  const SamplerStats& sampler_stats() const { return sampler_.stats(); }
  std::uint64_t windows() const { return window_; }
  // The active trigger backend; Pmu/Timer fall back to Virtual on failure.
  TriggerBackend backend() const { return backend_; }
  const std::string& backend_warning() const { return backend_warning_; }
  std::span<const Activation> activations() const { return activations_; }
  // Every CompiledFunction this VM produced, oldest first.
  const std::vector<std::shared_ptr<CompiledFunction>>& all_compiled() const { return all_compiled_; }

  // Test hook: runs the trigger handler as if an interruption arrived now.
  void force_trigger();

 private:
  friend struct ActivationScope;

  Value invoke(FunctionId fn, const ArgView& args);
  Value run_baseline(const BaselineFunction& f, const ArgView& args);
  // Executes tier-1 code from `pc` with a prepared frame.
  Value run_frame(const BaselineFunction& f, Value* locals, Value* stack, std::uint32_t sp,
                  LoopReg* loops, const ArgView& args, std::uint32_t pc);
  Value execute_optimized(const std::shared_ptr<CompiledFunction>& cf, const ArgView& args);
  Value deoptimize(CompiledFunction& cf, const Reg* regs, const LoopReg* loops, const ArgView& args,
                   std::int32_t point, Value failing);

  void install(FunctionId fn, std::shared_ptr<CompiledFunction> cf);
  void service();
  void on_trigger();
  void schedule();
  void start_backend();

  [[noreturn]] void unbound(const std::string& name) const;
  Value& global_slot(std::int32_t g);

  std::shared_ptr<const Module> module_;
  VmOptions opt_;
  std::vector<Value> globals_;
  std::vector<FunctionState> states_;
  std::vector<FeedbackTable> feedback_;
  std::vector<std::shared_ptr<CompiledFunction>> all_compiled_;
  std::uint64_t next_marker_ = 1;

  std::vector<Activation> activations_;
  detail::StackArena<Value> values_;
  detail::StackArena<Reg> regs_;
  detail::StackArena<LoopReg> loops_;
  std::vector<Value> scratch_;
  Value null_;

  std::uint64_t units_ = 0;
  std::uint64_t next_event_ = UINT64_MAX;
  std::uint64_t next_trigger_ = UINT64_MAX;
  std::uint64_t next_poll_ = UINT64_MAX;
  bool virtual_ = false;
  bool async_ = false;
  std::uint64_t triggers_in_window_ = 0;
  std::uint64_t window_ = 0;
  std::uint64_t touches_ = 0;

  TriggerBackend backend_ = TriggerBackend::Virtual;
  std::string backend_warning_;
  std::unique_ptr<TriggerSource> source_;
  Sampler sampler_;
  EventLog log_;
  std::vector<std::string> output_;
};

// Range setup shared by both tiers. Throws RuntimeError for a non-integral or
// out-of-range start.
LoopReg make_loop(double lo, double hi);
double loop_bound(const Value& v);

}  // namespace staleguard
