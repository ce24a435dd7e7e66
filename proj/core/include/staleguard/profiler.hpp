#pragma once

#include <cstdint>
#include <span>
#include <string>

#include "staleguard/compiled.hpp"
#include "staleguard/events.hpp"

namespace staleguard {

enum class ProfilerMode : std::uint8_t { Off, RecordOnly, Full };
enum class TriggerBackend : std::uint8_t { Virtual, Timer, Pmu };

std::string_view mode_name(ProfilerMode m);
std::string_view backend_name(TriggerBackend b);

struct ProfilerConfig {
  std::uint64_t period = 500'000;     // P: units between triggers
  std::uint32_t threshold = 20;       // T: samples before a slot is trusted
  std::uint32_t clear_interval = 100; // C: triggers per clearing window
  std::uint32_t stale_num = 1;        // stale fraction num/den
  std::uint32_t stale_den = 2;
  TriggerBackend backend = TriggerBackend::Virtual;
  std::uint32_t timer_interval_us = 1000;  // Timer backend only

  // Throws std::invalid_argument on out-of-range values.
  void validate() const;
};

enum class SampleOutcome : std::uint8_t { Hit, MissNotOptimized, MissNoFrame };

// One live function activation as seen by the sampler.
struct Activation {
  FunctionId fn = 0;
  CompiledFunction* marker = nullptr;  // set while running tier-2 code
  const Value* shadow = nullptr;       // boxed-slot registry, indexed by slot
};

// D = all slot-map entries; S = entries with count >= T whose sample differs
// from the compiled feedback. Recompile iff |S| > fraction * D.
bool should_recompile(const CompiledFunction& cf, const ProfilerConfig& cfg, bool blacklisted);

// Sampled types with at least T samples, merged per origin.
Overrides build_overrides(const CompiledFunction& cf, std::uint32_t threshold);

void clear_profile(CompiledFunction& cf);

// One `- #<slot>-><offset>: <sampled> (<count>), <compiled>` line per
// slot-map entry.
std::string slot_map_listing(const CompiledFunction& cf);

// One `<offset> → <type> (<count>)` line per record site of f.
std::string feedback_listing(const BaselineFunction& f, const FeedbackTable& t);

struct SamplerStats {
  std::uint64_t triggers = 0;
  std::uint64_t hits = 0;
  std::uint64_t miss_not_optimized = 0;
  std::uint64_t miss_no_frame = 0;
  std::uint64_t samples = 0;  // slot values merged
};

class Sampler {
 public:
  // Inspects only the topmost activation.
  SampleOutcome on_trigger(std::span<const Activation> stack, EventLog* log, std::uint64_t unit);

  const SamplerStats& stats() const { return stats_; }
  void reset_stats() { stats_ = {}; }

 private:
  SamplerStats stats_;
};

}  // namespace staleguard
