#include "staleguard/profiler.hpp"

#include <stdexcept>

namespace staleguard {

std::string_view mode_name(ProfilerMode m) {
  switch (m) {
    case ProfilerMode::Off: return "off";
    case ProfilerMode::RecordOnly: return "record-only";
    case ProfilerMode::Full: return "full";
  }
  return "?";
}

std::string_view backend_name(TriggerBackend b) {
  switch (b) {
    case TriggerBackend::Virtual: return "virtual";
    case TriggerBackend::Timer: return "timer";
    case TriggerBackend::Pmu: return "pmu";
  }
  return "?";
}

void ProfilerConfig::validate() const {
  if (period < 1) throw std::invalid_argument("sample period must be >= 1");
  if (threshold < 1) throw std::invalid_argument("threshold must be >= 1");
  if (clear_interval < 1) throw std::invalid_argument("clear interval must be >= 1");
  if (stale_den == 0 || stale_num == 0 || stale_num > stale_den)
    throw std::invalid_argument("stale fraction must be in (0, 1]");
  if (timer_interval_us < 1) throw std::invalid_argument("timer interval must be >= 1us");
}

bool should_recompile(const CompiledFunction& cf, const ProfilerConfig& cfg, bool blacklisted) {
  if (blacklisted) return false;
  const std::uint64_t total = cf.profile.size();
  std::uint64_t stale = 0;
  for (const auto& e : cf.profile) {
    if (e.count < cfg.threshold) continue;
    if (compare(e.sampled, e.compiled).verdict != Verdict::Equal) ++stale;
  }
  return stale * cfg.stale_den > static_cast<std::uint64_t>(cfg.stale_num) * total;
}

Overrides build_overrides(const CompiledFunction& cf, std::uint32_t threshold) {
  Overrides out;
  for (const auto& e : cf.profile) {
    if (e.count < threshold) continue;
    auto [it, fresh] = out.try_emplace(e.origin, e.sampled);
    if (!fresh) it->second = merge(it->second, e.sampled);
  }
  return out;
}

void clear_profile(CompiledFunction& cf) {
  for (auto& e : cf.profile) {
    e.sampled = FeedbackType::bottom();
    e.count = 0;
  }
}

std::string slot_map_listing(const CompiledFunction& cf) {
  std::string out;
  for (const auto& e : cf.profile)
    out += "- #" + std::to_string(e.slot) + "->" + std::to_string(e.origin.offset) + ": " + render(e.sampled) +
           " (" + std::to_string(e.count) + "), " + render(e.compiled) + "\n";
  return out;
}

std::string feedback_listing(const BaselineFunction& f, const FeedbackTable& t) {
  std::string out;
  for (std::size_t i = 0; i < f.record_sites.size(); ++i)
    out += std::to_string(f.record_sites[i].offset) + " \u2192 " + render(t.observed[i]) + " (" +
           std::to_string(t.hits[i]) + ")\n";
  return out;
}

SampleOutcome Sampler::on_trigger(std::span<const Activation> stack, EventLog* log,
                                  std::uint64_t unit) {
  ++stats_.triggers;
  if (log) log->push({EventKind::Trigger, unit, 0, 0, {}});
  if (stack.empty() || stack.back().fn == kTopLevel) {
    ++stats_.miss_no_frame;
    return SampleOutcome::MissNoFrame;
  }
  const Activation& top = stack.back();
  CompiledFunction* cf = top.marker;
  if (cf == nullptr || !cf->valid || top.shadow == nullptr) {
    ++stats_.miss_not_optimized;
    return SampleOutcome::MissNotOptimized;
  }
  ++stats_.hits;
  for (auto& e : cf->profile) {
    const Value& v = top.shadow[e.slot];
    if (v.is_unbound()) continue;
    FeedbackType t = type_of(v);
    e.sampled = merge(e.sampled, t);
    ++e.count;
    ++stats_.samples;
    if (log) log->push({EventKind::Sample, unit, top.fn, e.slot, log->verbose() ? render(t) : std::string()});
  }
  return SampleOutcome::Hit;
}

}  // namespace staleguard
