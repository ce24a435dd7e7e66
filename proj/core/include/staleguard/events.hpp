#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "staleguard/bytecode.hpp"

namespace staleguard {

enum class EventKind : std::uint8_t { TierUp, Trigger, Sample, Recompile, Deopt, Clear };
inline constexpr std::size_t kEventKinds = 6;

std::string_view event_name(EventKind k);

struct Event {
  EventKind kind;
  std::uint64_t unit = 0;  // executed units when the event fired
  FunctionId fn = 0;
  std::uint32_t arg = 0;  // slot (SAMPLE), origin offset (DEOPT), window (CLEAR)
  std::string detail;     // rendered type(s)
};

// Counts every event; stores TRIGGER and SAMPLE lines only when verbose,
// since there can be millions of them.
class EventLog {
 public:
  void set_verbose(bool v) { verbose_ = v; }
  bool verbose() const { return verbose_; }

  void push(Event e) {
    ++counts_[static_cast<std::size_t>(e.kind)];
    if (verbose_ || (e.kind != EventKind::Trigger && e.kind != EventKind::Sample))
      events_.push_back(std::move(e));
  }
  std::uint64_t count(EventKind k) const { return counts_[static_cast<std::size_t>(k)]; }
  const std::vector<Event>& events() const { return events_; }
  void clear() {
    events_.clear();
    counts_.fill(0);
  }

  // `TRIGGER <unit>`, `SAMPLE <fn> <slot> <type>`, `RECOMPILE <fn> <overrides>`,
  // `DEOPT <fn> <origin> <observed>`, `CLEAR <window>`, `TIERUP <fn>`.
  static std::string format(const Event& e, const Module& m);
  std::vector<std::string> lines(const Module& m) const;

 private:
  bool verbose_ = false;
  std::vector<Event> events_;
  std::array<std::uint64_t, kEventKinds> counts_{};
};

}  // namespace staleguard
