#include "staleguard/events.hpp"

namespace staleguard {

std::string_view event_name(EventKind k) {
  switch (k) {
    case EventKind::TierUp: return "TIERUP";
    case EventKind::Trigger: return "TRIGGER";
    case EventKind::Sample: return "SAMPLE";
    case EventKind::Recompile: return "RECOMPILE";
    case EventKind::Deopt: return "DEOPT";
    case EventKind::Clear: return "CLEAR";
  }
  return "?";
}

std::string EventLog::format(const Event& e, const Module& m) {
  std::string s(event_name(e.kind));
  auto fn = [&] { return e.fn < m.functions.size() ? m.functions[e.fn].name : "?"; };
  switch (e.kind) {
    case EventKind::Trigger: s += ' ' + std::to_string(e.unit); break;
    case EventKind::Sample: s += ' ' + fn() + ' ' + std::to_string(e.arg) + ' ' + e.detail; break;
    case EventKind::Recompile: s += ' ' + fn() + ' ' + e.detail; break;
    case EventKind::Deopt: s += ' ' + fn() + ' ' + std::to_string(e.arg) + ' ' + e.detail; break;
    case EventKind::Clear: s += ' ' + std::to_string(e.arg); break;
    case EventKind::TierUp: s += ' ' + fn(); break;
  }
  return s;
}

std::vector<std::string> EventLog::lines(const Module& m) const {
  std::vector<std::string> out;
  out.reserve(events_.size());
  for (const auto& e : events_) out.push_back(format(e, m));
  return out;
}

}  // namespace staleguard
