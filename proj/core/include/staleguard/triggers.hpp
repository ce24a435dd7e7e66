#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <string>

#include "staleguard/profiler.hpp"

namespace staleguard {

// Set from signal handlers, drained by the VM at its next poll. Handlers do
// nothing else.
std::atomic<int>& trigger_pending();
std::uint64_t delivered_signals();

// Asynchronous interruption source. Exactly one may be active per process.
class TriggerSource {
 public:
  virtual ~TriggerSource() = default;
  virtual TriggerBackend kind() const = 0;
  // Throws TriggerError when the host refuses.
  virtual void start() = 0;
  // Idempotent; after return no further interruptions are delivered.
  virtual void stop() = 0;
  virtual bool active() const = 0;
};

class TriggerError : public std::runtime_error {
 public:
  enum class Reason { AccessDenied, Unsupported, Busy, Other };
  TriggerError(Reason r, const std::string& msg) : std::runtime_error(msg), reason_(r) {}
  Reason reason() const { return reason_; }

 private:
  Reason reason_;
};

// Interval timer on process CPU time (SIGPROF). Signals may interrupt
// blocking system calls in the host program.
class TimerTrigger final : public TriggerSource {
 public:
  explicit TimerTrigger(std::uint32_t interval_us) : interval_us_(interval_us) {}
  ~TimerTrigger() override { stop(); }
  TriggerBackend kind() const override { return TriggerBackend::Timer; }
  void start() override;
  void stop() override;
  bool active() const override { return active_; }

 private:
  std::uint32_t interval_us_;
  bool active_ = false;
};

std::unique_ptr<TriggerSource> make_pmu_trigger(std::uint64_t sample_period);

}  // namespace staleguard
