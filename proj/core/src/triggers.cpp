#include "staleguard/triggers.hpp"

#include <csignal>
#include <cstring>

#if defined(__unix__) || defined(__APPLE__)
#include <sys/time.h>
#define STALEGUARD_HAVE_ITIMER 1
#endif

namespace staleguard {

namespace {
std::atomic<int> g_pending{0};
std::atomic<std::uint64_t> g_delivered{0};
static_assert(std::atomic<int>::is_always_lock_free);
}  // namespace

std::atomic<int>& trigger_pending() { return g_pending; }
std::uint64_t delivered_signals() { return g_delivered.load(std::memory_order_relaxed); }

// Shared with the PMU backend.
void on_trigger_signal(int) {
  g_pending.store(1, std::memory_order_relaxed);
  g_delivered.fetch_add(1, std::memory_order_relaxed);
}

#ifdef STALEGUARD_HAVE_ITIMER

void TimerTrigger::start() {
  if (active_) return;
  struct sigaction sa {};
  sa.sa_handler = on_trigger_signal;
  sigemptyset(&sa.sa_mask);
  sa.sa_flags = 0;  // no SA_RESTART: this is what makes the backend unsafe
  if (sigaction(SIGPROF, &sa, nullptr) != 0)
    throw TriggerError(TriggerError::Reason::Other, std::string("sigaction: ") + std::strerror(errno));
  itimerval tv{};
  tv.it_interval.tv_sec = interval_us_ / 1'000'000;
  tv.it_interval.tv_usec = interval_us_ % 1'000'000;
  tv.it_value = tv.it_interval;
  if (setitimer(ITIMER_PROF, &tv, nullptr) != 0)
    throw TriggerError(TriggerError::Reason::Other, std::string("setitimer: ") + std::strerror(errno));
  active_ = true;
}

void TimerTrigger::stop() {
  if (!active_) return;
  itimerval tv{};
  setitimer(ITIMER_PROF, &tv, nullptr);
  signal(SIGPROF, SIG_IGN);
  g_pending.store(0, std::memory_order_relaxed);
  active_ = false;
}

#else

void TimerTrigger::start() {
  throw TriggerError(TriggerError::Reason::Unsupported, "interval timers not available");
}
void TimerTrigger::stop() {}

#endif

}  // namespace staleguard
