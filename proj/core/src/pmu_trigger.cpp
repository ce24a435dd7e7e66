#include <cerrno>
#include <csignal>
#include <cstring>

#include "staleguard/triggers.hpp"

#if defined(__linux__)
#include <fcntl.h>
#include <linux/perf_event.h>
#include <sys/ioctl.h>
#include <sys/syscall.h>
#include <unistd.h>
#endif

namespace staleguard {

void on_trigger_signal(int);

namespace {

constexpr std::uint64_t kMinPmuPeriod = 10'000;

#if defined(__linux__)

long perf_event_open(perf_event_attr* attr, pid_t pid, int cpu, int group_fd, unsigned long flags) {
  return syscall(SYS_perf_event_open, attr, pid, cpu, group_fd, flags);
}

TriggerError from_errno(const char* what, int err) {
  using R = TriggerError::Reason;
  R r = R::Other;
  if (err == EACCES || err == EPERM) r = R::AccessDenied;
  else if (err == ENOENT || err == ENODEV || err == EOPNOTSUPP || err == ENOSYS || err == EINVAL) r = R::Unsupported;
  else if (err == EBUSY) r = R::Busy;
  return TriggerError(r, std::string(what) + ": " + std::strerror(err));
}

class PmuTrigger final : public TriggerSource {
 public:
  explicit PmuTrigger(std::uint64_t period) : period_(period) {}
  ~PmuTrigger() override { stop(); }
  TriggerBackend kind() const override { return TriggerBackend::Pmu; }
  bool active() const override { return fd_ >= 0; }

  void start() override {
    if (fd_ >= 0) return;
    struct sigaction sa {};
    sa.sa_handler = on_trigger_signal;
    sigemptyset(&sa.sa_mask);
    sa.sa_flags = SA_RESTART;
    if (sigaction(SIGUSR1, &sa, nullptr) != 0) throw from_errno("sigaction", errno);

    perf_event_attr pe;
    std::memset(&pe, 0, sizeof(pe));
    pe.size = sizeof(pe);
    pe.type = PERF_TYPE_HARDWARE;
    pe.config = PERF_COUNT_HW_INSTRUCTIONS;
    pe.sample_type = PERF_SAMPLE_IP;
    pe.sample_period = period_;
    pe.exclude_kernel = 1;
    pe.exclude_hv = 1;
    // Skid only shifts which instruction takes the interrupt; take the best
    // precision the CPU accepts.
    long fd = -1;
    for (int precise = 3; precise >= 0; --precise) {
      pe.precise_ip = static_cast<unsigned>(precise);
      fd = perf_event_open(&pe, 0, -1, -1, 0);
      if (fd >= 0 || (errno != EINVAL && errno != EOPNOTSUPP)) break;
    }
    if (fd < 0) {
      const int err = errno;
      signal(SIGUSR1, SIG_DFL);
      throw from_errno("perf_event_open", err);
    }
    fd_ = static_cast<int>(fd);
    auto fail = [&](const char* what) {
      const int err = errno;
      close(fd_);
      fd_ = -1;
      signal(SIGUSR1, SIG_DFL);
      throw from_errno(what, err);
    };
    if (fcntl(fd_, F_SETFL, O_NONBLOCK | FASYNC) != 0) fail("fcntl(F_SETFL)");
    if (fcntl(fd_, F_SETSIG, SIGUSR1) != 0) fail("fcntl(F_SETSIG)");
    if (fcntl(fd_, F_SETOWN, getpid()) != 0) fail("fcntl(F_SETOWN)");
    if (ioctl(fd_, PERF_EVENT_IOC_RESET, 0) != 0) fail("ioctl(RESET)");
    if (ioctl(fd_, PERF_EVENT_IOC_REFRESH, -1) != 0) fail("ioctl(REFRESH)");
  }

  void stop() override {
    if (fd_ < 0) return;
    ioctl(fd_, PERF_EVENT_IOC_DISABLE, 0);
    close(fd_);
    fd_ = -1;
    signal(SIGUSR1, SIG_IGN);
    trigger_pending().store(0, std::memory_order_relaxed);
  }

 private:
  std::uint64_t period_;
  int fd_ = -1;
};

#endif

}  // namespace

std::unique_ptr<TriggerSource> make_pmu_trigger(std::uint64_t sample_period) {
  if (sample_period < kMinPmuPeriod)
    throw std::invalid_argument("pmu sample period must be >= 10000");
#if defined(__linux__)
  return std::make_unique<PmuTrigger>(sample_period);
#else
  throw TriggerError(TriggerError::Reason::Unsupported, "pmu backend requires Linux");
#endif
}

}  // namespace staleguard
