#include "staleguard/vm.hpp"

#include <algorithm>
#include <cmath>

#include "staleguard/runtime.hpp"

namespace staleguard {

namespace {
constexpr std::uint64_t kPollInterval = 256;
}

Value ArgView::boxed(std::uint32_t i) const {
  if (vals) return vals[i];
  const Reg& r = regs[i];
  switch (reps ? reps[i] : Rep::Boxed) {
    case Rep::Boxed: return r.box;
    case Rep::Int: return Value::integer(static_cast<std::int32_t>(r.i));
    case Rep::Dbl: return Value::dbl(r.d);
    case Rep::Lgl: return Value::logical(r.i != 0);
  }
  return r.box;
}

double loop_bound(const Value& v) {
  if (v.size() == 0) throw RuntimeError("argument of length 0");
  return v.dbl_at(0);
}

LoopReg make_loop(double lo, double hi) {
  if (std::isnan(lo) || std::isnan(hi)) throw RuntimeError("NA/NaN argument");
  if (lo != std::floor(lo) || std::fabs(lo) > static_cast<double>(kernel::kIntMax))
    throw RuntimeError("for range start must be an integer value");
  const double span = std::floor(std::fabs(hi - lo));
  const double end = hi >= lo ? lo + span : lo - span;
  if (std::fabs(end) > static_cast<double>(kernel::kIntMax))
    throw RuntimeError("for range exceeds the integer range");
  LoopReg r;
  r.cur = static_cast<std::int64_t>(lo);
  r.remaining = static_cast<std::int64_t>(span) + 1;
  r.step = hi >= lo ? 1 : -1;
  return r;
}

// Keeps the activation stack balanced across exceptions.
struct ActivationScope {
  Vm& vm;
  ActivationScope(Vm& v, FunctionId fn) : vm(v) { vm.activations_.push_back({fn, nullptr, nullptr}); }
  ~ActivationScope() { vm.activations_.pop_back(); }
};

Vm::Vm(std::shared_ptr<const Module> module, VmOptions opt)
    : module_(std::move(module)), opt_(opt), null_(Value::null()) {
  opt_.config.validate();
  globals_.resize(module_->globals.size());
  states_.resize(module_->functions.size());
  for (const auto& f : module_->functions) feedback_.emplace_back(f.record_sites.size());
  log_.set_verbose(opt_.verbose_events);
  if (opt_.profiler != ProfilerMode::Off) start_backend();
  schedule();
}

Vm::~Vm() {
  if (source_) source_->stop();
}

void Vm::start_backend() {
  backend_ = opt_.config.backend;
  if (backend_ != TriggerBackend::Virtual) {
    try {
      if (backend_ == TriggerBackend::Timer)
        source_ = std::make_unique<TimerTrigger>(opt_.config.timer_interval_us);
      else
        source_ = make_pmu_trigger(opt_.config.period);
      source_->start();
      async_ = true;
      next_poll_ = units_ + kPollInterval;
      return;
    } catch (const std::exception& e) {
      source_.reset();
      backend_warning_ = std::string(backend_name(backend_)) + " trigger unavailable (" + e.what() +
                         "); using the virtual counter";
      backend_ = TriggerBackend::Virtual;
    }
  }
  virtual_ = true;
  next_trigger_ = (units_ / opt_.config.period + 1) * opt_.config.period;
}

void Vm::schedule() { next_event_ = std::min(next_trigger_, next_poll_); }

void Vm::service() {
  if (virtual_) {
    while (units_ >= next_trigger_) {
      next_trigger_ += opt_.config.period;
      on_trigger();
    }
  }
  if (async_) {
    if (trigger_pending().exchange(0, std::memory_order_relaxed)) on_trigger();
    next_poll_ = units_ + kPollInterval;
  }
  schedule();
}

void Vm::force_trigger() { on_trigger(); }

void Vm::on_trigger() {
  ++touches_;
  const ProfilerConfig& cfg = opt_.config;
  SampleOutcome out = sampler_.on_trigger(activations_, &log_, units_);
  if (out == SampleOutcome::Hit && opt_.profiler == ProfilerMode::Full) {
    const Activation& top = activations_.back();
    CompiledFunction* cf = top.marker;
    FunctionState& st = states_[top.fn];
    if (st.compiled.get() == cf && should_recompile(*cf, cfg, st.blacklisted)) {
      Overrides ov = build_overrides(*cf, cfg.threshold);
      try {
        auto fresh = specialize(module_->functions[top.fn], feedback_[top.fn], ov);
        cf->valid = false;
        install(top.fn, fresh);
        ++st.recompiles;
        std::string detail;
        std::vector<std::pair<FeedbackOrigin, FeedbackType>> sorted(ov.begin(), ov.end());
        std::sort(sorted.begin(), sorted.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        for (const auto& [o, t] : sorted) {
          if (!detail.empty()) detail += ' ';
          detail += std::to_string(o.offset) + ":" + render(t);
        }
        log_.push({EventKind::Recompile, units_, top.fn, 0, std::move(detail)});
      } catch (const SpecializeError&) {
        // Function stays in tier 1 until it tiers up again.
        cf->valid = false;
        st.compiled.reset();
      }
    }
  }
  if (++triggers_in_window_ >= cfg.clear_interval) {
    triggers_in_window_ = 0;
    ++window_;
    for (auto& st : states_) {
      if (st.compiled) {
        clear_profile(*st.compiled);
        for (auto& v : st.compiled->slots) v = Value();
      }
      st.window_deopts = 0;
      st.blacklisted = false;
    }
    log_.push({EventKind::Clear, units_, 0, static_cast<std::uint32_t>(window_), {}});
  }
}

void Vm::install(FunctionId fn, std::shared_ptr<CompiledFunction> cf) {
  cf->marker = next_marker_++;
  all_compiled_.push_back(cf);
  states_[fn].compiled = std::move(cf);
}

bool Vm::tier_up_check(FunctionId fn) const {
  const FunctionState& st = states_.at(fn);
  if (!opt_.tier2 || fn == kTopLevel || st.unspecializable) return false;
  if (st.compiled && st.compiled->valid) return false;
  if (st.blacklisted) return false;
  return st.invocations >= opt_.tier_up_threshold;
}

std::shared_ptr<CompiledFunction> Vm::compile(FunctionId fn, const Overrides& overrides) {
  const BaselineFunction& f = module_->functions.at(fn);
  auto cf = specialize(f, feedback_[fn], overrides);
  if (auto& old = states_[fn].compiled) old->valid = false;
  install(fn, cf);
  return cf;
}

void Vm::invalidate(FunctionId fn) {
  FunctionState& st = states_.at(fn);
  if (st.compiled) st.compiled->valid = false;
  st.compiled.reset();
}

void Vm::reset_feedback(FunctionId fn) { feedback_.at(fn) = FeedbackTable(module_->functions.at(fn).record_sites.size()); }

Value Vm::invoke(FunctionId fn, const ArgView& args) {
  if (activations_.size() >= opt_.max_depth) throw RuntimeError("evaluation nested too deeply");
  const BaselineFunction& f = module_->functions[fn];
  if (args.n != f.n_params())
    throw RuntimeError(f.name + "() takes " + std::to_string(f.n_params()) + " argument(s), got " +
                       std::to_string(args.n));
  FunctionState& st = states_[fn];
  if (tier_up_check(fn)) {
    try {
      compile(fn);
      ++st.compiles;
      log_.push({EventKind::TierUp, units_, fn, 0, {}});
    } catch (const SpecializeError&) {
      st.unspecializable = true;
    }
  }
  ++st.invocations;
  ActivationScope scope(*this, fn);
  if (st.compiled && st.compiled->valid) {
    std::shared_ptr<CompiledFunction> cf = st.compiled;  // survives replacement mid-call
    return execute_optimized(cf, args);
  }
  return run_baseline(f, args);
}

Value Vm::run() { return invoke(kTopLevel, ArgView{}); }

Value Vm::call(FunctionId fn, std::vector<Value> args) {
  if (fn >= module_->functions.size()) throw std::out_of_range("no such function");
  ArgView v{args.data(), nullptr, nullptr, static_cast<std::uint32_t>(args.size())};
  return invoke(fn, v);
}

Value Vm::call(std::string_view name, std::vector<Value> args) {
  auto fn = module_->find_function(name);
  if (!fn) throw std::out_of_range("no function named " + std::string(name));
  return call(*fn, std::move(args));
}

Value Vm::interpret(FunctionId fn, std::vector<Value> args) {
  const BaselineFunction& f = module_->functions.at(fn);
  ArgView v{args.data(), nullptr, nullptr, static_cast<std::uint32_t>(args.size())};
  if (v.n != f.n_params()) throw RuntimeError(f.name + "(): wrong number of arguments");
  ++states_[fn].invocations;
  ActivationScope scope(*this, fn);
  return run_baseline(f, v);
}

void Vm::reset_globals() {
  for (auto& g : globals_) g = Value();
}

void Vm::set_global(std::string_view name, Value v) {
  auto g = module_->find_global(name);
  if (!g) throw std::out_of_range("no global named " + std::string(name));
  globals_[*g] = std::move(v);
}

const Value& Vm::global(std::string_view name) const {
  auto g = module_->find_global(name);
  if (!g) throw std::out_of_range("no global named " + std::string(name));
  return globals_[*g];
}

void Vm::unbound(const std::string& name) const { throw RuntimeError("object '" + name + "' not found"); }

Value& Vm::global_slot(std::int32_t g) { return globals_[static_cast<std::size_t>(g)]; }

}  // namespace staleguard
