#include "staleguard/runtime.hpp"
#include "staleguard/vm.hpp"

namespace staleguard {

namespace {

// Releases a tier-1 frame's storage, including on unwinding.
struct FrameStorage {
  detail::StackArena<Value>& values;
  detail::StackArena<LoopReg>& loops;
  Value* slots;
  std::size_t n_slots;
  LoopReg* regs;
  std::size_t n_regs;
  ~FrameStorage() {
    loops.release(regs, n_regs);
    values.release(slots, n_slots);
  }
};

}  // namespace

Value Vm::run_baseline(const BaselineFunction& f, const ArgView& args) {
  const std::size_t n = f.n_locals() + f.max_stack;
  Value* slots = values_.alloc(n);
  LoopReg* loops = loops_.alloc(f.n_loop_regs);
  FrameStorage guard{values_, loops_, slots, n, loops, f.n_loop_regs};
  return run_frame(f, slots, slots + f.n_locals(), 0, loops, args, 0);
}

Value Vm::run_frame(const BaselineFunction& f, Value* locals, Value* stack, std::uint32_t sp,
                    LoopReg* loops, const ArgView& args, std::uint32_t pc) {
  const Instr* code = f.code.data();
  FeedbackTable& fb = feedback_[f.id];
  for (;;) {
    const Instr& in = code[pc++];
    if (++units_ >= next_event_) service();
    switch (in.op) {
      case Op::PushConst:
        stack[sp++] = f.constants[in.a];
        break;
      case Op::PushNull:
        stack[sp++] = null_;
        break;
      case Op::LdLocal: {
        const Value& v = locals[in.a];
        if (v.is_unbound()) unbound(f.locals[in.a]);
        stack[sp++] = v;
        break;
      }
      case Op::LdGlobal: {
        const Value& v = globals_[in.a];
        if (v.is_unbound()) unbound(module_->globals[in.a]);
        stack[sp++] = v;
        break;
      }
      case Op::LdArg:
        stack[sp++] = args.boxed(static_cast<std::uint32_t>(in.a));
        break;
      case Op::StLocal:
        locals[in.a] = stack[sp - 1];
        break;
      case Op::StGlobal:
        globals_[in.a] = stack[sp - 1];
        break;
      case Op::Pop:
        stack[--sp] = Value();
        break;
      case Op::Record:
        fb.record(static_cast<std::size_t>(in.a), stack[sp - 1]);
        break;
      case Op::Arith: {
        Value rhs = std::move(stack[--sp]);
        stack[sp - 1] = dispatch_binop(static_cast<BinOp>(in.a), stack[sp - 1], rhs);
        break;
      }
      case Op::Neg:
        stack[sp - 1] = negate(stack[sp - 1]);
        break;
      case Op::Call: {
        const auto argc = static_cast<std::uint32_t>(in.b);
        sp -= argc;
        ArgView view{stack + sp, nullptr, nullptr, argc};
        Value r = invoke(static_cast<FunctionId>(in.a), view);
        for (std::uint32_t i = 1; i < argc; ++i) stack[sp + i] = Value();
        stack[sp++] = std::move(r);
        break;
      }
      case Op::CallBuiltin: {
        const auto argc = static_cast<std::uint32_t>(in.b);
        sp -= argc;
        const std::string& s = in.c >= 0 && static_cast<std::size_t>(in.c) < f.strings.size()
                                   ? f.strings[in.c]
                                   : std::string();
        Value r = call_builtin(static_cast<Builtin>(in.a), std::span<const Value>(stack + sp, argc), s,
                               &output_);
        for (std::uint32_t i = 1; i < argc; ++i) stack[sp + i] = Value();
        stack[sp++] = std::move(r);
        break;
      }
      case Op::SetIndexLocal:
      case Op::SetIndexGlobal: {
        const bool local = in.op == Op::SetIndexLocal;
        Value& target = local ? locals[in.a] : globals_[in.a];
        if (target.is_unbound()) unbound(local ? f.locals[in.a] : module_->globals[in.a]);
        Value parts[3] = {std::move(target), std::move(stack[sp - 2]), std::move(stack[sp - 1])};
        sp -= 2;
        try {
          target = call_builtin(Builtin::SetIndex, parts, std::string(), nullptr);
        } catch (...) {
          target = std::move(parts[0]);
          throw;
        }
        stack[sp++] = target;
        break;
      }
      case Op::Jump:
        pc = static_cast<std::uint32_t>(in.a);
        break;
      case Op::JumpIfFalse: {
        Value c = std::move(stack[--sp]);
        if (!truthy(c)) pc = static_cast<std::uint32_t>(in.a);
        break;
      }
      case Op::ForInit: {
        Value hi = std::move(stack[--sp]);
        Value lo = std::move(stack[--sp]);
        loops[in.a] = make_loop(loop_bound(lo), loop_bound(hi));
        break;
      }
      case Op::ForNext: {
        LoopReg& r = loops[in.a];
        if (r.remaining == 0) {
          pc = static_cast<std::uint32_t>(in.b);
          break;
        }
        stack[sp++] = Value::integer(static_cast<std::int32_t>(r.cur));
        r.cur += r.step;
        --r.remaining;
        break;
      }
      case Op::Return:
        return std::move(stack[sp - 1]);
    }
  }
}

}  // namespace staleguard
