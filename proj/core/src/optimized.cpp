#include "staleguard/runtime.hpp"
#include "staleguard/vm.hpp"

namespace staleguard {

namespace {

struct OptStorage {
  detail::StackArena<Reg>& regs;
  detail::StackArena<LoopReg>& loops;
  Reg* r;
  std::size_t nr;
  LoopReg* l;
  std::size_t nl;
  ~OptStorage() {
    loops.release(l, nl);
    regs.release(r, nr);
  }
};

struct BaselineStorage {
  detail::StackArena<Value>& values;
  detail::StackArena<LoopReg>& loops;
  Value* v;
  std::size_t nv;
  LoopReg* l;
  std::size_t nl;
  ~BaselineStorage() {
    loops.release(l, nl);
    values.release(v, nv);
  }
};

Value box_raw(const Reg& r, Rep rep) {
  switch (rep) {
    case Rep::Int: return Value::integer(static_cast<std::int32_t>(r.i));
    case Rep::Dbl: return Value::dbl(r.d);
    case Rep::Lgl: return Value::logical(r.i != 0);
    case Rep::Boxed: break;
  }
  return r.box;
}

inline bool plain_scalar(const Value& v, Kind k) {
  return !v.is_unbound() && v.kind() == k && v.is_scalar() && !v.has_class();
}

inline double as_num(const Reg& r, bool is_int) { return is_int ? static_cast<double>(r.i) : r.d; }

}  // namespace

Value Vm::execute_optimized(const std::shared_ptr<CompiledFunction>& cfp, const ArgView& args) {
  CompiledFunction& cf = *cfp;
  const BaselineFunction& f = module_->functions[cf.source_id];
  Reg* R = regs_.alloc(cf.n_regs);
  LoopReg* L = loops_.alloc(cf.n_loop_regs);
  Value* shadow = cf.slots.data();
  const std::size_t ns = cf.slots.size();
  OptStorage guard{regs_, loops_, R, cf.n_regs, L, cf.n_loop_regs};
  Activation& act = activations_.back();
  act.marker = &cf;
  act.shadow = shadow;
  const std::uint32_t nloc = cf.n_locals;
  const bool impact = opt_.impact;

  auto observe = [&](const Value& v, std::int32_t slot) {
    shadow[slot] = v;
    if (impact) {
      ProfileEntry& e = cf.full_profile[static_cast<std::size_t>(slot - 1)];
      e.sampled = merge(e.sampled, type_of(v));
      ++e.count;
    }
  };
  auto drop_temp = [&](std::int32_t r) {
    if (static_cast<std::uint32_t>(r) >= nloc) R[r].box = Value();
  };

  const TInstr* code = cf.code.data();
  std::uint32_t pc = 0;
  for (;;) {
    const TInstr& in = code[pc++];
    if (++units_ >= next_event_) service();
    switch (in.op) {
      case TOp::LdConst:
        R[in.a].box = cf.constants[in.b];
        break;
      case TOp::LdConstI:
        R[in.a].i = in.b;
        break;
      case TOp::LdConstD:
        R[in.a].d = cf.constants[in.b].scalar_dbl();
        break;
      case TOp::Mov:
        R[in.a].box = R[in.b].box;
        break;
      case TOp::Move:
        R[in.a].box = std::move(R[in.b].box);
        break;
      case TOp::MovRaw:
        R[in.a].i = R[in.b].i;
        break;
      case TOp::BoxI:
        R[in.a].box = Value::integer(static_cast<std::int32_t>(R[in.b].i));
        break;
      case TOp::BoxD:
        R[in.a].box = Value::dbl(R[in.b].d);
        break;
      case TOp::BoxL:
        R[in.a].box = Value::logical(R[in.b].i != 0);
        break;
      case TOp::Clear:
        R[in.a].box = Value();
        break;
      case TOp::CheckBound:
        if (R[in.a].box.is_unbound()) unbound(f.locals[in.a]);
        break;
      case TOp::LdGlobal: {
        const Value& v = globals_[in.b];
        if (v.is_unbound()) unbound(module_->globals[in.b]);
        R[in.a].box = v;
        break;
      }
      case TOp::StGlobal:
        globals_[in.a] = R[in.b].box;
        break;
      case TOp::LdArg:
        R[in.a].box = args.boxed(static_cast<std::uint32_t>(in.b));
        break;
      case TOp::LdArgI:
      case TOp::LdArgD: {
        const auto i = static_cast<std::uint32_t>(in.b);
        const Rep want = in.op == TOp::LdArgI ? Rep::Int : Rep::Dbl;
        const Rep have = args.reps ? args.reps[i] : Rep::Boxed;
        if (have == want) {
          R[in.a].i = args.regs[i].i;
          break;
        }
        Value v = args.boxed(i);
        if (have == Rep::Boxed && plain_scalar(v, want == Rep::Int ? Kind::Integer : Kind::Double)) {
          if (want == Rep::Int)
            R[in.a].i = v.scalar_int();
          else
            R[in.a].d = v.scalar_dbl();
          break;
        }
        return deoptimize(cf, R, L, args, in.c, std::move(v));
      }
      case TOp::GuardI: {
        const Value& v = R[in.b].box;
        if (!plain_scalar(v, Kind::Integer)) return deoptimize(cf, R, L, args, in.c, v);
        const std::int64_t x = v.scalar_int();
        drop_temp(in.b);
        R[in.a].i = x;
        break;
      }
      case TOp::GuardD: {
        const Value& v = R[in.b].box;
        if (!plain_scalar(v, Kind::Double)) return deoptimize(cf, R, L, args, in.c, v);
        const double x = v.scalar_dbl();
        drop_temp(in.b);
        R[in.a].d = x;
        break;
      }
      case TOp::GuardPlain: {
        const Value& v = R[in.a].box;
        if (v.has_class()) return deoptimize(cf, R, L, args, in.b, v);
        observe(v, in.c);
        break;
      }
      case TOp::Observe:
        observe(R[in.a].box, in.c);
        break;
      case TOp::AddII:
      case TOp::SubII:
      case TOp::MulII:
      case TOp::ArithII: {
        std::int64_t r = 0;
        double d = 0.0;
        const BinOp op = in.op == TOp::AddII   ? BinOp::Add
                         : in.op == TOp::SubII ? BinOp::Sub
                         : in.op == TOp::MulII ? BinOp::Mul
                                               : static_cast<BinOp>(in.e);
        if (!kernel::iarith(op, R[in.b].i, R[in.c].i, r, d))
          return deoptimize(cf, R, L, args, in.d, Value::dbl(d));
        R[in.a].i = r;
        break;
      }
      case TOp::ArithIIBox: {
        std::int64_t r = 0;
        double d = 0.0;
        const bool ok = kernel::iarith(static_cast<BinOp>(in.e), R[in.b].i, R[in.c].i, r, d);
        R[in.a].box = ok ? Value::integer(static_cast<std::int32_t>(r)) : Value::dbl(d);
        break;
      }
      case TOp::ArithNum: {
        const double x = as_num(R[in.b], in.f & kLhsInt);
        const double y = as_num(R[in.c], in.f & kRhsInt);
        R[in.a].d = kernel::darith(static_cast<BinOp>(in.e), x, y);
        break;
      }
      case TOp::CmpNum: {
        const auto op = static_cast<BinOp>(in.e);
        if ((in.f & kLhsInt) && (in.f & kRhsInt))
          R[in.a].i = kernel::compare(op, R[in.b].i, R[in.c].i);
        else
          R[in.a].i = kernel::compare(op, as_num(R[in.b], in.f & kLhsInt), as_num(R[in.c], in.f & kRhsInt));
        break;
      }
      case TOp::ArithBox: {
        const auto op = static_cast<BinOp>(in.e);
        Value r = (in.f & kDirect) ? vector_binop(op, R[in.b].box, R[in.c].box)
                                   : dispatch_binop(op, R[in.b].box, R[in.c].box);
        if (in.c != in.a) drop_temp(in.c);
        R[in.a].box = std::move(r);
        break;
      }
      case TOp::NegI:
        R[in.a].i = -R[in.b].i;
        break;
      case TOp::NegD:
        R[in.a].d = -R[in.b].d;
        break;
      case TOp::NegBox:
        R[in.a].box = negate(R[in.b].box);
        break;
      case TOp::Builtin: {
        const auto argc = static_cast<std::size_t>(in.c);
        scratch_.clear();
        for (std::size_t k = 0; k < argc; ++k) scratch_.push_back(std::move(R[in.a + k].box));
        const std::string& s =
            in.d >= 0 && static_cast<std::size_t>(in.d) < cf.strings.size() ? cf.strings[in.d] : std::string();
        Value r = call_builtin(static_cast<Builtin>(in.e), scratch_, s, &output_);
        scratch_.clear();
        R[in.a].box = std::move(r);
        break;
      }
      case TOp::SetIndexL:
      case TOp::SetIndexG: {
        const bool local = in.op == TOp::SetIndexL;
        Value& target = local ? R[in.b].box : globals_[in.b];
        if (target.is_unbound()) unbound(local ? f.locals[in.b] : module_->globals[in.b]);
        // A shadow slot holding the vector would force a copy.
        for (std::size_t s = 1; s < ns; ++s)
            if (shadow[s].same_box(target)) shadow[s] = Value();
        Value parts[3] = {std::move(target), std::move(R[in.c].box), std::move(R[in.c + 1].box)};
        try {
          target = call_builtin(Builtin::SetIndex, parts, std::string(), nullptr);
        } catch (...) {
          target = std::move(parts[0]);
          throw;
        }
        R[in.a].box = target;
        break;
      }
      case TOp::Call: {
        const auto argc = static_cast<std::uint32_t>(in.c);
        ArgView view{nullptr, R + in.a, cf.call_reps[in.d].data(), argc};
        Value r = invoke(static_cast<FunctionId>(in.b), view);
        for (std::uint32_t k = 0; k < argc; ++k) R[in.a + k].box = Value();
        R[in.a].box = std::move(r);
        break;
      }
      case TOp::Jump:
        pc = static_cast<std::uint32_t>(in.a);
        break;
      case TOp::JumpFalseL:
        if (R[in.a].i == 0) pc = static_cast<std::uint32_t>(in.b);
        break;
      case TOp::JumpFalseB: {
        const bool t = truthy(R[in.a].box);
        drop_temp(in.a);
        if (!t) pc = static_cast<std::uint32_t>(in.b);
        break;
      }
      case TOp::ForInit: {
        auto bound = [&](std::int32_t r, int rep) {
          switch (static_cast<Rep>(rep & 3)) {
            case Rep::Int:
            case Rep::Lgl: return static_cast<double>(R[r].i);
            case Rep::Dbl: return R[r].d;
            case Rep::Boxed: break;
          }
          return loop_bound(R[r].box);
        };
        const double lo = bound(in.b, in.f), hi = bound(in.c, in.f >> 2);
        L[in.a] = make_loop(lo, hi);
        drop_temp(in.b);
        drop_temp(in.c);
        break;
      }
      case TOp::ForNext: {
        LoopReg& r = L[in.a];
        if (r.remaining == 0) {
          pc = static_cast<std::uint32_t>(in.c);
          break;
        }
        R[in.b].i = r.cur;
        r.cur += r.step;
        --r.remaining;
        break;
      }
      case TOp::Ret:
        return std::move(R[in.a].box);
    }
  }
}

Value Vm::deoptimize(CompiledFunction& cf, const Reg* regs, const LoopReg* loops, const ArgView& args,
                     std::int32_t point, Value failing) {
  const FunctionId fn = cf.source_id;
  FunctionState& st = states_[fn];
  cf.valid = false;
  if (st.compiled.get() == &cf) st.compiled.reset();
  ++st.deopts;
  if (opt_.profiler == ProfilerMode::Full && ++st.window_deopts >= 3) st.blacklisted = true;
  const DeoptInfo& d = cf.deopts[static_cast<std::size_t>(point)];
  log_.push({EventKind::Deopt, units_, fn, d.origin.offset, render(type_of(failing))});

  Activation& act = activations_.back();
  act.marker = nullptr;
  act.shadow = nullptr;

  const BaselineFunction& f = module_->functions[fn];
  const std::size_t nv = f.n_locals() + f.max_stack;
  Value* locals = values_.alloc(nv);
  LoopReg* lr = loops_.alloc(f.n_loop_regs);
  BaselineStorage guard{values_, loops_, locals, nv, lr, f.n_loop_regs};
  for (std::uint32_t l = 0; l < cf.n_locals; ++l) {
    const Rep rep = cf.local_reps[l];
    if (rep == Rep::Boxed)
      locals[l] = regs[l].box;
    else if (d.assigned[l])
      locals[l] = box_raw(regs[l], rep);
  }
  Value* stack = locals + f.n_locals();
  std::uint32_t sp = 0;
  for (const DeoptEntry& e : d.stack)
    stack[sp++] = e.konst >= 0 ? cf.constants[e.konst] : box_raw(regs[e.reg], e.rep);
  stack[sp++] = std::move(failing);
  for (std::uint32_t i = 0; i < f.n_loop_regs; ++i) lr[i] = loops[i];
  return run_frame(f, locals, stack, sp, lr, args, d.resume_pc);
}

}  // namespace staleguard
