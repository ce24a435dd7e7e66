#include <algorithm>
#include <sstream>

#include "staleguard/compiled.hpp"

namespace staleguard {

std::string_view rep_name(Rep r) {
  switch (r) {
    case Rep::Boxed: return "boxed";
    case Rep::Int: return "int";
    case Rep::Dbl: return "dbl";
    case Rep::Lgl: return "lgl";
  }
  return "?";
}

std::string_view top_name(TOp op) {
  switch (op) {
    case TOp::LdConst: return "ldconst";
    case TOp::LdConstI: return "ldconst.i";
    case TOp::LdConstD: return "ldconst.d";
    case TOp::Mov: return "mov";
    case TOp::Move: return "move";
    case TOp::MovRaw: return "mov.raw";
    case TOp::BoxI: return "box.i";
    case TOp::BoxD: return "box.d";
    case TOp::BoxL: return "box.l";
    case TOp::Clear: return "clear";
    case TOp::CheckBound: return "checkbound";
    case TOp::LdGlobal: return "ldglobal";
    case TOp::StGlobal: return "stglobal";
    case TOp::LdArg: return "ldarg";
    case TOp::LdArgI: return "ldarg.i";
    case TOp::LdArgD: return "ldarg.d";
    case TOp::GuardI: return "guard.i";
    case TOp::GuardD: return "guard.d";
    case TOp::GuardPlain: return "guard.plain";
    case TOp::Observe: return "observe";
    case TOp::AddII: return "add.ii";
    case TOp::SubII: return "sub.ii";
    case TOp::MulII: return "mul.ii";
    case TOp::ArithII: return "arith.ii";
    case TOp::ArithIIBox: return "arith.ii.box";
    case TOp::ArithNum: return "arith.num";
    case TOp::CmpNum: return "cmp.num";
    case TOp::ArithBox: return "arith.box";
    case TOp::NegI: return "neg.i";
    case TOp::NegD: return "neg.d";
    case TOp::NegBox: return "neg.box";
    case TOp::Builtin: return "builtin";
    case TOp::SetIndexL: return "setindex.l";
    case TOp::SetIndexG: return "setindex.g";
    case TOp::Call: return "call";
    case TOp::Jump: return "jump";
    case TOp::JumpFalseL: return "jumpfalse.l";
    case TOp::JumpFalseB: return "jumpfalse.b";
    case TOp::ForInit: return "forinit";
    case TOp::ForNext: return "fornext";
    case TOp::Ret: return "ret";
  }
  return "?";
}

std::uint32_t CompiledFunction::n_generic_ops() const {
  std::uint32_t n = 0;
  for (const auto& in : code)
    if ((in.op == TOp::ArithBox && !(in.f & kDirect)) || in.op == TOp::ArithIIBox || in.op == TOp::NegBox)
      ++n;
  return n;
}

std::string CompiledFunction::dump() const {
  std::ostringstream os;
  for (std::size_t i = 0; i < code.size(); ++i) {
    const TInstr& in = code[i];
    os << i << ' ' << top_name(in.op) << ' ' << in.a << ' ' << in.b << ' ' << in.c << ' '
       << in.d << ' ' << int(in.e) << ' ' << int(in.f) << '\n';
  }
  return os.str();
}

namespace {

constexpr std::int8_t kUnset = -1;

std::int8_t join_rep(std::int8_t a, std::int8_t b) {
  if (a == kUnset) return b;
  if (b == kUnset) return a;
  return a == b ? a : static_cast<std::int8_t>(Rep::Boxed);
}

bool is_raw(Rep r) { return r != Rep::Boxed; }

Rep const_rep(const Value& v) {
  if (v.size() != 1 || v.has_class()) return Rep::Boxed;
  switch (v.kind()) {
    case Kind::Integer: return Rep::Int;
    case Kind::Double: return Rep::Dbl;
    case Kind::Logical: return Rep::Lgl;
  }
  return Rep::Boxed;
}

struct Entry {
  enum class Src : std::uint8_t { Reg, Const, Local };
  Rep rep = Rep::Boxed;
  Src src = Src::Reg;
  std::int32_t idx = 0;
  bool plain = false;  // boxed value known to carry no class tag
};

class Specializer {
 public:
  Specializer(const BaselineFunction& f, const FeedbackTable& fb, const Overrides& ov)
      : f_(f), overrides_(ov) {
    eff_ = fb.observed;
    eff_.resize(f.record_sites.size());
    for (const auto& [origin, type] : ov) {
      auto it = std::find(f.record_sites.begin(), f.record_sites.end(), origin);
      if (origin.function_id != f.id || it == f.record_sites.end())
        throw std::invalid_argument("override for unknown origin " + std::to_string(origin.offset));
      eff_[static_cast<std::size_t>(it - f.record_sites.begin())] = type;
    }
  }

  std::shared_ptr<CompiledFunction> run() {
    if (f_.record_sites.empty()) throw SpecializeError(f_.name + ": no record sites");
    assignment_analysis();
    find_targets();

    const std::size_t nl = f_.n_locals();
    local_rep_.assign(nl, kUnset);
    forced_.assign(nl, false);
    for (int guard = 0;; ++guard) {
      if (guard > 64) throw std::logic_error("local representation fixpoint did not converge");
      stored_.assign(nl, kUnset);
      changed_ = false;
      pass(false);
      for (std::size_t l = 0; l < nl; ++l) {
        std::int8_t j = join_rep(local_rep_[l], stored_[l]);
        if (j != local_rep_[l]) {
          local_rep_[l] = j;
          changed_ = true;
        }
      }
      if (!changed_) break;
    }

    cf_ = std::make_shared<CompiledFunction>();
    cf_->source_id = f_.id;
    cf_->n_locals = static_cast<std::uint32_t>(nl);
    cf_->n_regs = static_cast<std::uint32_t>(nl + f_.max_stack + 1);
    cf_->n_loop_regs = f_.n_loop_regs;
    cf_->constants = f_.constants;
    cf_->strings = f_.strings;
    cf_->overrides = overrides_;
    for (std::size_t l = 0; l < nl; ++l) cf_->local_reps.push_back(rep(l));
    cf_->param_reps.assign(f_.n_params(), Rep::Boxed);
    null_const_ = static_cast<std::int32_t>(cf_->constants.size());
    cf_->constants.push_back(Value::null());
    changed_ = false;
    pass(true);
    if (changed_) throw std::logic_error("representation changed while emitting " + f_.name);

    for (const auto& [tpc, bpc] : fixups_) {
      TInstr& in = cf_->code[tpc];
      std::int32_t target = label_[bpc];
      if (in.op == TOp::Jump)
        in.a = target;
      else if (in.op == TOp::ForNext)
        in.c = target;
      else
        in.b = target;
    }
    for (const auto& s : cf_->slot_map)
      cf_->profile.push_back({s.slot, s.origin, FeedbackType::bottom(), 0, s.compiled});
    cf_->full_profile = cf_->profile;
    cf_->slots.assign(cf_->n_slots + 1, Value());
    return cf_;
  }

 private:
  const BaselineFunction& f_;
  const Overrides& overrides_;
  std::vector<FeedbackType> eff_;
  std::vector<std::vector<std::uint8_t>> must_, may_;
  std::vector<bool> target_;

  std::vector<std::int8_t> local_rep_;
  std::vector<bool> forced_;
  std::vector<std::int8_t> stored_;
  bool changed_ = false;

  bool emit_ = false;
  std::shared_ptr<CompiledFunction> cf_;
  std::vector<Entry> stack_;
  std::vector<std::int32_t> label_;
  std::vector<std::pair<std::int32_t, std::int32_t>> fixups_;
  std::int32_t null_const_ = 0;

  Rep rep(std::size_t l) const {
    if (forced_[l] || local_rep_[l] == kUnset) return Rep::Boxed;
    return static_cast<Rep>(local_rep_[l]);
  }
  std::int32_t sreg(std::size_t k) const { return static_cast<std::int32_t>(f_.n_locals() + k); }

  void force(std::size_t l) {
    if (!forced_[l] && is_raw(rep(l))) {
      forced_[l] = true;
      changed_ = true;
    }
  }

  // Definite (must) and possible (may) assignment of locals per pc.
  void assignment_analysis() {
    const std::size_t n = f_.code.size(), nl = f_.n_locals();
    must_.assign(n, std::vector<std::uint8_t>(nl, 1));
    may_.assign(n, std::vector<std::uint8_t>(nl, 0));
    std::vector<bool> seen(n, false);
    std::vector<std::uint32_t> work{0};
    must_[0].assign(nl, 0);
    seen[0] = true;
    while (!work.empty()) {
      std::uint32_t pc = work.back();
      work.pop_back();
      auto out_must = must_[pc];
      auto out_may = may_[pc];
      const Instr& in = f_.code[pc];
      if (in.op == Op::StLocal) out_must[in.a] = out_may[in.a] = 1;
      auto flow = [&](std::uint32_t to) {
        const bool first = !seen[to];
        bool grew = first;
        seen[to] = true;
        for (std::size_t l = 0; l < nl; ++l) {
          std::uint8_t m = first ? out_must[l] : (must_[to][l] & out_must[l]);
          std::uint8_t y = may_[to][l] | out_may[l];
          if (m != must_[to][l] || y != may_[to][l]) grew = true;
          must_[to][l] = m;
          may_[to][l] = y;
        }
        if (grew) work.push_back(to);
      };
      switch (in.op) {
        case Op::Return: break;
        case Op::Jump: flow(in.a); break;
        case Op::JumpIfFalse:
          flow(pc + 1);
          flow(in.a);
          break;
        case Op::ForNext:
          flow(pc + 1);
          flow(in.b);
          break;
        default: flow(pc + 1);
      }
    }
  }

  void find_targets() {
    target_.assign(f_.code.size() + 1, false);
    for (const auto& in : f_.code) {
      if (in.op == Op::Jump || in.op == Op::JumpIfFalse) target_[in.a] = true;
      if (in.op == Op::ForNext) target_[in.b] = true;
    }
  }

  std::int32_t emit(TInstr in) {
    if (!emit_) return -1;
    cf_->code.push_back(in);
    return static_cast<std::int32_t>(cf_->code.size() - 1);
  }
  std::int32_t emit(TOp op, std::int32_t a = 0, std::int32_t b = 0, std::int32_t c = 0,
                    std::int32_t d = 0, std::uint8_t e = 0, std::uint8_t f = 0) {
    return emit(TInstr{op, e, f, a, b, c, d});
  }

  void jump_fixup(std::int32_t tpc, std::int32_t bpc) {
    if (emit_) fixups_.emplace_back(tpc, bpc);
  }

  void record_against(std::uint32_t site) {
    if (emit_) cf_->compiled_against[f_.record_sites[site]] = eff_[site];
  }

  // Deopt point resuming at baseline Record `rpc`, the failing value
  // replacing stack entry `k`.
  std::int32_t deopt_point(std::uint32_t rpc, std::size_t k) {
    for (std::size_t l = 0; l < f_.n_locals(); ++l)
      if (is_raw(rep(l)) && may_[rpc][l] && !must_[rpc][l]) force(l);
    if (!emit_) return -1;
    DeoptInfo d;
    d.resume_pc = rpc;
    d.origin = f_.record_sites[f_.code[rpc].a];
    for (std::size_t i = 0; i < k; ++i) {
      const Entry& e = stack_[i];
      DeoptEntry de;
      de.rep = e.rep;
      if (e.src == Entry::Src::Const)
        de.konst = e.idx;
      else
        de.reg = e.idx;
      d.stack.push_back(de);
    }
    d.assigned.resize(f_.n_locals());
    for (std::size_t l = 0; l < f_.n_locals(); ++l)
      d.assigned[l] = is_raw(rep(l)) ? must_[rpc][l] : 1;
    cf_->deopts.push_back(std::move(d));
    return static_cast<std::int32_t>(cf_->deopts.size() - 1);
  }

  // Register and rep for entry k, loading raw constants into S_k.
  std::pair<std::int32_t, Rep> use(std::size_t k) {
    Entry& e = stack_[k];
    if (e.src == Entry::Src::Const) {
      if (e.rep == Rep::Boxed) return {boxed(k), Rep::Boxed};
      const Value& c = f_.constants[e.idx];
      if (e.rep == Rep::Dbl)
        emit(TOp::LdConstD, sreg(k), e.idx);
      else
        emit(TOp::LdConstI, sreg(k), c.int_at(0));
      e = Entry{e.rep, Entry::Src::Reg, sreg(k), false};
    }
    return {e.idx, e.rep};
  }

  // Boxed register holding entry k (a boxed local's own register is fine).
  std::int32_t boxed(std::size_t k) {
    Entry& e = stack_[k];
    if (e.rep == Rep::Boxed) {
      if (e.src == Entry::Src::Const) {
        emit(TOp::LdConst, sreg(k), e.idx);
        e = Entry{Rep::Boxed, Entry::Src::Reg, sreg(k), true};
      }
      return e.idx;
    }
    if (e.src == Entry::Src::Const) {
      emit(TOp::LdConst, sreg(k), e.idx);
    } else {
      TOp op = e.rep == Rep::Int ? TOp::BoxI : e.rep == Rep::Dbl ? TOp::BoxD : TOp::BoxL;
      emit(op, sreg(k), e.idx);
    }
    e = Entry{Rep::Boxed, Entry::Src::Reg, sreg(k), true};
    return e.idx;
  }

  // Boxed value in canonical register S_k.
  void boxed_in_place(std::size_t k) {
    std::int32_t r = boxed(k);
    if (r != sreg(k)) {
      emit(TOp::Mov, sreg(k), r);
      stack_[k] = Entry{Rep::Boxed, Entry::Src::Reg, sreg(k), stack_[k].plain};
    }
  }

  // Value (raw or boxed) in canonical register S_k.
  Rep in_place(std::size_t k) {
    auto [r, rp] = use(k);
    if (r != sreg(k)) {
      emit(is_raw(rp) ? TOp::MovRaw : TOp::Mov, sreg(k), r);
      stack_[k] = Entry{rp, Entry::Src::Reg, sreg(k), stack_[k].plain};
    }
    return rp;
  }

  // Copies entries aliasing local l before l is overwritten.
  void unalias(std::int32_t l, std::size_t below) {
    for (std::size_t k = 0; k < below; ++k)
      if (stack_[k].src == Entry::Src::Local && stack_[k].idx == l) in_place(k);
  }

  void normalize() {
    for (std::size_t k = 0; k < stack_.size(); ++k) {
      boxed_in_place(k);
      stack_[k].plain = false;
    }
  }

  void push_reg(Rep r, bool plain = false) {
    std::size_t k = stack_.size();
    stack_.push_back(Entry{r, Entry::Src::Reg, sreg(k), plain});
  }

  void pass(bool emit_mode) {
    emit_ = emit_mode;
    stack_.clear();
    fixups_.clear();
    label_.assign(f_.code.size() + 1, -1);
    bool fallthrough = true;

    for (std::uint32_t pc = 0; pc < f_.code.size(); ++pc) {
      if (f_.depth_at[pc] < 0) {
        fallthrough = false;
        continue;
      }
      if (target_[pc]) {
        if (fallthrough) normalize();
        stack_.assign(static_cast<std::size_t>(f_.depth_at[pc]), Entry{});
        for (std::size_t k = 0; k < stack_.size(); ++k)
          stack_[k] = Entry{Rep::Boxed, Entry::Src::Reg, sreg(k), false};
      } else if (!fallthrough) {
        continue;
      }
      fallthrough = true;
      label_[pc] = emit_ ? static_cast<std::int32_t>(cf_->code.size()) : 0;
      step(pc, fallthrough);
    }
  }

  void step(std::uint32_t pc, bool& fallthrough) {
    const Instr& in = f_.code[pc];
    const std::size_t d = stack_.size();
    switch (in.op) {
      case Op::PushConst:
        stack_.push_back(Entry{const_rep(f_.constants[in.a]), Entry::Src::Const, in.a, true});
        return;
      case Op::PushNull:
        stack_.push_back(Entry{Rep::Boxed, Entry::Src::Const, null_const_, true});
        return;
      case Op::LdLocal: {
        auto l = static_cast<std::size_t>(in.a);
        if (!must_[pc][l]) {
          force(l);
          emit(TOp::CheckBound, in.a);
        }
        stack_.push_back(Entry{rep(l), Entry::Src::Local, in.a, false});
        return;
      }
      case Op::LdGlobal:
        emit(TOp::LdGlobal, sreg(d), in.a);
        push_reg(Rep::Boxed);
        return;
      case Op::LdArg: {
        std::uint32_t rpc = pc + 1;
        auto site = static_cast<std::uint32_t>(f_.code[rpc].a);
        const FeedbackType& t = eff_[site];
        record_against(site);
        if (t.is_unboxable_scalar()) {
          Rep r = t.sole_kind() == Kind::Integer ? Rep::Int : Rep::Dbl;
          std::int32_t dp = deopt_point(rpc, d);
          emit(r == Rep::Int ? TOp::LdArgI : TOp::LdArgD, sreg(d), in.a, dp);
          if (emit_) cf_->param_reps[in.a] = r;
          push_reg(r);
        } else {
          emit(TOp::LdArg, sreg(d), in.a);
          push_reg(Rep::Boxed);
        }
        return;
      }
      case Op::StLocal: {
        auto l = static_cast<std::size_t>(in.a);
        unalias(in.a, d - 1);
        Entry& e = stack_[d - 1];
        Rep er = e.src == Entry::Src::Local ? rep(static_cast<std::size_t>(e.idx)) : e.rep;
        stored_[l] = join_rep(stored_[l], static_cast<std::int8_t>(er));
        if (e.src == Entry::Src::Local && e.idx == in.a) return;
        Rep lr = rep(l);
        bool plain = e.plain;
        if (is_raw(lr)) {
          if (er != lr) {
            if (emit_) throw std::logic_error("representation mismatch storing " + f_.locals[l]);
            force(l);
            lr = Rep::Boxed;
          }
        }
        if (is_raw(lr) && e.src == Entry::Src::Const) {
          if (lr == Rep::Dbl)
            emit(TOp::LdConstD, in.a, e.idx);
          else
            emit(TOp::LdConstI, in.a, f_.constants[e.idx].int_at(0));
        } else if (is_raw(lr)) {
          emit(TOp::MovRaw, in.a, use(d - 1).first);
        } else {
          bool owned = e.src == Entry::Src::Reg && e.rep == Rep::Boxed;
          std::int32_t r = boxed(d - 1);
          emit(owned ? TOp::Move : TOp::Mov, in.a, r);
          plain = stack_[d - 1].plain;
        }
        stack_[d - 1] = Entry{lr, Entry::Src::Local, in.a, plain};
        return;
      }
      case Op::StGlobal:
        emit(TOp::StGlobal, in.a, boxed(d - 1));
        return;
      case Op::Pop: {
        Entry e = stack_.back();
        stack_.pop_back();
        if (e.src == Entry::Src::Reg && e.rep == Rep::Boxed) emit(TOp::Clear, e.idx);
        return;
      }
      case Op::Record:
        record(pc, static_cast<std::uint32_t>(in.a));
        return;
      case Op::Arith:
        arith(pc, static_cast<BinOp>(in.a));
        return;
      case Op::Neg: {
        auto [r, rp] = use(d - 1);
        stack_.pop_back();
        if (rp == Rep::Dbl) {
          emit(TOp::NegD, sreg(d - 1), r);
          push_reg(Rep::Dbl);
        } else if (is_raw(rp)) {
          emit(TOp::NegI, sreg(d - 1), r);
          push_reg(Rep::Int);
        } else {
          emit(TOp::NegBox, sreg(d - 1), r);
          push_reg(Rep::Boxed);
        }
        return;
      }
      case Op::CallBuiltin: {
        std::size_t first = d - static_cast<std::size_t>(in.b);
        for (std::size_t k = first; k < d; ++k) boxed_in_place(k);
        auto b = static_cast<Builtin>(in.a);
        emit(TOp::Builtin, sreg(first), sreg(first), in.b, in.c, static_cast<std::uint8_t>(b));
        stack_.resize(first);
        push_reg(Rep::Boxed, b != Builtin::Structure && b != Builtin::Print && b != Builtin::SetIndex);
        return;
      }
      case Op::SetIndexLocal:
      case Op::SetIndexGlobal: {
        std::size_t first = d - 2;
        boxed_in_place(first);
        boxed_in_place(first + 1);
        bool local = in.op == Op::SetIndexLocal;
        if (local) {
          // the target is updated through its box
          force(static_cast<std::size_t>(in.a));
          unalias(in.a, first);
        }
        emit(local ? TOp::SetIndexL : TOp::SetIndexG, sreg(first), in.a, sreg(first));
        stack_.resize(first);
        push_reg(Rep::Boxed);
        return;
      }
      case Op::Call: {
        std::size_t first = d - static_cast<std::size_t>(in.b);
        std::vector<Rep> reps;
        for (std::size_t k = first; k < d; ++k) {
          const Entry& e = stack_[k];
          Rep r = e.src == Entry::Src::Local ? rep(static_cast<std::size_t>(e.idx)) : e.rep;
          if (r == Rep::Int || r == Rep::Dbl) {
            reps.push_back(in_place(k));
          } else {
            boxed_in_place(k);
            reps.push_back(Rep::Boxed);
          }
        }
        std::int32_t table = 0;
        if (emit_) {
          cf_->call_reps.push_back(std::move(reps));
          table = static_cast<std::int32_t>(cf_->call_reps.size() - 1);
        }
        emit(TOp::Call, sreg(first), in.a, in.b, table);
        stack_.resize(first);
        push_reg(Rep::Boxed);
        return;
      }
      case Op::Jump: {
        normalize();
        std::int32_t t = emit(TOp::Jump, 0);
        jump_fixup(t, in.a);
        fallthrough = false;
        return;
      }
      case Op::JumpIfFalse: {
        auto [r, rp] = use(d - 1);
        bool lgl = rp == Rep::Lgl;
        if (!lgl) r = boxed(d - 1);
        stack_.pop_back();
        normalize();
        std::int32_t t = emit(lgl ? TOp::JumpFalseL : TOp::JumpFalseB, r, 0);
        jump_fixup(t, in.a);
        return;
      }
      case Op::ForInit: {
        auto [lo, lr] = use(d - 2);
        auto [hi, hr] = use(d - 1);
        emit(TOp::ForInit, in.a, lo, hi, 0, 0,
             static_cast<std::uint8_t>(static_cast<int>(lr) | (static_cast<int>(hr) << 2)));
        stack_.resize(d - 2);
        return;
      }
      case Op::ForNext: {
        std::int32_t t = emit(TOp::ForNext, in.a, sreg(d), 0);
        jump_fixup(t, in.b);
        push_reg(Rep::Int);
        return;
      }
      case Op::Return:
        emit(TOp::Ret, boxed(d - 1));
        fallthrough = false;
        return;
    }
  }

  void record(std::uint32_t pc, std::uint32_t site) {
    const std::size_t k = stack_.size() - 1;
    Entry& e = stack_[k];
    Rep r = e.src == Entry::Src::Local ? rep(static_cast<std::size_t>(e.idx)) : e.rep;
    if (is_raw(r)) return;  // statically typed; nothing to check
    const FeedbackType& t = eff_[site];
    record_against(site);
    std::int32_t src = boxed(k);
    if (t.is_unboxable_scalar()) {
      std::int32_t dp = deopt_point(pc, k);
      bool is_int = t.sole_kind() == Kind::Integer;
      emit(is_int ? TOp::GuardI : TOp::GuardD, sreg(k), src, dp);
      stack_[k] = Entry{is_int ? Rep::Int : Rep::Dbl, Entry::Src::Reg, sreg(k), false};
      return;
    }
    if (!t.is_partial()) return;  // Bottom or Top: unmapped
    std::int32_t slot = 0;
    if (emit_) {
      slot = static_cast<std::int32_t>(++cf_->n_slots);
      cf_->slot_map.push_back({static_cast<std::uint32_t>(slot), f_.record_sites[site], t});
    }
    if (!t.attr_seen() && !stack_[k].plain) {
      std::int32_t dp = deopt_point(pc, k);
      emit(TOp::GuardPlain, src, dp, slot);
      stack_[k].plain = true;
    } else {
      emit(TOp::Observe, src, 0, slot);
    }
  }

  void arith(std::uint32_t pc, BinOp op) {
    const std::size_t d = stack_.size();
    std::uint32_t rpc = pc + 1;
    auto site = static_cast<std::uint32_t>(f_.code[rpc].a);
    auto rep_of = [&](std::size_t k) {
      const Entry& e = stack_[k];
      return e.src == Entry::Src::Local ? rep(static_cast<std::size_t>(e.idx)) : e.rep;
    };
    Rep ra = rep_of(d - 2), rb = rep_of(d - 1);
    std::int32_t dst = sreg(d - 2);

    if (is_raw(ra) && is_raw(rb)) {
      auto [a, ar] = use(d - 2);
      auto [b, br] = use(d - 1);
      stack_.resize(d - 2);
      auto flags = static_cast<std::uint8_t>((ar != Rep::Dbl ? kLhsInt : 0) |
                                             (br != Rep::Dbl ? kRhsInt : 0));
      auto opb = static_cast<std::uint8_t>(op);
      if (is_comparison(op)) {
        emit(TOp::CmpNum, dst, a, b, 0, opb, flags);
        push_reg(Rep::Lgl);
        return;
      }
      if (ar == Rep::Dbl || br == Rep::Dbl || op == BinOp::Div || op == BinOp::Pow) {
        emit(TOp::ArithNum, dst, a, b, 0, opb, flags);
        push_reg(Rep::Dbl);
        return;
      }
      const FeedbackType& t = eff_[site];
      bool int_result = t.is_bottom() || (t.is_unboxable_scalar() && t.sole_kind() == Kind::Integer);
      if (int_result) {
        record_against(site);
        std::int32_t dp = deopt_point(rpc, d - 2);
        TOp top = op == BinOp::Add   ? TOp::AddII
                  : op == BinOp::Sub ? TOp::SubII
                  : op == BinOp::Mul ? TOp::MulII
                                     : TOp::ArithII;
        emit(top, dst, a, b, dp, opb);
        push_reg(Rep::Int);
      } else {
        emit(TOp::ArithIIBox, dst, a, b, 0, opb);
        push_reg(Rep::Boxed, true);
      }
      return;
    }

    std::int32_t a = boxed(d - 2);
    std::int32_t b = boxed(d - 1);
    bool direct = stack_[d - 2].plain && stack_[d - 1].plain;
    stack_.resize(d - 2);
    emit(TOp::ArithBox, dst, a, b, 0, static_cast<std::uint8_t>(op), direct ? kDirect : 0);
    push_reg(Rep::Boxed, direct);
  }
};

}  // namespace

std::shared_ptr<CompiledFunction> specialize(const BaselineFunction& f, const FeedbackTable& feedback,
                                             const Overrides& overrides) {
  return Specializer(f, feedback, overrides).run();
}

}  // namespace staleguard
