#include <algorithm>
#include <unordered_map>
#include <unordered_set>

#include "staleguard/bytecode.hpp"

namespace staleguard {

namespace {

struct NameTable {
  std::vector<std::string> names;
  std::unordered_map<std::string, std::uint32_t> index;

  std::uint32_t add(const std::string& n) {
    auto [it, fresh] = index.try_emplace(n, static_cast<std::uint32_t>(names.size()));
    if (fresh) names.push_back(n);
    return it->second;
  }
  std::optional<std::uint32_t> find(const std::string& n) const {
    auto it = index.find(n);
    if (it == index.end()) return std::nullopt;
    return it->second;
  }
};

// Names a block binds locally, and names it assigns with `<<-`.
void collect_bindings(const Block& b, NameTable& locals, NameTable& supers);

void collect_expr(const Expr& e) {
  if (e.kind == Expr::Kind::Function)
    throw LoweringError(e.pos, "function literals are only supported as top-level definitions");
  for (const auto& a : e.args) collect_expr(*a);
}

void collect_bindings(const Block& b, NameTable& locals, NameTable& supers) {
  for (const auto& s : b) {
    switch (s->kind) {
      case Stmt::Kind::Assign:
      case Stmt::Kind::IndexAssign: locals.add(s->name); break;
      case Stmt::Kind::SuperAssign: supers.add(s->name); break;
      case Stmt::Kind::For:
        locals.add(s->name);
        collect_expr(*s->lo);
        collect_expr(*s->hi);
        break;
      default: break;
    }
    if (s->value) collect_expr(*s->value);
    if (s->index) collect_expr(*s->index);
    collect_bindings(s->body, locals, supers);
    collect_bindings(s->else_body, locals, supers);
  }
}

class FunctionLowerer {
 public:
  FunctionLowerer(BaselineFunction& f, const NameTable& globals, const NameTable& functions,
                  const std::vector<std::size_t>& arity, bool top_level)
      : f_(f), globals_(globals), functions_(functions), arity_(arity), top_(top_level) {}

  void lower_function(const std::vector<std::string>& params, const Block& body) {
    NameTable locals, supers;
    for (const auto& p : params) locals.add(p);
    if (!top_) collect_bindings(body, locals, supers);
    f_.locals = locals.names;
    for (std::size_t i = 0; i < locals.names.size(); ++i)
      locals_.emplace(locals.names[i], static_cast<std::uint32_t>(i));

    for (std::uint32_t i = 0; i < params.size(); ++i) {
      emit(Op::LdArg, static_cast<std::int32_t>(i));
      record();
      emit(Op::StLocal, static_cast<std::int32_t>(i));
      emit(Op::Pop);
    }
    block(body);
    emit(Op::Return);
  }

 private:
  BaselineFunction& f_;
  const NameTable& globals_;
  const NameTable& functions_;
  const std::vector<std::size_t>& arity_;
  bool top_;
  std::unordered_map<std::string, std::uint32_t> locals_;

  std::int32_t pc() const { return static_cast<std::int32_t>(f_.code.size()); }

  std::int32_t emit(Op op, std::int32_t a = 0, std::int32_t b = 0, std::int32_t c = 0) {
    f_.code.push_back({op, a, b, c});
    return pc() - 1;
  }

  void record() {
    auto site = static_cast<std::int32_t>(f_.record_sites.size());
    std::int32_t at = emit(Op::Record, site);
    f_.record_sites.push_back({f_.id, static_cast<std::uint32_t>(at)});
  }

  void patch(std::int32_t at, std::int32_t target) {
    if (f_.code[at].op == Op::ForNext)
      f_.code[at].b = target;
    else
      f_.code[at].a = target;
  }

  std::int32_t constant(Value v) {
    f_.constants.push_back(std::move(v));
    return static_cast<std::int32_t>(f_.constants.size() - 1);
  }

  std::optional<std::uint32_t> local(const std::string& n) const {
    if (top_) return std::nullopt;
    auto it = locals_.find(n);
    if (it == locals_.end()) return std::nullopt;
    return it->second;
  }

  std::uint32_t global(const std::string& n, SourcePos pos) const {
    auto g = globals_.find(n);
    if (!g) throw LoweringError(pos, "object '" + n + "' not found");
    return *g;
  }

  void load_var(const std::string& n, SourcePos pos) {
    if (auto l = local(n))
      emit(Op::LdLocal, static_cast<std::int32_t>(*l));
    else
      emit(Op::LdGlobal, static_cast<std::int32_t>(global(n, pos)));
    record();
  }

  void store_var(const std::string& n, SourcePos pos) {
    if (auto l = local(n))
      emit(Op::StLocal, static_cast<std::int32_t>(*l));
    else
      emit(Op::StGlobal, static_cast<std::int32_t>(global(n, pos)));
  }

  // Every block leaves exactly one value on the stack.
  void block(const Block& b) {
    if (b.empty()) {
      emit(Op::PushNull);
      return;
    }
    for (std::size_t i = 0; i < b.size(); ++i) {
      statement(*b[i]);
      if (i + 1 < b.size()) emit(Op::Pop);
    }
  }

  void statement(const Stmt& s) {
    switch (s.kind) {
      case Stmt::Kind::Assign:
        expr(*s.value);
        store_var(s.name, s.pos);
        return;
      case Stmt::Kind::SuperAssign:
        expr(*s.value);
        emit(Op::StGlobal, static_cast<std::int32_t>(global(s.name, s.pos)));
        return;
      case Stmt::Kind::IndexAssign:
        expr(*s.index);
        expr(*s.value);
        if (auto l = local(s.name))
          emit(Op::SetIndexLocal, static_cast<std::int32_t>(*l));
        else
          emit(Op::SetIndexGlobal, static_cast<std::int32_t>(global(s.name, s.pos)));
        record();
        store_var(s.name, s.pos);
        return;
      case Stmt::Kind::For: {
        expr(*s.lo);
        expr(*s.hi);
        auto reg = static_cast<std::int32_t>(f_.n_loop_regs++);
        emit(Op::ForInit, reg);
        std::int32_t head = emit(Op::ForNext, reg, -1);
        store_var(s.name, s.pos);
        emit(Op::Pop);
        block(s.body);
        emit(Op::Pop);
        emit(Op::Jump, head);
        patch(head, pc());
        emit(Op::PushNull);
        return;
      }
      case Stmt::Kind::While: {
        std::int32_t head = pc();
        expr(*s.value);
        std::int32_t exit = emit(Op::JumpIfFalse, -1);
        block(s.body);
        emit(Op::Pop);
        emit(Op::Jump, head);
        patch(exit, pc());
        emit(Op::PushNull);
        return;
      }
      case Stmt::Kind::If: {
        expr(*s.value);
        std::int32_t to_else = emit(Op::JumpIfFalse, -1);
        block(s.body);
        std::int32_t to_end = emit(Op::Jump, -1);
        patch(to_else, pc());
        if (s.has_else)
          block(s.else_body);
        else
          emit(Op::PushNull);
        patch(to_end, pc());
        return;
      }
      case Stmt::Kind::Expr:
        expr(*s.value);
        return;
    }
  }

  void expr(const Expr& e) {
    switch (e.kind) {
      case Expr::Kind::IntLit:
        emit(Op::PushConst, constant(Value::integer(e.int_value)));
        return;
      case Expr::Kind::DblLit:
        emit(Op::PushConst, constant(Value::dbl(e.dbl_value)));
        return;
      case Expr::Kind::BoolLit:
        emit(Op::PushConst, constant(Value::logical(e.bool_value)));
        return;
      case Expr::Kind::Var:
        if (functions_.find(e.name) && !local(e.name) && !globals_.find(e.name))
          throw LoweringError(e.pos, "functions are not first-class values: '" + e.name + "'");
        load_var(e.name, e.pos);
        return;
      case Expr::Kind::Binary:
        expr(*e.args[0]);
        expr(*e.args[1]);
        emit(Op::Arith, static_cast<std::int32_t>(e.op));
        record();
        return;
      case Expr::Kind::Negate:
        expr(*e.args[0]);
        emit(Op::Neg);
        record();
        return;
      case Expr::Kind::Structure:
        expr(*e.args[0]);
        f_.strings.push_back(e.name);
        emit(Op::CallBuiltin, static_cast<std::int32_t>(Builtin::Structure), 1,
             static_cast<std::int32_t>(f_.strings.size() - 1));
        record();
        return;
      case Expr::Kind::Index:
        load_var(e.name, e.pos);
        expr(*e.args[0]);
        emit(Op::CallBuiltin, static_cast<std::int32_t>(Builtin::Index), 2);
        record();
        return;
      case Expr::Kind::Call: {
        auto argc = static_cast<std::int32_t>(e.args.size());
        if (auto fn = functions_.find(e.name)) {
          if (arity_[*fn] != e.args.size())
            throw LoweringError(e.pos, e.name + "() takes " + std::to_string(arity_[*fn]) +
                                           " argument(s), got " + std::to_string(argc));
          for (const auto& a : e.args) expr(*a);
          emit(Op::Call, static_cast<std::int32_t>(*fn + 1), argc);
          return;
        }
        auto b = lookup_builtin(e.name);
        if (!b || *b == Builtin::Structure)
          throw LoweringError(e.pos, "could not find function '" + e.name + "'");
        for (const auto& a : e.args) expr(*a);
        emit(Op::CallBuiltin, static_cast<std::int32_t>(*b), argc);
        record();
        return;
      }
      case Expr::Kind::Function:
        throw LoweringError(e.pos, "function literals are only supported as top-level definitions");
    }
  }
};

int stack_effect(const Instr& in) {
  switch (in.op) {
    case Op::PushConst:
    case Op::PushNull:
    case Op::LdLocal:
    case Op::LdGlobal:
    case Op::LdArg: return 1;
    case Op::Pop:
    case Op::Arith:
    case Op::JumpIfFalse:
    case Op::SetIndexLocal:
    case Op::SetIndexGlobal:
    case Op::Return: return -1;
    case Op::ForInit: return -2;
    case Op::ForNext: return 1;  // fallthrough edge
    case Op::Call:
    case Op::CallBuiltin: return 1 - in.b;
    default: return 0;
  }
}

// Abstract interpretation of stack depth; also validates that merge points
// agree.
void compute_depths(BaselineFunction& f) {
  f.depth_at.assign(f.code.size(), -1);
  std::vector<std::int32_t> work{0};
  f.depth_at[0] = 0;
  std::int32_t max_depth = 0;
  auto flow = [&](std::int32_t to, std::int32_t d) {
    if (to < 0 || to >= static_cast<std::int32_t>(f.code.size()))
      throw std::logic_error("jump out of range in " + f.name);
    if (f.depth_at[to] == -1) {
      f.depth_at[to] = d;
      work.push_back(to);
    } else if (f.depth_at[to] != d) {
      throw std::logic_error("inconsistent stack depth in " + f.name);
    }
  };
  while (!work.empty()) {
    std::int32_t p = work.back();
    work.pop_back();
    const Instr& in = f.code[p];
    std::int32_t d = f.depth_at[p];
    std::int32_t nd = d + stack_effect(in);
    if (nd < 0) throw std::logic_error("stack underflow in " + f.name);
    max_depth = std::max({max_depth, d, nd});
    switch (in.op) {
      case Op::Return: break;
      case Op::Jump: flow(in.a, d); break;
      case Op::JumpIfFalse:
        flow(in.a, nd);
        flow(p + 1, nd);
        break;
      case Op::ForNext:
        flow(in.b, d);
        flow(p + 1, nd);
        break;
      default: flow(p + 1, nd);
    }
  }
  f.max_stack = static_cast<std::uint32_t>(max_depth);
}

}  // namespace

std::optional<std::uint32_t> BaselineFunction::site_at(std::uint32_t pc) const {
  if (pc >= code.size() || code[pc].op != Op::Record) return std::nullopt;
  return static_cast<std::uint32_t>(code[pc].a);
}

std::optional<FunctionId> Module::find_function(std::string_view name) const {
  for (const auto& f : functions)
    if (f.id != kTopLevel && f.name == name) return f.id;
  return std::nullopt;
}

std::optional<std::uint32_t> Module::find_global(std::string_view name) const {
  for (std::size_t i = 0; i < globals.size(); ++i)
    if (globals[i] == name) return static_cast<std::uint32_t>(i);
  return std::nullopt;
}

std::size_t Module::total_record_sites() const {
  std::size_t n = 0;
  for (const auto& f : functions) n += f.record_sites.size();
  return n;
}

Module lower(const Program& program, const std::vector<std::string>& extra_globals) {
  NameTable globals, functions;
  std::vector<std::size_t> arity;
  for (const auto& fs : program.functions) {
    functions.add(fs.name);
    arity.push_back(fs.params.size());
  }

  for (const auto& g : extra_globals) globals.add(g);
  {
    NameTable top_locals, supers;
    collect_bindings(program.top_level, top_locals, supers);
    for (const auto& n : top_locals.names) globals.add(n);
    for (const auto& n : supers.names) globals.add(n);
  }
  for (const auto& fs : program.functions) {
    NameTable locals, supers;
    collect_bindings(fs.body, locals, supers);
    for (const auto& n : supers.names) globals.add(n);
  }
  for (const auto& g : globals.names)
    if (functions.find(g))
      throw LoweringError({}, "'" + g + "' is both a function and a variable");

  Module m;
  m.globals = globals.names;
  m.functions.resize(program.functions.size() + 1);

  BaselineFunction& top = m.functions[0];
  top.id = kTopLevel;
  top.name = "<toplevel>";
  FunctionLowerer(top, globals, functions, arity, true).lower_function({}, program.top_level);

  for (std::size_t i = 0; i < program.functions.size(); ++i) {
    const FunctionSource& fs = program.functions[i];
    BaselineFunction& f = m.functions[i + 1];
    f.id = static_cast<FunctionId>(i + 1);
    f.name = fs.name;
    f.params = fs.params;
    FunctionLowerer(f, globals, functions, arity, false).lower_function(fs.params, fs.body);
  }
  for (auto& f : m.functions) compute_depths(f);
  return m;
}

}  // namespace staleguard
