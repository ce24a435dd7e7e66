#include <cstdio>
#include <sstream>

#include "staleguard/bytecode.hpp"

namespace staleguard {

std::string_view op_name(Op op) {
  switch (op) {
    case Op::PushConst: return "push";
    case Op::PushNull: return "push_null";
    case Op::LdLocal:
    case Op::LdGlobal: return "ldvar";
    case Op::LdArg: return "ldarg";
    case Op::StLocal: return "stvar";
    case Op::StGlobal: return "stglobal";
    case Op::Pop: return "pop";
    case Op::Record: return "record";
    case Op::Arith: return "arith";
    case Op::Neg: return "neg";
    case Op::Call: return "call";
    case Op::CallBuiltin: return "builtin";
    case Op::SetIndexLocal:
    case Op::SetIndexGlobal: return "set_index";
    case Op::Jump: return "br";
    case Op::JumpIfFalse: return "brfalse";
    case Op::ForInit: return "for_init";
    case Op::ForNext: return "for_next";
    case Op::Return: return "ret";
  }
  return "?";
}

namespace {

std::string_view arith_name(BinOp op) {
  switch (op) {
    case BinOp::Add: return "add";
    case BinOp::Sub: return "sub";
    case BinOp::Mul: return "mul";
    case BinOp::Div: return "div";
    case BinOp::Mod: return "mod";
    case BinOp::Pow: return "pow";
    case BinOp::Lt: return "lt";
    case BinOp::Le: return "le";
    case BinOp::Gt: return "gt";
    case BinOp::Ge: return "ge";
    case BinOp::Eq: return "eq";
    case BinOp::Ne: return "ne";
  }
  return "?";
}

}  // namespace

std::string disassemble(const Module& m, const BaselineFunction& f) {
  std::ostringstream os;
  os << f.name << ":\n";
  for (std::size_t pc = 0; pc < f.code.size(); ++pc) {
    const Instr& in = f.code[pc];
    char num[16];
    std::snprintf(num, sizeof num, "%4zu ", pc);
    os << num;
    switch (in.op) {
      case Op::Record: os << "record#" << in.a; break;
      case Op::Arith: os << arith_name(static_cast<BinOp>(in.a)); break;
      case Op::PushConst: {
        const Value& c = f.constants[in.a];
        os << "push " << c.repr().substr(4) << (c.kind() == Kind::Integer ? "L" : "");
        break;
      }
      case Op::LdLocal:
      case Op::StLocal:
      case Op::SetIndexLocal: os << op_name(in.op) << ' ' << f.locals[in.a]; break;
      case Op::LdGlobal:
      case Op::StGlobal:
      case Op::SetIndexGlobal: os << op_name(in.op) << ' ' << m.globals[in.a]; break;
      case Op::LdArg: os << "ldarg " << f.params[in.a]; break;
      case Op::Call: os << "call " << m.functions[in.a].name << '/' << in.b; break;
      case Op::CallBuiltin:
        os << "builtin " << builtin_name(static_cast<Builtin>(in.a)) << '/' << in.b;
        break;
      case Op::Jump:
      case Op::JumpIfFalse: os << op_name(in.op) << ' ' << in.a; break;
      case Op::ForInit: os << "for_init r" << in.a; break;
      case Op::ForNext: os << "for_next r" << in.a << ", " << in.b; break;
      default: os << op_name(in.op);
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace staleguard
