#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "staleguard/ast.hpp"
#include "staleguard/runtime.hpp"
#include "staleguard/value.hpp"

namespace staleguard {

using FunctionId = std::uint32_t;
inline constexpr FunctionId kTopLevel = 0;

// Stack bytecode of the baseline tier. Operands a/b/c are op-specific.
enum class Op : std::uint8_t {
  PushConst,       // a = constant index
  PushNull,
  LdLocal,         // a = local slot
  LdGlobal,        // a = global index
  LdArg,           // a = argument index (function entry only)
  StLocal,         // a = local slot; value stays on the stack
  StGlobal,        // a = global index; value stays on the stack
  Pop,
  Record,          // a = record-site index; records top of stack
  Arith,           // a = BinOp
  Neg,
  Call,            // a = callee id, b = argc
  CallBuiltin,     // a = Builtin, b = argc, c = string index (structure tag)
  SetIndexLocal,   // a = local slot; pops value, index; pushes updated vector
  SetIndexGlobal,  // a = global index
  Jump,            // a = target pc
  JumpIfFalse,     // a = target pc; pops condition
  ForInit,         // a = loop register; pops hi, lo
  ForNext,         // a = loop register, b = exit pc; pushes next integer
  Return,
};

std::string_view op_name(Op op);

struct Instr {
  Op op;
  std::int32_t a = 0;
  std::int32_t b = 0;
  std::int32_t c = 0;
};

struct FeedbackOrigin {
  FunctionId function_id = 0;
  std::uint32_t offset = 0;  // baseline pc of the Record instruction

  auto operator<=>(const FeedbackOrigin&) const = default;
};

struct FeedbackOriginHash {
  std::size_t operator()(const FeedbackOrigin& o) const noexcept {
    return (static_cast<std::size_t>(o.function_id) << 32) ^ o.offset;
  }
};

struct BaselineFunction {
  FunctionId id = 0;
  std::string name;
  std::vector<std::string> params;
  std::vector<std::string> locals;  // params first
  std::uint32_t n_loop_regs = 0;
  std::uint32_t max_stack = 0;
  std::vector<Instr> code;
  std::vector<FeedbackOrigin> record_sites;  // code order
  std::vector<Value> constants;
  std::vector<std::string> strings;
  // Operand-stack depth before each pc; -1 where unreachable.
  std::vector<std::int32_t> depth_at;

  std::uint32_t n_params() const { return static_cast<std::uint32_t>(params.size()); }
  std::uint32_t n_locals() const { return static_cast<std::uint32_t>(locals.size()); }
  // Record-site index for a Record pc.
  std::optional<std::uint32_t> site_at(std::uint32_t pc) const;
};

struct Module {
  std::vector<BaselineFunction> functions;  // [0] is the top level
  std::vector<std::string> globals;

  std::optional<FunctionId> find_function(std::string_view name) const;
  std::optional<std::uint32_t> find_global(std::string_view name) const;
  std::size_t total_record_sites() const;
};

class LoweringError : public std::runtime_error {
 public:
  LoweringError(SourcePos pos, const std::string& msg)
      : std::runtime_error(std::to_string(pos.line) + ":" + std::to_string(pos.column) + ": " +
                           msg) {}
};

// `extra_globals` are names bound by the host before the top level runs
// (benchmark defaults and --define).
Module lower(const Program& program, const std::vector<std::string>& extra_globals = {});

std::string disassemble(const Module& m, const BaselineFunction& f);

}  // namespace staleguard
