#pragma once

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "staleguard/bytecode.hpp"
#include "staleguard/feedback.hpp"

namespace staleguard {

// Static representation of a tier-2 register.
enum class Rep : std::uint8_t { Boxed, Int, Dbl, Lgl };

std::string_view rep_name(Rep r);

// Tier-2 register. Raw reps use `i`/`d`; Lgl is stored in `i`.
struct Reg {
  Value box;
  union {
    std::int64_t i;
    double d;
  };
  Reg() : i(0) {}
};

enum class TOp : std::uint8_t {
  LdConst,     // a=dst b=const            boxed constant
  LdConstI,    // a=dst b=imm              raw int/lgl
  LdConstD,    // a=dst b=const            raw double
  Mov,         // a=dst b=src              box copy
  Move,        // a=dst b=src              box move; src becomes empty
  MovRaw,      // a=dst b=src
  BoxI,        // a=dst b=src
  BoxD,
  BoxL,
  Clear,       // a=reg                    drop box reference
  CheckBound,  // a=local b=name string
  LdGlobal,    // a=dst b=global
  StGlobal,    // a=global b=src
  LdArg,       // a=dst b=arg              boxes raw arguments
  LdArgI,      // a=dst b=arg c=deopt      unboxed integer parameter
  LdArgD,      // a=dst b=arg c=deopt
  GuardI,      // a=dst b=src c=deopt
  GuardD,      // a=dst b=src c=deopt
  GuardPlain,  // a=src b=deopt c=slot
  Observe,     // a=src c=slot
  AddII,       // a=dst b=lhs c=rhs d=deopt
  SubII,
  MulII,
  ArithII,     // a=dst b=lhs c=rhs d=deopt e=op
  ArithIIBox,  // a=dst b=lhs c=rhs e=op
  ArithNum,    // a=dst b=lhs c=rhs e=op f=flags (kLhsInt|kRhsInt)
  CmpNum,      // same operands as ArithNum, Lgl result
  ArithBox,    // a=dst b=lhs c=rhs e=op f=kDirect
  NegI,        // a=dst b=src
  NegD,
  NegBox,
  Builtin,     // a=dst=first c=argc e=builtin d=string
  SetIndexL,   // a=dst b=local c=first(index,value)
  SetIndexG,   // a=dst b=global c=first
  Call,        // a=dst=first b=fn c=argc d=call-rep table
  Jump,        // a=target
  JumpFalseL,  // a=cond b=target
  JumpFalseB,  // a=cond b=target
  ForInit,     // a=loop reg b=lo c=hi f=reps (lo | hi << 2)
  ForNext,     // a=loop reg b=dst c=exit
  Ret,         // a=src
};

std::string_view top_name(TOp op);

inline constexpr std::uint8_t kLhsInt = 1;
inline constexpr std::uint8_t kRhsInt = 2;
inline constexpr std::uint8_t kDirect = 4;

struct TInstr {
  TOp op;
  std::uint8_t e = 0;
  std::uint8_t f = 0;
  std::int32_t a = 0, b = 0, c = 0, d = 0;
};

// How to rebuild one tier-1 operand-stack entry on deoptimization.
struct DeoptEntry {
  Rep rep = Rep::Boxed;
  std::int32_t reg = -1;    // register holding the value
  std::int32_t konst = -1;  // or a constant index
};

struct DeoptInfo {
  std::uint32_t resume_pc = 0;        // baseline Record instruction
  FeedbackOrigin origin;
  std::vector<DeoptEntry> stack;      // below the failing value
  std::vector<std::uint8_t> assigned; // per local: is it bound here
};

struct SlotMapEntry {
  std::uint32_t slot = 0;
  FeedbackOrigin origin;
  FeedbackType compiled;
};

struct ProfileEntry {
  std::uint32_t slot = 0;
  FeedbackOrigin origin;
  FeedbackType sampled;
  std::uint64_t count = 0;
  FeedbackType compiled;
};

using Overrides = std::unordered_map<FeedbackOrigin, FeedbackType, FeedbackOriginHash>;

struct CompiledFunction {
  FunctionId source_id = 0;
  std::uint64_t marker = 0;  // opaque identity, unique per VM
  bool valid = true;

  std::uint32_t n_locals = 0;
  std::uint32_t n_regs = 0;
  std::uint32_t n_loop_regs = 0;
  std::uint32_t n_slots = 0;  // shadow slots 1..n_slots; slot 0 is reserved
  std::vector<TInstr> code;
  std::vector<Value> constants;
  std::vector<std::string> strings;
  std::vector<DeoptInfo> deopts;
  std::vector<std::vector<Rep>> call_reps;
  std::vector<Rep> local_reps;
  std::vector<Rep> param_reps;  // rep each parameter is unboxed to on entry

  std::vector<SlotMapEntry> slot_map;
  // Boxed-slot registry indexed by slot: the most recent value that flowed
  // through each mapped origin, across activations.
  std::vector<Value> slots;
  // Effective feedback of every record site the code depends on.
  std::unordered_map<FeedbackOrigin, FeedbackType, FeedbackOriginHash> compiled_against;
  Overrides overrides;

  // Sampled profile, one entry per slot_map entry.
  std::vector<ProfileEntry> profile;
  // Full-instrumentation profile (impact estimation mode).
  std::vector<ProfileEntry> full_profile;

  // Boxed ops that may dispatch on a class tag.
  std::uint32_t n_generic_ops() const;
  std::string dump() const;
};

class SpecializeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Builds guarded, type-specialized code from baseline feedback with sampled
// overrides applied. Throws SpecializeError for functions without record
// sites and std::invalid_argument for overrides naming unknown origins.
std::shared_ptr<CompiledFunction> specialize(const BaselineFunction& f, const FeedbackTable& feedback,
                                             const Overrides& overrides = {});

}  // namespace staleguard
