#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "staleguard/value.hpp"

namespace staleguard {

class RuntimeError : public std::runtime_error {
 public:
  explicit RuntimeError(const std::string& msg) : std::runtime_error("Error: " + msg) {}
};

class LengthMismatch : public RuntimeError {
 public:
  LengthMismatch(std::size_t a, std::size_t b)
      : RuntimeError("length mismatch in vectorized operation (" + std::to_string(a) + " vs " +
                     std::to_string(b) + ")") {}
};

enum class BinOp : std::uint8_t { Add, Sub, Mul, Div, Mod, Pow, Lt, Le, Gt, Ge, Eq, Ne };

std::string_view binop_symbol(BinOp op);
constexpr bool is_comparison(BinOp op) { return op >= BinOp::Lt; }

enum class Builtin : std::uint8_t {
  Combine,    // c(...)
  Structure,  // structure(x, class = "...")
  Length,
  Sum,
  Numeric,
  Integer,
  Logical,
  Sqrt,
  Abs,
  Floor,
  Print,
  Index,     // x[i]
  SetIndex,  // `[<-`(x, i, v)
};

std::string_view builtin_name(Builtin b);
std::optional<Builtin> lookup_builtin(std::string_view name);

// Scalar kernels. Both tiers route through these so unboxed tier-2 code is
// bit-identical to the boxed interpreter.
namespace kernel {

constexpr std::int64_t kIntMax = std::numeric_limits<std::int32_t>::max();
// INT_MIN is R's integer NA and never produced.
constexpr std::int64_t kIntMin = -kIntMax;

inline bool fits_int(std::int64_t v) { return v >= kIntMin && v <= kIntMax; }

// Exponentiation: integral exponents 0..31 by repeated multiplication.
inline double power(double base, double exp) {
  if (exp >= 0 && exp <= 31 && exp == std::floor(exp)) {
    double r = 1.0;
    for (int i = 0, n = static_cast<int>(exp); i < n; ++i) r *= base;
    return r;
  }
  return std::pow(base, exp);
}

inline double dmod(double x, double y) {
  if (y == 0.0) return std::numeric_limits<double>::quiet_NaN();
  double tmp = x - std::floor(x / y) * y;
  return tmp - std::floor(tmp / y) * y;
}

inline double darith(BinOp op, double a, double b) {
  switch (op) {
    case BinOp::Add: return a + b;
    case BinOp::Sub: return a - b;
    case BinOp::Mul: return a * b;
    case BinOp::Div: return a / b;
    case BinOp::Mod: return dmod(a, b);
    case BinOp::Pow: return power(a, b);
    default: return 0.0;
  }
}

// Integer arithmetic in 64 bits. Returns false when the result must be a
// double (overflow, division, power, modulo by zero); `dbl_out` then holds it.
inline bool iarith(BinOp op, std::int64_t a, std::int64_t b, std::int64_t& int_out,
                   double& dbl_out) {
  switch (op) {
    case BinOp::Add: int_out = a + b; break;
    case BinOp::Sub: int_out = a - b; break;
    case BinOp::Mul: int_out = a * b; break;
    case BinOp::Mod:
      if (b == 0) {
        dbl_out = dmod(static_cast<double>(a), 0.0);
        return false;
      } else {
        std::int64_t r = a % b;
        if (r != 0 && ((r < 0) != (b < 0))) r += b;
        int_out = r;
      }
      break;
    default:
      dbl_out = darith(op, static_cast<double>(a), static_cast<double>(b));
      return false;
  }
  if (!fits_int(int_out)) {
    dbl_out = static_cast<double>(int_out);
    return false;
  }
  return true;
}

template <typename T>
inline bool compare(BinOp op, T a, T b) {
  switch (op) {
    case BinOp::Lt: return a < b;
    case BinOp::Le: return a <= b;
    case BinOp::Gt: return a > b;
    case BinOp::Ge: return a >= b;
    case BinOp::Eq: return a == b;
    case BinOp::Ne: return a != b;
    default: return false;
  }
}

}  // namespace kernel

// Elementwise arithmetic/comparison with scalar broadcast. Logical operands
// promote to Integer; any Double operand gives Double; `/` and `^` always
// give Double; integer overflow promotes the result to Double. The result
// carries the left operand's class tag (else the right one's).
Value vector_binop(BinOp op, const Value& a, const Value& b);

// Entry point used by generic code: class-tagged operands take the method
// dispatch slow path before falling back to vector_binop.
Value dispatch_binop(BinOp op, const Value& a, const Value& b);

Value negate(const Value& v);

// Truth value of an `if`/`while` condition.
bool truthy(const Value& v);

// Builtin functions. `out` receives print() output lines.
Value call_builtin(Builtin b, std::span<const Value> args, const std::string& str_arg,
                   std::vector<std::string>* out);

std::uint64_t dispatch_lookups();

}  // namespace staleguard
