#pragma once

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "staleguard/runtime.hpp"

namespace staleguard {

struct SourcePos {
  int line = 1;
  int column = 1;
};

struct Stmt;
struct Expr;
using ExprPtr = std::unique_ptr<Expr>;
using StmtPtr = std::unique_ptr<Stmt>;
using Block = std::vector<StmtPtr>;

struct Expr {
  enum class Kind : std::uint8_t {
    IntLit,     // 1L
    DblLit,     // 1, 2.5, 1e7
    BoolLit,    // TRUE, FALSE, T, F
    Var,        // x
    Binary,     // lhs OP rhs
    Negate,     // -x
    Call,       // name(args); builtin or user function
    Structure,  // structure(x, class = "tag")
    Index,      // name[i]
    Function,   // function(params) body
  };

  Kind kind;
  SourcePos pos;
  std::int32_t int_value = 0;
  double dbl_value = 0.0;
  bool bool_value = false;
  std::string name;  // Var, Call callee, Index target, Structure class tag
  BinOp op = BinOp::Add;
  std::vector<ExprPtr> args;  // operands / call arguments
  std::vector<std::string> params;
  Block body;

  Expr(Kind k, SourcePos p) : kind(k), pos(p) {}
};

struct Stmt {
  enum class Kind : std::uint8_t {
    Assign,       // x <- e, x = e
    SuperAssign,  // x <<- e
    IndexAssign,  // x[i] <- e
    For,          // for (x in lo:hi) body
    While,
    If,
    Expr,
  };

  Kind kind;
  SourcePos pos;
  std::string name;  // assignment target / loop variable
  ExprPtr value;     // assigned value, condition, or expression
  ExprPtr index;     // IndexAssign subscript
  ExprPtr lo, hi;    // For range
  Block body;
  Block else_body;
  bool has_else = false;

  Stmt(Kind k, SourcePos p) : kind(k), pos(p) {}
};

struct FunctionSource {
  std::string name;
  std::vector<std::string> params;
  Block body;
  SourcePos pos;
};

struct Program {
  std::vector<FunctionSource> functions;
  Block top_level;
};

class SyntaxError : public std::runtime_error {
 public:
  SyntaxError(SourcePos pos, const std::string& msg)
      : std::runtime_error(std::to_string(pos.line) + ":" + std::to_string(pos.column) +
                           ": syntax error: " + msg),
        pos_(pos) {}
  SourcePos pos() const { return pos_; }

 private:
  SourcePos pos_;
};

// Parses MiniDyn source. Top-level `name <- function(...) body` statements
// become Program::functions; everything else stays in top_level.
Program parse(const std::string& source);

}  // namespace staleguard
