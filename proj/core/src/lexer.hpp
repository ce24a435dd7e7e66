#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "staleguard/ast.hpp"

namespace staleguard::detail {

enum class Tok : std::uint8_t {
  End,
  Int,     // 12L
  Num,     // 12, 1.5, 1e7
  Str,     // "foo"
  Ident,
  KwFunction,
  KwFor,
  KwIn,
  KwWhile,
  KwIf,
  KwElse,
  KwTrue,
  KwFalse,
  Plus,
  Minus,
  Star,
  Slash,
  Caret,
  Mod,  // %%
  Lt,
  Le,
  Gt,
  Ge,
  EqEq,
  NotEq,
  Arrow,       // <-
  SuperArrow,  // <<-
  Equals,      // =
  LParen,
  RParen,
  LBrace,
  RBrace,
  LBracket,
  RBracket,
  Comma,
  Colon,
  Semi,
};

struct Token {
  Tok kind = Tok::End;
  std::string text;
  SourcePos pos;
  bool newline_before = false;
  std::int32_t int_value = 0;
  double num_value = 0.0;
};

std::string_view tok_name(Tok t);
std::vector<Token> tokenize(std::string_view source);

}  // namespace staleguard::detail
