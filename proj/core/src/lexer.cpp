#include "lexer.hpp"

#include <cctype>
#include <charconv>
#include <cstdlib>

namespace staleguard::detail {

std::string_view tok_name(Tok t) {
  switch (t) {
    case Tok::End: return "end of input";
    case Tok::Int: return "integer literal";
    case Tok::Num: return "numeric literal";
    case Tok::Str: return "string";
    case Tok::Ident: return "identifier";
    case Tok::KwFunction: return "'function'";
    case Tok::KwFor: return "'for'";
    case Tok::KwIn: return "'in'";
    case Tok::KwWhile: return "'while'";
    case Tok::KwIf: return "'if'";
    case Tok::KwElse: return "'else'";
    case Tok::KwTrue: return "'TRUE'";
    case Tok::KwFalse: return "'FALSE'";
    case Tok::Plus: return "'+'";
    case Tok::Minus: return "'-'";
    case Tok::Star: return "'*'";
    case Tok::Slash: return "'/'";
    case Tok::Caret: return "'^'";
    case Tok::Mod: return "'%%'";
    case Tok::Lt: return "'<'";
    case Tok::Le: return "'<='";
    case Tok::Gt: return "'>'";
    case Tok::Ge: return "'>='";
    case Tok::EqEq: return "'=='";
    case Tok::NotEq: return "'!='";
    case Tok::Arrow: return "'<-'";
    case Tok::SuperArrow: return "'<<-'";
    case Tok::Equals: return "'='";
    case Tok::LParen: return "'('";
    case Tok::RParen: return "')'";
    case Tok::LBrace: return "'{'";
    case Tok::RBrace: return "'}'";
    case Tok::LBracket: return "'['";
    case Tok::RBracket: return "']'";
    case Tok::Comma: return "','";
    case Tok::Colon: return "':'";
    case Tok::Semi: return "';'";
  }
  return "?";
}

namespace {

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '.'; }
bool ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '_';
}

Tok keyword(std::string_view s) {
  if (s == "function") return Tok::KwFunction;
  if (s == "for") return Tok::KwFor;
  if (s == "in") return Tok::KwIn;
  if (s == "while") return Tok::KwWhile;
  if (s == "if") return Tok::KwIf;
  if (s == "else") return Tok::KwElse;
  if (s == "TRUE" || s == "T") return Tok::KwTrue;
  if (s == "FALSE" || s == "F") return Tok::KwFalse;
  return Tok::Ident;
}

}  // namespace

std::vector<Token> tokenize(std::string_view src) {
  std::vector<Token> out;
  std::size_t i = 0;
  int line = 1, col = 1;
  bool newline = false;

  auto advance = [&](std::size_t n = 1) {
    for (std::size_t k = 0; k < n && i < src.size(); ++k, ++i) {
      if (src[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
  };

  while (true) {
    while (i < src.size()) {
      char c = src[i];
      if (c == '\n') {
        newline = true;
        advance();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else if (c == '#') {
        while (i < src.size() && src[i] != '\n') advance();
      } else {
        break;
      }
    }
    Token t;
    t.pos = {line, col};
    t.newline_before = newline;
    newline = false;
    if (i >= src.size()) {
      t.kind = Tok::End;
      out.push_back(std::move(t));
      return out;
    }
    char c = src[i];
    char n1 = i + 1 < src.size() ? src[i + 1] : '\0';
    char n2 = i + 2 < src.size() ? src[i + 2] : '\0';

    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '.' && std::isdigit(static_cast<unsigned char>(n1)))) {
      std::size_t start = i;
      while (i < src.size() && (std::isdigit(static_cast<unsigned char>(src[i])) || src[i] == '.'))
        advance();
      if (i < src.size() && (src[i] == 'e' || src[i] == 'E')) {
        std::size_t save = i;
        int sl = line, sc = col;
        advance();
        if (i < src.size() && (src[i] == '+' || src[i] == '-')) advance();
        if (i < src.size() && std::isdigit(static_cast<unsigned char>(src[i]))) {
          while (i < src.size() && std::isdigit(static_cast<unsigned char>(src[i]))) advance();
        } else {
          i = save;
          line = sl;
          col = sc;
        }
      }
      t.text = std::string(src.substr(start, i - start));
      double v = std::strtod(t.text.c_str(), nullptr);
      if (i < src.size() && src[i] == 'L') {
        advance();
        if (v != static_cast<double>(static_cast<std::int64_t>(v)) || v > 2147483647.0)
          throw SyntaxError(t.pos, "invalid integer literal '" + t.text + "L'");
        t.kind = Tok::Int;
        t.int_value = static_cast<std::int32_t>(v);
      } else {
        t.kind = Tok::Num;
        t.num_value = v;
      }
      out.push_back(std::move(t));
      continue;
    }

    if (ident_start(c)) {
      std::size_t start = i;
      while (i < src.size() && ident_char(src[i])) advance();
      t.text = std::string(src.substr(start, i - start));
      t.kind = keyword(t.text);
      out.push_back(std::move(t));
      continue;
    }

    if (c == '"' || c == '\'') {
      char q = c;
      advance();
      std::size_t start = i;
      while (i < src.size() && src[i] != q && src[i] != '\n') advance();
      if (i >= src.size() || src[i] != q) throw SyntaxError(t.pos, "unterminated string");
      t.text = std::string(src.substr(start, i - start));
      advance();
      t.kind = Tok::Str;
      out.push_back(std::move(t));
      continue;
    }

    auto emit = [&](Tok k, std::size_t len) {
      t.kind = k;
      t.text = std::string(src.substr(i, len));
      advance(len);
      out.push_back(std::move(t));
    };

    switch (c) {
      case '+': emit(Tok::Plus, 1); break;
      case '-': emit(Tok::Minus, 1); break;
      case '*': emit(Tok::Star, 1); break;
      case '/': emit(Tok::Slash, 1); break;
      case '^': emit(Tok::Caret, 1); break;
      case '%':
        if (n1 != '%') throw SyntaxError(t.pos, "only the %% operator is supported");
        emit(Tok::Mod, 2);
        break;
      case '<':
        if (n1 == '<' && n2 == '-')
          emit(Tok::SuperArrow, 3);
        else if (n1 == '-')
          emit(Tok::Arrow, 2);
        else if (n1 == '=')
          emit(Tok::Le, 2);
        else
          emit(Tok::Lt, 1);
        break;
      case '>':
        if (n1 == '=')
          emit(Tok::Ge, 2);
        else
          emit(Tok::Gt, 1);
        break;
      case '=':
        if (n1 == '=')
          emit(Tok::EqEq, 2);
        else
          emit(Tok::Equals, 1);
        break;
      case '!':
        if (n1 != '=') throw SyntaxError(t.pos, "unexpected '!'");
        emit(Tok::NotEq, 2);
        break;
      case '(': emit(Tok::LParen, 1); break;
      case ')': emit(Tok::RParen, 1); break;
      case '{': emit(Tok::LBrace, 1); break;
      case '}': emit(Tok::RBrace, 1); break;
      case '[': emit(Tok::LBracket, 1); break;
      case ']': emit(Tok::RBracket, 1); break;
      case ',': emit(Tok::Comma, 1); break;
      case ':': emit(Tok::Colon, 1); break;
      case ';': emit(Tok::Semi, 1); break;
      default:
        throw SyntaxError(t.pos, std::string("unexpected character '") + c + "'");
    }
  }
}

}  // namespace staleguard::detail
