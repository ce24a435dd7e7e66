#include <set>
#include <utility>

#include "lexer.hpp"
#include "staleguard/ast.hpp"

namespace staleguard {

namespace {

using detail::Tok;
using detail::Token;

class Parser {
 public:
  explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

  Program program() {
    Program prog;
    std::set<std::string> names;
    skip_semis();
    while (!at(Tok::End)) {
      StmtPtr s = statement();
      if (s->kind == Stmt::Kind::Assign && s->value && s->value->kind == Expr::Kind::Function) {
        if (!names.insert(s->name).second)
          throw SyntaxError(s->pos, "duplicate function definition '" + s->name + "'");
        FunctionSource fs;
        fs.name = s->name;
        fs.params = std::move(s->value->params);
        fs.body = std::move(s->value->body);
        fs.pos = s->pos;
        prog.functions.push_back(std::move(fs));
      } else {
        prog.top_level.push_back(std::move(s));
      }
      end_of_statement();
    }
    return prog;
  }

 private:
  std::vector<Token> toks_;
  std::size_t p_ = 0;
  // One entry per open delimiter; true while newlines are insignificant
  // (inside parens/brackets), false inside braces.
  std::vector<bool> nest_;

  const Token& cur() const { return toks_[p_]; }
  bool at(Tok k) const { return cur().kind == k; }
  bool newlines_matter() const { return nest_.empty() || !nest_.back(); }
  // A token on a new line cannot continue an expression at statement level.
  bool continues(Tok k) const {
    return at(k) && !(cur().newline_before && newlines_matter());
  }

  Token take() { return toks_[p_ < toks_.size() - 1 ? p_++ : p_]; }

  [[noreturn]] void fail(std::initializer_list<std::string_view> expected) const {
    std::string msg = "expected ";
    bool first = true;
    for (auto e : expected) {
      if (!first) msg += " or ";
      msg += e;
      first = false;
    }
    msg += " but found ";
    msg += cur().kind == Tok::Ident || cur().kind == Tok::Num || cur().kind == Tok::Int
               ? "'" + cur().text + "'"
               : std::string(detail::tok_name(cur().kind));
    throw SyntaxError(cur().pos, msg);
  }

  Token expect(Tok k) {
    if (!at(k)) fail({detail::tok_name(k)});
    return take();
  }

  void open(Tok k, bool ignore_newlines) {
    expect(k);
    nest_.push_back(ignore_newlines);
  }
  void close(Tok k) {
    expect(k);
    nest_.pop_back();
  }

  void skip_semis() {
    while (at(Tok::Semi)) take();
  }

  void end_of_statement() {
    if (at(Tok::Semi)) {
      skip_semis();
      return;
    }
    if (at(Tok::End) || at(Tok::RBrace) || cur().newline_before) return;
    fail({"newline", "';'"});
  }

  Block block() {
    Block b;
    if (at(Tok::LBrace)) {
      open(Tok::LBrace, false);
      skip_semis();
      while (!at(Tok::RBrace)) {
        if (at(Tok::End)) fail({"'}'"});
        b.push_back(statement());
        end_of_statement();
      }
      close(Tok::RBrace);
    } else {
      b.push_back(statement());
    }
    return b;
  }

  StmtPtr statement() {
    SourcePos pos = cur().pos;
    switch (cur().kind) {
      case Tok::KwFor: {
        take();
        open(Tok::LParen, true);
        auto s = std::make_unique<Stmt>(Stmt::Kind::For, pos);
        s->name = expect(Tok::Ident).text;
        expect(Tok::KwIn);
        s->lo = unary();
        expect(Tok::Colon);
        s->hi = expr();
        close(Tok::RParen);
        s->body = block();
        return s;
      }
      case Tok::KwWhile: {
        take();
        auto s = std::make_unique<Stmt>(Stmt::Kind::While, pos);
        open(Tok::LParen, true);
        s->value = expr();
        close(Tok::RParen);
        s->body = block();
        return s;
      }
      case Tok::KwIf: {
        take();
        auto s = std::make_unique<Stmt>(Stmt::Kind::If, pos);
        open(Tok::LParen, true);
        s->value = expr();
        close(Tok::RParen);
        s->body = block();
        if (at(Tok::KwElse)) {
          take();
          s->has_else = true;
          s->else_body = block();
        }
        return s;
      }
      default: break;
    }

    ExprPtr e = expr();
    if (continues(Tok::Arrow) || continues(Tok::Equals) || continues(Tok::SuperArrow)) {
      Tok op = take().kind;
      if (e->kind == Expr::Kind::Var) {
        auto s = std::make_unique<Stmt>(
            op == Tok::SuperArrow ? Stmt::Kind::SuperAssign : Stmt::Kind::Assign, pos);
        s->name = e->name;
        s->value = expr();
        return s;
      }
      if (e->kind == Expr::Kind::Index && op != Tok::SuperArrow) {
        auto s = std::make_unique<Stmt>(Stmt::Kind::IndexAssign, pos);
        s->name = e->name;
        s->index = std::move(e->args[0]);
        s->value = expr();
        return s;
      }
      throw SyntaxError(pos, "invalid assignment target");
    }
    auto s = std::make_unique<Stmt>(Stmt::Kind::Expr, pos);
    s->value = std::move(e);
    return s;
  }

  ExprPtr binary(BinOp op, ExprPtr l, ExprPtr r, SourcePos pos) {
    auto e = std::make_unique<Expr>(Expr::Kind::Binary, pos);
    e->op = op;
    e->args.push_back(std::move(l));
    e->args.push_back(std::move(r));
    return e;
  }

  ExprPtr expr() {
    ExprPtr l = additive();
    while (true) {
      BinOp op;
      if (continues(Tok::Lt)) op = BinOp::Lt;
      else if (continues(Tok::Le)) op = BinOp::Le;
      else if (continues(Tok::Gt)) op = BinOp::Gt;
      else if (continues(Tok::Ge)) op = BinOp::Ge;
      else if (continues(Tok::EqEq)) op = BinOp::Eq;
      else if (continues(Tok::NotEq)) op = BinOp::Ne;
      else return l;
      SourcePos pos = take().pos;
      l = binary(op, std::move(l), additive(), pos);
    }
  }

  ExprPtr additive() {
    ExprPtr l = multiplicative();
    while (continues(Tok::Plus) || continues(Tok::Minus)) {
      Token t = take();
      l = binary(t.kind == Tok::Plus ? BinOp::Add : BinOp::Sub, std::move(l), multiplicative(),
                 t.pos);
    }
    return l;
  }

  ExprPtr multiplicative() {
    ExprPtr l = special();
    while (continues(Tok::Star) || continues(Tok::Slash)) {
      Token t = take();
      l = binary(t.kind == Tok::Star ? BinOp::Mul : BinOp::Div, std::move(l), special(), t.pos);
    }
    return l;
  }

  ExprPtr special() {
    ExprPtr l = unary();
    while (continues(Tok::Mod)) {
      SourcePos pos = take().pos;
      l = binary(BinOp::Mod, std::move(l), unary(), pos);
    }
    return l;
  }

  ExprPtr unary() {
    if (at(Tok::Minus)) {
      SourcePos pos = take().pos;
      ExprPtr operand = unary();
      // Fold negative literals so `-1L` stays a constant.
      if (operand->kind == Expr::Kind::IntLit) {
        operand->int_value = -operand->int_value;
        operand->pos = pos;
        return operand;
      }
      if (operand->kind == Expr::Kind::DblLit) {
        operand->dbl_value = -operand->dbl_value;
        operand->pos = pos;
        return operand;
      }
      auto e = std::make_unique<Expr>(Expr::Kind::Negate, pos);
      e->args.push_back(std::move(operand));
      return e;
    }
    if (at(Tok::Plus)) {
      take();
      return unary();
    }
    return power();
  }

  ExprPtr power() {
    ExprPtr base = postfix();
    if (continues(Tok::Caret)) {
      SourcePos pos = take().pos;
      return binary(BinOp::Pow, std::move(base), unary(), pos);  // right-associative
    }
    return base;
  }

  ExprPtr postfix() {
    ExprPtr e = primary();
    if (continues(Tok::LBracket)) {
      if (e->kind != Expr::Kind::Var) throw SyntaxError(cur().pos, "only variables can be indexed");
      auto ix = std::make_unique<Expr>(Expr::Kind::Index, e->pos);
      ix->name = e->name;
      open(Tok::LBracket, true);
      ix->args.push_back(expr());
      close(Tok::RBracket);
      return ix;
    }
    return e;
  }

  ExprPtr primary() {
    Token t = cur();
    switch (t.kind) {
      case Tok::Int: {
        take();
        auto e = std::make_unique<Expr>(Expr::Kind::IntLit, t.pos);
        e->int_value = t.int_value;
        return e;
      }
      case Tok::Num: {
        take();
        auto e = std::make_unique<Expr>(Expr::Kind::DblLit, t.pos);
        e->dbl_value = t.num_value;
        return e;
      }
      case Tok::KwTrue:
      case Tok::KwFalse: {
        take();
        auto e = std::make_unique<Expr>(Expr::Kind::BoolLit, t.pos);
        e->bool_value = t.kind == Tok::KwTrue;
        return e;
      }
      case Tok::LParen: {
        open(Tok::LParen, true);
        ExprPtr e = expr();
        close(Tok::RParen);
        return e;
      }
      case Tok::KwFunction: return function_literal();
      case Tok::Ident: {
        take();
        if (!continues(Tok::LParen)) {
          auto e = std::make_unique<Expr>(Expr::Kind::Var, t.pos);
          e->name = t.text;
          return e;
        }
        if (t.text == "structure") return structure_call(t.pos);
        auto e = std::make_unique<Expr>(Expr::Kind::Call, t.pos);
        e->name = t.text;
        open(Tok::LParen, true);
        if (!at(Tok::RParen)) {
          e->args.push_back(expr());
          while (at(Tok::Comma)) {
            take();
            e->args.push_back(expr());
          }
        }
        close(Tok::RParen);
        return e;
      }
      default:
        fail({"expression"});
    }
  }

  ExprPtr structure_call(SourcePos pos) {
    auto e = std::make_unique<Expr>(Expr::Kind::Structure, pos);
    open(Tok::LParen, true);
    e->args.push_back(expr());
    expect(Tok::Comma);
    Token key = expect(Tok::Ident);
    if (key.text != "class") throw SyntaxError(key.pos, "structure() only supports class=");
    expect(Tok::Equals);
    Token tag = expect(Tok::Str);
    if (tag.text.empty()) throw SyntaxError(tag.pos, "empty class tag");
    e->name = tag.text;
    close(Tok::RParen);
    return e;
  }

  ExprPtr function_literal() {
    auto e = std::make_unique<Expr>(Expr::Kind::Function, cur().pos);
    take();
    open(Tok::LParen, true);
    if (!at(Tok::RParen)) {
      e->params.push_back(expect(Tok::Ident).text);
      while (at(Tok::Comma)) {
        take();
        e->params.push_back(expect(Tok::Ident).text);
      }
    }
    close(Tok::RParen);
    std::set<std::string> seen;
    for (const auto& pn : e->params)
      if (!seen.insert(pn).second) throw SyntaxError(e->pos, "duplicate parameter '" + pn + "'");
    // The body is parsed at statement level even inside parens.
    nest_.push_back(false);
    e->body = block();
    nest_.pop_back();
    return e;
  }
};

}  // namespace

Program parse(const std::string& source) {
  Parser p(detail::tokenize(source));
  return p.program();
}

}  // namespace staleguard
