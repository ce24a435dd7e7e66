#pragma once

// Random MiniDyn programs for differential testing of the two tiers. Programs
// are well formed but may fail at run time (length mismatch, bad loop bounds);
// both tiers must then fail the same way.

#include <algorithm>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace staleguard::testing {

class ProgramGen {
 public:
  explicit ProgramGen(std::uint64_t seed) : rng_(seed) {}

  std::string generate() {
    out_.str({});
    out_.clear();
    const int n_globals = pick(1, 3);
    for (int g = 0; g < n_globals; ++g) globals_.push_back("g" + std::to_string(g));
    for (const auto& g : globals_) out_ << g << " <- " << literal() << '\n';

    const int n_fns = pick(1, 3);
    for (int f = 0; f < n_fns; ++f) function(f);

    // Driver: call each function in a loop and perturb global types along the
    // way so compiled code meets values it did not speculate on.
    out_ << "execute <- function() {\n  acc <- 0\n";
    const int rounds = pick(2, 4);
    for (int r = 0; r < rounds; ++r) {
      out_ << "  for (k in 1:" << pick(4, 12) << ") {\n";
      for (int f = 0; f < n_fns; ++f) {
        out_ << "    acc <- acc + sum(f" << f << "(";
        for (int p = 0; p < arity_[f]; ++p) out_ << (p ? ", " : "") << arg_expr();
        out_ << "))\n";
      }
      out_ << "  }\n";
      if (chance(0.7)) out_ << "  " << globals_[pick(0, n_globals - 1)] << " <<- " << literal() << '\n';
    }
    out_ << "  acc\n}\n";
    globals_.clear();
    arity_.clear();
    return out_.str();
  }

 private:
  std::mt19937_64 rng_;
  std::ostringstream out_;
  std::vector<std::string> globals_;
  std::vector<int> arity_;
  std::vector<std::string> scope_;
  int fn_ = 0;
  int loop_depth_ = 0;
  int loop_vars_ = 0;

  int pick(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  bool chance(double p) { return std::bernoulli_distribution(p)(rng_); }

  std::string scalar_literal() {
    switch (pick(0, 3)) {
      case 0: return std::to_string(pick(-5, 20)) + "L";
      case 1: return std::to_string(pick(-5, 20)) + "." + std::to_string(pick(0, 9));
      case 2: return chance(0.5) ? "TRUE" : "FALSE";
      default: return std::to_string(pick(0, 9));
    }
  }

  std::string literal() {
    switch (pick(0, 5)) {
      case 0: return "c(" + scalar_literal() + ", " + scalar_literal() + ")";
      case 1: return "structure(" + scalar_literal() + ", class = \"k\")";
      default: return scalar_literal();
    }
  }

  std::string arg_expr() {
    switch (pick(0, 4)) {
      case 0: return "k";
      case 1: return "k * 0.5";
      case 2: return "c(k, 1L)";
      default: return scalar_literal();
    }
  }

  std::string var() {
    std::vector<std::string> pool = scope_;
    pool.insert(pool.end(), globals_.begin(), globals_.end());
    return pool[pick(0, static_cast<int>(pool.size()) - 1)];
  }

  std::string expr(int depth) {
    if (depth <= 0) return chance(0.65) ? var() : scalar_literal();
    static const char* ops[] = {"+", "-", "*", "/", "%%", "+", "*", "-"};
    switch (pick(0, 11)) {
      case 0:
      case 1:
      case 2:
      case 3: return "(" + expr(depth - 1) + " " + ops[pick(0, 7)] + " " + expr(depth - 1) + ")";
      case 4: return "-" + expr(depth - 1);
      // one literal operand keeps vector growth linear across calls
      case 5: return "c(" + expr(depth - 1) + ", " + scalar_literal() + ")";
      case 6: return "abs(" + expr(depth - 1) + ")";
      case 7: return "floor(" + expr(depth - 1) + ")";
      case 8: return "sum(" + expr(depth - 1) + ")";
      case 9: return "length(" + expr(depth - 1) + ")";
      case 10:
        if (fn_ > 0) {
          const int callee = pick(0, fn_ - 1);
          std::string s = "f" + std::to_string(callee) + "(";
          for (int p = 0; p < arity_[callee]; ++p) s += (p ? ", " : "") + expr(depth - 1);
          return s + ")";
        }
        return var();
      default: return var() + "[1L]";
    }
  }

  // A local or parameter; loop variables are never reassigned.
  std::string assignable() {
    std::vector<std::string> pool;
    for (const auto& v : scope_)
      if (v[0] != 'i') pool.push_back(v);
    if (pool.empty()) return {};
    return pool[pick(0, static_cast<int>(pool.size()) - 1)];
  }

  std::string cond() {
    static const char* cmp[] = {"<", "<=", ">", ">=", "==", "!="};
    return "sum(" + expr(1) + ") " + cmp[pick(0, 5)] + " " + scalar_literal();
  }

  void stmts(int n, int indent, bool top) {
    for (int i = 0; i < n; ++i) stmt(indent, top);
  }

  void stmt(int indent, bool top) {
    const std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
    const int kind = indent > 3 ? pick(0, 4) : pick(0, 9);
    if (kind <= 3) {
      // New locals only at the top of the body so every use is bound.
      std::string name;
      if (top && (scope_.size() < 3 || chance(0.3)))
        name = "l" + std::to_string(scope_.size());
      else
        name = assignable();
      if (name.empty()) {
        out_ << pad << globals_[0] << " <<- " << expr(2) << '\n';
        return;
      }
      out_ << pad << name << " <- " << expr(pick(1, 3)) << '\n';
      if (std::find(scope_.begin(), scope_.end(), name) == scope_.end()) scope_.push_back(name);
    } else if (kind == 4) {
      out_ << pad << globals_[pick(0, static_cast<int>(globals_.size()) - 1)] << " <<- " << expr(2) << '\n';
    } else if (kind <= 6 && loop_depth_ < 2) {
      const std::string iv = "i" + std::to_string(loop_vars_++);
      out_ << pad << "for (" << iv << " in 1:" << pick(1, 6) << ") {\n";
      ++loop_depth_;
      scope_.push_back(iv);
      stmts(pick(1, 3), indent + 1, false);
      scope_.pop_back();
      --loop_depth_;
      out_ << pad << "}\n";
    } else if (kind <= 8) {
      out_ << pad << "if (" << cond() << ") {\n";
      stmts(pick(1, 2), indent + 1, false);
      out_ << pad << "} else {\n";
      stmts(pick(1, 2), indent + 1, false);
      out_ << pad << "}\n";
    } else {
      if (scope_.empty()) return;
      const std::string& v = scope_[pick(0, static_cast<int>(scope_.size()) - 1)];
      if (v[0] == 'l') out_ << pad << v << "[1L] <- " << expr(1) << '\n';
    }
  }

  void function(int f) {
    fn_ = f;
    const int arity = pick(0, 2);
    arity_.push_back(arity);
    scope_.clear();
    loop_vars_ = 0;
    out_ << "f" << f << " <- function(";
    for (int p = 0; p < arity; ++p) {
      out_ << (p ? ", " : "") << "a" << p;
      scope_.push_back("a" + std::to_string(p));
    }
    out_ << ") {\n";
    stmts(pick(1, 5), 1, true);
    out_ << "  " << expr(2) << "\n}\n";
  }
};

}  // namespace staleguard::testing
