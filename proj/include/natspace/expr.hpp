#pragma once

#include <cctype>
#include <map>

#include "arith.hpp"

namespace natspace {

struct ParseError : std::runtime_error {
  ParseError(const std::string& what, std::size_t pos)
      : std::runtime_error(what + " at offset " + std::to_string(pos)), offset(pos) {}
  std::size_t offset;
};

// expr   := term (('+'|'-') term)*
// term   := factor ('*' factor)*
// factor := rational | '-' factor | 'min(' expr ',' expr ')' | 'max(' expr ',' expr ')'
//         | 'abs(' expr ')' | '(' expr ')'
// rational := integer ('/' positive-integer)?
struct Expr {
  enum class Kind { Lit, Neg, Add, Sub, Mul, Min, Max, Abs };
  Kind kind = Kind::Lit;
  Rational value;
  std::vector<std::shared_ptr<const Expr>> args;
};

using ExprPtr = std::shared_ptr<const Expr>;

namespace detail {

class ExprParser {
 public:
  explicit ExprParser(const std::string& s) : s_(s) {}

  ExprPtr parse() {
    auto e = expr();
    skip();
    if (pos_ != s_.size()) throw ParseError("unexpected '" + std::string(1, s_[pos_]) + "'", pos_);
    return e;
  }

 private:
  static ExprPtr node(Expr::Kind k, std::vector<ExprPtr> args) {
    auto e = std::make_shared<Expr>();
    e->kind = k;
    e->args = std::move(args);
    return e;
  }

  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool eat(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!eat(c)) throw ParseError(std::string("expected '") + c + "'", pos_);
  }

  bool keyword(const char* w) {
    skip();
    std::size_t n = std::char_traits<char>::length(w);
    if (s_.compare(pos_, n, w) != 0) return false;
    pos_ += n;
    return true;
  }

  ExprPtr expr() {
    auto e = term();
    for (;;) {
      if (eat('+')) e = node(Expr::Kind::Add, {e, term()});
      else if (eat('-')) e = node(Expr::Kind::Sub, {e, term()});
      else return e;
    }
  }

  ExprPtr term() {
    auto e = factor();
    while (eat('*')) e = node(Expr::Kind::Mul, {e, factor()});
    return e;
  }

  ExprPtr factor() {
    skip();
    if (pos_ >= s_.size()) throw ParseError("unexpected end of expression", pos_);
    if (eat('-')) return node(Expr::Kind::Neg, {factor()});
    if (eat('(')) {
      auto e = expr();
      expect(')');
      return e;
    }
    for (auto [w, k] : {std::pair{"min(", Expr::Kind::Min}, std::pair{"max(", Expr::Kind::Max}}) {
      if (!keyword(w)) continue;
      auto a = expr();
      expect(',');
      auto b = expr();
      expect(')');
      return node(k, {a, b});
    }
    if (keyword("abs(")) {
      auto a = expr();
      expect(')');
      return node(Expr::Kind::Abs, {a});
    }
    return rational();
  }

  std::string digits() {
    std::size_t start = pos_;
    while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    if (start == pos_) throw ParseError("expected a number", pos_);
    return s_.substr(start, pos_ - start);
  }

  ExprPtr rational() {
    auto e = std::make_shared<Expr>();
    Integer num(digits());
    Integer den = 1;
    if (eat('/')) {
      skip();
      std::size_t at = pos_;
      den = Integer(digits());
      if (den == 0) throw ParseError("zero denominator", at);
    }
    e->value = make_rational(num, den);
    return e;
  }

  const std::string& s_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline ExprPtr parse_expr(const std::string& s) { return detail::ExprParser(s).parse(); }

inline std::string to_string(const Expr& e) {
  auto a = [&](std::size_t i) { return to_string(*e.args[i]); };
  switch (e.kind) {
    case Expr::Kind::Lit: return e.value.get_str();
    case Expr::Kind::Neg: return "-(" + a(0) + ")";
    case Expr::Kind::Add: return "(" + a(0) + " + " + a(1) + ")";
    case Expr::Kind::Sub: return "(" + a(0) + " - " + a(1) + ")";
    case Expr::Kind::Mul: return "(" + a(0) + " * " + a(1) + ")";
    case Expr::Kind::Min: return "min(" + a(0) + ", " + a(1) + ")";
    case Expr::Kind::Max: return "max(" + a(0) + ", " + a(1) + ")";
    case Expr::Kind::Abs: return "abs(" + a(0) + ")";
  }
  return "?";
}

// Exact value, as an oracle.
inline Rational exact_value(const Expr& e) {
  auto a = [&](std::size_t i) { return exact_value(*e.args[i]); };
  switch (e.kind) {
    case Expr::Kind::Lit: return e.value;
    case Expr::Kind::Neg: return -a(0);
    case Expr::Kind::Add: return a(0) + a(1);
    case Expr::Kind::Sub: return a(0) - a(1);
    case Expr::Kind::Mul: return a(0) * a(1);
    case Expr::Kind::Min: return std::min(a(0), a(1));
    case Expr::Kind::Max: return std::max(a(0), a(1));
    case Expr::Kind::Abs: return abs(a(0));
  }
  throw SpaceError("unknown expression node");
}

// Lazy sigma_R point of the expression: literals embed, operators apply the
// arith morphisms (binary ones on the sigma product), x - y is x + neg(y).
// Equal subexpressions share one point.
class ExprCompiler {
 public:
  ExprCompiler() : sigma_R_(shared_space("sigma_R")) {}

  Point compile(const Expr& e) {
    const std::string key = to_string(e);
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    auto a = [&](std::size_t i) { return compile(*e.args[i]); };
    Point p;
    switch (e.kind) {
      case Expr::Kind::Lit: p = rational_to_point(e.value, sigma_R_); break;
      case Expr::Kind::Neg: p = apply_unary(ArithOp::Neg, a(0)); break;
      case Expr::Kind::Add: p = apply_binary(ArithOp::Add, a(0), a(1)); break;
      case Expr::Kind::Sub: p = apply_binary(ArithOp::Add, a(0), apply_unary(ArithOp::Neg, a(1))); break;
      case Expr::Kind::Mul: p = apply_binary(ArithOp::Mul, a(0), a(1)); break;
      case Expr::Kind::Min: p = apply_binary(ArithOp::Min, a(0), a(1)); break;
      case Expr::Kind::Max: p = apply_binary(ArithOp::Max, a(0), a(1)); break;
      case Expr::Kind::Abs: p = apply_unary(ArithOp::Abs, a(0)); break;
    }
    memo_.emplace(key, p);
    return p;
  }

  std::size_t nodes() const { return memo_.size(); }

 private:
  SpacePtr sigma_R_;
  std::map<std::string, Point> memo_;
};

inline constexpr std::size_t kEvalBudget = 100000;

// Bounds of width <= 2^(1-bits), read from the first narrow enough stream dot.
inline Bounds eval_expr(const Expr& e, std::uint64_t bits, std::size_t budget = kEvalBudget) {
  ExprCompiler c;
  Point p = c.compile(e);
  const Rational target = pow2(1 - static_cast<std::int64_t>(bits));
  for (std::size_t k = 0; k < budget; ++k) {
    Dot d = p.at(k);
    if (d.is_max()) continue;
    auto iv = *interval_of(d);
    if (iv.hi - iv.lo <= target) return {iv.lo, iv.hi};
  }
  throw BudgetError("expression did not reach width 2^" + std::to_string(1 - static_cast<std::int64_t>(bits)) +
                    " within " + std::to_string(budget) + " dots");
}

inline Bounds eval_expr(const std::string& s, std::uint64_t bits, std::size_t budget = kEvalBudget) {
  return eval_expr(*parse_expr(s), bits, budget);
}

}  // namespace natspace
