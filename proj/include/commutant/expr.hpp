// Closed-form scalar expressions of time with exact symbolic differentiation.
//
// The condition algebra consumes first and second derivatives of the system
// coefficients; finite differences would add a second tolerance source, so
// coefficients are kept as expression trees and differentiated exactly.
//
// Grammar (text form):
//   expr   := term (('+'|'-') term)*
//   term   := factor (('*'|'/') factor)*
//   factor := '-' factor | base ('^' integer)?
//   base   := number | 't' | '(' expr ')' | func '(' expr ')'
//   func   := 'sqrt' | 'sin' | 'cos' | 'exp'
// Numbers use '.' as the decimal separator; scientific notation is accepted.

#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

namespace commutant {

/// Evaluation failed at the requested point (division by zero, sqrt of a
/// negative argument, or a non-finite result).
class DomainError : public std::runtime_error {
 public:
  explicit DomainError(const std::string& what) : std::runtime_error(what) {}
};

/// Text did not match the expression grammar.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t position)
      : std::runtime_error(what + " (at position " + std::to_string(position) + ")"),
        position_(position) {}
  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

/// Immutable expression tree. Copies share nodes; safe to evaluate from
/// concurrent contexts.
class Expr {
  enum class Kind { Constant, Time, Negate, Add, Multiply, Divide, Power, Sqrt, Sin, Cos, Exp };

  struct Node {
    Kind kind;
    double value = 0.0;  // Constant
    int exponent = 0;    // Power
    std::shared_ptr<const Node> a, b;
  };
  using NodePtr = std::shared_ptr<const Node>;

 public:
  /// Default-constructed expression is the constant 0.
  Expr() : node_(make(Kind::Constant)) {}

  static Expr constant(double v) {
    Expr e;
    auto n = std::make_shared<Node>();
    n->kind = Kind::Constant;
    n->value = v;
    e.node_ = std::move(n);
    return e;
  }

  static Expr time() { return Expr(make(Kind::Time)); }

  bool is_constant() const { return node_->kind == Kind::Constant; }
  double constant_value() const { return node_->value; }

  /// True if the tree contains the time variable anywhere.
  bool depends_on_time() const { return depends_on_time(node_.get()); }

  double evaluate(double t) const {
    double v = eval(node_.get(), t);
    if (!std::isfinite(v)) throw DomainError("expression evaluates to a non-finite value at t=" + std::to_string(t));
    return v;
  }

  Expr derivative() const { return Expr(diff(node_)); }

  std::string str() const {
    std::string out;
    print(node_.get(), 0, out);
    return out;
  }

  Expr operator-() const {
    if (is_constant()) return constant(-constant_value());
    return Expr(make(Kind::Negate, node_));
  }

  friend Expr operator+(const Expr& x, const Expr& y) {
    if (x.is_constant() && y.is_constant()) return constant(x.constant_value() + y.constant_value());
    if (x.is_constant() && x.constant_value() == 0.0) return y;
    if (y.is_constant() && y.constant_value() == 0.0) return x;
    return Expr(make(Kind::Add, x.node_, y.node_));
  }

  friend Expr operator-(const Expr& x, const Expr& y) { return x + (-y); }

  friend Expr operator*(const Expr& x, const Expr& y) {
    if (x.is_constant() && y.is_constant()) return constant(x.constant_value() * y.constant_value());
    if (x.is_constant()) {
      if (x.constant_value() == 0.0) return constant(0.0);
      if (x.constant_value() == 1.0) return y;
    }
    if (y.is_constant()) {
      if (y.constant_value() == 0.0) return constant(0.0);
      if (y.constant_value() == 1.0) return x;
    }
    return Expr(make(Kind::Multiply, x.node_, y.node_));
  }

  friend Expr operator/(const Expr& x, const Expr& y) {
    if (y.is_constant() && y.constant_value() == 1.0) return x;
    if (x.is_constant() && x.constant_value() == 0.0 && !(y.is_constant() && y.constant_value() == 0.0))
      return constant(0.0);
    return Expr(make(Kind::Divide, x.node_, y.node_));
  }

  friend Expr pow(const Expr& base, int exponent) {
    if (exponent == 0) return constant(1.0);
    if (exponent == 1) return base;
    if (base.is_constant()) return constant(std::pow(base.constant_value(), exponent));
    auto n = std::make_shared<Node>();
    n->kind = Kind::Power;
    n->exponent = exponent;
    n->a = base.node_;
    return Expr(NodePtr(std::move(n)));
  }

  friend Expr sqrt(const Expr& x) { return Expr(make(Kind::Sqrt, x.node_)); }
  friend Expr sin(const Expr& x) { return Expr(make(Kind::Sin, x.node_)); }
  friend Expr cos(const Expr& x) { return Expr(make(Kind::Cos, x.node_)); }
  friend Expr exp(const Expr& x) { return Expr(make(Kind::Exp, x.node_)); }

  friend Expr parse_expression(std::string_view text);

 private:
  explicit Expr(NodePtr n) : node_(std::move(n)) {}

  static NodePtr make(Kind k, NodePtr a = nullptr, NodePtr b = nullptr) {
    auto n = std::make_shared<Node>();
    n->kind = k;
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
  }

  static bool depends_on_time(const Node* n) {
    if (!n) return false;
    if (n->kind == Kind::Time) return true;
    return depends_on_time(n->a.get()) || depends_on_time(n->b.get());
  }

  static double eval(const Node* n, double t) {
    switch (n->kind) {
      case Kind::Constant: return n->value;
      case Kind::Time: return t;
      case Kind::Negate: return -eval(n->a.get(), t);
      case Kind::Add: return eval(n->a.get(), t) + eval(n->b.get(), t);
      case Kind::Multiply: return eval(n->a.get(), t) * eval(n->b.get(), t);
      case Kind::Divide: {
        double den = eval(n->b.get(), t);
        if (den == 0.0) throw DomainError("division by zero at t=" + std::to_string(t));
        return eval(n->a.get(), t) / den;
      }
      case Kind::Power: {
        double base = eval(n->a.get(), t);
        if (base == 0.0 && n->exponent < 0) throw DomainError("zero raised to a negative power at t=" + std::to_string(t));
        return std::pow(base, n->exponent);
      }
      case Kind::Sqrt: {
        double v = eval(n->a.get(), t);
        if (v < 0.0) throw DomainError("sqrt of a negative value at t=" + std::to_string(t));
        return std::sqrt(v);
      }
      case Kind::Sin: return std::sin(eval(n->a.get(), t));
      case Kind::Cos: return std::cos(eval(n->a.get(), t));
      case Kind::Exp: return std::exp(eval(n->a.get(), t));
    }
    throw DomainError("corrupt expression node");
  }

  // d/dt by the standard rules; the result is again a tree, so second
  // derivatives always exist.
  static NodePtr diff(const NodePtr& n) {
    const Expr u = n->a ? Expr(n->a) : Expr();
    const Expr v = n->b ? Expr(n->b) : Expr();
    switch (n->kind) {
      case Kind::Constant: return constant(0.0).node_;
      case Kind::Time: return constant(1.0).node_;
      case Kind::Negate: return (-Expr(diff(n->a))).node_;
      case Kind::Add: return (Expr(diff(n->a)) + Expr(diff(n->b))).node_;
      case Kind::Multiply: return (Expr(diff(n->a)) * v + u * Expr(diff(n->b))).node_;
      case Kind::Divide: return ((Expr(diff(n->a)) * v - u * Expr(diff(n->b))) / (v * v)).node_;
      case Kind::Power:
        return (constant(static_cast<double>(n->exponent)) * pow(u, n->exponent - 1) * Expr(diff(n->a))).node_;
      case Kind::Sqrt: return (Expr(diff(n->a)) / (constant(2.0) * sqrt(u))).node_;
      case Kind::Sin: return (cos(u) * Expr(diff(n->a))).node_;
      case Kind::Cos: return (-(sin(u) * Expr(diff(n->a)))).node_;
      case Kind::Exp: return (exp(u) * Expr(diff(n->a))).node_;
    }
    throw DomainError("corrupt expression node");
  }

  // Precedence: 1 additive, 2 multiplicative, 3 unary minus, 4 power/atom.
  static int precedence(const Node* n) {
    switch (n->kind) {
      case Kind::Add: return 1;
      case Kind::Multiply:
      case Kind::Divide: return 2;
      case Kind::Negate: return 3;
      case Kind::Power: return 4;
      default: return 5;
    }
  }

  static void print(const Node* n, int parent_prec, std::string& out) {
    const int prec = precedence(n);
    const bool parens = prec < parent_prec;
    if (parens) out += '(';
    switch (n->kind) {
      case Kind::Constant: {
        char buf[40];
        std::snprintf(buf, sizeof(buf), "%.17g", n->value);
        out += buf;
        break;
      }
      case Kind::Time: out += 't'; break;
      case Kind::Negate:
        out += '-';
        print(n->a.get(), 3, out);
        break;
      case Kind::Add:
        print(n->a.get(), 1, out);
        if (n->b->kind == Kind::Negate) {
          out += " - ";
          print(n->b->a.get(), 2, out);
        } else if (n->b->kind == Kind::Constant && n->b->value < 0.0) {
          char buf[40];
          std::snprintf(buf, sizeof(buf), "%.17g", -n->b->value);
          out += " - ";
          out += buf;
        } else {
          out += " + ";
          print(n->b.get(), 1, out);
        }
        break;
      case Kind::Multiply:
        print(n->a.get(), 2, out);
        out += '*';
        print(n->b.get(), 3, out);
        break;
      case Kind::Divide:
        print(n->a.get(), 2, out);
        out += '/';
        print(n->b.get(), 3, out);
        break;
      case Kind::Power:
        print(n->a.get(), 5, out);
        out += '^';
        if (n->exponent < 0) {
          out += '(';
          out += std::to_string(n->exponent);
          out += ')';
        } else {
          out += std::to_string(n->exponent);
        }
        break;
      case Kind::Sqrt: out += "sqrt("; print(n->a.get(), 0, out); out += ')'; break;
      case Kind::Sin: out += "sin("; print(n->a.get(), 0, out); out += ')'; break;
      case Kind::Cos: out += "cos("; print(n->a.get(), 0, out); out += ')'; break;
      case Kind::Exp: out += "exp("; print(n->a.get(), 0, out); out += ')'; break;
    }
    if (parens) out += ')';
  }

  NodePtr node_;
};

/// Evaluates the order-th symbolic derivative of e at t (order 0, 1 or 2).
inline double evaluate_derivative(const Expr& e, int order, double t) {
  if (order < 0 || order > 2) throw std::invalid_argument("derivative order must be 0, 1 or 2");
  Expr d = e;
  for (int i = 0; i < order; ++i) d = d.derivative();
  return d.evaluate(t);
}

namespace detail {

class ExprParser {
 public:
  explicit ExprParser(std::string_view text) : text_(text) {}

  Expr parse() {
    Expr e = parse_sum();
    skip_ws();
    if (pos_ != text_.size()) fail("unexpected trailing input");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, pos_); }

  void skip_ws() {
    while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t')) ++pos_;
  }

  bool consume(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  char peek() {
    skip_ws();
    return pos_ < text_.size() ? text_[pos_] : '\0';
  }

  Expr parse_sum() {
    Expr e = parse_term();
    for (;;) {
      if (consume('+')) {
        e = e + parse_term();
      } else if (consume('-')) {
        e = e - parse_term();
      } else {
        return e;
      }
    }
  }

  Expr parse_term() {
    Expr e = parse_factor();
    for (;;) {
      if (consume('*')) {
        e = e * parse_factor();
      } else if (consume('/')) {
        e = e / parse_factor();
      } else {
        return e;
      }
    }
  }

  Expr parse_factor() {
    if (consume('-')) return -parse_factor();
    Expr base = parse_base();
    if (consume('^')) return pow(base, parse_integer());
    return base;
  }

  int parse_integer() {
    skip_ws();
    std::size_t start = pos_;
    bool neg = false;
    bool parens = false;
    if (pos_ < text_.size() && text_[pos_] == '(') {
      parens = true;
      ++pos_;
      skip_ws();
    }
    if (pos_ < text_.size() && text_[pos_] == '-') {
      neg = true;
      ++pos_;
    }
    if (pos_ >= text_.size() || !std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
      pos_ = start;
      fail("expected an integer exponent");
    }
    long v = 0;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
      v = v * 10 + (text_[pos_] - '0');
      if (v > 1000) fail("exponent too large");
      ++pos_;
    }
    if (parens && !consume(')')) fail("expected ')' after exponent");
    return static_cast<int>(neg ? -v : v);
  }

  Expr parse_base() {
    skip_ws();
    if (pos_ >= text_.size()) fail("unexpected end of input");
    char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      Expr e = parse_sum();
      if (!consume(')')) fail("expected ')'");
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c))) return parse_identifier();
    fail(std::string("unexpected character '") + c + "'");
  }

  Expr parse_number() {
    const char* begin = text_.data() + pos_;
    char* end = nullptr;
    // strtod needs a terminated buffer; copy the candidate span.
    std::size_t n = text_.size() - pos_;
    std::string buf(begin, std::min<std::size_t>(n, 64));
    double v = std::strtod(buf.c_str(), &end);
    if (end == buf.c_str()) fail("malformed number");
    pos_ += static_cast<std::size_t>(end - buf.c_str());
    return Expr::constant(v);
  }

  Expr parse_identifier() {
    std::size_t start = pos_;
    while (pos_ < text_.size() && std::isalpha(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    std::string_view name = text_.substr(start, pos_ - start);
    if (name == "t") return Expr::time();
    Expr (*fn)(const Expr&) = nullptr;
    if (name == "sqrt") fn = [](const Expr& e) { return sqrt(e); };
    else if (name == "sin") fn = [](const Expr& e) { return sin(e); };
    else if (name == "cos") fn = [](const Expr& e) { return cos(e); };
    else if (name == "exp") fn = [](const Expr& e) { return exp(e); };
    if (!fn) {
      pos_ = start;
      fail("unknown identifier '" + std::string(name) + "'");
    }
    if (!consume('(')) fail("expected '(' after function name");
    Expr arg = parse_sum();
    if (!consume(')')) fail("expected ')'");
    return fn(arg);
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline Expr parse_expression(std::string_view text) { return detail::ExprParser(text).parse(); }

}  // namespace commutant
