#pragma once

#include <array>
#include <map>
#include <memory>
#include <string>
#include <string_view>

#include <Eigen/Core>

namespace degen {

/// Spatial points are stored in a fixed 2-vector; 1-D problems use x(0) only.
using Point = Eigen::Vector2d;

/// Variable slots understood by Expr.
enum class Var : int { x1 = 0, x2 = 1, t = 2 };

/// Immutable symbolic expression over (x1, x2, t) with exact differentiation.
///
/// Nodes are shared and never mutated, so copies are cheap and concurrent
/// evaluation is safe. Construction folds constants and drops neutral
/// elements so derivative trees stay small.
class Expr {
 public:
  enum class Op { constant, variable, add, sub, mul, div, neg, pow, exp, log, sin, cos, sqrt };

  Expr();  // the constant 0
  Expr(double value);  // NOLINT(google-explicit-constructor): numeric literals read naturally

  static Expr variable(Var v);
  static Expr x1() { return variable(Var::x1); }
  static Expr x2() { return variable(Var::x2); }
  static Expr t() { return variable(Var::t); }

  double operator()(double x1, double x2, double t) const;
  double operator()(const Point& x, double t) const { return (*this)(x(0), x(1), t); }

  Expr diff(Var v) const;

  bool is_constant() const;
  /// Value of a constant expression; only meaningful when is_constant().
  double constant_value() const;
  bool depends_on(Var v) const;
  Op op() const;

  std::string to_string() const;

  friend Expr operator+(const Expr& a, const Expr& b);
  friend Expr operator-(const Expr& a, const Expr& b);
  friend Expr operator*(const Expr& a, const Expr& b);
  friend Expr operator/(const Expr& a, const Expr& b);
  friend Expr operator-(const Expr& a);
  friend Expr pow(const Expr& base, const Expr& exponent);
  friend Expr exp(const Expr& a);
  friend Expr log(const Expr& a);
  friend Expr sin(const Expr& a);
  friend Expr cos(const Expr& a);
  friend Expr sqrt(const Expr& a);

  struct Node;

 private:
  explicit Expr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  static Expr make(Op op, Expr lhs, Expr rhs = Expr());

  std::shared_ptr<const Node> node_;
};

inline Expr& operator+=(Expr& a, const Expr& b) { return a = a + b; }
inline Expr& operator-=(Expr& a, const Expr& b) { return a = a - b; }
inline Expr& operator*=(Expr& a, const Expr& b) { return a = a * b; }

/// Named symbols available to the parser besides the built-in variables,
/// e.g. "rho" bound to the domain's defining function.
using SymbolTable = std::map<std::string, Expr, std::less<>>;

/// Parses the coefficient grammar:
///
///   expr    := term (('+' | '-') term)*
///   term    := unary (('*' | '/') unary)*
///   unary   := ('+' | '-') unary | power
///   power   := primary ('^' unary)?
///   primary := number | name | func '(' expr ')' | '(' expr ')'
///
/// Names: x1, x2, t, x (= x1), y (= x2), pi, and any entry of `symbols`.
/// Functions: exp, log, sin, cos, sqrt. '^' is right-associative and binds
/// tighter than unary minus. Errors throw ParseError with a 1-based column.
Expr parse_expr(std::string_view text, const SymbolTable& symbols = {});

}  // namespace degen
