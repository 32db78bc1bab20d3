#include "degen/expr.hpp"

#include <cctype>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "degen/errors.hpp"

namespace degen {

struct Expr::Node {
  Op op = Op::constant;
  double value = 0.0;
  int var = 0;
  unsigned mask = 0;  // bit v set when the subtree depends on variable v
  std::shared_ptr<const Node> lhs;
  std::shared_ptr<const Node> rhs;
};

namespace {

using NodePtr = std::shared_ptr<const Expr::Node>;

double eval(const Expr::Node& n, const double* vars) {
  using Op = Expr::Op;
  switch (n.op) {
    case Op::constant: return n.value;
    case Op::variable: return vars[n.var];
    case Op::add: return eval(*n.lhs, vars) + eval(*n.rhs, vars);
    case Op::sub: return eval(*n.lhs, vars) - eval(*n.rhs, vars);
    case Op::mul: return eval(*n.lhs, vars) * eval(*n.rhs, vars);
    case Op::div: return eval(*n.lhs, vars) / eval(*n.rhs, vars);
    case Op::neg: return -eval(*n.lhs, vars);
    case Op::pow: {
      const double e = eval(*n.rhs, vars);
      if (e == 2.0) {
        const double b = eval(*n.lhs, vars);
        return b * b;
      }
      return std::pow(eval(*n.lhs, vars), e);
    }
    case Op::exp: return std::exp(eval(*n.lhs, vars));
    case Op::log: return std::log(eval(*n.lhs, vars));
    case Op::sin: return std::sin(eval(*n.lhs, vars));
    case Op::cos: return std::cos(eval(*n.lhs, vars));
    case Op::sqrt: return std::sqrt(eval(*n.lhs, vars));
  }
  return 0.0;
}

std::string format_number(double v) {
  std::string s = fmt::format("{:.17g}", v);
  // Prefer the shortest representation that round-trips.
  for (int p = 1; p < 17; ++p) {
    std::string shorter = fmt::format("{:.{}g}", v, p);
    if (std::strtod(shorter.c_str(), nullptr) == v) {
      s = shorter;
      break;
    }
  }
  return v < 0 ? "(" + s + ")" : s;
}

std::string print(const Expr::Node& n) {
  using Op = Expr::Op;
  static const char* names[] = {"x1", "x2", "t"};
  switch (n.op) {
    case Op::constant: return format_number(n.value);
    case Op::variable: return names[n.var];
    case Op::add: return "(" + print(*n.lhs) + " + " + print(*n.rhs) + ")";
    case Op::sub: return "(" + print(*n.lhs) + " - " + print(*n.rhs) + ")";
    case Op::mul: return "(" + print(*n.lhs) + " * " + print(*n.rhs) + ")";
    case Op::div: return "(" + print(*n.lhs) + " / " + print(*n.rhs) + ")";
    case Op::neg: return "(-" + print(*n.lhs) + ")";
    case Op::pow: return "(" + print(*n.lhs) + " ^ " + print(*n.rhs) + ")";
    case Op::exp: return "exp(" + print(*n.lhs) + ")";
    case Op::log: return "log(" + print(*n.lhs) + ")";
    case Op::sin: return "sin(" + print(*n.lhs) + ")";
    case Op::cos: return "cos(" + print(*n.lhs) + ")";
    case Op::sqrt: return "sqrt(" + print(*n.lhs) + ")";
  }
  return {};
}

}  // namespace

Expr::Expr() : Expr(0.0) {}

Expr::Expr(double value) {
  auto n = std::make_shared<Node>();
  n->op = Op::constant;
  n->value = value;
  node_ = std::move(n);
}

Expr Expr::variable(Var v) {
  auto n = std::make_shared<Node>();
  n->op = Op::variable;
  n->var = static_cast<int>(v);
  n->mask = 1u << n->var;
  return Expr(NodePtr(std::move(n)));
}

Expr Expr::make(Op op, Expr lhs, Expr rhs) {
  auto n = std::make_shared<Node>();
  n->op = op;
  n->mask = lhs.node_->mask | rhs.node_->mask;
  n->lhs = std::move(lhs.node_);
  n->rhs = std::move(rhs.node_);
  if (n->mask == 0) {
    // Fold: a variable-free tree is evaluated once and stored as a constant.
    const double zeros[3] = {0.0, 0.0, 0.0};
    return Expr(eval(*n, zeros));
  }
  return Expr(NodePtr(std::move(n)));
}

double Expr::operator()(double x1, double x2, double t) const {
  const double vars[3] = {x1, x2, t};
  return eval(*node_, vars);
}

bool Expr::is_constant() const { return node_->op == Op::constant; }
double Expr::constant_value() const { return node_->value; }
bool Expr::depends_on(Var v) const { return (node_->mask >> static_cast<int>(v)) & 1u; }
Expr::Op Expr::op() const { return node_->op; }
std::string Expr::to_string() const { return print(*node_); }

namespace {
bool is_value(const Expr& e, double v) { return e.is_constant() && e.constant_value() == v; }
}  // namespace

Expr operator+(const Expr& a, const Expr& b) {
  if (is_value(a, 0.0)) return b;
  if (is_value(b, 0.0)) return a;
  return Expr::make(Expr::Op::add, a, b);
}

Expr operator-(const Expr& a, const Expr& b) {
  if (is_value(b, 0.0)) return a;
  if (is_value(a, 0.0)) return -b;
  return Expr::make(Expr::Op::sub, a, b);
}

Expr operator*(const Expr& a, const Expr& b) {
  if (is_value(a, 0.0) || is_value(b, 0.0)) return Expr(0.0);
  if (is_value(a, 1.0)) return b;
  if (is_value(b, 1.0)) return a;
  if (is_value(a, -1.0)) return -b;
  if (is_value(b, -1.0)) return -a;
  return Expr::make(Expr::Op::mul, a, b);
}

Expr operator/(const Expr& a, const Expr& b) {
  if (is_value(a, 0.0)) return Expr(0.0);
  if (is_value(b, 1.0)) return a;
  return Expr::make(Expr::Op::div, a, b);
}

Expr operator-(const Expr& a) {
  if (a.is_constant()) return Expr(-a.constant_value());
  if (a.op() == Expr::Op::neg) return Expr(a.node_->lhs);
  return Expr::make(Expr::Op::neg, a);
}

Expr pow(const Expr& base, const Expr& exponent) {
  if (is_value(exponent, 0.0)) return Expr(1.0);
  if (is_value(exponent, 1.0)) return base;
  return Expr::make(Expr::Op::pow, base, exponent);
}

Expr exp(const Expr& a) { return Expr::make(Expr::Op::exp, a); }
Expr log(const Expr& a) { return Expr::make(Expr::Op::log, a); }
Expr sin(const Expr& a) { return Expr::make(Expr::Op::sin, a); }
Expr cos(const Expr& a) { return Expr::make(Expr::Op::cos, a); }
Expr sqrt(const Expr& a) { return Expr::make(Expr::Op::sqrt, a); }

Expr Expr::diff(Var v) const {
  if (!depends_on(v)) return Expr(0.0);
  const Node& n = *node_;
  const Expr l = n.lhs ? Expr(n.lhs) : Expr();
  const Expr r = n.rhs ? Expr(n.rhs) : Expr();
  switch (n.op) {
    case Op::constant: return Expr(0.0);
    case Op::variable: return Expr(n.var == static_cast<int>(v) ? 1.0 : 0.0);
    case Op::add: return l.diff(v) + r.diff(v);
    case Op::sub: return l.diff(v) - r.diff(v);
    case Op::mul: return l.diff(v) * r + l * r.diff(v);
    case Op::div: return (l.diff(v) * r - l * r.diff(v)) / (r * r);
    case Op::neg: return -l.diff(v);
    case Op::pow:
      if (!r.depends_on(v)) {
        // d(b^p) = p b^(p-1) b'
        return r * pow(l, r - Expr(1.0)) * l.diff(v);
      }
      return *this * (r.diff(v) * log(l) + r * l.diff(v) / l);
    case Op::exp: return *this * l.diff(v);
    case Op::log: return l.diff(v) / l;
    case Op::sin: return cos(l) * l.diff(v);
    case Op::cos: return -(sin(l) * l.diff(v));
    case Op::sqrt: return l.diff(v) / (Expr(2.0) * *this);
  }
  return Expr(0.0);
}

namespace {

class Parser {
 public:
  Parser(std::string_view text, const SymbolTable& symbols) : text_(text), symbols_(symbols) {}

  Expr parse() {
    Expr e = expression();
    skip_space();
    if (pos_ != text_.size()) fail("unexpected '" + std::string(1, text_[pos_]) + "'");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError("expression: " + what, 1, static_cast<int>(pos_) + 1);
  }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_space();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  Expr expression() {
    Expr e = term();
    for (;;) {
      if (accept('+')) e = e + term();
      else if (accept('-')) e = e - term();
      else return e;
    }
  }

  Expr term() {
    Expr e = unary();
    for (;;) {
      if (accept('*')) e = e * unary();
      else if (accept('/')) e = e / unary();
      else return e;
    }
  }

  Expr unary() {
    if (accept('-')) return -unary();
    if (accept('+')) return unary();
    return power();
  }

  Expr power() {
    Expr base = primary();
    if (accept('^')) return pow(base, unary());
    return base;
  }

  Expr primary() {
    skip_space();
    if (pos_ >= text_.size()) fail("unexpected end of expression");
    const char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      Expr e = expression();
      if (!accept(')')) fail("expected ')'");
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return name();
    fail("unexpected '" + std::string(1, c) + "'");
  }

  Expr number() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.'))
      ++pos_;
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      std::size_t p = pos_ + 1;
      if (p < text_.size() && (text_[p] == '+' || text_[p] == '-')) ++p;
      if (p < text_.size() && std::isdigit(static_cast<unsigned char>(text_[p]))) {
        pos_ = p;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      }
    }
    const std::string token(text_.substr(start, pos_ - start));
    char* end = nullptr;
    const double v = std::strtod(token.c_str(), &end);
    if (end != token.c_str() + token.size()) {
      pos_ = start;
      fail("malformed number '" + token + "'");
    }
    return Expr(v);
  }

  Expr name() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
      ++pos_;
    const std::string id(text_.substr(start, pos_ - start));
    using Fn = Expr (*)(const Expr&);
    static const std::map<std::string, Fn, std::less<>> functions = {
        {"exp", [](const Expr& a) { return exp(a); }},
        {"log", [](const Expr& a) { return log(a); }},
        {"sin", [](const Expr& a) { return sin(a); }},
        {"cos", [](const Expr& a) { return cos(a); }},
        {"sqrt", [](const Expr& a) { return sqrt(a); }},
    };
    if (auto it = functions.find(id); it != functions.end()) {
      if (!accept('(')) fail("expected '(' after " + id);
      Expr arg = expression();
      if (!accept(')')) fail("expected ')'");
      return it->second(arg);
    }
    if (id == "x1" || id == "x") return Expr::x1();
    if (id == "x2" || id == "y") return Expr::x2();
    if (id == "t") return Expr::t();
    if (id == "pi") return Expr(std::numbers::pi);
    if (auto it = symbols_.find(id); it != symbols_.end()) return it->second;
    pos_ = start;
    fail("unknown name '" + id + "'");
  }

  std::string_view text_;
  const SymbolTable& symbols_;
  std::size_t pos_ = 0;
};

}  // namespace

Expr parse_expr(std::string_view text, const SymbolTable& symbols) {
  return Parser(text, symbols).parse();
}

}  // namespace degen
