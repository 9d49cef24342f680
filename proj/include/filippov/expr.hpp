#ifndef FILIPPOV_EXPR_HPP
#define FILIPPOV_EXPR_HPP

// Arithmetic expressions over the plane coordinates and named parameters.
//
// The node set is closed under differentiation and every primitive is smooth
// on its natural domain, so gradients of switching functions and Lie
// derivatives of vector fields are exact.

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <map>
#include <memory>
#include <numbers>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "filippov/error.hpp"
#include "filippov/vec2.hpp"

namespace filippov::expr {

enum class Op { Const, Var, Neg, Sin, Cos, Exp, Sqrt, Add, Sub, Mul, Div, Pow };

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Node {
  Op op = Op::Const;
  double value = 0.0;  // Const
  std::string name;    // Var
  int exponent = 0;    // Pow
  NodePtr lhs;         // unary operand, binary left, Pow base
  NodePtr rhs;         // binary right
};

using SymbolSet = std::set<std::string, std::less<>>;
using Binding = std::map<std::string, double, std::less<>>;

inline bool is_unary(Op op) {
  return op == Op::Neg || op == Op::Sin || op == Op::Cos || op == Op::Exp ||
         op == Op::Sqrt;
}
inline bool is_binary(Op op) {
  return op == Op::Add || op == Op::Sub || op == Op::Mul || op == Op::Div;
}

inline const char* function_name(Op op) {
  switch (op) {
    case Op::Sin: return "sin";
    case Op::Cos: return "cos";
    case Op::Exp: return "exp";
    case Op::Sqrt: return "sqrt";
    default: return "";
  }
}

// ---------------------------------------------------------------------------
// Node construction

namespace detail {

inline double apply_unary(Op op, double a) {
  switch (op) {
    case Op::Neg: return -a;
    case Op::Sin: return std::sin(a);
    case Op::Cos: return std::cos(a);
    case Op::Exp: return std::exp(a);
    case Op::Sqrt: return std::sqrt(a);
    default: return a;
  }
}

inline double apply_binary(Op op, double a, double b) {
  switch (op) {
    case Op::Add: return a + b;
    case Op::Sub: return a - b;
    case Op::Mul: return a * b;
    case Op::Div: return a / b;
    default: return a;
  }
}

inline double ipow(double base, int n) {
  double result = 1.0;
  for (int i = 0; i < n; ++i) result *= base;
  return result;
}

}  // namespace detail

inline NodePtr constant(double v) {
  auto n = std::make_shared<Node>();
  n->op = Op::Const;
  n->value = v;
  return n;
}

inline NodePtr variable(std::string name) {
  auto n = std::make_shared<Node>();
  n->op = Op::Var;
  n->name = std::move(name);
  return n;
}

/// Unary node; folds constant operands when the result is finite.
inline NodePtr unary(Op op, NodePtr a) {
  if (a->op == Op::Const) {
    const double v = detail::apply_unary(op, a->value);
    if (std::isfinite(v)) return constant(v);
  }
  auto n = std::make_shared<Node>();
  n->op = op;
  n->lhs = std::move(a);
  return n;
}

/// Binary node; folds constant operands when the result is finite.
inline NodePtr binary(Op op, NodePtr a, NodePtr b) {
  if (a->op == Op::Const && b->op == Op::Const) {
    const double v = detail::apply_binary(op, a->value, b->value);
    if (std::isfinite(v)) return constant(v);
  }
  auto n = std::make_shared<Node>();
  n->op = op;
  n->lhs = std::move(a);
  n->rhs = std::move(b);
  return n;
}

inline NodePtr power(NodePtr base, int exponent) {
  if (base->op == Op::Const) {
    const double v = detail::ipow(base->value, exponent);
    if (std::isfinite(v)) return constant(v);
  }
  auto n = std::make_shared<Node>();
  n->op = Op::Pow;
  n->lhs = std::move(base);
  n->exponent = exponent;
  return n;
}

// Simplifying constructors used by differentiation.
namespace simplify {

inline bool is_const(const NodePtr& n, double v) {
  return n->op == Op::Const && n->value == v;
}

inline NodePtr neg(NodePtr a) {
  if (a->op == Op::Neg) return a->lhs;
  return unary(Op::Neg, std::move(a));
}
inline NodePtr add(NodePtr a, NodePtr b) {
  if (is_const(a, 0.0)) return b;
  if (is_const(b, 0.0)) return a;
  return binary(Op::Add, std::move(a), std::move(b));
}
inline NodePtr sub(NodePtr a, NodePtr b) {
  if (is_const(b, 0.0)) return a;
  if (is_const(a, 0.0)) return neg(std::move(b));
  return binary(Op::Sub, std::move(a), std::move(b));
}
inline NodePtr mul(NodePtr a, NodePtr b) {
  if (is_const(a, 0.0) || is_const(b, 0.0)) return constant(0.0);
  if (is_const(a, 1.0)) return b;
  if (is_const(b, 1.0)) return a;
  if (is_const(a, -1.0)) return neg(std::move(b));
  if (is_const(b, -1.0)) return neg(std::move(a));
  return binary(Op::Mul, std::move(a), std::move(b));
}
inline NodePtr div(NodePtr a, NodePtr b) {
  if (is_const(a, 0.0)) return constant(0.0);
  if (is_const(b, 1.0)) return a;
  return binary(Op::Div, std::move(a), std::move(b));
}
inline NodePtr pow(NodePtr a, int n) {
  if (n == 0) return constant(1.0);
  if (n == 1) return a;
  return power(std::move(a), n);
}

}  // namespace simplify

inline bool structurally_equal(const Node& a, const Node& b) {
  if (a.op != b.op) return false;
  switch (a.op) {
    case Op::Const: return a.value == b.value;
    case Op::Var: return a.name == b.name;
    case Op::Pow:
      return a.exponent == b.exponent && structurally_equal(*a.lhs, *b.lhs);
    default:
      if (is_unary(a.op)) return structurally_equal(*a.lhs, *b.lhs);
      return structurally_equal(*a.lhs, *b.lhs) && structurally_equal(*a.rhs, *b.rhs);
  }
}

// ---------------------------------------------------------------------------
// Serialization

namespace detail {

inline int precedence(const Node& n) {
  switch (n.op) {
    case Op::Add:
    case Op::Sub: return 1;
    case Op::Mul:
    case Op::Div: return 2;
    case Op::Neg: return 3;
    case Op::Pow: return 4;
    case Op::Const: return n.value < 0.0 || std::signbit(n.value) ? 3 : 5;
    default: return 5;
  }
}

inline std::string format_number(double v) {
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  (void)ec;
  return std::string(buf.data(), end);
}

inline void write(const Node& n, std::string& out);

inline void write_wrapped(const Node& n, bool parens, std::string& out) {
  if (parens) out += '(';
  write(n, out);
  if (parens) out += ')';
}

inline void write(const Node& n, std::string& out) {
  switch (n.op) {
    case Op::Const:
      if (std::signbit(n.value)) {
        out += '-';
        out += format_number(-n.value);
      } else {
        out += format_number(n.value);
      }
      return;
    case Op::Var: out += n.name; return;
    case Op::Neg:
      out += '-';
      write_wrapped(*n.lhs, precedence(*n.lhs) < 3, out);
      return;
    case Op::Pow:
      write_wrapped(*n.lhs, precedence(*n.lhs) <= 4, out);
      out += '^';
      out += std::to_string(n.exponent);
      return;
    case Op::Sin:
    case Op::Cos:
    case Op::Exp:
    case Op::Sqrt:
      out += function_name(n.op);
      out += '(';
      write(*n.lhs, out);
      out += ')';
      return;
    default: {
      const int p = precedence(n);
      write_wrapped(*n.lhs, precedence(*n.lhs) < p, out);
      switch (n.op) {
        case Op::Add: out += " + "; break;
        case Op::Sub: out += " - "; break;
        case Op::Mul: out += " * "; break;
        default: out += " / "; break;
      }
      write_wrapped(*n.rhs, precedence(*n.rhs) <= p, out);
      return;
    }
  }
}

}  // namespace detail

inline std::string to_string(const Node& n) {
  std::string out;
  detail::write(n, out);
  return out;
}

// ---------------------------------------------------------------------------
// Expression

/// Immutable expression tree together with the symbols it may reference.
class Expression {
 public:
  Expression() : root_(constant(0.0)), symbols_(std::make_shared<SymbolSet>()) {}
  Expression(NodePtr root, SymbolSet symbols)
      : root_(std::move(root)),
        symbols_(std::make_shared<const SymbolSet>(std::move(symbols))) {}
  Expression(NodePtr root, std::shared_ptr<const SymbolSet> symbols)
      : root_(std::move(root)), symbols_(std::move(symbols)) {}

  const Node& root() const { return *root_; }
  const NodePtr& root_ptr() const { return root_; }
  const SymbolSet& symbols() const { return *symbols_; }
  const std::shared_ptr<const SymbolSet>& shared_symbols() const { return symbols_; }

  std::string to_string() const { return expr::to_string(*root_); }

  friend bool operator==(const Expression& a, const Expression& b) {
    return structurally_equal(*a.root_, *b.root_);
  }

 private:
  NodePtr root_;
  std::shared_ptr<const SymbolSet> symbols_;
};

// ---------------------------------------------------------------------------
// Parsing
//
//   expr    := term { ('+' | '-') term }
//   term    := unary { ('*' | '/') unary }
//   unary   := '-' unary | power
//   power   := primary [ '^' unary ]          exponent folds to an integer >= 0
//   primary := number | name | func '(' expr ')' | '(' expr ')'
//   func    := 'sin' | 'cos' | 'exp' | 'sqrt'

namespace detail {

class Parser {
 public:
  Parser(std::string_view src, const SymbolSet& symbols) : src_(src), symbols_(symbols) {}

  NodePtr parse() {
    NodePtr n = parse_expr();
    skip_ws();
    if (pos_ != src_.size()) throw ParseError("unexpected character '" + std::string(1, src_[pos_]) + "'", pos_);
    return n;
  }

 private:
  static constexpr int kMaxExponent = 64;

  void skip_ws() {
    while (pos_ < src_.size() && (src_[pos_] == ' ' || src_[pos_] == '\t' || src_[pos_] == '\n' || src_[pos_] == '\r')) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) {
      if (pos_ >= src_.size()) throw ParseError(std::string("expected '") + c + "' but reached end of input", pos_);
      throw ParseError(std::string("expected '") + c + "'", pos_);
    }
  }

  NodePtr parse_expr() {
    NodePtr lhs = parse_term();
    for (;;) {
      if (accept('+')) {
        lhs = binary(Op::Add, lhs, parse_term());
      } else if (accept('-')) {
        lhs = binary(Op::Sub, lhs, parse_term());
      } else {
        return lhs;
      }
    }
  }

  NodePtr parse_term() {
    NodePtr lhs = parse_unary();
    for (;;) {
      if (accept('*')) {
        lhs = binary(Op::Mul, lhs, parse_unary());
      } else if (accept('/')) {
        lhs = binary(Op::Div, lhs, parse_unary());
      } else {
        return lhs;
      }
    }
  }

  NodePtr parse_unary() {
    if (accept('-')) return unary(Op::Neg, parse_unary());
    return parse_power();
  }

  NodePtr parse_power() {
    NodePtr base = parse_primary();
    if (!accept('^')) return base;
    skip_ws();
    const std::size_t at = pos_;
    NodePtr exp = parse_unary();
    if (exp->op != Op::Const) throw ParseError("pow exponent must be a constant integer", at);
    const double e = exp->value;
    if (e < 0.0) throw ParseError("negative pow exponent", at);
    if (e != std::floor(e)) throw ParseError("non-integer pow exponent", at);
    if (e > kMaxExponent) throw ParseError("pow exponent too large", at);
    return power(base, static_cast<int>(e));
  }

  NodePtr parse_primary() {
    skip_ws();
    if (pos_ >= src_.size()) throw ParseError("unexpected end of input", pos_);
    const char c = src_[pos_];
    if (c == '(') {
      ++pos_;
      NodePtr inner = parse_expr();
      expect(')');
      return inner;
    }
    if ((c >= '0' && c <= '9') || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_name();
    throw ParseError("unexpected character '" + std::string(1, c) + "'", pos_);
  }

  NodePtr parse_number() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() && (std::isdigit(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '.')) ++pos_;
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t look = pos_ + 1;
      if (look < src_.size() && (src_[look] == '+' || src_[look] == '-')) ++look;
      if (look < src_.size() && std::isdigit(static_cast<unsigned char>(src_[look]))) {
        pos_ = look;
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
      }
    }
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(src_.data() + start, src_.data() + pos_, v);
    if (ec != std::errc() || ptr != src_.data() + pos_ || !std::isfinite(v)) {
      throw ParseError("malformed number", start);
    }
    return constant(v);
  }

  NodePtr parse_name() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) ++pos_;
    std::string name(src_.substr(start, pos_ - start));
    skip_ws();
    const bool call = pos_ < src_.size() && src_[pos_] == '(';
    if (call) {
      Op op;
      if (name == "sin") {
        op = Op::Sin;
      } else if (name == "cos") {
        op = Op::Cos;
      } else if (name == "exp") {
        op = Op::Exp;
      } else if (name == "sqrt") {
        op = Op::Sqrt;
      } else if (name == "abs" || name == "sign" || name == "sgn" || name == "min" ||
                 name == "max" || name == "floor" || name == "ceil") {
        throw ParseError("non-smooth primitive '" + name + "' is not allowed", start);
      } else {
        throw ParseError("unknown function '" + name + "'", start);
      }
      ++pos_;
      NodePtr arg = parse_expr();
      expect(')');
      return unary(op, arg);
    }
    if (symbols_.contains(name)) return variable(std::move(name));
    if (name == "pi") return constant(std::numbers::pi);
    throw ParseError("unknown identifier '" + name + "'", start);
  }

  std::string_view src_;
  const SymbolSet& symbols_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline Expression parse_expression(std::string_view source, const SymbolSet& symbols) {
  if (symbols.empty()) throw ConfigError("parse_expression: symbol set is empty");
  detail::Parser p(source, symbols);
  return Expression(p.parse(), symbols);
}

// ---------------------------------------------------------------------------
// Evaluation and differentiation

namespace detail {

inline double checked(double v, const char* what) {
  if (!std::isfinite(v)) throw EvaluationError(std::string("non-finite value in ") + what);
  return v;
}

inline double eval(const Node& n, const Binding& b) {
  switch (n.op) {
    case Op::Const: return n.value;
    case Op::Var: {
      auto it = b.find(n.name);
      if (it == b.end()) throw EvaluationError("missing binding for '" + n.name + "'");
      return it->second;
    }
    case Op::Pow: return checked(ipow(eval(*n.lhs, b), n.exponent), "pow");
    default:
      if (is_unary(n.op)) return checked(apply_unary(n.op, eval(*n.lhs, b)), "unary operation");
      return checked(apply_binary(n.op, eval(*n.lhs, b), eval(*n.rhs, b)), "binary operation");
  }
}

inline NodePtr derive(const NodePtr& np, std::string_view var) {
  namespace s = simplify;
  const Node& n = *np;
  switch (n.op) {
    case Op::Const: return constant(0.0);
    case Op::Var: return constant(n.name == var ? 1.0 : 0.0);
    case Op::Neg: return s::neg(derive(n.lhs, var));
    case Op::Sin: return s::mul(unary(Op::Cos, n.lhs), derive(n.lhs, var));
    case Op::Cos: return s::neg(s::mul(unary(Op::Sin, n.lhs), derive(n.lhs, var)));
    case Op::Exp: return s::mul(np, derive(n.lhs, var));
    case Op::Sqrt:
      return s::div(derive(n.lhs, var), s::mul(constant(2.0), np));
    case Op::Add: return s::add(derive(n.lhs, var), derive(n.rhs, var));
    case Op::Sub: return s::sub(derive(n.lhs, var), derive(n.rhs, var));
    case Op::Mul:
      return s::add(s::mul(derive(n.lhs, var), n.rhs), s::mul(n.lhs, derive(n.rhs, var)));
    case Op::Div:
      return s::div(s::sub(s::mul(derive(n.lhs, var), n.rhs), s::mul(n.lhs, derive(n.rhs, var))),
                    s::pow(n.rhs, 2));
    case Op::Pow:
      if (n.exponent == 0) return constant(0.0);
      return s::mul(s::mul(constant(static_cast<double>(n.exponent)), s::pow(n.lhs, n.exponent - 1)),
                    derive(n.lhs, var));
  }
  return constant(0.0);
}

inline void collect_variables(const Node& n, SymbolSet& out) {
  if (n.op == Op::Var) out.insert(n.name);
  if (n.lhs) collect_variables(*n.lhs, out);
  if (n.rhs) collect_variables(*n.rhs, out);
}

}  // namespace detail

/// Evaluates `e` under `binding`. Throws EvaluationError on a missing binding
/// or on any non-finite intermediate value.
inline double evaluate(const Expression& e, const Binding& binding) {
  return detail::eval(e.root(), binding);
}

/// Exact partial derivative of `e` with respect to `var`.
inline Expression differentiate(const Expression& e, std::string_view var) {
  if (!e.symbols().contains(var)) {
    throw ConfigError("differentiate: '" + std::string(var) + "' is not a declared symbol");
  }
  return Expression(detail::derive(e.root_ptr(), var), e.shared_symbols());
}

inline SymbolSet variables_of(const Expression& e) {
  SymbolSet out;
  detail::collect_variables(e.root(), out);
  return out;
}

// ---------------------------------------------------------------------------
// Compiled fields

/// A scalar function of (x, y): an expression with its parameters bound.
/// Evaluation runs a flat stack program, so it is cheap enough for the
/// integrator's inner loop.
class ScalarField {
 public:
  ScalarField() : ScalarField(Expression(), {}) {}

  ScalarField(Expression e, Binding parameters)
      : expr_(std::move(e)), params_(std::move(parameters)) {
    compile(expr_.root());
    int depth = 0;
    for (const auto& ins : program_) {
      depth += stack_effect(ins.op);
      max_depth_ = std::max(max_depth_, depth);
    }
  }

  const Expression& expression() const { return expr_; }
  const Binding& parameters() const { return params_; }

  double operator()(double x, double y) const {
    std::array<double, kInlineStack> small{};
    std::vector<double> big;
    double* st = small.data();
    if (max_depth_ > kInlineStack) {
      big.resize(static_cast<std::size_t>(max_depth_));
      st = big.data();
    }
    int sp = 0;
    for (const auto& ins : program_) {
      switch (ins.op) {
        case Code::Push: st[sp++] = ins.value; break;
        case Code::X: st[sp++] = x; break;
        case Code::Y: st[sp++] = y; break;
        case Code::Neg: st[sp - 1] = -st[sp - 1]; break;
        case Code::Sin: st[sp - 1] = std::sin(st[sp - 1]); break;
        case Code::Cos: st[sp - 1] = std::cos(st[sp - 1]); break;
        case Code::Exp: st[sp - 1] = std::exp(st[sp - 1]); break;
        case Code::Sqrt: st[sp - 1] = std::sqrt(st[sp - 1]); break;
        case Code::Pow: st[sp - 1] = detail::ipow(st[sp - 1], ins.exponent); break;
        case Code::Add: --sp; st[sp - 1] += st[sp]; break;
        case Code::Sub: --sp; st[sp - 1] -= st[sp]; break;
        case Code::Mul: --sp; st[sp - 1] *= st[sp]; break;
        case Code::Div: --sp; st[sp - 1] /= st[sp]; break;
      }
      if (!std::isfinite(st[sp - 1])) {
        throw EvaluationError("non-finite value evaluating '" + expr_.to_string() + "' at (" +
                              std::to_string(x) + ", " + std::to_string(y) + ")");
      }
    }
    return st[0];
  }

  double operator()(const Vec2& p) const { return (*this)(p.x, p.y); }

  ScalarField derivative(std::string_view var) const {
    return ScalarField(differentiate(expr_, var), params_);
  }

 private:
  static constexpr int kInlineStack = 32;
  enum class Code { Push, X, Y, Neg, Sin, Cos, Exp, Sqrt, Pow, Add, Sub, Mul, Div };
  struct Instr {
    Code op;
    double value = 0.0;
    int exponent = 0;
  };

  static int stack_effect(Code c) {
    switch (c) {
      case Code::Push:
      case Code::X:
      case Code::Y: return 1;
      case Code::Add:
      case Code::Sub:
      case Code::Mul:
      case Code::Div: return -1;
      default: return 0;
    }
  }

  void compile(const Node& n) {
    switch (n.op) {
      case Op::Const: program_.push_back({Code::Push, n.value}); return;
      case Op::Var:
        if (n.name == "x") {
          program_.push_back({Code::X});
        } else if (n.name == "y") {
          program_.push_back({Code::Y});
        } else if (auto it = params_.find(n.name); it != params_.end()) {
          program_.push_back({Code::Push, it->second});
        } else {
          throw ConfigError("unbound parameter '" + n.name + "' in '" + expr_.to_string() + "'");
        }
        return;
      case Op::Pow:
        compile(*n.lhs);
        program_.push_back({Code::Pow, 0.0, n.exponent});
        return;
      default: break;
    }
    compile(*n.lhs);
    if (n.rhs) compile(*n.rhs);
    switch (n.op) {
      case Op::Neg: program_.push_back({Code::Neg}); break;
      case Op::Sin: program_.push_back({Code::Sin}); break;
      case Op::Cos: program_.push_back({Code::Cos}); break;
      case Op::Exp: program_.push_back({Code::Exp}); break;
      case Op::Sqrt: program_.push_back({Code::Sqrt}); break;
      case Op::Add: program_.push_back({Code::Add}); break;
      case Op::Sub: program_.push_back({Code::Sub}); break;
      case Op::Mul: program_.push_back({Code::Mul}); break;
      case Op::Div: program_.push_back({Code::Div}); break;
      default: break;
    }
  }

  Expression expr_;
  Binding params_;
  std::vector<Instr> program_;
  int max_depth_ = 0;
};

/// A planar vector field (X, Y) with both components sharing one binding.
struct PlanarField {
  ScalarField component_x;
  ScalarField component_y;

  Vec2 operator()(const Vec2& p) const { return {component_x(p), component_y(p)}; }

  PlanarField negated() const {
    auto flip = [](const ScalarField& f) {
      return ScalarField(Expression(simplify::neg(f.expression().root_ptr()),
                                    f.expression().shared_symbols()),
                         f.parameters());
    };
    return {flip(component_x), flip(component_y)};
  }
};

/// Symbols available to scenario expressions: x, y and every parameter name.
inline SymbolSet plane_symbols(const Binding& parameters) {
  SymbolSet s{"x", "y"};
  for (const auto& [name, value] : parameters) s.insert(name);
  return s;
}

inline ScalarField make_scalar(std::string_view source, const Binding& parameters) {
  return ScalarField(parse_expression(source, plane_symbols(parameters)), parameters);
}

inline PlanarField make_planar(std::string_view fx, std::string_view fy, const Binding& parameters) {
  return {make_scalar(fx, parameters), make_scalar(fy, parameters)};
}

}  // namespace filippov::expr

#endif  // FILIPPOV_EXPR_HPP
