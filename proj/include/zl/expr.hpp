#pragma once

// Holomorphic expression language.
//
// Grammar (precedence high to low: ^, unary -, * /, + -):
//
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := '-' unary | power
//   power   := primary ('^' unary)?
//   primary := number | symbol | func '(' expr ')' | '(' expr ')'
//
// Symbols: z1..zN (or z when N == 1), the family parameter n, the constants
// i, pi, e, and any caller-bound named constant. Functions: exp, cos, sin,
// sqrt, log (principal branches). Exponents must not depend on z.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <complex>
#include <map>
#include <memory>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <system_error>
#include <type_traits>
#include <utility>
#include <vector>

#include "zl/dual.hpp"
#include "zl/error.hpp"
#include "zl/types.hpp"

namespace zl {

using Bindings = std::map<std::string, Complex, std::less<>>;

enum class NodeKind { Number, Constant, Variable, Parameter, Negate, Add, Subtract, Multiply, Divide, Power, Call };
enum class Function { Exp, Cos, Sin, Sqrt, Log };

struct Node {
  NodeKind kind = NodeKind::Number;
  double number = 0.0;
  Complex constant{};
  std::string name;  // constant name
  int variable = 0;  // 1-based
  Function function = Function::Exp;
  std::optional<long> integer_exponent;
  std::shared_ptr<const Node> lhs;
  std::shared_ptr<const Node> rhs;
};

using NodePtr = std::shared_ptr<const Node>;

namespace detail {

inline bool same_tree(const Node& a, const Node& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case NodeKind::Number:
      return a.number == b.number;
    case NodeKind::Constant:
      return a.name == b.name && a.constant == b.constant;
    case NodeKind::Variable:
      return a.variable == b.variable;
    case NodeKind::Parameter:
      return true;
    case NodeKind::Negate:
      return same_tree(*a.lhs, *b.lhs);
    case NodeKind::Call:
      return a.function == b.function && same_tree(*a.lhs, *b.lhs);
    default:
      return same_tree(*a.lhs, *b.lhs) && same_tree(*a.rhs, *b.rhs);
  }
}

inline bool mentions_variable(const Node& node) {
  if (node.kind == NodeKind::Variable) return true;
  if (node.lhs && mentions_variable(*node.lhs)) return true;
  return node.rhs && mentions_variable(*node.rhs);
}

inline bool mentions_parameter(const Node& node) {
  if (node.kind == NodeKind::Parameter) return true;
  if (node.lhs && mentions_parameter(*node.lhs)) return true;
  return node.rhs && mentions_parameter(*node.rhs);
}

inline const char* function_name(Function f) {
  switch (f) {
    case Function::Exp: return "exp";
    case Function::Cos: return "cos";
    case Function::Sin: return "sin";
    case Function::Sqrt: return "sqrt";
    case Function::Log: return "log";
  }
  return "?";
}

inline std::optional<Function> function_from_name(std::string_view name) {
  if (name == "exp") return Function::Exp;
  if (name == "cos") return Function::Cos;
  if (name == "sin") return Function::Sin;
  if (name == "sqrt") return Function::Sqrt;
  if (name == "log") return Function::Log;
  return std::nullopt;
}

/// Shortest decimal text that reads back to the same double.
inline std::string format_double(double x) {
  if (x == 0.0) return "0";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, end);
}

class Parser {
 public:
  Parser(std::string_view src, int dim, const Bindings& constants)
      : src_(src), dim_(dim), constants_(constants) {}

  NodePtr run() {
    skip_space();
    if (at_end()) throw SyntaxError("empty expression", pos_);
    NodePtr root = expression();
    skip_space();
    if (!at_end()) throw SyntaxError(std::string("unexpected '") + src_[pos_] + "'", pos_);
    return root;
  }

 private:
  std::string_view src_;
  std::size_t pos_ = 0;
  int dim_;
  const Bindings& constants_;

  bool at_end() const { return pos_ >= src_.size(); }

  void skip_space() {
    while (!at_end() && (src_[pos_] == ' ' || src_[pos_] == '\t')) ++pos_;
  }

  bool accept(char c) {
    skip_space();
    if (!at_end() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  static NodePtr binary(NodeKind kind, NodePtr lhs, NodePtr rhs) {
    auto node = std::make_shared<Node>();
    node->kind = kind;
    node->lhs = std::move(lhs);
    node->rhs = std::move(rhs);
    return node;
  }

  NodePtr expression() {
    NodePtr lhs = term();
    for (;;) {
      if (accept('+')) {
        lhs = binary(NodeKind::Add, lhs, term());
      } else if (accept('-')) {
        lhs = binary(NodeKind::Subtract, lhs, term());
      } else {
        return lhs;
      }
    }
  }

  NodePtr term() {
    NodePtr lhs = unary();
    for (;;) {
      if (accept('*')) {
        lhs = binary(NodeKind::Multiply, lhs, unary());
      } else if (accept('/')) {
        lhs = binary(NodeKind::Divide, lhs, unary());
      } else {
        return lhs;
      }
    }
  }

  NodePtr unary() {
    if (accept('-')) {
      auto node = std::make_shared<Node>();
      node->kind = NodeKind::Negate;
      node->lhs = unary();
      return node;
    }
    return power();
  }

  NodePtr power() {
    NodePtr base = primary();
    if (!accept('^')) return base;
    skip_space();
    const std::size_t exponent_pos = pos_;
    NodePtr exponent = unary();
    if (mentions_variable(*exponent)) throw SyntaxError("exponent must not depend on variables", exponent_pos);
    auto node = std::make_shared<Node>();
    node->kind = NodeKind::Power;
    node->integer_exponent = literal_integer(*exponent);
    node->lhs = std::move(base);
    node->rhs = std::move(exponent);
    return node;
  }

  static std::optional<long> literal_integer(const Node& e) {
    if (e.kind == NodeKind::Number && std::floor(e.number) == e.number && std::abs(e.number) < 1e15)
      return static_cast<long>(e.number);
    if (e.kind == NodeKind::Negate) {
      if (auto inner = literal_integer(*e.lhs)) return -*inner;
    }
    return std::nullopt;
  }

  NodePtr primary() {
    skip_space();
    if (at_end()) throw SyntaxError("unexpected end of input", pos_);
    const char c = src_[pos_];
    if (c == '(') {
      ++pos_;
      NodePtr inner = expression();
      if (!accept(')')) throw SyntaxError("expected ')'", pos_);
      return inner;
    }
    if ((c >= '0' && c <= '9') || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return symbol();
    throw SyntaxError(std::string("unexpected '") + c + "'", pos_);
  }

  NodePtr number() {
    const std::size_t start = pos_;
    auto digit = [&](std::size_t p) { return p < src_.size() && src_[p] >= '0' && src_[p] <= '9'; };
    while (digit(pos_)) ++pos_;
    if (pos_ < src_.size() && src_[pos_] == '.') {
      ++pos_;
      while (digit(pos_)) ++pos_;
    }
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t p = pos_ + 1;
      if (p < src_.size() && (src_[p] == '+' || src_[p] == '-')) ++p;
      if (digit(p)) {
        pos_ = p;
        while (digit(pos_)) ++pos_;
      }
    }
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(src_.data() + start, src_.data() + pos_, value);
    if (ec != std::errc() || ptr != src_.data() + pos_) throw SyntaxError("malformed number", start);
    auto node = std::make_shared<Node>();
    node->kind = NodeKind::Number;
    node->number = value;
    return node;
  }

  NodePtr symbol() {
    const std::size_t start = pos_;
    while (!at_end() && (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) ++pos_;
    const std::string_view name = src_.substr(start, pos_ - start);
    auto node = std::make_shared<Node>();

    if (auto f = function_from_name(name)) {
      if (!accept('(')) throw SyntaxError("expected '(' after " + std::string(name), pos_);
      node->kind = NodeKind::Call;
      node->function = *f;
      node->lhs = expression();
      if (!accept(')')) throw SyntaxError("expected ')'", pos_);
      return node;
    }
    if (name.size() >= 2 && name[0] == 'z' &&
        std::all_of(name.begin() + 1, name.end(), [](char ch) { return ch >= '0' && ch <= '9'; })) {
      int index = 0;
      std::from_chars(name.data() + 1, name.data() + name.size(), index);
      if (index < 1 || index > dim_)
        throw DimensionError("variable " + std::string(name) + " exceeds ambient dimension " + std::to_string(dim_));
      node->kind = NodeKind::Variable;
      node->variable = index;
      return node;
    }
    if (name == "z") {
      if (dim_ != 1) throw DimensionError("bare 'z' is only valid in dimension 1");
      node->kind = NodeKind::Variable;
      node->variable = 1;
      return node;
    }
    if (name == "n") {
      node->kind = NodeKind::Parameter;
      return node;
    }
    node->kind = NodeKind::Constant;
    node->name = std::string(name);
    if (name == "i") {
      node->constant = Complex(0.0, 1.0);
    } else if (name == "pi") {
      node->constant = std::numbers::pi;
    } else if (name == "e") {
      node->constant = std::numbers::e;
    } else if (auto it = constants_.find(name); it != constants_.end()) {
      node->constant = it->second;
    } else {
      throw SyntaxError("unknown symbol '" + std::string(name) + "'", start);
    }
    return node;
  }
};

inline int precedence(const Node& node) {
  switch (node.kind) {
    case NodeKind::Add:
    case NodeKind::Subtract:
      return 1;
    case NodeKind::Multiply:
    case NodeKind::Divide:
      return 2;
    case NodeKind::Negate:
      return 3;
    case NodeKind::Power:
      return 4;
    default:
      return 5;
  }
}

inline void print(const Node& node, std::string& out);

inline void print_wrapped(const Node& node, bool wrap, std::string& out) {
  if (wrap) out += '(';
  print(node, out);
  if (wrap) out += ')';
}

inline void print(const Node& node, std::string& out) {
  const int p = precedence(node);
  switch (node.kind) {
    case NodeKind::Number:
      out += format_double(node.number);
      return;
    case NodeKind::Constant:
      out += node.name;
      return;
    case NodeKind::Variable:
      out += 'z';
      out += std::to_string(node.variable);
      return;
    case NodeKind::Parameter:
      out += 'n';
      return;
    case NodeKind::Negate:
      out += '-';
      print_wrapped(*node.lhs, precedence(*node.lhs) < 3, out);
      return;
    case NodeKind::Call:
      out += function_name(node.function);
      out += '(';
      print(*node.lhs, out);
      out += ')';
      return;
    case NodeKind::Power:
      print_wrapped(*node.lhs, precedence(*node.lhs) <= 4, out);
      out += '^';
      print_wrapped(*node.rhs, precedence(*node.rhs) < 3, out);
      return;
    default: {
      static constexpr char ops[] = {'+', '-', '*', '/'};
      const char op = ops[static_cast<int>(node.kind) - static_cast<int>(NodeKind::Add)];
      print_wrapped(*node.lhs, precedence(*node.lhs) < p, out);
      out += op;
      print_wrapped(*node.rhs, precedence(*node.rhs) <= p, out);
      return;
    }
  }
}

inline bool on_negative_real_axis(const Complex& v) { return v.imag() == 0.0 && v.real() < 0.0; }

template <typename S>
S integer_power(S base, long m) {
  if (m < 0) {
    if (primal(base) == Complex(0.0)) throw EvalError("division by zero in negative power");
    return S(Complex(1.0)) / integer_power(base, -m);
  }
  S result(Complex(1.0));
  while (m > 0) {
    if (m & 1) result = result * base;
    m >>= 1;
    if (m > 0) base = base * base;
  }
  return result;
}

template <typename S>
S evaluate(const Node& node, std::span<const S> z, Index n) {
  switch (node.kind) {
    case NodeKind::Number:
      return S(Complex(node.number));
    case NodeKind::Constant:
      return S(node.constant);
    case NodeKind::Variable:
      return z[static_cast<std::size_t>(node.variable - 1)];
    case NodeKind::Parameter:
      return S(Complex(static_cast<double>(n)));
    case NodeKind::Negate:
      return -evaluate(*node.lhs, z, n);
    case NodeKind::Add:
      return evaluate(*node.lhs, z, n) + evaluate(*node.rhs, z, n);
    case NodeKind::Subtract:
      return evaluate(*node.lhs, z, n) - evaluate(*node.rhs, z, n);
    case NodeKind::Multiply:
      return evaluate(*node.lhs, z, n) * evaluate(*node.rhs, z, n);
    case NodeKind::Divide: {
      S num = evaluate(*node.lhs, z, n);
      S den = evaluate(*node.rhs, z, n);
      if (primal(den) == Complex(0.0)) throw EvalError("division by zero");
      return num / den;
    }
    case NodeKind::Power: {
      S base = evaluate(*node.lhs, z, n);
      if (node.integer_exponent) return integer_power(base, *node.integer_exponent);
      const Complex e = evaluate<Complex>(*node.rhs, std::span<const Complex>{}, n);
      if (e.imag() != 0.0 || std::floor(e.real()) != e.real() || std::abs(e.real()) > 1e15)
        throw EvalError("non-integer exponent");
      const long m = static_cast<long>(e.real());
      const Complex b = primal(base);
      if (b != Complex(0.0) && !on_negative_real_axis(b)) return exp(S(Complex(static_cast<double>(m))) * log(base));
      return integer_power(base, m);
    }
    case NodeKind::Call: {
      S arg = evaluate(*node.lhs, z, n);
      const Complex v = primal(arg);
      switch (node.function) {
        case Function::Exp:
          return exp(arg);
        case Function::Cos:
          return cos(arg);
        case Function::Sin:
          return sin(arg);
        case Function::Sqrt:
          if (on_negative_real_axis(v)) throw EvalError("sqrt evaluated on its branch cut");
          if constexpr (!std::is_same_v<S, Complex>) {
            if (v == Complex(0.0) && arg.deriv != Complex(0.0)) throw EvalError("sqrt is not differentiable at 0");
          }
          return sqrt(arg);
        case Function::Log:
          if (v == Complex(0.0)) throw EvalError("log(0)");
          if (on_negative_real_axis(v)) throw EvalError("log evaluated on its branch cut");
          return log(arg);
      }
    }
  }
  throw EvalError("corrupt expression tree");
}

}  // namespace detail

/// Immutable parsed expression; cheap to copy (shared tree).
class Expression {
 public:
  Expression() = default;

  static Expression parse(std::string_view source, int ambient_dim, const Bindings& constants = {}) {
    Expression e;
    e.root_ = detail::Parser(source, ambient_dim, constants).run();
    e.dim_ = ambient_dim;
    return e;
  }

  template <typename S>
  S evaluate(std::span<const S> z, Index n) const {
    if (static_cast<int>(z.size()) < dim_ && detail::mentions_variable(*root_))
      throw DimensionMismatch("point has fewer coordinates than the ambient dimension");
    return detail::evaluate<S>(*root_, z, n);
  }

  Complex operator()(const CVec& z, Index n) const {
    return evaluate<Complex>(std::span<const Complex>(z.data(), static_cast<std::size_t>(z.size())), n);
  }

  /// Value of a variable-free expression.
  Complex constant_value(Index n = 1) const { return evaluate<Complex>(std::span<const Complex>{}, n); }

  std::string str() const {
    std::string out;
    detail::print(*root_, out);
    return out;
  }

  int ambient_dim() const { return dim_; }
  const Node& root() const { return *root_; }
  bool empty() const { return !root_; }
  bool uses_variables() const { return detail::mentions_variable(*root_); }
  bool uses_parameter() const { return detail::mentions_parameter(*root_); }

  friend bool operator==(const Expression& a, const Expression& b) {
    if (!a.root_ || !b.root_) return a.root_ == b.root_;
    return detail::same_tree(*a.root_, *b.root_);
  }

 private:
  NodePtr root_;
  int dim_ = 0;
};

/// Parses a numeric literal such as "0.5-0.25*i" or "exp(i*pi/3)".
inline Complex parse_complex(std::string_view text, const Bindings& constants = {}) {
  const Expression e = Expression::parse(text, 0, constants);
  if (e.uses_parameter()) throw FormatError("constant '" + std::string(text) + "' depends on n");
  return e.constant_value();
}

/// Text that parse_complex reads back to the identical value.
inline std::string format_complex(Complex v) {
  const double re = v.real() == 0.0 ? 0.0 : v.real();
  const double im = v.imag() == 0.0 ? 0.0 : v.imag();
  if (im == 0.0) return detail::format_double(re);
  const std::string imag_text = detail::format_double(std::abs(im)) + "*i";
  if (re == 0.0) return im < 0 ? "-" + imag_text : imag_text;
  return detail::format_double(re) + (im < 0 ? "-" : "+") + imag_text;
}

}  // namespace zl
