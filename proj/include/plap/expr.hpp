#pragma once

// Scalar infix expressions for user-supplied nonlinearities.
//
// Grammar (lowest to highest precedence):
//   sum     := product (('+' | '-') product)*
//   product := unary (('*' | '/') unary)*
//   unary   := '-' unary | power
//   power   := primary ('^' unary)?          (right-associative)
//   primary := number | constant | variable | call | '(' sum ')'
//
// Exponentiation binds tighter than unary minus, so "-u^2" is -(u^2) and
// "2^-1" is 2^(-1).

#include <array>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace plap {

enum class Var : std::uint8_t { x = 0, y = 1, u = 2, t = 3 };

inline constexpr std::size_t kVarCount = 4;

inline const char* var_name(Var v) {
  static constexpr const char* names[] = {"x", "y", "u", "t"};
  return names[static_cast<std::size_t>(v)];
}

class VarSet {
 public:
  constexpr VarSet() = default;
  constexpr VarSet(std::initializer_list<Var> vars) {
    for (Var v : vars) insert(v);
  }
  constexpr void insert(Var v) { bits_ |= bit(v); }
  constexpr bool contains(Var v) const { return (bits_ & bit(v)) != 0; }
  constexpr bool empty() const { return bits_ == 0; }
  constexpr bool subset_of(VarSet other) const { return (bits_ & ~other.bits_) == 0; }
  constexpr bool operator==(const VarSet&) const = default;

  std::string to_string() const {
    std::string out = "{";
    for (std::size_t i = 0; i < kVarCount; ++i) {
      auto v = static_cast<Var>(i);
      if (!contains(v)) continue;
      if (out.size() > 1) out += ", ";
      out += var_name(v);
    }
    return out + "}";
  }

 private:
  static constexpr std::uint8_t bit(Var v) {
    return static_cast<std::uint8_t>(1u << static_cast<unsigned>(v));
  }
  std::uint8_t bits_ = 0;
};

// Variable slots for the spatial, nonlinearity and growth-function roles.
inline constexpr VarSet kSpatialVars{Var::x, Var::y};
inline constexpr VarSet kNonlinearityVars{Var::x, Var::y, Var::u};
inline constexpr VarSet kGrowthVars{Var::t};

class Bindings {
 public:
  Bindings() = default;
  Bindings& set(Var v, double value) {
    values_[static_cast<std::size_t>(v)] = value;
    bound_.insert(v);
    return *this;
  }
  double get(Var v) const { return values_[static_cast<std::size_t>(v)]; }
  VarSet bound() const { return bound_; }

 private:
  std::array<double, kVarCount> values_{};
  VarSet bound_;
};

class ParseError : public std::runtime_error {
 public:
  enum class Kind { syntax, unknown_identifier, disallowed_variable, arity };

  ParseError(Kind kind, std::size_t position, const std::string& message)
      : std::runtime_error(message + " (at position " + std::to_string(position) + ")"),
        kind_(kind),
        position_(position) {}

  Kind kind() const { return kind_; }
  std::size_t position() const { return position_; }

 private:
  Kind kind_;
  std::size_t position_;
};

// Raised when an operation leaves its real domain (ln of non-positive,
// sqrt of negative, division by zero, non-integer power of a negative base,
// overflow to a non-finite value).
class DomainError : public std::runtime_error {
 public:
  DomainError(std::string subexpression, double argument, const std::string& what)
      : std::runtime_error(what + " in '" + subexpression + "' at argument " + format(argument)),
        subexpression_(std::move(subexpression)),
        argument_(argument) {}

  const std::string& subexpression() const { return subexpression_; }
  double argument() const { return argument_; }

 private:
  static std::string format(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
  }
  std::string subexpression_;
  double argument_;
};

class Expression;

namespace detail {

enum class Func : std::uint8_t { ln, ln1p, exp, sin, cos, tanh, abs, sqrt, atan, pow };

struct FuncInfo {
  const char* name;
  Func func;
  int arity;
};

inline constexpr FuncInfo kFunctions[] = {
    {"ln", Func::ln, 1},     {"exp", Func::exp, 1},   {"sin", Func::sin, 1},
    {"cos", Func::cos, 1},   {"tanh", Func::tanh, 1}, {"abs", Func::abs, 1},
    {"sqrt", Func::sqrt, 1}, {"atan", Func::atan, 1}, {"pow", Func::pow, 2},
};

struct Node {
  enum class Kind : std::uint8_t { number, variable, negate, add, sub, mul, div, power, call };

  Kind kind = Kind::number;
  double number = 0.0;
  Var var = Var::x;
  Func func = Func::ln;
  std::vector<std::unique_ptr<Node>> args;
};

inline std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  std::string s = buf;
  // Keep literals re-parseable: "inf"/"nan" never arise from the grammar.
  return s;
}

inline std::string print_node(const Node& n) {
  using K = Node::Kind;
  switch (n.kind) {
    case K::number: {
      std::string s = format_number(n.number);
      return n.number < 0 ? "(" + s + ")" : s;
    }
    case K::variable:
      return var_name(n.var);
    case K::negate:
      return "(-" + print_node(*n.args[0]) + ")";
    case K::add:
      return "(" + print_node(*n.args[0]) + " + " + print_node(*n.args[1]) + ")";
    case K::sub:
      return "(" + print_node(*n.args[0]) + " - " + print_node(*n.args[1]) + ")";
    case K::mul:
      return "(" + print_node(*n.args[0]) + " * " + print_node(*n.args[1]) + ")";
    case K::div:
      return "(" + print_node(*n.args[0]) + " / " + print_node(*n.args[1]) + ")";
    case K::power:
      return "(" + print_node(*n.args[0]) + " ^ " + print_node(*n.args[1]) + ")";
    case K::call: {
      if (n.func == Func::ln1p) return "ln((1 + " + print_node(*n.args[0]) + "))";
      std::string name;
      for (const auto& info : kFunctions)
        if (info.func == n.func) name = info.name;
      std::string out = name + "(";
      for (std::size_t i = 0; i < n.args.size(); ++i) {
        if (i) out += ", ";
        out += print_node(*n.args[i]);
      }
      return out + ")";
    }
  }
  return {};
}

inline double checked_pow(const Node& n, double base, double exponent) {
  if (base < 0.0 && exponent != std::floor(exponent))
    throw DomainError(print_node(n), base, "non-integer power of a negative base");
  if (base == 0.0 && exponent < 0.0)
    throw DomainError(print_node(n), base, "negative power of zero");
  return std::pow(base, exponent);
}

inline double eval_node(const Node& n, const Bindings& b) {
  using K = Node::Kind;
  switch (n.kind) {
    case K::number:
      return n.number;
    case K::variable:
      return b.get(n.var);
    case K::negate:
      return -eval_node(*n.args[0], b);
    case K::add:
      return eval_node(*n.args[0], b) + eval_node(*n.args[1], b);
    case K::sub:
      return eval_node(*n.args[0], b) - eval_node(*n.args[1], b);
    case K::mul:
      return eval_node(*n.args[0], b) * eval_node(*n.args[1], b);
    case K::div: {
      double num = eval_node(*n.args[0], b);
      double den = eval_node(*n.args[1], b);
      if (den == 0.0) throw DomainError(print_node(n), den, "division by zero");
      return num / den;
    }
    case K::power:
      return checked_pow(n, eval_node(*n.args[0], b), eval_node(*n.args[1], b));
    case K::call: {
      double a = eval_node(*n.args[0], b);
      switch (n.func) {
        case Func::ln:
          if (a <= 0.0) throw DomainError(print_node(n), a, "logarithm of non-positive value");
          return std::log(a);
        case Func::ln1p:
          if (a <= -1.0) throw DomainError(print_node(n), 1.0 + a, "logarithm of non-positive value");
          return std::log1p(a);
        case Func::exp:
          return std::exp(a);
        case Func::sin:
          return std::sin(a);
        case Func::cos:
          return std::cos(a);
        case Func::tanh:
          return std::tanh(a);
        case Func::abs:
          return std::abs(a);
        case Func::sqrt:
          if (a < 0.0) throw DomainError(print_node(n), a, "square root of negative value");
          return std::sqrt(a);
        case Func::atan:
          return std::atan(a);
        case Func::pow:
          return checked_pow(n, a, eval_node(*n.args[1], b));
      }
    }
  }
  return 0.0;
}

class Parser {
 public:
  Parser(std::string_view src, VarSet allowed) : src_(src), allowed_(allowed) {}

  std::unique_ptr<Node> parse_all(VarSet& used) {
    skip_ws();
    if (pos_ >= src_.size()) fail(ParseError::Kind::syntax, "empty expression");
    auto root = parse_sum();
    skip_ws();
    if (pos_ != src_.size()) fail(ParseError::Kind::syntax, std::string("unexpected '") + src_[pos_] + "'");
    used = used_;
    return root;
  }

 private:
  [[noreturn]] void fail(ParseError::Kind kind, const std::string& msg) const {
    throw ParseError(kind, pos_, msg);
  }

  void skip_ws() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
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
    if (!accept(c)) fail(ParseError::Kind::syntax, std::string("expected '") + c + "'");
  }

  static std::unique_ptr<Node> make(Node::Kind kind, std::unique_ptr<Node> a,
                                    std::unique_ptr<Node> b = nullptr) {
    auto n = std::make_unique<Node>();
    n->kind = kind;
    n->args.push_back(std::move(a));
    if (b) n->args.push_back(std::move(b));
    return n;
  }

  std::unique_ptr<Node> parse_sum() {
    auto lhs = parse_product();
    for (;;) {
      if (accept('+'))
        lhs = make(Node::Kind::add, std::move(lhs), parse_product());
      else if (accept('-'))
        lhs = make(Node::Kind::sub, std::move(lhs), parse_product());
      else
        return lhs;
    }
  }

  std::unique_ptr<Node> parse_product() {
    auto lhs = parse_unary();
    for (;;) {
      if (accept('*'))
        lhs = make(Node::Kind::mul, std::move(lhs), parse_unary());
      else if (accept('/'))
        lhs = make(Node::Kind::div, std::move(lhs), parse_unary());
      else
        return lhs;
    }
  }

  std::unique_ptr<Node> parse_unary() {
    if (accept('-')) return make(Node::Kind::negate, parse_unary());
    return parse_power();
  }

  std::unique_ptr<Node> parse_power() {
    auto base = parse_primary();
    if (accept('^')) return make(Node::Kind::power, std::move(base), parse_unary());
    return base;
  }

  std::unique_ptr<Node> parse_primary() {
    skip_ws();
    if (pos_ >= src_.size()) fail(ParseError::Kind::syntax, "unexpected end of expression");
    char c = src_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_identifier();
    if (accept('(')) {
      auto inner = parse_sum();
      expect(')');
      return inner;
    }
    fail(ParseError::Kind::syntax, std::string("unexpected '") + c + "'");
  }

  std::unique_ptr<Node> parse_number() {
    std::size_t start = pos_;
    auto digits = [&] {
      std::size_t n = 0;
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_, ++n;
      return n;
    };
    std::size_t mantissa = digits();
    if (pos_ < src_.size() && src_[pos_] == '.') {
      ++pos_;
      mantissa += digits();
    }
    if (mantissa == 0) {
      pos_ = start;
      fail(ParseError::Kind::syntax, "malformed number");
    }
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t save = pos_++;
      if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) ++pos_;
      if (digits() == 0) {
        pos_ = save;
        fail(ParseError::Kind::syntax, "malformed exponent");
      }
    }
    auto n = std::make_unique<Node>();
    n->kind = Node::Kind::number;
    n->number = std::stod(std::string(src_.substr(start, pos_ - start)));
    return n;
  }

  std::unique_ptr<Node> parse_identifier() {
    std::size_t start = pos_;
    while (pos_ < src_.size() &&
           (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
      ++pos_;
    std::string name(src_.substr(start, pos_ - start));

    skip_ws();
    bool is_call = pos_ < src_.size() && src_[pos_] == '(';
    if (is_call) {
      for (const auto& info : kFunctions) {
        if (name != info.name) continue;
        ++pos_;
        auto n = std::make_unique<Node>();
        n->kind = Node::Kind::call;
        n->func = info.func;
        if (!accept(')')) {
          do n->args.push_back(parse_sum());
          while (accept(','));
          expect(')');
        }
        if (static_cast<int>(n->args.size()) != info.arity) {
          pos_ = start;
          fail(ParseError::Kind::arity, name + " expects " + std::to_string(info.arity) +
                                            " argument(s), got " + std::to_string(n->args.size()));
        }
        return rewrite_log1p(std::move(n));
      }
      pos_ = start;
      fail(ParseError::Kind::unknown_identifier, "unknown function '" + name + "'");
    }

    if (name == "pi") {
      auto n = std::make_unique<Node>();
      n->number = std::numbers::pi;
      return n;
    }
    for (std::size_t i = 0; i < kVarCount; ++i) {
      auto v = static_cast<Var>(i);
      if (name != var_name(v)) continue;
      if (!allowed_.contains(v)) {
        pos_ = start;
        fail(ParseError::Kind::disallowed_variable,
             "variable '" + name + "' not allowed here; allowed " + allowed_.to_string());
      }
      used_.insert(v);
      auto n = std::make_unique<Node>();
      n->kind = Node::Kind::variable;
      n->var = v;
      return n;
    }
    pos_ = start;
    fail(ParseError::Kind::unknown_identifier, "unknown identifier '" + name + "'");
  }

  // ln(1 + w) and ln(w + 1) evaluate as log1p(w) so that small-u limits
  // such as ln(1+u^2)/u^2 stay accurate.
  static std::unique_ptr<Node> rewrite_log1p(std::unique_ptr<Node> call) {
    if (call->func != Func::ln) return call;
    Node& arg = *call->args[0];
    if (arg.kind != Node::Kind::add) return call;
    auto is_one = [](const Node& n) { return n.kind == Node::Kind::number && n.number == 1.0; };
    std::unique_ptr<Node> rest;
    if (is_one(*arg.args[0]))
      rest = std::move(arg.args[1]);
    else if (is_one(*arg.args[1]))
      rest = std::move(arg.args[0]);
    else
      return call;
    call->func = Func::ln1p;
    call->args.clear();
    call->args.push_back(std::move(rest));
    return call;
  }

  std::string_view src_;
  VarSet allowed_;
  VarSet used_;
  std::size_t pos_ = 0;
};

}  // namespace detail

// Immutable parsed expression. Copies share the tree.
class Expression {
 public:
  Expression() = default;

  const std::string& source() const { return source_; }
  VarSet free_vars() const { return free_; }
  VarSet allowed_vars() const { return allowed_; }
  bool valid() const { return root_ != nullptr; }

  // Fully parenthesized canonical form; parses back to an equivalent tree.
  std::string print() const { return root_ ? detail::print_node(*root_) : std::string{}; }

  double operator()(const Bindings& b) const {
    if (!root_) throw std::logic_error("evaluating an empty expression");
    if (!free_.subset_of(b.bound()))
      throw std::invalid_argument("unbound variable in '" + source_ + "': needs " + free_.to_string());
    double v = detail::eval_node(*root_, b);
    if (!std::isfinite(v)) throw DomainError(source_, v, "non-finite result");
    return v;
  }

  friend Expression parse(std::string_view source, VarSet allowed_vars);

 private:
  std::shared_ptr<const detail::Node> root_;
  std::string source_;
  VarSet free_;
  VarSet allowed_;
};

inline Expression parse(std::string_view source, VarSet allowed_vars) {
  Expression e;
  detail::Parser parser(source, allowed_vars);
  VarSet used;
  e.root_ = parser.parse_all(used);
  e.source_ = std::string(source);
  e.free_ = used;
  e.allowed_ = allowed_vars;
  return e;
}

inline double evaluate(const Expression& e, const Bindings& b) { return e(b); }

inline double evaluate(const Expression& e, const std::map<std::string, double>& bindings) {
  Bindings b;
  for (const auto& [name, value] : bindings) {
    bool found = false;
    for (std::size_t i = 0; i < kVarCount; ++i) {
      if (name == var_name(static_cast<Var>(i))) {
        b.set(static_cast<Var>(i), value);
        found = true;
      }
    }
    if (!found) throw std::invalid_argument("unknown variable '" + name + "'");
  }
  return e(b);
}

}  // namespace plap
