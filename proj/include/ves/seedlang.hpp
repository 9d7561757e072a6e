#pragma once

// A small expression language for holomorphic seeds h(w) and coefficient
// expressions in (x, y): a precedence-climbing parser, a printer whose output
// reparses to the same tree, and evaluation over complex numbers or over
// forward-mode dual numbers.
//
// Precedence, tightest first:
//
//   unary minus     -a
//   power           a ^ n         n an integer literal, optionally negative
//   multiplicative  a * b, a / b  left associative
//   additive        a + b, a - b  left associative
//
// Unary minus binds tighter than power, so -w^2 is (-w)^2.
// Literals: 2, 0.5, 1e-3, and imaginary literals written with a trailing i
// (1i, 2.5i). A bare `i` is the imaginary unit. Functions: exp, log, sin,
// cos, sqrt; log and sqrt use the principal branch with the cut on the
// negative real axis.

#include <cctype>
#include <charconv>
#include <cmath>
#include <complex>
#include <cstdio>
#include <map>
#include <memory>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "ves/error.hpp"

namespace ves::seed {

using cplx = std::complex<double>;

/// Parameter bindings. Values may be complex.
using ParamMap = std::map<std::string, cplx, std::less<>>;

// ---------------------------------------------------------------------------
// AST

enum class BinaryOp { add, sub, mul, div };
enum class Function { exp, log, sin, cos, sqrt };

inline const char* to_string(Function f) {
  switch (f) {
    case Function::exp: return "exp";
    case Function::log: return "log";
    case Function::sin: return "sin";
    case Function::cos: return "cos";
    case Function::sqrt: return "sqrt";
  }
  return "?";
}

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Literal {
  double value = 0.0;
  bool imaginary = false;
};
struct Variable {
  std::string name;
  std::size_t slot = 0;
};
struct Parameter {
  std::string name;
};
struct Negate {
  NodePtr operand;
};
struct Binary {
  BinaryOp op;
  NodePtr lhs, rhs;
};
struct Power {
  NodePtr base;
  int exponent = 1;
};
struct Call {
  Function fn;
  NodePtr arg;
};

struct Node {
  std::variant<Literal, Variable, Parameter, Negate, Binary, Power, Call> v;
};

inline bool structurally_equal(const Node& a, const Node& b) {
  if (a.v.index() != b.v.index()) return false;
  return std::visit(
      [&b](const auto& x) -> bool {
        using X = std::decay_t<decltype(x)>;
        const auto& y = std::get<X>(b.v);
        if constexpr (std::is_same_v<X, Literal>) {
          return x.value == y.value && x.imaginary == y.imaginary;
        } else if constexpr (std::is_same_v<X, Variable>) {
          return x.name == y.name && x.slot == y.slot;
        } else if constexpr (std::is_same_v<X, Parameter>) {
          return x.name == y.name;
        } else if constexpr (std::is_same_v<X, Negate>) {
          return structurally_equal(*x.operand, *y.operand);
        } else if constexpr (std::is_same_v<X, Binary>) {
          return x.op == y.op && structurally_equal(*x.lhs, *y.lhs) && structurally_equal(*x.rhs, *y.rhs);
        } else if constexpr (std::is_same_v<X, Power>) {
          return x.exponent == y.exponent && structurally_equal(*x.base, *y.base);
        } else {
          return x.fn == y.fn && structurally_equal(*x.arg, *y.arg);
        }
      },
      a.v);
}

/// Parsed expression with the variable and parameter names it was parsed
/// against.
struct Expr {
  NodePtr root;
  std::vector<std::string> variables;
  std::vector<std::string> parameters;
  std::string source;
};

inline bool structurally_equal(const Expr& a, const Expr& b) {
  return a.variables == b.variables && structurally_equal(*a.root, *b.root);
}

// ---------------------------------------------------------------------------
// Printing

namespace detail {

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void print(const Node& n, std::string& out) {
  std::visit(
      [&out](const auto& x) {
        using X = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<X, Literal>) {
          out += format_double(x.value);
          if (x.imaginary) out += 'i';
        } else if constexpr (std::is_same_v<X, Variable>) {
          out += x.name;
        } else if constexpr (std::is_same_v<X, Parameter>) {
          out += x.name;
        } else if constexpr (std::is_same_v<X, Negate>) {
          out += "(-";
          print(*x.operand, out);
          out += ')';
        } else if constexpr (std::is_same_v<X, Binary>) {
          static constexpr char ops[] = {'+', '-', '*', '/'};
          out += '(';
          print(*x.lhs, out);
          out += ' ';
          out += ops[static_cast<int>(x.op)];
          out += ' ';
          print(*x.rhs, out);
          out += ')';
        } else if constexpr (std::is_same_v<X, Power>) {
          out += "((";
          print(*x.base, out);
          out += ")^";
          out += std::to_string(x.exponent);
          out += ')';
        } else {
          out += to_string(x.fn);
          out += '(';
          print(*x.arg, out);
          out += ')';
        }
      },
      n.v);
}

}  // namespace detail

/// Fully parenthesized rendering; parsing it yields a structurally equal tree.
inline std::string print(const Expr& e) {
  std::string out;
  detail::print(*e.root, out);
  return out;
}

// ---------------------------------------------------------------------------
// Parsing

struct ParseOptions {
  std::vector<std::string> variables{"w"};
  std::vector<std::string> parameters;
};

namespace detail {

enum class Tok { number, ident, plus, minus, star, slash, caret, lparen, rparen, comma, end };

struct Token {
  Tok kind = Tok::end;
  std::string_view text;
  std::size_t offset = 0;
  double number = 0.0;
  bool imaginary = false;
  bool integral = false;
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  Token next() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    Token t;
    t.offset = pos_;
    if (pos_ >= src_.size()) return t;
    const char c = src_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      const std::size_t start = pos_;
      while (pos_ < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) ++pos_;
      t.kind = Tok::ident;
      t.text = src_.substr(start, pos_ - start);
      return t;
    }
    ++pos_;
    t.text = src_.substr(t.offset, 1);
    switch (c) {
      case '+': t.kind = Tok::plus; break;
      case '-': t.kind = Tok::minus; break;
      case '*': t.kind = Tok::star; break;
      case '/': t.kind = Tok::slash; break;
      case '^': t.kind = Tok::caret; break;
      case '(': t.kind = Tok::lparen; break;
      case ')': t.kind = Tok::rparen; break;
      case ',': t.kind = Tok::comma; break;
      default: fail(t.offset, std::string("unexpected character '") + c + "'");
    }
    return t;
  }

  [[noreturn]] void fail(std::size_t offset, const std::string& msg) const {
    std::ostringstream os;
    os << "syntax error at byte " << offset << ": " << msg;
    throw Error(ErrorKind::parse, os.str());
  }

 private:
  Token number() {
    Token t;
    t.kind = Tok::number;
    t.offset = pos_;
    const std::size_t start = pos_;
    bool integral = true;
    while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    if (pos_ < src_.size() && src_[pos_] == '.') {
      integral = false;
      ++pos_;
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    }
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t p = pos_ + 1;
      if (p < src_.size() && (src_[p] == '+' || src_[p] == '-')) ++p;
      if (p < src_.size() && std::isdigit(static_cast<unsigned char>(src_[p]))) {
        integral = false;
        pos_ = p;
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
      }
    }
    const std::string_view digits = src_.substr(start, pos_ - start);
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), t.number);
    if (ec != std::errc() || ptr != digits.data() + digits.size()) fail(start, "malformed number");
    if (pos_ < src_.size() && src_[pos_] == 'i' &&
        (pos_ + 1 >= src_.size() || !(std::isalnum(static_cast<unsigned char>(src_[pos_ + 1])) || src_[pos_ + 1] == '_'))) {
      t.imaginary = true;
      integral = false;
      ++pos_;
    } else if (pos_ < src_.size() && (std::isalpha(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) {
      fail(pos_, "unexpected identifier after number (write an explicit '*')");
    }
    t.integral = integral;
    t.text = src_.substr(start, pos_ - start);
    return t;
  }

  std::string_view src_;
  std::size_t pos_ = 0;
};

class Parser {
 public:
  Parser(std::string_view src, const ParseOptions& opts) : lex_(src), opts_(opts) { advance(); }

  NodePtr parse() {
    NodePtr e = additive();
    if (cur_.kind != Tok::end) lex_.fail(cur_.offset, "unexpected '" + std::string(cur_.text) + "'");
    return e;
  }

 private:
  static NodePtr make(auto&& v) { return std::make_shared<const Node>(Node{std::forward<decltype(v)>(v)}); }

  void advance() { cur_ = lex_.next(); }

  void expect(Tok k, const char* what) {
    if (cur_.kind != k) {
      lex_.fail(cur_.offset, std::string("expected ") + what);
    }
    advance();
  }

  NodePtr additive() {
    NodePtr lhs = multiplicative();
    while (cur_.kind == Tok::plus || cur_.kind == Tok::minus) {
      const BinaryOp op = cur_.kind == Tok::plus ? BinaryOp::add : BinaryOp::sub;
      advance();
      lhs = make(Binary{op, lhs, multiplicative()});
    }
    return lhs;
  }

  NodePtr multiplicative() {
    NodePtr lhs = power();
    while (cur_.kind == Tok::star || cur_.kind == Tok::slash) {
      const BinaryOp op = cur_.kind == Tok::star ? BinaryOp::mul : BinaryOp::div;
      advance();
      lhs = make(Binary{op, lhs, power()});
    }
    return lhs;
  }

  NodePtr power() {
    NodePtr base = unary();
    while (cur_.kind == Tok::caret) {
      advance();
      bool negative = false;
      if (cur_.kind == Tok::minus) {
        negative = true;
        advance();
      }
      if (cur_.kind != Tok::number || !cur_.integral) lex_.fail(cur_.offset, "exponent must be an integer literal");
      if (cur_.number > 1024.0) lex_.fail(cur_.offset, "exponent too large");
      const int n = static_cast<int>(cur_.number);
      advance();
      base = make(Power{base, negative ? -n : n});
    }
    return base;
  }

  NodePtr unary() {
    if (cur_.kind == Tok::minus) {
      advance();
      return make(Negate{unary()});
    }
    return primary();
  }

  NodePtr primary() {
    const Token t = cur_;
    switch (t.kind) {
      case Tok::number:
        advance();
        return make(Literal{t.number, t.imaginary});
      case Tok::lparen: {
        advance();
        NodePtr e = additive();
        expect(Tok::rparen, "')'");
        return e;
      }
      case Tok::ident:
        advance();
        return identifier(t);
      case Tok::end:
        lex_.fail(t.offset, "unexpected end of input");
      default:
        lex_.fail(t.offset, "unexpected '" + std::string(t.text) + "'");
    }
  }

  NodePtr identifier(const Token& t) {
    static const std::pair<std::string_view, Function> functions[] = {
        {"exp", Function::exp}, {"log", Function::log}, {"sin", Function::sin},
        {"cos", Function::cos}, {"sqrt", Function::sqrt}};
    for (const auto& [name, fn] : functions) {
      if (t.text != name) continue;
      if (cur_.kind != Tok::lparen) lex_.fail(cur_.offset, std::string(name) + " expects '('");
      advance();
      if (cur_.kind == Tok::rparen) {
        lex_.fail(cur_.offset, "arity mismatch: " + std::string(name) + " takes exactly one argument");
      }
      NodePtr arg = additive();
      if (cur_.kind == Tok::comma) {
        lex_.fail(cur_.offset, "arity mismatch: " + std::string(name) + " takes exactly one argument");
      }
      expect(Tok::rparen, "')'");
      return make(Call{fn, arg});
    }
    for (std::size_t s = 0; s < opts_.variables.size(); ++s) {
      if (t.text == opts_.variables[s]) return make(Variable{opts_.variables[s], s});
    }
    for (const auto& p : opts_.parameters) {
      if (t.text == p) return make(Parameter{p});
    }
    if (t.text == "i") return make(Literal{1.0, true});
    std::ostringstream os;
    os << "unknown identifier '" << t.text << "' at byte " << t.offset;
    throw Error(ErrorKind::parse, os.str());
  }

  Lexer lex_;
  const ParseOptions& opts_;
  Token cur_;
};

}  // namespace detail

inline Expr parse(std::string_view text, const ParseOptions& opts = {}) {
  bool blank = true;
  for (char c : text) blank = blank && std::isspace(static_cast<unsigned char>(c));
  if (blank) throw Error(ErrorKind::parse, "syntax error at byte 0: empty expression");
  detail::Parser p(text, opts);
  Expr e;
  e.root = p.parse();
  e.variables = opts.variables;
  e.parameters = opts.parameters;
  e.source = std::string(text);
  return e;
}

/// Seed h(w) in the single variable w with the given parameter names.
inline Expr parse_seed(std::string_view text, std::vector<std::string> parameters = {}) {
  return parse(text, ParseOptions{{"w"}, std::move(parameters)});
}

// ---------------------------------------------------------------------------
// Dual numbers

/// value + deriv * eps with eps^2 = 0, over the complex numbers.
struct DualComplex {
  cplx value;
  cplx deriv;

  DualComplex() = default;
  DualComplex(cplx v, cplx d = {}) : value(v), deriv(d) {}

  friend DualComplex operator+(const DualComplex& a, const DualComplex& b) {
    return {a.value + b.value, a.deriv + b.deriv};
  }
  friend DualComplex operator-(const DualComplex& a, const DualComplex& b) {
    return {a.value - b.value, a.deriv - b.deriv};
  }
  friend DualComplex operator-(const DualComplex& a) { return {-a.value, -a.deriv}; }
  friend DualComplex operator*(const DualComplex& a, const DualComplex& b) {
    return {a.value * b.value, a.deriv * b.value + a.value * b.deriv};
  }
  friend DualComplex operator/(const DualComplex& a, const DualComplex& b) {
    return {a.value / b.value, (a.deriv * b.value - a.value * b.deriv) / (b.value * b.value)};
  }
};

inline cplx value_of(const cplx& v) { return v; }
inline cplx value_of(const DualComplex& v) { return v.value; }

inline DualComplex exp(const DualComplex& a) {
  const cplx e = std::exp(a.value);
  return {e, a.deriv * e};
}
inline DualComplex log(const DualComplex& a) { return {std::log(a.value), a.deriv / a.value}; }
inline DualComplex sin(const DualComplex& a) { return {std::sin(a.value), a.deriv * std::cos(a.value)}; }
inline DualComplex cos(const DualComplex& a) { return {std::cos(a.value), -a.deriv * std::sin(a.value)}; }
inline DualComplex sqrt(const DualComplex& a) {
  const cplx s = std::sqrt(a.value);
  return {s, a.deriv / (2.0 * s)};
}

namespace detail {

/// Binary exponentiation, shared by both number types so that the value part
/// of a dual evaluation matches the plain evaluation bit for bit.
inline cplx ipow(cplx base, int n) {
  unsigned m = static_cast<unsigned>(n < 0 ? -n : n);
  cplx result(1.0, 0.0);
  while (m) {
    if (m & 1u) result *= base;
    base *= base;
    m >>= 1u;
  }
  return n < 0 ? cplx(1.0, 0.0) / result : result;
}

inline cplx ipow_value(const cplx& b, int n) { return ipow(b, n); }

inline DualComplex ipow_value(const DualComplex& b, int n) {
  if (n == 0) return {cplx(1.0, 0.0), cplx(0.0, 0.0)};
  return {ipow(b.value, n), static_cast<double>(n) * ipow(b.value, n - 1) * b.deriv};
}

inline std::string describe_bindings(const std::vector<std::string>& names, std::span<const cplx> values) {
  std::ostringstream os;
  for (std::size_t k = 0; k < names.size() && k < values.size(); ++k) {
    if (k) os << ", ";
    os << names[k] << " = " << values[k].real() << (values[k].imag() < 0 ? "-" : "+")
       << std::abs(values[k].imag()) << "i";
  }
  return os.str();
}

template <class T>
class Evaluator {
 public:
  Evaluator(const Expr& e, std::span<const T> vars, const ParamMap& params)
      : e_(e), vars_(vars), params_(params) {}

  T eval(const Node& n) const {
    return std::visit([this](const auto& x) { return this->visit(x); }, n.v);
  }

 private:
  [[noreturn]] void singular(const char* what) const {
    std::vector<cplx> vals;
    for (const auto& v : vars_) vals.push_back(value_of(v));
    throw Error(ErrorKind::singular,
                std::string("singular evaluation: ") + what + " at " + describe_bindings(e_.variables, vals));
  }

  T visit(const Literal& l) const { return T(l.imaginary ? cplx(0.0, l.value) : cplx(l.value, 0.0)); }
  T visit(const Variable& v) const { return vars_[v.slot]; }
  T visit(const Parameter& p) const {
    auto it = params_.find(p.name);
    if (it == params_.end()) throw Error(ErrorKind::usage, "parameter '" + p.name + "' is not bound");
    return T(it->second);
  }
  T visit(const Negate& n) const { return -eval(*n.operand); }
  T visit(const Binary& b) const {
    const T l = eval(*b.lhs), r = eval(*b.rhs);
    switch (b.op) {
      case BinaryOp::add: return l + r;
      case BinaryOp::sub: return l - r;
      case BinaryOp::mul: return l * r;
      case BinaryOp::div:
        if (value_of(r) == cplx(0.0, 0.0)) singular("division by zero");
        return l / r;
    }
    return l;
  }
  T visit(const Power& p) const {
    const T b = eval(*p.base);
    if (p.exponent < 0 && value_of(b) == cplx(0.0, 0.0)) singular("negative power of zero");
    return ipow_value(b, p.exponent);
  }
  T visit(const Call& c) const {
    const T a = eval(*c.arg);
    using std::cos, std::exp, std::log, std::sin, std::sqrt;
    switch (c.fn) {
      case Function::exp: return exp(a);
      case Function::sin: return sin(a);
      case Function::cos: return cos(a);
      case Function::log:
        if (value_of(a) == cplx(0.0, 0.0)) singular("log at 0");
        return log(a);
      case Function::sqrt:
        if (value_of(a) == cplx(0.0, 0.0)) singular("sqrt at 0");
        return sqrt(a);
    }
    return a;
  }

  const Expr& e_;
  std::span<const T> vars_;
  const ParamMap& params_;
};

inline void require_finite(cplx v, const Expr& e, std::span<const cplx> vars) {
  if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) {
    throw Error(ErrorKind::singular,
                "singular evaluation: non-finite result at " + describe_bindings(e.variables, vars));
  }
}

}  // namespace detail

/// Evaluate with one complex value per declared variable.
inline cplx evaluate(const Expr& e, std::span<const cplx> vars, const ParamMap& params = {}) {
  if (vars.size() != e.variables.size()) throw Error(ErrorKind::usage, "wrong number of variable values");
  const cplx v = detail::Evaluator<cplx>(e, vars, params).eval(*e.root);
  detail::require_finite(v, e, vars);
  return v;
}

/// Value and derivative with respect to variable `wrt`.
inline DualComplex evaluate_dual(const Expr& e, std::span<const cplx> vars, std::size_t wrt,
                                 const ParamMap& params = {}) {
  if (vars.size() != e.variables.size()) throw Error(ErrorKind::usage, "wrong number of variable values");
  std::vector<DualComplex> dv;
  dv.reserve(vars.size());
  for (std::size_t k = 0; k < vars.size(); ++k) dv.emplace_back(vars[k], k == wrt ? cplx(1.0, 0.0) : cplx(0.0, 0.0));
  const DualComplex r = detail::Evaluator<DualComplex>(e, dv, params).eval(*e.root);
  detail::require_finite(r.value, e, vars);
  detail::require_finite(r.deriv, e, vars);
  return r;
}

inline cplx eval_seed(const Expr& e, cplx w, const ParamMap& params = {}) {
  return evaluate(e, std::span<const cplx>(&w, 1), params);
}

inline DualComplex eval_seed_dual(const Expr& e, cplx w, const ParamMap& params = {}) {
  return evaluate_dual(e, std::span<const cplx>(&w, 1), 0, params);
}

/// Parameters used by the expression that have no binding.
inline std::vector<std::string> unbound_parameters(const Expr& e, const ParamMap& params) {
  std::vector<std::string> out;
  for (const auto& p : e.parameters) {
    if (!params.count(p)) out.push_back(p);
  }
  return out;
}

/// Parse "k=v,k2=v2" where each v is a constant expression (e.g. 0.1, 1+2i).
inline ParamMap parse_params(std::string_view text) {
  ParamMap out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t comma = text.find(',', pos);
    if (comma == std::string_view::npos) comma = text.size();
    const std::string_view item = text.substr(pos, comma - pos);
    pos = comma + 1;
    if (item.find_first_not_of(" \t") == std::string_view::npos) continue;
    const std::size_t eq = item.find('=');
    if (eq == std::string_view::npos) throw Error(ErrorKind::usage, "parameter '" + std::string(item) + "' lacks '='");
    std::string key(item.substr(0, eq));
    key.erase(0, key.find_first_not_of(" \t"));
    key.erase(key.find_last_not_of(" \t") + 1);
    const Expr v = parse(item.substr(eq + 1), ParseOptions{{}, {}});
    out[key] = evaluate(v, {}, {});
  }
  return out;
}

}  // namespace ves::seed
