#include "mcf/expr.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>
#include <limits>
#include <sstream>

namespace mcf::expr {

namespace {

// ---- scalar policies ---------------------------------------------------------

inline double fn_value(Op op, double x) {
  switch (op) {
    case Op::sin: return std::sin(x);
    case Op::cos: return std::cos(x);
    case Op::exp: return std::exp(x);
    case Op::tanh: return std::tanh(x);
    default: return x;
  }
}

// value, first and second derivative of the unary function
inline std::array<double, 3> fn_derivs(Op op, double x) {
  switch (op) {
    case Op::sin: return {std::sin(x), std::cos(x), -std::sin(x)};
    case Op::cos: return {std::cos(x), -std::sin(x), -std::cos(x)};
    case Op::exp: {
      double e = std::exp(x);
      return {e, e, e};
    }
    case Op::tanh: {
      double t = std::tanh(x);
      double s = 1.0 - t * t;
      return {t, s, -2.0 * t * s};
    }
    default: return {x, 1.0, 0.0};
  }
}

inline std::array<double, 3> pow_derivs(double x, int k) {
  if (k == 0) return {1.0, 0.0, 0.0};
  if (x == 0.0 && k < 0) throw EvalError("division by zero in negative power");
  double v = std::pow(x, k);
  double d1 = k == 1 ? 1.0 : k * std::pow(x, k - 1);
  double d2 = (k == 1) ? 0.0 : (k == 2 ? 2.0 : double(k) * (k - 1) * std::pow(x, k - 2));
  return {v, d1, d2};
}

struct DoubleOps {
  using T = double;
  static T var(std::span<const double> x, int i) { return x[i]; }
  static T cst(double c) { return c; }
  static T add(const T& a, const T& b) { return a + b; }
  static T sub(const T& a, const T& b) { return a - b; }
  static T mul(const T& a, const T& b) { return a * b; }
  static T neg(const T& a) { return -a; }
  static double val(const T& a) { return a; }
  static T chain(const T&, const std::array<double, 3>& d) { return d[0]; }
  static T fn(Op op, const T& a) { return fn_value(op, a); }
};

struct Jet1Ops {
  using T = Jet1;
  static T var(std::span<const double> x, int i) {
    T r;
    r.v = x[i];
    r.d[i] = 1.0;
    return r;
  }
  static T cst(double c) {
    T r;
    r.v = c;
    return r;
  }
  static T add(const T& a, const T& b) {
    T r;
    r.v = a.v + b.v;
    for (int i = 0; i < kMaxVars; ++i) r.d[i] = a.d[i] + b.d[i];
    return r;
  }
  static T sub(const T& a, const T& b) {
    T r;
    r.v = a.v - b.v;
    for (int i = 0; i < kMaxVars; ++i) r.d[i] = a.d[i] - b.d[i];
    return r;
  }
  static T mul(const T& a, const T& b) {
    T r;
    r.v = a.v * b.v;
    for (int i = 0; i < kMaxVars; ++i) r.d[i] = a.d[i] * b.v + a.v * b.d[i];
    return r;
  }
  static T neg(const T& a) {
    T r;
    r.v = -a.v;
    for (int i = 0; i < kMaxVars; ++i) r.d[i] = -a.d[i];
    return r;
  }
  static double val(const T& a) { return a.v; }
  static T chain(const T& a, const std::array<double, 3>& d) {
    T r;
    r.v = d[0];
    for (int i = 0; i < kMaxVars; ++i) r.d[i] = d[1] * a.d[i];
    return r;
  }
  static T fn(Op op, const T& a) { return chain(a, fn_derivs(op, a.v)); }
};

struct Jet2Ops {
  using T = Jet2;
  static constexpr int H = kMaxVars * (kMaxVars + 1) / 2;
  static T var(std::span<const double> x, int i) {
    T r;
    r.v = x[i];
    r.g[i] = 1.0;
    return r;
  }
  static T cst(double c) {
    T r;
    r.v = c;
    return r;
  }
  static T add(const T& a, const T& b) {
    T r;
    r.v = a.v + b.v;
    for (int i = 0; i < kMaxVars; ++i) r.g[i] = a.g[i] + b.g[i];
    for (int i = 0; i < H; ++i) r.h[i] = a.h[i] + b.h[i];
    return r;
  }
  static T sub(const T& a, const T& b) {
    T r;
    r.v = a.v - b.v;
    for (int i = 0; i < kMaxVars; ++i) r.g[i] = a.g[i] - b.g[i];
    for (int i = 0; i < H; ++i) r.h[i] = a.h[i] - b.h[i];
    return r;
  }
  static T mul(const T& a, const T& b) {
    T r;
    r.v = a.v * b.v;
    for (int i = 0; i < kMaxVars; ++i) r.g[i] = a.g[i] * b.v + a.v * b.g[i];
    for (int i = 0; i < kMaxVars; ++i)
      for (int j = i; j < kMaxVars; ++j) {
        int p = packed(i, j);
        r.h[p] = a.h[p] * b.v + a.g[i] * b.g[j] + a.g[j] * b.g[i] + a.v * b.h[p];
      }
    return r;
  }
  static T neg(const T& a) {
    T r;
    r.v = -a.v;
    for (int i = 0; i < kMaxVars; ++i) r.g[i] = -a.g[i];
    for (int i = 0; i < H; ++i) r.h[i] = -a.h[i];
    return r;
  }
  static double val(const T& a) { return a.v; }
  static T chain(const T& a, const std::array<double, 3>& d) {
    T r;
    r.v = d[0];
    for (int i = 0; i < kMaxVars; ++i) r.g[i] = d[1] * a.g[i];
    for (int i = 0; i < kMaxVars; ++i)
      for (int j = i; j < kMaxVars; ++j) {
        int p = packed(i, j);
        r.h[p] = d[2] * a.g[i] * a.g[j] + d[1] * a.h[p];
      }
    return r;
  }
  static T fn(Op op, const T& a) { return chain(a, fn_derivs(op, a.v)); }
};

template <class P>
typename P::T run(const std::vector<Node>& nodes, std::span<const double> x) {
  using T = typename P::T;
  thread_local std::vector<T> slots;
  slots.resize(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const Node& n = nodes[i];
    switch (n.op) {
      case Op::constant: slots[i] = P::cst(n.value); break;
      case Op::variable: slots[i] = P::var(x, n.index); break;
      case Op::add: slots[i] = P::add(slots[n.a], slots[n.b]); break;
      case Op::sub: slots[i] = P::sub(slots[n.a], slots[n.b]); break;
      case Op::mul: slots[i] = P::mul(slots[n.a], slots[n.b]); break;
      case Op::div: {
        double d = P::val(slots[n.b]);
        if (d == 0.0) throw EvalError("division by zero");
        T inv = P::chain(slots[n.b], {1.0 / d, -1.0 / (d * d), 2.0 / (d * d * d)});
        slots[i] = P::mul(slots[n.a], inv);
        break;
      }
      case Op::neg: slots[i] = P::neg(slots[n.a]); break;
      case Op::pow: slots[i] = P::chain(slots[n.a], pow_derivs(P::val(slots[n.a]), n.index)); break;
      default: slots[i] = P::fn(n.op, slots[n.a]); break;
    }
  }
  T out = slots.back();
  if (!std::isfinite(P::val(out))) throw EvalError("non-finite value");
  return out;
}

// ---- parser ------------------------------------------------------------------

class Parser {
 public:
  Parser(std::string_view s, int dim, const std::vector<std::string>& params)
      : s_(s), dim_(dim), params_(params) {}

  std::vector<Node> parse() {
    skip();
    if (pos_ >= s_.size()) throw ParseError("empty expression", pos_ + 1);
    int root = expr();
    skip();
    if (pos_ < s_.size()) throw ParseError(std::string("unexpected '") + s_[pos_] + "'", pos_ + 1);
    (void)root;
    return std::move(out_);
  }

 private:
  int push(Node n) {
    out_.push_back(n);
    return int(out_.size()) - 1;
  }
  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool accept(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  void expect(char c) {
    if (!accept(c)) {
      std::string got = pos_ < s_.size() ? std::string(1, s_[pos_]) : std::string("end of input");
      throw ParseError(std::string("expected '") + c + "' but found " + got, pos_ + 1);
    }
  }

  int expr() {
    int lhs = term();
    for (;;) {
      if (accept('+')) {
        int rhs = term();
        lhs = push({Op::add, 0, 0, lhs, rhs});
      } else if (accept('-')) {
        int rhs = term();
        lhs = push({Op::sub, 0, 0, lhs, rhs});
      } else {
        return lhs;
      }
    }
  }
  int term() {
    int lhs = factor();
    for (;;) {
      if (accept('*')) {
        int rhs = factor();
        lhs = push({Op::mul, 0, 0, lhs, rhs});
      } else if (accept('/')) {
        int rhs = factor();
        lhs = push({Op::div, 0, 0, lhs, rhs});
      } else {
        return lhs;
      }
    }
  }
  int factor() {
    if (accept('-')) return push({Op::neg, 0, 0, factor(), -1});
    if (accept('+')) return factor();
    return power();
  }
  int power() {
    int base = primary();
    if (accept('^')) {
      bool paren = accept('(');
      int sign = 1;
      if (accept('-')) sign = -1;
      else accept('+');
      skip();
      std::size_t start = pos_;
      double v = number_literal();
      if (v != std::floor(v) || std::abs(v) > 64) throw ParseError("exponent must be an integer literal", start + 1);
      if (paren) expect(')');
      return push({Op::pow, 0, sign * int(v), base, -1});
    }
    return base;
  }
  double number_literal() {
    skip();
    std::size_t start = pos_;
    while (pos_ < s_.size() && (std::isdigit(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '.')) ++pos_;
    if (pos_ < s_.size() && (s_[pos_] == 'e' || s_[pos_] == 'E')) {
      std::size_t save = pos_;
      ++pos_;
      if (pos_ < s_.size() && (s_[pos_] == '+' || s_[pos_] == '-')) ++pos_;
      if (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
        while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      } else {
        pos_ = save;
      }
    }
    if (start == pos_) throw ParseError("expected a number", start + 1);
    std::string tok(s_.substr(start, pos_ - start));
    char* end = nullptr;
    double v = std::strtod(tok.c_str(), &end);
    if (end != tok.c_str() + tok.size()) throw ParseError("malformed number '" + tok + "'", start + 1);
    return v;
  }
  int primary() {
    skip();
    if (pos_ >= s_.size()) throw ParseError("unexpected end of input", pos_ + 1);
    char c = s_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return push({Op::constant, number_literal(), 0, -1, -1});
    if (c == '(') {
      ++pos_;
      int e = expr();
      expect(')');
      return e;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = pos_;
      while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
      std::string id(s_.substr(start, pos_ - start));
      Op fn = Op::constant;
      if (id == "sin") fn = Op::sin;
      else if (id == "cos") fn = Op::cos;
      else if (id == "exp") fn = Op::exp;
      else if (id == "tanh") fn = Op::tanh;
      if (fn != Op::constant) {
        if (!accept('(')) throw ParseError("function '" + id + "' requires an argument list", pos_ + 1);
        std::vector<int> args;
        if (!accept(')')) {
          args.push_back(expr());
          while (accept(',')) args.push_back(expr());
          expect(')');
        }
        if (args.size() != 1)
          throw ParseError("function '" + id + "' expects 1 argument, got " + std::to_string(args.size()), start + 1);
        return push({fn, 0, 0, args[0], -1});
      }
      if (id == "pi") return push({Op::constant, M_PI, 0, -1, -1});
      if (id.size() >= 2 && id[0] == 'x') {
        bool digits = true;
        for (std::size_t k = 1; k < id.size(); ++k) digits = digits && std::isdigit(static_cast<unsigned char>(id[k]));
        if (digits) {
          int k = std::stoi(id.substr(1));
          if (k < 1 || k > dim_)
            throw ParseError("variable '" + id + "' out of range for dimension " + std::to_string(dim_), start + 1);
          return push({Op::variable, 0, k - 1, -1, -1});
        }
      }
      for (std::size_t p = 0; p < params_.size(); ++p)
        if (params_[p] == id) return push({Op::variable, 0, dim_ + int(p), -1, -1});
      throw ParseError("unknown identifier '" + id + "'", start + 1);
    }
    throw ParseError(std::string("unexpected '") + c + "'", pos_ + 1);
  }

  std::string_view s_;
  std::size_t pos_ = 0;
  int dim_;
  const std::vector<std::string>& params_;
  std::vector<Node> out_;
};

void append(std::vector<Node>& out, const std::vector<Node>& src, int& root) {
  int off = int(out.size());
  for (Node n : src) {
    if (n.a >= 0) n.a += off;
    if (n.b >= 0) n.b += off;
    out.push_back(n);
  }
  root = int(out.size()) - 1;
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  std::string s = buf;
  if (s.find_first_of(".e") == std::string::npos && s.find("inf") == std::string::npos) s += ".0";
  return s;
}

}  // namespace

Expression::Expression() : Expression(constant(0.0)) {}

Expression::Expression(std::shared_ptr<const std::vector<Node>> nodes, int dim, int arity)
    : nodes_(std::move(nodes)), dim_(dim), arity_(arity) {}

Expression Expression::parse(std::string_view text, int dim, const std::vector<std::string>& params) {
  if (dim < 0 || dim > kMaxVars) throw ParseError("unsupported dimension " + std::to_string(dim), 1);
  Parser p(text, dim, params);
  auto nodes = std::make_shared<std::vector<Node>>(p.parse());
  return Expression(std::move(nodes), dim, dim + int(params.size()));
}

Expression Expression::constant(double c) {
  auto nodes = std::make_shared<std::vector<Node>>(1, Node{Op::constant, c, 0, -1, -1});
  return Expression(std::move(nodes), 0, 0);
}

Expression Expression::variable(int i, int dim) {
  auto nodes = std::make_shared<std::vector<Node>>(1, Node{Op::variable, 0, i, -1, -1});
  return Expression(std::move(nodes), dim, dim);
}

Expression Expression::unary(Op op, const Expression& a, int k) {
  auto nodes = std::make_shared<std::vector<Node>>(*a.nodes_);
  int ra = int(nodes->size()) - 1;
  nodes->push_back({op, 0, k, ra, -1});
  return Expression(std::move(nodes), a.dim_, a.arity_);
}

Expression Expression::binary(Op op, const Expression& a, const Expression& b) {
  auto nodes = std::make_shared<std::vector<Node>>(*a.nodes_);
  int ra = int(nodes->size()) - 1, rb = 0;
  append(*nodes, *b.nodes_, rb);
  nodes->push_back({op, 0, 0, ra, rb});
  return Expression(std::move(nodes), std::max(a.dim_, b.dim_), std::max(a.arity_, b.arity_));
}

Expression operator+(const Expression& a, const Expression& b) { return Expression::binary(Op::add, a, b); }
Expression operator-(const Expression& a, const Expression& b) { return Expression::binary(Op::sub, a, b); }
Expression operator*(const Expression& a, const Expression& b) { return Expression::binary(Op::mul, a, b); }
Expression operator/(const Expression& a, const Expression& b) { return Expression::binary(Op::div, a, b); }
Expression operator-(const Expression& a) { return Expression::unary(Op::neg, a); }
Expression sin(const Expression& a) { return Expression::unary(Op::sin, a); }
Expression cos(const Expression& a) { return Expression::unary(Op::cos, a); }
Expression exp(const Expression& a) { return Expression::unary(Op::exp, a); }
Expression tanh(const Expression& a) { return Expression::unary(Op::tanh, a); }
Expression pow(const Expression& a, int k) { return Expression::unary(Op::pow, a, k); }

static void check_args(int arity, int dim, std::size_t n) {
  if (arity > dim) throw EvalError("expression has unbound parameters");
  if (int(n) < dim) throw EvalError("too few coordinates: expected " + std::to_string(dim));
}

double Expression::eval(std::span<const double> x) const {
  check_args(arity_, dim_, x.size());
  return run<DoubleOps>(*nodes_, x);
}

Jet1 Expression::jet1(std::span<const double> x) const {
  check_args(arity_, dim_, x.size());
  return run<Jet1Ops>(*nodes_, x);
}

Jet2 Expression::jet2(std::span<const double> x) const {
  check_args(arity_, dim_, x.size());
  return run<Jet2Ops>(*nodes_, x);
}

Expression Expression::substitute(const std::vector<Expression>& reps) const {
  if (int(reps.size()) < arity_) throw EvalError("substitute: not enough replacement expressions");
  int dim = 0, arity = 0;
  for (const auto& r : reps) {
    dim = std::max(dim, r.dim_);
    arity = std::max(arity, r.arity_);
  }
  auto out = std::make_shared<std::vector<Node>>();
  std::vector<int> map(nodes_->size());
  for (std::size_t i = 0; i < nodes_->size(); ++i) {
    Node n = (*nodes_)[i];
    if (n.op == Op::variable) {
      append(*out, *reps[n.index].nodes_, map[i]);
      continue;
    }
    if (n.a >= 0) n.a = map[n.a];
    if (n.b >= 0) n.b = map[n.b];
    out->push_back(n);
    map[i] = int(out->size()) - 1;
  }
  return Expression(std::move(out), dim, arity);
}

Expression Expression::bind(int index, double value) const {
  auto out = std::make_shared<std::vector<Node>>(*nodes_);
  for (Node& n : *out) {
    if (n.op != Op::variable) continue;
    if (n.index == index) n = Node{Op::constant, value, 0, -1, -1};
    else if (n.index > index) --n.index;
  }
  int dim = index < dim_ ? dim_ - 1 : dim_;
  return Expression(std::move(out), dim, std::max(dim, arity_ - 1));
}

std::string Expression::to_string() const {
  const auto& ns = *nodes_;
  std::vector<std::string> s(ns.size());
  for (std::size_t i = 0; i < ns.size(); ++i) {
    const Node& n = ns[i];
    switch (n.op) {
      case Op::constant: s[i] = n.value < 0 ? "(" + fmt_double(n.value) + ")" : fmt_double(n.value); break;
      case Op::variable: s[i] = "x" + std::to_string(n.index + 1); break;
      case Op::add: s[i] = "(" + s[n.a] + " + " + s[n.b] + ")"; break;
      case Op::sub: s[i] = "(" + s[n.a] + " - " + s[n.b] + ")"; break;
      case Op::mul: s[i] = "(" + s[n.a] + " * " + s[n.b] + ")"; break;
      case Op::div: s[i] = "(" + s[n.a] + " / " + s[n.b] + ")"; break;
      case Op::neg: s[i] = "(-" + s[n.a] + ")"; break;
      case Op::pow: s[i] = "(" + s[n.a] + "^(" + std::to_string(n.index) + "))"; break;
      case Op::sin: s[i] = "sin(" + s[n.a] + ")"; break;
      case Op::cos: s[i] = "cos(" + s[n.a] + ")"; break;
      case Op::exp: s[i] = "exp(" + s[n.a] + ")"; break;
      case Op::tanh: s[i] = "tanh(" + s[n.a] + ")"; break;
    }
  }
  return s.back();
}

}  // namespace mcf::expr
