#pragma once

#include <array>
#include <cmath>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace mcf::expr {

constexpr int kMaxVars = 3;

struct ParseError : std::runtime_error {
  ParseError(const std::string& msg, std::size_t column)
      : std::runtime_error(msg + " at column " + std::to_string(column)), column(column) {}
  std::size_t column;
};

struct EvalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// First-order jet: value and gradient.
struct Jet1 {
  double v = 0.0;
  std::array<double, kMaxVars> d{};
};

// Second-order jet; hessian stored packed, upper triangle row-major.
struct Jet2 {
  double v = 0.0;
  std::array<double, kMaxVars> g{};
  std::array<double, kMaxVars*(kMaxVars + 1) / 2> h{};
};

constexpr int packed(int i, int j) {
  if (i > j) std::swap(i, j);
  return i * kMaxVars - i * (i - 1) / 2 + (j - i);
}

enum class Op : unsigned char { constant, variable, add, sub, mul, div, neg, pow, sin, cos, exp, tanh };

struct Node {
  Op op = Op::constant;
  double value = 0.0;
  int index = 0;  // variable index or integer exponent
  int a = -1;
  int b = -1;
};

class Expression {
 public:
  Expression();

  // Variables are x1..x{dim}; each name in params becomes variable dim+i until bound.
  static Expression parse(std::string_view text, int dim, const std::vector<std::string>& params = {});
  static Expression constant(double c);
  static Expression variable(int i, int dim);

  int dim() const { return dim_; }
  int arity() const { return arity_; }

  double eval(std::span<const double> x) const;
  Jet1 jet1(std::span<const double> x) const;
  Jet2 jet2(std::span<const double> x) const;

  // Replace variable i with reps[i]; result has the dimension of the replacements.
  Expression substitute(const std::vector<Expression>& reps) const;
  // Fix variable index to a constant; later variables shift down by one.
  Expression bind(int index, double value) const;

  std::string to_string() const;
  const std::vector<Node>& nodes() const { return *nodes_; }

  friend Expression operator+(const Expression& a, const Expression& b);
  friend Expression operator-(const Expression& a, const Expression& b);
  friend Expression operator*(const Expression& a, const Expression& b);
  friend Expression operator/(const Expression& a, const Expression& b);
  friend Expression operator-(const Expression& a);
  friend Expression sin(const Expression& a);
  friend Expression cos(const Expression& a);
  friend Expression exp(const Expression& a);
  friend Expression tanh(const Expression& a);
  friend Expression pow(const Expression& a, int k);

 private:
  Expression(std::shared_ptr<const std::vector<Node>> nodes, int dim, int arity);
  static Expression unary(Op op, const Expression& a, int k = 0);
  static Expression binary(Op op, const Expression& a, const Expression& b);

  std::shared_ptr<const std::vector<Node>> nodes_;
  int dim_ = 0;
  int arity_ = 0;  // number of variables the tape may reference
};

}  // namespace mcf::expr
