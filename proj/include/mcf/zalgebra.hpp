#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <optional>
#include <string>
#include <vector>

namespace mcf::zalg {

using Integer = boost::multiprecision::cpp_int;
using IntVec = std::vector<Integer>;

class IntMatrix {
 public:
  IntMatrix() = default;
  IntMatrix(int rows, int cols) : r_(rows), c_(cols), a_(std::size_t(rows) * cols) {}
  static IntMatrix identity(int n);
  static IntMatrix from_rows(const std::vector<std::vector<long long>>& rows);

  int rows() const { return r_; }
  int cols() const { return c_; }
  Integer& operator()(int i, int j) { return a_[std::size_t(i) * c_ + j]; }
  const Integer& operator()(int i, int j) const { return a_[std::size_t(i) * c_ + j]; }

  IntMatrix transpose() const;
  bool is_zero() const;
  IntVec column(int j) const;
  IntVec apply(const IntVec& v) const;
  Integer determinant() const;  // square only, Bareiss
  std::string to_string() const;

  friend IntMatrix operator*(const IntMatrix& a, const IntMatrix& b);
  friend IntMatrix operator+(const IntMatrix& a, const IntMatrix& b);
  friend IntMatrix operator-(const IntMatrix& a, const IntMatrix& b);
  friend bool operator==(const IntMatrix& a, const IntMatrix& b);

  // elementary operations used by the reduction
  void swap_rows(int i, int j);
  void swap_cols(int i, int j);
  void add_row(int dst, int src, const Integer& c);  // row dst += c * row src
  void add_col(int dst, int src, const Integer& c);  // col dst += c * col src
  void negate_row(int i);
  void negate_col(int j);

 private:
  int r_ = 0, c_ = 0;
  std::vector<Integer> a_;
};

struct SmithForm {
  IntMatrix U, D, V;        // A = U * D * V
  IntMatrix U_inv, V_inv;
  int rank = 0;
  IntVec factors;           // nonzero diagonal entries, each dividing the next
};

SmithForm smith_normal_form(const IntMatrix& a);

// A graded module with one differential per degree. direction -1: chain complex
// (d_k : C_k -> C_{k-1}); +1: cochain complex (d^k : C^k -> C^{k+1}).
struct GradedComplex {
  int direction = -1;
  std::vector<std::vector<std::string>> generators;  // per degree 0..top
  std::vector<IntMatrix> differential;                // differential[k] leaves degree k

  int top() const { return int(generators.size()) - 1; }
  int rank(int k) const { return k < 0 || k > top() ? 0 : int(generators[k].size()); }
  // Zero differentials with the right shapes.
  static GradedComplex zero(int direction, std::vector<std::vector<std::string>> gens);
  void check_shapes() const;
};

struct SquareZeroReport {
  bool holds = true;
  int degree = -1;  // degree k where d∘d fails out of k
  int row = -1, col = -1;
};
SquareZeroReport check_square_zero(const GradedComplex& c);

struct DegreeHomology {
  int betti = 0;
  IntVec torsion;
  std::vector<IntVec> lifts;  // torsion generators first, then free generators
};

struct HomologyResult {
  int direction = -1;
  std::vector<DegreeHomology> degrees;
  std::vector<int> betti() const;
  std::string describe() const;  // "H_0=Z, H_1=Z^2"
  friend bool operator==(const HomologyResult& a, const HomologyResult& b);  // group iso type
};

HomologyResult homology(const GradedComplex& c);
GradedComplex dualize(const GradedComplex& c);

// Degree map: target degree = sign * k + offset.
struct GradedIntMap {
  int degree_sign = 1;
  int degree_offset = 0;
  std::vector<IntMatrix> blocks;  // block k: C_k(source) -> C_{t(k)}(target)
  int target_degree(int k) const { return degree_sign * k + degree_offset; }
  static GradedIntMap identity(const GradedComplex& c);
  static GradedIntMap zero(const GradedComplex& src, const GradedComplex& tgt);
};

GradedIntMap compose(const GradedIntMap& second, const GradedIntMap& first);
GradedIntMap subtract(const GradedIntMap& a, const GradedIntMap& b);

struct ChainMapReport {
  bool holds = true;
  int degree = -1, row = -1, col = -1;
  std::string message;
};
ChainMapReport verify_chain_map(const GradedIntMap& m, const GradedComplex& src, const GradedComplex& tgt);

bool equal_on_homology(const GradedIntMap& a, const GradedIntMap& b, const GradedComplex& src,
                       const GradedComplex& tgt);

// Induced map on homology in generator coordinates of the two HomologyResults:
// rows = target generators (torsion then free), cols = source generators.
// Torsion coordinates are reduced modulo their orders.
struct HomologyMap {
  std::vector<IntMatrix> blocks;
};
HomologyMap induced_on_homology(const GradedIntMap& m, const GradedComplex& src, const GradedComplex& tgt);

// Exact solution of B c = w for integer c when B has full column rank.
std::optional<IntVec> solve_integer(const IntMatrix& b, const IntVec& w);

std::string to_string(const Integer& z);

}  // namespace mcf::zalg
