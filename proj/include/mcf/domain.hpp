#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "mcf/expr.hpp"

namespace mcf {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

enum class DomainKind { torus, box };

struct Domain {
  DomainKind kind = DomainKind::torus;
  int dim = 1;
  std::vector<double> lo, hi;  // box bounds; [0,1) per axis for tori

  static Domain torus(int n);
  static Domain box(const std::vector<std::pair<double, double>>& bounds);

  bool is_torus() const { return kind == DomainKind::torus; }
  // Torus coordinates reduced to [0,1); identity on boxes.
  Vec reduce(const Vec& p) const;
  // Shortest displacement from a to b (wrapped on tori).
  Vec displacement(const Vec& a, const Vec& b) const;
  double distance(const Vec& a, const Vec& b) const { return displacement(a, b).norm(); }
  bool contains(const Vec& p) const;
  double scale() const;
  std::string describe() const;
};

double wrap_unit(double x);      // x mod 1 in [0,1)
double wrap_centered(double x);  // x mod 1 in [-1/2,1/2)

class ScalarField {
 public:
  ScalarField() = default;
  ScalarField(Domain d, expr::Expression e);
  static ScalarField parse(const Domain& d, const std::string& text);

  const Domain& domain() const { return dom_; }
  const expr::Expression& expression() const { return e_; }
  int dim() const { return dom_.dim; }

  double value(const Vec& p) const;
  Vec gradient(const Vec& p) const;
  Mat hessian(const Vec& p) const;
  void jet(const Vec& p, double& v, Vec& g, Mat& h) const;

  ScalarField negated() const;
  ScalarField scaled(double c) const;
  ScalarField plus(const expr::Expression& e) const;

 private:
  Domain dom_;
  expr::Expression e_;
};

class SmoothMap {
 public:
  SmoothMap() = default;
  SmoothMap(Domain source, Domain target, std::vector<expr::Expression> comps);
  static SmoothMap parse(const Domain& source, const Domain& target, const std::vector<std::string>& comps);
  static SmoothMap identity(const Domain& d);

  const Domain& source() const { return src_; }
  const Domain& target() const { return tgt_; }
  const std::vector<expr::Expression>& components() const { return comps_; }

  // Image reduced into the target torus; Jacobian of the unreduced lift.
  Vec apply(const Vec& p) const;
  Vec apply_lift(const Vec& p) const;
  void jet(const Vec& p, Vec& image, Mat& jac) const;

  // f∘h as a scalar field on the source.
  ScalarField pullback(const ScalarField& f) const;
  SmoothMap compose_after(const SmoothMap& first) const;  // this∘first

 private:
  Domain src_, tgt_;
  std::vector<expr::Expression> comps_;
};

// Constant symmetric positive definite metric.
class Metric {
 public:
  Metric() = default;
  explicit Metric(int n);
  explicit Metric(const Mat& g);

  const Mat& matrix() const { return g_; }
  const Mat& inverse() const { return ginv_; }
  bool euclidean() const { return euclid_; }
  Vec raise(const Vec& covector) const;  // g^{-1} v

 private:
  Mat g_, ginv_;
  bool euclid_ = true;
};

}  // namespace mcf
