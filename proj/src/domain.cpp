#include "mcf/domain.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace mcf {

double wrap_unit(double x) {
  double r = x - std::floor(x);
  return r >= 1.0 ? 0.0 : r;
}

double wrap_centered(double x) {
  double r = x - std::floor(x + 0.5);
  return r;
}

Domain Domain::torus(int n) {
  if (n < 1 || n > 3) throw std::invalid_argument("torus dimension must be 1..3");
  Domain d;
  d.kind = DomainKind::torus;
  d.dim = n;
  d.lo.assign(n, 0.0);
  d.hi.assign(n, 1.0);
  return d;
}

Domain Domain::box(const std::vector<std::pair<double, double>>& bounds) {
  int n = int(bounds.size());
  if (n < 1 || n > 3) throw std::invalid_argument("box dimension must be 1..3");
  Domain d;
  d.kind = DomainKind::box;
  d.dim = n;
  for (auto [a, b] : bounds) {
    if (!(a < b)) throw std::invalid_argument("box bounds must be strictly ordered");
    d.lo.push_back(a);
    d.hi.push_back(b);
  }
  return d;
}

Vec Domain::reduce(const Vec& p) const {
  if (!is_torus()) return p;
  Vec q(p.size());
  for (int i = 0; i < p.size(); ++i) q[i] = wrap_unit(p[i]);
  return q;
}

Vec Domain::displacement(const Vec& a, const Vec& b) const {
  Vec d = b - a;
  if (is_torus())
    for (int i = 0; i < d.size(); ++i) d[i] = wrap_centered(d[i]);
  return d;
}

bool Domain::contains(const Vec& p) const {
  if (is_torus()) return true;
  for (int i = 0; i < dim; ++i)
    if (p[i] < lo[i] || p[i] > hi[i]) return false;
  return true;
}

double Domain::scale() const {
  double s = 0;
  for (int i = 0; i < dim; ++i) s = std::max(s, hi[i] - lo[i]);
  return s;
}

std::string Domain::describe() const {
  std::ostringstream os;
  if (is_torus()) {
    os << "T^" << dim;
  } else {
    for (int i = 0; i < dim; ++i) os << (i ? "x" : "") << "[" << lo[i] << "," << hi[i] << "]";
  }
  return os.str();
}

// ---- ScalarField ---------------------------------------------------------------

ScalarField::ScalarField(Domain d, expr::Expression e) : dom_(std::move(d)), e_(std::move(e)) {
  if (e_.arity() > dom_.dim) throw std::invalid_argument("field references variables beyond domain dimension");
}

ScalarField ScalarField::parse(const Domain& d, const std::string& text) {
  return ScalarField(d, expr::Expression::parse(text, d.dim));
}

static std::array<double, expr::kMaxVars> coords(const Domain& d, const Vec& p) {
  std::array<double, expr::kMaxVars> x{};
  for (int i = 0; i < d.dim; ++i) x[i] = d.is_torus() ? wrap_unit(p[i]) : p[i];
  return x;
}

double ScalarField::value(const Vec& p) const {
  auto x = coords(dom_, p);
  return e_.eval(std::span<const double>(x.data(), dom_.dim));
}

Vec ScalarField::gradient(const Vec& p) const {
  auto x = coords(dom_, p);
  auto j = e_.jet1(std::span<const double>(x.data(), dom_.dim));
  Vec g(dom_.dim);
  for (int i = 0; i < dom_.dim; ++i) g[i] = j.d[i];
  return g;
}

Mat ScalarField::hessian(const Vec& p) const {
  double v;
  Vec g;
  Mat h;
  jet(p, v, g, h);
  return h;
}

void ScalarField::jet(const Vec& p, double& v, Vec& g, Mat& h) const {
  auto x = coords(dom_, p);
  auto j = e_.jet2(std::span<const double>(x.data(), dom_.dim));
  int n = dom_.dim;
  v = j.v;
  g.resize(n);
  h.resize(n, n);
  for (int i = 0; i < n; ++i) {
    g[i] = j.g[i];
    for (int k = 0; k < n; ++k) h(i, k) = j.h[expr::packed(i, k)];
  }
}

ScalarField ScalarField::negated() const { return ScalarField(dom_, -e_); }
ScalarField ScalarField::scaled(double c) const { return ScalarField(dom_, expr::Expression::constant(c) * e_); }
ScalarField ScalarField::plus(const expr::Expression& e) const { return ScalarField(dom_, e_ + e); }

// ---- SmoothMap ---------------------------------------------------------------

SmoothMap::SmoothMap(Domain source, Domain target, std::vector<expr::Expression> comps)
    : src_(std::move(source)), tgt_(std::move(target)), comps_(std::move(comps)) {
  if (int(comps_.size()) != tgt_.dim) throw std::invalid_argument("map component count must equal target dimension");
  for (const auto& c : comps_)
    if (c.arity() > src_.dim) throw std::invalid_argument("map component references variables beyond source dimension");
}

SmoothMap SmoothMap::parse(const Domain& source, const Domain& target, const std::vector<std::string>& comps) {
  std::vector<expr::Expression> es;
  for (const auto& c : comps) es.push_back(expr::Expression::parse(c, source.dim));
  return SmoothMap(source, target, std::move(es));
}

SmoothMap SmoothMap::identity(const Domain& d) {
  std::vector<expr::Expression> es;
  for (int i = 0; i < d.dim; ++i) es.push_back(expr::Expression::variable(i, d.dim));
  return SmoothMap(d, d, std::move(es));
}

Vec SmoothMap::apply_lift(const Vec& p) const {
  auto x = coords(src_, p);
  Vec out(tgt_.dim);
  for (int i = 0; i < tgt_.dim; ++i) out[i] = comps_[i].eval(std::span<const double>(x.data(), src_.dim));
  return out;
}

Vec SmoothMap::apply(const Vec& p) const { return tgt_.reduce(apply_lift(p)); }

void SmoothMap::jet(const Vec& p, Vec& image, Mat& jac) const {
  auto x = coords(src_, p);
  image.resize(tgt_.dim);
  jac.resize(tgt_.dim, src_.dim);
  for (int i = 0; i < tgt_.dim; ++i) {
    auto j = comps_[i].jet1(std::span<const double>(x.data(), src_.dim));
    image[i] = j.v;
    for (int k = 0; k < src_.dim; ++k) jac(i, k) = j.d[k];
  }
  image = tgt_.reduce(image);
}

ScalarField SmoothMap::pullback(const ScalarField& f) const {
  if (f.dim() != tgt_.dim) throw std::invalid_argument("pullback: field dimension mismatch");
  return ScalarField(src_, f.expression().substitute(comps_));
}

SmoothMap SmoothMap::compose_after(const SmoothMap& first) const {
  if (first.tgt_.dim != src_.dim) throw std::invalid_argument("compose: dimension mismatch");
  std::vector<expr::Expression> es;
  for (const auto& c : comps_) es.push_back(c.substitute(first.comps_));
  return SmoothMap(first.src_, tgt_, std::move(es));
}

// ---- Metric ------------------------------------------------------------------

Metric::Metric(int n) : g_(Mat::Identity(n, n)), ginv_(Mat::Identity(n, n)), euclid_(true) {}

Metric::Metric(const Mat& g) : g_(g), euclid_(false) {
  if (g.rows() != g.cols()) throw std::invalid_argument("metric must be square");
  if ((g - g.transpose()).cwiseAbs().maxCoeff() > 0) throw std::invalid_argument("metric must be symmetric");
  Eigen::LLT<Mat> llt(g);
  if (llt.info() != Eigen::Success) throw std::invalid_argument("metric must be positive definite");
  ginv_ = llt.solve(Mat::Identity(g.rows(), g.cols()));
  ginv_ = 0.5 * (ginv_ + ginv_.transpose());
  euclid_ = g.isIdentity(0.0);
}

Vec Metric::raise(const Vec& v) const { return euclid_ ? v : Vec(ginv_ * v); }

}  // namespace mcf
