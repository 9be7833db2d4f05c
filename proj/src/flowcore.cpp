#include "mcf/flowcore.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "mcf/parallel.hpp"

namespace mcf::flow {

ode::Options FlowConfig::ode(double scale) const {
  ode::Options o;
  o.rtol = rtol;
  o.atol = atol;
  o.h_init = h_init;
  o.h_max = h_max;
  o.max_disp = max_disp * scale;
  return o;
}

// ---- fields ------------------------------------------------------------------

GradientField::GradientField(ScalarField f, Metric g, double sign) : f_(std::move(f)), g_(std::move(g)), sign_(sign) {
  if (g_.matrix().rows() == 0) g_ = Metric(f_.dim());
}

void GradientField::eval(double, const Vec& x, Vec& out) const { out = -sign_ * g_.raise(f_.gradient(x)); }

Mat GradientField::jacobian(double, const Vec& x) const {
  Mat h = f_.hessian(x);
  return g_.euclidean() ? Mat(-sign_ * h) : Mat(-sign_ * g_.inverse() * h);
}

ExpressionField::ExpressionField(Domain d, std::vector<expr::Expression> comps)
    : dom_(std::move(d)), comps_(std::move(comps)) {
  if (int(comps_.size()) != dom_.dim) throw std::invalid_argument("vector field needs one component per dimension");
  for (const auto& c : comps_)
    if (c.arity() > dom_.dim) throw std::invalid_argument("vector field component references unknown variables");
}

ExpressionField ExpressionField::parse(const Domain& d, const std::vector<std::string>& comps) {
  std::vector<expr::Expression> es;
  for (const auto& c : comps) es.push_back(expr::Expression::parse(c, d.dim));
  return ExpressionField(d, std::move(es));
}

void ExpressionField::eval(double, const Vec& x, Vec& out) const {
  std::array<double, expr::kMaxVars> c{};
  for (int i = 0; i < dom_.dim; ++i) c[i] = dom_.is_torus() ? wrap_unit(x[i]) : x[i];
  out.resize(dom_.dim);
  for (int i = 0; i < dom_.dim; ++i) out[i] = comps_[i].eval(std::span<const double>(c.data(), dom_.dim));
}

Mat ExpressionField::jacobian(double, const Vec& x) const {
  std::array<double, expr::kMaxVars> c{};
  for (int i = 0; i < dom_.dim; ++i) c[i] = dom_.is_torus() ? wrap_unit(x[i]) : x[i];
  Mat j(dom_.dim, dom_.dim);
  for (int i = 0; i < dom_.dim; ++i) {
    auto jet = comps_[i].jet1(std::span<const double>(c.data(), dom_.dim));
    for (int k = 0; k < dom_.dim; ++k) j(i, k) = jet.d[k];
  }
  return j;
}

ExpressionField ExpressionField::reversed() const {
  std::vector<expr::Expression> es;
  for (const auto& c : comps_) es.push_back(-c);
  return ExpressionField(dom_, std::move(es));
}

double smoothstep(double s) {
  s = std::clamp(s, 0.0, 1.0);
  return s * s * (3.0 - 2.0 * s);
}

InterpolatedGradientField::InterpolatedGradientField(ScalarField fa, ScalarField fb, Metric g, double t_switch)
    : fa_(std::move(fa)), fb_(std::move(fb)), g_(std::move(g)), ts_(t_switch) {
  if (g_.matrix().rows() == 0) g_ = Metric(fa_.dim());
}

double InterpolatedGradientField::lambda(double t) const { return smoothstep(t / ts_); }

void InterpolatedGradientField::eval(double t, const Vec& x, Vec& out) const {
  double l = lambda(t);
  Vec g = (1 - l) * fa_.gradient(x) + l * fb_.gradient(x);
  out = -g_.raise(g);
}

Mat InterpolatedGradientField::jacobian(double t, const Vec& x) const {
  double l = lambda(t);
  Mat h = (1 - l) * fa_.hessian(x) + l * fb_.hessian(x);
  return g_.euclidean() ? Mat(-h) : Mat(-g_.inverse() * h);
}

// ---- critical points ---------------------------------------------------------

Vec CriticalPoint::eigen_coords(const Vec& v) const { return basis_inverse * v; }

MorseDatum::MorseDatum(ScalarField f, Metric g, std::vector<CriticalPoint> pts)
    : f_(std::move(f)), g_(std::move(g)), pts_(std::move(pts)) {
  if (g_.matrix().rows() == 0) g_ = Metric(f_.dim());
  grad_ = std::make_shared<GradientField>(f_, g_, 1.0);
}

std::vector<int> MorseDatum::of_index(int k) const {
  std::vector<int> out;
  for (int i = 0; i < int(pts_.size()); ++i)
    if (pts_[i].index == k) out.push_back(i);
  return out;
}

int MorseDatum::euler_characteristic() const {
  int chi = 0;
  for (const auto& c : pts_) chi += (c.index % 2 == 0) ? 1 : -1;
  return chi;
}

CriticalPoint analyze_critical_point(const ScalarField& f, const Metric& g, const Vec& x) {
  CriticalPoint c;
  c.x = f.domain().reduce(x);
  Mat h = f.hessian(x);
  h = 0.5 * (h + h.transpose());
  if (g.euclidean()) {
    Eigen::SelfAdjointEigenSolver<Mat> es(h);
    c.eigenvalues = es.eigenvalues();
    c.eigenvectors = es.eigenvectors();
  } else {
    Eigen::GeneralizedSelfAdjointEigenSolver<Mat> es(h, g.matrix());
    c.eigenvalues = es.eigenvalues();
    c.eigenvectors = es.eigenvectors();
  }
  int n = int(h.rows());
  for (int j = 0; j < n; ++j) {
    auto col = c.eigenvectors.col(j);
    double nrm = col.norm();
    for (int i = 0; i < n; ++i)
      if (std::abs(col[i]) > 1e-12 * nrm) {
        if (col[i] < 0) col *= -1.0;
        break;
      }
  }
  c.index = 0;
  for (int j = 0; j < n; ++j)
    if (c.eigenvalues[j] < 0) ++c.index;
  c.basis_inverse = c.eigenvectors.inverse();
  return c;
}

namespace {

std::vector<Vec> seed_grid(const Domain& dom, const Neighborhood* region, int per_axis) {
  std::vector<Box> boxes = region ? region->boxes() : std::vector<Box>{Box{dom.lo, dom.hi}};
  std::vector<Vec> out;
  const int n = dom.dim;
  for (const auto& b : boxes) {
    std::vector<int> idx(n, 0);
    for (;;) {
      Vec p(n);
      for (int i = 0; i < n; ++i) p[i] = b.lo[i] + (b.hi[i] - b.lo[i]) * (idx[i] + 0.5) / per_axis;
      out.push_back(p);
      int i = 0;
      while (i < n && ++idx[i] >= per_axis) idx[i++] = 0;
      if (i == n) break;
    }
  }
  return out;
}

bool lex_less(const Vec& a, const Vec& b) {
  for (int i = 0; i < a.size(); ++i) {
    if (a[i] < b[i]) return true;
    if (a[i] > b[i]) return false;
  }
  return false;
}

Vec lstsq(const Mat& a, const Vec& b) {
  Eigen::JacobiSVD<Mat> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
  svd.setThreshold(1e-13);
  return svd.solve(b);
}

}  // namespace

std::vector<CriticalPoint> find_critical_points(const ScalarField& f, const Metric& g, const Neighborhood* region,
                                                const FlowConfig& cfg) {
  const Domain& dom = f.domain();
  auto seeds = seed_grid(dom, region, cfg.seeds_per_axis);
  double scale = region ? region->scale() : dom.scale();
  auto roots = par::map_indexed<std::optional<Vec>>(seeds.size(), [&](std::size_t s) -> std::optional<Vec> {
    Vec p = seeds[s];
    double v;
    Vec grad;
    Mat h;
    try {
      for (int it = 0; it < 100; ++it) {
        f.jet(p, v, grad, h);
        if (grad.norm() == 0) break;
        Vec step = lstsq(h, grad);
        p -= step;
        if (!dom.is_torus() && (p - seeds[s]).norm() > 4 * scale) return std::nullopt;
        if (step.norm() < 1e-14 * std::max(1.0, p.norm())) break;
      }
      if (f.gradient(p).norm() >= cfg.tol_crit) return std::nullopt;
    } catch (const expr::EvalError&) {
      return std::nullopt;
    }
    Vec r = dom.reduce(p);
    if (region && region->margin(r) < -1e-9) return std::nullopt;
    if (!region && !dom.contains(r)) return std::nullopt;
    return r;
  });
  std::vector<Vec> uniq;
  for (const auto& r : roots) {
    if (!r) continue;
    bool dup = false;
    for (const auto& u : uniq)
      if (dom.distance(u, *r) < 1e-6) {
        dup = true;
        break;
      }
    if (!dup) uniq.push_back(*r);
  }
  std::sort(uniq.begin(), uniq.end(), lex_less);
  std::vector<CriticalPoint> out;
  for (const auto& x : uniq) {
    Mat h = f.hessian(x);
    Mat a = g.euclidean() ? h : Mat(g.inverse() * h);
    double det = a.determinant();
    if (std::abs(det) <= cfg.tol_nondeg) {
      std::ostringstream os;
      os << "degenerate critical point at (";
      for (int i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
      os << "), |det Hessian| = " << std::abs(det);
      throw DegenerateCriticalPoint(os.str(), x);
    }
    CriticalPoint c = analyze_critical_point(f, g, x);
    c.label = "c" + std::to_string(out.size());
    out.push_back(std::move(c));
  }
  return out;
}

MorseDatum make_datum(const ScalarField& f, const Metric& g, const Neighborhood* region, const FlowConfig& cfg) {
  Metric gg = g.matrix().rows() ? g : Metric(f.dim());
  return MorseDatum(f, gg, find_critical_points(f, gg, region, cfg));
}

ScalarField perturb_field(const ScalarField& f, double eps, unsigned long long seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coef(-1.0, 1.0), phase(0.0, 2 * M_PI);
  const Domain& d = f.domain();
  using expr::Expression;
  Expression sum = Expression::constant(0.0);
  for (int i = 0; i < d.dim; ++i) {
    double a = coef(rng);
    Expression xi = Expression::variable(i, d.dim);
    if (d.is_torus()) {
      double ph = phase(rng);
      Expression arg = Expression::constant(2 * M_PI) * xi + Expression::constant(ph);
      sum = sum + Expression::constant(a) * cos(arg);
    } else {
      sum = sum + Expression::constant(a) * xi;
    }
  }
  return f.plus(Expression::constant(eps) * sum);
}

std::vector<Vec> find_equilibria(const VectorField& X, const Neighborhood& region, const FlowConfig& cfg) {
  const Domain& dom = X.domain();
  int per_axis = dom.dim == 1 ? cfg.seeds_per_axis : std::max(8, cfg.seeds_per_axis / 2);
  auto seeds = seed_grid(dom, &region, per_axis);
  double scale = region.scale();
  auto roots = par::map_indexed<std::optional<Vec>>(seeds.size(), [&](std::size_t s) -> std::optional<Vec> {
    Vec p = seeds[s], v;
    try {
      for (int it = 0; it < 100; ++it) {
        X.eval(0, p, v);
        if (v.norm() == 0) break;
        Vec step = lstsq(X.jacobian(0, p), v);
        p -= step;
        if ((p - seeds[s]).norm() > 4 * scale) return std::nullopt;
        if (step.norm() < 1e-14 * std::max(1.0, p.norm())) break;
      }
      X.eval(0, p, v);
      if (v.norm() >= cfg.tol_crit) return std::nullopt;
    } catch (const expr::EvalError&) {
      return std::nullopt;
    }
    Vec r = dom.reduce(p);
    if (region.margin(r) < -1e-9) return std::nullopt;
    return r;
  });
  std::vector<Vec> uniq;
  for (const auto& r : roots) {
    if (!r) continue;
    bool dup = false;
    for (const auto& u : uniq) dup = dup || dom.distance(u, *r) < 1e-6;
    if (!dup) uniq.push_back(*r);
  }
  std::sort(uniq.begin(), uniq.end(), lex_less);
  return uniq;
}

// ---- integration ---------------------------------------------------------------

std::string to_string(Terminal t) {
  switch (t) {
    case Terminal::converged: return "converged";
    case Terminal::exited: return "exited";
    case Terminal::time_capped: return "time_capped";
    case Terminal::stopped: return "stopped";
    case Terminal::failed: return "failed";
  }
  return "?";
}

std::vector<Target> targets_of(const MorseDatum& d) {
  std::vector<Target> t;
  for (const auto& c : d.points()) t.push_back({c.x, c.eigenvectors, c.basis_inverse, c.index});
  return t;
}

std::vector<Target> targets_of(const std::vector<Vec>& equilibria) {
  std::vector<Target> t;
  for (const auto& e : equilibria) t.push_back({e, Mat(), Mat(), -1});
  return t;
}

namespace {

int converged_to(const std::vector<Target>& targets, const Domain& dom, const Vec& x, Direction dir,
                 const FlowConfig& cfg) {
  const int n = dom.dim;
  for (int i = 0; i < int(targets.size()); ++i) {
    const Target& c = targets[i];
    Vec d = dom.displacement(c.x, x);
    double r = d.norm();
    if (c.unstable_dim < 0) {
      if (r < cfg.r_conv * 1e-3) return i;
      continue;
    }
    int rep = dir == Direction::forward ? c.unstable_dim : n - c.unstable_dim;
    double radius = rep == 0 ? cfg.r_conv : cfg.r_conv * 1e-2;
    if (r >= radius) continue;
    if (r == 0 || rep == 0) return i;
    Vec a = c.basis_inv * d;
    Vec part = dir == Direction::forward ? Vec(c.basis.leftCols(rep) * a.head(rep))
                                         : Vec(c.basis.rightCols(rep) * a.tail(rep));
    if (part.norm() < cfg.cone * r) return i;
  }
  return -1;
}

}  // namespace

Orbit integrate(const VectorField& X, const std::vector<Target>& targets, const Vec& p, double t0, Direction dir,
                const StopRule& stop, const FlowConfig& cfg) {
  const Domain& dom = X.domain();
  Orbit o;
  o.start = p;
  o.end = p;
  o.t = 0;
  auto visit = [&](double t, const Vec& x) -> bool {
    if (stop.record) {
      o.ts.push_back(t);
      o.xs.push_back(x);
    }
    if (stop.region) {
      if (stop.track_margin) {
        double m = stop.region->margin(x);
        o.min_margin = std::min(o.min_margin, m);
        if (m < 0) {
          o.status = Terminal::exited;
          return true;
        }
      } else if (!stop.region->contains(x)) {
        o.status = Terminal::exited;
        return true;
      }
    } else if (!dom.is_torus() && !dom.contains(x)) {
      o.status = Terminal::exited;
      return true;
    }
    if (stop.hit_critical) {
      int k = converged_to(targets, dom, x, dir, cfg);
      if (k >= 0) {
        o.status = Terminal::converged;
        o.target = k;
        return true;
      }
    }
    if (stop.extra && stop.extra(t, x)) {
      o.status = Terminal::stopped;
      return true;
    }
    return false;
  };
  try {
    if (visit(t0, p)) {
      o.end = p;
      return o;
    }
    ode::Options opt = cfg.ode(dom.scale());
    ode::Rhs rhs = [&](double t, const Vec& y, Vec& dy) { X.eval(t, y, dy); };
    double t1 = dir == Direction::forward ? t0 + stop.t_max : t0 - stop.t_max;
    if (X.autonomous() && dir == Direction::backward) {
      rhs = [&](double t, const Vec& y, Vec& dy) {
        X.eval(t, y, dy);
        dy = -dy;
      };
      t1 = t0 + stop.t_max;
    }
    bool stopped = false;
    auto res = ode::integrate(rhs, t0, p, t1, opt, [&](double t, Vec& y) {
      double tt = (X.autonomous() && dir == Direction::backward) ? 2 * t0 - t : t;
      if (visit(tt, y)) {
        stopped = true;
        return ode::Control::stop;
      }
      return ode::Control::proceed;
    });
    o.end = res.y;
    o.t = std::abs(res.t - t0);
    if (!stopped) {
      if (res.status == ode::Status::reached) {
        o.status = Terminal::time_capped;
      } else {
        o.status = Terminal::failed;
        std::ostringstream os;
        os << "integration failure (" << (res.status == ode::Status::underflow ? "step-size underflow" : "step limit")
           << ") at t=" << o.t;
        o.failure = os.str();
      }
    }
  } catch (const expr::EvalError& e) {
    o.status = Terminal::failed;
    o.failure = e.what();
  }
  return o;
}

Orbit integrate_orbit(const MorseDatum& d, const Vec& p, Direction dir, const StopRule& stop, const FlowConfig& cfg) {
  return integrate(d.gradient(), targets_of(d), p, 0.0, dir, stop, cfg);
}

Vec flow_time(const VectorField& X, const Vec& p, double t0, double t1, const FlowConfig& cfg) {
  ode::Options opt = cfg.ode(X.domain().scale());
  ode::Rhs rhs = [&](double t, const Vec& y, Vec& dy) { X.eval(t, y, dy); };
  auto res = ode::integrate(rhs, t0, p, t1, opt);
  if (res.status != ode::Status::reached) {
    std::ostringstream os;
    os << "flow_time: integration failure at t=" << res.t << " after " << res.steps << " steps from t0=" << t0
       << " toward t1=" << t1;
    throw std::runtime_error(os.str());
  }
  return res.y;
}

bool orthonormalize(Mat& F, double max_cond) {
  if (F.cols() == 0) return true;
  Eigen::JacobiSVD<Mat> svd(F);
  auto sv = svd.singularValues();
  if (sv.minCoeff() <= 0 || sv.maxCoeff() / sv.minCoeff() > max_cond) return false;
  for (int j = 0; j < F.cols(); ++j) {
    for (int i = 0; i < j; ++i) F.col(j) -= F.col(i).dot(F.col(j)) * F.col(i);
    double r = F.col(j).norm();
    if (r == 0) return false;
    F.col(j) /= r;
  }
  return true;
}

FrameResult transport_frame(const VectorField& X, const Vec& p, const Mat& F, double t0, double t1,
                            const FlowConfig& cfg) {
  const int n = X.dim();
  const int k = int(F.cols());
  FrameResult out;
  Vec y(n + n * k);
  y.head(n) = p;
  Mat F0 = F;
  if (!orthonormalize(F0)) {
    out.ok = false;
    out.failure = "initial frame degenerate";
    return out;
  }
  for (int j = 0; j < k; ++j) y.segment(n + j * n, n) = F0.col(j);
  ode::Options opt = cfg.ode(X.domain().scale());
  opt.disp_dims = n;
  ode::Rhs rhs = [&](double t, const Vec& s, Vec& ds) {
    ds.resize(s.size());
    Vec v;
    Vec x = s.head(n);
    X.eval(t, x, v);
    ds.head(n) = v;
    Mat J = X.jacobian(t, x);
    for (int j = 0; j < k; ++j) ds.segment(n + j * n, n) = J * s.segment(n + j * n, n);
  };
  bool collapsed = false;
  try {
    auto res = ode::integrate(rhs, t0, y, t1, opt, [&](double, Vec& s) {
      Mat G(n, k);
      for (int j = 0; j < k; ++j) G.col(j) = s.segment(n + j * n, n);
      if (!orthonormalize(G)) {
        collapsed = true;
        return ode::Control::stop;
      }
      for (int j = 0; j < k; ++j) s.segment(n + j * n, n) = G.col(j);
      return ode::Control::modified;
    });
    out.end = res.y.head(n);
    out.frame.resize(n, k);
    for (int j = 0; j < k; ++j) out.frame.col(j) = res.y.segment(n + j * n, n);
    if (collapsed) {
      out.ok = false;
      out.failure = "frame collapse (condition number above 1e12)";
    } else if (res.status != ode::Status::reached) {
      out.ok = false;
      out.failure = "integration failure during frame transport";
    }
  } catch (const expr::EvalError& e) {
    out.ok = false;
    out.failure = e.what();
  }
  return out;
}

FrameResult unstable_frame_transport(const MorseDatum& d, const Orbit& orbit, const Mat& F, const FlowConfig& cfg) {
  return transport_frame(d.gradient(), orbit.start, F, 0.0, orbit.t, cfg);
}

void write_orbit_csv(const std::string& path, const Orbit& o) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  int n = o.xs.empty() ? int(o.start.size()) : int(o.xs[0].size());
  os << "t";
  for (int i = 0; i < n; ++i) os << ",x" << (i + 1);
  os << "\n";
  os.precision(17);
  for (std::size_t s = 0; s < o.xs.size(); ++s) {
    os << o.ts[s];
    for (int i = 0; i < n; ++i) os << "," << o.xs[s][i];
    os << "\n";
  }
}

}  // namespace mcf::flow
