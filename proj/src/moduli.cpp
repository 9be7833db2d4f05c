#include "mcf/moduli.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <sstream>

#include "mcf/parallel.hpp"

namespace mcf::moduli {

using flow::Direction;
using flow::Orbit;
using flow::StopRule;
using flow::Terminal;

namespace {

int sgn(double v) { return v > 0 ? 1 : (v < 0 ? -1 : 0); }

std::string fmt_point(const Vec& x) {
  std::ostringstream os;
  os.precision(6);
  os << "(";
  for (int i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
  os << ")";
  return os.str();
}

std::string describe(const MorseDatum& d, int i) {
  const auto& c = d.points()[i];
  return c.label + fmt_point(c.x) + "[index " + std::to_string(c.index) + "]";
}

}  // namespace

std::vector<int> points_in(const MorseDatum& d, const Neighborhood* region) {
  std::vector<int> out;
  for (int i = 0; i < int(d.points().size()); ++i)
    if (!region || region->contains(d.points()[i].x)) out.push_back(i);
  return out;
}

std::vector<SaddleBox> saddle_boxes(const MorseDatum& d, const FlowConfig&) {
  std::vector<SaddleBox> out;
  if (d.dim() != 2) return out;
  const auto& pts = d.points();
  for (int i = 0; i < int(pts.size()); ++i) {
    if (pts[i].index != 1) continue;
    double nearest = std::numeric_limits<double>::infinity();
    for (int j = 0; j < int(pts.size()); ++j)
      if (j != i) nearest = std::min(nearest, d.domain().distance(pts[i].x, pts[j].x));
    SaddleBox b;
    b.point = i;
    b.center = pts[i].x;
    b.basis = pts[i].eigenvectors;
    b.basis_inv = pts[i].basis_inverse;
    // eigen-coordinates are not metric-normalized boxes; scale by the basis norm
    b.delta = std::min(0.05 * d.domain().scale(), 0.25 * nearest);
    out.push_back(b);
  }
  return out;
}

// ---- visit tracking ------------------------------------------------------------

void VisitTracker::step(double t, const Vec& x) {
  for (int b = 0; b < int(boxes_.size()); ++b) {
    const SaddleBox& box = boxes_[b];
    Vec a = box.basis_inv * dom_.displacement(box.center, x);
    double u = a[0], s = a[1], dl = box.delta;
    bool inside = std::abs(u) <= dl && std::abs(s) <= dl;
    State& st = state_[b];
    if (inside && !st.inside) {
      Visit v;
      v.box = b;
      v.branch = s >= 0 ? 1 : -1;
      visits_.push_back(v);
      st.open = int(visits_.size()) - 1;
      st.inside = true;
      st.prev_s = s;
      st.prev_u = u;
      st.prev_t = t;
    }
    if (inside) {
      Visit& v = visits_[st.open];
      if (!v.sectioned && std::abs(s) <= dl / 2) {
        v.sectioned = true;
        double ps = std::abs(st.prev_s), cs = std::abs(s);
        if (ps > dl / 2 && ps > cs) {
          double f = (ps - dl / 2) / (ps - cs);
          v.u_section = st.prev_u + f * (u - st.prev_u);
          v.t_section = st.prev_t + f * (t - st.prev_t);
        } else {
          v.u_section = u;
          v.t_section = t;
        }
      }
    } else if (st.inside) {
      Visit& v = visits_[st.open];
      double ru = std::abs(u) / dl, rs = std::abs(s) / dl;
      v.side = (ru > 1 && ru >= rs) ? sgn(u) : 0;
      st.inside = false;
      st.open = -1;
    }
    st.prev_s = s;
    st.prev_u = u;
    st.prev_t = t;
  }
}

void VisitTracker::finish() {
  for (auto& st : state_) {
    st.inside = false;
    st.open = -1;
  }
}

std::vector<Visit> VisitTracker::visits_to(int box) const {
  std::vector<Visit> out;
  for (const auto& v : visits_)
    if (v.box == box) out.push_back(v);
  return out;
}

Compare compare_visits(const std::vector<Visit>& a, const std::vector<Visit>& b, int& k) {
  std::size_t n = std::min(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) {
    k = int(i);
    if (a[i].branch != b[i].branch) return Compare::different;
    if (a[i].side == b[i].side) continue;
    if (a[i].side != 0 && b[i].side != 0) return Compare::bracket;
    return Compare::different;
  }
  k = int(n);
  return a.size() == b.size() ? Compare::equal : Compare::different;
}

int fiber_first_sign(const MorseDatum& d, int y, const Vec& p, const Mat& F) {
  const auto& cy = d.points()[y];
  Vec X;
  d.gradient().eval(0, p, X);
  if (X.norm() == 0) throw CountingFailure("sign evaluation at a critical point");
  Mat B(d.dim(), 1 + cy.index);
  B.col(0) = X.normalized();
  if (cy.index > 0) B.rightCols(cy.index) = cy.unstable_frame();
  if (F.cols() != B.cols()) throw CountingFailure("frame dimension mismatch in sign evaluation");
  Mat L = B.colPivHouseholderQr().solve(F);
  double det = L.determinant();
  return sgn(det);
}

// ---- shooting from one critical point ------------------------------------------

namespace {

struct Shot {
  Orbit orbit;
  std::vector<Visit> visits;
  std::vector<Visit> to(int box) const {
    std::vector<Visit> out;
    for (const auto& v : visits)
      if (v.box == box) out.push_back(v);
    return out;
  }
};

class Shooter {
 public:
  Shooter(const MorseDatum& d, int x, const Neighborhood* region, const FlowConfig& cfg)
      : d_(d), x_(x), region_(region), cfg_(cfg), boxes_(saddle_boxes(d, cfg)), targets_(flow::targets_of(d)) {
    const auto& c = d.points()[x];
    r_ = cfg.r_launch * d.domain().scale();
    u1_ = c.eigenvectors.col(0);
    u2_ = c.eigenvectors.col(1);
    // Sample density follows rate-normalized coordinates, where the linear flow
    // preserves direction; otherwise orbits leaving along the slow direction
    // crowd into an arc far below the sampling step. Exponents are capped so the
    // fast offsets stay above 1e-10.
    double l1 = std::abs(c.eigenvalues[0]), l2 = std::abs(c.eigenvalues[1]), m = std::min(l1, l2);
    r0_ = 0.1 * d.domain().scale();
    double cap = std::log(1e-10 * d.domain().scale() / r0_) / std::log(r_ / r0_);
    k1_ = std::min(l1 / m, cap);
    k2_ = std::min(l2 / m, cap);
  }

  Vec launch(double th) const { return d_.points()[x_].x + r_ * (std::cos(th) * u1_ + std::sin(th) * u2_); }

  // Launch angle for a uniform parameter phi; monotone, same quadrant as phi.
  double sample_angle(double phi) const {
    auto coord = [&](double c, double k) {
      return (c < 0 ? -1.0 : 1.0) * std::pow(r_ / r0_, k) * std::pow(std::abs(c), k);
    };
    double a = std::atan2(coord(std::sin(phi), k2_), coord(std::cos(phi), k1_));
    return phi + std::remainder(a - phi, 2 * M_PI);
  }

  Shot shoot(double th) const {
    Shot s;
    VisitTracker tr(d_.domain(), boxes_);
    StopRule st;
    st.t_max = cfg_.t_max;
    st.region = region_;
    st.extra = [&](double t, const Vec& p) {
      tr.step(t, p);
      return false;
    };
    s.orbit = flow::integrate(d_.gradient(), targets_, launch(th), 0.0, Direction::forward, st, cfg_);
    tr.finish();
    s.visits = tr.visits();
    return s;
  }

  const std::vector<SaddleBox>& boxes() const { return boxes_; }
  Mat frame() const {
    Mat F(2, 2);
    F.col(0) = u1_;
    F.col(1) = u2_;
    return F;
  }

 private:
  const MorseDatum& d_;
  int x_;
  const Neighborhood* region_;
  const FlowConfig& cfg_;
  std::vector<SaddleBox> boxes_;
  std::vector<flow::Target> targets_;
  double r_, r0_, k1_ = 1, k2_ = 1;
  Vec u1_, u2_;
};

constexpr double kBisectWidth = 1e-10;

struct Root {
  double theta;
  int side_sign;
  Shot near;         // shot on the low side of the bracket, within bisection width
  int visit;
};

void bisect_root(const Shooter& sh, int box, double a, Shot A, double b, Shot B, int k, std::vector<Root>& roots) {
  int side_a = A.to(box)[k].side;
  int side_b = B.to(box)[k].side;
  while (b - a > kBisectWidth) {
    double m = 0.5 * (a + b);
    Shot M = sh.shoot(m);
    auto vm = M.to(box);
    auto va = A.to(box);
    bool same_hist = int(vm.size()) > k;
    for (int i = 0; same_hist && i < k; ++i)
      same_hist = vm[i].branch == va[i].branch && vm[i].side == va[i].side;
    if (!same_hist || vm[k].branch != va[k].branch || vm[k].side == 0) {
      // the midpoint sits on the stable manifold to working precision
      a = m;
      A = M;
      if (!same_hist || int(vm.size()) <= k || !vm[k].sectioned) break;
      break;
    }
    if (vm[k].side == side_a) {
      a = m;
      A = std::move(M);
    } else {
      b = m;
      B = std::move(M);
    }
  }
  (void)side_b;
  roots.push_back({0.5 * (a + b), B.to(box).size() > std::size_t(k) ? B.to(box)[k].side : -side_a, A, k});
}

void scan_interval(const Shooter& sh, int box, double a, const Shot& A, double b, const Shot& B, int depth,
                   std::vector<Root>& roots) {
  int k = 0;
  Compare c = compare_visits(A.to(box), B.to(box), k);
  if (c == Compare::equal) return;
  if (c == Compare::bracket) {
    bisect_root(sh, box, a, A, b, B, k, roots);
    return;
  }
  if (depth >= 12) return;
  double m = 0.5 * (a + b);
  Shot M = sh.shoot(m);
  scan_interval(sh, box, a, A, m, M, depth + 1, roots);
  scan_interval(sh, box, m, M, b, B, depth + 1, roots);
}

double section_u(const Shooter& sh, int box, double th, int k, const std::vector<Visit>& ref, bool& ok) {
  Shot s = sh.shoot(th);
  auto v = s.to(box);
  ok = int(v.size()) > k && v[k].sectioned && v[k].branch == ref[k].branch;
  return ok ? v[k].u_section : 0.0;
}

void add_witness(std::map<int, ConnectionCount>& acc, int x, int y, const Witness& w) {
  auto& c = acc[y];
  c.x = x;
  c.y = y;
  c.n += w.sign;
  c.witnesses.push_back(w);
}

}  // namespace

std::vector<ConnectionCount> connections_from(const MorseDatum& d, int x, const Neighborhood* region,
                                              const FlowConfig& cfg) {
  const auto& cx = d.points()[x];
  const int n = d.dim();
  std::map<int, ConnectionCount> acc;
  if (cx.index == 0) return {};
  if (n > 2) throw CountingFailure("connection counting is supported for dimension at most 2");
  auto targets = flow::targets_of(d);

  if (cx.index == 1) {
    double r = cfg.r_launch * d.domain().scale();
    Vec e1 = cx.eigenvectors.col(0);
    for (int s : {-1, 1}) {
      Vec q = cx.x + s * r * e1;
      StopRule st;
      st.t_max = cfg.t_max;
      st.region = region;
      Orbit o = flow::integrate(d.gradient(), targets, q, 0.0, Direction::forward, st, cfg);
      if (o.status == Terminal::exited) continue;
      if (o.status != Terminal::converged) {
        throw CountingFailure("unstable branch of " + describe(d, x) + " did not converge (" +
                              flow::to_string(o.status) + (o.failure.empty() ? "" : ": " + o.failure) + ")");
      }
      int z = o.target;
      if (z == x) throw CountingFailure("unstable branch of " + describe(d, x) + " returned to its source");
      if (d.points()[z].index >= 1)
        throw NotMorseSmale("connecting orbit between equal-index points " + describe(d, x) + " and " +
                                describe(d, z),
                            x, z);
      Mat F(n, 1);
      F.col(0) = e1;
      auto fr = flow::transport_frame(d.gradient(), q, F, 0.0, o.t, cfg);
      if (!fr.ok) throw CountingFailure("frame transport failed: " + fr.failure);
      int orient = cx.orientation * d.points()[z].orientation;
      Witness w;
      w.param = s;
      w.sign = orient * fiber_first_sign(d, z, fr.end, fr.frame);
      w.side_sign = orient * s;
      w.launch = q;
      w.near_target = o.end;
      if (w.sign != w.side_sign)
        throw CountingFailure("sign cross-check failed on branch of " + describe(d, x) + " to " + describe(d, z));
      add_witness(acc, x, z, w);
    }
  } else {
    Shooter sh(d, x, region, cfg);
    const int N = cfg.circle_samples;
    std::vector<double> th(N + 1);
    for (int i = 0; i <= N; ++i) th[i] = sh.sample_angle(2 * M_PI * (i + 0.5) / N);
    auto shots = par::map_indexed<Shot>(N, [&](std::size_t i) { return sh.shoot(th[i]); });
    for (const auto& s : shots)
      if (s.orbit.status == Terminal::failed || s.orbit.status == Terminal::time_capped)
        throw CountingFailure("orbit from " + describe(d, x) + " did not settle (" + flow::to_string(s.orbit.status) +
                              ")");
    shots.push_back(shots[0]);
    const auto& boxes = sh.boxes();
    for (int b = 0; b < int(boxes.size()); ++b) {
      int y = boxes[b].point;
      if (region && !region->contains(d.points()[y].x)) continue;
      std::vector<Root> roots;
      // samples lying on a stable manifold to working precision cannot bracket; scan across them
      std::vector<int> keep;
      for (int i = 0; i < N; ++i) {
        bool on = false;
        for (const auto& v : shots[i].to(b)) on = on || v.side == 0;
        if (!on) keep.push_back(i);
      }
      for (std::size_t j = 0; j < keep.size(); ++j) {
        int i = keep[j], k = j + 1 < keep.size() ? keep[j + 1] : keep[0] + N;
        double tk = k < N ? th[k] : th[k - N] + 2 * M_PI;
        scan_interval(sh, b, th[i], shots[i], tk, shots[k % N], 0, roots);
      }
      std::sort(roots.begin(), roots.end(), [](const Root& p, const Root& q) { return p.theta < q.theta; });
      for (std::size_t r = 1; r < roots.size(); ++r)
        if (roots[r].theta - roots[r - 1].theta < 10 * kBisectWidth)
          throw CountingFailure("two orbits from " + describe(d, x) + " to " + describe(d, y) +
                                " are closer than the shooting resolution; orbits may be missed");
      for (std::size_t r = 0; r < roots.size(); ++r) {
        const Root& rt = roots[r];
        auto va = rt.near.to(b);
        const Visit& v = va[rt.visit];
        if (!v.sectioned) throw CountingFailure("witness orbit never reached the section of " + describe(d, y));
        auto fr = flow::transport_frame(d.gradient(), sh.launch(rt.theta), sh.frame(), 0.0, v.t_section, cfg);
        if (!fr.ok) throw CountingFailure("frame transport failed: " + fr.failure);
        int orient = cx.orientation * d.points()[y].orientation;
        Witness w;
        w.param = rt.theta;
        w.sign = orient * fiber_first_sign(d, y, fr.end, fr.frame);
        w.side_sign = orient * rt.side_sign;
        w.launch = sh.launch(rt.theta);
        w.near_target = fr.end;
        // shrink the probe until both shots stay on the witness branch
        bool ok1 = false, ok2 = false;
        double eta = 1e-6, up = 0, um = 0;
        for (; eta >= 1e-12 && !(ok1 && ok2); eta *= 0.1) {
          up = section_u(sh, b, rt.theta + eta, rt.visit, va, ok1);
          um = section_u(sh, b, rt.theta - eta, rt.visit, va, ok2);
        }
        eta *= 10;
        w.slope = (ok1 && ok2) ? (up - um) / (2 * eta) : std::numeric_limits<double>::quiet_NaN();
        if (ok1 && ok2 && std::abs(w.slope) < cfg.tol_transv)
          throw NonTransverse("non-transverse connection from " + describe(d, x) + " to " + describe(d, y) +
                              "; perturb the datum");
        if (w.sign != w.side_sign)
          throw CountingFailure("sign cross-check failed on orbit from " + describe(d, x) + " to " + describe(d, y));
        add_witness(acc, x, y, w);
      }
    }
  }
  std::vector<ConnectionCount> out;
  for (auto& [y, c] : acc) out.push_back(std::move(c));
  return out;
}

ConnectionCount count_connections(const MorseDatum& d, int x, int y, const Neighborhood* region,
                                  const FlowConfig& cfg) {
  if (d.points()[x].index != d.points()[y].index + 1)
    throw std::invalid_argument("count_connections requires index(x) = index(y) + 1");
  for (auto& c : connections_from(d, x, region, cfg))
    if (c.y == y) return c;
  ConnectionCount c;
  c.x = x;
  c.y = y;
  return c;
}

BoundaryResult boundary_operator(const MorseDatum& d, const Neighborhood* region, const FlowConfig& cfg) {
  BoundaryResult br;
  const int n = d.dim();
  auto pts = points_in(d, region);
  br.points.assign(n + 1, {});
  std::vector<int> pos(d.points().size(), -1);
  for (int i : pts) {
    int k = d.points()[i].index;
    pos[i] = int(br.points[k].size());
    br.points[k].push_back(i);
  }
  std::vector<std::vector<std::string>> gens(n + 1);
  for (int k = 0; k <= n; ++k)
    for (int i : br.points[k]) gens[k].push_back(d.points()[i].label);
  br.complex = zalg::GradedComplex::zero(-1, gens);
  for (int k = 1; k <= n; ++k) {
    for (int i : br.points[k]) {
      for (auto& c : connections_from(d, i, region, cfg)) {
        if (pos[c.y] < 0) continue;
        br.complex.differential[k](pos[c.y], pos[i]) += c.n;
        br.counts.push_back(std::move(c));
      }
    }
  }
  auto sq = zalg::check_square_zero(br.complex);
  if (!sq.holds) {
    int k = sq.degree;
    int x = br.points[k][sq.col], z = br.points[k - 2][sq.row];
    throw BoundarySquareFailure("boundary does not square to zero: broken-orbit count from " + describe(d, x) +
                                    " to " + describe(d, z) + " is nonzero (missed orbit?)",
                                x, z);
  }
  return br;
}

MorseSmaleReport validate_morse_smale(const MorseDatum& d, const Neighborhood* region, const FlowConfig& cfg) {
  MorseSmaleReport rep;
  if (d.dim() == 1) return rep;
  auto pts = points_in(d, region);
  auto targets = flow::targets_of(d);
  double r = cfg.r_launch * d.domain().scale();
  for (int x : pts) {
    const auto& cx = d.points()[x];
    if (cx.index != d.dim() - 1 || cx.index == 0) continue;
    for (int s : {-1, 1}) {
      StopRule st;
      st.t_max = cfg.t_max;
      st.region = region;
      Orbit o = flow::integrate(d.gradient(), targets, cx.x + s * r * cx.eigenvectors.col(0), 0.0,
                                Direction::forward, st, cfg);
      if (o.status == Terminal::converged && d.points()[o.target].index >= cx.index && o.target != x) {
        rep.pass = false;
        rep.offending.push_back({x, o.target});
      }
    }
  }
  if (!rep.pass) {
    std::ostringstream os;
    os << "equal-index connections:";
    for (auto [a, b] : rep.offending) os << " " << describe(d, a) << " -> " << describe(d, b) << ";";
    rep.message = os.str();
    return rep;
  }
  double min_slope = std::numeric_limits<double>::infinity();
  try {
    for (int x : pts) {
      if (d.points()[x].index != 2) continue;
      for (const auto& c : connections_from(d, x, region, cfg))
        for (const auto& w : c.witnesses)
          if (std::isfinite(w.slope)) min_slope = std::min(min_slope, std::abs(w.slope));
    }
  } catch (const NonTransverse& e) {
    rep.pass = false;
    rep.message = e.what();
  } catch (const CountingFailure& e) {
    rep.pass = false;
    rep.message = e.what();
  }
  rep.min_slope = std::isfinite(min_slope) ? min_slope : 0.0;
  return rep;
}

}  // namespace mcf::moduli
