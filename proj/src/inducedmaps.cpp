#include "mcf/inducedmaps.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <sstream>

#include "mcf/parallel.hpp"

namespace mcf::induced {

using flow::Direction;
using flow::Orbit;
using flow::StopRule;
using flow::Terminal;
using moduli::Compare;
using moduli::SaddleBox;
using moduli::Visit;
using moduli::VisitTracker;

namespace {

int sgn(double v) { return v > 0 ? 1 : (v < 0 ? -1 : 0); }

std::string label(const MorseDatum& d, int i) {
  const auto& c = d.points()[i];
  std::ostringstream os;
  os.precision(6);
  os << c.label << "(";
  for (int j = 0; j < c.x.size(); ++j) os << (j ? ", " : "") << c.x[j];
  os << ")[index " << c.index << "]";
  return os.str();
}

struct Landing {
  Orbit orbit;
  std::vector<Visit> visits;
  std::vector<Visit> to(int box) const {
    std::vector<Visit> out;
    for (const auto& v : visits)
      if (v.box == box) out.push_back(v);
    return out;
  }
};

struct Root {
  double u;
  double u_near;       // parameter whose landing reaches the section of y
  Landing near;
  int visit = -1;      // index into near.to(box)
  int side = 0;        // side rule at the larger parameter
  bool exact = false;  // the sample itself lands on y
};

class Counter {
 public:
  Counter(const MapChain& h, const Pair& d, const FlowConfig& cfg)
      : h_(h), d_(d), A_(*d.a), B_(*d.b), cfg_(cfg), tA_(flow::targets_of(A_)), tB_(flow::targets_of(B_)),
        boxes_(moduli::saddle_boxes(B_, cfg)) {}

  std::vector<MapCount> from(int x) {
    int k = A_.points()[x].index;
    if (k == 0) return from_point(x);
    if (k == A_.dim() && k == B_.dim()) return from_preimages(x);
    if (k > B_.dim()) return {};
    if (k == 1) return from_branches(x);
    throw moduli::CountingFailure("intersection counting not supported for this dimension combination");
  }

 private:
  Landing land(const Vec& q) const {
    Landing L;
    VisitTracker tr(B_.domain(), boxes_);
    StopRule st;
    st.t_max = cfg_.t_max;
    st.region = d_.nb;
    st.extra = [&](double t, const Vec& p) {
      tr.step(t, p);
      return false;
    };
    L.orbit = flow::integrate(B_.gradient(), tB_, q, 0.0, Direction::forward, st, cfg_);
    tr.finish();
    L.visits = tr.visits();
    return L;
  }

  int orient(int x, int y) const { return A_.points()[x].orientation * B_.points()[y].orientation; }

  static void add(std::map<int, MapCount>& acc, int x, int y, const MapWitness& w) {
    auto& c = acc[y];
    c.x = x;
    c.y = y;
    c.n += w.sign;
    c.witnesses.push_back(w);
  }

  static std::vector<MapCount> collect(std::map<int, MapCount>& acc) {
    std::vector<MapCount> out;
    for (auto& [y, c] : acc) {
      std::sort(c.witnesses.begin(), c.witnesses.end(),
                [](const MapWitness& a, const MapWitness& b) { return a.param < b.param; });
      out.push_back(std::move(c));
    }
    return out;
  }

  std::vector<MapCount> from_point(int x) {
    std::map<int, MapCount> acc;
    const Vec& px = A_.points()[x].x;
    Vec q = h_.apply(px);
    Landing L = land(q);
    if (L.orbit.status == Terminal::exited) return {};
    if (L.orbit.status != Terminal::converged)
      throw moduli::CountingFailure("image of " + label(A_, x) + " did not settle (" + flow::to_string(L.orbit.status) +
                                    ")");
    int z = L.orbit.target;
    if (B_.points()[z].index != 0)
      throw NonTransverseMap("image of " + label(A_, x) + " lies on the stable manifold of " + label(B_, z) +
                             "; perturb h");
    MapWitness w;
    w.param = px[0];
    w.sign = w.side_sign = orient(x, z);
    w.point = px;
    w.image = q;
    add(acc, x, z, w);
    return collect(acc);
  }

  std::vector<MapCount> from_preimages(int x) {
    std::map<int, MapCount> acc;
    const auto& cx = A_.points()[x];
    const int m = A_.dim();
    for (int y : moduli::points_in(B_, d_.nb)) {
      const auto& cy = B_.points()[y];
      if (cy.index != cx.index) continue;
      for (auto& path : h_.preimage_paths(cy.x)) {
        const Vec& p = path.front();
        if (d_.na && !d_.na->contains(p)) continue;
        StopRule st;
        st.t_max = cfg_.t_max;
        st.region = d_.na;
        Orbit o = flow::integrate(A_.gradient(), tA_, p, 0.0, Direction::backward, st, cfg_);
        if (o.status != Terminal::converged || o.target != x) continue;
        auto G = h_.push(path, Mat::Identity(m, m));
        if (!G) throw NonTransverseMap("differential of h degenerates at a preimage of " + label(B_, y) + "; perturb h");
        int s = sgn(G->determinant()) * sgn(cx.eigenvectors.determinant()) * sgn(cy.eigenvectors.determinant()) *
                orient(x, y);
        MapWitness w;
        w.param = p[0];
        w.sign = w.side_sign = s;
        w.point = p;
        w.image = path.back();
        add(acc, x, y, w);
      }
    }
    return collect(acc);
  }

  // ---- branch curve through a 1-dimensional unstable manifold ----

  Vec curve(double u) const {
    const Vec& px = A_.points()[cx_].x;
    if (std::abs(u) <= 1) return A_.domain().reduce(px + u * r_ * e1_);
    int s = u > 0 ? 1 : -1;
    Vec q = px + s * r_ * e1_;
    return A_.domain().reduce(flow::flow_time(A_.gradient(), q, 0, std::abs(u) - 1, cfg_));
  }

  Vec tangent(double u, const Vec& p) const {
    if (std::abs(u) <= 1) return e1_;
    Vec X;
    A_.gradient().eval(0, p, X);
    double n = X.norm();
    if (n == 0) return e1_;
    return (u > 0 ? 1.0 : -1.0) * X / n;
  }

  struct Sample {
    double u;
    Vec p, q;
    Landing L;
  };

  Sample sample(double u) const {
    Sample s;
    s.u = u;
    s.p = curve(u);
    s.q = h_.apply(s.p);
    s.L = land(s.q);
    return s;
  }

  std::vector<MapCount> from_branches(int x) {
    std::map<int, MapCount> acc;
    std::vector<int> ys;
    for (int y : moduli::points_in(B_, d_.nb))
      if (B_.points()[y].index == 1) ys.push_back(y);
    if (ys.empty()) return {};
    cx_ = x;
    const auto& cxp = A_.points()[x];
    e1_ = cxp.eigenvectors.col(0);
    r_ = cfg_.r_launch * A_.domain().scale();

    // parameters: segment through x, then both branches by flow time
    std::vector<double> us;
    for (int i = -8; i <= 8; ++i) us.push_back(i / 8.0);
    double arc = 0.01 * A_.domain().scale();
    for (int s : {-1, 1}) {
      StopRule st;
      st.t_max = cfg_.t_max;
      st.region = d_.na;
      st.record = true;
      Orbit o = flow::integrate(A_.gradient(), tA_, cxp.x + s * r_ * e1_, 0.0, Direction::forward, st, cfg_);
      if (o.status == Terminal::failed) throw moduli::CountingFailure("branch of " + label(A_, x) + ": " + o.failure);
      Vec last = o.xs.empty() ? o.start : o.xs.front();
      for (std::size_t i = 1; i < o.xs.size(); ++i) {
        bool end = i + 1 == o.xs.size();
        if (A_.domain().distance(last, o.xs[i]) >= arc || end) {
          // keep the last sample strictly inside the region
          double t = end ? 0.999 * o.ts[i] : o.ts[i];
          if (t > 0) us.push_back(s * (1 + t));
          last = o.xs[i];
        }
      }
    }
    std::sort(us.begin(), us.end());
    us.erase(std::unique(us.begin(), us.end()), us.end());

    auto samples = par::map_indexed<Sample>(us.size(), [&](std::size_t i) { return sample(us[i]); });
    for (auto& s : samples)
      if (s.L.orbit.status == Terminal::failed)
        throw moduli::CountingFailure("landing orbit failed: " + s.L.orbit.failure);

    // refine where consecutive images are far apart
    double spacing = 0.05 * B_.domain().scale();
    for (auto& b : boxes_) spacing = std::min(spacing, b.delta);
    spacing /= 4;
    for (int pass = 0; pass < 12; ++pass) {
      std::vector<double> extra;
      for (std::size_t i = 0; i + 1 < samples.size(); ++i)
        if (B_.domain().distance(samples[i].q, samples[i + 1].q) > spacing &&
            samples[i + 1].u - samples[i].u > 1e-9)
          extra.push_back(0.5 * (samples[i].u + samples[i + 1].u));
      if (extra.empty()) break;
      auto more = par::map_indexed<Sample>(extra.size(), [&](std::size_t i) { return sample(extra[i]); });
      for (auto& s : more) samples.push_back(std::move(s));
      std::sort(samples.begin(), samples.end(), [](const Sample& a, const Sample& b) { return a.u < b.u; });
    }

    for (int y : ys) {
      std::vector<Root> roots;
      if (B_.dim() == 1)
        roots_1d(samples, y, roots);
      else
        roots_2d(samples, y, roots);
      std::sort(roots.begin(), roots.end(), [](const Root& a, const Root& b) { return a.u < b.u; });
      for (std::size_t i = 0; i < roots.size(); ++i) {
        if (i > 0 && std::abs(roots[i].u - roots[i - 1].u) < 1e-9) continue;
        add(acc, x, y, witness(roots[i], y));
      }
    }
    return collect(acc);
  }

  // 1D target: y is a maximum and W^s(y) = {y}.
  double g1(const Vec& q, int y) const { return B_.domain().displacement(B_.points()[y].x, q)[0]; }

  void roots_1d(const std::vector<Sample>& s, int y, std::vector<Root>& roots) const {
    double lim = 0.25 * B_.domain().scale();
    for (std::size_t i = 0; i < s.size(); ++i) {
      double ga = g1(s[i].q, y);
      if (ga == 0) {
        Root r;
        r.u = r.u_near = s[i].u;
        r.exact = true;
        r.side = i + 1 < s.size() ? sgn(g1(s[i + 1].q, y)) : 0;
        roots.push_back(r);
        continue;
      }
      if (i + 1 == s.size()) break;
      double gb = g1(s[i + 1].q, y);
      if (gb == 0 || (ga < 0) == (gb < 0) || std::abs(ga) > lim || std::abs(gb) > lim) continue;
      double a = s[i].u, b = s[i + 1].u;
      while (b - a > 1e-10) {
        double m = 0.5 * (a + b);
        double gm = g1(h_.apply(curve(m)), y);
        if (gm == 0) {
          a = b = m;
          break;
        }
        if ((gm < 0) == (ga < 0))
          a = m;
        else
          b = m;
      }
      Root r;
      r.u = 0.5 * (a + b);
      r.u_near = r.u;
      r.side = sgn(gb);
      roots.push_back(r);
    }
  }

  int box_of(int y) const {
    for (int b = 0; b < int(boxes_.size()); ++b)
      if (boxes_[b].point == y) return b;
    return -1;
  }

  static bool on_target(const Landing& L, int y) { return L.orbit.status == Terminal::converged && L.orbit.target == y; }

  void roots_2d(const std::vector<Sample>& s, int y, std::vector<Root>& roots) const {
    int b = box_of(y);
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (on_target(s[i].L, y)) {
        Root r;
        r.u = r.u_near = s[i].u;
        r.near = s[i].L;
        r.exact = true;
        auto v = s[i].L.to(b);
        r.visit = int(v.size()) - 1;
        if (i + 1 < s.size()) {
          auto w = s[i + 1].L.to(b);
          if (r.visit >= 0 && int(w.size()) > r.visit) r.side = w[r.visit].side;
        }
        roots.push_back(r);
        continue;
      }
      if (i + 1 == s.size()) break;
      if (on_target(s[i + 1].L, y)) continue;
      scan(s[i].u, s[i].L, s[i + 1].u, s[i + 1].L, b, y, 0, roots);
    }
  }

  void scan(double a, const Landing& A, double bb, const Landing& B, int box, int y, int depth,
            std::vector<Root>& roots) const {
    int k = 0;
    Compare c = moduli::compare_visits(A.to(box), B.to(box), k);
    if (c == Compare::equal) return;
    if (c == Compare::bracket) {
      bisect(a, A, bb, B, box, y, k, roots);
      return;
    }
    if (depth >= 12) return;
    double m = 0.5 * (a + bb);
    Landing M = land(h_.apply(curve(m)));
    if (on_target(M, y)) {
      Root r;
      r.u = r.u_near = m;
      r.near = M;
      r.exact = true;
      r.visit = int(M.to(box).size()) - 1;
      auto w = B.to(box);
      if (r.visit >= 0 && int(w.size()) > r.visit) r.side = w[r.visit].side;
      roots.push_back(r);
      return;
    }
    scan(a, A, m, M, box, y, depth + 1, roots);
    scan(m, M, bb, B, box, y, depth + 1, roots);
  }

  void bisect(double a, Landing A, double b, Landing B, int box, int y, int k, std::vector<Root>& roots) const {
    int side_a = A.to(box)[k].side;
    Root r;
    r.exact = false;
    while (b - a > 1e-10) {
      double m = 0.5 * (a + b);
      Landing M = land(h_.apply(curve(m)));
      if (on_target(M, y)) {
        r.u = r.u_near = m;
        r.near = M;
        r.exact = true;
        r.visit = int(M.to(box).size()) - 1;
        r.side = -side_a;
        roots.push_back(r);
        return;
      }
      auto vm = M.to(box), va = A.to(box);
      bool same = int(vm.size()) > k && vm[k].branch == va[k].branch;
      for (int i = 0; same && i < k; ++i) same = vm[i].branch == va[i].branch && vm[i].side == va[i].side;
      if (!same || vm[k].side == 0) break;
      if (vm[k].side == side_a) {
        a = m;
        A = std::move(M);
      } else {
        b = m;
        B = std::move(M);
      }
    }
    r.u = 0.5 * (a + b);
    r.u_near = a;
    r.near = A;
    r.visit = k;
    r.side = -side_a;
    roots.push_back(r);
  }

  MapWitness witness(const Root& r, int y) const {
    const auto& cy = B_.points()[y];
    int o = orient(cx_, y);
    MapWitness w;
    w.param = r.u;
    Vec p = curve(r.u_near);
    auto path = h_.path(p);
    Mat T(A_.dim(), 1);
    T.col(0) = tangent(r.u_near, p);
    auto v = h_.push(path, T);
    if (!v) throw NonTransverseMap("differential of h degenerates along the unstable manifold of " + label(A_, cx_));
    w.point = p;
    w.image = path.back();
    const double eta = 1e-6;
    if (B_.dim() == 1) {
      w.sign = sgn((*v)(0, 0) * cy.eigenvectors(0, 0)) * o;
      w.side_sign = r.side * o;
      double gp = g1(h_.apply(curve(r.u + eta)), y), gm = g1(h_.apply(curve(r.u - eta)), y);
      w.slope = (gp - gm) / (2 * eta);
    } else {
      int box = box_of(y);
      double t_end = r.near.orbit.t;
      auto vis = r.near.to(box);
      if (!r.exact) {
        if (r.visit < 0 || r.visit >= int(vis.size()) || !vis[r.visit].sectioned)
          throw moduli::CountingFailure("witness orbit never reached the section of " + label(B_, y));
        t_end = vis[r.visit].t_section;
      }
      auto fr = flow::transport_frame(B_.gradient(), w.image, *v, 0.0, t_end, cfg_);
      if (!fr.ok) throw moduli::CountingFailure("frame transport failed: " + fr.failure);
      Vec a = cy.basis_inverse * fr.frame.col(0);
      w.sign = sgn(a[0]) * o;
      w.side_sign = r.side * o;
      auto sec = [&](double u, bool& ok) {
        Landing L = land(h_.apply(curve(u)));
        auto vv = L.to(box);
        int k = r.visit;
        ok = k >= 0 && int(vv.size()) > k && vv[k].sectioned;
        return ok ? vv[k].u_section : 0.0;
      };
      bool ok1 = false, ok2 = false;
      double up = sec(r.u + eta, ok1), um = sec(r.u - eta, ok2);
      w.slope = (ok1 && ok2) ? (up - um) / (2 * eta) : std::numeric_limits<double>::quiet_NaN();
    }
    if (std::isfinite(w.slope) && std::abs(w.slope) < cfg_.tol_transv)
      throw NonTransverseMap("non-transverse intersection from " + label(A_, cx_) + " to " + label(B_, y) +
                             "; perturb h");
    if (w.side_sign != 0 && w.sign != w.side_sign)
      throw moduli::CountingFailure("sign cross-check failed for the intersection from " + label(A_, cx_) + " to " +
                                    label(B_, y));
    return w;
  }

  const MapChain& h_;
  const Pair& d_;
  const MorseDatum& A_;
  const MorseDatum& B_;
  const FlowConfig& cfg_;
  std::vector<flow::Target> tA_, tB_;
  std::vector<SaddleBox> boxes_;
  int cx_ = -1;
  Vec e1_;
  double r_ = 0;
};

}  // namespace

std::vector<MapCount> map_counts_from(const MapChain& h, const Pair& d, int x, const FlowConfig& cfg) {
  if (d.a->dim() > 2 || d.b->dim() > 2) throw moduli::CountingFailure("intersection counting needs dimension <= 2");
  Counter c(h, d, cfg);
  return c.from(x);
}

MapCount count_map_intersections(const MapChain& h, const Pair& d, int x, int y, const FlowConfig& cfg) {
  if (d.a->points()[x].index != d.b->points()[y].index)
    throw std::invalid_argument("count_map_intersections requires |x| = |y|");
  for (auto& c : map_counts_from(h, d, x, cfg))
    if (c.y == y) return c;
  MapCount c;
  c.x = x;
  c.y = y;
  return c;
}

InducedMap induced_chain_map(const MapChain& h, const Pair& d, const BoundaryResult& ca, const BoundaryResult& cb,
                             const FlowConfig& cfg) {
  InducedMap out;
  out.map = zalg::GradedIntMap::zero(ca.complex, cb.complex);
  std::vector<int> pos_b(d.b->points().size(), -1);
  for (const auto& deg : cb.points)
    for (std::size_t i = 0; i < deg.size(); ++i) pos_b[deg[i]] = int(i);
  for (int k = 0; k < int(ca.points.size()); ++k)
    for (std::size_t j = 0; j < ca.points[k].size(); ++j) {
      int x = ca.points[k][j];
      for (auto& c : map_counts_from(h, d, x, cfg)) {
        if (k > cb.complex.top() || pos_b[c.y] < 0) continue;
        out.map.blocks[k](pos_b[c.y], int(j)) += c.n;
        out.counts.push_back(std::move(c));
      }
    }
  out.chain = zalg::verify_chain_map(out.map, ca.complex, cb.complex);
  if (!out.chain.holds) {
    std::string where;
    int k = out.chain.degree;
    if (k >= 0 && k < int(ca.points.size()) && out.chain.col >= 0 && out.chain.col < int(ca.points[k].size()))
      where = " (source generator " + d.a->points()[ca.points[k][out.chain.col]].label + ")";
    throw ChainMapFailure("induced map is not a chain map: " + out.chain.message + where +
                          "; a witness was missed or h is not transverse");
  }
  return out;
}

MapChain translated(const MapChain& h, const Vec& shift) {
  return h.then(std::make_shared<maps::TranslationStage>(h.target(), shift));
}

PerturbResult perturb_to_transverse(const MapChain& h, const Pair& d, const BoundaryResult& ca,
                                    const BoundaryResult& cb, const FlowConfig& cfg, const ConleyConfig& cc) {
  PerturbResult res;
  std::mt19937_64 rng(cc.seed ^ 0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> nd;
  const int m = h.target().dim;
  Vec v(m);
  for (int i = 0; i < m; ++i) v[i] = nd(rng);
  v.normalize();
  bool local = d.na || d.nb;
  std::optional<conley::FlowSide> sa, sb;
  if (local) {
    sa = conley::FlowSide::gradient(*d.a, d.na);
    sb = conley::FlowSide::gradient(*d.b, d.nb);
  }
  for (int k = -1; k < cc.perturb_attempts; ++k) {
    PerturbAttempt at;
    at.eps = k < 0 ? 0.0 : cc.perturb_eps * std::ldexp(1.0, -k);
    at.v = v;
    MapChain hk = at.eps == 0 ? h : translated(h, at.eps * v);
    try {
      InducedMap im = induced_chain_map(hk, d, ca, cb, cfg);
      if (local && at.eps > 0) {
        auto fam = [&](double s) { return translated(h, s * at.eps * v); };
        auto scan = conley::scan_map_family(fam, *sa, *sb, 0.0, 1.0, cc.lambda_grid, cfg, cc);
        if (!scan.isolated) throw conley::IsolationFailure("perturbation breaks isolation: " + scan.message);
      }
      at.accepted = true;
      res.attempts.push_back(at);
      res.map = hk;
      res.eps = at.eps;
      res.v = v;
      res.induced = std::move(im);
      return res;
    } catch (const NonTransverseMap& e) {
      at.reason = e.what();
    } catch (const ChainMapFailure& e) {
      at.reason = e.what();
    } catch (const moduli::CountingFailure& e) {
      at.reason = e.what();
    } catch (const conley::IsolationFailure& e) {
      at.reason = e.what();
    }
    res.attempts.push_back(at);
  }
  std::string last = res.attempts.empty() ? "" : res.attempts.back().reason;
  throw NonTransverseMap("no transverse perturbation accepted after " + std::to_string(cc.perturb_attempts) +
                         " attempts; last: " + last);
}

ComposeReport compose_with_flow(const MapChain& h_ba, const MapChain& h_cb, double R, const MorseDatum& A,
                                const MorseDatum& B, const MorseDatum& C, const BoundaryResult& ca,
                                const BoundaryResult& cb, const BoundaryResult& cc_, const Neighborhood* na,
                                const Neighborhood* nb, const Neighborhood* nc, const FlowConfig& cfg,
                                const ConleyConfig& cc) {
  ComposeReport rep;
  Pair ab{&A, &B, na, nb}, bc{&B, &C, nb, nc}, ac{&A, &C, na, nc};
  rep.first = perturb_to_transverse(h_ba, ab, ca, cb, cfg, cc).induced;
  rep.second = perturb_to_transverse(h_cb, bc, cb, cc_, cfg, cc).induced;
  auto through = [&](double r) {
    if (r == 0) return h_ba.then(h_cb);
    return h_ba.then(std::make_shared<maps::FlowStage>(B.gradient_ptr(), 0.0, r, cfg)).then(h_cb);
  };
  if (na && nc) {
    auto scan = conley::scan_map_family(through, conley::FlowSide::gradient(A, na), conley::FlowSide::gradient(C, nc),
                                        0.0, cc.r_max, cc.r_grid, cfg, cc);
    rep.hypothesis_ok = scan.isolated;
    rep.isolation = std::move(scan);
  }
  rep.composite_zero = perturb_to_transverse(through(0), ac, ca, cc_, cfg, cc).induced;
  rep.composite = perturb_to_transverse(through(R), ac, ca, cc_, cfg, cc).induced;
  rep.product = zalg::compose(rep.second.map, rep.first.map);
  rep.product_equals_zero = zalg::equal_on_homology(rep.product, rep.composite_zero.map, ca.complex, cc_.complex);
  rep.composite_equals_zero =
      zalg::equal_on_homology(rep.composite.map, rep.composite_zero.map, ca.complex, cc_.complex);
  rep.product_equals_composite = zalg::equal_on_homology(rep.product, rep.composite.map, ca.complex, cc_.complex);
  std::ostringstream os;
  if (!rep.hypothesis_ok) {
    os << "functoriality hypothesis violated: " << rep.isolation->message;
  } else {
    os << "composite and product " << (rep.product_equals_composite ? "agree" : "differ") << " on homology";
  }
  rep.message = os.str();
  return rep;
}

HomotopyReport homotopy_check(const std::function<MapChain(double)>& family, const Pair& d, const BoundaryResult& ca,
                              const BoundaryResult& cb, const FlowConfig& cfg, const ConleyConfig& cc) {
  HomotopyReport rep;
  if (d.na || d.nb) {
    auto scan = conley::scan_map_family(family, conley::FlowSide::gradient(*d.a, d.na),
                                        conley::FlowSide::gradient(*d.b, d.nb), 0.0, 1.0, cc.lambda_grid, cfg, cc);
    rep.hypothesis_ok = scan.isolated;
    rep.isolation = std::move(scan);
  }
  rep.h0 = perturb_to_transverse(family(0.0), d, ca, cb, cfg, cc).induced;
  rep.h1 = perturb_to_transverse(family(1.0), d, ca, cb, cfg, cc).induced;
  rep.equal_on_homology = zalg::equal_on_homology(rep.h0.map, rep.h1.map, ca.complex, cb.complex);
  if (!rep.hypothesis_ok)
    rep.message = "homotopy is not isolated: " + rep.isolation->message;
  else
    rep.message = rep.equal_on_homology ? "induced maps agree on homology" : "induced maps differ on homology";
  return rep;
}

ContinuationResult continuation_map(const MorseDatum& A, const MorseDatum& B, const Neighborhood* region,
                                    double t_switch, const BoundaryResult& ca, const BoundaryResult& cb,
                                    const FlowConfig& cfg, const ConleyConfig& cc) {
  ContinuationResult res;
  if (A.domain().kind != B.domain().kind || A.dim() != B.dim())
    throw std::invalid_argument("continuation requires data on the same domain");
  if (region) {
    res.isolation = conley::scan_gradient_homotopy(A.field(), B.field(), A.metric(), *region, cfg, cc);
    if (!res.isolation.isolated) throw conley::IsolationFailure("continuation not defined: " + res.isolation.message);
  } else {
    res.isolation.message = "no region: the domain is compact and the homotopy is isolated";
  }
  auto X = std::make_shared<flow::InterpolatedGradientField>(A.field(), B.field(), A.metric(), t_switch);
  auto h = MapChain::of(std::make_shared<maps::FlowStage>(X, 0.0, t_switch, cfg));
  res.map = induced_chain_map(h, Pair{&A, &B, region, region}, ca, cb, cfg);
  return res;
}

}  // namespace mcf::induced
