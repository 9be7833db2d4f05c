#include "mcf/conley.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "mcf/inducedmaps.hpp"
#include "mcf/parallel.hpp"

namespace mcf::conley {

using flow::Direction;
using flow::Orbit;
using flow::StopRule;
using flow::Terminal;

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::certified: return "certified";
    case Verdict::refuted: return "refuted";
    case Verdict::inconclusive: return "inconclusive";
  }
  return "?";
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string fmt(const Vec& p) {
  std::ostringstream os;
  os.precision(6);
  os << "(";
  for (int i = 0; i < p.size(); ++i) os << (i ? ", " : "") << p[i];
  os << ")";
  return os.str();
}

Orbit run(const flow::VectorField& X, const std::vector<flow::Target>& tg, const Vec& p, Direction dir,
          const Neighborhood* N, double t_max, const FlowConfig& fc, bool margin = false, bool record = false) {
  StopRule st;
  st.t_max = t_max;
  st.region = N;
  st.track_margin = margin;
  st.record = record;
  return flow::integrate(X, tg, p, 0.0, dir, st, fc);
}

bool stays(const Orbit& o) { return o.status == Terminal::converged || o.status == Terminal::time_capped; }

}  // namespace

// ---------------------------------------------------------------------------
// isolating neighborhoods

IsolationCertificate verify_isolating_neighborhood(const flow::VectorField& X, const Neighborhood& N,
                                                   const FlowConfig& fc, const ConleyConfig& cc) {
  IsolationCertificate c;
  const double spacing = cc.grid_spacing * N.scale();
  if (N.is_whole_torus()) {
    // closed manifold: every orbit stays
    c.s_samples = N.grid(spacing);
    c.grid_points = int(c.s_samples.size());
    c.verdict = Verdict::certified;
    c.message = "whole torus: empty boundary";
    return c;
  }
  c.equilibria = flow::find_equilibria(X, N, fc);
  auto tg = flow::targets_of(c.equilibria);

  auto mesh = N.boundary_mesh(cc.mesh_spacing * N.scale());
  c.mesh_points = int(mesh.size());
  // 0 leaves, 1 stays (converges), 2 undecided
  auto cls = par::map_indexed<std::array<int, 2>>(mesh.size(), [&](std::size_t i) {
    std::array<int, 2> r{};
    int j = 0;
    for (Direction d : {Direction::forward, Direction::backward}) {
      Orbit o = run(X, tg, mesh[i], d, &N, fc.t_max, fc);
      r[j++] = o.status == Terminal::exited ? 0 : (o.status == Terminal::converged ? 1 : 2);
    }
    return r;
  });
  for (std::size_t i = 0; i < mesh.size(); ++i) {
    auto [f, b] = cls[i];
    if (f == 0 || b == 0) continue;
    if (f == 1 && b == 1)
      c.offending.push_back(mesh[i]);
    else
      c.undecided.push_back(mesh[i]);
  }

  auto grid = N.grid(spacing);
  c.grid_points = int(grid.size());
  auto inside = par::map_indexed<char>(grid.size(), [&](std::size_t i) -> char {
    for (Direction d : {Direction::forward, Direction::backward})
      if (!stays(run(X, tg, grid[i], d, &N, cc.t_invariant, fc))) return 0;
    return 1;
  });
  for (std::size_t i = 0; i < grid.size(); ++i)
    if (inside[i]) c.s_samples.push_back(grid[i]);
  for (const auto& e : c.equilibria) c.s_samples.push_back(e);
  for (const auto& p : c.s_samples) {
    double m = N.margin(p);
    c.min_s_margin = std::min(c.min_s_margin, m);
    if (m <= cc.margin_int) c.offending.push_back(p);
  }

  std::ostringstream os;
  if (!c.offending.empty()) {
    c.verdict = Verdict::refuted;
    os << "invariant set meets the boundary near " << fmt(c.offending.front()) << " (" << c.offending.size()
       << " offending samples)";
  } else if (!c.undecided.empty()) {
    c.verdict = Verdict::inconclusive;
    os << c.undecided.size() << " boundary points undecided at the time cap near " << fmt(c.undecided.front())
       << "; increase t_max";
  } else {
    c.verdict = Verdict::certified;
    os << "certified: " << c.mesh_points << " boundary points leave, " << c.s_samples.size()
       << " invariant samples, min margin " << (c.s_samples.empty() ? kInf : c.min_s_margin);
  }
  c.message = os.str();
  return c;
}

// ---------------------------------------------------------------------------
// unstable sets and isolated maps

FlowSide FlowSide::gradient(const MorseDatum& d, const Neighborhood* N) {
  FlowSide s;
  s.field = d.gradient_ptr();
  s.datum = &d;
  s.targets = flow::targets_of(d);
  if (!N) {
    s.owned = std::make_shared<Neighborhood>(Neighborhood::whole(d.domain()));
    N = s.owned.get();
  }
  s.region = N;
  return s;
}

FlowSide FlowSide::general(std::shared_ptr<const flow::VectorField> X, const Neighborhood* N, const FlowConfig& fc) {
  FlowSide s;
  if (!N) {
    s.owned = std::make_shared<Neighborhood>(Neighborhood::whole(X->domain()));
    N = s.owned.get();
  }
  s.region = N;
  s.targets = flow::targets_of(flow::find_equilibria(*X, *N, fc));
  s.field = std::move(X);
  return s;
}

std::vector<SideSample> sample_unstable_set(const FlowSide& s, const FlowConfig& fc, const ConleyConfig& cc) {
  const Neighborhood& N = *s.region;
  const double spacing = cc.grid_spacing * N.scale();
  std::vector<SideSample> out;
  for (const auto& t : s.targets)
    if (N.contains(t.x)) out.push_back({t.x, N.margin(t.x)});

  auto grid = N.grid(spacing);
  double horizon = s.datum ? fc.t_max : cc.t_invariant;
  auto back = par::map_indexed<double>(grid.size(), [&](std::size_t i) {
    Orbit o = run(*s.field, s.targets, grid[i], Direction::backward, &N, horizon, fc, true);
    bool keep = s.datum ? o.status == Terminal::converged : stays(o);
    return keep ? std::min(o.min_margin, N.margin(grid[i])) : -1.0;
  });
  for (std::size_t i = 0; i < grid.size(); ++i)
    if (back[i] >= 0) out.push_back({grid[i], back[i]});

  // one-dimensional unstable manifolds are thin and missed by the grid
  if (s.datum) {
    for (int x : moduli::points_in(*s.datum, &N)) {
      const auto& c = s.datum->points()[x];
      if (c.index != 1) continue;
      double r = fc.r_launch * s.datum->domain().scale();
      for (int sg : {-1, 1}) {
        Vec p0 = s.datum->domain().reduce(c.x + sg * r * c.eigenvectors.col(0));
        Orbit o = run(*s.field, s.targets, p0, Direction::forward, &N, fc.t_max, fc, false, true);
        double m = N.margin(c.x);
        Vec last = c.x;
        for (const auto& q : o.xs) {
          double mq = N.margin(q);
          if (mq < 0) break;
          m = std::min(m, mq);
          if (s.datum->domain().distance(last, q) >= spacing) {
            out.push_back({q, m});
            last = q;
          }
        }
      }
    }
  }
  return out;
}

double forward_margin(const FlowSide& s, const Vec& q, const FlowConfig& fc, const ConleyConfig& cc) {
  const Neighborhood& N = *s.region;
  double m0 = N.margin(q);
  if (m0 < 0) return -1.0;
  Orbit o = run(*s.field, s.targets, q, Direction::forward, &N, s.datum ? fc.t_max : cc.t_invariant, fc, true);
  bool keep = s.datum ? o.status == Terminal::converged : stays(o);
  if (!keep) return -1.0;
  return std::min(m0, o.min_margin);
}

IsolatedMapReport verify_isolated_map(const maps::MapChain& h, const FlowSide& a, const FlowSide& b,
                                      const FlowConfig& fc, const ConleyConfig& cc) {
  IsolatedMapReport rep;
  auto samples = sample_unstable_set(a, fc, cc);
  rep.samples = int(samples.size());
  auto d = par::map_indexed<double>(samples.size(), [&](std::size_t i) {
    double fm = forward_margin(b, h.apply(samples[i].p), fc, cc);
    return fm < 0 ? -1.0 : std::min(fm, samples[i].back_margin);
  });
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (d[i] < 0) continue;
    rep.s_h.push_back(samples[i].p);
    rep.min_margin = std::min(rep.min_margin, d[i]);
    if (d[i] <= cc.margin_int) rep.offending.push_back(samples[i].p);
  }
  std::ostringstream os;
  if (!rep.offending.empty()) {
    rep.verdict = Verdict::refuted;
    os << "map not isolated: orbit through " << fmt(rep.offending.front()) << " reaches within " << rep.min_margin
       << " of the boundary";
  } else {
    rep.verdict = Verdict::certified;
    os << "isolated: " << rep.s_h.size() << " of " << rep.samples << " samples in S_h";
    if (!rep.s_h.empty()) os << ", min margin " << rep.min_margin;
  }
  rep.message = os.str();
  return rep;
}

FamilyScan scan_map_family(const std::function<maps::MapChain(double)>& h, const FlowSide& a, const FlowSide& b,
                           double s0, double s1, int n, const FlowConfig& fc, const ConleyConfig& cc) {
  FamilyScan scan;
  n = std::max(n, 2);
  auto samples = sample_unstable_set(a, fc, cc);
  const std::size_t P = samples.size();
  for (int i = 0; i < n; ++i) scan.grid.push_back(s0 + (s1 - s0) * i / (n - 1));
  std::vector<maps::MapChain> chains;
  for (double s : scan.grid) chains.push_back(h(s));

  auto D = [&](const maps::MapChain& c, std::size_t j) {
    double fm = forward_margin(b, c.apply(samples[j].p), fc, cc);
    return fm < 0 ? -1.0 : std::min(fm, samples[j].back_margin);
  };
  auto vals = par::map_indexed<double>(std::size_t(n) * P, [&](std::size_t k) { return D(chains[k / P], k % P); });

  scan.worst.assign(n, kInf);
  std::optional<double> first;
  double lo = 0, hi = 0;
  auto note = [&](double s, double l, double u) {
    if (!first || s < *first) {
      first = s;
      lo = l;
      hi = u;
    }
  };
  for (int i = 0; i < n; ++i)
    for (std::size_t j = 0; j < P; ++j) {
      double v = vals[i * P + j];
      if (v < 0) continue;
      scan.worst[i] = std::min(scan.worst[i], v);
      if (v <= cc.margin_int) note(scan.grid[i], scan.grid[i], scan.grid[i]);
    }

  // sign changes of D_p between grid values: a violation only when the margin
  // tends to zero, not when the orbit jumps across a stable manifold
  struct Change {
    int i;
    std::size_t j;
    double pos;
  };
  std::vector<Change> changes;
  for (int i = 0; i + 1 < n; ++i)
    for (std::size_t j = 0; j < P; ++j) {
      double u = vals[i * P + j], v = vals[(i + 1) * P + j];
      if ((u >= 0) != (v >= 0)) changes.push_back({i, j, std::max(u, v)});
    }
  std::sort(changes.begin(), changes.end(), [](const Change& x, const Change& y) {
    return x.pos != y.pos ? x.pos < y.pos : (x.i != y.i ? x.i < y.i : x.j < y.j);
  });
  if (changes.size() > 64) changes.resize(64);
  auto bis = par::map_indexed<std::array<double, 3>>(changes.size(), [&](std::size_t k) {
    const auto& ch = changes[k];
    double a0 = scan.grid[ch.i], b0 = scan.grid[ch.i + 1];
    double va = vals[ch.i * P + ch.j], vb = vals[(ch.i + 1) * P + ch.j];
    bool a_in = va >= 0;
    double tol = 1e-10 * std::max(1.0, std::abs(s1 - s0));
    while (b0 - a0 > tol) {
      double m = 0.5 * (a0 + b0);
      double vm = D(h(m), ch.j);
      if ((vm >= 0) == a_in) {
        a0 = m;
        va = vm;
      } else {
        b0 = m;
        vb = vm;
      }
    }
    return std::array<double, 3>{a0, b0, a_in ? va : vb};
  });
  for (auto& r : bis)
    if (r[2] <= cc.margin_int) note(0.5 * (r[0] + r[1]), r[0], r[1]);

  std::ostringstream os;
  if (first) {
    scan.isolated = false;
    scan.violation = first;
    scan.bracket_lo = lo;
    scan.bracket_hi = hi;
    os.precision(10);
    os << "isolation lost at parameter " << *first << " (bracket [" << lo << ", " << hi << "])";
  } else {
    os << "isolated on [" << s0 << ", " << s1 << "] over " << n << " grid values";
  }
  scan.message = os.str();
  return scan;
}

// ---------------------------------------------------------------------------
// homotopies of gradient flows

namespace {

// Newton on the gradient of (1-lam) fa + lam fb, started at p.
std::optional<Vec> newton(const ScalarField& fa, const ScalarField& fb, double lam, Vec p) {
  const Domain& dom = fa.domain();
  for (int it = 0; it < 40; ++it) {
    double va, vb;
    Vec ga, gb;
    Mat ha, hb;
    fa.jet(p, va, ga, ha);
    fb.jet(p, vb, gb, hb);
    Vec g = (1 - lam) * ga + lam * gb;
    Mat H = (1 - lam) * ha + lam * hb;
    if (g.norm() < 1e-13) return dom.reduce(p);
    Eigen::FullPivLU<Mat> lu(H);
    if (!lu.isInvertible()) return std::nullopt;
    Vec step = lu.solve(g);
    if (step.norm() > 0.1 * dom.scale()) return std::nullopt;
    p -= step;
  }
  return std::nullopt;
}

ScalarField blend(const ScalarField& fa, const ScalarField& fb, double lam) {
  return fa.scaled(1 - lam).plus(fb.scaled(lam).expression());
}

}  // namespace

HomotopyScan scan_gradient_homotopy(const ScalarField& fa, const ScalarField& fb, const Metric& g,
                                    const Neighborhood& N, const FlowConfig& fc, const ConleyConfig& cc) {
  HomotopyScan scan;
  const int n = std::max(cc.lambda_grid, 2);
  std::vector<std::vector<Vec>> crit(n);
  for (int i = 0; i < n; ++i) {
    double lam = double(i) / (n - 1);
    scan.grid.push_back(lam);
    flow::GradientField X(blend(fa, fb, lam), g);
    auto cert = verify_isolating_neighborhood(X, N, fc, cc);
    scan.verdicts.push_back(cert.verdict);
    if (cert.verdict != Verdict::certified && !scan.crossing) {
      scan.isolated = false;
      scan.crossing = lam;
      scan.message = "not isolating at lambda=" + std::to_string(lam) + ": " + cert.message;
    }
    crit[i] = cert.equilibria;
  }
  if (N.is_whole_torus()) {
    if (scan.isolated) scan.message = "whole torus: every homotopy is isolated";
    return scan;
  }

  // follow critical points between grid values; a margin sign change is a
  // point crossing the boundary
  std::optional<double> cross;
  auto track = [&](Vec p, double l0, double l1) {
    const int sub = 20;
    double prev = l0;
    double mprev = N.margin(p);
    for (int k = 1; k <= sub; ++k) {
      double l = l0 + (l1 - l0) * k / sub;
      auto q = newton(fa, fb, l, p);
      if (!q) return;
      double m = N.margin(*q);
      if ((m >= 0) != (mprev >= 0)) {
        double a = prev, b = l;
        Vec pa = p;
        while (std::abs(b - a) > 1e-10) {
          double c = 0.5 * (a + b);
          auto qc = newton(fa, fb, c, pa);
          if (!qc) break;
          if ((N.margin(*qc) >= 0) == (mprev >= 0)) {
            a = c;
            pa = *qc;
          } else {
            b = c;
          }
        }
        double at = 0.5 * (a + b);
        if (!cross || at < *cross) cross = at;
        return;
      }
      p = *q;
      prev = l;
      mprev = m;
    }
  };
  for (int i = 0; i + 1 < n; ++i) {
    for (const auto& p : crit[i]) track(p, scan.grid[i], scan.grid[i + 1]);
    for (const auto& p : crit[i + 1]) track(p, scan.grid[i + 1], scan.grid[i]);
  }
  if (cross) {
    scan.isolated = false;
    if (!scan.crossing || *cross < *scan.crossing) {
      scan.crossing = cross;
      std::ostringstream os;
      os.precision(10);
      os << "critical point crosses the boundary at lambda=" << *cross;
      scan.message = os.str();
    }
  }
  if (scan.isolated) scan.message = "isolated for all " + std::to_string(n) + " lambda values";
  return scan;
}

// ---------------------------------------------------------------------------
// flow maps

namespace {

std::vector<Vec> domain_samples(const Domain& d, int total) {
  std::vector<Vec> out;
  int per = d.dim == 1 ? total : int(std::lround(std::pow(total, 1.0 / d.dim)));
  auto lo = [&](int k) { return d.is_torus() ? 0.0 : d.lo[k]; };
  auto hi = [&](int k) { return d.is_torus() ? 1.0 : d.hi[k]; };
  if (d.dim == 1) {
    for (int i = 0; i < per; ++i) out.push_back(Vec::Constant(1, lo(0) + (hi(0) - lo(0)) * (i + 0.5) / per));
  } else {
    for (int i = 0; i < per; ++i)
      for (int j = 0; j < per; ++j) {
        Vec p(2);
        p[0] = lo(0) + (hi(0) - lo(0)) * (i + 0.5) / per;
        p[1] = lo(1) + (hi(1) - lo(1)) * (j + 0.5) / per;
        out.push_back(p);
      }
  }
  return out;
}

}  // namespace

FlowMapReport verify_flow_map(const SmoothMap& h, const flow::VectorField& xa, const flow::VectorField& xb,
                              const FlowConfig& fc, const ConleyConfig& cc) {
  FlowMapReport rep;
  if (h.source().dim > 2) throw std::invalid_argument("flow-map check supports dimension <= 2");
  auto pts = domain_samples(h.source(), 100);
  const std::array<double, 6> times{-2, -1, -0.5, 0.5, 1, 2};
  const Domain& tgt = h.target();
  auto res = par::map_indexed<std::array<double, 2>>(pts.size(), [&](std::size_t i) {
    std::array<double, 2> worst{0, 0};
    Vec hp = h.apply(pts[i]);
    for (double t : times) {
      Vec a = h.apply(xa.domain().reduce(flow::flow_time(xa, pts[i], 0, t, fc)));
      Vec b = tgt.reduce(flow::flow_time(xb, hp, 0, t, fc));
      double r = tgt.distance(a, b);
      if (!(r <= worst[0])) worst = {std::isfinite(r) ? r : kInf, t};
    }
    return worst;
  });
  rep.samples = int(pts.size() * times.size());
  for (std::size_t i = 0; i < pts.size(); ++i)
    if (res[i][0] > rep.max_residual || rep.worst_point.size() == 0) {
      if (res[i][0] >= rep.max_residual) {
        rep.max_residual = res[i][0];
        rep.worst_point = pts[i];
        rep.worst_time = res[i][1];
      }
    }
  rep.equivariant = rep.max_residual < cc.equivariance_tol;
  // continuous maps out of compact sources (tori, closed boxes) are proper
  rep.proper = true;
  std::ostringstream os;
  os << (rep.equivariant ? "flow map" : "not equivariant") << ": max residual " << rep.max_residual;
  if (!rep.equivariant) os << " at " << fmt(rep.worst_point) << ", t=" << rep.worst_time;
  rep.message = os.str();
  return rep;
}

namespace {

struct Run {
  int start, end;  // cells [start, end], end may exceed n on tori (wrapping)
  bool operator==(const Run& o) const { return start == o.start && end == o.end; }
};

std::vector<Run> runs_of(const std::vector<char>& in, bool torus) {
  const int n = int(in.size());
  std::vector<Run> out;
  int i = 0;
  while (i < n) {
    if (!in[i]) {
      ++i;
      continue;
    }
    int j = i;
    while (j + 1 < n && in[j + 1]) ++j;
    out.push_back({i, j});
    i = j + 1;
  }
  if (torus && out.size() > 1 && out.front().start == 0 && out.back().end == n - 1) {
    out.back().end = n + out.front().end;
    out.erase(out.begin());
  }
  return out;
}

}  // namespace

PullbackResult pullback_neighborhood(const SmoothMap& h, const Neighborhood& nb,
                                     std::shared_ptr<const flow::VectorField> xa,
                                     std::shared_ptr<const flow::VectorField> xb, const FlowConfig& fc,
                                     const ConleyConfig& cc) {
  const Domain& src = h.source();
  if (src.dim > 2) throw std::invalid_argument("pullback supports dimension <= 2");
  auto lo = [&](int k) { return src.is_torus() ? 0.0 : src.lo[k]; };
  auto hi = [&](int k) { return src.is_torus() ? 1.0 : src.hi[k]; };
  int cells = 1;
  while (cells * cc.pullback_resolution < 1.0) cells *= 2;
  if (src.dim == 2) cells = std::min(cells, 256);
  const int n = cells;
  auto in_at = [&](const Vec& p) { return nb.contains(h.apply(p)); };
  auto coord = [&](int k, double c) { return lo(k) + (hi(k) - lo(k)) * c / n; };

  // boundary between an inside and an outside parameter along axis k
  auto refine = [&](Vec p, int k, double a_in, double b_out) {
    for (int it = 0; it < 60 && std::abs(b_out - a_in) > 1e-12; ++it) {
      double m = 0.5 * (a_in + b_out);
      p[k] = m;
      if (in_at(p))
        a_in = m;
      else
        b_out = m;
    }
    return a_in;
  };
  auto edges = [&](const Run& r, Vec p, int k, double& elo, double& ehi) {
    bool full = src.is_torus() && r.end - r.start + 1 >= n;
    if (full) {
      elo = 0;
      ehi = 1;
      return;
    }
    double c_lo = coord(k, r.start + 0.5), c_hi = coord(k, r.end + 0.5);
    if (!src.is_torus() && r.start == 0)
      elo = lo(k);
    else
      elo = refine(p, k, c_lo, c_lo - (hi(k) - lo(k)) / n);
    if (!src.is_torus() && r.end == n - 1)
      ehi = hi(k);
    else
      ehi = refine(p, k, c_hi, c_hi + (hi(k) - lo(k)) / n);
    if (src.is_torus() && elo < 0) {
      elo += 1;
      ehi += 1;
    }
  };

  std::vector<Box> boxes;
  if (src.dim == 1) {
    std::vector<char> in(n);
    for (int i = 0; i < n; ++i) in[i] = in_at(Vec::Constant(1, coord(0, i + 0.5)));
    bool all = std::all_of(in.begin(), in.end(), [](char c) { return c; });
    if (all && src.is_torus()) {
      boxes.push_back({{0.0}, {1.0}});
    } else {
      for (auto& r : runs_of(in, src.is_torus())) {
        double a, b;
        edges(r, Vec::Zero(1), 0, a, b);
        boxes.push_back({{a}, {b}});
      }
    }
  } else {
    auto rows = par::map_indexed<std::vector<Run>>(n, [&](std::size_t j) {
      std::vector<char> in(n);
      Vec p(2);
      p[1] = coord(1, j + 0.5);
      for (int i = 0; i < n; ++i) {
        p[0] = coord(0, i + 0.5);
        in[i] = in_at(p);
      }
      if (src.is_torus() && std::all_of(in.begin(), in.end(), [](char c) { return c; }))
        return std::vector<Run>{{0, 2 * n}};
      return runs_of(in, src.is_torus());
    });
    // groups of consecutive rows with identical runs
    struct Group {
      int j0, j1;
    };
    std::vector<Group> groups;
    for (int j = 0; j < n; ++j) {
      if (rows[j].empty()) continue;
      if (!groups.empty() && groups.back().j1 == j - 1 && rows[groups.back().j0] == rows[j])
        groups.back().j1 = j;
      else
        groups.push_back({j, j});
    }
    bool wrap_rows = src.is_torus() && groups.size() > 1 && groups.front().j0 == 0 && groups.back().j1 == n - 1 &&
                     rows[0] == rows[n - 1];
    if (wrap_rows) {
      groups.back().j1 = n + groups.front().j1;
      groups.erase(groups.begin());
    }
    for (const auto& g : groups) {
      const auto& rr = rows[g.j0];
      Run yr{g.j0, g.j1};
      for (const auto& r : rr) {
        Vec mid(2);
        double xlo, xhi, ylo, yhi;
        mid[1] = coord(1, 0.5 * (g.j0 + g.j1) + 0.5);
        if (r.end >= 2 * n) {
          xlo = 0;
          xhi = 1;
        } else {
          edges(r, mid, 0, xlo, xhi);
        }
        mid[0] = 0.5 * (xlo + xhi);
        edges(yr, mid, 1, ylo, yhi);
        boxes.push_back({{xlo, ylo}, {xhi, yhi}});
      }
    }
  }

  PullbackResult res;
  res.region = Neighborhood(src, boxes);
  res.certificate = verify_isolating_neighborhood(*xa, res.region, fc, cc);
  res.isolated = verify_isolated_map(maps::MapChain::of(h), FlowSide::general(xa, &res.region, fc),
                                     FlowSide::general(xb, &nb, fc), fc, cc);
  return res;
}

// ---------------------------------------------------------------------------
// Lyapunov functions and homology

LyapunovCertificate verify_lyapunov(const ScalarField& f, const flow::VectorField& X, const Neighborhood& N,
                                    const std::vector<Vec>& s_samples, const FlowConfig& fc, const ConleyConfig& cc) {
  (void)fc;
  LyapunovCertificate c;
  double fmin = kInf, fmax = -kInf;
  for (const auto& p : s_samples) {
    double v = f.value(p);
    fmin = std::min(fmin, v);
    fmax = std::max(fmax, v);
  }
  c.variation = s_samples.empty() ? 0.0 : fmax - fmin;
  auto grid = N.grid(cc.grid_spacing * N.scale());
  const Domain& dom = N.domain();
  c.margin = kInf;
  for (const auto& p : grid) {
    bool near = false;
    for (const auto& s : s_samples)
      if (dom.distance(s, p) <= 2 * cc.margin_int) {
        near = true;
        break;
      }
    if (near) continue;
    Vec v;
    X.eval(0, p, v);
    double d = -f.gradient(p).dot(v);
    ++c.checked;
    if (d < c.margin) {
      c.margin = d;
      c.worst_point = p;
    }
  }
  std::ostringstream os;
  if (c.variation >= cc.tol_const) {
    c.verdict = Verdict::refuted;
    os << "not constant on the invariant set: variation " << c.variation;
  } else if (c.checked > 0 && !(c.margin > 0)) {
    c.verdict = Verdict::refuted;
    os << "not decreasing along the flow at " << fmt(c.worst_point) << " (rate " << -c.margin << ")";
  } else {
    c.verdict = Verdict::certified;
    os << "Lyapunov: variation " << c.variation << ", " << c.checked << " points checked";
    if (c.checked > 0) os << ", min decrease " << c.margin;
  }
  c.message = os.str();
  return c;
}

FlowConfig adapted_horizon(const MorseDatum& d, FlowConfig fc) {
  double slow = std::numeric_limits<double>::infinity();
  for (const auto& c : d.points())
    for (int i = 0; i < c.eigenvalues.size(); ++i) slow = std::min(slow, std::abs(c.eigenvalues[i]));
  if (std::isfinite(slow) && slow > 0) {
    double t = std::min(1e5, std::max(fc.t_max, 60.0 / slow));
    // slow flows: the displacement cap still bounds each step
    fc.h_max *= t / fc.t_max;
    fc.t_max = t;
  }
  return fc;
}

LocalHomology local_morse_homology(const ScalarField& f, const Metric& g, const Neighborhood& N, const FlowConfig& fc,
                                   const ConleyConfig& cc) {
  LocalHomology out;
  for (int k = -1; k < cc.perturb_attempts; ++k) {
    double eps = k < 0 ? 0.0 : cc.perturb_eps * std::ldexp(1.0, -k);
    ScalarField fk = k < 0 ? f : flow::perturb_field(f, eps, cc.seed + k);
    std::ostringstream os;
    os << "eps=" << eps << ": ";
    try {
      flow::GradientField X(fk, g);
      auto cert = verify_isolating_neighborhood(X, N, fc, cc);
      if (cert.verdict != Verdict::certified) {
        if (k < 0) throw IsolationFailure("N is not isolating for the gradient flow: " + cert.message);
        os << "isolation lost: " << cert.message;
        out.log.push_back(os.str());
        continue;
      }
      MorseDatum d = flow::make_datum(fk, g, &N, fc);
      FlowConfig fd = adapted_horizon(d, fc);
      auto cx = moduli::boundary_operator(d, &N, fd);
      out.flow = fd;
      out.field = fk;
      out.datum = std::move(d);
      out.complex = std::move(cx);
      out.homology = zalg::homology(out.complex.complex);
      out.certificate = std::move(cert);
      out.eps = eps;
      out.attempts = k + 2;
      os << "accepted";
      out.log.push_back(os.str());
      return out;
    } catch (const flow::DegenerateCriticalPoint& e) {
      os << e.what();
    } catch (const moduli::NotMorseSmale& e) {
      os << e.what();
    } catch (const moduli::NonTransverse& e) {
      os << e.what();
    } catch (const moduli::CountingFailure& e) {
      os << e.what();
    } catch (const moduli::BoundarySquareFailure& e) {
      os << e.what();
    }
    out.log.push_back(os.str());
  }
  std::string last = out.log.empty() ? "" : out.log.back();
  throw IsolationFailure("no Morse-Smale perturbation preserving isolation after " +
                         std::to_string(cc.perturb_attempts) + " attempts; last: " + last);
}

McfResult mcf_homology(std::shared_ptr<const flow::VectorField> X, const Neighborhood& N, const ScalarField& f_phi,
                       const Metric& g, const FlowConfig& fc, const ConleyConfig& cc) {
  McfResult r;
  r.flow_certificate = verify_isolating_neighborhood(*X, N, fc, cc);
  if (r.flow_certificate.verdict != Verdict::certified)
    throw StageFailure("isolation", r.flow_certificate.message);
  r.lyapunov = verify_lyapunov(f_phi, *X, N, r.flow_certificate.s_samples, fc, cc);
  if (r.lyapunov.verdict != Verdict::certified) throw StageFailure("lyapunov", r.lyapunov.message);
  try {
    r.local = local_morse_homology(f_phi, g, N, fc, cc);
  } catch (const std::exception& e) {
    throw StageFailure("local-homology", e.what());
  }
  return r;
}

McfMapResult mcf_induced_map(const SmoothMap& h, std::shared_ptr<const flow::VectorField> xa,
                             std::shared_ptr<const flow::VectorField> xb, const Neighborhood& nb,
                             const ScalarField& f_b, const Metric& ga, const Metric& gb, const FlowConfig& fc,
                             const ConleyConfig& cc) {
  McfMapResult r;
  r.flow_map = verify_flow_map(h, *xa, *xb, fc, cc);
  if (!r.flow_map.equivariant) throw StageFailure("flow-map", r.flow_map.message);

  auto cert_b = verify_isolating_neighborhood(*xb, nb, fc, cc);
  if (cert_b.verdict != Verdict::certified) throw StageFailure("target-isolation", cert_b.message);
  r.lyapunov_b = verify_lyapunov(f_b, *xb, nb, cert_b.s_samples, fc, cc);
  if (r.lyapunov_b.verdict != Verdict::certified) throw StageFailure("lyapunov", r.lyapunov_b.message);

  r.pullback = pullback_neighborhood(h, nb, xa, xb, fc, cc);
  if (r.pullback.certificate.verdict != Verdict::certified)
    throw StageFailure("pullback", r.pullback.certificate.message);
  if (r.pullback.isolated.verdict != Verdict::certified) throw StageFailure("pullback", r.pullback.isolated.message);
  const Neighborhood& na = r.pullback.region;

  ScalarField f_a = h.pullback(f_b);
  try {
    r.source = local_morse_homology(f_a, ga, na, fc, cc);
    r.target = local_morse_homology(f_b, gb, nb, fc, cc);
  } catch (const std::exception& e) {
    throw StageFailure("local-homology", e.what());
  }

  auto chain = maps::MapChain::of(h);
  FlowConfig fd = r.source.flow;
  fd.t_max = std::max(fd.t_max, r.target.flow.t_max);
  r.gradient_isolation = verify_isolated_map(chain, FlowSide::gradient(r.source.datum, &na),
                                             FlowSide::gradient(r.target.datum, &nb), fd, cc);
  if (r.gradient_isolation.verdict != Verdict::certified)
    throw StageFailure("gradient-isolation", r.gradient_isolation.message);

  try {
    auto pt = induced::perturb_to_transverse(chain, induced::Pair{&r.source.datum, &r.target.datum, &na, &nb},
                                             r.source.complex, r.target.complex, fd, cc);
    r.eps = pt.eps;
    r.chain_map = pt.induced.map;
  } catch (const std::exception& e) {
    throw StageFailure("induced-map", e.what());
  }
  r.on_homology = zalg::induced_on_homology(r.chain_map, r.source.complex.complex, r.target.complex.complex);
  return r;
}

}  // namespace mcf::conley
