#include <doctest.h>

#include <random>

#include "fixtures.hpp"
#include "mcf/conley.hpp"
#include "mcf/inducedmaps.hpp"
#include "mcf/parallel.hpp"

using namespace mcf;
using namespace mcf::flow;
using maps::MapChain;

namespace {

struct Fixture {
  const char* name;
  Domain dom;
  std::string f;
  std::optional<Neighborhood> region;
};

std::vector<Fixture> fixtures() {
  Domain line = Domain::box({{-2, 2}});
  Domain plane = Domain::box({{-3, 3}, {-3, 3}});
  return {
      {"circle", Domain::torus(1), fx::kCircle, std::nullopt},
      {"interval cubic", line, "x1^3 - 3*x1", std::nullopt},
      {"torus", Domain::torus(2), fx::kTorus, std::nullopt},
      {"max over saddle", plane, "x2^3 - 3*x2 - x1^2", Neighborhood(plane, {Box{{-1, -2}, {1, 2}}})},
      {"planar cubic", plane, "x1^3 - 3*x1 + x2^2", Neighborhood(plane, {Box{{-2, -1}, {2, 1}}})},
  };
}

const Neighborhood* opt(const std::optional<Neighborhood>& n) { return n ? &*n : nullptr; }

// Diagonal sign change of a chain complex's generators.
zalg::IntMatrix conj(const zalg::IntMatrix& m, const std::vector<int>& rows, const std::vector<int>& cols) {
  zalg::IntMatrix out = m;
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) out(i, j) *= rows[i] * cols[j];
  return out;
}

// Signs per degree, in generator order.
std::vector<std::vector<int>> graded_signs(const moduli::BoundaryResult& b, const std::vector<int>& flip) {
  std::vector<std::vector<int>> s;
  for (const auto& deg : b.points) {
    s.emplace_back();
    for (int i : deg) s.back().push_back(flip[i]);
  }
  return s;
}

std::map<std::pair<int, int>, long> counts(const moduli::BoundaryResult& b) {
  std::map<std::pair<int, int>, long> m;
  for (const auto& c : b.counts) m[{c.x, c.y}] = c.n;
  return m;
}

}  // namespace

TEST_CASE("orientation flips conjugate the boundary and keep homology") {
  FlowConfig cfg;
  std::mt19937 rng(20240611);
  for (const auto& fxt : fixtures()) {
    CAPTURE(std::string(fxt.name));
    auto d = fx::datum(fxt.dom, fxt.f, opt(fxt.region));
    auto base = moduli::boundary_operator(d, opt(fxt.region), cfg);
    auto h0 = zalg::homology(base.complex);
    for (int trial = 0; trial < 3; ++trial) {
      std::vector<int> flip(d.points().size());
      for (auto& s : flip) s = (rng() & 1) ? -1 : 1;
      auto e = d;
      for (std::size_t i = 0; i < flip.size(); ++i) e.points()[i].orientation *= flip[i];
      auto b = moduli::boundary_operator(e, opt(fxt.region), cfg);
      auto sg = graded_signs(base, flip);
      for (int k = 1; k <= base.complex.top(); ++k)
        CHECK(b.complex.differential[k] == conj(base.complex.differential[k], sg[k - 1], sg[k]));
      CHECK(zalg::homology(b.complex) == h0);
      CHECK(zalg::homology(b.complex).betti() == h0.betti());
    }
  }
}

TEST_CASE("orientation flips conjugate induced maps") {
  FlowConfig cfg;
  conley::ConleyConfig cc;
  std::mt19937 rng(7);
  struct Case {
    Domain dom;
    std::string f;
    std::vector<std::string> h;
  };
  for (const auto& k : {Case{Domain::torus(1), fx::kCircle, {"3*x1"}},
                        Case{Domain::torus(2), fx::kTorus, {"x1 + x2", "x2"}}}) {
    CAPTURE(k.h[0]);
    auto d = fx::datum(k.dom, k.f);
    auto c = moduli::boundary_operator(d, nullptr, cfg);
    auto h = MapChain::of(SmoothMap::parse(k.dom, k.dom, k.h));
    auto base = induced::perturb_to_transverse(h, induced::Pair{&d, &d}, c, c, cfg, cc);
    auto Hb = zalg::induced_on_homology(base.induced.map, c.complex, c.complex);
    std::vector<int> flip(d.points().size());
    for (auto& s : flip) s = (rng() & 1) ? -1 : 1;
    flip[0] = -1;
    auto e = d;
    for (std::size_t i = 0; i < flip.size(); ++i) e.points()[i].orientation *= flip[i];
    auto ce = moduli::boundary_operator(e, nullptr, cfg);
    auto sg = graded_signs(c, flip);
    std::vector<std::vector<int>> ones;
    for (auto& s : sg) ones.emplace_back(s.size(), 1);

    // same perturbed map, flipped target only: rows change sign
    auto tgt = induced::induced_chain_map(base.map, induced::Pair{&d, &e}, c, ce, cfg);
    for (int q = 0; q <= c.complex.top(); ++q)
      CHECK(tgt.map.blocks[q] == conj(base.induced.map.blocks[q], sg[q], ones[q]));

    // flipped on both sides: conjugation, same matrices on homology
    auto both = induced::induced_chain_map(base.map, induced::Pair{&e, &e}, ce, ce, cfg);
    for (int q = 0; q <= c.complex.top(); ++q)
      CHECK(both.map.blocks[q] == conj(base.induced.map.blocks[q], sg[q], sg[q]));
    auto He = zalg::induced_on_homology(both.map, ce.complex, ce.complex);
    for (int q = 0; q <= c.complex.top(); ++q) {
      CHECK(He.blocks[q].determinant() == Hb.blocks[q].determinant());
      zalg::Integer ta = 0, tb = 0;
      for (int i = 0; i < He.blocks[q].rows(); ++i) {
        ta += He.blocks[q](i, i);
        tb += Hb.blocks[q](i, i);
      }
      CHECK(ta == tb);
    }
  }
}

TEST_CASE("counts do not depend on the launch radius") {
  for (const auto& fxt : fixtures()) {
    CAPTURE(std::string(fxt.name));
    std::map<std::pair<int, int>, long> ref;
    bool first = true;
    for (double r : {1e-4, 1e-3, 1e-2}) {
      CAPTURE(r);
      FlowConfig cfg;
      cfg.r_launch = r;
      auto d = fx::datum(fxt.dom, fxt.f, opt(fxt.region), cfg);
      auto b = moduli::boundary_operator(d, opt(fxt.region), cfg);
      auto m = counts(b);
      if (first) ref = m;
      std::string got;
      for (auto& [k, v] : m) got += std::to_string(k.first) + ">" + std::to_string(k.second) + ":" + std::to_string(v) + " ";
      CAPTURE(got);
      CHECK(m == ref);
      first = false;
    }
  }
}

TEST_CASE("region restriction keeps orbits that stay inside") {
  FlowConfig cfg;
  Domain plane = Domain::box({{-3, 3}, {-3, 3}});
  Neighborhood N(plane, {Box{{-1, -2}, {1, 2}}});
  auto d = fx::datum(plane, "x2^3 - 3*x2 - x1^2");
  int mx = d.of_index(2)[0], sd = d.of_index(1)[0];
  auto inside = moduli::count_connections(d, mx, sd, &N, cfg);
  auto whole = moduli::count_connections(d, mx, sd, nullptr, cfg);
  CHECK(inside.n == whole.n);
  CHECK(inside.witnesses.size() == whole.witnesses.size());
}

TEST_CASE("results do not depend on the worker count") {
  FlowConfig cfg;
  conley::ConleyConfig cc;
  int saved = par::threads();
  auto run = [&](int n, par::Exec e = par::Exec::parallel) {
    par::set_threads(n);
    par::set_default_exec(e);
    auto d = fx::datum(Domain::torus(2), fx::kTorus);
    auto b = moduli::boundary_operator(d, nullptr, cfg);
    std::vector<double> params;
    for (const auto& c : b.counts)
      for (const auto& w : c.witnesses) params.push_back(w.param);
    auto h = MapChain::of(SmoothMap::parse(d.domain(), d.domain(), {"x1 + x2", "x2"}));
    auto m = induced::perturb_to_transverse(h, induced::Pair{&d, &d}, b, b, cfg, cc);
    for (const auto& c : m.induced.counts)
      for (const auto& w : c.witnesses) params.push_back(w.param);
    return std::make_pair(b.complex.differential, params);
  };
  auto one = run(1);
  auto four = run(4);
  auto serial = run(1, par::Exec::serial);
  par::set_threads(saved);
  par::set_default_exec(par::Exec::parallel);
  CHECK(one.first == four.first);
  CHECK(one.second == four.second);  // bitwise
  CHECK(serial.first == four.first);
  CHECK(serial.second == four.second);
}

TEST_CASE("serial reference and parallel kernels agree") {
  conley::ConleyConfig cc;
  FlowConfig fc;
  Domain sq = Domain::box({{-2, 2}, {-2, 2}});
  auto X = ExpressionField::parse(sq, {"x1", "-x2"});
  Neighborhood N(sq, {Box{{-1, -1}, {1, 1}}});
  Neighborhood bad(sq, {Box{{-1, -1}, {1, 0.5}}});
  auto run = [&](par::Exec e) {
    par::set_default_exec(e);
    par::set_threads(4);
    auto crit = flow::find_critical_points(ScalarField::parse(Domain::torus(2), fx::kTorus), Metric(2), nullptr, fc);
    auto a = conley::verify_isolating_neighborhood(X, N, fc, cc);
    auto b = conley::verify_isolating_neighborhood(X, bad, fc, cc);
    std::vector<double> xs;
    for (const auto& c : crit)
      for (int i = 0; i < c.x.size(); ++i) xs.push_back(c.x[i]);
    return std::make_tuple(xs, a.verdict, b.verdict, a.min_s_margin, b.offending.size());
  };
  auto s = run(par::Exec::serial);
  auto p = run(par::Exec::parallel);
  CHECK(s == p);
}

TEST_CASE("identity is a chain map and homology equality is an equivalence") {
  FlowConfig cfg;
  for (const auto& fxt : fixtures()) {
    auto d = fx::datum(fxt.dom, fxt.f, opt(fxt.region));
    auto b = moduli::boundary_operator(d, opt(fxt.region), cfg);
    CHECK(zalg::verify_chain_map(zalg::GradedIntMap::identity(b.complex), b.complex, b.complex).holds);
  }
  // circle complex with zero differential: maps are scalars per degree
  auto d = fx::datum(Domain::torus(1), fx::kCircle);
  auto c = moduli::boundary_operator(d, nullptr, cfg).complex;
  std::vector<zalg::GradedIntMap> maps;
  for (long a : {1, 2, 1, -1})
    for (long b : {2, 2, 3}) {
      auto m = zalg::GradedIntMap::identity(c);
      m.blocks[0](0, 0) = a;
      m.blocks[1](0, 0) = b;
      maps.push_back(m);
    }
  auto eq = [&](const zalg::GradedIntMap& x, const zalg::GradedIntMap& y) { return zalg::equal_on_homology(x, y, c, c); };
  for (const auto& x : maps) {
    CHECK(eq(x, x));
    for (const auto& y : maps) {
      CHECK(eq(x, y) == eq(y, x));
      for (const auto& z : maps)
        if (eq(x, y) && eq(y, z)) CHECK(eq(x, z));
    }
  }
}

TEST_CASE("index sum equals the Euler characteristic of tori") {
  FlowConfig cfg;
  for (unsigned seed = 1; seed <= 4; ++seed) {
    auto t = Domain::torus(2);
    auto f = perturb_field(ScalarField::parse(t, fx::kTorus), 0.05, seed);
    auto d = make_datum(f, Metric(2), nullptr, cfg);
    CHECK(d.euler_characteristic() == 0);
  }
  auto c = make_datum(perturb_field(ScalarField::parse(Domain::torus(1), fx::kCircle), 0.01, 3), Metric(1), nullptr, cfg);
  CHECK(c.euler_characteristic() == 0);
}

TEST_CASE("longer horizons never undo a decided certificate") {
  conley::ConleyConfig cc;
  Domain line = Domain::box({{-5, 5}});
  Domain plane = Domain::box({{-3, 3}, {-3, 3}});
  auto fld = [](const Domain& d, std::vector<std::string> c) { return ExpressionField::parse(d, c); };
  struct Case {
    ExpressionField X;
    Neighborhood N;
  };
  std::vector<Case> cases{
      {fld(line, {"-x1"}), Neighborhood(line, {Box{{-1}, {1}}})},
      {fld(line, {"-x1"}), Neighborhood(line, {Box{{0}, {1}}})},
      {fld(line, {"-0.02*x1"}), Neighborhood(line, {Box{{-1}, {1}}})},
      {fld(plane, {"-x1", "x2"}), Neighborhood(plane, {Box{{-1, -1}, {1, 1}}})},
  };
  for (std::size_t i = 0; i < cases.size(); ++i) {
    CAPTURE(i);
    std::optional<conley::Verdict> decided;
    for (double T : {5.0, 20.0, 200.0, 1000.0}) {
      FlowConfig fc;
      fc.t_max = T;
      auto v = conley::verify_isolating_neighborhood(cases[i].X, cases[i].N, fc, cc).verdict;
      if (decided) CHECK(v == *decided);
      if (v != conley::Verdict::inconclusive) decided = v;
    }
  }
}

TEST_CASE("sampled S_h lies in S_A and maps into S_B") {
  FlowConfig fc;
  conley::ConleyConfig cc;
  Domain t1 = Domain::torus(1), t2 = Domain::torus(2);
  auto xb = std::make_shared<ExpressionField>(ExpressionField::parse(t1, {"sin(2*pi*x1)/(2*pi)"}));
  auto xa = std::make_shared<ExpressionField>(
      ExpressionField::parse(t2, {"sin(2*pi*x1)/(2*pi)", "0.5*sin(2*pi*x2)/(2*pi)"}));
  auto proj = SmoothMap::parse(t2, t1, {"x1"});
  Neighborhood nb(t1, {Box{{0.3}, {0.7}}});
  auto pb = conley::pullback_neighborhood(proj, nb, xa, xb, fc, cc);
  REQUIRE(pb.isolated.verdict == conley::Verdict::certified);
  REQUIRE_FALSE(pb.isolated.s_h.empty());
  const double tol = 1e-6;
  for (const auto& p : pb.isolated.s_h) {
    for (double t : {-5.0, -1.0, 1.0, 5.0}) {
      Vec q = t2.reduce(flow_time(*xa, p, 0, t, fc));
      CHECK(pb.region.margin(q) >= -tol);
      Vec r = t1.reduce(flow_time(*xb, proj.apply(p), 0, t, fc));
      CHECK(nb.margin(r) >= -tol);
    }
  }
}
