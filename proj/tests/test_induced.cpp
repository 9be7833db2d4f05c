#include <doctest.h>

#include "fixtures.hpp"
#include "mcf/inducedmaps.hpp"

using namespace mcf;
using namespace mcf::flow;
using namespace mcf::induced;
using maps::MapChain;

namespace {

zalg::IntMatrix on_h(const InducedMap& m, const moduli::BoundaryResult& a, const moduli::BoundaryResult& b, int k) {
  return zalg::induced_on_homology(m.map, a.complex, b.complex).blocks[k];
}

MapChain circle_map(const std::string& e) {
  Domain t = Domain::torus(1);
  return MapChain::of(SmoothMap::parse(t, t, {e}));
}

}  // namespace

TEST_CASE("identity of the circle") {
  FlowConfig cfg;
  auto d = fx::datum(Domain::torus(1), fx::kCircle);
  auto c = moduli::boundary_operator(d, nullptr, cfg);
  auto im = induced_chain_map(circle_map("x1"), Pair{&d, &d}, c, c, cfg);
  CHECK(im.map.blocks[0] == zalg::IntMatrix::identity(1));
  CHECK(im.map.blocks[1] == zalg::IntMatrix::identity(1));
}

TEST_CASE("degree maps of the circle") {
  FlowConfig cfg;
  conley::ConleyConfig cc;
  auto d = fx::datum(Domain::torus(1), fx::kCircle);
  auto c = moduli::boundary_operator(d, nullptr, cfg);
  Pair p{&d, &d};
  auto three = induced_chain_map(circle_map("3*x1"), p, c, c, cfg);
  CHECK(on_h(three, c, c, 1)(0, 0) == 3);
  CHECK(on_h(three, c, c, 0)(0, 0) == 1);
  // 2x sends the minimum onto the maximum
  CHECK_THROWS_AS(induced_chain_map(circle_map("2*x1"), p, c, c, cfg), NonTransverseMap);
  auto two = perturb_to_transverse(circle_map("2*x1"), p, c, c, cfg, cc);
  CHECK(two.eps > 0);
  CHECK(on_h(two.induced, c, c, 1)(0, 0) == 2);
  auto minus = induced_chain_map(circle_map("-x1"), p, c, c, cfg);
  CHECK(on_h(minus, c, c, 1)(0, 0) == -1);
}

TEST_CASE("composition through a flow on the circle") {
  FlowConfig cfg;
  conley::ConleyConfig cc;
  auto d = fx::datum(Domain::torus(1), fx::kCircle);
  auto c = moduli::boundary_operator(d, nullptr, cfg);
  auto r = compose_with_flow(circle_map("2*x1 + 0.01"), circle_map("3*x1"), 1.0, d, d, d, c, c, c, nullptr, nullptr,
                             nullptr, cfg, cc);
  CHECK(r.hypothesis_ok);
  CHECK(on_h(r.composite, c, c, 1)(0, 0) == 6);
  CHECK(r.product_equals_composite);
  CHECK(r.product_equals_zero);
}

TEST_CASE("identity of the torus counts through branches") {
  FlowConfig cfg;
  auto d = fx::datum(Domain::torus(2), fx::kTorus);
  auto c = moduli::boundary_operator(d, nullptr, cfg);
  auto id = MapChain::identity(Domain::torus(2));
  auto im = induced_chain_map(id, Pair{&d, &d}, c, c, cfg);
  for (int k = 0; k <= 2; ++k) CHECK(im.map.blocks[k] == zalg::IntMatrix::identity(c.complex.rank(k)));
}

TEST_CASE("local identity and the isolation counterexample") {
  FlowConfig cfg;
  conley::ConleyConfig cc;
  Domain b = Domain::box({{-5, 5}});
  Neighborhood N(b, {Box{{-1}, {1}}});
  auto A = fx::datum(b, "x1^2", &N), B = fx::datum(b, "(x1-3)^2", &N), C = fx::datum(b, "x1^2", &N);
  auto ca = moduli::boundary_operator(A, &N, cfg), cb = moduli::boundary_operator(B, &N, cfg),
       ccx = moduli::boundary_operator(C, &N, cfg);
  auto id = MapChain::identity(b);
  auto ab = induced_chain_map(id, Pair{&A, &B, &N, &N}, ca, cb, cfg);
  auto bc = induced_chain_map(id, Pair{&B, &C, &N, &N}, cb, ccx, cfg);
  auto ac = induced_chain_map(id, Pair{&A, &C, &N, &N}, ca, ccx, cfg);
  CHECK(ab.map.blocks[0].is_zero());
  CHECK(bc.map.blocks[0].is_zero());
  CHECK(ac.map.blocks[0] == zalg::IntMatrix::identity(1));
  auto r = compose_with_flow(id, id, 1.0, A, B, C, ca, cb, ccx, &N, &N, &N, cfg, cc);
  CHECK_FALSE(r.hypothesis_ok);
  REQUIRE(r.isolation->violation.has_value());
  CHECK(*r.isolation->violation == doctest::Approx(0.5 * std::log(1.5)).epsilon(1e-6));
  CHECK_FALSE(r.product_equals_zero);
}

TEST_CASE("torus maps: traces and determinants on H_1") {
  FlowConfig cfg;
  Domain t2 = Domain::torus(2);
  auto d = fx::datum(t2, fx::kTorus);
  auto c = moduli::boundary_operator(d, nullptr, cfg);
  Pair p{&d, &d};
  struct Case {
    std::vector<std::string> h;
    long tr, det, top;
  };
  for (const Case& k : {Case{{"x1 + x2", "x2"}, 2, 1, 1}, Case{{"-x1", "x2"}, 0, -1, -1},
                        Case{{"x2", "x1"}, 0, -1, -1}, Case{{"2*x1", "x2"}, 3, 2, 2}}) {
    CAPTURE(k.h[0]);
    CAPTURE(k.h[1]);
    auto h = MapChain::of(SmoothMap::parse(t2, t2, k.h));
    auto pt = perturb_to_transverse(h, p, c, c, cfg, conley::ConleyConfig{});
    auto H1 = on_h(pt.induced, c, c, 1);
    REQUIRE(H1.rows() == 2);
    CHECK(zalg::to_string(H1(0, 0) + H1(1, 1)) == std::to_string(k.tr));
    CHECK(zalg::to_string(H1.determinant()) == std::to_string(k.det));
    CHECK(zalg::to_string(on_h(pt.induced, c, c, 2)(0, 0)) == std::to_string(k.top));
    CHECK(zalg::to_string(on_h(pt.induced, c, c, 0)(0, 0)) == "1");
  }
}

TEST_CASE("continuation between perturbed torus data") {
  FlowConfig cfg;
  conley::ConleyConfig cc;
  Domain t2 = Domain::torus(2);
  std::string base = "((2+cos(2*pi*x2))*cos(2*pi*x1) + 0.1*sin(2*pi*x2))/(4*pi^2)";
  auto A = fx::datum(t2, base);
  auto B = fx::datum(t2, "((2+cos(2*pi*x2))*cos(2*pi*x1) + 0.15*sin(2*pi*x2) + 0.05*cos(2*pi*x1))/(4*pi^2)");
  auto ca = moduli::boundary_operator(A, nullptr, cfg), cb = moduli::boundary_operator(B, nullptr, cfg);
  auto phi = continuation_map(A, B, nullptr, 10.0, ca, cb, cfg, cc);
  auto H = zalg::induced_on_homology(phi.map.map, ca.complex, cb.complex);
  for (int k = 0; k <= 2; ++k) {
    auto det = H.blocks[k].determinant();
    CHECK((zalg::to_string(det) == "1" || zalg::to_string(det) == "-1"));
  }
  auto same = continuation_map(A, A, nullptr, 10.0, ca, ca, cfg, cc);
  for (int k = 0; k <= 2; ++k) CHECK(same.map.map.blocks[k] == zalg::IntMatrix::identity(ca.complex.rank(k)));
}

TEST_CASE("homotopic rotations of the circle") {
  FlowConfig cfg;
  conley::ConleyConfig cc;
  auto d = fx::datum(Domain::torus(1), fx::kCircle);
  auto c = moduli::boundary_operator(d, nullptr, cfg);
  auto fam = [](double lam) { return circle_map("x1 + 0.1 + 0.2*" + std::to_string(lam)); };
  auto r = homotopy_check(fam, Pair{&d, &d}, c, c, cfg, cc);
  CHECK(r.hypothesis_ok);
  CHECK(r.equal_on_homology);
  CHECK(on_h(r.h0, c, c, 1)(0, 0) == 1);
}
