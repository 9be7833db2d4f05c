#include <doctest.h>

#include <set>

#include "fixtures.hpp"

using namespace mcf;
using namespace mcf::flow;

TEST_CASE("critical points of x^2 and -x^2") {
  Domain b = Domain::box({{-1, 1}});
  auto d = fx::datum(b, "x1^2");
  REQUIRE(d.points().size() == 1);
  CHECK(d.points()[0].x[0] == doctest::Approx(0).epsilon(1e-9));
  CHECK(d.points()[0].index == 0);
  auto e = fx::datum(b, "-x1^2");
  REQUIRE(e.points().size() == 1);
  CHECK(e.points()[0].index == 1);
}

TEST_CASE("product torus critical points") {
  auto d = fx::datum(Domain::torus(2), "cos(2*pi*x1)+cos(2*pi*x2)");
  REQUIRE(d.points().size() == 4);
  std::multiset<int> idx;
  for (auto& c : d.points()) {
    idx.insert(c.index);
    // analytic oracle: coordinates are half-integers
    for (int i = 0; i < 2; ++i) CHECK(std::abs(c.x[i] * 2 - std::round(c.x[i] * 2)) < 1e-9);
  }
  CHECK(idx == std::multiset<int>{0, 1, 1, 2});
  CHECK(d.euler_characteristic() == 0);
}

TEST_CASE("degenerate critical point is reported") {
  Domain b = Domain::box({{-1, 1}});
  CHECK_THROWS_AS(fx::datum(b, "x1^3"), DegenerateCriticalPoint);
}

TEST_CASE("canonical frames") {
  auto d = fx::datum(Domain::torus(2), fx::kTorus);
  for (auto& c : d.points()) {
    Mat E = c.eigenvectors;
    CHECK((E.transpose() * E - Mat::Identity(2, 2)).norm() < 1e-9);
    for (int j = 0; j < 2; ++j) {
      int k = 0;
      while (std::abs(E(k, j)) < 1e-12) ++k;
      CHECK(E(k, j) > 0);
    }
  }
}

TEST_CASE("orbit termination") {
  FlowConfig cfg;
  auto d = fx::datum(Domain::box({{-2, 2}}), "x1^2");
  StopRule st;
  auto o = integrate_orbit(d, fx::v1(0.5), Direction::forward, st, cfg);
  CHECK(o.status == Terminal::converged);
  CHECK(o.target == 0);

  Domain b = Domain::box({{-2, 2}});
  auto e = fx::datum(b, "-x1^2");
  Neighborhood N(b, {Box{{-1}, {1}}});
  st.region = &N;
  auto o2 = integrate_orbit(e, fx::v1(0.5), Direction::forward, st, cfg);
  CHECK(o2.status == Terminal::exited);
  CHECK(o2.end[0] >= 1.0 - 1e-6);
}

TEST_CASE("torus orbits limit on extrema, energy decreases") {
  FlowConfig cfg;
  auto d = fx::datum(Domain::torus(2), fx::kTorus);
  StopRule st;
  st.record = true;
  for (Vec p : {fx::v2(0.13, 0.29), fx::v2(0.71, 0.83), fx::v2(0.37, 0.61)}) {
    auto f = integrate_orbit(d, p, Direction::forward, st, cfg);
    auto b = integrate_orbit(d, p, Direction::backward, st, cfg);
    REQUIRE(f.status == Terminal::converged);
    REQUIRE(b.status == Terminal::converged);
    CHECK(d.points()[f.target].index == 0);
    CHECK(d.points()[b.target].index == 2);
    for (std::size_t i = 1; i < f.xs.size(); ++i)
      CHECK(d.field().value(f.xs[i]) <= d.field().value(f.xs[i - 1]) + 1e-9);
  }
}

TEST_CASE("forward then backward returns") {
  FlowConfig cfg;
  // rates of order one keep the backward problem well conditioned
  auto d = fx::datum(Domain::torus(2), "(2+cos(2*pi*x2))*cos(2*pi*x1)/(4*pi^2)");
  Vec p = fx::v2(0.2, 0.3);
  Vec q = flow_time(d.gradient(), p, 0, 2, cfg);
  Vec r = flow_time(d.gradient(), q, 2, 0, cfg);
  CHECK(d.domain().distance(p, r) < 1e-5);
}

TEST_CASE("frame transport") {
  FlowConfig cfg;
  Domain b = Domain::box({{-5, 5}, {-5, 5}});
  ExpressionField c = ExpressionField::parse(b, {"1", "0"});
  Mat F = Mat::Identity(2, 2);
  auto r = transport_frame(c, fx::v2(0, 0), F, 0, 2, cfg);
  REQUIRE(r.ok);
  CHECK((r.frame - F).norm() < 1e-12);

  auto d = fx::datum(Domain::box({{-2, 2}}), "x1^2");
  Mat f1(1, 1);
  f1(0, 0) = 1;
  auto s = transport_frame(d.gradient(), fx::v1(1.0), f1, 0, 3, cfg);
  CHECK(s.frame(0, 0) > 0);

  // analytic linearization near a saddle of the product torus: the stable axis frame
  // keeps its sign and the unstable one grows but keeps its sign
  auto t = fx::datum(Domain::torus(2), "cos(2*pi*x1)+cos(2*pi*x2)");
  Mat E = Mat::Identity(2, 2);
  auto u = transport_frame(t.gradient(), fx::v2(0.5, 0.01), E, 0, 0.05, cfg);
  REQUIRE(u.ok);
  CHECK(u.frame.determinant() > 0);
  CHECK(u.frame(0, 0) > 0);
}
