#include <doctest.h>

#include "fixtures.hpp"
#include "mcf/conley.hpp"
#include "mcf/inducedmaps.hpp"

using namespace mcf;
using namespace mcf::flow;
using namespace mcf::conley;

namespace {

std::shared_ptr<const VectorField> field(const Domain& d, const std::vector<std::string>& c) {
  return std::make_shared<ExpressionField>(ExpressionField::parse(d, c));
}

const Domain kLine = Domain::box({{-5, 5}});
const Neighborhood kUnit(kLine, {Box{{-1}, {1}}});

}  // namespace

TEST_CASE("isolating neighborhoods on the line") {
  FlowConfig fc;
  ConleyConfig cc;
  GradientField a(ScalarField::parse(kLine, "x1^2"), Metric(1));
  auto c = verify_isolating_neighborhood(a, kUnit, fc, cc);
  CHECK(c.verdict == Verdict::certified);
  REQUIRE(c.equilibria.size() == 1);
  CHECK(std::abs(c.equilibria[0][0]) < 1e-9);
  for (auto& s : c.s_samples) CHECK(std::abs(s[0]) < 1e-9);

  GradientField b(ScalarField::parse(kLine, "(x1-3)^2"), Metric(1));
  auto cb = verify_isolating_neighborhood(b, kUnit, fc, cc);
  CHECK(cb.verdict == Verdict::certified);
  CHECK(cb.s_samples.empty());

  Neighborhood half(kLine, {Box{{0}, {1}}});
  auto bad = verify_isolating_neighborhood(a, half, fc, cc);
  CHECK(bad.verdict == Verdict::refuted);
}

TEST_CASE("planar saddle") {
  FlowConfig fc;
  ConleyConfig cc;
  Domain sq = Domain::box({{-2, 2}, {-2, 2}});
  Neighborhood N(sq, {Box{{-1, -1}, {1, 1}}});
  auto X = field(sq, {"x1", "-x2"});
  auto c = verify_isolating_neighborhood(*X, N, fc, cc);
  CHECK(c.verdict == Verdict::certified);
  for (auto& s : c.s_samples) CHECK(s.norm() < 1e-9);
  auto f = ScalarField::parse(sq, "x2^2 - x1^2");
  auto ly = verify_lyapunov(f, *X, N, c.s_samples, fc, cc);
  CHECK(ly.verdict == Verdict::certified);
  auto r = mcf_homology(X, N, f, Metric(2), fc, cc);
  CHECK(r.local.homology.describe() == "H_0=0, H_1=Z, H_2=0");
  auto lm = local_morse_homology(ScalarField::parse(sq, "x1^2 - x2^2"), Metric(2), N, fc, cc);
  CHECK(lm.homology.describe() == "H_0=0, H_1=Z, H_2=0");
}

TEST_CASE("Lyapunov checks") {
  FlowConfig fc;
  ConleyConfig cc;
  auto X = field(kLine, {"-x1"});
  auto c = verify_isolating_neighborhood(*X, kUnit, fc, cc);
  REQUIRE(c.verdict == Verdict::certified);
  CHECK(verify_lyapunov(ScalarField::parse(kLine, "x1^2"), *X, kUnit, c.s_samples, fc, cc).verdict ==
        Verdict::certified);
  CHECK(verify_lyapunov(ScalarField::parse(kLine, "-x1^2"), *X, kUnit, c.s_samples, fc, cc).verdict ==
        Verdict::refuted);
}

TEST_CASE("Conley homology of attractor and repeller") {
  FlowConfig fc;
  ConleyConfig cc;
  auto at = mcf_homology(field(kLine, {"-x1"}), kUnit, ScalarField::parse(kLine, "x1^2"), Metric(1), fc, cc);
  CHECK(at.local.homology.describe() == "H_0=Z, H_1=0");
  auto rep = mcf_homology(field(kLine, {"x1"}), kUnit, ScalarField::parse(kLine, "-x1^2"), Metric(1), fc, cc);
  CHECK(rep.local.homology.describe() == "H_0=0, H_1=Z");
  // the gradient flow of f with f as its own Lyapunov function
  auto g = std::make_shared<GradientField>(ScalarField::parse(kLine, "x1^2"), Metric(1));
  auto own = mcf_homology(g, kUnit, g->field(), Metric(1), fc, cc);
  auto lm = local_morse_homology(g->field(), Metric(1), kUnit, fc, cc);
  CHECK(own.local.homology == lm.homology);
  // a second Lyapunov function for the same pair
  auto twice = mcf_homology(field(kLine, {"-x1"}), kUnit, ScalarField::parse(kLine, "2*x1^2"), Metric(1), fc, cc);
  CHECK(twice.local.homology == at.local.homology);
}

TEST_CASE("non-isolating region is rejected by mcf_homology") {
  FlowConfig fc;
  ConleyConfig cc;
  Neighborhood half(kLine, {Box{{0}, {1}}});
  CHECK_THROWS_AS(mcf_homology(field(kLine, {"-x1"}), half, ScalarField::parse(kLine, "x1^2"), Metric(1), fc, cc),
                  StageFailure);
}

TEST_CASE("flow maps and pullbacks") {
  FlowConfig fc;
  ConleyConfig cc;
  Domain t1 = Domain::torus(1), t2 = Domain::torus(2);
  auto xb = field(t1, {"sin(2*pi*x1)/(2*pi)"});
  auto xa = field(t2, {"sin(2*pi*x1)/(2*pi)", "0.5*sin(2*pi*x2)/(2*pi)"});
  auto proj = SmoothMap::parse(t2, t1, {"x1"});
  CHECK(verify_flow_map(proj, *xa, *xb, fc, cc).equivariant);
  Neighborhood nb(t1, {Box{{0.3}, {0.7}}});
  auto pb = pullback_neighborhood(proj, nb, xa, xb, fc, cc);
  REQUIRE(pb.region.boxes().size() == 1);
  CHECK(pb.region.boxes()[0].lo[0] == doctest::Approx(0.3).epsilon(1e-9));
  CHECK(pb.region.boxes()[0].hi[0] == doctest::Approx(0.7).epsilon(1e-9));
  CHECK(pb.region.boxes()[0].hi[1] - pb.region.boxes()[0].lo[1] == doctest::Approx(1.0));
  CHECK(pb.certificate.verdict == Verdict::certified);
  CHECK(pb.isolated.verdict == Verdict::certified);

  auto dbl = SmoothMap::parse(t1, t1, {"2*x1"});
  auto xs = field(t1, {"sin(4*pi*x1)/(4*pi)"});
  CHECK(verify_flow_map(dbl, *xs, *xb, fc, cc).equivariant);
  CHECK_FALSE(verify_flow_map(dbl, *xb, *xb, fc, cc).equivariant);
  Neighborhood nc(t1, {Box{{0.4}, {0.6}}});
  auto pd = pullback_neighborhood(dbl, nc, xs, xb, fc, cc);
  REQUIRE(pd.region.boxes().size() == 2);
  CHECK(pd.region.boxes()[0].lo[0] == doctest::Approx(0.2).epsilon(1e-9));
  CHECK(pd.region.boxes()[0].hi[0] == doctest::Approx(0.3).epsilon(1e-9));
  CHECK(pd.region.boxes()[1].lo[0] == doctest::Approx(0.7).epsilon(1e-9));
  CHECK(pd.region.boxes()[1].hi[0] == doctest::Approx(0.8).epsilon(1e-9));
  CHECK(pd.certificate.verdict == Verdict::certified);

  auto id = SmoothMap::identity(t1);
  auto pi = pullback_neighborhood(id, nb, xb, xb, fc, cc);
  REQUIRE(pi.region.boxes().size() == 1);
  CHECK(pi.region.boxes()[0].lo[0] == doctest::Approx(0.3).epsilon(1e-9));
}

TEST_CASE("induced maps of flow maps") {
  FlowConfig fc;
  ConleyConfig cc;
  Domain t1 = Domain::torus(1), t2 = Domain::torus(2);
  auto xb = field(t1, {"sin(2*pi*x1)/(2*pi)"});
  auto fb = ScalarField::parse(t1, "cos(2*pi*x1)/(2*pi)");
  Neighborhood nb(t1, {Box{{0.3}, {0.7}}});

  auto id = mcf_induced_map(SmoothMap::identity(t1), xb, xb, nb, fb, Metric(1), Metric(1), fc, cc);
  CHECK(id.on_homology.blocks[0] == zalg::IntMatrix::identity(1));

  auto xa = field(t2, {"sin(2*pi*x1)/(2*pi)", "0.5*sin(2*pi*x2)/(2*pi)"});
  auto pr = mcf_induced_map(SmoothMap::parse(t2, t1, {"x1"}), xa, xb, nb, fb, Metric(2), Metric(1), fc, cc);
  CHECK(pr.source.homology.describe() == "H_0=Z, H_1=Z, H_2=0");
  CHECK(pr.on_homology.blocks[0] == zalg::IntMatrix::identity(1));

  auto xs = field(t1, {"sin(4*pi*x1)/(4*pi)"});
  Neighborhood nc(t1, {Box{{0.4}, {0.6}}});
  auto db = mcf_induced_map(SmoothMap::parse(t1, t1, {"2*x1"}), xs, xb, nc, fb, Metric(1), Metric(1), fc, cc);
  CHECK(db.source.homology.describe() == "H_0=Z^2, H_1=0");
  CHECK(db.on_homology.blocks[0] == zalg::IntMatrix::from_rows({{1, 1}}));
}

TEST_CASE("gradient homotopy leaving the region") {
  FlowConfig fc;
  ConleyConfig cc;
  auto s = scan_gradient_homotopy(ScalarField::parse(kLine, "x1^2"), ScalarField::parse(kLine, "(x1-3)^2"),
                                  Metric(1), kUnit, fc, cc);
  CHECK_FALSE(s.isolated);
  REQUIRE(s.crossing.has_value());
  CHECK(*s.crossing == doctest::Approx(1.0 / 3).epsilon(1e-8));
  auto ok = scan_gradient_homotopy(ScalarField::parse(kLine, "x1^2"), ScalarField::parse(kLine, "x1^2 + 0.2*x1"),
                                   Metric(1), kUnit, fc, cc);
  CHECK(ok.isolated);
}

TEST_CASE("perturbation that breaks isolation is rejected") {
  FlowConfig fc;
  ConleyConfig cc;
  cc.margin_int = 1e-4;
  Neighborhood na(kLine, {Box{{-2.5}, {-1.5}}, Box{{-0.5}, {0.5}}, Box{{1.5}, {2.5}}});
  Neighborhood nb(kLine, {Box{{-1.5}, {1.5}}});
  auto A = fx::datum(kLine, "-cos(pi*x1)", &na), B = fx::datum(kLine, "(x1^2-1)^2", &nb);
  auto ca = moduli::boundary_operator(A, &na, fc), cb = moduli::boundary_operator(B, &nb, fc);
  induced::Pair p{&A, &B, &na, &nb};
  auto h = maps::MapChain::of(SmoothMap::parse(kLine, kLine, {"0.74975*x1"}));
  // h(0) = 0 is the maximum of B: the unperturbed map is not transverse
  auto r = induced::perturb_to_transverse(h, p, ca, cb, fc, cc);
  REQUIRE(r.attempts.size() >= 2);
  CHECK_FALSE(r.attempts[0].accepted);
  bool rejected_iso = false;
  for (auto& a : r.attempts) rejected_iso = rejected_iso || a.reason.find("isolation") != std::string::npos;
  CHECK(rejected_iso);
  CHECK(r.eps == 2.5e-4);
  CHECK(r.induced.map.blocks[0] == zalg::IntMatrix::from_rows({{1, 1, 0}, {0, 0, 1}}));
}
