// Acceptance run: one line per criterion, exit status 0 iff all pass.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <tuple>

#include "mcf/conley.hpp"
#include "mcf/duality.hpp"
#include "mcf/expr.hpp"
#include "mcf/inducedmaps.hpp"
#include "mcf/parallel.hpp"
#include "mcf/report.hpp"
#include "mcf/scenario.hpp"

using namespace mcf;
using namespace mcf::flow;
using maps::MapChain;

namespace {

// Pinned tolerances and budgets.
constexpr double kViolationTol = 1e-6;        // R-grid violation against 0.5 ln 1.5
constexpr double kFdStep = 1e-5;              // central differences
constexpr double kFdRelTol = 1e-6;
constexpr double kBudgetLocal = 5.0;          // seconds, per 1D example
constexpr double kBudgetCounterexample = 30.0;
constexpr double kBudgetTorus = 120.0;
constexpr double kBudgetDegree = 60.0;
constexpr double kBudgetDuality = 120.0;
constexpr double kBudgetProperties = 600.0;
constexpr int kMinChainMapFixtures = 6;

const char* kTorus = "(2+cos(2*pi*x2))*cos(2*pi*x1) + 0.1*sin(2*pi*x2)";
const char* kCircle = "cos(2*pi*x1)/(4*pi^2)";

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

MorseDatum datum(const Domain& d, const std::string& f, const Neighborhood* region = nullptr) {
  return make_datum(ScalarField::parse(d, f), Metric(d.dim), region, FlowConfig{});
}

MapChain circle_map(const std::string& e) {
  Domain t = Domain::torus(1);
  return MapChain::of(SmoothMap::parse(t, t, {e}));
}

// Every complex and chain map built along the way, rechecked independently.
struct Ledger {
  int complexes = 0, complex_failures = 0;
  std::vector<std::string> maps;
  int map_failures = 0;

  const moduli::BoundaryResult& complex(const moduli::BoundaryResult& b) {
    ++complexes;
    if (!zalg::check_square_zero(b.complex).holds) ++complex_failures;
    return b;
  }
  void complex(const zalg::GradedComplex& c) {
    ++complexes;
    if (!zalg::check_square_zero(c).holds) ++complex_failures;
  }
  void map(const std::string& name, const zalg::GradedIntMap& m, const zalg::GradedComplex& a,
           const zalg::GradedComplex& b) {
    maps.push_back(name);
    if (!zalg::verify_chain_map(m, a, b).holds) ++map_failures;
  }
};

Ledger ledger;

zalg::IntMatrix on_h(const zalg::GradedIntMap& m, const zalg::GradedComplex& a, const zalg::GradedComplex& b, int k) {
  return zalg::induced_on_homology(m, a, b).blocks[k];
}

bool is_identity(const zalg::IntMatrix& m) { return m.rows() == m.cols() && m == zalg::IntMatrix::identity(m.rows()); }

struct Outcome {
  bool pass = false;
  std::string detail;
  double budget = 0;  // 0: no runtime limit
};

using Criterion = std::function<Outcome()>;

// 1. local homology of x^2 and -x^2 on [-1, 1]
Outcome local_examples() {
  Domain b = Domain::box({{-5, 5}});
  Neighborhood N(b, {Box{{-1}, {1}}});
  std::ostringstream s;
  bool ok = true;
  double worst = 0;
  for (auto [f, want] : {std::pair{"x1^2", "H_0=Z, H_1=0"}, std::pair{"-x1^2", "H_0=0, H_1=Z"}}) {
    auto t0 = std::chrono::steady_clock::now();
    auto r = conley::local_morse_homology(ScalarField::parse(b, f), Metric(1), N, FlowConfig{}, conley::ConleyConfig{});
    double dt = seconds_since(t0);
    worst = std::max(worst, dt);
    ledger.complex(r.complex);
    bool hit = r.homology.describe() == want && dt < kBudgetLocal;
    ok = ok && hit;
    s << f << ": " << r.homology.describe() << " (" << dt << " s); ";
  }
  return {ok, s.str(), 0};
}

// 2. identity maps through x^2, (x-3)^2, x^2 on N = [-1, 1]
Outcome counterexample() {
  FlowConfig cfg;
  conley::ConleyConfig cc;
  Domain b = Domain::box({{-5, 5}});
  Neighborhood N(b, {Box{{-1}, {1}}});
  auto A = datum(b, "x1^2", &N), B = datum(b, "(x1-3)^2", &N), C = datum(b, "x1^2", &N);
  auto ca_ = ledger.complex(moduli::boundary_operator(A, &N, cfg));
  auto cb = ledger.complex(moduli::boundary_operator(B, &N, cfg));
  auto ccx = ledger.complex(moduli::boundary_operator(C, &N, cfg));
  auto id = MapChain::identity(b);
  auto ab = induced::induced_chain_map(id, induced::Pair{&A, &B, &N, &N}, ca_, cb, cfg);
  auto bc = induced::induced_chain_map(id, induced::Pair{&B, &C, &N, &N}, cb, ccx, cfg);
  auto ac = induced::induced_chain_map(id, induced::Pair{&A, &C, &N, &N}, ca_, ccx, cfg);
  ledger.map("local id beta-alpha", ab.map, ca_.complex, cb.complex);
  ledger.map("local id gamma-beta", bc.map, cb.complex, ccx.complex);
  ledger.map("local id gamma-alpha", ac.map, ca_.complex, ccx.complex);
  bool zero_ab = true, zero_bc = true;
  for (int k = 0; k <= 1; ++k) {
    zero_ab = zero_ab && on_h(ab.map, ca_.complex, cb.complex, k).is_zero();
    zero_bc = zero_bc && on_h(bc.map, cb.complex, ccx.complex, k).is_zero();
  }
  bool id_ac = is_identity(on_h(ac.map, ca_.complex, ccx.complex, 0)) &&
               on_h(ac.map, ca_.complex, ccx.complex, 1).rows() == 0;
  auto r = induced::compose_with_flow(id, id, 1.0, A, B, C, ca_, cb, ccx, &N, &N, &N, cfg, cc);
  const double want = 0.5 * std::log(1.5);
  bool located = !r.hypothesis_ok && r.isolation && r.isolation->violation &&
                 std::abs(*r.isolation->violation - want) <= kViolationTol;
  std::ostringstream s;
  s << "id_ba=0 " << zero_ab << ", id_cb=0 " << zero_bc << ", id_ca=1 " << id_ac << ", violation R = ";
  if (r.isolation && r.isolation->violation)
    s.precision(10), s << *r.isolation->violation;
  else
    s << "none";
  s << " (want " << want << ")";
  return {zero_ab && zero_bc && id_ac && located, s.str(), kBudgetCounterexample};
}

// 3. torus height function
Outcome torus() {
  FlowConfig cfg;
  auto d = datum(Domain::torus(2), kTorus);
  auto c = ledger.complex(moduli::boundary_operator(d, nullptr, cfg));
  auto h = zalg::homology(c.complex);
  long chi = 0;
  for (int k = 0; k <= c.complex.top(); ++k) chi += (k % 2 ? -1 : 1) * c.complex.rank(k);
  bool free = true;
  for (const auto& deg : h.degrees) free = free && deg.torsion.empty();
  std::ostringstream s;
  s << h.describe() << ", chi = " << chi;
  return {h.betti() == std::vector<int>{1, 2, 1} && free && chi == 0, s.str(), kBudgetTorus};
}

// 6. degrees 2 and 3 on the circle and their composite
Outcome degrees() {
  FlowConfig cfg;
  conley::ConleyConfig cc;
  auto d = datum(Domain::torus(1), kCircle);
  auto c = ledger.complex(moduli::boundary_operator(d, nullptr, cfg));
  induced::Pair p{&d, &d};
  auto two = induced::perturb_to_transverse(circle_map("2*x1"), p, c, c, cfg, cc);
  auto three = induced::induced_chain_map(circle_map("3*x1"), p, c, c, cfg);
  ledger.map("circle degree 2", two.induced.map, c.complex, c.complex);
  ledger.map("circle degree 3", three.map, c.complex, c.complex);
  auto r = induced::compose_with_flow(two.map, circle_map("3*x1"), 1.0, d, d, d, c, c, c, nullptr, nullptr, nullptr,
                                      cfg, cc);
  ledger.map("circle composite", r.composite.map, c.complex, c.complex);
  auto d2 = zalg::to_string(on_h(two.induced.map, c.complex, c.complex, 1)(0, 0));
  auto d3 = zalg::to_string(on_h(three.map, c.complex, c.complex, 1)(0, 0));
  auto d6 = zalg::to_string(on_h(r.composite.map, c.complex, c.complex, 1)(0, 0));
  auto prod = zalg::compose(three.map, two.induced.map);
  bool eq = zalg::equal_on_homology(prod, r.composite.map, c.complex, c.complex);
  std::ostringstream s;
  s << "H_1: x" << d2 << ", x" << d3 << ", composite x" << d6 << ", product equal " << eq;
  return {d2 == "2" && d3 == "3" && d6 == "6" && eq && r.hypothesis_ok, s.str(), kBudgetDegree};
}

// 7. rotations of the circle joined by a homotopy
Outcome rotations() {
  FlowConfig cfg;
  conley::ConleyConfig cc;
  auto d = datum(Domain::torus(1), kCircle);
  auto c = ledger.complex(moduli::boundary_operator(d, nullptr, cfg));
  auto fam = [](double lam) { return circle_map("x1 + 0.1 + 0.2*" + std::to_string(lam)); };
  auto r = induced::homotopy_check(fam, induced::Pair{&d, &d}, c, c, cfg, cc);
  ledger.map("rotation 0.1", r.h0.map, c.complex, c.complex);
  ledger.map("rotation 0.3", r.h1.map, c.complex, c.complex);
  bool eq = zalg::equal_on_homology(r.h0.map, r.h1.map, c.complex, c.complex);
  std::ostringstream s;
  s << "isolated " << r.hypothesis_ok << ", equal on homology " << eq;
  return {r.hypothesis_ok && eq && r.equal_on_homology, s.str(), 0};
}

std::shared_ptr<const VectorField> field(const Domain& d, const std::vector<std::string>& c) {
  return std::make_shared<ExpressionField>(ExpressionField::parse(d, c));
}

// 8. count symmetry, Poincare duality, Conley duality
Outcome duality_suite() {
  FlowConfig cfg;
  conley::ConleyConfig cc;
  std::ostringstream s;
  bool ok = true;
  Domain line = Domain::box({{-2, 2}});
  Domain sq = Domain::box({{-3, 3}, {-3, 3}});
  Neighborhood unit(line, {Box{{-1}, {1}}});
  Neighborhood sqN(sq, {Box{{-2, -2}, {2, 2}}});
  struct Fix {
    const char* name;
    Domain dom;
    std::string f;
    const Neighborhood* region;
  };
  for (const Fix& x : {Fix{"circle", Domain::torus(1), kCircle, nullptr}, Fix{"torus", Domain::torus(2), kTorus, nullptr},
                       Fix{"interval cubic", line, "x1^3 - 3*x1", nullptr}, Fix{"local x^2", line, "x1^2", &unit},
                       Fix{"planar cubic", sq, "x1^3 - 3*x1 + x2^3 - 3*x2 + 0.1*x1*x2", &sqN}}) {
    auto d = datum(x.dom, x.f, x.region);
    auto sym = duality::verify_count_symmetry(d, x.region, cfg);
    auto pd = duality::verify_poincare_duality(d, x.region, cfg);
    bool hit = sym.holds && pd.chain.holds && pd.iso_on_homology && pd.groups_match;
    ok = ok && hit;
    s << x.name << (hit ? " ok" : " FAIL") << "; ";
  }
  Domain box2 = Domain::box({{-2, 2}, {-2, 2}});
  Neighborhood square(box2, {Box{{-1, -1}, {1, 1}}});
  Domain big = Domain::box({{-5, 5}});
  Neighborhood bigunit(big, {Box{{-1}, {1}}});
  Domain t2 = Domain::torus(2);
  auto grad = std::make_shared<GradientField>(ScalarField::parse(t2, kTorus), Metric(2));
  struct Conley {
    const char* name;
    std::shared_ptr<const VectorField> X;
    const Neighborhood* N;
    ScalarField f;
    Metric g;
  };
  Neighborhood whole = Neighborhood::whole(t2);
  for (const Conley& k :
       {Conley{"attractor", field(big, {"-x1"}), &bigunit, ScalarField::parse(big, "x1^2"), Metric(1)},
        Conley{"saddle", field(box2, {"x1", "-x2"}), &square, ScalarField::parse(box2, "x2^2 - x1^2"), Metric(2)},
        Conley{"global T2", grad, &whole, ScalarField::parse(t2, "0"), Metric(2)}}) {
    auto r = duality::conley_duality_check(k.X, *k.N, k.f, k.g, cfg, cc);
    ledger.complex(r.forward.local.complex);
    ledger.complex(r.dual_complex);
    ok = ok && r.pass;
    s << "Conley " << k.name << (r.pass ? " ok" : " FAIL") << "; ";
  }
  return {ok, s.str(), kBudgetDuality};
}

// 9. continuation between perturbed torus data
Outcome continuation() {
  FlowConfig cfg;
  conley::ConleyConfig cc;
  Domain t2 = Domain::torus(2);
  auto A = datum(t2, "((2+cos(2*pi*x2))*cos(2*pi*x1) + 0.1*sin(2*pi*x2))/(4*pi^2)");
  auto B = datum(t2, "((2+cos(2*pi*x2))*cos(2*pi*x1) + 0.15*sin(2*pi*x2) + 0.05*cos(2*pi*x1))/(4*pi^2)");
  auto ca = ledger.complex(moduli::boundary_operator(A, nullptr, cfg));
  auto cb = ledger.complex(moduli::boundary_operator(B, nullptr, cfg));
  auto phi = induced::continuation_map(A, B, nullptr, 10.0, ca, cb, cfg, cc);
  ledger.map("continuation A to B", phi.map.map, ca.complex, cb.complex);
  bool iso = true;
  auto H = zalg::induced_on_homology(phi.map.map, ca.complex, cb.complex);
  for (int k = 0; k <= 2; ++k) {
    auto det = zalg::to_string(H.blocks[k].determinant());
    iso = iso && (det == "1" || det == "-1");
  }
  auto same = induced::continuation_map(A, A, nullptr, 10.0, ca, ca, cfg, cc);
  ledger.map("continuation A to A", same.map.map, ca.complex, ca.complex);
  bool ident = zalg::equal_on_homology(same.map.map, zalg::GradedIntMap::identity(ca.complex), ca.complex, ca.complex);
  std::ostringstream s;
  s << "isomorphism " << iso << ", identical data gives identity " << ident;
  return {iso && ident, s.str(), 0};
}

// Further induced maps so that criterion 5 covers several fixtures.
void extra_maps() {
  FlowConfig cfg;
  conley::ConleyConfig cc;
  Domain t2 = Domain::torus(2);
  auto d = datum(t2, kTorus);
  auto c = ledger.complex(moduli::boundary_operator(d, nullptr, cfg));
  auto id = induced::induced_chain_map(MapChain::identity(t2), induced::Pair{&d, &d}, c, c, cfg);
  ledger.map("torus identity", id.map, c.complex, c.complex);
  auto shear = induced::perturb_to_transverse(MapChain::of(SmoothMap::parse(t2, t2, {"x1 + x2", "x2"})),
                                              induced::Pair{&d, &d}, c, c, cfg, cc);
  ledger.map("torus shear", shear.induced.map, c.complex, c.complex);
  auto circ = datum(Domain::torus(1), kCircle);
  auto cc1 = ledger.complex(moduli::boundary_operator(circ, nullptr, cfg));
  auto flip = induced::induced_chain_map(circle_map("-x1"), induced::Pair{&circ, &circ}, cc1, cc1, cfg);
  ledger.map("circle reflection", flip.map, cc1.complex, cc1.complex);
}

Outcome square_zero() {
  std::ostringstream s;
  s << ledger.complexes << " complexes, " << ledger.complex_failures << " with d∘d != 0";
  return {ledger.complexes > 0 && ledger.complex_failures == 0, s.str(), 0};
}

Outcome chain_maps() {
  std::ostringstream s;
  s << ledger.maps.size() << " induced maps, " << ledger.map_failures << " failing the chain-map identity";
  return {int(ledger.maps.size()) >= kMinChainMapFixtures && ledger.map_failures == 0, s.str(), 0};
}

// 10. property suites
std::vector<std::vector<int>> graded(const moduli::BoundaryResult& b, const std::vector<int>& flip) {
  std::vector<std::vector<int>> s;
  for (const auto& deg : b.points) {
    s.emplace_back();
    for (int i : deg) s.back().push_back(flip[i]);
  }
  return s;
}

zalg::IntMatrix conj(const zalg::IntMatrix& m, const std::vector<int>& rows, const std::vector<int>& cols) {
  zalg::IntMatrix out = m;
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) out(i, j) *= rows[i] * cols[j];
  return out;
}

bool flip_covariance(std::mt19937& rng) {
  FlowConfig cfg;
  conley::ConleyConfig cc;
  bool ok = true;
  for (auto [dom, f, h] : {std::tuple{Domain::torus(1), std::string(kCircle), std::vector<std::string>{"3*x1"}},
                           std::tuple{Domain::torus(2), std::string(kTorus), std::vector<std::string>{"x1 + x2", "x2"}}}) {
    auto d = datum(dom, f);
    auto c = moduli::boundary_operator(d, nullptr, cfg);
    std::vector<int> flip(d.points().size());
    for (auto& s : flip) s = (rng() & 1) ? -1 : 1;
    flip[0] = -1;
    auto e = d;
    for (std::size_t i = 0; i < flip.size(); ++i) e.points()[i].orientation *= flip[i];
    auto ce = moduli::boundary_operator(e, nullptr, cfg);
    auto sg = graded(c, flip);
    for (int k = 1; k <= c.complex.top(); ++k)
      ok = ok && ce.complex.differential[k] == conj(c.complex.differential[k], sg[k - 1], sg[k]);
    ok = ok && zalg::homology(ce.complex) == zalg::homology(c.complex);
    auto base = induced::perturb_to_transverse(MapChain::of(SmoothMap::parse(dom, dom, h)), induced::Pair{&d, &d}, c,
                                               c, cfg, cc);
    auto both = induced::induced_chain_map(base.map, induced::Pair{&e, &e}, ce, ce, cfg);
    for (int k = 0; k <= c.complex.top(); ++k) {
      ok = ok && both.map.blocks[k] == conj(base.induced.map.blocks[k], sg[k], sg[k]);
      ok = ok && on_h(both.map, ce.complex, ce.complex, k).determinant() ==
                     on_h(base.induced.map, c.complex, c.complex, k).determinant();
    }
  }
  return ok;
}

bool snf_properties(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> dim(1, 6), ent(-9, 9);
  bool ok = true;
  for (int t = 0; t < 500 && ok; ++t) {
    int r = dim(rng), c = dim(rng);
    zalg::IntMatrix a(r, c);
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < c; ++j) a(i, j) = (rng() % 3 == 0) ? 0 : ent(rng);
    auto s = zalg::smith_normal_form(a);
    ok = s.U * s.D * s.V == a && abs(s.U.determinant()) == 1 && abs(s.V.determinant()) == 1;
    for (std::size_t i = 0; ok && i + 1 < s.factors.size(); ++i) ok = s.factors[i + 1] % s.factors[i] == 0;
  }
  return ok;
}

std::string random_expr(std::mt19937_64& rng, int n, int depth) {
  std::uniform_int_distribution<int> pick(0, 7), var(1, n);
  std::uniform_real_distribution<double> c(-2, 2);
  if (depth == 0) return pick(rng) < 4 ? "x" + std::to_string(var(rng)) : "(" + std::to_string(c(rng)) + ")";
  auto a = random_expr(rng, n, depth - 1), b = random_expr(rng, n, depth - 1);
  switch (pick(rng)) {
    case 0: return "(" + a + "+" + b + ")";
    case 1: return "(" + a + "-" + b + ")";
    case 2: case 3: return "(" + a + "*" + b + ")";
    case 4: return "sin(" + a + ")";
    case 5: return "cos(" + a + ")";
    case 6: return "exp(" + a + "/4)";
    default: return "(" + a + ")^" + std::to_string(1 + int(rng() % 3));
  }
}

// Largest relative error of gradient and Hessian against central differences.
double autodiff_error(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1, 1);
  double worst = 0;
  auto rel = [](double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); };
  for (int trial = 0; trial < 300; ++trial) {
    int n = 1 + trial % 3;
    auto e = expr::Expression::parse(random_expr(rng, n, 3), n);
    double p[3] = {u(rng), u(rng), u(rng)};
    auto j = e.jet2(std::span<const double>(p, n));
    for (int i = 0; i < n; ++i) {
      double a[3], b[3];
      std::copy(p, p + 3, a);
      std::copy(p, p + 3, b);
      a[i] += kFdStep;
      b[i] -= kFdStep;
      double fd = (e.eval(std::span<const double>(a, n)) - e.eval(std::span<const double>(b, n))) / (2 * kFdStep);
      worst = std::max(worst, rel(j.g[i], fd));
      auto ja = e.jet1(std::span<const double>(a, n)), jb = e.jet1(std::span<const double>(b, n));
      for (int k = 0; k < n; ++k)
        worst = std::max(worst, rel(j.h[expr::packed(i, k)], (ja.d[k] - jb.d[k]) / (2 * kFdStep)));
    }
  }
  return worst;
}

const char* kDeterminismScenario = R"y(schema: mcfkit-scenario/1
seed: 11
domains:
  T2: {torus: 2}
  S1: {torus: 1}
fields:
  h: {domain: T2, expr: "(2+cos(2*pi*x2))*cos(2*pi*x1) + 0.1*sin(2*pi*x2)"}
  c: {domain: S1, expr: "cos(2*pi*x1)/(4*pi^2)"}
maps:
  shear: {source: T2, target: T2, components: ["x1 + x2", "x2"]}
  triple: {source: S1, target: S1, components: ["3*x1"]}
tasks:
  - {op: morse_homology, name: torus, field: h}
  - {op: induced_map, name: shear, map: shear, source: h, target: h}
  - {op: induced_map, name: triple, map: triple, source: c, target: c}
  - {op: count_symmetry, name: symmetry, field: h}
)y";

bool thread_determinism() {
  auto sc = cli::parse_scenario(kDeterminismScenario);
  int saved = par::threads();
  std::string ref;
  bool ok = true;
  for (int t : {1, 2, 4}) {
    par::set_threads(t);
    auto out = cli::run_scenario(sc, cli::RunOptions{});
    auto text = out.report.dump();
    ok = ok && out.exit_code == 0;
    if (ref.empty())
      ref = text;
    else
      ok = ok && text == ref;
  }
  par::set_threads(saved);
  return ok;
}

Outcome properties() {
  std::mt19937 rng(20240611);
  std::mt19937_64 rng64(99);
  bool flip = flip_covariance(rng);
  bool snf = snf_properties(rng64);
  double ad = autodiff_error(rng64);
  bool det = thread_determinism();
  std::ostringstream s;
  s << "orientation flips " << flip << ", SNF " << snf << ", autodiff max rel err " << ad << ", thread determinism "
    << det;
  return {flip && snf && ad < kFdRelTol && det, s.str(), kBudgetProperties};
}

}  // namespace

int main() {
  auto start = std::chrono::steady_clock::now();
  std::vector<std::pair<int, Criterion>> order = {
      {1, local_examples}, {2, counterexample}, {3, torus},  {6, degrees},
      {7, rotations},      {8, duality_suite},        {9, continuation},
  };
  std::map<int, std::pair<Outcome, double>> results;
  auto run = [&](int id, const Criterion& c) {
    auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what(), 0};
    }
    results[id] = {o, seconds_since(t0)};
  };
  for (auto& [id, c] : order) run(id, c);
  run(0, [] {
    extra_maps();
    return Outcome{true, "", 0};
  });
  run(4, square_zero);
  run(5, chain_maps);
  run(10, properties);
  results.erase(0);

  int failed = 0;
  for (auto& [id, r] : results) {
    auto& [o, dt] = r;
    bool in_time = o.budget == 0 || dt < o.budget;
    bool pass = o.pass && in_time;
    failed += !pass;
    while (o.detail.size() >= 2 && o.detail.compare(o.detail.size() - 2, 2, "; ") == 0) o.detail.resize(o.detail.size() - 2);
    std::printf("criterion %2d: %s  [%.2f s%s]  %s\n", id, pass ? "PASS" : "FAIL", dt,
                o.budget > 0 ? (in_time ? " within budget" : " OVER BUDGET") : "", o.detail.c_str());
  }
  std::printf("total %.1f s, %d of %zu criteria passed\n", seconds_since(start), int(results.size()) - failed,
              results.size());
  return failed ? 1 : 0;
}
