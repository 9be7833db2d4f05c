#include "mcf/duality.hpp"

#include <sstream>

namespace mcf::duality {

int c_sign(int k) { return ((k * (k + 1) / 2) % 2 == 0) ? 1 : -1; }

namespace {

int sgn_det(const Mat& m) {
  if (m.cols() == 0) return 1;
  double d = m.determinant();
  return d > 0 ? 1 : (d < 0 ? -1 : 0);
}

bool same_groups(const zalg::DegreeHomology& a, const zalg::DegreeHomology& b) {
  return a.betti == b.betti && a.torsion == b.torsion;
}

bool unimodular(const zalg::IntMatrix& m) {
  if (m.rows() != m.cols()) return false;
  if (m.rows() == 0) return true;
  auto d = m.determinant();
  return d == 1 || d == -1;
}

}  // namespace

DualDatum dual_datum(const MorseDatum& d) {
  DualDatum out;
  const int m = d.dim();
  ScalarField neg = d.field().negated();
  std::vector<flow::CriticalPoint> pts;
  for (const auto& c : d.points()) {
    flow::CriticalPoint h = flow::analyze_critical_point(neg, d.metric(), c.x);
    h.x = c.x;
    h.label = c.label;
    if (h.index != m - c.index) throw std::runtime_error("dual_datum: index mismatch at " + c.label);
    Mat frame(m, m);
    frame << c.unstable_frame(), h.unstable_frame();
    h.orientation = c_sign(c.index) * c.orientation * sgn_det(frame);
    out.coorientation.push_back(h.orientation);
    pts.push_back(std::move(h));
  }
  out.dual = MorseDatum(neg, d.metric(), std::move(pts));
  return out;
}

std::vector<int> double_dual_signs(const MorseDatum& d) {
  auto dd = dual_datum(dual_datum(d).dual).dual;
  std::vector<int> s;
  for (std::size_t i = 0; i < d.points().size(); ++i) s.push_back(dd.points()[i].orientation * d.points()[i].orientation);
  return s;
}

zalg::GradedIntMap poincare_duality_map(const BoundaryResult& base, const BoundaryResult& dual, int m) {
  zalg::GradedIntMap pd;
  pd.degree_sign = -1;
  pd.degree_offset = m;
  for (int k = 0; k <= base.complex.top(); ++k) {
    int r = base.complex.rank(k);
    if (dual.complex.rank(m - k) != r) throw std::runtime_error("poincare_duality_map: rank mismatch");
    pd.blocks.push_back(zalg::IntMatrix::identity(r));
  }
  return pd;
}

SymmetryReport verify_count_symmetry(const MorseDatum& d, const Neighborhood* region, const FlowConfig& cfg) {
  SymmetryReport rep;
  const int m = d.dim();
  auto base = moduli::boundary_operator(d, region, cfg);
  auto dd = dual_datum(d);
  auto dual = moduli::boundary_operator(dd.dual, region, cfg);
  auto pos = [](const BoundaryResult& b, int deg, int idx) {
    const auto& v = b.points[deg];
    for (std::size_t i = 0; i < v.size(); ++i)
      if (v[i] == idx) return int(i);
    return -1;
  };
  for (int k = 1; k <= base.complex.top(); ++k)
    for (int x : base.points[k])
      for (int y : base.points[k - 1]) {
        CountEntry e;
        e.x = x;
        e.y = y;
        e.n = long(base.complex.differential[k](pos(base, k - 1, y), pos(base, k, x)));
        int kd = m - k + 1;
        e.n_dual = long(dual.complex.differential[kd](pos(dual, kd - 1, x), pos(dual, kd, y)));
        rep.table.push_back(e);
        if (e.n != e.n_dual) rep.mismatches.push_back(e);
      }
  rep.holds = rep.mismatches.empty();
  std::ostringstream os;
  if (rep.holds) {
    os << "count symmetry holds for " << rep.table.size() << " pairs";
  } else {
    const auto& e = rep.mismatches.front();
    os << "count symmetry fails for " << d.points()[e.x].label << " -> " << d.points()[e.y].label << ": " << e.n
       << " vs " << e.n_dual;
  }
  rep.message = os.str();
  return rep;
}

PdReport verify_poincare_duality(const MorseDatum& d, const Neighborhood* region, const FlowConfig& cfg) {
  PdReport rep;
  const int m = d.dim();
  auto base = moduli::boundary_operator(d, region, cfg);
  auto dd = dual_datum(d);
  auto dual = moduli::boundary_operator(dd.dual, region, cfg);
  auto co = zalg::dualize(dual.complex);
  rep.map = poincare_duality_map(base, dual, m);
  rep.chain = zalg::verify_chain_map(rep.map, base.complex, co);
  rep.homology = zalg::homology(base.complex);
  rep.dual_cohomology = zalg::homology(co);
  rep.groups_match = true;
  for (int k = 0; k <= m; ++k) {
    int kk = m - k;
    bool have = k < int(rep.homology.degrees.size()) && kk < int(rep.dual_cohomology.degrees.size());
    if (!have || !same_groups(rep.homology.degrees[k], rep.dual_cohomology.degrees[kk])) rep.groups_match = false;
  }
  if (rep.chain.holds) {
    auto hm = zalg::induced_on_homology(rep.map, base.complex, co);
    rep.iso_on_homology = true;
    for (const auto& b : hm.blocks) rep.iso_on_homology = rep.iso_on_homology && unimodular(b);
  }
  std::ostringstream os;
  if (!rep.chain.holds)
    os << "PD is not a chain map: " << rep.chain.message;
  else
    os << "PD chain map; " << (rep.iso_on_homology ? "isomorphism" : "not an isomorphism") << " on homology; groups "
       << (rep.groups_match ? "match" : "differ");
  rep.message = os.str();
  return rep;
}

ConleyDualityReport conley_duality_check(std::shared_ptr<const flow::VectorField> X, const Neighborhood& N,
                                         const ScalarField& f_phi, const Metric& g, const FlowConfig& fc,
                                         const conley::ConleyConfig& cc) {
  ConleyDualityReport rep;
  const int m = X->dim();
  rep.forward = conley::mcf_homology(X, N, f_phi, g, fc, cc);
  rep.hi = rep.forward.local.homology;

  ReversedField rev(X);
  rep.reverse_isolation = conley::verify_isolating_neighborhood(rev, N, fc, cc);
  if (rep.reverse_isolation.verdict != conley::Verdict::certified)
    throw conley::StageFailure("reverse-isolation", rep.reverse_isolation.message);
  rep.reverse_lyapunov = conley::verify_lyapunov(f_phi.negated(), rev, N, rep.reverse_isolation.s_samples, fc, cc);
  if (rep.reverse_lyapunov.verdict != conley::Verdict::certified)
    throw conley::StageFailure("reverse-lyapunov", rep.reverse_lyapunov.message);

  // -f of the Morse representative used above
  const auto& local = rep.forward.local;
  auto dd = dual_datum(local.datum);
  rep.dual_complex = moduli::boundary_operator(dd.dual, &N, local.flow);
  auto co = zalg::dualize(rep.dual_complex.complex);
  rep.hi_dual = zalg::homology(co);
  rep.groups_match = true;
  for (int k = 0; k <= m; ++k) {
    bool have = k < int(rep.hi.degrees.size()) && m - k < int(rep.hi_dual.degrees.size());
    if (!have || !same_groups(rep.hi.degrees[k], rep.hi_dual.degrees[m - k])) rep.groups_match = false;
  }
  rep.pd.map = poincare_duality_map(local.complex, rep.dual_complex, m);
  rep.pd.chain = zalg::verify_chain_map(rep.pd.map, local.complex.complex, co);
  rep.pd.homology = rep.hi;
  rep.pd.dual_cohomology = rep.hi_dual;
  rep.pd.groups_match = rep.groups_match;
  if (rep.pd.chain.holds) {
    auto hm = zalg::induced_on_homology(rep.pd.map, local.complex.complex, co);
    rep.pd.iso_on_homology = true;
    for (const auto& b : hm.blocks) rep.pd.iso_on_homology = rep.pd.iso_on_homology && unimodular(b);
  }
  rep.pass = rep.groups_match && rep.pd.chain.holds && rep.pd.iso_on_homology;
  std::ostringstream os;
  os << "HI: " << rep.hi.describe() << "; HI^ of reversed flow: " << rep.hi_dual.describe() << "; "
     << (rep.pass ? "duality holds" : (rep.pd.chain.holds ? "duality fails" : rep.pd.chain.message));
  rep.message = os.str();
  return rep;
}

}  // namespace mcf::duality
