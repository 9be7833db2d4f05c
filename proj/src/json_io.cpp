#include "mcf/json_io.hpp"

#include <cmath>

namespace mcf::io {

json number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return x;
}

json to_json(const zalg::Integer& z) {
  if (z >= std::numeric_limits<long long>::min() && z <= std::numeric_limits<long long>::max())
    return static_cast<long long>(z);
  return z.str();
}

json to_json(const zalg::IntMatrix& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json r = json::array();
    for (int j = 0; j < m.cols(); ++j) r.push_back(to_json(m(i, j)));
    rows.push_back(std::move(r));
  }
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"entries", rows}};
}

zalg::IntMatrix matrix_from_json(const json& j) {
  zalg::IntMatrix m(j.at("rows").get<int>(), j.at("cols").get<int>());
  const auto& e = j.at("entries");
  for (int i = 0; i < m.rows(); ++i)
    for (int k = 0; k < m.cols(); ++k) {
      const auto& v = e.at(i).at(k);
      m(i, k) = v.is_string() ? zalg::Integer(v.get<std::string>()) : zalg::Integer(v.get<long long>());
    }
  return m;
}

json to_json(const zalg::GradedComplex& c) {
  json d = json::array();
  for (const auto& m : c.differential) d.push_back(to_json(m));
  return json{{"direction", c.direction}, {"generators", c.generators}, {"differential", d}};
}

json to_json(const zalg::HomologyResult& h) {
  json deg = json::array();
  for (const auto& d : h.degrees) {
    json t = json::array();
    for (const auto& z : d.torsion) t.push_back(to_json(z));
    deg.push_back(json{{"betti", d.betti}, {"torsion", t}});
  }
  return json{{"direction", h.direction}, {"groups", h.describe()}, {"degrees", deg}};
}

json to_json(const zalg::GradedIntMap& m) {
  json b = json::array();
  for (const auto& x : m.blocks) b.push_back(to_json(x));
  return json{{"degree_sign", m.degree_sign}, {"degree_offset", m.degree_offset}, {"blocks", b}};
}

json to_json(const zalg::HomologyMap& m) {
  json b = json::array();
  for (const auto& x : m.blocks) b.push_back(to_json(x));
  return b;
}

json to_json(const Vec& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(number(v[i]));
  return a;
}

json to_json(const flow::CriticalPoint& c) {
  return json{{"label", c.label}, {"x", to_json(c.x)}, {"index", c.index}, {"eigenvalues", to_json(c.eigenvalues)},
              {"orientation", c.orientation}};
}

json to_json(const moduli::BoundaryResult& b, const flow::MorseDatum& d) {
  json pts = json::array();
  for (const auto& c : d.points()) pts.push_back(to_json(c));
  json counts = json::array();
  for (const auto& c : b.counts) {
    json w = json::array();
    for (const auto& x : c.witnesses)
      w.push_back(json{{"param", number(x.param)}, {"sign", x.sign}, {"slope", number(x.slope)}});
    counts.push_back(json{{"from", d.points()[c.x].label}, {"to", d.points()[c.y].label}, {"n", c.n}, {"witnesses", w}});
  }
  return json{{"critical_points", pts}, {"complex", to_json(b.complex)}, {"counts", counts}};
}

namespace {

json points(const std::vector<Vec>& v, std::size_t limit = 8) {
  json a = json::array();
  for (std::size_t i = 0; i < v.size() && i < limit; ++i) a.push_back(to_json(v[i]));
  return a;
}

}  // namespace

json to_json(const conley::IsolationCertificate& c) {
  return json{{"verdict", conley::to_string(c.verdict)},
              {"message", c.message},
              {"mesh_points", c.mesh_points},
              {"grid_points", c.grid_points},
              {"s_samples", c.s_samples.size()},
              {"equilibria", points(c.equilibria)},
              {"min_s_margin", number(c.min_s_margin)},
              {"offending", points(c.offending)},
              {"undecided", points(c.undecided)}};
}

json to_json(const conley::LyapunovCertificate& c) {
  return json{{"verdict", conley::to_string(c.verdict)}, {"message", c.message},   {"variation", number(c.variation)},
              {"margin", number(c.margin)},               {"checked", c.checked}, {"worst_point", to_json(c.worst_point)}};
}

json to_json(const conley::IsolatedMapReport& r) {
  return json{{"verdict", conley::to_string(r.verdict)}, {"message", r.message}, {"samples", r.samples},
              {"s_h", points(r.s_h)}, {"min_margin", number(r.min_margin)}, {"offending", points(r.offending)}};
}

json to_json(const conley::FamilyScan& s) {
  json w = json::array();
  for (double x : s.worst) w.push_back(number(x));
  json j{{"isolated", s.isolated}, {"message", s.message}, {"grid", s.grid}, {"worst_margin", w}};
  if (s.violation) {
    j["violation"] = *s.violation;
    j["bracket"] = {s.bracket_lo, s.bracket_hi};
  }
  return j;
}

json to_json(const conley::HomotopyScan& s) {
  json v = json::array();
  for (auto x : s.verdicts) v.push_back(conley::to_string(x));
  json j{{"isolated", s.isolated}, {"message", s.message}, {"grid", s.grid}, {"verdicts", v}};
  if (s.crossing) j["crossing"] = *s.crossing;
  return j;
}

json to_json(const conley::FlowMapReport& r) {
  return json{{"equivariant", r.equivariant}, {"proper", r.proper}, {"max_residual", number(r.max_residual)},
              {"worst_point", to_json(r.worst_point)}, {"worst_time", r.worst_time}, {"samples", r.samples},
              {"message", r.message}};
}

json to_json(const conley::LocalHomology& l) {
  return json{{"eps", l.eps},
              {"attempts", l.attempts},
              {"log", l.log},
              {"certificate", to_json(l.certificate)},
              {"datum", to_json(l.complex, l.datum)},
              {"homology", to_json(l.homology)}};
}

json to_json(const induced::InducedMap& m, const flow::MorseDatum& a, const flow::MorseDatum& b) {
  json counts = json::array();
  for (const auto& c : m.counts) {
    json w = json::array();
    for (const auto& x : c.witnesses)
      w.push_back(json{{"param", number(x.param)}, {"sign", x.sign}, {"point", to_json(x.point)}});
    counts.push_back(json{{"from", a.points()[c.x].label}, {"to", b.points()[c.y].label}, {"n", c.n}, {"witnesses", w}});
  }
  return json{{"chain_map", to_json(m.map)}, {"chain_identity", m.chain.holds}, {"counts", counts}};
}

json to_json(const duality::SymmetryReport& r, const flow::MorseDatum& d) {
  json t = json::array();
  for (const auto& e : r.table)
    t.push_back(json{{"x", d.points()[e.x].label}, {"y", d.points()[e.y].label}, {"n", e.n}, {"n_dual", e.n_dual}});
  return json{{"holds", r.holds}, {"message", r.message}, {"table", t}};
}

json to_json(const Neighborhood& n) {
  json b = json::array();
  for (const auto& x : n.boxes()) b.push_back(json{{"lo", x.lo}, {"hi", x.hi}});
  return b;
}

}  // namespace mcf::io
