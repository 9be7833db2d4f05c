#include "mcf/report.hpp"

#include <array>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "mcf/duality.hpp"
#include "mcf/inducedmaps.hpp"

namespace mcf::cli {

using io::json;
using io::to_json;
namespace fs = std::filesystem;

namespace {

// What a task exposes to `expect` checks.
struct Facts {
  std::optional<zalg::HomologyResult> homology;
  std::optional<zalg::HomologyMap> on_homology;
  std::optional<std::string> verdict;
  std::optional<bool> isolated;
  std::optional<double> violation;
};

struct Outcome {
  json result = json::object();
  bool pass = false;
  std::string rule;  // natural pass rule
  Facts facts;
};

json echo(const YAML::Node& n) {
  if (n.IsMap()) {
    json j = json::object();
    for (const auto& kv : n) j[kv.first.Scalar()] = echo(kv.second);
    return j;
  }
  if (n.IsSequence()) {
    json j = json::array();
    for (const auto& x : n) j.push_back(echo(x));
    return j;
  }
  if (!n.IsScalar()) return nullptr;
  if (n.Tag() != "!") {
    const auto& s = n.Scalar();
    if (s == "true" || s == "false") return s == "true";
    try {
      std::size_t pos = 0;
      long long v = std::stoll(s, &pos);
      if (pos == s.size()) return v;
    } catch (...) {
    }
    try {
      std::size_t pos = 0;
      double v = std::stod(s, &pos);
      if (pos == s.size()) return v;
    } catch (...) {
    }
  }
  return n.Scalar();
}

class Runner {
 public:
  Runner(const Scenario& sc, const RunOptions& o, const Task& t) : sc_(sc), opt_(o), t_(t), a_(t.args) {
    fc_ = sc.flow;
    cc_ = sc.conley;
    cc_.seed = o.seed ? *o.seed : sc.seed;
  }

  Outcome run() {
    const auto& op = t_.op;
    if (op == "morse_homology") return morse_homology();
    if (op == "local_morse_homology") return local_homology();
    if (op == "isolating_neighborhood") return isolating();
    if (op == "lyapunov") return lyapunov();
    if (op == "mcf_homology") return mcf();
    if (op == "induced_map") return induced_map();
    if (op == "compose") return compose();
    if (op == "homotopy") return homotopy();
    if (op == "continuation") return continuation();
    if (op == "flow_map") return flow_map();
    if (op == "pullback") return pullback();
    if (op == "isolated_map") return isolated_map();
    if (op == "mcf_induced_map") return mcf_map();
    if (op == "count_symmetry") return count_symmetry();
    if (op == "poincare_duality") return poincare();
    if (op == "conley_duality") return conley_duality();
    if (op == "homotopy_scan") return homotopy_scan();
    throw std::logic_error("unhandled operation " + op);
  }

  json objects() const {
    json o = json::object();
    const auto* sig = task_signature(t_.op);
    for (const auto& s : *sig) {
      auto v = a_[s.key];
      if (!v) continue;
      auto one = [&](ArgKind k, const std::string& name) -> json {
        switch (k) {
          case ArgKind::field:
            return json{{"domain", sc_.fields.at(name).domain().describe()}, {"expr", sc_.field_text.at(name)}};
          case ArgKind::metric: {
            const Mat& g = sc_.metrics.at(name).matrix();
            json m = json::array();
            for (int i = 0; i < g.rows(); ++i) m.push_back(to_json(Vec(g.row(i).transpose())));
            return json{{"matrix", m}};
          }
          case ArgKind::map: {
            const auto& h = sc_.maps.at(name);
            json c = json::array();
            for (const auto& e : h.components()) c.push_back(e.to_string());
            return json{{"source", h.source().describe()}, {"target", h.target().describe()}, {"components", c}};
          }
          case ArgKind::family: {
            const auto& f = sc_.families.at(name);
            return json{{"source", f.source.describe()},
                        {"target", f.target.describe()},
                        {"parameter", f.parameter},
                        {"components", f.texts}};
          }
          case ArgKind::neighborhood: {
            const auto& n = sc_.neighborhoods.at(name);
            return json{{"domain", n.domain().describe()}, {"boxes", to_json(n)}};
          }
          case ArgKind::flow: return json{{"field", sc_.flows.at(name).description}};
          default: return nullptr;
        }
      };
      if (s.kind == ArgKind::fields3 || s.kind == ArgKind::neighborhoods3) {
        for (const auto& x : v)
          o[x.Scalar()] = one(s.kind == ArgKind::fields3 ? ArgKind::field : ArgKind::neighborhood, x.Scalar());
      } else if (s.kind != ArgKind::number && s.kind != ArgKind::boolean) {
        o[v.Scalar()] = one(s.kind, v.Scalar());
      }
    }
    return o;
  }

 private:
  const ScalarField& field(const char* k) const { return sc_.fields.at(a_[k].Scalar()); }
  const Neighborhood* region(const char* k) const {
    return a_[k] ? &sc_.neighborhoods.at(a_[k].Scalar()) : nullptr;
  }
  const Neighborhood& nbhd(const char* k) const { return sc_.neighborhoods.at(a_[k].Scalar()); }
  Metric metric(const char* k, int dim) const {
    if (!a_[k]) return Metric(dim);
    const auto& g = sc_.metrics.at(a_[k].Scalar());
    if (g.matrix().rows() != dim) throw std::invalid_argument(std::string(k) + ": metric dimension mismatch");
    return g;
  }
  std::shared_ptr<const flow::VectorField> vf(const char* k) const { return sc_.flows.at(a_[k].Scalar()).field; }
  const SmoothMap& map(const char* k) const { return sc_.maps.at(a_[k].Scalar()); }
  double number(const char* k, double def) const { return a_[k] ? a_[k].as<double>() : def; }

  static json complex_report(const moduli::BoundaryResult& b, const flow::MorseDatum& d) {
    json j = to_json(b, d);
    auto sq = zalg::check_square_zero(b.complex);
    j["square_zero"] = sq.holds;
    if (!sq.holds) j["square_zero_failure"] = {{"degree", sq.degree}, {"row", sq.row}, {"col", sq.col}};
    return j;
  }

  void dump(const flow::MorseDatum& d, const moduli::BoundaryResult& b, const Neighborhood* region,
            const flow::FlowConfig& fc) const {
    if (!opt_.dump_orbits || opt_.output_dir.empty()) return;
    fs::path dir = fs::path(opt_.output_dir) / "orbits";
    fs::create_directories(dir);
    for (const auto& c : b.counts)
      for (std::size_t i = 0; i < c.witnesses.size(); ++i) {
        flow::StopRule stop;
        stop.t_max = fc.t_max;
        stop.record = true;
        stop.region = region;
        auto o = flow::integrate_orbit(d, c.witnesses[i].launch, flow::Direction::forward, stop, fc);
        auto name = t_.name + "_" + d.points()[c.x].label + "_" + d.points()[c.y].label + "_" + std::to_string(i) + ".csv";
        flow::write_orbit_csv((dir / name).string(), o);
      }
  }

  static bool iso(const zalg::HomologyMap& h) {
    for (const auto& b : h.blocks) {
      if (b.rows() != b.cols()) return false;
      if (b.rows() == 0) continue;
      auto det = b.determinant();
      if (det != 1 && det != -1) return false;
    }
    return true;
  }

  Outcome morse_homology() {
    const auto& f = field("field");
    auto d = flow::make_datum(f, metric("metric", f.dim()), nullptr, fc_);
    auto b = moduli::boundary_operator(d, nullptr, fc_);
    auto H = zalg::homology(b.complex);
    Outcome o;
    o.result["datum"] = complex_report(b, d);
    o.result["homology"] = to_json(H);
    int chi = 0, s = 1;
    for (int k : H.betti()) {
      chi += s * k;
      s = -s;
    }
    o.result["euler_characteristic"] = {{"critical_points", d.euler_characteristic()}, {"betti", chi}};
    o.pass = o.result["datum"]["square_zero"].get<bool>() && chi == d.euler_characteristic();
    o.rule = "square zero and Euler characteristics agree";
    o.facts.homology = H;
    dump(d, b, nullptr, fc_);
    return o;
  }

  Outcome local_homology() {
    const auto& f = field("field");
    const auto& N = nbhd("neighborhood");
    auto l = conley::local_morse_homology(f, metric("metric", f.dim()), N, fc_, cc_);
    Outcome o;
    o.result = to_json(l);
    auto sq = zalg::check_square_zero(l.complex.complex);
    o.result["square_zero"] = sq.holds;
    o.pass = sq.holds;
    o.rule = "square zero";
    o.facts.homology = l.homology;
    dump(l.datum, l.complex, &N, l.flow);
    return o;
  }

  Outcome isolating() {
    auto c = conley::verify_isolating_neighborhood(*vf("flow"), nbhd("neighborhood"), fc_, cc_);
    Outcome o;
    o.result["certificate"] = to_json(c);
    o.pass = c.verdict == conley::Verdict::certified;
    o.rule = "certified";
    o.facts.verdict = conley::to_string(c.verdict);
    o.facts.isolated = o.pass;
    return o;
  }

  Outcome lyapunov() {
    auto X = vf("flow");
    const auto& N = nbhd("neighborhood");
    auto c = conley::verify_isolating_neighborhood(*X, N, fc_, cc_);
    auto l = conley::verify_lyapunov(field("function"), *X, N, c.s_samples, fc_, cc_);
    Outcome o;
    o.result["certificate"] = to_json(c);
    o.result["lyapunov"] = to_json(l);
    o.pass = l.verdict == conley::Verdict::certified;
    o.rule = "certified";
    o.facts.verdict = conley::to_string(l.verdict);
    return o;
  }

  Outcome mcf() {
    auto X = vf("flow");
    const auto& N = nbhd("neighborhood");
    const auto& f = field("lyapunov");
    Outcome o;
    try {
      auto r = conley::mcf_homology(X, N, f, metric("metric", f.dim()), fc_, cc_);
      o.result["flow_certificate"] = to_json(r.flow_certificate);
      o.result["lyapunov"] = to_json(r.lyapunov);
      o.result["local"] = to_json(r.local);
      o.result["homology"] = to_json(r.local.homology);
      o.pass = true;
      o.facts.homology = r.local.homology;
    } catch (const conley::StageFailure& e) {
      o.result["failed_stage"] = e.stage;
      o.result["message"] = e.what();
      if (e.stage == "isolation") {
        auto c = conley::verify_isolating_neighborhood(*X, N, fc_, cc_);
        o.result["flow_certificate"] = to_json(c);
        o.facts.verdict = conley::to_string(c.verdict);
      }
      o.pass = false;
    }
    o.rule = "all stages certified";
    return o;
  }

  Outcome induced_map() {
    const auto& fa = field("source");
    const auto& fb = field("target");
    const auto* ra = region("source_region");
    const auto* rb = region("target_region");
    auto A = flow::make_datum(fa, metric("source_metric", fa.dim()), ra, fc_);
    auto B = flow::make_datum(fb, metric("target_metric", fb.dim()), rb, fc_);
    auto ca = moduli::boundary_operator(A, ra, fc_), cb = moduli::boundary_operator(B, rb, fc_);
    auto pt = induced::perturb_to_transverse(maps::MapChain::of(map("map")), induced::Pair{&A, &B, ra, rb}, ca, cb,
                                             fc_, cc_);
    auto H = zalg::induced_on_homology(pt.induced.map, ca.complex, cb.complex);
    Outcome o;
    o.result["source"] = complex_report(ca, A);
    o.result["target"] = complex_report(cb, B);
    o.result["source_homology"] = to_json(zalg::homology(ca.complex));
    o.result["target_homology"] = to_json(zalg::homology(cb.complex));
    o.result["eps"] = pt.eps;
    o.result["direction"] = to_json(pt.v);
    json att = json::array();
    for (const auto& x : pt.attempts)
      att.push_back(json{{"eps", x.eps}, {"accepted", x.accepted}, {"reason", x.reason}});
    o.result["attempts"] = att;
    o.result["induced"] = to_json(pt.induced, A, B);
    o.result["on_homology"] = to_json(H);
    o.pass = pt.induced.chain.holds;
    o.rule = "chain-map identity";
    o.facts.on_homology = H;
    return o;
  }

  Outcome compose() {
    auto fs3 = a_["fields"];
    std::array<const Neighborhood*, 3> n{nullptr, nullptr, nullptr};
    if (a_["neighborhoods"])
      for (int i = 0; i < 3; ++i) n[i] = &sc_.neighborhoods.at(a_["neighborhoods"][i].Scalar());
    std::vector<flow::MorseDatum> D;
    std::vector<moduli::BoundaryResult> C;
    for (int i = 0; i < 3; ++i) {
      const auto& f = sc_.fields.at(fs3[i].Scalar());
      D.push_back(flow::make_datum(f, Metric(f.dim()), n[i], fc_));
    }
    for (int i = 0; i < 3; ++i) C.push_back(moduli::boundary_operator(D[i], n[i], fc_));
    double R = number("R", 1.0);
    auto r = induced::compose_with_flow(maps::MapChain::of(map("first")), maps::MapChain::of(map("second")), R, D[0],
                                        D[1], D[2], C[0], C[1], C[2], n[0], n[1], n[2], fc_, cc_);
    Outcome o;
    json h = json::array();
    for (int i = 0; i < 3; ++i) h.push_back(to_json(zalg::homology(C[i].complex)));
    o.result["homologies"] = h;
    auto pack = [&](const induced::InducedMap& m, int s, int t) {
      json j = to_json(m, D[s], D[t]);
      j["on_homology"] = to_json(zalg::induced_on_homology(m.map, C[s].complex, C[t].complex));
      return j;
    };
    o.result["first"] = pack(r.first, 0, 1);
    o.result["second"] = pack(r.second, 1, 2);
    o.result["direct_composite"] = pack(r.composite_zero, 0, 2);
    o.result["composite"] = pack(r.composite, 0, 2);
    o.result["product"] = to_json(r.product);
    o.result["product_on_homology"] = to_json(zalg::induced_on_homology(r.product, C[0].complex, C[2].complex));
    o.result["product_equals_direct"] = r.product_equals_zero;
    o.result["composite_equals_direct"] = r.composite_equals_zero;
    o.result["product_equals_composite"] = r.product_equals_composite;
    o.result["R"] = R;
    o.result["margin_int"] = cc_.margin_int;
    if (r.isolation) o.result["isolation"] = to_json(*r.isolation);
    o.result["hypothesis_ok"] = r.hypothesis_ok;
    o.result["message"] = r.message;
    o.pass = !r.hypothesis_ok || r.product_equals_composite;
    o.rule = "functoriality holds or its isolation hypothesis is reported violated";
    o.facts.isolated = r.isolation ? r.isolation->isolated : true;
    if (r.isolation && r.isolation->violation) o.facts.violation = *r.isolation->violation;
    return o;
  }

  Outcome homotopy() {
    const auto& fam = sc_.families.at(a_["family"].Scalar());
    const auto& fa = field("source");
    const auto& fb = field("target");
    const auto* ra = region("source_region");
    const auto* rb = region("target_region");
    auto A = flow::make_datum(fa, Metric(fa.dim()), ra, fc_);
    auto B = flow::make_datum(fb, Metric(fb.dim()), rb, fc_);
    auto ca = moduli::boundary_operator(A, ra, fc_), cb = moduli::boundary_operator(B, rb, fc_);
    auto r = induced::homotopy_check([&](double s) { return fam.at(s); }, induced::Pair{&A, &B, ra, rb}, ca, cb, fc_,
                                     cc_);
    auto H0 = zalg::induced_on_homology(r.h0.map, ca.complex, cb.complex);
    Outcome o;
    o.result["h0"] = to_json(r.h0, A, B);
    o.result["h1"] = to_json(r.h1, A, B);
    o.result["h0_on_homology"] = to_json(H0);
    o.result["h1_on_homology"] = to_json(zalg::induced_on_homology(r.h1.map, ca.complex, cb.complex));
    o.result["equal_on_homology"] = r.equal_on_homology;
    if (r.isolation) o.result["isolation"] = to_json(*r.isolation);
    o.result["hypothesis_ok"] = r.hypothesis_ok;
    o.result["message"] = r.message;
    o.pass = !r.hypothesis_ok || r.equal_on_homology;
    o.rule = "equal on homology or isolation hypothesis reported violated";
    o.facts.on_homology = H0;
    o.facts.isolated = r.isolation ? r.isolation->isolated : true;
    if (r.isolation && r.isolation->violation) o.facts.violation = *r.isolation->violation;
    return o;
  }

  Outcome continuation() {
    const auto& fa = field("source");
    const auto& fb = field("target");
    const auto* rg = region("region");
    Metric g = metric("metric", fa.dim());
    auto A = flow::make_datum(fa, g, rg, fc_);
    auto B = flow::make_datum(fb, g, rg, fc_);
    auto ca = moduli::boundary_operator(A, rg, fc_), cb = moduli::boundary_operator(B, rg, fc_);
    auto r = induced::continuation_map(A, B, rg, number("t_switch", 10.0), ca, cb, fc_, cc_);
    auto H = zalg::induced_on_homology(r.map.map, ca.complex, cb.complex);
    Outcome o;
    o.result["source"] = complex_report(ca, A);
    o.result["target"] = complex_report(cb, B);
    o.result["map"] = to_json(r.map, A, B);
    o.result["on_homology"] = to_json(H);
    if (rg) o.result["isolation"] = to_json(r.isolation);
    o.pass = r.map.chain.holds && iso(H);
    o.rule = "chain map and isomorphism on homology";
    o.facts.on_homology = H;
    o.facts.isolated = r.isolation.isolated;
    return o;
  }

  Outcome flow_map() {
    auto r = conley::verify_flow_map(map("map"), *vf("source_flow"), *vf("target_flow"), fc_, cc_);
    Outcome o;
    o.result["flow_map"] = to_json(r);
    o.pass = r.equivariant && r.proper;
    o.rule = "equivariant and proper";
    return o;
  }

  Outcome pullback() {
    auto r = conley::pullback_neighborhood(map("map"), nbhd("neighborhood"), vf("source_flow"), vf("target_flow"), fc_,
                                           cc_);
    Outcome o;
    o.result["region"] = to_json(r.region);
    o.result["certificate"] = to_json(r.certificate);
    o.result["isolated"] = to_json(r.isolated);
    o.pass = r.certificate.verdict == conley::Verdict::certified && r.isolated.verdict == conley::Verdict::certified;
    o.rule = "pullback certified and map isolated";
    o.facts.verdict = conley::to_string(r.certificate.verdict);
    return o;
  }

  Outcome isolated_map() {
    auto a = conley::FlowSide::general(vf("source_flow"), &nbhd("source_region"), fc_);
    auto b = conley::FlowSide::general(vf("target_flow"), &nbhd("target_region"), fc_);
    auto r = conley::verify_isolated_map(maps::MapChain::of(map("map")), a, b, fc_, cc_);
    Outcome o;
    o.result["isolated_map"] = to_json(r);
    o.pass = r.verdict == conley::Verdict::certified;
    o.rule = "certified";
    o.facts.verdict = conley::to_string(r.verdict);
    o.facts.isolated = o.pass;
    return o;
  }

  Outcome mcf_map() {
    const auto& h = map("map");
    Outcome o;
    try {
      auto r = conley::mcf_induced_map(h, vf("source_flow"), vf("target_flow"), nbhd("neighborhood"),
                                       field("lyapunov"), metric("source_metric", h.source().dim),
                                       metric("target_metric", h.target().dim), fc_, cc_);
      o.result["flow_map"] = to_json(r.flow_map);
      o.result["pullback"] = {{"region", to_json(r.pullback.region)},
                              {"certificate", to_json(r.pullback.certificate)},
                              {"isolated", to_json(r.pullback.isolated)}};
      o.result["lyapunov"] = to_json(r.lyapunov_b);
      o.result["source"] = to_json(r.source);
      o.result["target"] = to_json(r.target);
      o.result["gradient_isolation"] = to_json(r.gradient_isolation);
      o.result["eps"] = r.eps;
      o.result["chain_map"] = to_json(r.chain_map);
      o.result["on_homology"] = to_json(r.on_homology);
      o.pass = true;
      o.facts.on_homology = r.on_homology;
    } catch (const conley::StageFailure& e) {
      o.result["failed_stage"] = e.stage;
      o.result["message"] = e.what();
      o.pass = false;
    }
    o.rule = "all stages certified";
    return o;
  }

  Outcome count_symmetry() {
    const auto& f = field("field");
    const auto* rg = region("region");
    auto d = flow::make_datum(f, metric("metric", f.dim()), rg, fc_);
    auto r = duality::verify_count_symmetry(d, rg, fc_);
    Outcome o;
    o.result["symmetry"] = to_json(r, d);
    o.pass = r.holds;
    o.rule = "pairwise counts agree";
    return o;
  }

  Outcome poincare() {
    const auto& f = field("field");
    const auto* rg = region("region");
    auto d = flow::make_datum(f, metric("metric", f.dim()), rg, fc_);
    auto r = duality::verify_poincare_duality(d, rg, fc_);
    Outcome o;
    o.result["map"] = to_json(r.map);
    o.result["chain_map"] = r.chain.holds;
    o.result["iso_on_homology"] = r.iso_on_homology;
    o.result["homology"] = to_json(r.homology);
    o.result["dual_cohomology"] = to_json(r.dual_cohomology);
    o.result["groups_match"] = r.groups_match;
    o.result["message"] = r.message;
    o.pass = r.chain.holds && r.iso_on_homology && r.groups_match;
    o.rule = "chain map, isomorphism, groups match";
    o.facts.homology = r.homology;
    return o;
  }

  Outcome conley_duality() {
    const auto& f = field("lyapunov");
    auto r = duality::conley_duality_check(vf("flow"), nbhd("neighborhood"), f, metric("metric", f.dim()), fc_, cc_);
    Outcome o;
    o.result["flow_certificate"] = to_json(r.forward.flow_certificate);
    o.result["lyapunov"] = to_json(r.forward.lyapunov);
    o.result["reverse_isolation"] = to_json(r.reverse_isolation);
    o.result["reverse_lyapunov"] = to_json(r.reverse_lyapunov);
    o.result["homology"] = to_json(r.hi);
    o.result["dual_cohomology"] = to_json(r.hi_dual);
    o.result["pd_chain_map"] = r.pd.chain.holds;
    o.result["pd_iso"] = r.pd.iso_on_homology;
    o.result["groups_match"] = r.groups_match;
    o.result["message"] = r.message;
    o.pass = r.pass;
    o.rule = "HI_k matches HI^(m-k) of the reverse flow";
    o.facts.homology = r.hi;
    return o;
  }

  Outcome homotopy_scan() {
    const auto& fa = field("source");
    auto r = conley::scan_gradient_homotopy(fa, field("target"), metric("metric", fa.dim()), nbhd("neighborhood"), fc_,
                                            cc_);
    Outcome o;
    o.result["scan"] = to_json(r);
    o.pass = r.isolated;
    o.rule = "isolated for every lambda";
    o.facts.isolated = r.isolated;
    if (r.crossing) o.facts.violation = *r.crossing;
    return o;
  }

  const Scenario& sc_;
  const RunOptions& opt_;
  const Task& t_;
  const YAML::Node& a_;
  flow::FlowConfig fc_;
  conley::ConleyConfig cc_;
};

json check(const std::string& name, bool pass, json detail = nullptr) {
  json j{{"name", name}, {"pass", pass}};
  if (!detail.is_null()) j["detail"] = std::move(detail);
  return j;
}

json expect_checks(const YAML::Node& e, const Facts& f) {
  json out = json::array();
  if (auto n = e["homology"]) {
    auto want = n.Scalar();
    out.push_back(f.homology ? check("homology", f.homology->describe() == want,
                                     {{"expected", want}, {"actual", f.homology->describe()}})
                             : check("homology", false, "not available for this operation"));
  }
  if (auto n = e["betti"]) {
    std::vector<int> want;
    for (const auto& b : n) want.push_back(b.as<int>());
    out.push_back(f.homology ? check("betti", f.homology->betti() == want,
                                     {{"expected", want}, {"actual", f.homology->betti()}})
                             : check("betti", false, "not available for this operation"));
  }
  if (auto n = e["on_homology"]) {
    if (!f.on_homology) {
      out.push_back(check("on_homology", false, "not available for this operation"));
    } else {
      bool ok = n.size() == f.on_homology->blocks.size();
      for (std::size_t k = 0; ok && k < n.size(); ++k) {
        const auto& m = f.on_homology->blocks[k];
        ok = int(n[k].size()) == m.rows();
        // [] stands for any block without rows
        for (int i = 0; ok && i < m.rows(); ++i) {
          ok = int(n[k][i].size()) == m.cols();
          for (int j = 0; ok && j < m.cols(); ++j) ok = m(i, j) == n[k][i][j].as<long long>();
        }
      }
      out.push_back(check("on_homology", ok, {{"expected", echo(n)}, {"actual", to_json(*f.on_homology)}}));
    }
  }
  if (auto n = e["verdict"]) {
    auto want = n.Scalar();
    out.push_back(f.verdict ? check("verdict", *f.verdict == want, {{"expected", want}, {"actual", *f.verdict}})
                            : check("verdict", false, "not available for this operation"));
  }
  if (auto n = e["isolated"]) {
    bool want = n.as<bool>();
    out.push_back(f.isolated ? check("isolated", *f.isolated == want, {{"expected", want}, {"actual", *f.isolated}})
                             : check("isolated", false, "not available for this operation"));
  }
  if (auto n = e["violation"]) {
    double want = n.as<double>();
    double tol = e["violation_tol"] ? e["violation_tol"].as<double>() : 1e-6;
    out.push_back(f.violation ? check("violation", std::abs(*f.violation - want) <= tol,
                                      {{"expected", want}, {"actual", *f.violation}, {"tol", tol}})
                              : check("violation", false, "no violation located"));
  }
  return out;
}

void write_json(const fs::path& p, const json& j) {
  std::ofstream os(p);
  if (!os) throw std::runtime_error("cannot write " + p.string());
  os << j.dump(2) << "\n";
}

}  // namespace

RunOutcome run_scenario(const Scenario& sc, const RunOptions& opt) {
  using clock = std::chrono::steady_clock;
  RunOutcome out;
  unsigned long long seed = opt.seed ? *opt.seed : sc.seed;
  json tasks = json::array();
  json times = json::array();
  int passed = 0, failed = 0, errors = 0;
  bool halted = false;
  auto t_all = clock::now();
  for (const auto& t : sc.tasks) {
    auto t0 = clock::now();
    Runner r(sc, opt, t);
    json task{{"name", t.name}, {"op", t.op}, {"inputs", {{"args", echo(t.args)}, {"objects", r.objects()}}}};
    task["inputs"]["args"].erase("op");
    task["inputs"]["args"].erase("name");
    try {
      auto o = r.run();
      json checks = json::array();
      if (auto e = t.args["expect"]) {
        checks = expect_checks(e, o.facts);
      } else {
        checks.push_back(check(o.rule, o.pass));
      }
      bool ok = true;
      for (const auto& c : checks) ok = ok && c["pass"].get<bool>();
      task["verdict"] = ok ? "pass" : "fail";
      task["result"] = std::move(o.result);
      task["checks"] = std::move(checks);
      (ok ? passed : failed)++;
    } catch (const std::exception& e) {
      task["verdict"] = "error";
      task["error"] = e.what();
      if (auto* sf = dynamic_cast<const conley::StageFailure*>(&e)) task["failed_stage"] = sf->stage;
      ++errors;
    }
    double secs = std::chrono::duration<double>(clock::now() - t0).count();
    times.push_back(json{{"name", t.name}, {"seconds", secs}});
    bool bad = task["verdict"] != "pass";
    tasks.push_back(std::move(task));
    if (bad && opt.halt_on_fail) {
      halted = &t != &sc.tasks.back();
      break;
    }
  }
  out.report = json{{"schema", kReportSchema},
                    {"seed", seed},
                    {"tasks", tasks},
                    {"summary",
                     {{"tasks", sc.tasks.size()},
                      {"passed", passed},
                      {"failed", failed},
                      {"errors", errors},
                      {"halted", halted}}}};
  out.timings = json{{"tasks", times}, {"total_seconds", std::chrono::duration<double>(clock::now() - t_all).count()}};
  out.exit_code = failed + errors > 0 ? 1 : 0;
  if (!opt.output_dir.empty()) {
    fs::create_directories(opt.output_dir);
    write_json(fs::path(opt.output_dir) / "report.json", out.report);
    write_json(fs::path(opt.output_dir) / "timings.json", out.timings);
  }
  return out;
}

namespace {

std::string superscript(long n) {
  static const char* d[] = {"⁰", "¹", "²", "³", "⁴", "⁵", "⁶", "⁷", "⁸", "⁹"};
  std::string s;
  for (char c : std::to_string(n)) s += d[c - '0'];
  return s;
}

std::string integer_string(const json& j) { return j.is_string() ? j.get<std::string>() : std::to_string(j.get<long long>()); }

std::string groups(const json& h) {
  std::string s;
  const char* sym = h.value("direction", -1) > 0 ? "H^" : "H_";
  const auto& deg = h.at("degrees");
  for (std::size_t k = 0; k < deg.size(); ++k) s += (k ? ", " : "") + std::string(sym) + std::to_string(k) + "=" + group_string(deg[k]);
  return s;
}

std::string matrix_string(const json& m) {
  int r = m.at("rows").get<int>(), c = m.at("cols").get<int>();
  if (r == 0 || c == 0) return "0 (" + std::to_string(r) + "x" + std::to_string(c) + ")";
  std::string s = "[";
  const auto& e = m.at("entries");
  for (std::size_t i = 0; i < e.size(); ++i) {
    s += i ? ", [" : "[";
    for (std::size_t j = 0; j < e[i].size(); ++j) s += (j ? ", " : "") + integer_string(e[i][j]);
    s += "]";
  }
  return s + "]";
}

std::string map_string(const json& blocks) {
  std::string s;
  for (std::size_t k = 0; k < blocks.size(); ++k)
    s += (k ? ", " : "") + std::string("H_") + std::to_string(k) + ": " + matrix_string(blocks[k]);
  return s;
}

std::string num(const json& j, int digits = 6) {
  if (j.is_string()) return j.get<std::string>();
  std::ostringstream os;
  os.precision(digits);
  os << j.get<double>();
  return os.str();
}

void margins(const json& r, std::ostream& os) {
  auto cert = [&](const char* key, const char* label) {
    if (r.contains(key) && r[key].contains("min_s_margin"))
      os << " " << label << " " << r[key]["verdict"].get<std::string>() << ", worst interior margin "
         << num(r[key]["min_s_margin"]) << ".";
  };
  cert("certificate", "Isolation");
  cert("flow_certificate", "Isolation");
  if (r.contains("lyapunov") && r["lyapunov"].contains("margin"))
    os << " Lyapunov " << r["lyapunov"]["verdict"].get<std::string>() << ", worst decrease "
       << num(r["lyapunov"]["margin"]) << ".";
  if (r.contains("isolated_map"))
    os << " Map isolation " << r["isolated_map"]["verdict"].get<std::string>() << ", worst margin "
       << num(r["isolated_map"]["min_margin"]) << ".";
}

}  // namespace

std::string group_string(const json& degree) {
  std::vector<std::string> parts;
  long b = degree.at("betti").get<long>();
  if (b == 1) parts.push_back("Z");
  if (b > 1) parts.push_back("Z" + superscript(b));
  for (const auto& t : degree.at("torsion")) parts.push_back("Z/" + integer_string(t));
  if (parts.empty()) return "0";
  std::string s;
  for (std::size_t i = 0; i < parts.size(); ++i) s += (i ? " ⊕ " : "") + parts[i];
  return s;
}

std::string explain(const json& report) {
  if (!report.is_object() || report.value("schema", "") != kReportSchema)
    throw ReportError(std::string("not a report with schema ") + kReportSchema);
  if (!report.contains("tasks") || !report["tasks"].is_array()) throw ReportError("report has no task list");
  const auto& tasks = report["tasks"];
  if (tasks.empty()) return "no tasks\n";
  std::ostringstream os;
  try {
    for (const auto& t : tasks) {
      os << t.at("name").get<std::string>() << " (" << t.at("op").get<std::string>()
         << "): " << t.at("verdict").get<std::string>() << ".";
      if (t.contains("error")) {
        os << " Error: " << t["error"].get<std::string>() << "\n\n";
        continue;
      }
      const auto& r = t.at("result");
      const auto& op = t["op"].get<std::string>();
      if (r.contains("homology")) os << " " << groups(r["homology"]) << ".";
      if (r.contains("failed_stage")) os << " Failed stage: " << r["failed_stage"].get<std::string>() << ".";
      if (op == "compose") {
        os << " Induced maps: first " << map_string(r["first"]["on_homology"]) << "; second "
           << map_string(r["second"]["on_homology"]) << "; direct composite "
           << map_string(r["direct_composite"]["on_homology"]) << "; with flow for R = " << num(r["R"]) << " "
           << map_string(r["composite"]["on_homology"]) << ".";
        os << " Product " << (r["product_equals_direct"].get<bool>() ? "equals" : "differs from")
           << " the direct composite.";
        if (r.contains("isolation")) {
          const auto& s = r["isolation"];
          if (s.contains("violation")) {
            os << " Isolation violated at R = " << num(s["violation"], 10) << " (bracket [" << num(s["bracket"][0], 10)
               << ", " << num(s["bracket"][1], 10) << "]) while scanning R in [" << num(s["grid"].front()) << ", "
               << num(s["grid"].back()) << "].";
          } else {
            os << " Isolation holds on the R-grid.";
          }
        }
      } else if (r.contains("on_homology")) {
        os << " On homology: " << map_string(r["on_homology"]) << ".";
      }
      if (r.contains("scan") && r["scan"].contains("crossing"))
        os << " Isolation lost at lambda = " << num(r["scan"]["crossing"]) << ".";
      if (r.contains("isolation") && op == "homotopy" && r["isolation"].contains("violation"))
        os << " Isolation violated at s = " << num(r["isolation"]["violation"]) << ".";
      margins(r, os);
      for (const auto& c : t.at("checks"))
        if (!c["pass"].get<bool>()) os << " Failed check: " << c["name"].get<std::string>() << ".";
      os << "\n\n";
    }
  } catch (const json::exception& e) {
    throw ReportError(std::string("malformed report: ") + e.what());
  }
  std::string s = os.str();
  s.pop_back();
  return s;
}

}  // namespace mcf::cli
