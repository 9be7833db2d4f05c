#include "mcf/scenario.hpp"

#include <fstream>
#include <functional>
#include <set>
#include <sstream>

namespace mcf::cli {

namespace {

[[noreturn]] void fail(const YAML::Node& n, const std::string& m) {
  auto mk = n.Mark();
  if (mk.is_null()) throw ScenarioError(m, 0, 0);
  throw ScenarioError(m, mk.line + 1, mk.column + 1);
}

std::string str(const YAML::Node& n, const std::string& what) {
  if (!n.IsScalar()) fail(n, what + ": expected a scalar");
  return n.Scalar();
}

double num(const YAML::Node& n, const std::string& what) {
  if (!n.IsScalar()) fail(n, what + ": expected a number");
  try {
    return n.as<double>();
  } catch (const YAML::Exception&) {
    fail(n, what + ": '" + n.Scalar() + "' is not a number");
  }
}

long long integer(const YAML::Node& n, const std::string& what) {
  if (!n.IsScalar()) fail(n, what + ": expected an integer");
  try {
    return n.as<long long>();
  } catch (const YAML::Exception&) {
    fail(n, what + ": '" + n.Scalar() + "' is not an integer");
  }
}

bool boolean(const YAML::Node& n, const std::string& what) {
  if (!n.IsScalar()) fail(n, what + ": expected true or false");
  try {
    return n.as<bool>();
  } catch (const YAML::Exception&) {
    fail(n, what + ": '" + n.Scalar() + "' is not a boolean");
  }
}

// Expression parse errors point into the scalar itself.
expr::Expression expression(const YAML::Node& n, int dim, const std::vector<std::string>& params = {}) {
  std::string text = str(n, "expression");
  try {
    return expr::Expression::parse(text, dim, params);
  } catch (const expr::ParseError& e) {
    auto mk = n.Mark();
    int quote = n.Tag() == "!" ? 1 : 0;
    throw ScenarioError(std::string("bad expression '") + text + "': " + e.what(), mk.line + 1,
                        mk.column + quote + int(e.column));
  }
}

void check_keys(const YAML::Node& n, const std::set<std::string>& allowed, const std::string& what) {
  if (!n.IsMap()) fail(n, what + ": expected a table");
  for (const auto& kv : n) {
    auto k = kv.first.Scalar();
    if (!allowed.count(k)) fail(kv.first, what + ": unknown key '" + k + "'");
  }
}

YAML::Node need(const YAML::Node& n, const std::string& key, const std::string& what) {
  auto v = n[key];
  if (!v) fail(n, what + ": missing '" + key + "'");
  return v;
}

template <class M>
const typename M::mapped_type& lookup(const M& m, const YAML::Node& n, const std::string& kind) {
  auto name = str(n, kind);
  auto it = m.find(name);
  if (it == m.end()) fail(n, "unknown " + kind + " '" + name + "'");
  return it->second;
}

Domain parse_domain(const YAML::Node& n) {
  check_keys(n, {"torus", "box"}, "domain");
  try {
    if (n["torus"]) return Domain::torus(int(integer(n["torus"], "torus dimension")));
    if (n["box"]) {
      auto b = n["box"];
      if (!b.IsSequence()) fail(b, "box: expected a list of [lo, hi] pairs");
      std::vector<std::pair<double, double>> bounds;
      for (const auto& p : b) {
        if (!p.IsSequence() || p.size() != 2) fail(p, "box: expected [lo, hi]");
        bounds.push_back({num(p[0], "box bound"), num(p[1], "box bound")});
      }
      return Domain::box(bounds);
    }
  } catch (const std::invalid_argument& e) {
    fail(n, e.what());
  }
  fail(n, "domain: need 'torus' or 'box'");
}

using Setter = std::function<void(Scenario&, const YAML::Node&)>;

const std::map<std::string, Setter>& tolerance_setters() {
  static const std::map<std::string, Setter> m = [] {
    std::map<std::string, Setter> s;
    auto fd = [&](const char* k, double flow::FlowConfig::*p) {
      s[k] = [p, k](Scenario& sc, const YAML::Node& n) { sc.flow.*p = num(n, k); };
    };
    auto cd = [&](const char* k, double conley::ConleyConfig::*p) {
      s[k] = [p, k](Scenario& sc, const YAML::Node& n) { sc.conley.*p = num(n, k); };
    };
    fd("rtol", &flow::FlowConfig::rtol);
    fd("atol", &flow::FlowConfig::atol);
    fd("h_init", &flow::FlowConfig::h_init);
    fd("h_max", &flow::FlowConfig::h_max);
    fd("t_max", &flow::FlowConfig::t_max);
    fd("r_conv", &flow::FlowConfig::r_conv);
    fd("r_launch", &flow::FlowConfig::r_launch);
    fd("max_disp", &flow::FlowConfig::max_disp);
    fd("tol_crit", &flow::FlowConfig::tol_crit);
    fd("tol_nondeg", &flow::FlowConfig::tol_nondeg);
    fd("cone", &flow::FlowConfig::cone);
    fd("tol_transv", &flow::FlowConfig::tol_transv);
    s["seeds_per_axis"] = [](Scenario& sc, const YAML::Node& n) {
      sc.flow.seeds_per_axis = int(integer(n, "seeds_per_axis"));
    };
    s["circle_samples"] = [](Scenario& sc, const YAML::Node& n) {
      sc.flow.circle_samples = int(integer(n, "circle_samples"));
    };
    cd("mesh_spacing", &conley::ConleyConfig::mesh_spacing);
    cd("grid_spacing", &conley::ConleyConfig::grid_spacing);
    cd("margin_int", &conley::ConleyConfig::margin_int);
    cd("t_invariant", &conley::ConleyConfig::t_invariant);
    cd("pullback_resolution", &conley::ConleyConfig::pullback_resolution);
    cd("tol_const", &conley::ConleyConfig::tol_const);
    cd("equivariance_tol", &conley::ConleyConfig::equivariance_tol);
    cd("perturb_eps", &conley::ConleyConfig::perturb_eps);
    cd("r_max", &conley::ConleyConfig::r_max);
    s["perturb_attempts"] = [](Scenario& sc, const YAML::Node& n) {
      sc.conley.perturb_attempts = int(integer(n, "perturb_attempts"));
    };
    s["lambda_grid"] = [](Scenario& sc, const YAML::Node& n) {
      sc.conley.lambda_grid = int(integer(n, "lambda_grid"));
    };
    s["r_grid"] = [](Scenario& sc, const YAML::Node& n) { sc.conley.r_grid = int(integer(n, "r_grid")); };
    return s;
  }();
  return m;
}

using A = ArgKind;
const std::map<std::string, std::vector<ArgSpec>>& signatures() {
  static const std::map<std::string, std::vector<ArgSpec>> m = {
      {"morse_homology", {{"field", A::field, true}, {"metric", A::metric, false}}},
      {"local_morse_homology",
       {{"field", A::field, true}, {"metric", A::metric, false}, {"neighborhood", A::neighborhood, true}}},
      {"isolating_neighborhood", {{"flow", A::flow, true}, {"neighborhood", A::neighborhood, true}}},
      {"lyapunov", {{"flow", A::flow, true}, {"neighborhood", A::neighborhood, true}, {"function", A::field, true}}},
      {"mcf_homology",
       {{"flow", A::flow, true},
        {"neighborhood", A::neighborhood, true},
        {"lyapunov", A::field, true},
        {"metric", A::metric, false}}},
      {"induced_map",
       {{"map", A::map, true},
        {"source", A::field, true},
        {"target", A::field, true},
        {"source_metric", A::metric, false},
        {"target_metric", A::metric, false},
        {"source_region", A::neighborhood, false},
        {"target_region", A::neighborhood, false}}},
      {"compose",
       {{"first", A::map, true},
        {"second", A::map, true},
        {"fields", A::fields3, true},
        {"neighborhoods", A::neighborhoods3, false},
        {"R", A::number, false}}},
      {"homotopy",
       {{"family", A::family, true},
        {"source", A::field, true},
        {"target", A::field, true},
        {"source_region", A::neighborhood, false},
        {"target_region", A::neighborhood, false}}},
      {"continuation",
       {{"source", A::field, true},
        {"target", A::field, true},
        {"metric", A::metric, false},
        {"region", A::neighborhood, false},
        {"t_switch", A::number, false}}},
      {"flow_map", {{"map", A::map, true}, {"source_flow", A::flow, true}, {"target_flow", A::flow, true}}},
      {"pullback",
       {{"map", A::map, true},
        {"source_flow", A::flow, true},
        {"target_flow", A::flow, true},
        {"neighborhood", A::neighborhood, true}}},
      {"isolated_map",
       {{"map", A::map, true},
        {"source_flow", A::flow, true},
        {"target_flow", A::flow, true},
        {"source_region", A::neighborhood, true},
        {"target_region", A::neighborhood, true}}},
      {"mcf_induced_map",
       {{"map", A::map, true},
        {"source_flow", A::flow, true},
        {"target_flow", A::flow, true},
        {"neighborhood", A::neighborhood, true},
        {"lyapunov", A::field, true},
        {"source_metric", A::metric, false},
        {"target_metric", A::metric, false}}},
      {"count_symmetry",
       {{"field", A::field, true}, {"metric", A::metric, false}, {"region", A::neighborhood, false}}},
      {"poincare_duality",
       {{"field", A::field, true}, {"metric", A::metric, false}, {"region", A::neighborhood, false}}},
      {"conley_duality",
       {{"flow", A::flow, true},
        {"neighborhood", A::neighborhood, true},
        {"lyapunov", A::field, true},
        {"metric", A::metric, false}}},
      {"homotopy_scan",
       {{"source", A::field, true},
        {"target", A::field, true},
        {"metric", A::metric, false},
        {"neighborhood", A::neighborhood, true}}},
  };
  return m;
}

void check_ref(const Scenario& sc, const YAML::Node& v, ArgKind k, const std::string& key) {
  switch (k) {
    case A::field: lookup(sc.fields, v, "field"); break;
    case A::metric: lookup(sc.metrics, v, "metric"); break;
    case A::map: lookup(sc.maps, v, "map"); break;
    case A::family: lookup(sc.families, v, "family"); break;
    case A::neighborhood: lookup(sc.neighborhoods, v, "neighborhood"); break;
    case A::flow: lookup(sc.flows, v, "flow"); break;
    case A::number: num(v, key); break;
    case A::boolean: boolean(v, key); break;
    case A::fields3:
    case A::neighborhoods3:
      if (!v.IsSequence() || v.size() != 3) fail(v, key + ": expected a list of three names");
      for (const auto& x : v) check_ref(sc, x, k == A::fields3 ? A::field : A::neighborhood, key);
      break;
    case A::expect: break;
  }
}

void check_expect(const YAML::Node& e) {
  check_keys(e, {"homology", "betti", "on_homology", "verdict", "isolated", "violation", "violation_tol"}, "expect");
  if (e["homology"]) str(e["homology"], "expect.homology");
  if (e["betti"]) {
    if (!e["betti"].IsSequence()) fail(e["betti"], "expect.betti: expected a list");
    for (const auto& b : e["betti"]) integer(b, "expect.betti");
  }
  if (e["on_homology"]) {
    auto oh = e["on_homology"];
    if (!oh.IsSequence()) fail(oh, "expect.on_homology: expected a list of matrices");
    for (const auto& m : oh) {
      if (!m.IsSequence()) fail(m, "expect.on_homology: expected a matrix (list of rows)");
      for (const auto& r : m) {
        if (!r.IsSequence()) fail(r, "expect.on_homology: expected a row");
        for (const auto& x : r) integer(x, "matrix entry");
      }
    }
  }
  if (e["verdict"]) {
    auto v = str(e["verdict"], "expect.verdict");
    if (v != "certified" && v != "refuted" && v != "inconclusive") fail(e["verdict"], "expect.verdict: unknown verdict");
  }
  if (e["isolated"]) boolean(e["isolated"], "expect.isolated");
  if (e["violation"]) num(e["violation"], "expect.violation");
  if (e["violation_tol"]) num(e["violation_tol"], "expect.violation_tol");
}

void check_dims(const Scenario& sc, const Task& t) {
  // domains of referenced objects must agree where an operation pairs them
  auto dom_of_field = [&](const std::string& k) { return sc.field_domain.at(t.args[k].Scalar()); };
  auto same = [&](const std::string& a, const std::string& b, const YAML::Node& at) {
    if (a != b) fail(at, "domain mismatch: '" + a + "' vs '" + b + "'");
  };
  auto nb_dom = [&](const std::string& k) { return sc.neighborhoods.at(t.args[k].Scalar()).domain(); };
  auto eq_dom = [&](const Domain& a, const Domain& b, const YAML::Node& at) {
    if (a.kind != b.kind || a.dim != b.dim || a.lo != b.lo || a.hi != b.hi) fail(at, "domain mismatch");
  };
  const auto& a = t.args;
  if (t.op == "induced_map") {
    const auto& m = a["map"].Scalar();
    same(sc.map_source.at(m), dom_of_field("source"), a["source"]);
    same(sc.map_target.at(m), dom_of_field("target"), a["target"]);
  }
  if (t.op == "local_morse_homology" || (t.op == "count_symmetry" && a["region"]) ||
      (t.op == "poincare_duality" && a["region"])) {
    auto k = t.op == "local_morse_homology" ? "neighborhood" : "region";
    eq_dom(sc.fields.at(a["field"].Scalar()).domain(), nb_dom(k), a[k]);
  }
  if (t.op == "continuation" || t.op == "homotopy_scan")
    same(dom_of_field("source"), dom_of_field("target"), a["target"]);
  if (t.op == "compose") {
    auto f = a["fields"];
    same(sc.map_source.at(a["first"].Scalar()), sc.field_domain.at(f[0].Scalar()), f[0]);
    same(sc.map_target.at(a["first"].Scalar()), sc.field_domain.at(f[1].Scalar()), f[1]);
    same(sc.map_source.at(a["second"].Scalar()), sc.field_domain.at(f[1].Scalar()), f[1]);
    same(sc.map_target.at(a["second"].Scalar()), sc.field_domain.at(f[2].Scalar()), f[2]);
  }
}

}  // namespace

maps::MapChain MapFamily::at(double s) const {
  std::vector<expr::Expression> es;
  for (const auto& c : components) es.push_back(c.bind(source.dim, s));
  return maps::MapChain::of(SmoothMap(source, target, std::move(es)));
}

const std::vector<ArgSpec>* task_signature(const std::string& op) {
  auto it = signatures().find(op);
  return it == signatures().end() ? nullptr : &it->second;
}

std::vector<std::string> task_ops() {
  std::vector<std::string> out;
  for (const auto& [k, v] : signatures()) out.push_back(k);
  return out;
}

Scenario parse_scenario(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ScenarioError(e.msg, e.mark.is_null() ? 0 : e.mark.line + 1, e.mark.is_null() ? 0 : e.mark.column + 1);
  }
  if (!root.IsMap()) throw ScenarioError("scenario: expected a top-level table", 1, 1);
  check_keys(root,
             {"schema", "seed", "tolerances", "domains", "fields", "metrics", "maps", "families", "neighborhoods",
              "flows", "tasks"},
             "scenario");
  auto schema = str(need(root, "schema", "scenario"), "schema");
  if (schema != kScenarioSchema) fail(root["schema"], "unsupported schema '" + schema + "'");

  Scenario sc;
  if (root["seed"]) {
    auto n = root["seed"];
    try {
      sc.seed = n.as<unsigned long long>();
    } catch (const YAML::Exception&) {
      fail(n, "seed: expected an unsigned integer");
    }
  }
  if (auto t = root["tolerances"]) {
    if (!t.IsMap()) fail(t, "tolerances: expected a table");
    for (const auto& kv : t) {
      auto k = kv.first.Scalar();
      auto it = tolerance_setters().find(k);
      if (it == tolerance_setters().end()) fail(kv.first, "unknown tolerance '" + k + "'");
      it->second(sc, kv.second);
    }
  }

  auto section = [&](const char* key, const std::function<void(const std::string&, const YAML::Node&)>& f) {
    auto s = root[key];
    if (!s) return;
    if (!s.IsMap()) fail(s, std::string(key) + ": expected a table of named entries");
    for (const auto& kv : s) f(kv.first.Scalar(), kv.second);
  };

  section("domains", [&](const std::string& name, const YAML::Node& n) { sc.domains[name] = parse_domain(n); });

  section("fields", [&](const std::string& name, const YAML::Node& n) {
    check_keys(n, {"domain", "expr"}, "field '" + name + "'");
    auto dn = need(n, "domain", "field");
    const Domain& d = lookup(sc.domains, dn, "domain");
    auto e = expression(need(n, "expr", "field"), d.dim);
    sc.fields[name] = ScalarField(d, e);
    sc.field_domain[name] = dn.Scalar();
    sc.field_text[name] = n["expr"].Scalar();
  });

  section("metrics", [&](const std::string& name, const YAML::Node& n) {
    check_keys(n, {"domain", "matrix"}, "metric '" + name + "'");
    const Domain& d = lookup(sc.domains, need(n, "domain", "metric"), "domain");
    if (!n["matrix"]) {
      sc.metrics[name] = Metric(d.dim);
      return;
    }
    auto m = n["matrix"];
    if (!m.IsSequence() || int(m.size()) != d.dim) fail(m, "metric matrix: expected " + std::to_string(d.dim) + " rows");
    Mat g(d.dim, d.dim);
    for (int i = 0; i < d.dim; ++i) {
      if (!m[i].IsSequence() || int(m[i].size()) != d.dim) fail(m[i], "metric matrix: bad row length");
      for (int j = 0; j < d.dim; ++j) g(i, j) = num(m[i][j], "metric entry");
    }
    if ((g - g.transpose()).norm() > 1e-12 * g.norm()) fail(m, "metric matrix must be symmetric");
    Eigen::SelfAdjointEigenSolver<Mat> es(g);
    if (es.eigenvalues().minCoeff() <= 0) fail(m, "metric matrix must be positive definite");
    sc.metrics[name] = Metric(g);
  });

  section("maps", [&](const std::string& name, const YAML::Node& n) {
    check_keys(n, {"source", "target", "components"}, "map '" + name + "'");
    const Domain& s = lookup(sc.domains, need(n, "source", "map"), "domain");
    const Domain& t = lookup(sc.domains, need(n, "target", "map"), "domain");
    auto cs = need(n, "components", "map");
    if (!cs.IsSequence() || int(cs.size()) != t.dim)
      fail(cs, "map components: expected " + std::to_string(t.dim) + " expressions");
    std::vector<expr::Expression> es;
    for (const auto& c : cs) es.push_back(expression(c, s.dim));
    sc.maps[name] = SmoothMap(s, t, std::move(es));
    sc.map_source[name] = n["source"].Scalar();
    sc.map_target[name] = n["target"].Scalar();
  });

  section("families", [&](const std::string& name, const YAML::Node& n) {
    check_keys(n, {"source", "target", "parameter", "components"}, "family '" + name + "'");
    MapFamily f;
    f.source = lookup(sc.domains, need(n, "source", "family"), "domain");
    f.target = lookup(sc.domains, need(n, "target", "family"), "domain");
    f.parameter = n["parameter"] ? str(n["parameter"], "parameter") : "s";
    auto cs = need(n, "components", "family");
    if (!cs.IsSequence() || int(cs.size()) != f.target.dim)
      fail(cs, "family components: expected " + std::to_string(f.target.dim) + " expressions");
    for (const auto& c : cs) {
      f.components.push_back(expression(c, f.source.dim, {f.parameter}));
      f.texts.push_back(c.Scalar());
    }
    sc.families[name] = std::move(f);
  });

  section("neighborhoods", [&](const std::string& name, const YAML::Node& n) {
    check_keys(n, {"domain", "boxes", "whole"}, "neighborhood '" + name + "'");
    const Domain& d = lookup(sc.domains, need(n, "domain", "neighborhood"), "domain");
    if (n["whole"] && boolean(n["whole"], "whole")) {
      if (n["boxes"]) fail(n, "neighborhood: 'whole' and 'boxes' are exclusive");
      sc.neighborhoods[name] = Neighborhood::whole(d);
      return;
    }
    auto bs = need(n, "boxes", "neighborhood");
    if (!bs.IsSequence()) fail(bs, "boxes: expected a list of [lo, hi] corner pairs");
    std::vector<Box> boxes;
    for (const auto& b : bs) {
      if (!b.IsSequence() || b.size() != 2) fail(b, "box: expected [lo, hi]");
      Box x;
      for (int side = 0; side < 2; ++side) {
        auto c = b[side];
        auto& dst = side ? x.hi : x.lo;
        if (c.IsScalar()) {
          dst.push_back(num(c, "box corner"));
        } else {
          if (!c.IsSequence()) fail(c, "box corner: expected a number or a list");
          for (const auto& v : c) dst.push_back(num(v, "box corner"));
        }
      }
      boxes.push_back(std::move(x));
    }
    try {
      sc.neighborhoods[name] = Neighborhood(d, std::move(boxes));
    } catch (const std::invalid_argument& e) {
      fail(bs, e.what());
    }
  });

  section("flows", [&](const std::string& name, const YAML::Node& n) {
    check_keys(n, {"domain", "components", "gradient", "metric"}, "flow '" + name + "'");
    Flow f;
    if (n["gradient"]) {
      if (n["components"] || n["domain"]) fail(n, "flow: 'gradient' excludes 'components' and 'domain'");
      const auto& fld = lookup(sc.fields, n["gradient"], "field");
      Metric g = n["metric"] ? lookup(sc.metrics, n["metric"], "metric") : Metric(fld.dim());
      if (g.matrix().rows() != fld.dim()) fail(n["metric"], "metric dimension mismatch");
      f.field = std::make_shared<flow::GradientField>(fld, g);
      f.description = "negative gradient of " + n["gradient"].Scalar();
    } else {
      if (n["metric"]) fail(n["metric"], "flow: 'metric' only applies to gradient flows");
      const Domain& d = lookup(sc.domains, need(n, "domain", "flow"), "domain");
      auto cs = need(n, "components", "flow");
      if (!cs.IsSequence() || int(cs.size()) != d.dim)
        fail(cs, "flow components: expected " + std::to_string(d.dim) + " expressions");
      std::vector<expr::Expression> es;
      for (const auto& c : cs) es.push_back(expression(c, d.dim));
      f.field = std::make_shared<flow::ExpressionField>(d, std::move(es));
      f.description = "vector field (" ;
      for (std::size_t i = 0; i < cs.size(); ++i) f.description += (i ? ", " : "") + cs[i].Scalar();
      f.description += ")";
    }
    sc.flows[name] = std::move(f);
  });

  if (auto ts = root["tasks"]) {
    if (!ts.IsSequence() && !(ts.IsNull())) fail(ts, "tasks: expected a list");
    std::set<std::string> names;
    for (const auto& n : ts) {
      if (!n.IsMap()) fail(n, "task: expected a table");
      Task t;
      t.op = str(need(n, "op", "task"), "op");
      t.name = n["name"] ? str(n["name"], "name") : t.op + "#" + std::to_string(sc.tasks.size() + 1);
      if (!names.insert(t.name).second) fail(n, "duplicate task name '" + t.name + "'");
      t.line = n.Mark().line + 1;
      const auto* sig = task_signature(t.op);
      if (!sig) fail(n["op"], "unknown operation '" + t.op + "'");
      std::set<std::string> allowed{"op", "name", "expect"};
      for (const auto& a : *sig) allowed.insert(a.key);
      check_keys(n, allowed, "task '" + t.name + "'");
      for (const auto& a : *sig) {
        auto v = n[a.key];
        if (!v) {
          if (a.required) fail(n, "task '" + t.name + "': missing '" + a.key + "'");
          continue;
        }
        check_ref(sc, v, a.kind, a.key);
      }
      if (n["expect"]) check_expect(n["expect"]);
      t.args = static_cast<const YAML::Node&>(n);
      check_dims(sc, t);
      sc.tasks.push_back(std::move(t));
    }
  }
  return sc;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot open scenario file '" + path + "'", 0, 0);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

}  // namespace mcf::cli
