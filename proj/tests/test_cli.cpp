#include <doctest.h>

#include <filesystem>

#include "mcf/parallel.hpp"
#include "mcf/report.hpp"

using namespace mcf::cli;

namespace {

const char* kLocal = R"y(schema: mcfkit-scenario/1
domains:
  line: {box: [[-5, 5]]}
fields:
  well: {domain: line, expr: "x1^2"}
neighborhoods:
  unit: {domain: line, boxes: [[-1, 1]]}
tasks:
  - name: well
    op: local_morse_homology
    field: well
    neighborhood: unit
)y";

const char* kTorus = R"y(schema: mcfkit-scenario/1
seed: 5
domains:
  T2: {torus: 2}
  S1: {torus: 1}
fields:
  h: {domain: T2, expr: "(2+cos(2*pi*x2))*cos(2*pi*x1) + 0.1*sin(2*pi*x2)"}
  c: {domain: S1, expr: "cos(2*pi*x1)/(4*pi^2)"}
maps:
  twice: {source: S1, target: S1, components: ["2*x1"]}
tasks:
  - {name: torus, op: morse_homology, field: h}
  - {name: twice, op: induced_map, map: twice, source: c, target: c}
)y";

const char* kHalf = R"y(schema: mcfkit-scenario/1
domains:
  line: {box: [[-5, 5]]}
flows:
  attract: {domain: line, components: ["-x1"]}
neighborhoods:
  half: {domain: line, boxes: [[0, 1]]}
tasks:
  - {name: half, op: isolating_neighborhood, flow: attract, neighborhood: half}
  - {name: again, op: isolating_neighborhood, flow: attract, neighborhood: half}
)y";

ScenarioError parse_error(const std::string& text) {
  try {
    parse_scenario(text);
  } catch (const ScenarioError& e) {
    return e;
  }
  FAIL("expected a parse error");
  return ScenarioError("", 0, 0);
}

}  // namespace

TEST_CASE("scenario errors carry line and column") {
  auto e = parse_error("schema: mcfkit-scenario/1\ndomains:\n  l: {torus: 1}\nfields:\n  f: {domain: l, expr: \"cos(x1 +)\"}\n");
  CHECK(e.line == 5);
  CHECK(e.column == 33);  // the stray ')'
  e = parse_error("schema: mcfkit-scenario/1\ntasks:\n  - op: morse_homology\n    field: nope\n");
  CHECK(e.line == 4);
  CHECK(e.column == 12);
  e = parse_error("schema: [\n");
  CHECK(e.line > 0);
  e = parse_error("schema: mcfkit-scenario/2\n");
  CHECK(e.line == 1);
  e = parse_error("schema: mcfkit-scenario/1\ntolerances: {rtol: 1e-9, speed: 3}\n");
  CHECK(e.line == 2);
  CHECK(std::string(e.what()).find("speed") != std::string::npos);
  e = parse_error(
      "schema: mcfkit-scenario/1\ndomains:\n  a: {torus: 1}\n  b: {torus: 2}\nfields:\n  f: {domain: a, expr: x1}\n"
      "  g: {domain: b, expr: x1}\nmaps:\n  h: {source: a, target: a, components: [x1]}\n"
      "tasks:\n  - {op: induced_map, map: h, source: f, target: g}\n");
  CHECK(std::string(e.what()).find("domain mismatch") != std::string::npos);
}

TEST_CASE("empty task list") {
  auto sc = parse_scenario("schema: mcfkit-scenario/1\ntasks: []\n");
  auto out = run_scenario(sc, {});
  CHECK(out.exit_code == 0);
  CHECK(out.report["tasks"].empty());
  CHECK(explain(out.report) == "no tasks\n");
}

TEST_CASE("local homology of x^2 through the runner") {
  auto out = run_scenario(parse_scenario(kLocal), {});
  CHECK(out.exit_code == 0);
  const auto& t = out.report["tasks"][0];
  CHECK(t["verdict"] == "pass");
  CHECK(t["result"]["homology"]["groups"] == "H_0=Z, H_1=0");
  CHECK(explain(out.report).find("H_0=Z, H_1=0") != std::string::npos);
}

TEST_CASE("non-isolating neighborhood fails with a refutation") {
  auto sc = parse_scenario(kHalf);
  auto out = run_scenario(sc, {});
  CHECK(out.exit_code == 1);
  CHECK(out.report["tasks"].size() == 2);
  CHECK(out.report["tasks"][0]["result"]["certificate"]["verdict"] == "refuted");
  RunOptions halt;
  halt.halt_on_fail = true;
  auto h = run_scenario(sc, halt);
  CHECK(h.report["tasks"].size() == 1);
  CHECK(h.report["summary"]["halted"] == true);
}

TEST_CASE("expectations decide the verdict") {
  std::string s = kHalf;
  s += "  - {name: expected, op: isolating_neighborhood, flow: attract, neighborhood: half, expect: {verdict: refuted}}\n";
  auto out = run_scenario(parse_scenario(s), {});
  CHECK(out.report["tasks"][2]["verdict"] == "pass");
  std::string w = kLocal;
  w += "    expect: {homology: \"H_0=0, H_1=Z\"}\n";
  auto bad = run_scenario(parse_scenario(w), {});
  CHECK(bad.exit_code == 1);
  CHECK(bad.report["tasks"][0]["checks"][0]["detail"]["actual"] == "H_0=Z, H_1=0");
}

TEST_CASE("reports are identical across thread counts and runs") {
  auto sc = parse_scenario(kTorus);
  int saved = mcf::par::threads();
  mcf::par::set_threads(1);
  auto a = run_scenario(sc, {}).report.dump();
  mcf::par::set_threads(3);
  auto b = run_scenario(sc, {}).report.dump();
  auto c = run_scenario(sc, {}).report.dump();
  mcf::par::set_threads(saved);
  CHECK(a == b);
  CHECK(b == c);
  auto j = mcf::io::json::parse(a);
  CHECK(explain(j).find("H_0=Z, H_1=Z², H_2=Z") != std::string::npos);
  RunOptions o;
  o.seed = 77;
  CHECK(run_scenario(sc, o).report["seed"] == 77);
}

TEST_CASE("explain rejects other documents") {
  CHECK_THROWS_AS(explain(mcf::io::json{{"schema", "other/1"}}), ReportError);
  CHECK_THROWS_AS(explain(mcf::io::json::array()), ReportError);
}

TEST_CASE("group strings") {
  using mcf::io::json;
  CHECK(group_string(json{{"betti", 0}, {"torsion", json::array()}}) == "0");
  CHECK(group_string(json{{"betti", 12}, {"torsion", {2, 4}}}) == "Z¹² ⊕ Z/2 ⊕ Z/4");
}

TEST_CASE("report and orbit files") {
  auto dir = std::filesystem::temp_directory_path() / "mcfkit-cli-test";
  std::filesystem::remove_all(dir);
  RunOptions o;
  o.output_dir = dir.string();
  o.dump_orbits = true;
  run_scenario(parse_scenario(kTorus), o);
  CHECK(std::filesystem::exists(dir / "report.json"));
  CHECK(std::filesystem::exists(dir / "timings.json"));
  int n = 0;
  for (auto& f : std::filesystem::directory_iterator(dir / "orbits")) n += f.path().extension() == ".csv";
  CHECK(n == 8);  // two witnesses for each of the four nonempty entries
  std::filesystem::remove_all(dir);
}
