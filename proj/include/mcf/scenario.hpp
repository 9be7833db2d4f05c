#pragma once

#include <yaml-cpp/yaml.h>

#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "mcf/conley.hpp"
#include "mcf/domain.hpp"
#include "mcf/flowcore.hpp"
#include "mcf/maps.hpp"
#include "mcf/neighborhood.hpp"

namespace mcf::cli {

inline constexpr const char* kScenarioSchema = "mcfkit-scenario/1";

// Positions are 1-based; 0 when unknown.
struct ScenarioError : std::runtime_error {
  ScenarioError(const std::string& m, int line, int column)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + m
                                    : m),
        line(line),
        column(column) {}
  int line, column;
};

// One-parameter family of maps; the parameter is an extra variable bound per evaluation.
struct MapFamily {
  Domain source, target;
  std::string parameter;
  std::vector<std::string> texts;
  std::vector<expr::Expression> components;
  maps::MapChain at(double s) const;
};

struct Flow {
  std::shared_ptr<const flow::VectorField> field;
  std::string description;
};

struct Task {
  std::string name, op;
  YAML::Node args;
  int line = 0;
};

struct Scenario {
  unsigned long long seed = 0;
  flow::FlowConfig flow;
  conley::ConleyConfig conley;
  std::map<std::string, Domain> domains;
  std::map<std::string, std::string> field_domain, map_source, map_target;
  std::map<std::string, ScalarField> fields;
  std::map<std::string, std::string> field_text;
  std::map<std::string, Metric> metrics;
  std::map<std::string, SmoothMap> maps;
  std::map<std::string, MapFamily> families;
  std::map<std::string, Neighborhood> neighborhoods;
  std::map<std::string, Flow> flows;
  std::vector<Task> tasks;
};

Scenario parse_scenario(const std::string& text);
Scenario load_scenario(const std::string& path);

// Argument kinds accepted by task operations.
enum class ArgKind { field, metric, map, family, neighborhood, flow, number, boolean, fields3, neighborhoods3, expect };
struct ArgSpec {
  const char* key;
  ArgKind kind;
  bool required;
};
const std::vector<ArgSpec>* task_signature(const std::string& op);
std::vector<std::string> task_ops();

}  // namespace mcf::cli
