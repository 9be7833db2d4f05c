#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mcf/conley.hpp"
#include "mcf/maps.hpp"
#include "mcf/moduli.hpp"
#include "mcf/zalgebra.hpp"

namespace mcf::induced {

using conley::ConleyConfig;
using flow::FlowConfig;
using flow::MorseDatum;
using maps::MapChain;
using moduli::BoundaryResult;

struct MapWitness {
  double param = 0;   // source point coordinate or branch-curve parameter
  int sign = 0;       // orientation comparison
  int side_sign = 0;  // side rule
  double slope = 0;
  Vec point, image;
};

struct MapCount {
  int x = -1, y = -1;
  long n = 0;
  std::vector<MapWitness> witnesses;
};

struct NonTransverseMap : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ChainMapFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Both data with optional regions (local variant when given).
struct Pair {
  const MorseDatum* a = nullptr;
  const MorseDatum* b = nullptr;
  const Neighborhood* na = nullptr;
  const Neighborhood* nb = nullptr;
};

// All signed counts n_h(x, y) for |y| = |x|.
std::vector<MapCount> map_counts_from(const MapChain& h, const Pair& d, int x, const FlowConfig& cfg);
MapCount count_map_intersections(const MapChain& h, const Pair& d, int x, int y, const FlowConfig& cfg);

struct InducedMap {
  zalg::GradedIntMap map;
  std::vector<MapCount> counts;
  zalg::ChainMapReport chain;
};
// Throws ChainMapFailure when the assembled matrices fail the chain-map identity.
InducedMap induced_chain_map(const MapChain& h, const Pair& d, const BoundaryResult& ca, const BoundaryResult& cb,
                             const FlowConfig& cfg);

struct PerturbAttempt {
  double eps = 0;
  Vec v;
  bool accepted = false;
  std::string reason;
};
struct PerturbResult {
  MapChain map;
  double eps = 0;
  Vec v;
  InducedMap induced;
  std::vector<PerturbAttempt> attempts;
};
MapChain translated(const MapChain& h, const Vec& shift);
PerturbResult perturb_to_transverse(const MapChain& h, const Pair& d, const BoundaryResult& ca,
                                    const BoundaryResult& cb, const FlowConfig& cfg, const ConleyConfig& cc);

struct ComposeReport {
  InducedMap first, second, composite, composite_zero;
  zalg::GradedIntMap product;
  bool product_equals_zero = false;      // h_CB* h_BA* vs (h_CB h_BA)*
  bool composite_equals_zero = false;    // (h_CB psi_R h_BA)* vs (h_CB h_BA)*
  bool product_equals_composite = false;
  std::optional<conley::FamilyScan> isolation;
  bool hypothesis_ok = true;
  std::string message;
};
ComposeReport compose_with_flow(const MapChain& h_ba, const MapChain& h_cb, double R, const MorseDatum& A,
                                const MorseDatum& B, const MorseDatum& C, const BoundaryResult& ca,
                                const BoundaryResult& cb, const BoundaryResult& cc_, const Neighborhood* na,
                                const Neighborhood* nb, const Neighborhood* nc, const FlowConfig& cfg,
                                const ConleyConfig& cc);

struct HomotopyReport {
  InducedMap h0, h1;
  bool equal_on_homology = false;
  std::optional<conley::FamilyScan> isolation;
  bool hypothesis_ok = true;
  std::string message;
};
HomotopyReport homotopy_check(const std::function<MapChain(double)>& family, const Pair& d, const BoundaryResult& ca,
                              const BoundaryResult& cb, const FlowConfig& cfg, const ConleyConfig& cc);

struct ContinuationResult {
  InducedMap map;
  conley::HomotopyScan isolation;
};
// Counts solutions of the switched flow from crit f_A to crit f_B. Throws
// conley::IsolationFailure when the interpolation is not isolated on the region.
ContinuationResult continuation_map(const MorseDatum& A, const MorseDatum& B, const Neighborhood* region,
                                    double t_switch, const BoundaryResult& ca, const BoundaryResult& cb,
                                    const FlowConfig& cfg, const ConleyConfig& cc);

}  // namespace mcf::induced
