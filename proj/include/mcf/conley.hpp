#pragma once

#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mcf/flowcore.hpp"
#include "mcf/maps.hpp"
#include "mcf/moduli.hpp"
#include "mcf/neighborhood.hpp"
#include "mcf/zalgebra.hpp"

namespace mcf::conley {

using flow::FlowConfig;
using flow::MorseDatum;

struct ConleyConfig {
  double mesh_spacing = 1e-2;   // boundary mesh, relative to the neighborhood scale
  double grid_spacing = 5e-2;   // interior sampling, relative to the neighborhood scale
  double margin_int = 1e-2;
  double t_invariant = 30.0;    // horizon for sampling invariant sets of general flows
  double pullback_resolution = 1e-3;
  double tol_const = 1e-6;
  double equivariance_tol = 1e-6;
  int perturb_attempts = 16;
  double perturb_eps = 1e-3;
  int lambda_grid = 11;
  int r_grid = 11;
  double r_max = 50.0;
  unsigned long long seed = 0;
};

enum class Verdict { certified, refuted, inconclusive };
std::string to_string(Verdict v);

struct IsolationFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};
// Failure inside a multi-stage pipeline, tagged with the stage.
struct StageFailure : std::runtime_error {
  StageFailure(const std::string& stage, const std::string& m) : std::runtime_error(stage + ": " + m), stage(stage) {}
  std::string stage;
};

struct IsolationCertificate {
  Verdict verdict = Verdict::inconclusive;
  int mesh_points = 0;
  int grid_points = 0;
  std::vector<Vec> offending;      // boundary points that stay in N both ways, or S-samples at the boundary
  std::vector<Vec> undecided;      // boundary points that hit the time cap
  std::vector<Vec> s_samples;
  std::vector<Vec> equilibria;
  double min_s_margin = std::numeric_limits<double>::infinity();
  std::string message;
};

IsolationCertificate verify_isolating_neighborhood(const flow::VectorField& X, const Neighborhood& N,
                                                   const FlowConfig& fc, const ConleyConfig& cc);

// A flow restricted to a neighborhood, with the points orbits may converge to.
struct FlowSide {
  std::shared_ptr<const flow::VectorField> field;
  const Neighborhood* region = nullptr;
  std::vector<flow::Target> targets;
  const MorseDatum* datum = nullptr;  // gradient data allow exact unstable-set sampling
  std::shared_ptr<const Neighborhood> owned;  // whole domain when no region was given
  static FlowSide gradient(const MorseDatum& d, const Neighborhood* N);
  static FlowSide general(std::shared_ptr<const flow::VectorField> X, const Neighborhood* N, const FlowConfig& fc);
};

// Point of the backward-bounded set S_- with the smallest margin of its backward orbit.
struct SideSample {
  Vec p;
  double back_margin = 0;
};
std::vector<SideSample> sample_unstable_set(const FlowSide& s, const FlowConfig& fc, const ConleyConfig& cc);
// Infimum of the signed margin along the forward orbit of q (negative once it leaves).
double forward_margin(const FlowSide& s, const Vec& q, const FlowConfig& fc, const ConleyConfig& cc);

struct IsolatedMapReport {
  Verdict verdict = Verdict::certified;
  int samples = 0;
  std::vector<Vec> s_h;          // sampled points of S_h
  std::vector<Vec> offending;
  double min_margin = std::numeric_limits<double>::infinity();
  std::string message;
};
IsolatedMapReport verify_isolated_map(const maps::MapChain& h, const FlowSide& a, const FlowSide& b,
                                      const FlowConfig& fc, const ConleyConfig& cc);

// Isolation along a one-parameter family of maps s -> h_s on [s0, s1].
struct FamilyScan {
  bool isolated = true;
  std::vector<double> grid;
  std::vector<double> worst;     // per grid value: smallest margin over S_h (inf when S_h is empty)
  std::optional<double> violation;
  double bracket_lo = 0, bracket_hi = 0;
  std::string message;
};
FamilyScan scan_map_family(const std::function<maps::MapChain(double)>& h, const FlowSide& a, const FlowSide& b,
                           double s0, double s1, int n, const FlowConfig& fc, const ConleyConfig& cc);

// Isolation of the gradient flows of (1-lam) fa + lam fb on N.
struct HomotopyScan {
  bool isolated = true;
  std::vector<double> grid;
  std::vector<Verdict> verdicts;
  std::optional<double> crossing;
  std::string message;
};
HomotopyScan scan_gradient_homotopy(const ScalarField& fa, const ScalarField& fb, const Metric& g,
                                    const Neighborhood& N, const FlowConfig& fc, const ConleyConfig& cc);

struct FlowMapReport {
  bool equivariant = false;
  bool proper = true;
  double max_residual = 0;
  Vec worst_point;
  double worst_time = 0;
  int samples = 0;
  std::string message;
};
FlowMapReport verify_flow_map(const SmoothMap& h, const flow::VectorField& xa, const flow::VectorField& xb,
                              const FlowConfig& fc, const ConleyConfig& cc);

struct PullbackResult {
  Neighborhood region;
  IsolationCertificate certificate;
  IsolatedMapReport isolated;
};
PullbackResult pullback_neighborhood(const SmoothMap& h, const Neighborhood& nb,
                                     std::shared_ptr<const flow::VectorField> xa,
                                     std::shared_ptr<const flow::VectorField> xb, const FlowConfig& fc,
                                     const ConleyConfig& cc);

struct LyapunovCertificate {
  Verdict verdict = Verdict::inconclusive;
  double variation = 0;          // of f over the S-samples
  double margin = 0;             // min of -df/dt over checked grid points
  Vec worst_point;
  int checked = 0;
  std::string message;
};
LyapunovCertificate verify_lyapunov(const ScalarField& f, const flow::VectorField& X, const Neighborhood& N,
                                    const std::vector<Vec>& s_samples, const FlowConfig& fc, const ConleyConfig& cc);

struct LocalHomology {
  ScalarField field;             // possibly perturbed
  MorseDatum datum;
  moduli::BoundaryResult complex;
  zalg::HomologyResult homology;
  IsolationCertificate certificate;
  double eps = 0;
  int attempts = 0;
  std::vector<std::string> log;
  FlowConfig flow;               // horizon stretched for slow critical points
};
// t_max long enough to leave and reach the slowest critical point of d.
FlowConfig adapted_horizon(const MorseDatum& d, FlowConfig fc);
LocalHomology local_morse_homology(const ScalarField& f, const Metric& g, const Neighborhood& N, const FlowConfig& fc,
                                   const ConleyConfig& cc);

struct McfResult {
  IsolationCertificate flow_certificate;
  LyapunovCertificate lyapunov;
  LocalHomology local;
};
McfResult mcf_homology(std::shared_ptr<const flow::VectorField> X, const Neighborhood& N, const ScalarField& f_phi,
                       const Metric& g, const FlowConfig& fc, const ConleyConfig& cc);

struct McfMapResult {
  FlowMapReport flow_map;
  PullbackResult pullback;
  LyapunovCertificate lyapunov_b;
  LocalHomology source, target;
  IsolatedMapReport gradient_isolation;
  double eps = 0;
  zalg::GradedIntMap chain_map;
  zalg::HomologyMap on_homology;
};
McfMapResult mcf_induced_map(const SmoothMap& h, std::shared_ptr<const flow::VectorField> xa,
                             std::shared_ptr<const flow::VectorField> xb, const Neighborhood& nb,
                             const ScalarField& f_b, const Metric& ga, const Metric& gb, const FlowConfig& fc,
                             const ConleyConfig& cc);

}  // namespace mcf::conley
