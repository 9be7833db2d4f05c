#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "mcf/flowcore.hpp"
#include "mcf/zalgebra.hpp"

namespace mcf::moduli {

using flow::FlowConfig;
using flow::MorseDatum;

struct Witness {
  double param = 0;      // launch angle, branch sign or curve parameter
  int sign = 0;          // from frame transport
  int side_sign = 0;     // from the shooting side rule
  double slope = 0;      // shooting-function derivative at the root (0 when not applicable)
  Vec launch, near_target;
};

struct ConnectionCount {
  int x = -1, y = -1;    // indices into the datum's critical points
  long n = 0;
  std::vector<Witness> witnesses;
};

struct NotMorseSmale : std::runtime_error {
  NotMorseSmale(const std::string& m, int x, int y) : std::runtime_error(m), x(x), y(y) {}
  int x, y;
};
struct NonTransverse : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct CountingFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct BoundarySquareFailure : std::runtime_error {
  BoundarySquareFailure(const std::string& m, int x, int z) : std::runtime_error(m), x(x), z(z) {}
  int x, z;
};

// Box about a 2D index-1 critical point in its eigen-coordinates (u, s).
struct SaddleBox {
  int point = -1;
  Vec center;
  Mat basis, basis_inv;
  double delta = 0;
};

struct Visit {
  int box = -1;           // index into the box list
  int branch = 0;         // sign of s on entry
  int side = 0;           // sign of u on exit through a u-face; 0 if unresolved
  bool sectioned = false; // crossed |s| = delta/2 inside the box
  double t_section = 0;
  double u_section = 0;
};

std::vector<SaddleBox> saddle_boxes(const MorseDatum& d, const FlowConfig& cfg);

// Records box visits along an orbit; feed every accepted step.
class VisitTracker {
 public:
  VisitTracker(const Domain& dom, const std::vector<SaddleBox>& boxes) : dom_(dom), boxes_(boxes) {
    state_.resize(boxes.size());
  }
  void step(double t, const Vec& x);
  void finish();
  const std::vector<Visit>& visits() const { return visits_; }
  // Visits to one box in order.
  std::vector<Visit> visits_to(int box) const;

 private:
  struct State {
    bool inside = false;
    int open = -1;
    double prev_s = 0, prev_u = 0, prev_t = 0;
  };
  const Domain& dom_;
  const std::vector<SaddleBox>& boxes_;
  std::vector<State> state_;
  std::vector<Visit> visits_;
};

// Classification of two visit sequences to one box: equal, a shooting bracket at
// visit k (same history, same branch, opposite sides), or structurally different.
enum class Compare { equal, bracket, different };
Compare compare_visits(const std::vector<Visit>& a, const std::vector<Visit>& b, int& k);

// Orientation sign det(Lambda) of a transported frame F at p relative to
// [flow direction, canonical unstable frame of y], fiber first.
int fiber_first_sign(const MorseDatum& d, int y, const Vec& p, const Mat& F);

std::vector<ConnectionCount> connections_from(const MorseDatum& d, int x, const Neighborhood* region,
                                              const FlowConfig& cfg);
ConnectionCount count_connections(const MorseDatum& d, int x, int y, const Neighborhood* region,
                                  const FlowConfig& cfg);

struct BoundaryResult {
  zalg::GradedComplex complex;
  std::vector<std::vector<int>> points;  // per degree: datum indices of the generators
  std::vector<ConnectionCount> counts;
};
BoundaryResult boundary_operator(const MorseDatum& d, const Neighborhood* region, const FlowConfig& cfg);

// Critical points of the datum lying in the region (all when region is null).
std::vector<int> points_in(const MorseDatum& d, const Neighborhood* region);

struct MorseSmaleReport {
  bool pass = true;
  std::vector<std::pair<int, int>> offending;
  double min_slope = 0;
  std::string message;
};
MorseSmaleReport validate_morse_smale(const MorseDatum& d, const Neighborhood* region, const FlowConfig& cfg);

}  // namespace mcf::moduli
