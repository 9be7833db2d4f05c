#pragma once

#include <vector>

#include "mcf/domain.hpp"

namespace mcf {

struct Box {
  std::vector<double> lo, hi;
};

// Finite union of closed axis-aligned boxes. On tori a box may extend past 1
// (it wraps); an axis of length >= 1 is a full period and has no boundary.
class Neighborhood {
 public:
  Neighborhood() = default;
  Neighborhood(Domain d, std::vector<Box> boxes);
  static Neighborhood whole(const Domain& d);

  const Domain& domain() const { return dom_; }
  const std::vector<Box>& boxes() const { return boxes_; }
  bool is_whole_torus() const;

  bool contains(const Vec& p) const;
  // Signed L-infinity distance to the boundary: positive inside, negative outside.
  double margin(const Vec& p) const;
  // True when the closed cube of radius r about p lies in the union.
  bool covers_cube(const Vec& p, double r) const;

  double scale() const;
  // Boundary sample points with the given spacing; only points on the true boundary of the union.
  std::vector<Vec> boundary_mesh(double spacing) const;
  // Grid points of the union with the given spacing (deduplicated across boxes).
  std::vector<Vec> grid(double spacing) const;

 private:
  double box_inner(const Box& b, const Vec& p) const;   // >= 0 inside, < 0 outside
  double box_outer(const Box& b, const Vec& p) const;   // L-inf distance from p to box
  bool full_axis(const Box& b, int i) const;

  Domain dom_;
  std::vector<Box> boxes_;
};

}  // namespace mcf
