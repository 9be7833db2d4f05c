#pragma once

#include <functional>
#include <limits>

#include "mcf/domain.hpp"

namespace mcf::ode {

struct Options {
  double rtol = 1e-10;
  double atol = 1e-12;
  double h_init = 1e-3;
  double h_max = 0.1;
  double h_min = 1e-14;
  long max_steps = 2'000'000;
  // Caps the step so the first `disp_dims` state components move at most this far.
  double max_disp = std::numeric_limits<double>::infinity();
  int disp_dims = -1;
};

using Rhs = std::function<void(double t, const Vec& y, Vec& dy)>;

enum class Control { proceed, stop, modified };
// Called after every accepted step; may edit y in place (return modified).
using Observer = std::function<Control(double t, Vec& y)>;

enum class Status { reached, stopped, underflow, max_steps };

struct Result {
  Status status = Status::reached;
  double t = 0;
  Vec y;
  long steps = 0;
};

// Dormand–Prince 5(4) with embedded error control; t1 < t0 integrates backwards.
Result integrate(const Rhs& f, double t0, const Vec& y0, double t1, const Options& opt, const Observer& obs = {});

}  // namespace mcf::ode
