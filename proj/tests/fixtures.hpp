#pragma once

#include "mcf/flowcore.hpp"
#include "mcf/moduli.hpp"

namespace fx {

using namespace mcf;

inline flow::MorseDatum datum(const Domain& d, const std::string& f, const Neighborhood* region = nullptr,
                              const flow::FlowConfig& cfg = {}) {
  return flow::make_datum(ScalarField::parse(d, f), Metric(d.dim), region, cfg);
}

inline Vec v1(double a) { return (Vec(1) << a).finished(); }
inline Vec v2(double a, double b) { return (Vec(2) << a, b).finished(); }

// Upright torus height with a symmetry-breaking term; Morse-Smale, Betti (1,2,1).
inline const char* kTorus = "(2+cos(2*pi*x2))*cos(2*pi*x1) + 0.1*sin(2*pi*x2)";
inline const char* kCircle = "cos(2*pi*x1)/(4*pi^2)";

}  // namespace fx
