#pragma once

#include <memory>
#include <string>
#include <vector>

#include "mcf/conley.hpp"
#include "mcf/moduli.hpp"
#include "mcf/zalgebra.hpp"

namespace mcf::duality {

using flow::FlowConfig;
using flow::MorseDatum;
using moduli::BoundaryResult;

// (-1)^{k(k+1)/2}
int c_sign(int k);

// Same critical points for -f; orientations chosen so that counts are transposed.
struct DualDatum {
  MorseDatum dual;
  std::vector<int> coorientation;  // dual orientation per point
};
DualDatum dual_datum(const MorseDatum& d);

// Orientation of the double dual divided by the original one, per point.
std::vector<int> double_dual_signs(const MorseDatum& d);

// Basis to dual basis, C_k(Q) -> C^{m-k}(Q^), as a map into the dualized dual complex.
zalg::GradedIntMap poincare_duality_map(const BoundaryResult& base, const BoundaryResult& dual, int m);

struct CountEntry {
  int x = -1, y = -1;
  long n = 0, n_dual = 0;
};
struct SymmetryReport {
  bool holds = true;
  std::vector<CountEntry> table;
  std::vector<CountEntry> mismatches;
  std::string message;
};
// Independent counts with f and -f; n(x,y;Q) against n(y,x;Q^).
SymmetryReport verify_count_symmetry(const MorseDatum& d, const Neighborhood* region, const FlowConfig& cfg);

struct PdReport {
  zalg::GradedIntMap map;
  zalg::ChainMapReport chain;
  bool iso_on_homology = false;
  zalg::HomologyResult homology, dual_cohomology;
  bool groups_match = false;
  std::string message;
};
PdReport verify_poincare_duality(const MorseDatum& d, const Neighborhood* region, const FlowConfig& cfg);

// Reverse-time flow.
class ReversedField : public flow::VectorField {
 public:
  explicit ReversedField(std::shared_ptr<const flow::VectorField> x) : x_(std::move(x)) {}
  const Domain& domain() const override { return x_->domain(); }
  bool autonomous() const override { return x_->autonomous(); }
  void eval(double t, const Vec& x, Vec& out) const override {
    x_->eval(t, x, out);
    out = -out;
  }
  Mat jacobian(double t, const Vec& x) const override { return -x_->jacobian(t, x); }

 private:
  std::shared_ptr<const flow::VectorField> x_;
};

struct ConleyDualityReport {
  conley::McfResult forward;
  conley::IsolationCertificate reverse_isolation;
  conley::LyapunovCertificate reverse_lyapunov;
  BoundaryResult dual_complex;
  zalg::HomologyResult hi, hi_dual;  // HI_*(S, phi) and HI^*(S, phi^-1)
  PdReport pd;
  bool groups_match = false;
  bool pass = false;
  std::string message;
};
ConleyDualityReport conley_duality_check(std::shared_ptr<const flow::VectorField> X, const Neighborhood& N,
                                         const ScalarField& f_phi, const Metric& g, const FlowConfig& fc,
                                         const conley::ConleyConfig& cc);

}  // namespace mcf::duality
