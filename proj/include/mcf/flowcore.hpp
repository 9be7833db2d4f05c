#pragma once

#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mcf/domain.hpp"
#include "mcf/neighborhood.hpp"
#include "mcf/ode.hpp"

namespace mcf::flow {

struct FlowConfig {
  double rtol = 1e-10;
  double atol = 1e-12;
  double h_init = 1e-3;
  double h_max = 0.05;
  double t_max = 200.0;
  double r_conv = 1e-3;
  double r_launch = 1e-3;
  double max_disp = 5e-3;      // per-step displacement cap, relative to domain scale
  double tol_crit = 1e-9;
  double tol_nondeg = 1e-8;
  double cone = 0.1;
  double tol_transv = 1e-9;
  int seeds_per_axis = 32;
  int circle_samples = 720;
  ode::Options ode(double scale) const;
};

class VectorField {
 public:
  virtual ~VectorField() = default;
  virtual const Domain& domain() const = 0;
  int dim() const { return domain().dim; }
  virtual bool autonomous() const { return true; }
  virtual void eval(double t, const Vec& x, Vec& out) const = 0;
  virtual Mat jacobian(double t, const Vec& x) const = 0;
};

// X = -sign * g^{-1} grad f.
class GradientField : public VectorField {
 public:
  GradientField(ScalarField f, Metric g, double sign = 1.0);
  const Domain& domain() const override { return f_.domain(); }
  void eval(double t, const Vec& x, Vec& out) const override;
  Mat jacobian(double t, const Vec& x) const override;
  const ScalarField& field() const { return f_; }
  const Metric& metric() const { return g_; }

 private:
  ScalarField f_;
  Metric g_;
  double sign_;
};

class ExpressionField : public VectorField {
 public:
  ExpressionField(Domain d, std::vector<expr::Expression> comps);
  static ExpressionField parse(const Domain& d, const std::vector<std::string>& comps);
  const Domain& domain() const override { return dom_; }
  void eval(double t, const Vec& x, Vec& out) const override;
  Mat jacobian(double t, const Vec& x) const override;
  const std::vector<expr::Expression>& components() const { return comps_; }
  ExpressionField reversed() const;

 private:
  Domain dom_;
  std::vector<expr::Expression> comps_;
};

double smoothstep(double s);

// Non-autonomous gradient flow of f_{lambda(t)} = (1-lambda) f_A + lambda f_B with
// lambda(t) = smoothstep(t / T_s) clamped to [0,1].
class InterpolatedGradientField : public VectorField {
 public:
  InterpolatedGradientField(ScalarField fa, ScalarField fb, Metric g, double t_switch);
  const Domain& domain() const override { return fa_.domain(); }
  bool autonomous() const override { return false; }
  void eval(double t, const Vec& x, Vec& out) const override;
  Mat jacobian(double t, const Vec& x) const override;
  double lambda(double t) const;
  double t_switch() const { return ts_; }

 private:
  ScalarField fa_, fb_;
  Metric g_;
  double ts_;
};

struct DegenerateCriticalPoint : std::runtime_error {
  DegenerateCriticalPoint(const std::string& m, Vec where) : std::runtime_error(m), location(std::move(where)) {}
  Vec location;
};

struct CriticalPoint {
  Vec x;
  int index = 0;
  Vec eigenvalues;  // ascending (generalized, with respect to the metric)
  Mat eigenvectors; // columns: unstable (negative) directions first, in ascending order
  int orientation = 1;  // sign multiplying the canonical unstable frame
  std::string label;

  Mat basis_inverse;

  Mat unstable_frame() const { return eigenvectors.leftCols(index); }
  Mat stable_frame() const { return eigenvectors.rightCols(eigenvectors.cols() - index); }
  // Coordinates of v in the eigenbasis.
  Vec eigen_coords(const Vec& v) const;
};

class MorseDatum {
 public:
  MorseDatum() = default;
  MorseDatum(ScalarField f, Metric g, std::vector<CriticalPoint> pts);

  const ScalarField& field() const { return f_; }
  const Metric& metric() const { return g_; }
  const Domain& domain() const { return f_.domain(); }
  int dim() const { return f_.dim(); }
  const std::vector<CriticalPoint>& points() const { return pts_; }
  std::vector<CriticalPoint>& points() { return pts_; }
  std::vector<int> of_index(int k) const;
  const GradientField& gradient() const { return *grad_; }
  std::shared_ptr<const GradientField> gradient_ptr() const { return grad_; }
  int euler_characteristic() const;

 private:
  ScalarField f_;
  Metric g_;
  std::vector<CriticalPoint> pts_;
  std::shared_ptr<const GradientField> grad_;
};

// Newton from a seed grid; throws DegenerateCriticalPoint.
std::vector<CriticalPoint> find_critical_points(const ScalarField& f, const Metric& g, const Neighborhood* region,
                                                const FlowConfig& cfg);
MorseDatum make_datum(const ScalarField& f, const Metric& g, const Neighborhood* region, const FlowConfig& cfg);
CriticalPoint analyze_critical_point(const ScalarField& f, const Metric& g, const Vec& x);

// f + eps * (seeded random linear form), or a trigonometric form on tori.
ScalarField perturb_field(const ScalarField& f, double eps, unsigned long long seed);

// Equilibria of a general vector field inside a region (Newton on X).
std::vector<Vec> find_equilibria(const VectorField& X, const Neighborhood& region, const FlowConfig& cfg);

enum class Direction { forward, backward };
enum class Terminal { converged, exited, time_capped, stopped, failed };
std::string to_string(Terminal t);

// A point the integrator may converge to. With a basis the cone test applies;
// without one a tight radius is used.
struct Target {
  Vec x;
  Mat basis, basis_inv;
  int unstable_dim = -1;
};
std::vector<Target> targets_of(const MorseDatum& d);
std::vector<Target> targets_of(const std::vector<Vec>& equilibria);

struct StopRule {
  double t_max = 200.0;
  bool hit_critical = true;
  const Neighborhood* region = nullptr;
  bool record = false;
  bool track_margin = false;
  // Extra per-step hook; returning true stops the integration.
  std::function<bool(double t, const Vec& x)> extra;
};

struct Orbit {
  Terminal status = Terminal::failed;
  int target = -1;
  double t = 0;
  Vec start, end;
  std::vector<double> ts;
  std::vector<Vec> xs;
  double min_margin = std::numeric_limits<double>::infinity();
  std::string failure;
};

Orbit integrate(const VectorField& X, const std::vector<Target>& targets, const Vec& p, double t0, Direction dir,
                const StopRule& stop, const FlowConfig& cfg);
Orbit integrate_orbit(const MorseDatum& d, const Vec& p, Direction dir, const StopRule& stop, const FlowConfig& cfg);
// Time-t map of a field (nonautonomous fields run from t0 to t0 + t or backwards).
Vec flow_time(const VectorField& X, const Vec& p, double t0, double t1, const FlowConfig& cfg);

struct FrameResult {
  Vec end;
  Mat frame;
  bool ok = true;
  std::string failure;
};
// Carries the columns of F along the flow from t0 to t1 with the variational
// equation; QR with positive diagonal after each step keeps the orientation class.
FrameResult transport_frame(const VectorField& X, const Vec& p, const Mat& F, double t0, double t1,
                            const FlowConfig& cfg);
FrameResult unstable_frame_transport(const MorseDatum& d, const Orbit& orbit, const Mat& F, const FlowConfig& cfg);

// Re-orthonormalizes columns keeping span and orientation; returns false on collapse.
bool orthonormalize(Mat& F, double max_cond = 1e12);

void write_orbit_csv(const std::string& path, const Orbit& o);

}  // namespace mcf::flow
