#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mcf/domain.hpp"
#include "mcf/flowcore.hpp"

namespace mcf::maps {

// One factor of a composite map.
class Stage {
 public:
  virtual ~Stage() = default;
  virtual const Domain& source() const = 0;
  virtual const Domain& target() const = 0;
  virtual Vec apply(const Vec& p) const = 0;
  // Image of the frame F at p. Columns keep their direction for a single column
  // and the orientation class otherwise. Empty when the differential degenerates.
  virtual std::optional<Mat> push(const Vec& p, const Mat& F) const = 0;
  virtual std::vector<Vec> preimages(const Vec& q) const = 0;
  virtual std::string describe() const = 0;
};

class ExpressionStage : public Stage {
 public:
  explicit ExpressionStage(SmoothMap m, double max_cond = 1e10) : m_(std::move(m)), max_cond_(max_cond) {}
  const Domain& source() const override { return m_.source(); }
  const Domain& target() const override { return m_.target(); }
  Vec apply(const Vec& p) const override { return m_.apply(p); }
  std::optional<Mat> push(const Vec& p, const Mat& F) const override;
  std::vector<Vec> preimages(const Vec& q) const override;
  std::string describe() const override;
  const SmoothMap& map() const { return m_; }

 private:
  SmoothMap m_;
  double max_cond_;
};

// Time-R map of a flow; R may be any sign for autonomous fields.
class FlowStage : public Stage {
 public:
  FlowStage(std::shared_ptr<const flow::VectorField> X, double t0, double t1, flow::FlowConfig cfg)
      : X_(std::move(X)), t0_(t0), t1_(t1), cfg_(cfg) {}
  const Domain& source() const override { return X_->domain(); }
  const Domain& target() const override { return X_->domain(); }
  Vec apply(const Vec& p) const override;
  std::optional<Mat> push(const Vec& p, const Mat& F) const override;
  std::vector<Vec> preimages(const Vec& q) const override;
  std::string describe() const override;

 private:
  std::shared_ptr<const flow::VectorField> X_;
  double t0_, t1_;
  flow::FlowConfig cfg_;
};

class TranslationStage : public Stage {
 public:
  TranslationStage(Domain d, Vec v) : d_(std::move(d)), v_(std::move(v)) {}
  const Domain& source() const override { return d_; }
  const Domain& target() const override { return d_; }
  Vec apply(const Vec& p) const override { return d_.reduce(p + v_); }
  std::optional<Mat> push(const Vec&, const Mat& F) const override { return F; }
  std::vector<Vec> preimages(const Vec& q) const override { return {d_.reduce(q - v_)}; }
  std::string describe() const override;

 private:
  Domain d_;
  Vec v_;
};

// Composite of stages, applied first to last.
class MapChain {
 public:
  MapChain() = default;
  static MapChain of(const SmoothMap& m);
  static MapChain of(std::shared_ptr<const Stage> s);
  static MapChain identity(const Domain& d) { return of(SmoothMap::identity(d)); }

  const Domain& source() const { return stages_.front()->source(); }
  const Domain& target() const { return stages_.back()->target(); }
  bool empty() const { return stages_.empty(); }
  const std::vector<std::shared_ptr<const Stage>>& stages() const { return stages_; }

  // this then next
  MapChain then(const MapChain& next) const;
  MapChain then(std::shared_ptr<const Stage> s) const;

  Vec apply(const Vec& p) const;
  // Points before each stage plus the final image.
  std::vector<Vec> path(const Vec& p) const;
  std::optional<Mat> push(const std::vector<Vec>& path, const Mat& F) const;
  // Preimage paths of q, each as returned by path().
  std::vector<std::vector<Vec>> preimage_paths(const Vec& q) const;
  std::string describe() const;

 private:
  std::vector<std::shared_ptr<const Stage>> stages_;
};

}  // namespace mcf::maps
