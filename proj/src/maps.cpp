#include "mcf/maps.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace mcf::maps {

std::optional<Mat> ExpressionStage::push(const Vec& p, const Mat& F) const {
  Vec im;
  Mat J;
  m_.jet(p, im, J);
  Mat G = J * F;
  if (G.cols() == 0) return G;
  Eigen::JacobiSVD<Mat> svd(G);
  auto sv = svd.singularValues();
  if (sv.size() < G.cols() || sv.minCoeff() <= 0 || sv.maxCoeff() / sv.minCoeff() > max_cond_) return std::nullopt;
  return G;
}

namespace {

double residual_1d(const SmoothMap& m, const Vec& q, double x) {
  Vec p(1);
  p[0] = x;
  return m.target().displacement(q, m.apply(p))[0];
}

}  // namespace

std::vector<Vec> ExpressionStage::preimages(const Vec& q) const {
  const Domain& s = m_.source();
  const Domain& t = m_.target();
  std::vector<Vec> out;
  if (s.dim == 1 && t.dim == 1) {
    const int N = 4096;
    double lo = s.is_torus() ? 0.0 : s.lo[0], hi = s.is_torus() ? 1.0 : s.hi[0];
    double lim = 0.25 * t.scale();
    std::vector<double> xs(N + 1), gs(N + 1);
    for (int i = 0; i <= N; ++i) {
      xs[i] = lo + (hi - lo) * i / N;
      gs[i] = residual_1d(m_, q, xs[i]);
    }
    for (int i = 0; i < N; ++i) {
      double a = xs[i], b = xs[i + 1], ga = gs[i], gb = gs[i + 1];
      if (ga == 0) {
        out.push_back(Vec::Constant(1, a));
        continue;
      }
      if (gb == 0) {
        if (i == N - 1 && !s.is_torus()) out.push_back(Vec::Constant(1, b));
        continue;
      }
      if ((ga < 0) == (gb < 0) || std::abs(ga) > lim || std::abs(gb) > lim) continue;
      for (int it = 0; it < 200 && b - a > 1e-15 * std::max(1.0, std::abs(a)); ++it) {
        double c = 0.5 * (a + b), gc = residual_1d(m_, q, c);
        if (gc == 0) {
          a = b = c;
          break;
        }
        if ((gc < 0) == (ga < 0)) {
          a = c;
          ga = gc;
        } else {
          b = c;
        }
      }
      out.push_back(Vec::Constant(1, 0.5 * (a + b)));
    }
    std::vector<Vec> uniq;
    for (auto& p : out) {
      p = s.reduce(p);
      bool dup = false;
      for (auto& r : uniq) dup = dup || s.distance(r, p) < 1e-12;
      if (!dup) uniq.push_back(p);
    }
    return uniq;
  }
  if (s.dim == 2 && t.dim == 2) {
    const int G = 32;
    std::vector<Vec> roots;
    for (int i = 0; i < G; ++i)
      for (int j = 0; j < G; ++j) {
        Vec p(2);
        for (int k = 0; k < 2; ++k) {
          double lo = s.is_torus() ? 0.0 : s.lo[k], hi = s.is_torus() ? 1.0 : s.hi[k];
          p[k] = lo + (hi - lo) * ((k == 0 ? i : j) + 0.5) / G;
        }
        bool ok = false;
        for (int it = 0; it < 60; ++it) {
          Vec im;
          Mat J;
          m_.jet(p, im, J);
          Vec r = t.displacement(q, im);
          if (r.norm() < 1e-13 * std::max(1.0, t.scale())) {
            ok = true;
            break;
          }
          Eigen::FullPivLU<Mat> lu(J);
          if (!lu.isInvertible()) break;
          Vec step = lu.solve(-r);
          double cap = 0.1 * s.scale();
          if (step.norm() > cap) step *= cap / step.norm();
          p = s.reduce(p + step);
          if (!s.is_torus() && !s.contains(p)) break;
        }
        if (!ok) continue;
        bool dup = false;
        for (auto& r : roots) dup = dup || s.distance(r, p) < 1e-8;
        if (!dup) roots.push_back(p);
      }
    std::sort(roots.begin(), roots.end(), [](const Vec& a, const Vec& b) {
      return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(), b.data() + b.size());
    });
    return roots;
  }
  throw std::invalid_argument("preimages supported for equal source and target dimension at most 2");
}

std::string ExpressionStage::describe() const {
  std::ostringstream os;
  os << "map(";
  for (std::size_t i = 0; i < m_.components().size(); ++i) os << (i ? ", " : "") << m_.components()[i].to_string();
  os << ")";
  return os.str();
}

Vec FlowStage::apply(const Vec& p) const { return X_->domain().reduce(flow::flow_time(*X_, p, t0_, t1_, cfg_)); }

std::optional<Mat> FlowStage::push(const Vec& p, const Mat& F) const {
  if (F.cols() == 0) return F;
  auto r = flow::transport_frame(*X_, p, F, t0_, t1_, cfg_);
  if (!r.ok) return std::nullopt;
  return r.frame;
}

std::vector<Vec> FlowStage::preimages(const Vec& q) const {
  return {X_->domain().reduce(flow::flow_time(*X_, q, t1_, t0_, cfg_))};
}

std::string FlowStage::describe() const {
  std::ostringstream os;
  os << "flow[" << t0_ << ", " << t1_ << "]";
  return os.str();
}

std::string TranslationStage::describe() const {
  std::ostringstream os;
  os << "translate(";
  for (int i = 0; i < v_.size(); ++i) os << (i ? ", " : "") << v_[i];
  os << ")";
  return os.str();
}

MapChain MapChain::of(const SmoothMap& m) { return of(std::make_shared<ExpressionStage>(m)); }

MapChain MapChain::of(std::shared_ptr<const Stage> s) {
  MapChain c;
  c.stages_.push_back(std::move(s));
  return c;
}

MapChain MapChain::then(const MapChain& next) const {
  if (!empty() && !next.empty() && target().dim != next.source().dim)
    throw std::invalid_argument("map composition: dimension mismatch");
  MapChain c = *this;
  for (auto& s : next.stages_) c.stages_.push_back(s);
  return c;
}

MapChain MapChain::then(std::shared_ptr<const Stage> s) const { return then(of(std::move(s))); }

Vec MapChain::apply(const Vec& p) const {
  Vec x = p;
  for (auto& s : stages_) x = s->apply(x);
  return x;
}

std::vector<Vec> MapChain::path(const Vec& p) const {
  std::vector<Vec> out{p};
  for (auto& s : stages_) out.push_back(s->apply(out.back()));
  return out;
}

std::optional<Mat> MapChain::push(const std::vector<Vec>& path, const Mat& F) const {
  Mat G = F;
  for (std::size_t i = 0; i < stages_.size(); ++i) {
    auto r = stages_[i]->push(path[i], G);
    if (!r) return std::nullopt;
    G = *r;
  }
  return G;
}

std::vector<std::vector<Vec>> MapChain::preimage_paths(const Vec& q) const {
  // walk backwards, keeping every branch
  std::vector<std::vector<Vec>> partial{{q}};
  for (int i = int(stages_.size()) - 1; i >= 0; --i) {
    std::vector<std::vector<Vec>> next;
    for (auto& tail : partial)
      for (auto& p : stages_[i]->preimages(tail.front())) {
        std::vector<Vec> pth{p};
        pth.insert(pth.end(), tail.begin(), tail.end());
        next.push_back(std::move(pth));
      }
    partial = std::move(next);
  }
  return partial;
}

std::string MapChain::describe() const {
  std::string s;
  for (std::size_t i = 0; i < stages_.size(); ++i) s += (i ? " then " : "") + stages_[i]->describe();
  return s;
}

}  // namespace mcf::maps
