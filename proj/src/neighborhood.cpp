#include "mcf/neighborhood.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

namespace mcf {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<long long> key_of(const Vec& p) {
  std::vector<long long> k(p.size());
  for (int i = 0; i < p.size(); ++i) k[i] = std::llround(p[i] * 1e9);
  return k;
}

// Inclusive lattice on [lo, hi] with at most `spacing` between nodes.
std::vector<double> lattice(double lo, double hi, double spacing, bool periodic) {
  double len = hi - lo;
  int n = std::max(1, int(std::ceil(len / spacing - 1e-9)));
  std::vector<double> v;
  int count = periodic ? n : n + 1;
  for (int i = 0; i < count; ++i) v.push_back(lo + len * i / n);
  return v;
}
}  // namespace

Neighborhood::Neighborhood(Domain d, std::vector<Box> boxes) : dom_(std::move(d)), boxes_(std::move(boxes)) {
  if (boxes_.empty()) throw std::invalid_argument("neighborhood needs at least one box");
  for (const auto& b : boxes_) {
    if (int(b.lo.size()) != dom_.dim || int(b.hi.size()) != dom_.dim)
      throw std::invalid_argument("neighborhood box dimension mismatch");
    for (int i = 0; i < dom_.dim; ++i)
      if (!(b.lo[i] < b.hi[i])) throw std::invalid_argument("neighborhood box bounds must be strictly ordered");
  }
}

Neighborhood Neighborhood::whole(const Domain& d) {
  Box b{d.lo, d.hi};
  return Neighborhood(d, {b});
}

bool Neighborhood::full_axis(const Box& b, int i) const {
  return dom_.is_torus() && b.hi[i] - b.lo[i] >= 1.0 - 1e-12;
}

bool Neighborhood::is_whole_torus() const {
  if (!dom_.is_torus()) return false;
  for (const auto& b : boxes_) {
    bool all = true;
    for (int i = 0; i < dom_.dim; ++i) all = all && full_axis(b, i);
    if (all) return true;
  }
  return false;
}

double Neighborhood::box_inner(const Box& b, const Vec& p) const {
  double inner = kInf, outer = 0;
  for (int i = 0; i < dom_.dim; ++i) {
    if (full_axis(b, i)) continue;
    double len = b.hi[i] - b.lo[i];
    double o = dom_.is_torus() ? wrap_unit(p[i] - b.lo[i]) : p[i] - b.lo[i];
    if (dom_.is_torus()) {
      if (o <= len) inner = std::min(inner, std::min(o, len - o));
      else outer = std::max(outer, std::min(o - len, 1.0 - o));
    } else {
      if (o >= 0 && o <= len) inner = std::min(inner, std::min(o, len - o));
      else outer = std::max(outer, o < 0 ? -o : o - len);
    }
  }
  return outer > 0 ? -outer : inner;
}

double Neighborhood::box_outer(const Box& b, const Vec& p) const {
  double v = box_inner(b, p);
  return v >= 0 ? 0.0 : -v;
}

bool Neighborhood::contains(const Vec& p) const {
  for (const auto& b : boxes_)
    if (box_inner(b, p) >= 0) return true;
  return false;
}

bool Neighborhood::covers_cube(const Vec& p, double r) const {
  const int n = dom_.dim;
  std::vector<std::vector<double>> cuts(n);
  for (int i = 0; i < n; ++i) {
    cuts[i] = {-r, r};
    for (const auto& b : boxes_) {
      if (full_axis(b, i)) continue;
      for (double edge : {b.lo[i], b.hi[i]}) {
        double rel = edge - p[i];
        if (dom_.is_torus()) {
          for (int k = -2; k <= 2; ++k)
            if (rel + k > -r && rel + k < r) cuts[i].push_back(rel + k);
        } else if (rel > -r && rel < r) {
          cuts[i].push_back(rel);
        }
      }
    }
    std::sort(cuts[i].begin(), cuts[i].end());
    cuts[i].erase(std::unique(cuts[i].begin(), cuts[i].end()), cuts[i].end());
  }
  std::vector<int> idx(n, 0);
  Vec q(n);
  for (;;) {
    for (int i = 0; i < n; ++i) q[i] = p[i] + 0.5 * (cuts[i][idx[i]] + cuts[i][idx[i] + 1]);
    if (!contains(q)) return false;
    int i = 0;
    while (i < n && ++idx[i] >= int(cuts[i].size()) - 1) idx[i++] = 0;
    if (i == n) return true;
  }
}

double Neighborhood::margin(const Vec& p) const {
  double best_in = -kInf, best_out = kInf;
  for (const auto& b : boxes_) {
    double v = box_inner(b, p);
    if (v >= 0) best_in = std::max(best_in, v);
    else best_out = std::min(best_out, -v);
  }
  if (best_in < 0) return -best_out;
  if (boxes_.size() == 1 || std::isinf(best_in)) return best_in;
  double lo = best_in, hi = std::max(2 * best_in, 1e-6);
  double cap = scale();
  while (hi < cap && covers_cube(p, hi)) {
    lo = hi;
    hi *= 2;
  }
  if (hi >= cap && covers_cube(p, cap)) return cap;
  for (int it = 0; it < 50 && hi - lo > 1e-13; ++it) {
    double mid = 0.5 * (lo + hi);
    if (covers_cube(p, mid)) lo = mid;
    else hi = mid;
  }
  return lo;
}

double Neighborhood::scale() const {
  double s = 0;
  for (const auto& b : boxes_)
    for (int i = 0; i < dom_.dim; ++i) s = std::max(s, full_axis(b, i) ? 1.0 : b.hi[i] - b.lo[i]);
  return s;
}

std::vector<Vec> Neighborhood::boundary_mesh(double spacing) const {
  const int n = dom_.dim;
  std::vector<Vec> out;
  std::set<std::vector<long long>> seen;
  double eta = 1e-9 * std::max(scale(), 1e-6);
  for (const auto& b : boxes_) {
    for (int axis = 0; axis < n; ++axis) {
      if (full_axis(b, axis)) continue;
      for (int side = 0; side < 2; ++side) {
        std::vector<std::vector<double>> coords(n);
        for (int j = 0; j < n; ++j) {
          if (j == axis) coords[j] = {side ? b.hi[j] : b.lo[j]};
          else coords[j] = lattice(b.lo[j], full_axis(b, j) ? b.lo[j] + 1.0 : b.hi[j], spacing, full_axis(b, j));
        }
        std::vector<std::size_t> idx(n, 0);
        for (;;) {
          Vec p(n);
          for (int j = 0; j < n; ++j) p[j] = coords[j][idx[j]];
          Vec nudged = p;
          nudged[axis] += side ? eta : -eta;
          if (!contains(nudged)) {
            Vec r = dom_.reduce(p);
            if (seen.insert(key_of(r)).second) out.push_back(r);
          }
          int j = 0;
          while (j < n && ++idx[j] >= coords[j].size()) idx[j++] = 0;
          if (j == n) break;
        }
      }
    }
  }
  return out;
}

std::vector<Vec> Neighborhood::grid(double spacing) const {
  const int n = dom_.dim;
  std::vector<Vec> out;
  std::set<std::vector<long long>> seen;
  for (const auto& b : boxes_) {
    std::vector<std::vector<double>> coords(n);
    for (int j = 0; j < n; ++j)
      coords[j] = lattice(b.lo[j], full_axis(b, j) ? b.lo[j] + 1.0 : b.hi[j], spacing, full_axis(b, j));
    std::vector<std::size_t> idx(n, 0);
    for (;;) {
      Vec p(n);
      for (int j = 0; j < n; ++j) p[j] = coords[j][idx[j]];
      Vec r = dom_.reduce(p);
      if (seen.insert(key_of(r)).second) out.push_back(r);
      int j = 0;
      while (j < n && ++idx[j] >= coords[j].size()) idx[j++] = 0;
      if (j == n) break;
    }
  }
  return out;
}

}  // namespace mcf
