#include "mcf/ode.hpp"

#include <cmath>

namespace mcf::ode {

namespace {
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;
}  // namespace

Result integrate(const Rhs& f, double t0, const Vec& y0, double t1, const Options& opt, const Observer& obs) {
  Result res;
  res.t = t0;
  res.y = y0;
  if (t1 == t0) return res;
  const double dir = t1 > t0 ? 1.0 : -1.0;
  const int n = int(y0.size());
  const int pd = opt.disp_dims < 0 ? n : opt.disp_dims;
  Vec y = y0, k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), tmp(n), ynew(n), err(n);
  double t = t0;
  double h = std::min(opt.h_init, std::abs(t1 - t0));
  f(t, y, k1);
  for (;;) {
    if (res.steps >= opt.max_steps) {
      res.status = Status::max_steps;
      break;
    }
    double remaining = std::abs(t1 - t);
    if (remaining <= 0) {
      res.status = Status::reached;
      break;
    }
    if (remaining < 4 * opt.h_min * std::max(1.0, std::abs(t1))) {
      // rounding leftover: finish with an Euler step
      y += dir * remaining * k1;
      t = t1;
      res.status = Status::reached;
      break;
    }
    h = std::min({h, opt.h_max, remaining});
    if (std::isfinite(opt.max_disp)) {
      double v = k1.head(pd).norm();
      if (v > 0) h = std::min(h, opt.max_disp / v);
    }
    if (h < opt.h_min) {
      res.status = Status::underflow;
      break;
    }
    const double s = dir * h;
    tmp = y + s * a21 * k1;
    f(t + s * c2, tmp, k2);
    tmp = y + s * (a31 * k1 + a32 * k2);
    f(t + s * c3, tmp, k3);
    tmp = y + s * (a41 * k1 + a42 * k2 + a43 * k3);
    f(t + s * c4, tmp, k4);
    tmp = y + s * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
    f(t + s * c5, tmp, k5);
    tmp = y + s * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
    f(t + s, tmp, k6);
    ynew = y + s * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    f(t + s, ynew, k7);
    err = s * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    double acc = 0;
    for (int i = 0; i < n; ++i) {
      double sc = opt.atol + opt.rtol * std::max(std::abs(y[i]), std::abs(ynew[i]));
      double r = err[i] / sc;
      acc += r * r;
    }
    double en = std::sqrt(acc / std::max(n, 1));
    if (!std::isfinite(en)) {
      h *= 0.2;
      continue;
    }
    if (en <= 1.0) {
      t = (h == remaining) ? t1 : t + s;
      y = ynew;
      k1 = k7;
      ++res.steps;
      double fac = en == 0 ? 5.0 : std::min(5.0, std::max(0.2, 0.9 * std::pow(en, -0.2)));
      h *= fac;
      if (obs) {
        Control c = obs(t, y);
        if (c == Control::stop) {
          res.status = Status::stopped;
          break;
        }
        if (c == Control::modified) f(t, y, k1);
      }
    } else {
      h *= std::max(0.2, 0.9 * std::pow(en, -0.2));
    }
  }
  res.t = t;
  res.y = y;
  return res;
}

}  // namespace mcf::ode
