#pragma once

// Numerical check that the per-step strength objective T(r) + w W(r) and the
// expected selection score a f(T(r)) + (1 - a) E[green fraction] peak at the
// same watermark strength r when w = (1 - a) / (2 a f'(T(r*))).

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <utility>
#include <vector>

#include "watersearch/errors.hpp"

namespace watersearch::theory {

inline constexpr double kEdge = 1e-6;

// Fritsch-Carlson monotone cubic through (x_i, y_i); x strictly increasing.
class MonotoneCubic {
 public:
  MonotoneCubic(std::vector<double> x, std::vector<double> y) : x_(std::move(x)), y_(std::move(y)) {
    const std::size_t n = x_.size();
    if (n < 2 || y_.size() != n) throw ConfigError("tabulated curve needs >= 2 matching (r, value) pairs");
    for (std::size_t i = 1; i < n; ++i)
      if (!(x_[i] > x_[i - 1])) throw ConfigError("tabulated r values must be strictly increasing");
    std::vector<double> d(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) d[i] = (y_[i + 1] - y_[i]) / (x_[i + 1] - x_[i]);
    m_.assign(n, 0.0);
    m_[0] = d[0];
    m_[n - 1] = d[n - 2];
    for (std::size_t i = 1; i + 1 < n; ++i) m_[i] = d[i - 1] * d[i] <= 0.0 ? 0.0 : 0.5 * (d[i - 1] + d[i]);
    for (std::size_t i = 0; i + 1 < n; ++i) {
      if (d[i] == 0.0) {
        m_[i] = m_[i + 1] = 0.0;
        continue;
      }
      const double a = m_[i] / d[i], b = m_[i + 1] / d[i], s = a * a + b * b;
      if (s > 9.0) {
        const double t = 3.0 / std::sqrt(s);
        m_[i] = t * a * d[i];
        m_[i + 1] = t * b * d[i];
      }
    }
  }

  double operator()(double x) const {
    if (x <= x_.front()) return y_.front() + m_.front() * (x - x_.front());
    if (x >= x_.back()) return y_.back() + m_.back() * (x - x_.back());
    const auto i = static_cast<std::size_t>(std::upper_bound(x_.begin(), x_.end(), x) - x_.begin()) - 1;
    const double h = x_[i + 1] - x_[i], t = (x - x_[i]) / h;
    const double t2 = t * t, t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * y_[i] + (t3 - 2 * t2 + t) * h * m_[i] + (-2 * t3 + 3 * t2) * y_[i + 1] +
           (t3 - t2) * h * m_[i + 1];
  }

 private:
  std::vector<double> x_, y_, m_;
};

struct TradeoffFamily {
  double green_mass = 0.5;  // P_G
  double alpha = 0.75;
  std::function<double(double)> quality;  // T(r), concave, T(0) = 0
  std::function<double(double)> f;        // similarity proxy, increasing
  std::function<double(double)> f_prime;  // derivative of f

  // T(r) = -c r^2 with f = scale * x.
  static TradeoffFamily quadratic(double c, double green_mass, double alpha, double f_scale = 1.0) {
    if (!(c > 0.0)) throw ConfigError("quadratic curvature c must be > 0");
    if (!(f_scale > 0.0)) throw ConfigError("f must be strictly increasing");
    return {green_mass, alpha, [c](double r) { return -c * r * r; }, [f_scale](double x) { return f_scale * x; },
            [f_scale](double) { return f_scale; }};
  }

  static TradeoffFamily tabulated(std::vector<double> r, std::vector<double> value, double green_mass, double alpha) {
    MonotoneCubic curve(std::move(r), std::move(value));
    return {green_mass, alpha, curve, [](double x) { return x; }, [](double) { return 1.0; }};
  }
};

// W(r) = 2 r (1 - P_G).
inline double watermark_effectiveness(double r, double green_mass) { return 2.0 * r * (1.0 - green_mass); }

// P_G + r (1 - P_G).
inline double perturbed_green_mass(double r, double green_mass) { return green_mass + r * (1.0 - green_mass); }

inline double micro_objective(double r, const TradeoffFamily& fam, double omega) {
  return fam.quality(r) + omega * watermark_effectiveness(r, fam.green_mass);
}

inline double macro_objective(double r, const TradeoffFamily& fam) {
  return fam.alpha * fam.f(fam.quality(r)) + (1.0 - fam.alpha) * perturbed_green_mass(r, fam.green_mass);
}

inline double optimal_omega(double alpha, double fprime) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie strictly inside (0, 1)");
  if (!(fprime > 0.0)) throw DomainError("f' must be positive");
  return (1.0 - alpha) / (2.0 * alpha * fprime);
}

struct Maximizer {
  double r = 0.0;
  bool boundary = false;
  std::vector<double> grid_maxima;  // more than one entry means non-unique
};

// Dense grid over [kEdge, 1 - kEdge] followed by golden-section refinement
// in the bracketing cells.
inline Maximizer maximize(const std::function<double(double)>& g, std::size_t resolution) {
  const double lo = kEdge, hi = 1.0 - kEdge;
  const double step = (hi - lo) / static_cast<double>(resolution);
  std::vector<double> v(resolution + 1);
  for (std::size_t i = 0; i <= resolution; ++i) v[i] = g(lo + step * static_cast<double>(i));
  const double best = *std::max_element(v.begin(), v.end());
  const double tie_tol = 1e-13 * std::max(1.0, std::abs(best));

  Maximizer out;
  for (std::size_t i = 0; i <= resolution; ++i) {
    if (best - v[i] > tie_tol) continue;
    // Adjacent near-equal points straddle one peak; count them once.
    if (i > 0 && best - v[i - 1] <= tie_tol) continue;
    out.grid_maxima.push_back(lo + step * static_cast<double>(i));
  }
  const auto arg = static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
  if (arg == 0 || arg == resolution) {
    out.r = arg == 0 ? lo : hi;
    out.boundary = true;
    return out;
  }

  double a = lo + step * static_cast<double>(arg - 1);
  double b = lo + step * static_cast<double>(arg + 1);
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a), d = a + inv_phi * (b - a);
  double gc = g(c), gd = g(d);
  for (int it = 0; it < 200 && b - a > 1e-15; ++it) {
    if (gc >= gd) {
      b = d, d = c, gd = gc;
      c = b - inv_phi * (b - a), gc = g(c);
    } else {
      a = c, c = d, gc = gd;
      d = a + inv_phi * (b - a), gd = g(d);
    }
  }
  out.r = std::clamp(0.5 * (a + b), lo, hi);
  return out;
}

struct MaximizerCheck {
  double r_micro = 0.0;
  double r_macro = 0.0;
  double omega = 0.0;
  double gap = 0.0;
  bool boundary = false;
  bool unique = true;
  bool ok = false;
  std::vector<double> micro_maxima, macro_maxima;
};

inline MaximizerCheck verify_shared_maximizer(const TradeoffFamily& fam, std::size_t grid_resolution = 10000,
                                    double tol = 1e-6) {
  if (grid_resolution < 1000) throw ConfigError("grid resolution must be >= 1000");
  if (!(tol > 0.0)) throw ConfigError("tolerance must be > 0");
  if (!(fam.green_mass > 0.0 && fam.green_mass < 1.0)) throw ConfigError("P_G must lie in (0, 1)");
  MaximizerCheck out;
  const auto macro = maximize([&](double r) { return macro_objective(r, fam); }, grid_resolution);
  out.r_macro = macro.r;
  out.omega = optimal_omega(fam.alpha, fam.f_prime(fam.quality(macro.r)));
  const auto micro = maximize([&](double r) { return micro_objective(r, fam, out.omega); }, grid_resolution);
  out.r_micro = micro.r;
  out.gap = std::abs(out.r_micro - out.r_macro);
  out.boundary = macro.boundary || micro.boundary;
  out.micro_maxima = micro.grid_maxima;
  out.macro_maxima = macro.grid_maxima;
  out.unique = micro.grid_maxima.size() == 1 && macro.grid_maxima.size() == 1;
  out.ok = out.unique && out.gap < tol;
  return out;
}

}  // namespace watersearch::theory
