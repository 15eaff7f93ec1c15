#pragma once

// Shared quadrature machinery: Gauss-Legendre panels with doubling,
// compensated accumulation for scalars and dense matrices.

#include <cmath>
#include <complex>
#include <functional>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace opcalc::quad {

using Complex = std::complex<double>;

class QuadratureFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GaussRule {
  std::vector<double> nodes;    // on (-1, 1)
  std::vector<double> weights;  // positive
};

// Nodes/weights by Newton iteration on the Legendre recurrence.
inline const GaussRule& gauss_legendre(int n) {
  static thread_local std::vector<GaussRule> cache(64);
  if (n < 1 || n >= static_cast<int>(cache.size()))
    throw std::invalid_argument("gauss_legendre: order out of range");
  GaussRule& rule = cache[n];
  if (!rule.nodes.empty()) return rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    rule.nodes[n - 1 - i] = x;
    rule.weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  return rule;
}

// Neumaier-compensated accumulator; works for Complex and for MatrixXcd.
template <class T>
struct Accumulator {
  T sum;
  T comp;
  bool init = false;

  void add(const T& v) {
    if (!init) {
      sum = v;
      comp = v;
      comp -= v;  // zero of the right shape
      init = true;
      return;
    }
    T t = sum + v;
    comp += (sum - t) + v;
    sum = t;
  }
  T value() const { return init ? T(sum + comp) : T{}; }
};

template <>
struct Accumulator<Eigen::MatrixXcd> {
  Eigen::MatrixXcd sum, comp;
  bool init = false;

  void add(const Eigen::MatrixXcd& v) {
    if (!init) {
      sum = v;
      comp = Eigen::MatrixXcd::Zero(v.rows(), v.cols());
      init = true;
      return;
    }
    Eigen::MatrixXcd t = sum + v;
    comp += (sum - t) + v;
    sum = t;
  }
  Eigen::MatrixXcd value() const { return init ? Eigen::MatrixXcd(sum + comp) : Eigen::MatrixXcd(); }
};

// Fixed-order panel sum of f over [a,b] split into `panels` equal pieces.
template <class T, class F>
T panel_integrate(const F& f, double a, double b, int panels, int order = 16) {
  const GaussRule& rule = gauss_legendre(order);
  Accumulator<T> acc;
  const double h = (b - a) / panels;
  for (int p = 0; p < panels; ++p) {
    const double lo = a + p * h;
    const double mid = lo + 0.5 * h;
    for (int i = 0; i < order; ++i) {
      T v = f(mid + 0.5 * h * rule.nodes[i]);
      v *= 0.5 * h * rule.weights[i];
      acc.add(v);
    }
  }
  return acc.value();
}

template <class T>
double generic_norm(const T& v) {
  if constexpr (std::is_same_v<T, Complex>)
    return std::abs(v);
  else
    return v.norm();
}

struct AdaptiveResult {
  double err_estimate = 0;
  int panels = 0;
  int doublings = 0;
};

// Panel doubling until two successive refinements agree to rel_tol.
template <class T, class F>
T adaptive_panels(const F& f, double a, double b, double rel_tol, AdaptiveResult* info = nullptr,
                  int start_panels = 8, int max_doublings = 12, int order = 16) {
  int panels = start_panels;
  T prev = panel_integrate<T>(f, a, b, panels, order);
  for (int d = 0; d <= max_doublings; ++d) {
    panels *= 2;
    T cur = panel_integrate<T>(f, a, b, panels, order);
    double diff = generic_norm<T>(static_cast<T>(cur - prev));
    double scale = 1.0 + generic_norm<T>(cur);
    if (diff <= rel_tol * scale) {
      if (info) {
        info->err_estimate = diff;
        info->panels = panels;
        info->doublings = d + 1;
      }
      return cur;
    }
    prev = cur;
  }
  throw QuadratureFailure("adaptive_panels: no Cauchy behavior after max doublings");
}

}  // namespace opcalc::quad
