#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <queue>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace levyvar::quad {

struct QuadResult {
  double value = 0.0;
  double error = 0.0;  // absolute error estimate
  bool converged = true;
};

inline constexpr double kDefaultRelTol = 1e-9;

namespace detail {

struct Panel {
  double a, b, value, error;
  bool operator<(const Panel& o) const { return error < o.error; }
};

// One G7/K15 panel. Boost returns |K - G| measured on [-1, 1].
template <typename F>
Panel gk15_panel(F& g, double a, double b) {
  double err = 0.0;
  const double v = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(g, a, b, 0, 0.0, &err);
  return {a, b, v, err * 0.5 * (b - a)};
}

}  // namespace detail

/// Globally adaptive Gauss-Kronrod over [a, b]: the panel with the largest
/// error estimate is bisected until the total error drops below
/// rel_tol * |value| (or abs_floor). Interior breakpoints seed the initial
/// panels so that kinks and jumps of the integrand sit on panel edges.
template <typename F>
QuadResult integrate(F&& g, double a, double b, std::vector<double> breakpoints = {},
                     double rel_tol = kDefaultRelTol, double abs_floor = 1e-15,
                     int max_panels = 4000) {
  QuadResult out;
  if (!(b > a)) return out;
  std::vector<double> edges{a};
  std::sort(breakpoints.begin(), breakpoints.end());
  for (double p : breakpoints) {
    if (p > a && p < b && p > edges.back()) edges.push_back(p);
  }
  edges.push_back(b);

  std::priority_queue<detail::Panel> heap;
  double total = 0.0;
  double total_err = 0.0;
  for (std::size_t k = 0; k + 1 < edges.size(); ++k) {
    auto p = detail::gk15_panel(g, edges[k], edges[k + 1]);
    total += p.value;
    total_err += p.error;
    heap.push(p);
  }
  int panels = static_cast<int>(heap.size());
  while (total_err > std::max(rel_tol * std::abs(total), abs_floor) && panels < max_panels) {
    const auto worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) {  // interval exhausted in floating point
      heap.push({worst.a, worst.b, worst.value, 0.0});
      total_err -= worst.error;
      continue;
    }
    const auto left = detail::gk15_panel(g, worst.a, mid);
    const auto right = detail::gk15_panel(g, mid, worst.b);
    total += left.value + right.value - worst.value;
    total_err += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
    ++panels;
  }
  // Re-sum from the panels to shed accumulated update error.
  double sum = 0.0;
  double err = 0.0;
  while (!heap.empty()) {
    sum += heap.top().value;
    err += heap.top().error;
    heap.pop();
  }
  out.value = sum;
  out.error = err;
  out.converged = std::isfinite(sum) && err <= std::max(rel_tol * std::abs(sum), abs_floor) * 10.0;
  return out;
}

/// E g(mean + sd * U) for U standard normal. A degenerate sd returns g(mean).
template <typename F>
QuadResult normal_expectation(F&& g, double mean, double sd, std::vector<double> breakpoints = {},
                              double rel_tol = kDefaultRelTol) {
  if (sd <= 0.0) return {g(mean), 0.0, true};
  const double inv = 1.0 / (sd * std::sqrt(2.0 * std::numbers::pi));
  auto weighted = [&](double x) {
    const double z = (x - mean) / sd;
    return g(x) * inv * std::exp(-0.5 * z * z);
  };
  breakpoints.push_back(mean);
  return integrate(weighted, mean - 14.0 * sd, mean + 14.0 * sd, std::move(breakpoints), rel_tol);
}

}  // namespace levyvar::quad
