#pragma once

// Variation functionals of a sampled path: partial-sum processes
// V^n(f), V'^n(f), their [nt]-indexed versions, realized r-variation,
// piecewise-constant discretization and the center-and-scale transform.

#include <cmath>
#include <functional>
#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "levyvar/compensated_sum.hpp"
#include "levyvar/path_simulator.hpp"
#include "levyvar/regime_oracle.hpp"
#include "levyvar/test_functions.hpp"

namespace levyvar {

enum class SeriesKind { Vn, VnPrime, VnBar, VnBarPrime, PiN, PiNTrunc, Discretized };

inline const char* to_string(SeriesKind k) {
  switch (k) {
    case SeriesKind::Vn: return "Vn";
    case SeriesKind::VnPrime: return "VnPrime";
    case SeriesKind::VnBar: return "VnBar";
    case SeriesKind::VnBarPrime: return "VnBarPrime";
    case SeriesKind::PiN: return "PiN";
    case SeriesKind::PiNTrunc: return "PiNTrunc";
    case SeriesKind::Discretized: return "Discretized";
  }
  return "?";
}

struct SeriesNormalization {
  bool applied = false;
  std::string label;       // verdict label
  double scale = 1.0;      // a_n
  double clt_scale = 1.0;  // u_n
  std::string centering;   // centering kind
};

/// values[i - 1] is the functional at times[i - 1]; the value before the
/// first grid time is 0.
struct VariationSeries {
  std::vector<double> times;
  std::vector<double> values;
  SeriesKind kind = SeriesKind::Vn;
  std::string f_used;
  double delta = 1.0;
  std::size_t n = 0;  // index rate of bar kinds: times are i / n
  SeriesNormalization normalization;

  [[nodiscard]] bool bar() const { return kind == SeriesKind::VnBar || kind == SeriesKind::VnBarPrime; }
  [[nodiscard]] std::size_t size() const { return values.size(); }

  /// Number of summands at time t: [t / delta], or [n t] for bar kinds.
  [[nodiscard]] std::size_t steps_until(double t) const {
    if (t < 0.0) return 0;
    const double q = bar() ? t * static_cast<double>(n) : t / delta;
    const auto k = static_cast<std::size_t>(std::floor(q + 1e-9 * std::max(1.0, q)));
    return std::min(k, values.size());
  }

  [[nodiscard]] double value_at(double t) const {
    const std::size_t k = steps_until(t);
    return k == 0 ? 0.0 : values[k - 1];
  }

  [[nodiscard]] double terminal() const { return values.empty() ? 0.0 : values.back(); }
  [[nodiscard]] double terminal_time() const { return times.empty() ? 0.0 : times.back(); }
};

namespace detail {

template <typename Map>
VariationSeries partial_sums(const IncrementPath& path, SeriesKind kind, std::string name, Map&& map, bool bar_index,
                             std::size_t n) {
  VariationSeries s;
  s.kind = kind;
  s.f_used = std::move(name);
  s.delta = path.grid.delta;
  s.n = bar_index ? n : path.grid.n_steps;
  const std::size_t len = path.increments.size();
  s.times.resize(len);
  s.values.resize(len);
  CompensatedSum<double> acc;
  for (std::size_t i = 0; i < len; ++i) {
    acc += map(path.increments[i]);
    s.values[i] = acc.value();
    s.times[i] = bar_index ? static_cast<double>(i + 1) / static_cast<double>(n)
                           : static_cast<double>(i + 1) * path.grid.delta;
  }
  return s;
}

}  // namespace detail

/// V^n(f)_t = sum_{i <= [t/delta]} f(increment_i).
inline VariationSeries v_n(const IncrementPath& path, const TestFunction& f) {
  return detail::partial_sums(
      path, SeriesKind::Vn, f.name(), [&f](double x) { return f.eval(x); }, false, 0);
}

/// V'^n(f)_t = sum_{i <= [t/delta]} f(increment_i / sqrt(delta)).
inline VariationSeries v_prime_n(const IncrementPath& path, const TestFunction& f) {
  const double inv = 1.0 / std::sqrt(path.grid.delta);
  return detail::partial_sums(
      path, SeriesKind::VnPrime, f.name(), [&f, inv](double x) { return f.eval(x * inv); }, false, 0);
}

/// Sum indexed by [n t]; n defaults to the number of increments, so that
/// t = 1 is the end of the path.
inline VariationSeries v_bar_n(const IncrementPath& path, const TestFunction& f, std::size_t n = 0) {
  if (n == 0) n = path.grid.n_steps;
  return detail::partial_sums(
      path, SeriesKind::VnBar, f.name(), [&f](double x) { return f.eval(x); }, true, n);
}

inline VariationSeries v_bar_prime_n(const IncrementPath& path, const TestFunction& f, std::size_t n = 0) {
  if (n == 0) n = path.grid.n_steps;
  const double inv = 1.0 / std::sqrt(path.grid.delta);
  return detail::partial_sums(
      path, SeriesKind::VnBarPrime, f.name(), [&f, inv](double x) { return f.eval(x * inv); }, true, n);
}

/// Realized r-variation.
inline VariationSeries pi_n(const IncrementPath& path, double r) {
  if (!(r > 0.0)) throw std::invalid_argument("pi_n: r must be > 0");
  auto s = v_n(path, TestFunction(PowerAbs{r}));
  s.kind = SeriesKind::PiN;
  return s;
}

/// Realized r-variation over increments with |increment| <= a (a may be +inf).
inline VariationSeries pi_n_trunc(const IncrementPath& path, double r, double a) {
  if (!(r > 0.0)) throw std::invalid_argument("pi_n_trunc: r must be > 0");
  if (!(a > 0.0)) throw std::invalid_argument("pi_n_trunc: a must be > 0");
  auto s = std::isinf(a) ? v_n(path, TestFunction(PowerAbs{r})) : v_n(path, TestFunction(TruncatedPower{r, a}));
  s.kind = SeriesKind::PiNTrunc;
  return s;
}

/// Y^(n)_t = Y_{delta [t / delta]} on the grid times of `grid`.
inline VariationSeries discretize(const std::function<double(double)>& process, const SamplingGrid& grid,
                                  std::string name = "process") {
  VariationSeries s;
  s.kind = SeriesKind::Discretized;
  s.f_used = std::move(name);
  s.delta = grid.delta;
  s.n = grid.n_steps;
  s.times.resize(grid.n_steps);
  s.values.resize(grid.n_steps);
  for (std::size_t i = 0; i < grid.n_steps; ++i) {
    s.times[i] = static_cast<double>(i + 1) * grid.delta;
    s.values[i] = process(s.times[i]);
  }
  return s;
}

/// Discretization of f * mu_t + slope * t built from the path's jump ledger.
inline VariationSeries discretized_jump_functional(const IncrementPath& path, const TestFunction& f,
                                                   double slope = 0.0) {
  const auto& grid = path.grid;
  VariationSeries s;
  s.kind = SeriesKind::Discretized;
  s.f_used = f.name() + "*mu";
  s.delta = grid.delta;
  s.n = grid.n_steps;
  s.times.resize(grid.n_steps);
  s.values.resize(grid.n_steps);
  std::vector<double> per_bin(grid.n_steps, 0.0);
  for (const auto& j : path.big_jumps) per_bin[path.bin_of(j.time)] += f.eval(j.size);
  CompensatedSum<double> acc;
  for (std::size_t i = 0; i < grid.n_steps; ++i) {
    acc += per_bin[i];
    s.times[i] = static_cast<double>(i + 1) * grid.delta;
    s.values[i] = acc.value() + slope * s.times[i];
  }
  return s;
}

/// External quantities a verdict's normalization may need.
struct CenteringInputs {
  std::optional<double> h_center;  // H_delta(centering target), scaled if the centering asks for it
  std::optional<double> h_scale;   // H_delta(scale target) for data-dependent normalization
  std::optional<double> gamma;     // Gamma_delta(scale target)
  std::optional<VariationSeries> jump_process;  // discretized f * mu (without drift slope)
};

/// u_n * (a_n * series_t - C_t) at every grid time.
inline VariationSeries center_and_scale(const VariationSeries& series, const RegimeVerdict& v,
                                        const CenteringInputs& in = {}) {
  if (!v.covered()) throw std::invalid_argument("center_and_scale: verdict is NotCovered (" + v.reason + ")");
  const double delta = series.delta;
  const double n = static_cast<double>(series.n);
  const bool growing = v.query.mode == HorizonMode::GrowingHorizon;

  double a = std::pow(delta, v.normalization_exponent) * std::pow(n, v.normalization_n_exponent);
  double u = std::pow(delta, v.clt_delta_exponent) * std::pow(n, v.clt_n_exponent);
  if (v.scale_kind == ScaleKind::HRatio) {
    if (!in.h_scale) throw std::invalid_argument("center_and_scale: verdict " + v.label + " needs H_delta(scale target)");
    a = delta / *in.h_scale;
  } else if (v.scale_kind == ScaleKind::GammaRoot) {
    if (!in.gamma) throw std::invalid_argument("center_and_scale: verdict " + v.label + " needs Gamma_delta");
    if (!(*in.gamma > 0.0)) throw std::invalid_argument("center_and_scale: Gamma_delta must be > 0");
    u = growing ? 1.0 / std::sqrt(n * *in.gamma) : std::sqrt(delta / *in.gamma);
  }

  const auto& c = v.centering;
  double slope = 0.0;  // C_t = slope * t for the non-random centerings
  switch (c.kind) {
    case CenteringKind::None:
      break;
    case CenteringKind::HCenter:
      if (!in.h_center)
        throw std::invalid_argument("center_and_scale: verdict " + v.label + " needs an H_delta centering estimate");
      slope = std::pow(n, c.n_exponent) * std::pow(delta, c.delta_exponent) * *in.h_center;
      break;
    case CenteringKind::DeterministicSlope:
    case CenteringKind::GaussianExpectation:
      slope = c.value;
      break;
    case CenteringKind::JumpFunctional:
      if (!in.jump_process)
        throw std::invalid_argument("center_and_scale: verdict " + v.label + " needs the discretized jump functional");
      if (in.jump_process->size() != series.size())
        throw std::invalid_argument("center_and_scale: jump functional length mismatch");
      slope = c.extra_slope;
      break;
  }

  VariationSeries out = series;
  for (std::size_t i = 0; i < out.size(); ++i) {
    double centering = slope * series.times[i];
    if (c.kind == CenteringKind::JumpFunctional) centering += in.jump_process->values[i];
    out.values[i] = u * (a * series.values[i] - centering);
  }
  out.normalization = {true, v.label, a, u, to_string(c.kind)};
  return out;
}

/// sup over grid times of |series_t - slope * t|.
inline double sup_deviation(const VariationSeries& s, double slope) {
  double worst = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) worst = std::max(worst, std::abs(s.values[i] - slope * s.times[i]));
  return worst;
}

/// Two-column CSV: time,value.
inline void write_csv(std::ostream& os, const VariationSeries& s) {
  os << "time,value\n" << std::setprecision(17);
  for (std::size_t i = 0; i < s.size(); ++i) os << s.times[i] << ',' << s.values[i] << '\n';
}

}  // namespace levyvar
