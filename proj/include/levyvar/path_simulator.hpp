#pragma once

// Increment simulation on a regular grid, by component:
//   increment_i = drift * delta + gauss_i + small_i + (ledgered jumps in ((i-1)delta, i delta])
// Jumps are simulated in continuous time (so one jump scenario serves every
// grid of the same horizon); Gaussian components are per-increment draws,
// refined across a dyadic ladder by Brownian bridge.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "levyvar/compensated_sum.hpp"
#include "levyvar/horizon.hpp"
#include "levyvar/levy_model.hpp"
#include "levyvar/rng.hpp"
#include "levyvar/test_functions.hpp"

namespace levyvar {

struct SamplingGrid {
  double delta = 1.0;
  std::size_t n_steps = 1;
  HorizonMode mode = HorizonMode::FixedHorizon;

  SamplingGrid() = default;
  SamplingGrid(double d, std::size_t n, HorizonMode m = HorizonMode::FixedHorizon) : delta(d), n_steps(n), mode(m) {
    if (!(delta > 0.0) || !std::isfinite(delta)) throw std::invalid_argument("grid: delta must be > 0");
    if (n_steps < 1) throw std::invalid_argument("grid: n_steps must be >= 1");
  }

  /// Grid with n = round(horizon / delta) steps.
  static SamplingGrid for_horizon(double horizon, double delta, HorizonMode m = HorizonMode::FixedHorizon) {
    const double steps = horizon / delta;
    const auto n = static_cast<std::size_t>(std::llround(steps));
    if (n < 1 || std::abs(steps - static_cast<double>(n)) > 1e-9 * std::max(1.0, steps))
      throw std::invalid_argument("grid: horizon is not a multiple of delta");
    return {delta, n, m};
  }

  [[nodiscard]] double horizon() const { return delta * static_cast<double>(n_steps); }

  /// [t / delta], snapping t that lie within 1e-9 relative of a grid point.
  [[nodiscard]] std::size_t steps_until(double t) const {
    if (t < 0.0) return 0;
    const double q = t / delta;
    auto k = static_cast<std::size_t>(std::floor(q + 1e-9 * std::max(1.0, q)));
    return std::min(k, n_steps);
  }

  bool operator==(const SamplingGrid&) const = default;
};

struct JumpRecord {
  double time = 0.0;
  double size = 0.0;
  bool operator==(const JumpRecord&) const = default;
};

enum class SmallJumpMode {
  GaussianApprox,  // jumps below epsilon replaced by a matched-variance Gaussian
  Truncate,        // jumps below epsilon dropped (alpha < 1 only)
};

struct SimulationOptions {
  SmallJumpMode small_jump_mode = SmallJumpMode::GaussianApprox;
  std::optional<double> epsilon;  // ledger threshold for power-law jumps
};

struct PathSeed {
  std::uint64_t seed = 0;
  std::uint32_t replica = 0;
  bool operator==(const PathSeed&) const = default;
};

struct SeedRecord {
  PathSeed jumps;     // seeds the jump scenario and small-jump component
  PathSeed gaussian;  // seeds the Brownian component
  bool operator==(const SeedRecord&) const = default;
};

struct IncrementPath {
  SamplingGrid grid;
  JumpMeasureSpec jump_measure;
  double sigma = 0.0;
  double drift_rate = 0.0;  // drift per unit time after compensation
  double epsilon = 0.0;     // ledger threshold (0: every jump is ledgered)
  double small_jump_sd = 0.0;  // per unit time
  std::vector<double> increments;
  std::vector<double> gauss_part;
  std::vector<double> small_jump_part;
  std::vector<JumpRecord> big_jumps;  // sorted by time
  SeedRecord seed;
  int level = 0;  // refinement level within a ladder

  [[nodiscard]] std::size_t size() const { return increments.size(); }

  /// X at the horizon (compensated summation).
  [[nodiscard]] double endpoint() const {
    CompensatedSum<double> s;
    for (double x : increments) s += x;
    return s.value();
  }

  /// Per-increment sum of ledgered jumps.
  [[nodiscard]] std::vector<double> jump_part() const {
    std::vector<double> out(grid.n_steps, 0.0);
    for (const auto& j : big_jumps) out[bin_of(j.time)] += j.size;
    return out;
  }

  /// Index of the increment ((i-1)delta, i delta] that contains time s > 0.
  [[nodiscard]] std::size_t bin_of(double s) const {
    const double q = s / grid.delta;
    auto i = static_cast<std::size_t>(std::ceil(q));
    i = i == 0 ? 0 : i - 1;
    return std::min(i, grid.n_steps - 1);
  }

  /// Largest |increment - (drift + gauss + small + jumps)| over the path.
  [[nodiscard]] double decomposition_residual() const {
    const auto jp = jump_part();
    double worst = 0.0;
    for (std::size_t i = 0; i < increments.size(); ++i) {
      const double rebuilt = drift_rate * grid.delta + gauss_part[i] + small_jump_part[i] + jp[i];
      worst = std::max(worst, std::abs(increments[i] - rebuilt));
    }
    return worst;
  }
};

// ---------------------------------------------------------------------------

namespace detail {

struct JumpScheme {
  double drift_rate = 0.0;
  double epsilon = 0.0;
  double small_sd = 0.0;  // per unit time
  double big_rate = 0.0;  // intensity of ledgered jumps
};

inline double default_epsilon(const PowerLawSmallJumps& pl) {
  // Largest eps with sigma(eps) / eps >= 10, where sigma(eps)^2 = k eps^(2 - alpha).
  const double k = power_law_small_moment(pl, 1.0, 2.0) / std::pow(std::min(1.0, pl.cutoff), 2.0 - pl.alpha);
  const double eps = std::pow(std::sqrt(k) / 10.0, 2.0 / pl.alpha);
  return std::min(eps, pl.cutoff);
}

inline JumpScheme jump_scheme(const LevyCharacteristics& ch, const SimulationOptions& opt) {
  JumpScheme s;
  const auto& jm = ch.jump_measure();
  std::visit(overloaded{
                 [&](const NoJumps&) { s.drift_rate = ch.drift(); },
                 [&](const CompoundPoisson& cp) {
                   s.drift_rate = ch.drift() - compensator_mean(jm);
                   s.big_rate = cp.intensity;
                 },
                 [&](const PowerLawSmallJumps& pl) {
                   const double eps = opt.epsilon.value_or(default_epsilon(pl));
                   if (!(eps > 0.0)) throw std::invalid_argument("simulation: epsilon must be > 0");
                   s.epsilon = std::min(eps, pl.cutoff);
                   const double small_var = power_law_small_moment(pl, s.epsilon, 2.0);
                   if (opt.small_jump_mode == SmallJumpMode::GaussianApprox) {
                     const double ratio = std::sqrt(small_var) / s.epsilon;
                     if (ratio < 5.0)
                       throw std::invalid_argument("simulation: small-jump Gaussian approximation invalid, sigma(eps)/eps = " +
                                                   std::to_string(ratio) + " < 5; decrease epsilon");
                     s.small_sd = std::sqrt(small_var);
                   } else if (pl.alpha >= 1.0) {
                     throw std::invalid_argument("simulation: truncation mode requires alpha < 1");
                   }
                   s.drift_rate = ch.drift() - compensator_mean(jm, s.epsilon);
                   s.big_rate = tail_mass(jm, s.epsilon);
                 },
             },
             jm);
  return s;
}

inline double draw_jump_size(const JumpMeasureSpec& jm, double eps, RandomStream& rs) {
  return std::visit(
      overloaded{
          [](const NoJumps&) { return 0.0; },
          [&](const CompoundPoisson& cp) {
            return std::visit(overloaded{
                                  [&](const PointMasses& pm) {
                                    const double u = rs.uniform();
                                    double acc = 0.0;
                                    for (const auto& [v, w] : pm.atoms) {
                                      acc += w;
                                      if (u < acc) return v;
                                    }
                                    return pm.atoms.back().first;
                                  },
                                  [&](const GaussianLaw& g) { return g.mean + g.sd * rs.normal(); },
                                  [&](const UniformLaw& un) { return un.lo + (un.hi - un.lo) * rs.uniform(); },
                              },
                              cp.law);
          },
          [&](const PowerLawSmallJumps& pl) {
            // Inverse CDF of x^(-1-alpha) restricted to [eps, cutoff].
            const double a = pl.alpha;
            const double lo = std::pow(eps, -a);
            const double hi = std::pow(pl.cutoff, -a);
            const double mag = std::pow(lo - rs.uniform() * (lo - hi), -1.0 / a);
            if (!pl.symmetric) return mag;
            return rs.uniform() < 0.5 ? -mag : mag;
          },
      },
      jm);
}

inline std::vector<JumpRecord> draw_jumps(const LevyCharacteristics& ch, const JumpScheme& s, double horizon,
                                          const PathSeed& seed) {
  std::vector<JumpRecord> out;
  if (!(s.big_rate > 0.0)) return out;
  RandomStream times(address(seed.seed, seed.replica, StreamTag::JumpTimes));
  RandomStream sizes(address(seed.seed, seed.replica, StreamTag::JumpSizes));
  double t = times.exponential(s.big_rate);
  while (t <= horizon) {
    out.push_back({t, draw_jump_size(ch.jump_measure(), s.epsilon, sizes)});
    t += times.exponential(s.big_rate);
  }
  return out;
}

inline void assemble(IncrementPath& p) {
  const auto jp = p.jump_part();
  const double drift = p.drift_rate * p.grid.delta;
  p.increments.resize(p.grid.n_steps);
  for (std::size_t i = 0; i < p.grid.n_steps; ++i)
    p.increments[i] = drift + p.gauss_part[i] + p.small_jump_part[i] + jp[i];
}

inline void fill_normals(std::vector<double>& out, std::size_t n, double sd, StreamAddress addr) {
  out.assign(n, 0.0);
  if (!(sd > 0.0)) return;
  RandomStream rs(addr);
  for (auto& x : out) x = sd * rs.normal();
}

}  // namespace detail

/// Draw one path. Exact in law for the Gaussian, drift and compound Poisson
/// components; power-law jumps below epsilon are replaced by a Gaussian of
/// matching variance (or dropped in truncation mode).
inline IncrementPath sample_path(const LevyCharacteristics& ch, const SamplingGrid& grid, const PathSeed& seed,
                                 const SimulationOptions& opt = {}) {
  const auto scheme = detail::jump_scheme(ch, opt);
  IncrementPath p;
  p.grid = grid;
  p.jump_measure = ch.jump_measure();
  p.sigma = ch.sigma();
  p.drift_rate = scheme.drift_rate;
  p.epsilon = scheme.epsilon;
  p.small_jump_sd = scheme.small_sd;
  p.seed = {seed, seed};
  const double sqrt_dt = std::sqrt(grid.delta);
  detail::fill_normals(p.gauss_part, grid.n_steps, p.sigma * sqrt_dt,
                       address(seed.seed, seed.replica, StreamTag::Gaussian));
  detail::fill_normals(p.small_jump_part, grid.n_steps, scheme.small_sd * sqrt_dt,
                       address(seed.seed, seed.replica, StreamTag::SmallJumps));
  p.big_jumps = detail::draw_jumps(ch, scheme, grid.horizon(), seed);
  detail::assemble(p);
  return p;
}

/// Build a path with a prescribed jump ledger (a frozen jump scenario).
/// The small-jump component is zero; only models whose jumps are all
/// ledgered (no jumps or compound Poisson) are accepted.
inline IncrementPath path_with_jumps(const LevyCharacteristics& ch, const SamplingGrid& grid,
                                     std::vector<JumpRecord> jumps, const PathSeed& gaussian_seed) {
  if (std::holds_alternative<PowerLawSmallJumps>(ch.jump_measure()))
    throw std::invalid_argument("path_with_jumps: power-law models have unledgered small jumps");
  if (!ch.has_jumps() && !jumps.empty()) throw std::invalid_argument("path_with_jumps: model has no jumps");
  std::sort(jumps.begin(), jumps.end(), [](const auto& a, const auto& b) { return a.time < b.time; });
  for (const auto& j : jumps)
    if (!(j.time > 0.0 && j.time <= grid.horizon()) || j.size == 0.0)
      throw std::invalid_argument("path_with_jumps: jump outside (0, T] or of zero size");
  const auto scheme = detail::jump_scheme(ch, {});
  IncrementPath p;
  p.grid = grid;
  p.jump_measure = ch.jump_measure();
  p.sigma = ch.sigma();
  p.drift_rate = scheme.drift_rate;
  p.seed = {gaussian_seed, gaussian_seed};
  detail::fill_normals(p.gauss_part, grid.n_steps, p.sigma * std::sqrt(grid.delta),
                       address(gaussian_seed.seed, gaussian_seed.replica, StreamTag::Gaussian));
  p.small_jump_part.assign(grid.n_steps, 0.0);
  p.big_jumps = std::move(jumps);
  detail::assemble(p);
  return p;
}

/// Same jumps and small-jump component, fresh Brownian component.
inline IncrementPath resample_gaussian(const IncrementPath& path, const LevyCharacteristics& ch,
                                       const SamplingGrid& grid, const PathSeed& seed2) {
  if (!(path.grid == grid)) throw std::invalid_argument("resample_gaussian: grid mismatch");
  if (path.sigma != ch.sigma() || path.jump_measure.index() != ch.jump_measure().index())
    throw std::invalid_argument("resample_gaussian: characteristics mismatch");
  if (path.level != 0) throw std::invalid_argument("resample_gaussian: ladder levels cannot be resampled");
  IncrementPath out = path;
  out.seed.gaussian = seed2;
  detail::fill_normals(out.gauss_part, grid.n_steps, out.sigma * std::sqrt(grid.delta),
                       address(seed2.seed, seed2.replica, StreamTag::Gaussian));
  detail::assemble(out);
  return out;
}

/// Coupled dyadic ladder: level 0 is sampled on `coarse`, level k + 1 splits
/// every increment of level k in two by Brownian bridge. All levels share one
/// jump scenario, so pairwise sums of level k + 1 reproduce level k.
inline std::vector<IncrementPath> sample_ladder(const LevyCharacteristics& ch, const SamplingGrid& coarse,
                                                int levels, const PathSeed& seed, const SimulationOptions& opt = {}) {
  if (levels < 1) throw std::invalid_argument("sample_ladder: need at least one level");
  std::vector<IncrementPath> ladder;
  ladder.reserve(static_cast<std::size_t>(levels));
  ladder.push_back(sample_path(ch, coarse, seed, opt));
  for (int k = 1; k < levels; ++k) {
    const auto& prev = ladder.back();
    IncrementPath p;
    p.grid = SamplingGrid(prev.grid.delta / 2.0, prev.grid.n_steps * 2, prev.grid.mode);
    p.jump_measure = prev.jump_measure;
    p.sigma = prev.sigma;
    p.drift_rate = prev.drift_rate;
    p.epsilon = prev.epsilon;
    p.small_jump_sd = prev.small_jump_sd;
    p.big_jumps = prev.big_jumps;
    p.seed = prev.seed;
    p.level = k;
    auto split = [&](const std::vector<double>& coarse_part, double sd_rate, StreamTag tag, std::vector<double>& out) {
      out.assign(p.grid.n_steps, 0.0);
      if (!(sd_rate > 0.0)) return;
      const double half_sd = 0.5 * sd_rate * std::sqrt(prev.grid.delta);
      RandomStream rs(address(seed.seed, seed.replica, tag, static_cast<std::uint32_t>(k)));
      for (std::size_t i = 0; i < coarse_part.size(); ++i) {
        const double mid = 0.5 * coarse_part[i];
        const double d = half_sd * rs.normal();
        out[2 * i] = mid + d;
        out[2 * i + 1] = coarse_part[i] - out[2 * i];
      }
    };
    split(prev.gauss_part, prev.sigma, StreamTag::Bridge, p.gauss_part);
    split(prev.small_jump_part, prev.small_jump_sd, StreamTag::SmallJumpBridge, p.small_jump_part);
    detail::assemble(p);
    ladder.push_back(std::move(p));
  }
  return ladder;
}

// ---------------------------------------------------------------------------

struct JumpFunctionalValue {
  double value = 0.0;
  double neglected_bound = 0.0;  // bound on the unledgered small-jump contribution
};

/// sum_{ledgered jumps s <= t} f(Delta X_s), plus a bound on what the jumps
/// below the ledger threshold could add.
inline JumpFunctionalValue jump_functional(const IncrementPath& path, const TestFunction& f, double t) {
  if (!in_I(path.jump_measure, f.class_r()))
    throw std::invalid_argument("jump_functional: r = " + std::to_string(f.class_r()) + " is not in I");
  JumpFunctionalValue out;
  CompensatedSum<double> s;
  for (const auto& j : path.big_jumps) {
    if (j.time > t) break;
    s += f.eval(j.size);
  }
  out.value = s.value();
  if (const auto* pl = std::get_if<PowerLawSmallJumps>(&path.jump_measure); pl && path.epsilon > 0.0) {
    double c = 0.0;
    for (int k = 1; k <= 64; ++k) {
      const double x = path.epsilon * k / 64.0;
      c = std::max({c, std::abs(f.eval(x)) / std::pow(x, f.class_r()), std::abs(f.eval(-x)) / std::pow(x, f.class_r())});
    }
    out.neglected_bound = c * power_law_small_moment(*pl, path.epsilon, f.class_r()) * std::max(t, 0.0);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Binary dump. Little-endian layout:
//   char[4] "LVIP", u32 version (1),
//   f64 delta, u64 n_steps, u32 horizon_mode,
//   u64 jump_seed, u32 jump_replica, u64 gauss_seed, u32 gauss_replica,
//   f64 sigma, f64 drift_rate, f64 epsilon, f64 small_jump_sd,
//   f64[n] increments, f64[n] gauss_part, f64[n] small_jump_part,
//   u64 n_jumps, then n_jumps x (f64 time, f64 size).

namespace detail {
static_assert(std::endian::native == std::endian::little, "binary dump assumes a little-endian host");

template <typename T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <typename T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw std::runtime_error("path dump: truncated input");
  return v;
}
}  // namespace detail

inline void write_binary(std::ostream& os, const IncrementPath& p) {
  os.write("LVIP", 4);
  detail::put<std::uint32_t>(os, 1);
  detail::put<double>(os, p.grid.delta);
  detail::put<std::uint64_t>(os, p.grid.n_steps);
  detail::put<std::uint32_t>(os, p.grid.mode == HorizonMode::FixedHorizon ? 0u : 1u);
  detail::put<std::uint64_t>(os, p.seed.jumps.seed);
  detail::put<std::uint32_t>(os, p.seed.jumps.replica);
  detail::put<std::uint64_t>(os, p.seed.gaussian.seed);
  detail::put<std::uint32_t>(os, p.seed.gaussian.replica);
  detail::put<double>(os, p.sigma);
  detail::put<double>(os, p.drift_rate);
  detail::put<double>(os, p.epsilon);
  detail::put<double>(os, p.small_jump_sd);
  for (const auto* arr : {&p.increments, &p.gauss_part, &p.small_jump_part})
    os.write(reinterpret_cast<const char*>(arr->data()), static_cast<std::streamsize>(arr->size() * sizeof(double)));
  detail::put<std::uint64_t>(os, p.big_jumps.size());
  for (const auto& j : p.big_jumps) {
    detail::put<double>(os, j.time);
    detail::put<double>(os, j.size);
  }
}

/// Reads a dump back. The jump measure is not part of the layout and is left
/// as NoJumps.
inline IncrementPath read_binary(std::istream& is) {
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "LVIP", 4) != 0) throw std::runtime_error("path dump: bad magic");
  if (detail::get<std::uint32_t>(is) != 1) throw std::runtime_error("path dump: unsupported version");
  IncrementPath p;
  const double delta = detail::get<double>(is);
  const auto n = detail::get<std::uint64_t>(is);
  const auto mode = detail::get<std::uint32_t>(is);
  p.grid = SamplingGrid(delta, n, mode == 0 ? HorizonMode::FixedHorizon : HorizonMode::GrowingHorizon);
  p.seed.jumps.seed = detail::get<std::uint64_t>(is);
  p.seed.jumps.replica = detail::get<std::uint32_t>(is);
  p.seed.gaussian.seed = detail::get<std::uint64_t>(is);
  p.seed.gaussian.replica = detail::get<std::uint32_t>(is);
  p.sigma = detail::get<double>(is);
  p.drift_rate = detail::get<double>(is);
  p.epsilon = detail::get<double>(is);
  p.small_jump_sd = detail::get<double>(is);
  for (auto* arr : {&p.increments, &p.gauss_part, &p.small_jump_part}) {
    arr->resize(n);
    is.read(reinterpret_cast<char*>(arr->data()), static_cast<std::streamsize>(n * sizeof(double)));
    if (!is) throw std::runtime_error("path dump: truncated input");
  }
  const auto nj = detail::get<std::uint64_t>(is);
  p.big_jumps.resize(nj);
  for (auto& j : p.big_jumps) {
    j.time = detail::get<double>(is);
    j.size = detail::get<double>(is);
  }
  return p;
}

}  // namespace levyvar
