#pragma once

// Levy characteristic triple (b, c, F), the supported jump-measure families
// and the quantities that can be computed from them analytically.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "levyvar/quadrature.hpp"

namespace levyvar {

inline double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }
inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

/// phi_r(x) = 1 ^ |x|^r, with phi_0 = 1.
inline double phi_r(double x, double r) {
  if (r < 0.0) throw std::invalid_argument("phi_r: r must be >= 0");
  if (r == 0.0) return 1.0;
  const double ax = std::abs(x);
  if (ax >= 1.0) return 1.0;
  return std::pow(ax, r);
}

/// mu_r = E|U|^r for U ~ N(0, 1).
inline double abs_normal_moment(double r) {
  if (r < 0.0) throw std::invalid_argument("abs_normal_moment: r must be >= 0");
  return std::pow(2.0, 0.5 * r) * std::tgamma(0.5 * (r + 1.0)) / std::sqrt(std::numbers::pi);
}

// ---------------------------------------------------------------------------
// Jump laws and jump measures

struct PointMasses {
  std::vector<std::pair<double, double>> atoms;  // (value, weight)
};
struct GaussianLaw {
  double mean = 0.0;
  double sd = 1.0;
};
struct UniformLaw {
  double lo = -1.0;
  double hi = 1.0;
};
using JumpLaw = std::variant<PointMasses, GaussianLaw, UniformLaw>;

struct NoJumps {};
struct CompoundPoisson {
  double intensity = 1.0;  // per unit time
  JumpLaw law;
};
/// Density scale * |x|^(-1-alpha) on 0 < |x| <= cutoff; positive side only
/// when not symmetric.
struct PowerLawSmallJumps {
  double alpha = 1.0;
  double scale = 1.0;
  double cutoff = 1.0;
  bool symmetric = true;
};
using JumpMeasureSpec = std::variant<NoJumps, CompoundPoisson, PowerLawSmallJumps>;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

inline void validate(const JumpLaw& law) {
  std::visit(overloaded{
                 [](const PointMasses& pm) {
                   if (pm.atoms.empty()) throw std::invalid_argument("jump_law: point masses list is empty");
                   double total = 0.0;
                   for (const auto& [v, w] : pm.atoms) {
                     if (!(w > 0.0)) throw std::invalid_argument("jump_law: weights must be positive");
                     if (v == 0.0) throw std::invalid_argument("jump_law: atom at 0 is not allowed");
                     if (!std::isfinite(v)) throw std::invalid_argument("jump_law: non-finite atom");
                     total += w;
                   }
                   if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument("jump_law: weights must sum to 1");
                 },
                 [](const GaussianLaw& g) {
                   if (!(g.sd > 0.0) || !std::isfinite(g.mean))
                     throw std::invalid_argument("jump_law: gaussian sd must be positive");
                 },
                 [](const UniformLaw& u) {
                   if (!(u.hi > u.lo)) throw std::invalid_argument("jump_law: uniform needs lo < hi");
                 },
             },
             law);
}

inline void validate(const JumpMeasureSpec& jm) {
  std::visit(overloaded{
                 [](const NoJumps&) {},
                 [](const CompoundPoisson& cp) {
                   if (!(cp.intensity > 0.0)) throw std::invalid_argument("jump_measure: intensity must be > 0");
                   validate(cp.law);
                 },
                 [](const PowerLawSmallJumps& pl) {
                   if (!(pl.alpha > 0.0 && pl.alpha < 2.0))
                     throw std::invalid_argument("jump_measure: alpha must lie in (0, 2)");
                   if (!(pl.scale > 0.0)) throw std::invalid_argument("jump_measure: scale must be > 0");
                   if (!(pl.cutoff > 0.0)) throw std::invalid_argument("jump_measure: cutoff must be > 0");
                 },
             },
             jm);
}

inline bool has_jumps(const JumpMeasureSpec& jm) { return !std::holds_alternative<NoJumps>(jm); }

/// The triple (b, c, F). Immutable once built.
class LevyCharacteristics {
 public:
  LevyCharacteristics(double drift_b, double gauss_var_c, JumpMeasureSpec jump_measure = NoJumps{})
      : b_(drift_b), c_(gauss_var_c), jm_(std::move(jump_measure)) {
    if (!std::isfinite(b_)) throw std::invalid_argument("drift_b must be finite");
    if (!(c_ >= 0.0) || !std::isfinite(c_)) throw std::invalid_argument("gauss_var_c must be >= 0");
    validate(jm_);
  }

  [[nodiscard]] double drift() const { return b_; }
  [[nodiscard]] double gauss_var() const { return c_; }
  [[nodiscard]] double sigma() const { return std::sqrt(c_); }
  [[nodiscard]] const JumpMeasureSpec& jump_measure() const { return jm_; }
  [[nodiscard]] bool has_jumps() const { return levyvar::has_jumps(jm_); }

 private:
  double b_;
  double c_;
  JumpMeasureSpec jm_;
};

// ---------------------------------------------------------------------------
// Index set I = {r >= 0 : F(phi_r) < inf}

struct IndexSetBound {
  double lower = 0.0;
  bool lower_included = true;
};

inline IndexSetBound index_set(const JumpMeasureSpec& jm) {
  if (const auto* pl = std::get_if<PowerLawSmallJumps>(&jm)) return {pl->alpha, false};
  return {0.0, true};
}

inline bool in_I(const JumpMeasureSpec& jm, double r) {
  if (r < 0.0) throw std::invalid_argument("in_I: r must be >= 0");
  const auto bound = index_set(jm);
  return bound.lower_included ? r >= bound.lower : r > bound.lower;
}

namespace detail {

// int_lo^hi x^(p - 1 - alpha) dx for 0 < lo <= hi.
inline double power_integral(double lo, double hi, double p, double alpha) {
  const double e = p - alpha;
  if (hi <= lo) return 0.0;
  if (std::abs(e) < 1e-14) return std::log(hi / lo);
  return (std::pow(hi, e) - std::pow(lo, e)) / e;
}

inline double truncated_gaussian_first_moment(double mean, double sd, double lo, double hi) {
  const double a = (lo - mean) / sd;
  const double b = (hi - mean) / sd;
  return mean * (normal_cdf(b) - normal_cdf(a)) + sd * (normal_pdf(a) - normal_pdf(b));
}

}  // namespace detail

/// int_{eps < |x| <= 1} x F(dx). Requires 1 in I when eps == 0.
inline double compensator_mean(const JumpMeasureSpec& jm, double eps = 0.0) {
  return std::visit(
      overloaded{
          [](const NoJumps&) { return 0.0; },
          [eps](const CompoundPoisson& cp) {
            const double lam = cp.intensity;
            return std::visit(overloaded{
                                  [&](const PointMasses& pm) {
                                    double s = 0.0;
                                    for (const auto& [v, w] : pm.atoms)
                                      if (std::abs(v) <= 1.0 && std::abs(v) > eps) s += w * v;
                                    return lam * s;
                                  },
                                  [&](const GaussianLaw& g) {
                                    double s = detail::truncated_gaussian_first_moment(g.mean, g.sd, -1.0, 1.0);
                                    if (eps > 0.0) s -= detail::truncated_gaussian_first_moment(g.mean, g.sd, -eps, eps);
                                    return lam * s;
                                  },
                                  [&](const UniformLaw& u) {
                                    auto part = [&](double a, double b) {
                                      a = std::max(a, u.lo);
                                      b = std::min(b, u.hi);
                                      return b > a ? 0.5 * (b * b - a * a) / (u.hi - u.lo) : 0.0;
                                    };
                                    return lam * (part(-1.0, -eps) + part(eps, 1.0));
                                  },
                              },
                              cp.law);
          },
          [eps](const PowerLawSmallJumps& pl) {
            if (pl.symmetric) return 0.0;
            const double hi = std::min(1.0, pl.cutoff);
            if (eps == 0.0) {
              if (pl.alpha >= 1.0) return std::numeric_limits<double>::infinity();
              return pl.scale * std::pow(hi, 1.0 - pl.alpha) / (1.0 - pl.alpha);
            }
            return pl.scale * detail::power_integral(eps, hi, 1.0, pl.alpha);
          },
      },
      jm);
}

/// Genuine drift b - int_{|x|<=1} x F(dx); empty when 1 is not in I.
inline std::optional<double> bar_drift(const LevyCharacteristics& ch) {
  if (!in_I(ch.jump_measure(), 1.0)) return std::nullopt;
  return ch.drift() - compensator_mean(ch.jump_measure());
}

// ---------------------------------------------------------------------------
// Integrals against F

enum class FStatus { Finite, Infinite, NotConverged };

struct FValue {
  double value = 0.0;
  FStatus status = FStatus::Finite;
  double error = 0.0;

  [[nodiscard]] bool finite() const { return status == FStatus::Finite; }
};

/// Description of the integrand's behavior at 0, used for the integrability
/// rule and the singularity-removing substitution.
struct NearZeroBehavior {
  double exponent = 0.0;   // |g(x)| <= C |x|^exponent near 0
  bool comparable = true;  // g(x) ~ |x|^exponent (so divergence is certain when exponent <= alpha)
};

/// int_{|x| > min_abs} g(x) F(dx).
template <typename G>
FValue integrate_jump_measure(const JumpMeasureSpec& jm, G&& g, NearZeroBehavior nz,
                              std::vector<double> breakpoints = {}, double min_abs = 0.0,
                              double rel_tol = quad::kDefaultRelTol) {
  auto keep = [min_abs](double x) { return std::abs(x) > min_abs; };
  auto from_quad = [](const quad::QuadResult& q, double factor) {
    FValue out{factor * q.value, q.converged ? FStatus::Finite : FStatus::NotConverged, factor * q.error};
    return out;
  };
  return std::visit(
      overloaded{
          [](const NoJumps&) { return FValue{}; },
          [&](const CompoundPoisson& cp) {
            const double lam = cp.intensity;
            return std::visit(
                overloaded{
                    [&](const PointMasses& pm) {
                      double s = 0.0;
                      for (const auto& [v, w] : pm.atoms)
                        if (keep(v)) s += w * g(v);
                      return FValue{lam * s, FStatus::Finite, 0.0};
                    },
                    [&](const GaussianLaw& law) {
                      auto bp = breakpoints;
                      if (min_abs > 0.0) {
                        bp.push_back(min_abs);
                        bp.push_back(-min_abs);
                      }
                      auto h = [&](double x) { return keep(x) ? g(x) : 0.0; };
                      return from_quad(quad::normal_expectation(h, law.mean, law.sd, bp, rel_tol), lam);
                    },
                    [&](const UniformLaw& u) {
                      auto bp = breakpoints;
                      bp.push_back(min_abs);
                      bp.push_back(-min_abs);
                      auto h = [&](double x) { return keep(x) ? g(x) : 0.0; };
                      return from_quad(quad::integrate(h, u.lo, u.hi, bp, rel_tol), lam / (u.hi - u.lo));
                    },
                },
                cp.law);
          },
          [&](const PowerLawSmallJumps& pl) {
            const double L = pl.cutoff;
            std::vector<double> pos_bp;
            for (double p : breakpoints)
              if (p > 0.0) pos_bp.push_back(p);
            std::vector<double> neg_bp;
            for (double p : breakpoints)
              if (p < 0.0) neg_bp.push_back(-p);

            auto one_side = [&](int sign, const std::vector<double>& bps) -> FValue {
              auto gs = [&](double x) { return g(sign * x); };
              if (min_abs > 0.0) {
                if (min_abs >= L) return FValue{};
                auto h = [&](double x) { return gs(x) * std::pow(x, -1.0 - pl.alpha); };
                return from_quad(quad::integrate(h, min_abs, L, bps, rel_tol), pl.scale);
              }
              const double r = nz.exponent;
              if (r <= pl.alpha) {
                if (nz.comparable) return FValue{std::numeric_limits<double>::infinity(), FStatus::Infinite, 0.0};
                auto h = [&](double x) { return gs(x) * std::pow(x, -1.0 - pl.alpha); };
                auto q = quad::integrate(h, 0.0, L, bps, rel_tol);
                return from_quad(q, pl.scale);
              }
              // x = u^(1/p), p = r - alpha: g(x) x^(-1-alpha) dx = g(x) x^(-r) du / p.
              const double p = r - pl.alpha;
              std::vector<double> ubp;
              for (double bpt : bps) ubp.push_back(std::pow(bpt, p));
              auto h = [&](double u) {
                if (u <= 0.0) return 0.0;
                // Small p sends x = u^(1/p) below the normal range; g(x) / x^r
                // is then read off at the smallest safe x.
                const double x = std::max(std::pow(u, 1.0 / p), 1e-150);
                return gs(x) / std::pow(x, r) / p;
              };
              return from_quad(quad::integrate(h, 0.0, std::pow(L, p), ubp, rel_tol), pl.scale);
            };

            FValue pos = one_side(+1, pos_bp);
            if (!pl.symmetric) return pos;
            FValue neg = one_side(-1, neg_bp);
            if (pos.status == FStatus::Infinite || neg.status == FStatus::Infinite)
              return FValue{std::numeric_limits<double>::infinity(), FStatus::Infinite, 0.0};
            FValue out{pos.value + neg.value, FStatus::Finite, pos.error + neg.error};
            if (pos.status == FStatus::NotConverged || neg.status == FStatus::NotConverged)
              out.status = FStatus::NotConverged;
            return out;
          },
      },
      jm);
}

/// Total mass of F restricted to |x| > eps (finite for every eps > 0 here).
inline double tail_mass(const JumpMeasureSpec& jm, double eps) {
  return std::visit(overloaded{
                        [](const NoJumps&) { return 0.0; },
                        [&](const CompoundPoisson& cp) {
                          if (eps <= 0.0) return cp.intensity;
                          auto one = [](double) { return 1.0; };
                          return integrate_jump_measure(jm, one, {0.0, true}, {}, eps).value;
                        },
                        [&](const PowerLawSmallJumps& pl) {
                          if (eps <= 0.0) return std::numeric_limits<double>::infinity();
                          if (eps >= pl.cutoff) return 0.0;
                          const double side = pl.scale * (std::pow(eps, -pl.alpha) - std::pow(pl.cutoff, -pl.alpha)) / pl.alpha;
                          return pl.symmetric ? 2.0 * side : side;
                        },
                    },
                    jm);
}

/// int_{|x| <= eps} |x|^p F(dx) for the power-law family (closed form).
inline double power_law_small_moment(const PowerLawSmallJumps& pl, double eps, double p) {
  const double hi = std::min(eps, pl.cutoff);
  if (p <= pl.alpha) return std::numeric_limits<double>::infinity();
  const double side = pl.scale * std::pow(hi, p - pl.alpha) / (p - pl.alpha);
  return pl.symmetric ? 2.0 * side : side;
}

inline std::string family_name(const JumpMeasureSpec& jm) {
  return std::visit(overloaded{
                        [](const NoJumps&) { return std::string("none"); },
                        [](const CompoundPoisson&) { return std::string("compound_poisson"); },
                        [](const PowerLawSmallJumps&) { return std::string("power_law"); },
                    },
                    jm);
}

}  // namespace levyvar
