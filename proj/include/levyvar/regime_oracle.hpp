#pragma once

// Limit-theorem oracle: given the triple (b, c, F), a test function and the
// sampling scheme, decide which law of large numbers / central limit theorem
// governs V^n(f) (or V'^n(f), or their long-horizon "bar" versions), with
// its normalization, centering and limit, including predicted CLT variances.
//
// Every statistic is expressed in the common form
//     u_n * (a_n * V_t - C_t)
// with a_n = delta^normalization_exponent * n^normalization_n_exponent (or a
// data-dependent scale), C_t the centering and u_n the CLT scale.

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "levyvar/horizon.hpp"
#include "levyvar/levy_model.hpp"
#include "levyvar/quadrature.hpp"
#include "levyvar/test_functions.hpp"

namespace levyvar {

enum class Theorem {
  T2_1a,
  T2_1b,
  T2_1c,
  T2_1iii,
  T2_2i,
  T2_2ii,
  T2_3,
  T2_4i,
  T2_4ii,
  T2_5i,
  T2_5ii,
  T2_6b,
  T2_6c,
  T2_7,
  T3_1,
  T3_2,
  T3_3,
  NotCovered
};

inline const char* to_string(Theorem t) {
  switch (t) {
    case Theorem::T2_1a: return "T2_1a";
    case Theorem::T2_1b: return "T2_1b";
    case Theorem::T2_1c: return "T2_1c";
    case Theorem::T2_1iii: return "T2_1iii";
    case Theorem::T2_2i: return "T2_2i";
    case Theorem::T2_2ii: return "T2_2ii";
    case Theorem::T2_3: return "T2_3";
    case Theorem::T2_4i: return "T2_4i";
    case Theorem::T2_4ii: return "T2_4ii";
    case Theorem::T2_5i: return "T2_5i";
    case Theorem::T2_5ii: return "T2_5ii";
    case Theorem::T2_6b: return "T2_6b";
    case Theorem::T2_6c: return "T2_6c";
    case Theorem::T2_7: return "T2_7";
    case Theorem::T3_1: return "T3_1";
    case Theorem::T3_2: return "T3_2";
    case Theorem::T3_3: return "T3_3";
    case Theorem::NotCovered: return "NotCovered";
  }
  return "?";
}

/// Which sum of f is studied: f(increment) or f(increment / sqrt(delta)).
enum class Functional { V, VPrime };
/// First-order (LLN) or second-order (CLT) statement.
enum class Order { LLN, CLT };

inline const char* to_string(Functional f) { return f == Functional::V ? "V" : "VPrime"; }
inline const char* to_string(Order o) { return o == Order::LLN ? "lln" : "clt"; }

struct Query {
  HorizonMode mode = HorizonMode::FixedHorizon;
  Functional functional = Functional::V;
  Order order = Order::LLN;
};

enum class CenteringKind { None, HCenter, DeterministicSlope, JumpFunctional, GaussianExpectation };
enum class CenteringSource { None, Analytic, MonteCarlo, Ledger };

inline const char* to_string(CenteringKind k) {
  switch (k) {
    case CenteringKind::None: return "None";
    case CenteringKind::HCenter: return "H_center";
    case CenteringKind::DeterministicSlope: return "DeterministicSlope";
    case CenteringKind::JumpFunctional: return "JumpFunctional";
    case CenteringKind::GaussianExpectation: return "GaussianExpectation";
  }
  return "?";
}
inline const char* to_string(CenteringSource s) {
  switch (s) {
    case CenteringSource::None: return "none";
    case CenteringSource::Analytic: return "analytic";
    case CenteringSource::MonteCarlo: return "monte_carlo";
    case CenteringSource::Ledger: return "ledger";
  }
  return "?";
}

/// C_t:
///   HCenter:             t * n^n_exponent * delta^delta_exponent * H(target)
///                        with H(g) = E g(X_delta) or E g(X_delta / sqrt(delta))
///   DeterministicSlope:  t * value
///   GaussianExpectation: t * value, value = E target(sigma U)
///   JumpFunctional:      discretized (target * mu)_t + extra_slope * t
struct Centering {
  CenteringKind kind = CenteringKind::None;
  std::optional<TestFunction> target;
  bool scaled_increments = false;
  double delta_exponent = 0.0;
  double n_exponent = 0.0;
  double value = 0.0;
  double extra_slope = 0.0;
  CenteringSource source = CenteringSource::None;
};

enum class LimitKind {
  DeterministicSlope,         // value * t
  RandomJumpFunctional,       // f * mu_t
  JumpFunctionalPlusDrift,    // f * mu_t + drift_slope * t
  CompensatedJumpFunctional,  // Sigma(f, phi)_t = f * mu_t - t F(f phi)
  CLTVariance,                // Wiener process, variance `value` per unit time
  CLTCovariance,              // Wiener process with covariance `matrix`
  RandomCLT_Z,                // Z(f') (+ extra Wiener part of variance extra_variance)
  Divergent,
};

inline const char* to_string(LimitKind k) {
  switch (k) {
    case LimitKind::DeterministicSlope: return "DeterministicSlope";
    case LimitKind::RandomJumpFunctional: return "RandomJumpFunctional";
    case LimitKind::JumpFunctionalPlusDrift: return "JumpFunctionalPlusDrift";
    case LimitKind::CompensatedJumpFunctional: return "CompensatedJumpFunctional";
    case LimitKind::CLTVariance: return "CLTVariance";
    case LimitKind::CLTCovariance: return "CLTCovariance";
    case LimitKind::RandomCLT_Z: return "RandomCLT_Z";
    case LimitKind::Divergent: return "Divergent";
  }
  return "?";
}

struct Limit {
  LimitKind kind = LimitKind::Divergent;
  double value = 0.0;
  double drift_slope = 0.0;
  double extra_variance = 0.0;
  bool plus_compensated_jumps = false;  // CLTVariance on top of Sigma(f, phi) (jumps present)
  std::optional<TestFunction> function;  // f for jump functionals / Z(f'), f phi for Sigma
  std::vector<std::vector<double>> matrix;
};

/// Data-dependent scale a_n or u_n.
enum class ScaleKind {
  Power,      // plain powers of delta and n
  HRatio,     // a_n = delta / H_delta(target)
  GammaRoot,  // u_n = sqrt(delta / Gamma_delta(target))  (fixed horizon)
              // u_n = 1 / sqrt(n Gamma_delta(target))    (growing horizon)
};

inline const char* to_string(ScaleKind k) {
  switch (k) {
    case ScaleKind::Power: return "power";
    case ScaleKind::HRatio: return "H_ratio";
    case ScaleKind::GammaRoot: return "Gamma_root";
  }
  return "?";
}

struct RegimeVerdict {
  Theorem theorem = Theorem::NotCovered;
  std::string label;  // e.g. "T2_5i1", "T3_1b"
  Query query;
  double normalization_exponent = 0.0;
  double normalization_n_exponent = 0.0;
  double clt_delta_exponent = 0.0;
  double clt_n_exponent = 0.0;
  ScaleKind scale_kind = ScaleKind::Power;
  std::optional<TestFunction> scale_target;
  Centering centering;
  Limit limit;
  std::vector<std::string> notes;
  std::string reason;  // NotCovered only
  bool empirical_rate = false;

  [[nodiscard]] bool covered() const { return theorem != Theorem::NotCovered; }
  [[nodiscard]] bool is_clt() const {
    return limit.kind == LimitKind::CLTVariance || limit.kind == LimitKind::CLTCovariance ||
           limit.kind == LimitKind::RandomCLT_Z;
  }
};

// ---------------------------------------------------------------------------
// Gaussian expectations

/// E g(sigma U).
template <typename G>
double gaussian_expectation(G&& g, double sigma, std::vector<double> unit_breakpoints = {}) {
  std::vector<double> bp;
  for (double b : unit_breakpoints) bp.push_back(b);
  auto q = quad::normal_expectation(g, 0.0, sigma, bp);
  if (!q.converged) throw std::runtime_error("gaussian_expectation: quadrature did not converge");
  return q.value;
}

inline double gaussian_expectation(const TestFunction& f, double sigma) {
  return gaussian_expectation([&f](double x) { return f.eval(x); }, sigma, f.kinks());
}

/// Var f(sigma U).
inline double gaussian_variance(const TestFunction& f, double sigma) {
  const double m = gaussian_expectation(f, sigma);
  const double m2 = gaussian_expectation([&f](double x) { return f.eval(x) * f.eval(x); }, sigma, f.kinks());
  return m2 - m * m;
}

/// Exact H_t(g) = E g(X_t) (or E g(X_t / sqrt t)) for models without jumps,
/// where X_t = b t + sqrt(c t) U.
inline double gaussian_model_H(const LevyCharacteristics& ch, const TestFunction& g, double t, bool scaled) {
  if (ch.has_jumps()) throw std::invalid_argument("gaussian_model_H: model has jumps");
  double mean = ch.drift() * t;
  double sd = std::sqrt(ch.gauss_var() * t);
  if (scaled) {
    mean /= std::sqrt(t);
    sd /= std::sqrt(t);
  }
  auto q = quad::normal_expectation([&g](double x) { return g.eval(x); }, mean, sd, g.kinks());
  if (!q.converged) throw std::runtime_error("gaussian_model_H: quadrature did not converge");
  return q.value;
}

// ---------------------------------------------------------------------------

namespace detail {

struct ModelFacts {
  double c = 0.0;
  bool jumps = false;
  std::optional<double> bbar;
  const JumpMeasureSpec* jm = nullptr;

  bool in_I(double r) const { return r >= 0.0 && levyvar::in_I(*jm, r); }
  bool one_in_I() const { return in_I(1.0); }
  bool bbar_zero() const { return bbar.has_value() && *bbar == 0.0; }
};

inline ModelFacts facts(const LevyCharacteristics& ch) {
  return {ch.gauss_var(), ch.has_jumps(), bar_drift(ch), &ch.jump_measure()};
}

inline RegimeVerdict not_covered(const Query& q, std::string reason) {
  RegimeVerdict v;
  v.query = q;
  v.label = "NotCovered";
  v.reason = std::move(reason);
  return v;
}

inline double finite_F(const JumpMeasureSpec& jm, const TestFunction& f) {
  const auto v = F_integral(jm, f);
  if (v.status == FStatus::Infinite) throw std::domain_error("F(" + f.name() + ") is infinite");
  if (v.status == FStatus::NotConverged) throw std::runtime_error("F(" + f.name() + ") quadrature did not converge");
  return v.value;
}

template <typename G>
double finite_F(const JumpMeasureSpec& jm, G&& g, NearZeroBehavior nz, std::vector<double> bp) {
  const auto v = integrate_jump_measure(jm, g, nz, std::move(bp));
  if (!v.finite()) throw std::domain_error("jump-measure integral is not finite");
  return v.value;
}

// Cases [a-1]..[a-4] of the unnormalized LLN, plus the c = 0, r in I cap (1, 2) case.
inline std::optional<std::string> lln_case_a(const ModelFacts& m, const TestFunction& f) {
  const double r = f.class_r();
  if (f.in_E_dprime(2.0)) return "a-1";
  if (m.c == 0.0 && r < 1.0 && f.in_E_prime(r) && m.in_I(r)) return "a-2";
  if (m.c == 0.0 && m.one_in_I() && f.in_E_dprime(1.0)) return "a-3";
  if (m.c == 0.0 && m.bbar_zero() && r <= 1.0 && f.in_E_prime(r) && m.in_I(r)) return "a-4";
  if (m.c == 0.0 && r > 1.0 && r < 2.0 && f.in_E_prime(r) && m.in_I(r)) return "ii";
  return std::nullopt;
}

// Whether r is "as in (ii)" of the unnormalized LLN.
inline bool lln_part_ii(const ModelFacts& m, double r) {
  if (r >= 2.0) return true;
  if (m.c == 0.0 && r >= 1.0 && m.in_I(r)) return true;
  if (m.c == 0.0 && r < 1.0 && m.in_I(r) && m.bbar_zero()) return true;
  return false;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Predicted variances

/// Unit-time variance of the Wiener limit for a single-component CLT verdict.
inline double predicted_clt_variance(const RegimeVerdict& v, const LevyCharacteristics& ch, const TestFunction& f) {
  const double c = ch.gauss_var();
  const double sigma = ch.sigma();
  const double r = f.class_r();
  switch (v.theorem) {
    case Theorem::T2_5i:
      return std::pow(c, r) * (abs_normal_moment(2.0 * r) - std::pow(abs_normal_moment(r), 2));
    case Theorem::T3_3:
      if (v.query.functional == Functional::V)
        return std::pow(c, r) * (abs_normal_moment(2.0 * r) - std::pow(abs_normal_moment(r), 2));
      return gaussian_variance(f, sigma);
    case Theorem::T2_4ii: {
      const double m1 = abs_normal_moment(1.0);
      return c * (abs_normal_moment(2.0) - m1 * m1);
    }
    case Theorem::T2_5ii:
      return gaussian_variance(f, sigma);
    case Theorem::T2_4i:
      return 1.0;
    case Theorem::T3_2: {
      if (v.scale_kind == ScaleKind::GammaRoot) return 1.0;
      const auto sq = [&f](double x) { return f.eval(x) * f.eval(x); };
      const double ff = detail::finite_F(ch.jump_measure(), sq, {2.0 * f.class_r(), true}, f.kinks());
      if (v.label == "T3_2ii") {
        const double m1 = abs_normal_moment(1.0);
        return ff + c * (1.0 - m1 * m1);
      }
      return ff;
    }
    default:
      break;
  }
  throw std::invalid_argument(std::string("predicted_clt_variance: ") + to_string(v.theorem) +
                              " does not have a deterministic Gaussian limit variance");
}

/// Unit variance-covariance of the joint Wiener limit. Components must be J'
/// (power class, V functional) or J'' (bounded f, V' functional) verdicts.
inline std::vector<std::vector<double>> predicted_clt_covariance(const std::vector<RegimeVerdict>& verdicts,
                                                                 const LevyCharacteristics& ch,
                                                                 const std::vector<TestFunction>& fs) {
  if (verdicts.size() != fs.size()) throw std::invalid_argument("predicted_clt_covariance: size mismatch");
  const double c = ch.gauss_var();
  const double sigma = ch.sigma();
  enum class Kind { JPrime, JSecond };
  std::vector<Kind> kinds;
  for (const auto& v : verdicts) {
    const bool jp = (v.theorem == Theorem::T2_5i || v.theorem == Theorem::T3_3) && v.query.functional == Functional::V;
    const bool js =
        (v.theorem == Theorem::T2_5ii || v.theorem == Theorem::T3_3) && v.query.functional == Functional::VPrime;
    if (!jp && !js) throw std::invalid_argument("predicted_clt_covariance: component is neither J' nor J''");
    kinds.push_back(jp ? Kind::JPrime : Kind::JSecond);
  }
  const std::size_t d = fs.size();
  std::vector<std::vector<double>> cov(d, std::vector<double>(d, 0.0));
  for (std::size_t j = 0; j < d; ++j) {
    for (std::size_t k = j; k < d; ++k) {
      double val = 0.0;
      if (kinds[j] == Kind::JPrime && kinds[k] == Kind::JPrime) {
        const double rj = fs[j].class_r();
        const double rk = fs[k].class_r();
        val = std::pow(c, 0.5 * (rj + rk)) *
              (abs_normal_moment(rj + rk) - abs_normal_moment(rj) * abs_normal_moment(rk));
      } else if (kinds[j] == Kind::JSecond && kinds[k] == Kind::JSecond) {
        auto bp = fs[j].kinks();
        bp.insert(bp.end(), fs[k].kinks().begin(), fs[k].kinks().end());
        const double ejk =
            gaussian_expectation([&](double x) { return fs[j].eval(x) * fs[k].eval(x); }, sigma, bp);
        val = ejk - gaussian_expectation(fs[j], sigma) * gaussian_expectation(fs[k], sigma);
      } else {
        const std::size_t p = kinds[j] == Kind::JPrime ? j : k;  // J' index
        const std::size_t s = kinds[j] == Kind::JPrime ? k : j;  // J'' index
        const double rp = fs[p].class_r();
        auto bp = fs[s].kinks();
        bp.push_back(0.0);
        const double cross =
            gaussian_expectation([&](double x) { return std::pow(std::abs(x), rp) * fs[s].eval(x); }, sigma, bp);
        val = cross - std::pow(c, 0.5 * rp) * abs_normal_moment(rp) * gaussian_expectation(fs[s], sigma);
      }
      cov[j][k] = val;
      cov[k][j] = val;
    }
  }
  return cov;
}

// ---------------------------------------------------------------------------
// Classification

namespace detail {

inline RegimeVerdict base(const Query& q, Theorem t, std::string label) {
  RegimeVerdict v;
  v.query = q;
  v.theorem = t;
  v.label = std::move(label);
  return v;
}

inline Centering h_center(const TestFunction& target, double delta_exp, double n_exp = 0.0, bool scaled = false) {
  Centering c;
  c.kind = CenteringKind::HCenter;
  c.target = target;
  c.delta_exponent = delta_exp;
  c.n_exponent = n_exp;
  c.scaled_increments = scaled;
  return c;
}

inline Centering slope_center(double value) {
  Centering c;
  c.kind = CenteringKind::DeterministicSlope;
  c.value = value;
  c.source = CenteringSource::Analytic;
  return c;
}

inline Limit slope_limit(double v) {
  Limit l;
  l.kind = LimitKind::DeterministicSlope;
  l.value = v;
  return l;
}

// Unnormalized LLN / normalized LLN, fixed horizon, V functional.
inline std::vector<RegimeVerdict> fixed_lln_v(const LevyCharacteristics& ch, const TestFunction& f, const Query& q) {
  std::vector<RegimeVerdict> out;
  const auto m = facts(ch);
  const double r = f.class_r();
  const bool cont = f.f_ae_continuous(ch.jump_measure());
  if (r == 0.0) return out;

  if (cont) {
    if (f.in_E(2.0)) {
      auto v = base(q, Theorem::T2_1b, "T2_1b");
      v.limit.kind = LimitKind::JumpFunctionalPlusDrift;
      v.limit.drift_slope = m.c;
      v.limit.function = f;
      out.push_back(std::move(v));
    }
    if (m.c == 0.0 && m.one_in_I() && f.in_E(1.0)) {
      auto v = base(q, Theorem::T2_1c, "T2_1c");
      v.limit.kind = LimitKind::JumpFunctionalPlusDrift;
      v.limit.drift_slope = std::abs(*m.bbar);
      v.limit.function = f;
      out.push_back(std::move(v));
    }
    if (auto which = lln_case_a(m, f)) {
      auto v = base(q, Theorem::T2_1a, "T2_1a");
      v.limit.kind = LimitKind::RandomJumpFunctional;
      v.limit.function = f;
      v.notes.push_back("case " + *which);
      out.push_back(std::move(v));
    }
  }
  if (m.c > 0.0 && f.in_E(r) && (r < 2.0 || !m.jumps)) {
    auto v = base(q, Theorem::T2_2i, "T2_2i");
    v.normalization_exponent = 1.0 - r / 2.0;
    v.limit = slope_limit(std::pow(m.c, r / 2.0) * abs_normal_moment(r));
    out.push_back(std::move(v));
  }
  // Centered (second-order) LLN.
  const bool t23_range = (r > 1.0 && r < 2.0) || (r <= 1.0 && m.c == 0.0 && m.in_I(2.0 * r));
  if (cont && t23_range && f.in_E_prime(r) && (f.bounded() || f.in_E(r))) {
    try {
      const TestFunction fphi = with_cutoff(f);
      auto v = base(q, Theorem::T2_3, "T2_3");
      v.centering = h_center(fphi, -1.0);
      v.limit.kind = LimitKind::CompensatedJumpFunctional;
      v.limit.function = fphi;
      const auto Ffphi = F_integral(ch.jump_measure(), fphi);
      if (Ffphi.status == FStatus::NotConverged)
        throw std::runtime_error("F(" + fphi.name() + ") quadrature did not converge");
      v.limit.value = Ffphi.value;  // F(f phi), +inf when r is not in I
      v.notes.push_back(f.bounded() ? "phi = 1" : "phi = psi_1 (C2 cutoff)");
      if (!Ffphi.finite()) v.notes.push_back("F(f phi) is infinite: Sigma(f, phi) is a compensated integral only");
      out.push_back(std::move(v));
    } catch (const std::invalid_argument&) {
    }
  }
  if (f.in_E(r) && !lln_part_ii(m, r)) {
    auto v = base(q, Theorem::T2_1iii, "T2_1iii");
    v.scale_kind = ScaleKind::HRatio;
    v.scale_target = TestFunction(PhiR{r});
    v.limit = slope_limit(1.0);
    v.empirical_rate = true;
    v.notes.push_back("rate delta / H_delta(phi_r) is not explicit; V^n(f)_t -> +infinity");
    out.push_back(std::move(v));
  }
  return out;
}

inline std::vector<RegimeVerdict> fixed_clt_v(const LevyCharacteristics& ch, const TestFunction& f, const Query& q) {
  std::vector<RegimeVerdict> out;
  const auto m = facts(ch);
  const double r = f.class_r();
  const bool cont = f.f_ae_continuous(ch.jump_measure());
  if (r == 0.0) return out;

  if (m.c > 0.0) {
    if (f.globally_c1() && f.square_near_zero()) {
      auto v = base(q, Theorem::T2_6c, "T2_6c");
      v.clt_delta_exponent = -0.5;
      v.centering.kind = CenteringKind::JumpFunctional;
      v.centering.target = f;
      v.centering.extra_slope = m.c;
      v.centering.source = CenteringSource::Ledger;
      v.limit.kind = LimitKind::RandomCLT_Z;
      v.limit.function = f;
      v.limit.extra_variance = 2.0 * m.c * m.c;
      out.push_back(std::move(v));
    } else if (f.globally_c1() && f.second_derivative_small()) {
      auto v = base(q, Theorem::T2_6b, "T2_6b");
      v.clt_delta_exponent = -0.5;
      v.centering.kind = CenteringKind::JumpFunctional;
      v.centering.target = f;
      v.centering.source = CenteringSource::Ledger;
      v.limit.kind = LimitKind::RandomCLT_Z;
      v.limit.function = f;
      out.push_back(std::move(v));
    }
    if (f.in_E(1.0) && cont) {
      auto v = base(q, Theorem::T2_4ii, "T2_4ii");
      v.centering = h_center(with_cutoff(f), -1.0);
      v.limit.kind = LimitKind::CLTVariance;
      v.limit.value = predicted_clt_variance(v, ch, f);
      v.limit.plus_compensated_jumps = m.jumps;
      v.limit.function = with_cutoff(f);
      if (m.jumps) v.notes.push_back("limit is Sigma(f, phi) + W'; only the W' variance is Gaussian");
      out.push_back(std::move(v));
    }
    if (f.in_E(r) && (r < 1.0 || !m.jumps)) {
      const TestFunction target = f.bounded() ? f : TestFunction(PhiR{r});
      auto v1 = base(q, Theorem::T2_5i, "T2_5i1");
      v1.normalization_exponent = 1.0 - r / 2.0;
      v1.clt_delta_exponent = -0.5;
      v1.centering = h_center(target, -r / 2.0);
      v1.limit.kind = LimitKind::CLTVariance;
      v1.limit.value = predicted_clt_variance(v1, ch, f);
      out.push_back(v1);
      auto v2 = v1;
      v2.label = "T2_5i2";
      v2.centering = slope_center(std::pow(m.c, r / 2.0) * abs_normal_moment(r));
      if (m.one_in_I()) {
        out.push_back(std::move(v2));
      } else {
        v2.limit = slope_limit(0.0);
        v2.notes.push_back("1 not in I: only o(1) at rate delta^(1 - s/2) for s in I cap (1, 2); exact rate unknown");
        out.push_back(std::move(v2));
      }
    }
    if (cont && r > 1.0 && r < 2.0 && f.in_E_prime(r)) {
      for (auto& v : fixed_lln_v(ch, f, q))
        if (v.theorem == Theorem::T2_3) {
          v.notes.push_back("second-order LLN playing the role of the CLT for 1 < r < 2");
          out.push_back(std::move(v));
        }
    }
    if (out.empty()) {
      if (f.in_E(2.0) && f.globally_c1() && !f.square_near_zero())
        out.push_back(not_covered(q, "f in E_2 cap C1 but not x^2 near 0: the Z(f') + c sqrt(2) W' limit is not established"));
    }
    return out;
  }

  // c == 0
  if (r < 1.0 && f.in_E(r) && !m.in_I(2.0 * r)) {
    auto v = base(q, Theorem::T2_4i, "T2_4i");
    v.scale_kind = ScaleKind::GammaRoot;
    v.scale_target = TestFunction(PhiR{r});
    v.centering = h_center(TestFunction(PhiR{r}), -1.0);
    v.limit.kind = LimitKind::CLTVariance;
    v.limit.value = 1.0;
    v.empirical_rate = true;
    v.notes.push_back("normalization uses a Monte Carlo estimate of Gamma_delta(phi_r); noise not covered by the limit theorem");
    out.push_back(std::move(v));
  }
  for (auto& v : fixed_lln_v(ch, f, q))
    if (v.theorem == Theorem::T2_3) out.push_back(std::move(v));
  return out;
}

inline std::vector<RegimeVerdict> fixed_vprime(const LevyCharacteristics& ch, const TestFunction& f, const Query& q) {
  std::vector<RegimeVerdict> out;
  const auto m = facts(ch);
  if (!(m.c > 0.0) || !f.bounded()) return out;
  const double sigma = ch.sigma();
  if (q.order == Order::LLN) {
    auto v = base(q, Theorem::T2_2ii, "T2_2ii");
    v.normalization_exponent = 1.0;
    v.limit = slope_limit(gaussian_expectation(f, sigma));
    out.push_back(std::move(v));
    return out;
  }
  auto v1 = base(q, Theorem::T2_5ii, "T2_5ii1");
  v1.normalization_exponent = 1.0;
  v1.clt_delta_exponent = -0.5;
  v1.centering = h_center(f, 0.0, 0.0, true);
  v1.limit.kind = LimitKind::CLTVariance;
  v1.limit.value = predicted_clt_variance(v1, ch, f);
  out.push_back(v1);
  if (f.even()) {
    auto v2 = v1;
    v2.label = "T2_5ii2";
    v2.centering = Centering{};
    v2.centering.kind = CenteringKind::GaussianExpectation;
    v2.centering.target = f;
    v2.centering.value = gaussian_expectation(f, sigma);
    v2.centering.source = CenteringSource::Analytic;
    if (!m.one_in_I()) {
      v2.limit = slope_limit(0.0);
      v2.notes.push_back("1 not in I: only o(1) at rate delta^(1 - s/2) for s in I cap (1, 2); exact rate unknown");
    }
    out.push_back(std::move(v2));
  }
  return out;
}

inline std::vector<RegimeVerdict> growing(const LevyCharacteristics& ch, const TestFunction& f, const Query& q) {
  std::vector<RegimeVerdict> out;
  const auto m = facts(ch);
  const double r = f.class_r();
  const bool cont = f.f_ae_continuous(ch.jump_measure());
  const double sigma = ch.sigma();

  if (q.functional == Functional::VPrime) {
    if (!(m.c > 0.0) || !f.bounded()) return out;
    if (q.order == Order::LLN) {
      auto v = base(q, Theorem::T3_1, "T3_1iii");
      v.normalization_n_exponent = -1.0;
      v.limit = slope_limit(gaussian_expectation(f, sigma));
      out.push_back(std::move(v));
    } else {
      auto v = base(q, Theorem::T3_3, "T3_3J''");
      v.normalization_n_exponent = -1.0;
      v.clt_n_exponent = 0.5;
      v.centering = h_center(f, 0.0, 0.0, true);
      v.limit.kind = LimitKind::CLTVariance;
      v.limit.value = predicted_clt_variance(v, ch, f);
      out.push_back(std::move(v));
    }
    return out;
  }

  if (!f.bounded() || r == 0.0) return out;
  if (q.order == Order::LLN) {
    if (cont) {
      if (f.in_E(2.0)) {
        auto v = base(q, Theorem::T3_1, "T3_1b");
        v.normalization_exponent = -1.0;
        v.normalization_n_exponent = -1.0;
        v.limit = slope_limit(finite_F(ch.jump_measure(), f) + m.c);
        out.push_back(std::move(v));
      }
      if (m.c == 0.0 && m.one_in_I() && f.in_E(1.0)) {
        auto v = base(q, Theorem::T3_1, "T3_1c");
        v.normalization_exponent = -1.0;
        v.normalization_n_exponent = -1.0;
        v.limit = slope_limit(finite_F(ch.jump_measure(), f) + std::abs(*m.bbar));
        out.push_back(std::move(v));
      }
      if (lln_case_a(m, f)) {
        auto v = base(q, Theorem::T3_1, "T3_1a");
        v.normalization_exponent = -1.0;
        v.normalization_n_exponent = -1.0;
        v.limit = slope_limit(finite_F(ch.jump_measure(), f));
        out.push_back(std::move(v));
      }
    }
    if (m.c > 0.0 && f.in_E(r) && (r < 2.0 || !m.jumps)) {
      auto v = base(q, Theorem::T3_1, "T3_1ii");
      v.normalization_exponent = -r / 2.0;
      v.normalization_n_exponent = -1.0;
      v.limit = slope_limit(std::pow(m.c, r / 2.0) * abs_normal_moment(r));
      out.push_back(std::move(v));
    }
    return out;
  }

  // CLT
  if (m.c > 0.0 && f.in_E(r) && (r < 1.0 || !m.jumps)) {
    auto v = base(q, Theorem::T3_3, "T3_3J'");
    v.normalization_exponent = -r / 2.0;
    v.normalization_n_exponent = -1.0;
    v.clt_n_exponent = 0.5;
    v.centering = h_center(f, -r / 2.0);
    v.limit.kind = LimitKind::CLTVariance;
    v.limit.value = predicted_clt_variance(v, ch, f);
    out.push_back(std::move(v));
  }
  auto t32 = [&](const std::string& label) {
    auto v = base(q, Theorem::T3_2, label);
    v.clt_n_exponent = -0.5;
    v.clt_delta_exponent = -0.5;
    v.centering = h_center(f, 0.0, 1.0);
    v.limit.kind = LimitKind::CLTVariance;
    v.limit.value = predicted_clt_variance(v, ch, f);
    return v;
  };
  if (cont && f.in_E(1.0)) out.push_back(t32("T3_2ii"));
  if (cont && (f.in_E_dprime(1.0) || (r < 1.0 && m.c == 0.0 && f.in_E_prime(r) && m.in_I(2.0 * r))))
    out.push_back(t32("T3_2i"));
  if (r < 1.0 && f.in_E(r) && (m.c > 0.0 || !m.in_I(2.0 * r))) {
    auto v = base(q, Theorem::T3_2, "T3_2iii");
    v.scale_kind = ScaleKind::GammaRoot;
    v.scale_target = f;
    v.centering = h_center(f, 0.0, 1.0);
    v.limit.kind = LimitKind::CLTVariance;
    v.limit.value = 1.0;
    v.notes.push_back("normalization uses a Monte Carlo estimate of Gamma_delta(f)");
    out.push_back(std::move(v));
  }
  return out;
}

}  // namespace detail

/// Every applicable statement for (model, f, query), strongest first.
inline std::vector<RegimeVerdict> classify_all(const LevyCharacteristics& ch, const TestFunction& f, const Query& q = {}) {
  if (q.mode == HorizonMode::GrowingHorizon) return detail::growing(ch, f, q);
  if (q.functional == Functional::VPrime) return detail::fixed_vprime(ch, f, q);
  return q.order == Order::LLN ? detail::fixed_lln_v(ch, f, q) : detail::fixed_clt_v(ch, f, q);
}

/// The strongest applicable statement; the others are listed in its notes.
inline RegimeVerdict classify(const LevyCharacteristics& ch, const TestFunction& f, const Query& q = {}) {
  auto all = classify_all(ch, f, q);
  if (all.empty()) {
    std::string reason;
    if (f.class_r() == 0.0) {
      reason = "f does not vanish at 0";
    } else if (q.functional == Functional::VPrime || q.mode == HorizonMode::GrowingHorizon) {
      reason = "needs c > 0 and/or bounded f for this functional";
    } else if (q.order == Order::CLT && ch.gauss_var() == 0.0) {
      reason = "c = 0 CLT with random LLN limit: not covered (does not exist in general)";
    } else if (!f.f_ae_continuous(ch.jump_measure())) {
      reason = "f is not F-a.e. continuous";
    } else if (q.order == Order::CLT) {
      reason = "no CLT for this class (e.g. 2 < r <= 3, or E'_r-only f)";
    } else {
      reason = "f is only in E'_r and no unnormalized LLN case applies";
    }
    return detail::not_covered(q, reason);
  }
  if (all.front().theorem == Theorem::NotCovered) return all.front();
  RegimeVerdict best = all.front();
  for (std::size_t k = 1; k < all.size(); ++k) best.notes.push_back(std::string("also applies: ") + all[k].label);
  return best;
}

/// The verdict with the given label (e.g. "T2_5i2"), if applicable.
inline std::optional<RegimeVerdict> classify_label(const LevyCharacteristics& ch, const TestFunction& f, const Query& q,
                                                   const std::string& label) {
  for (auto& v : classify_all(ch, f, q))
    if (v.label == label) return v;
  return std::nullopt;
}

/// Joint verdict for J' / J'' components (fixed horizon: T2_7, growing: T3_3).
inline RegimeVerdict joint_verdict(const std::vector<RegimeVerdict>& components, const LevyCharacteristics& ch,
                                   const std::vector<TestFunction>& fs) {
  RegimeVerdict v;
  const bool growing = !components.empty() && components.front().query.mode == HorizonMode::GrowingHorizon;
  v.theorem = growing ? Theorem::T3_3 : Theorem::T2_7;
  v.label = growing ? "T3_3" : "T2_7";
  v.query = components.empty() ? Query{} : components.front().query;
  v.query.order = Order::CLT;
  v.limit.kind = LimitKind::CLTCovariance;
  v.limit.matrix = predicted_clt_covariance(components, ch, fs);
  for (const auto& c : components) v.notes.push_back("component " + c.label);
  return v;
}

// ---------------------------------------------------------------------------

struct JumpSize {
  double size;
};

/// Conditional (given the jumps) variance at time t of the T2_6 limit:
/// c * sum f'(dX)^2, plus 2 c^2 t for f = x^2 near 0.
inline double conditional_Z_variance(const LevyCharacteristics& ch, const TestFunction& f,
                                     const std::vector<double>& jump_sizes_up_to_t, double t) {
  const double c = ch.gauss_var();
  const bool square = f.globally_c1() && f.square_near_zero();
  const bool smooth = f.globally_c1() && f.second_derivative_small();
  if (!square && !smooth) throw std::invalid_argument("conditional_Z_variance: f is not admissible for Z(f')");
  double s = 0.0;
  for (double j : jump_sizes_up_to_t) {
    const double d = f.eval_deriv(j);
    s += d * d;
  }
  return c * s + (square ? 2.0 * c * c * t : 0.0);
}

struct SmallTimePrediction {
  double value = 0.0;
  std::string regime;
};

/// Leading-order prediction of H_t(f) = E f(X_t) as t -> 0.
inline SmallTimePrediction h_small_time(const LevyCharacteristics& ch, const TestFunction& f, double t) {
  const auto m = detail::facts(ch);
  const double r = f.class_r();
  const auto& jm = ch.jump_measure();
  if (!f.f_ae_continuous(jm)) throw std::invalid_argument("h_small_time: f is not F-a.e. continuous");
  if (r > 0.0 && f.bounded() && f.in_E(r) && r < 2.0 && m.c > 0.0)
    return {std::pow(m.c, r / 2.0) * abs_normal_moment(r) * std::pow(t, r / 2.0), "t^(r/2) c^(r/2) mu_r"};
  if (f.bounded() && f.in_E(2.0)) return {t * (m.c + detail::finite_F(jm, f)), "t (c + F(f))"};
  if (m.c == 0.0 && m.one_in_I() && f.bounded()) {
    if (f.in_E(1.0)) return {t * (std::abs(*m.bbar) + detail::finite_F(jm, f)), "t (|bbar| + F(f))"};
    if (r < 1.0 && f.in_E(r) && *m.bbar != 0.0)
      return {std::pow(std::abs(*m.bbar), r) * std::pow(t, r), "t^r |bbar|^r"};
  }
  const bool third = f.in_E_dprime(2.0) ||
                     (m.c == 0.0 && r > 1.0 && r < 2.0 && f.in_E_prime(r) && m.in_I(r)) ||
                     (m.c == 0.0 && m.one_in_I() && f.in_E_dprime(1.0)) ||
                     (m.c == 0.0 && r < 1.0 && f.in_E_prime(r) && m.in_I(r) && m.bbar_zero());
  if (third) return {t * detail::finite_F(jm, f), "t F(f)"};
  throw std::invalid_argument("h_small_time: no covered small-time regime for " + f.name());
}

}  // namespace levyvar
