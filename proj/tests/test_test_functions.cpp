#include <catch_amalgamated.hpp>

#include <random>

#include "levyvar/test_functions.hpp"

using namespace levyvar;
using Catch::Approx;

namespace {
std::vector<TestFunction> library() {
  return {TestFunction(PowerAbs{0.5}),
          TestFunction(PowerAbs{1.0}),
          TestFunction(PowerAbs{3.0}),
          TestFunction(TruncatedPower{2.0, 2.0}),
          TestFunction(PhiR{0.0}),
          TestFunction(PhiR{1.0}),
          TestFunction(PhiR{2.0}),
          TestFunction(SmoothTruncatedPower{1.5, 0.5}),
          TestFunction(SquareNearZero{1.0}),
          TestFunction(CubicPlus{3.5}),
          TestFunction(SignedPower{0.5})};
}
}  // namespace

TEST_CASE("pointwise values") {
  CHECK(TestFunction(TruncatedPower{2.0, 2.0})(-2.0) == 4.0);
  CHECK(TestFunction(TruncatedPower{2.0, 2.0})(2.0000001) == 0.0);
  CHECK(TestFunction(PhiR{1.0})(5.0) == 1.0);
  CHECK(TestFunction(SquareNearZero{1.0})(0.5) == 0.25);
  CHECK(TestFunction(SquareNearZero{1.0})(3.0) == Approx(1.0 + 2.0 * 2.0));
  CHECK(TestFunction(SignedPower{1.0})(-0.5) == -0.5);
  CHECK(TestFunction(SignedPower{1.0})(7.0) == 1.0);
  CHECK(TestFunction(PhiR{0.0})(0.0) == 1.0);
}

TEST_CASE("descriptions carry the parameters") {
  CHECK(TestFunction(PhiR{1.5}).describe() == "phi_r(r=1.5)");
  CHECK(TestFunction(TruncatedPower{2.0, 0.25}).describe() == "truncated_power(r=2,a=0.25)");
  CHECK(TestFunction(SquareNearZero{2.0}).describe() == "square_near_zero(K=2)");
}

TEST_CASE("derivatives") {
  CHECK(TestFunction(SquareNearZero{1.0}).eval_deriv(0.3) == Approx(0.6));
  CHECK(TestFunction(PowerAbs{3.0}).eval_deriv(-1.0) == Approx(-3.0));
  CHECK(TestFunction(PowerAbs{1.0}).eval_deriv(0.0) == 0.0);
  CHECK(TestFunction(PowerAbs{0.5}).eval_deriv(0.0) == 0.0);
  CHECK_THROWS_AS(TestFunction(TruncatedPower{2.0, 1.0}).eval_deriv(0.5), std::invalid_argument);
  CHECK_THROWS_AS(TestFunction(SignedPower{1.0}).eval_deriv(0.5), std::invalid_argument);
}

TEST_CASE("derivative matches central finite differences away from kinks") {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> U(-4.0, 4.0);
  for (const auto& f : library()) {
    if (!f.has_derivative()) continue;
    int checked = 0;
    while (checked < 100) {
      const double x = U(gen);
      bool near_kink = false;
      for (double k : f.kinks()) near_kink = near_kink || std::abs(x - k) < 1e-3;
      if (near_kink) continue;
      const double h = 1e-6;
      const double fd = (f(x + h) - f(x - h)) / (2.0 * h);
      CHECK(f.eval_deriv(x) == Approx(fd).margin(1e-6 * std::max(1.0, std::abs(fd))));
      ++checked;
    }
  }
}

TEST_CASE("truncated power equals power times the inclusive indicator") {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> U(-3.0, 3.0);
  for (double r : {0.3, 1.0, 2.5}) {
    for (double a : {0.5, 1.0, 2.0}) {
      const TestFunction tp(TruncatedPower{r, a});
      const TestFunction pw(PowerAbs{r});
      for (int i = 0; i < 200; ++i) {
        const double x = U(gen);
        CHECK(tp(x) == pw(x) * (std::abs(x) <= a ? 1.0 : 0.0));
      }
      CHECK(tp(a) == pw(a));
      CHECK(tp(-a) == pw(-a));
    }
  }
}

TEST_CASE("parity metadata holds on a random mesh") {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> U(-5.0, 5.0);
  for (const auto& f : library()) {
    for (int i = 0; i < 200; ++i) {
      const double x = U(gen);
      if (f.even()) CHECK(f(x) == f(-x));
      if (f.odd()) CHECK(f(x) == -f(-x));
    }
  }
}

TEST_CASE("cutoff family sandwich, evenness and smoothness") {
  for (double eta : {0.1, 1.0, 3.0}) {
    const CutoffFamily psi(eta);
    for (double x = -5.0 * eta; x <= 5.0 * eta; x += eta / 97.0) {
      const double v = psi(x);
      const double lower = std::abs(x) <= eta ? 1.0 : 0.0;
      const double upper = std::abs(x) <= 2.0 * eta ? 1.0 : 0.0;
      CHECK(v >= lower);
      CHECK(v <= upper);
      CHECK(v == psi(-x));
      CHECK(std::abs(psi.deriv(x)) <= 15.0 / 8.0 / eta + 1e-12);
    }
    // C2 at the junctions: derivatives vanish on both sides.
    for (double x : {eta, 2.0 * eta}) {
      CHECK(psi.deriv(x) == Approx(0.0).margin(1e-12));
      CHECK(psi.second_deriv(x) == Approx(0.0).margin(1e-12));
      const double h = 1e-5 * eta;
      CHECK(psi.second_deriv(x + h) == Approx(0.0).margin(1e-2 / (eta * eta)));
    }
    const double x = 1.37 * eta;
    const double h = 1e-6 * eta;
    CHECK(psi.deriv(x) == Approx((psi(x + h) - psi(x - h)) / (2 * h)).epsilon(1e-6));
    CHECK(psi.second_deriv(x) == Approx((psi.deriv(x + h) - psi.deriv(x - h)) / (2 * h)).epsilon(1e-5));
  }
}

TEST_CASE("class metadata") {
  const TestFunction p(PowerAbs{1.5});
  CHECK(p.in_E(1.5));
  CHECK(p.in_E_prime(1.0));
  CHECK(p.in_E_dprime(1.0));
  CHECK_FALSE(p.in_E_dprime(1.5));
  CHECK_FALSE(p.bounded());

  const TestFunction s(SignedPower{0.7});
  CHECK_FALSE(s.in_E(0.7));
  CHECK(s.in_E_prime(0.7));
  CHECK(s.bounded());
  CHECK(s.odd());

  const TestFunction q(SquareNearZero{2.0});
  CHECK(q.square_near_zero());
  CHECK(q.globally_c1());
  CHECK(q.in_E(2.0));

  const TestFunction c(CubicPlus{4.0});
  CHECK(c.second_derivative_small());
  CHECK_FALSE(c.square_near_zero());

  const TestFunction t(TruncatedPower{2.0, 1.0});
  CHECK_FALSE(t.continuous());
  CHECK_FALSE(t.f_ae_continuous(CompoundPoisson{1.0, PointMasses{{{1.0, 1.0}}}}));
  CHECK(t.f_ae_continuous(CompoundPoisson{1.0, PointMasses{{{0.5, 1.0}}}}));
  CHECK(t.f_ae_continuous(CompoundPoisson{1.0, GaussianLaw{0.0, 1.0}}));
}

TEST_CASE("invalid parameters are rejected") {
  CHECK_THROWS_AS(TestFunction(PowerAbs{0.0}), std::invalid_argument);
  CHECK_THROWS_AS(TestFunction(TruncatedPower{1.0, 0.0}), std::invalid_argument);
  CHECK_THROWS_AS(TestFunction(PhiR{-1.0}), std::invalid_argument);
  CHECK_THROWS_AS(TestFunction(CubicPlus{3.0}), std::invalid_argument);
  CHECK_THROWS_AS(TestFunction(SquareNearZero{-1.0}), std::invalid_argument);
  CHECK_THROWS_AS(CutoffFamily(0.0), std::invalid_argument);
}

TEST_CASE("bounded companion used for centerings") {
  const auto c = with_cutoff(TestFunction(PowerAbs{1.2}));
  CHECK(c.name() == "smooth_truncated_power");
  CHECK(c(0.5) == Approx(std::pow(0.5, 1.2)));
  CHECK(c(3.0) == 0.0);
  CHECK(with_cutoff(TestFunction(PhiR{1.0})).name() == "phi_r");
  CHECK_THROWS_AS(with_cutoff(TestFunction(CubicPlus{4.0})), std::invalid_argument);
}
