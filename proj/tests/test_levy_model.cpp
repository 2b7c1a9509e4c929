#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "levyvar/levy_model.hpp"
#include "levyvar/test_functions.hpp"
#include "oracles.hpp"

using namespace levyvar;
using Catch::Approx;

namespace {
CompoundPoisson cp_pm(double lam, std::vector<std::pair<double, double>> atoms) {
  return CompoundPoisson{lam, PointMasses{std::move(atoms)}};
}
}  // namespace

TEST_CASE("phi_r caps at one and treats r = 0 as the constant 1") {
  CHECK(phi_r(0.5, 2.0) == 0.25);
  CHECK(phi_r(3.0, 2.0) == 1.0);
  CHECK(phi_r(0.5, 0.0) == 1.0);
  CHECK(phi_r(0.0, 0.0) == 1.0);
  CHECK_THROWS_AS(phi_r(1.0, -0.5), std::invalid_argument);
}

TEST_CASE("phi_r is even, monotone in |x| and bounded by one") {
  for (double r : {0.0, 0.25, 1.0, 1.7, 3.0}) {
    double prev = -1.0;
    for (double x = 0.0; x <= 4.0; x += 0.01) {
      const double v = phi_r(x, r);
      CHECK(v == phi_r(-x, r));
      CHECK(v <= 1.0);
      CHECK(v >= prev);
      prev = v;
    }
  }
}

TEST_CASE("absolute normal moments match the gamma formula and quadrature") {
  CHECK(abs_normal_moment(2.0) == Approx(1.0).epsilon(1e-14));
  CHECK(abs_normal_moment(1.0) == Approx(std::sqrt(2.0 / std::numbers::pi)).epsilon(1e-14));
  CHECK(abs_normal_moment(4.0) == Approx(3.0).epsilon(1e-14));
  CHECK(abs_normal_moment(0.0) == Approx(1.0).epsilon(1e-14));
  for (double r : {0.1, 0.5, 1.0, 1.5, 3.0, 4.0}) {
    CHECK(abs_normal_moment(r) == Approx(oracle::abs_normal_moment(r)).epsilon(1e-9));
  }
  CHECK(abs_normal_moment(0.5) == Approx(0.82217).margin(1e-5));
}

TEST_CASE("mu is log-convex: mu_2r >= mu_r^2") {
  for (int k = 1; k <= 20; ++k) {
    const double r = 0.1 * k;
    CHECK(abs_normal_moment(2.0 * r) >= abs_normal_moment(r) * abs_normal_moment(r));
  }
}

TEST_CASE("characteristics reject invalid inputs") {
  CHECK_THROWS_WITH(LevyCharacteristics(0.0, -1.0), Catch::Matchers::ContainsSubstring("gauss_var_c"));
  CHECK_THROWS_AS(LevyCharacteristics(0.0, 1.0, cp_pm(1.0, {{0.0, 1.0}})), std::invalid_argument);
  CHECK_THROWS_AS(LevyCharacteristics(0.0, 1.0, cp_pm(1.0, {{1.0, 0.4}, {-1.0, 0.4}})), std::invalid_argument);
  CHECK_THROWS_AS(LevyCharacteristics(0.0, 1.0, cp_pm(-1.0, {{1.0, 1.0}})), std::invalid_argument);
  CHECK_THROWS_AS(LevyCharacteristics(0.0, 1.0, PowerLawSmallJumps{2.5, 1.0, 1.0, true}), std::invalid_argument);
  CHECK_THROWS_AS(LevyCharacteristics(0.0, 1.0, CompoundPoisson{1.0, UniformLaw{1.0, 1.0}}), std::invalid_argument);
  CHECK_NOTHROW(LevyCharacteristics(0.0, 0.0, CompoundPoisson{1.0, GaussianLaw{0.0, 1.0}}));
}

TEST_CASE("index set membership per family") {
  CHECK(in_I(cp_pm(1.0, {{1.0, 0.5}, {-1.0, 0.5}}), 0.0));
  CHECK(in_I(NoJumps{}, 0.0));
  CHECK(in_I(PowerLawSmallJumps{0.5, 1.0, 1.0, true}, 1.0));
  CHECK_FALSE(in_I(PowerLawSmallJumps{1.5, 1.0, 1.0, true}, 1.0));
  CHECK_FALSE(in_I(PowerLawSmallJumps{1.0, 1.0, 1.0, true}, 1.0));
}

TEST_CASE("index set is an interval and matches finiteness of F(phi_r)") {
  const std::vector<JumpMeasureSpec> jms = {NoJumps{}, cp_pm(2.0, {{1.0, 0.5}, {-0.3, 0.5}}),
                                            CompoundPoisson{1.0, GaussianLaw{0.0, 1.0}},
                                            PowerLawSmallJumps{0.5, 1.0, 1.0, true},
                                            PowerLawSmallJumps{1.2, 0.7, 0.5, false}};
  for (const auto& jm : jms) {
    for (double r = 0.05; r < 2.5; r += 0.1) {
      for (double s = r; s < 2.5; s += 0.1)
        if (in_I(jm, r)) CHECK(in_I(jm, s));
      const auto fv = F_integral(jm, TestFunction(PhiR{r}));
      CHECK(fv.status != FStatus::NotConverged);
      CHECK(fv.finite() == in_I(jm, r));
    }
  }
}

TEST_CASE("power-law membership agrees with a quadrature oracle of the power integral") {
  // The integral of x^(r - 1 - alpha) over [h, 1], in log coordinates, stays
  // bounded as h -> 0 only when r > alpha.
  auto partial = [](double r, double alpha, double h) {
    return oracle::simpson([&](double s) { return std::exp(s * (r - alpha)); }, std::log(h), 0.0, 20000);
  };
  const double alpha = 0.5;
  CHECK(partial(1.0, alpha, 1e-8) == Approx(2.0).epsilon(1e-3));
  const double grows1 = partial(1.0, 1.5, 1e-4);
  const double grows2 = partial(1.0, 1.5, 1e-6);
  CHECK(grows2 > 5.0 * grows1);
}

TEST_CASE("genuine drift") {
  CHECK(*bar_drift(LevyCharacteristics(2.0, 0.0, cp_pm(1.0, {{1.0, 1.0}}))) == Approx(1.0));
  CHECK(*bar_drift(LevyCharacteristics(0.0, 0.0)) == 0.0);
  CHECK_FALSE(bar_drift(LevyCharacteristics(1.0, 0.0, PowerLawSmallJumps{1.5, 1.0, 1.0, true})).has_value());
  // Jumps above 1 are not compensated.
  CHECK(*bar_drift(LevyCharacteristics(2.0, 0.0, cp_pm(1.0, {{2.0, 1.0}}))) == 2.0);
  // Gaussian jump law: closed form vs quadrature of x 1{|x| <= 1} against N(0.3, 1).
  const LevyCharacteristics g(1.0, 0.0, CompoundPoisson{2.0, GaussianLaw{0.3, 1.0}});
  const double direct = 2.0 * oracle::simpson([](double x) { return x * oracle::std_normal_density(x - 0.3); }, -1.0,
                                              1.0, 2000);
  CHECK(*bar_drift(g) == Approx(1.0 - direct).epsilon(1e-10));
  // One-sided power law with alpha < 1.
  const LevyCharacteristics pl(0.5, 0.0, PowerLawSmallJumps{0.5, 1.0, 1.0, false});
  CHECK(*bar_drift(pl) == Approx(0.5 - oracle::power_integral(1.0, 0.5, 1.0)).epsilon(1e-8));
}

TEST_CASE("F integrals") {
  const auto quad = TestFunction(PowerAbs{2.0});
  CHECK(F_integral(cp_pm(2.0, {{1.0, 0.5}, {-1.0, 0.5}}), quad).value == 2.0);
  CHECK(F_integral(NoJumps{}, quad).value == 0.0);
  CHECK(F_integral(NoJumps{}, TestFunction(PhiR{0.3})).value == 0.0);

  const PowerLawSmallJumps pl{0.5, 1.0, 1.0, true};
  const auto f1 = F_integral(pl, TestFunction(PhiR{1.0}));
  REQUIRE(f1.finite());
  CHECK(f1.value == Approx(4.0).epsilon(1e-9));
  CHECK(f1.value == Approx(2.0 * oracle::power_integral(1.0, 0.5, 1.0)).epsilon(1e-8));

  const PowerLawSmallJumps wide{1.2, 0.8, 2.5, true};
  const auto f2 = F_integral(wide, TestFunction(PhiR{1.5}));
  const double expect = 2.0 * 0.8 * (oracle::power_integral(1.5, 1.2, 1.0) + (std::pow(2.5, -1.2) - 1.0) / -1.2);
  CHECK(f2.value == Approx(expect).epsilon(1e-8));

  const auto gauss = F_integral(CompoundPoisson{1.5, GaussianLaw{0.0, 1.0}}, TestFunction(PhiR{2.0}));
  const double g_or =
      1.5 * oracle::normal_expectation([](double x) { return std::min(1.0, x * x); }, 1.0, {1.0});
  CHECK(gauss.value == Approx(g_or).epsilon(1e-9));

  const auto uni = F_integral(CompoundPoisson{1.0, UniformLaw{-2.0, 1.0}}, TestFunction(PowerAbs{1.0}));
  CHECK(uni.value == Approx((2.0 + 0.5) / 3.0).epsilon(1e-10));

  CHECK(F_integral(pl, TestFunction(PhiR{0.5})).status == FStatus::Infinite);
  CHECK(F_integral(pl, TestFunction(PhiR{0.4})).status == FStatus::Infinite);
}

TEST_CASE("tail mass and small moments of the power law") {
  const PowerLawSmallJumps pl{0.8, 1.3, 1.0, true};
  CHECK(tail_mass(pl, 0.1) == Approx(2.0 * 1.3 * (std::pow(0.1, -0.8) - 1.0) / 0.8));
  CHECK(tail_mass(cp_pm(3.0, {{0.5, 0.5}, {2.0, 0.5}}), 1.0) == Approx(1.5));
  CHECK(power_law_small_moment(pl, 0.1, 2.0) == Approx(2.0 * 1.3 * std::pow(0.1, 1.2) / 1.2));
  CHECK(std::isinf(power_law_small_moment(pl, 0.1, 0.8)));
}
