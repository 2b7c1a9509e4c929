#include <catch_amalgamated.hpp>

#include <algorithm>
#include <random>
#include <sstream>

#include "levyvar/variation_stats.hpp"

using namespace levyvar;
using Catch::Approx;

namespace {

IncrementPath manual(std::vector<double> incs, double delta) {
  IncrementPath p;
  p.grid = SamplingGrid(delta, incs.size());
  p.increments = std::move(incs);
  p.gauss_part.assign(p.increments.size(), 0.0);
  p.small_jump_part.assign(p.increments.size(), 0.0);
  return p;
}

bool rel_close(double a, double b, double rel = 1e-12) {
  return std::abs(a - b) <= rel * std::max({std::abs(a), std::abs(b), 1e-300});
}

const LevyCharacteristics kModel(0.1, 1.0, CompoundPoisson{2.0, GaussianLaw{0.0, 0.8}});

}  // namespace

TEST_CASE("v_n partial sums") {
  const auto p = manual({1.0, -2.0, 3.0}, 0.1);
  const auto s = v_n(p, TestFunction(PowerAbs{2.0}));
  CHECK(s.value_at(0.3) == 14.0);
  CHECK(s.value_at(0.25) == 5.0);
  CHECK(s.value_at(0.05) == 0.0);
  CHECK(v_n(p, TestFunction(TruncatedPower{2.0, 2.0})).value_at(0.3) == 5.0);
  CHECK(s.times.size() == 3);
  CHECK(s.kind == SeriesKind::Vn);
}

TEST_CASE("v_prime_n rescales increments") {
  const auto p = manual({0.2}, 0.04);
  CHECK(v_prime_n(p, TestFunction(PowerAbs{1.0})).terminal() == Approx(1.0).epsilon(1e-15));
  const auto z = manual(std::vector<double>(50, 0.0), 0.02);
  CHECK(v_prime_n(z, TestFunction(PhiR{0.0})).terminal() == 50.0);
  CHECK(v_prime_n(z, TestFunction(PhiR{1.0})).terminal() == 0.0);
}

TEST_CASE("bar versions are indexed by [n t]") {
  const auto p = manual({1.0, 2.0, 3.0, 4.0}, 0.5);
  const TestFunction id(PowerAbs{1.0});
  const auto b = v_bar_n(p, id, 4);
  CHECK(b.value_at(0.5) == 3.0);
  CHECK(b.value_at(0.0) == 0.0);
  CHECK(b.value_at(1.0) == v_n(p, id).value_at(p.grid.horizon()));
}

TEST_CASE("realized variation entry points") {
  const auto p = sample_path(kModel, SamplingGrid::for_horizon(1.0, 1e-3), {1, 0});
  CHECK(pi_n(p, 1.5).values == v_n(p, TestFunction(PowerAbs{1.5})).values);
  CHECK(pi_n_trunc(p, 1.5, std::numeric_limits<double>::infinity()).values == pi_n(p, 1.5).values);
  double prev = -1.0;
  for (double a : {0.01, 0.05, 0.1, 0.5, 1.0, 5.0}) {
    const double v = pi_n_trunc(p, 1.5, a).terminal();
    CHECK(v >= prev);
    prev = v;
  }
  CHECK_THROWS_AS(pi_n(p, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(pi_n_trunc(p, 1.0, 0.0), std::invalid_argument);
}

TEST_CASE("exact identities over random paths") {
  for (std::uint32_t r = 0; r < 100; ++r) {
    const double delta = 1.0 / (200 + 13 * r);
    const auto grid = SamplingGrid(delta, 200 + 13 * r);
    const auto p = sample_path(kModel, grid, {404, r});
    const double rr = 0.5 + 0.02 * r;
    const double a = 0.5 + 0.05 * r;
    const auto lhs = pi_n_trunc(p, rr, a * std::sqrt(delta));
    const auto rhs = v_prime_n(p, TestFunction(TruncatedPower{rr, a}));
    for (std::size_t i = 0; i < lhs.size(); ++i)
      REQUIRE(rel_close(lhs.values[i], std::pow(delta, rr / 2.0) * rhs.values[i]));
    const TestFunction f(PhiR{rr});
    CHECK(rel_close(v_bar_n(p, f).value_at(1.0), v_n(p, f).value_at(grid.horizon())));
    const auto s = v_n(p, f);
    for (std::size_t i = 1; i < s.size(); ++i) REQUIRE(s.values[i] >= s.values[i - 1]);
  }
}

TEST_CASE("terminal value depends only on the increment multiset") {
  auto p = sample_path(kModel, SamplingGrid::for_horizon(1.0, 1e-3), {9, 1});
  const TestFunction f(PhiR{0.7});
  const double before = v_n(p, f).terminal();
  std::mt19937_64 gen(5);
  std::shuffle(p.increments.begin(), p.increments.end(), gen);
  CHECK(rel_close(v_n(p, f).terminal(), before, 1e-13));
}

TEST_CASE("power variation scales homogeneously") {
  const auto p = sample_path(kModel, SamplingGrid::for_horizon(1.0, 1e-3), {9, 2});
  auto q = p;
  const double lam = -2.5;
  for (auto& x : q.increments) x *= lam;
  for (double r : {0.5, 1.0, 2.0, 3.0})
    CHECK(rel_close(pi_n(q, r).terminal(), std::pow(std::abs(lam), r) * pi_n(p, r).terminal(), 1e-12));
}

TEST_CASE("partial sums are additive") {
  const auto p = sample_path(kModel, SamplingGrid::for_horizon(1.0, 1e-3), {9, 3});
  const TestFunction f(PhiR{1.0});
  const auto s = v_n(p, f);
  auto first = p;
  first.increments.resize(400);
  first.grid = SamplingGrid(p.grid.delta, 400);
  auto second = p;
  second.increments.erase(second.increments.begin(), second.increments.begin() + 400);
  second.grid = SamplingGrid(p.grid.delta, 600);
  CHECK(rel_close(v_n(first, f).terminal() + v_n(second, f).terminal(), s.terminal(), 1e-13));
}

TEST_CASE("discretization") {
  const SamplingGrid grid(0.5, 4);
  const auto id = discretize([](double t) { return t; }, grid);
  CHECK(id.value_at(0.7) == 0.5);
  CHECK(id.value_at(1.0) == 1.0);
  CHECK(id.value_at(0.4) == 0.0);

  const LevyCharacteristics cp(0.0, 1.0, CompoundPoisson{1.0, PointMasses{{{1.0, 1.0}}}});
  const auto p = path_with_jumps(cp, grid, {{0.3, 1.0}, {1.2, 1.0}}, {1, 0});
  const auto jf = discretized_jump_functional(p, TestFunction(PowerAbs{2.0}));
  CHECK(jf.value_at(0.4) == 0.0);
  CHECK(jf.value_at(0.5) == 1.0);
  CHECK(jf.value_at(1.49) == 1.0);
  CHECK(jf.value_at(1.5) == 2.0);
  const auto with_slope = discretized_jump_functional(p, TestFunction(PowerAbs{2.0}), 2.0);
  CHECK(with_slope.value_at(0.7) == Approx(1.0 + 2.0 * 0.5));
}

TEST_CASE("center and scale") {
  const LevyCharacteristics bm(0.0, 1.0);
  const auto grid = SamplingGrid::for_horizon(1.0, 1e-3);
  const auto p = sample_path(bm, grid, {3, 3});

  SECTION("r = 2 normalized LLN is a passthrough") {
    const TestFunction f(PowerAbs{2.0});
    const auto v = *classify_label(bm, f, {}, "T2_2i");
    const auto s = v_n(p, f);
    const auto t = center_and_scale(s, v);
    CHECK(t.values == s.values);
  }
  SECTION("r = 1 multiplies by sqrt(delta)") {
    const TestFunction f(PowerAbs{1.0});
    const auto v = *classify_label(bm, f, {}, "T2_2i");
    const auto s = v_n(p, f);
    const auto t = center_and_scale(s, v);
    CHECK(t.terminal() == Approx(std::sqrt(1e-3) * s.terminal()).epsilon(1e-14));
    CHECK(v.limit.value == Approx(abs_normal_moment(1.0)));
  }
  SECTION("H-centered CLT needs the centering estimate") {
    const TestFunction f(PowerAbs{0.5});
    const auto v = *classify_label(bm, f, {Query{HorizonMode::FixedHorizon, Functional::V, Order::CLT}}, "T2_5i1");
    const auto s = v_n(p, f);
    CHECK_THROWS_AS(center_and_scale(s, v), std::invalid_argument);
    const double H = 0.123;
    const auto t = center_and_scale(s, v, {.h_center = H});
    const double d = 1e-3;
    CHECK(t.terminal() ==
          Approx((std::pow(d, 0.75) * s.terminal() - std::pow(d, -0.25) * H) / std::sqrt(d)).epsilon(1e-12));
  }
  SECTION("Gamma normalization makes i.i.d. sums unit-variance per unit time") {
    const LevyCharacteristics pl(0.0, 0.0, PowerLawSmallJumps{1.1, 1.0, 1.0, true});
    const TestFunction f(PhiR{0.5});
    const auto v = classify(pl, f, {HorizonMode::FixedHorizon, Functional::V, Order::CLT});
    REQUIRE(v.theorem == Theorem::T2_4i);
    const auto q = sample_path(pl, grid, {5, 5});
    const auto s = v_n(q, f);
    const double H = 0.05;
    const double G = 0.02;
    CHECK_THROWS_AS(center_and_scale(s, v, {.h_center = H}), std::invalid_argument);
    const auto t = center_and_scale(s, v, {.h_center = H, .gamma = G});
    CHECK(t.terminal() == Approx(std::sqrt(1e-3 / G) * (s.terminal() - H / 1e-3)).epsilon(1e-12));
  }
  SECTION("conditional CLT subtracts the discretized jump functional") {
    const LevyCharacteristics cp(0.0, 1.0, CompoundPoisson{1.0, PointMasses{{{1.0, 1.0}}}});
    const auto q = path_with_jumps(cp, grid, {{0.25, 1.0}}, {4, 4});
    const TestFunction f(SquareNearZero{2.0});
    const auto v = classify(cp, f, {HorizonMode::FixedHorizon, Functional::V, Order::CLT});
    REQUIRE(v.theorem == Theorem::T2_6c);
    const auto s = v_n(q, f);
    CHECK_THROWS_AS(center_and_scale(s, v), std::invalid_argument);
    const auto jf = discretized_jump_functional(q, f);
    const auto t = center_and_scale(s, v, {.jump_process = jf});
    CHECK(t.terminal() == Approx((s.terminal() - 1.0 - 1.0) / std::sqrt(1e-3)).epsilon(1e-12));
  }
}

TEST_CASE("csv export") {
  const auto p = manual({1.0, -2.0}, 0.5);
  std::ostringstream os;
  write_csv(os, v_n(p, TestFunction(PowerAbs{2.0})));
  CHECK(os.str() == "time,value\n0.5,1\n1,5\n");
}
