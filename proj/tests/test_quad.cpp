#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "levystore/quad.hpp"

using namespace levystore;
using quad::integrate;
using quad::integrate_semi_infinite;
using quad::QuadOptions;

TEST(Quad, ConstantOnUnitInterval) {
  const auto r = integrate([](double) { return 1.0; }, 0.0, 1.0, 1e-12);
  EXPECT_NEAR(r.value, 1.0, 1e-12);
  EXPECT_GE(r.abs_error_estimate, 0.0);
  EXPECT_GT(r.evaluations, 0u);
}

TEST(Quad, InverseSquareRootWithHint) {
  QuadOptions o;
  o.hints.left_exponent = -0.5;
  const auto r = integrate([](double x) { return 1.0 / std::sqrt(x); }, 0.0, 1.0, 1e-10, o);
  EXPECT_NEAR(r.value, 2.0, 1e-8);
}

TEST(Quad, RegularisedThreeHalvesKernelMatchesSeries) {
  // int_0^1 x^{-3/2} (1 - e^{-x}) dx = sum_k (-1)^{k+1} / (k! (k - 1/2))
  double series = 0.0, fact = 1.0;
  for (int k = 1; k < 30; ++k) {
    fact *= k;
    series += (k % 2 ? 1.0 : -1.0) / (fact * (k - 0.5));
  }
  QuadOptions o;
  o.hints.left_exponent = -0.5;
  const auto r = integrate([](double x) { return -std::expm1(-x) / (x * std::sqrt(x)); }, 0.0, 1.0,
                           1e-11, o);
  EXPECT_NEAR(r.value, series, 1e-9);
}

TEST(Quad, RightEndpointHint) {
  QuadOptions o;
  o.hints.right_exponent = -0.5;
  const auto r = integrate([](double x) { return 1.0 / std::sqrt(1.0 - x); }, 0.0, 1.0, 1e-10, o);
  EXPECT_NEAR(r.value, 2.0, 1e-8);
}

TEST(Quad, BothEndpointHints) {
  QuadOptions o;
  o.hints.left_exponent = -0.5;
  o.hints.right_exponent = -0.5;
  const auto r =
      integrate([](double x) { return 1.0 / std::sqrt(x * (1.0 - x)); }, 0.0, 1.0, 1e-10, o);
  EXPECT_NEAR(r.value, std::numbers::pi, 1e-8);
}

TEST(Quad, SemiInfiniteExponential) {
  const auto r = integrate_semi_infinite([](double x) { return std::exp(-x); }, 0.0, 1e-11,
                                         [](double x) { return std::exp(-x); });
  EXPECT_NEAR(r.value, 1.0, 1e-10);
}

TEST(Quad, SemiInfiniteGaussianMoment) {
  const auto r = integrate_semi_infinite([](double x) { return x * std::exp(-0.5 * x * x); }, 0.0,
                                         1e-11, [](double x) { return std::exp(-0.5 * x * x); });
  EXPECT_NEAR(r.value, 1.0, 1e-10);
}

TEST(Quad, SemiInfiniteAddsTailToError) {
  const double tol = 1e-6;
  const auto r = integrate_semi_infinite([](double x) { return std::exp(-x); }, 0.0, tol,
                                         [](double x) { return std::exp(-x); });
  EXPECT_GT(r.abs_error_estimate, 0.0);
  EXPECT_LT(std::abs(r.value - 1.0), tol);
}

TEST(Quad, TailBoundThatNeverDecaysIsDivergence) {
  EXPECT_THROW(integrate_semi_infinite([](double) { return 1.0; }, 0.0, 1e-6,
                                       [](double) { return 1.0; }),
               NumericalFailure);
}

TEST(Quad, BudgetExhaustionCarriesBestEstimate) {
  QuadOptions o;
  o.max_evaluations = 200;
  try {
    integrate([](double x) { return std::sin(1.0 / x); }, 1e-6, 1.0, 1e-14, o);
    FAIL() << "expected NumericalFailure";
  } catch (const NumericalFailure& e) {
    EXPECT_TRUE(std::isfinite(e.best_estimate()));
  }
}

TEST(Quad, InvalidArguments) {
  auto f = [](double) { return 1.0; };
  EXPECT_THROW(integrate(f, 1.0, 0.0, 1e-8), InvalidParameter);
  EXPECT_THROW(integrate(f, 0.0, 1.0, 0.0), InvalidParameter);
  QuadOptions o;
  o.hints.left_exponent = -1.5;
  EXPECT_THROW(integrate(f, 0.0, 1.0, 1e-8, o), InvalidParameter);
}

TEST(Quad, Additivity) {
  auto f = [](double x) { return std::exp(-x) * std::cos(3.0 * x); };
  const auto ab = integrate(f, 0.0, 2.0, 1e-12);
  const auto ac = integrate(f, 0.0, 0.7, 1e-12);
  const auto cb = integrate(f, 0.7, 2.0, 1e-12);
  EXPECT_NEAR(ac.value + cb.value, ab.value,
              ab.abs_error_estimate + ac.abs_error_estimate + cb.abs_error_estimate + 1e-13);
}

TEST(Quad, Linearity) {
  auto f = [](double x) { return std::log1p(x); };
  auto g = [](double x) { return x * x * std::exp(x); };
  const double F = integrate(f, 0.0, 1.0, 1e-12).value;
  const double G = integrate(g, 0.0, 1.0, 1e-12).value;
  const double H = integrate([&](double x) { return 2.0 * f(x) - 3.0 * g(x); }, 0.0, 1.0, 1e-12).value;
  EXPECT_NEAR(H, 2.0 * F - 3.0 * G, 1e-11);
}

struct ClosedForm {
  std::function<double(double)> f;
  double a, b, exact;
  std::optional<double> left;
};

// Honesty of error estimates on a battery with known values.
TEST(Quad, ErrorEstimatesAreHonest) {
  const double pi = std::numbers::pi;
  const std::vector<ClosedForm> battery = {
      {[](double x) { return x * x; }, 0, 1, 1.0 / 3, {}},
      {[](double x) { return std::exp(x); }, 0, 1, std::exp(1.0) - 1, {}},
      {[](double x) { return std::sin(x); }, 0, pi, 2.0, {}},
      {[](double x) { return 1.0 / (1.0 + x * x); }, 0, 1, pi / 4, {}},
      {[](double x) { return std::log(x); }, 0, 1, -1.0, 0.0},
      {[](double x) { return std::sqrt(x); }, 0, 1, 2.0 / 3, 0.5},
      {[](double x) { return 1.0 / std::sqrt(x); }, 0, 4, 4.0, -0.5},
      {[](double x) { return std::pow(x, -0.9); }, 0, 1, 10.0, -0.9},
      {[](double x) { return std::exp(-x * x); }, -3, 3, std::sqrt(pi) * std::erf(3.0), {}},
      {[](double x) { return std::cos(20 * x); }, 0, 1, std::sin(20.0) / 20, {}},
      {[](double x) { return x * std::exp(-x); }, 0, 10, 1 - 11 * std::exp(-10.0), {}},
      {[](double x) { return 1.0 / x; }, 1, std::exp(2.0), 2.0, {}},
      {[](double x) { return std::abs(x - 0.3); }, 0, 1, 0.5 * (0.09 + 0.49), {}},
      {[](double x) { return std::tanh(x); }, 0, 2, std::log(std::cosh(2.0)), {}},
      {[](double x) { return x * std::log(x); }, 0, 1, -0.25, 1.0},
      {[](double x) { return std::pow(x, 2.5); }, 0, 2, std::pow(2.0, 3.5) / 3.5, 2.5},
      {[](double x) { return std::exp(-1.0 / x) / (x * x); }, 0, 1, std::exp(-1.0), {}},
      {[](double x) { return 1.0 / (1.0 + 25 * x * x); }, -1, 1, 0.4 * std::atan(5.0), {}},
      {[](double x) { return std::sin(x) * std::sin(x); }, 0, 2 * pi, pi, {}},
      {[](double x) { return std::sqrt(1 - x * x); }, -1, 1, pi / 2, {}},
  };
  int honest = 0, total = 0;
  for (const auto& c : battery) {
    for (double tol : {1e-6, 1e-10}) {
      QuadOptions o;
      if (c.left) o.hints.left_exponent = *c.left;
      const auto r = integrate(c.f, c.a, c.b, tol, o);
      const double err = std::abs(r.value - c.exact);
      ++total;
      if (err <= std::max(r.abs_error_estimate, 1e-15)) ++honest;
      EXPECT_LE(err, 10.0 * std::max(r.abs_error_estimate, 1e-15) + 1e-14)
          << "battery item with exact " << c.exact;
      EXPECT_LE(err, std::max(tol, r.abs_error_estimate) + 1e-14);
    }
  }
  EXPECT_GE(honest, static_cast<int>(std::ceil(0.95 * total)));
}
