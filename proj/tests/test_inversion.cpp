#include <cmath>
#include <complex>

#include <boost/math/special_functions/erf.hpp>
#include <gtest/gtest.h>

#include "levystore/laplace_inversion.hpp"

using namespace levystore;
using cplx = std::complex<double>;

TEST(Inversion, Exponential) {
  for (double t : {0.1, 1.0, 5.0}) {
    const auto r = euler_invert([](cplx s) { return 1.0 / (s + 1.0); }, t);
    EXPECT_NEAR(r.value, std::exp(-t), 1e-8) << t;
    EXPECT_LE(std::abs(r.value - std::exp(-t)), std::max(10 * r.error_estimate, 1e-12));
  }
}

TEST(Inversion, RampAndStep) {
  EXPECT_NEAR(euler_invert([](cplx s) { return 1.0 / (s * s); }, 2.0).value, 2.0, 1e-7);
  EXPECT_NEAR(euler_invert([](cplx s) { return 1.0 / s; }, 0.7).value, 1.0, 1e-8);
}

TEST(Inversion, SquareRootKernel) {
  // L[erfc(1 / (2 sqrt t))] = e^{-sqrt s} / s
  const double t = 0.8;
  const auto r = euler_invert([](cplx s) { return std::exp(-std::sqrt(s)) / s; }, t);
  EXPECT_NEAR(r.value, std::erfc(0.5 / std::sqrt(t)), 1e-8);
}

TEST(Inversion, ComplexValued) {
  // L[e^{i t}] = 1 / (s - i)
  const double t = 1.3;
  const auto r = euler_invert_complex([](cplx s) { return 1.0 / (s - cplx(0, 1)); }, t);
  EXPECT_NEAR(r.value.real(), std::cos(t), 1e-8);
  EXPECT_NEAR(r.value.imag(), std::sin(t), 1e-8);
}

TEST(Inversion, MoreTermsImproveDiscontinuousTarget) {
  // Unit step at t = 1: e^{-s} / s, evaluated away from the jump.
  auto F = [](cplx s) { return std::exp(-s) / s; };
  const double coarse = std::abs(euler_invert(F, 1.5, {20, 15, 8}).value - 1.0);
  const double fine = std::abs(euler_invert(F, 1.5, {20, 200, 40}).value - 1.0);
  EXPECT_LT(fine, coarse);
}

TEST(Inversion, InvalidArguments) {
  auto F = [](cplx s) { return 1.0 / s; };
  EXPECT_THROW(euler_invert(F, 0.0), InvalidParameter);
  EXPECT_THROW(euler_invert(F, 1.0, {0.0, 10, 5}), InvalidParameter);
  EXPECT_THROW(euler_invert(F, 1.0, {20.0, 0, 5}), InvalidParameter);
}

TEST(Inversion, NonFiniteTransformIsNumericalFailure) {
  EXPECT_THROW(euler_invert([](cplx) { return cplx(std::nan(""), 0.0); }, 1.0), NumericalFailure);
}
