#pragma once

// Totally skewed (beta = +1) stable laws in the S1 parametrisation, unit
// scale and zero location:
//   log E exp(i t Z) = -|t|^alpha (1 - i tan(pi alpha / 2) sgn t)      alpha != 1
//   log E exp(i t Z) = -|t| (1 + i (2/pi) sgn t log|t|)                 alpha == 1
// Densities and distribution functions come from Zolotarev's integral
// representation in the form given by Nolan (1997); alpha == 2 is the
// Gaussian reference N(0, 2).

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "levystore/error.hpp"
#include "levystore/quad.hpp"

namespace levystore::stable {

namespace detail {

inline constexpr double pi = std::numbers::pi;

// Integrand pieces for alpha != 1, skewness beta = +-1, evaluated at
// phi = theta + theta0 in (0, span) with span = pi/2 + theta0.
struct ZolotarevKernel {
  double alpha;
  double theta0;
  double span;
  double log_prefactor;  // log(cos(alpha theta0)) / (alpha - 1)
  double log_x_power;    // (alpha / (alpha - 1)) log x
  bool negative_skew;

  ZolotarevKernel(double alpha_, double beta, double x) : alpha(alpha_), negative_skew(beta < 0) {
    theta0 = std::atan(beta * std::tan(pi * alpha / 2.0)) / alpha;
    span = pi / 2.0 + theta0;
    log_prefactor = std::log(std::cos(alpha * theta0)) / (alpha - 1.0);
    log_x_power = alpha / (alpha - 1.0) * std::log(x);
  }

  // log g(theta) with g = x^{alpha/(alpha-1)} V(theta).
  double log_g(double phi) const {
    const double to_upper = span - phi;  // pi/2 - theta
    const double cos_theta = std::sin(to_upper);
    const double e = alpha / (alpha - 1.0);
    // cos(alpha theta0 + (alpha - 1) theta); for beta = -1 the argument is
    // exactly pi/2 - (alpha - 1)(pi/2 - theta).
    const double d = (alpha - 1.0) * to_upper;
    const double last = negative_skew
                            ? std::sin(d)
                            : std::cos(alpha * theta0 + (alpha - 1.0) * (pi / 2.0) - d);
    return log_x_power + log_prefactor + (e - 1.0) * std::log(cos_theta) -
           e * std::log(std::sin(alpha * phi)) + std::log(std::max(last, 0.0));
  }
};

// alpha == 1, beta = +1, phi = theta + pi/2 in (0, pi).
struct CauchyLikeKernel {
  double shift;  // -pi x / 2
  explicit CauchyLikeKernel(double x) : shift(-pi * x / 2.0) {}
  double log_g(double phi) const {
    const double s = std::sin(phi);
    return shift + std::log(2.0 / pi) + std::log(phi) - std::log(s) - phi * std::cos(phi) / s;
  }
};

// Locate where log g crosses level on (lo, hi); log g is monotone on the range.
template <class Kernel>
double crossing(const Kernel& k, double lo, double hi, double level = 0.0) {
  const double flo = k.log_g(lo + 1e-15 * (hi - lo)) - level;
  const double fhi = k.log_g(hi - 1e-15 * (hi - lo)) - level;
  if (!std::isfinite(flo) && !std::isfinite(fhi)) return 0.5 * (lo + hi);
  if (flo > 0.0 && fhi > 0.0) return flo < fhi ? lo : hi;
  if (flo < 0.0 && fhi < 0.0) return flo > fhi ? lo : hi;
  const bool increasing = fhi > flo;
  double a = lo, b = hi;
  for (int i = 0; i < 200 && b - a > 1e-15 * (hi - lo); ++i) {
    const double m = 0.5 * (a + b);
    const double v = k.log_g(m) - level;
    if ((v < 0.0) == increasing) a = m; else b = m;
  }
  return 0.5 * (a + b);
}

inline double g_exp_minus_g(double log_g) {
  if (log_g > 700.0) return 0.0;
  const double g = std::exp(log_g);
  return std::exp(log_g - g);
}

inline double exp_minus_g(double log_g) {
  if (log_g > 700.0) return 0.0;
  return std::exp(-std::exp(log_g));
}

template <class Kernel, class Integrand>
double split_integral(const Kernel& k, Integrand h, double lo, double hi, double tol) {
  // Breakpoints at fixed levels of log g keep a narrow peak visible.
  std::vector<double> cuts = {lo, hi};
  for (double level : {-40.0, -20.0, -8.0, -3.0, -1.0, 0.0, 1.0, 2.0, 3.0, 4.0}) {
    cuts.push_back(crossing(k, lo, hi, level));
  }
  std::sort(cuts.begin(), cuts.end());
  quad::QuadOptions opts;
  opts.rel_tol = 1e-14;
  opts.max_evaluations = 200'000;
  auto f = [&](double phi) { return h(k.log_g(phi)); };
  const double piece_tol = tol / static_cast<double>(cuts.size());
  double total = 0.0;
  for (std::size_t i = 1; i < cuts.size(); ++i) {
    if (cuts[i] > cuts[i - 1]) total += quad::integrate(f, cuts[i - 1], cuts[i], piece_tol, opts).value;
  }
  return total;
}

inline void check_alpha(double alpha) {
  if (!(alpha >= 1.0 && alpha <= 2.0)) {
    throw InvalidParameter("alpha", "standard stable law needs alpha in [1, 2]");
  }
}

}  // namespace detail

// Density of the standard spectrally positive stable law at x.
inline double density(double alpha, double x, double tol = 1e-13) {
  using detail::pi;
  detail::check_alpha(alpha);
  if (alpha == 2.0) return std::exp(-x * x / 4.0) / std::sqrt(4.0 * pi);
  if (alpha == 1.0) {
    const detail::CauchyLikeKernel k(x);
    return 0.5 * detail::split_integral(k, detail::g_exp_minus_g, 0.0, pi, 2.0 * tol);
  }
  if (x == 0.0) {
    const double zeta = -std::tan(pi * alpha / 2.0);
    const double theta0 = std::atan(-zeta) / alpha;
    return std::tgamma(1.0 + 1.0 / alpha) * std::cos(theta0) /
           (pi * std::pow(1.0 + zeta * zeta, 1.0 / (2.0 * alpha)));
  }
  // f(x; alpha, +1) = f(-x; alpha, -1) for x < 0.
  const double beta = x > 0.0 ? 1.0 : -1.0;
  const double ax = std::abs(x);
  const detail::ZolotarevKernel k(alpha, beta, ax);
  const double scale = alpha / (pi * (alpha - 1.0) * ax);
  const double integral =
      detail::split_integral(k, detail::g_exp_minus_g, 0.0, k.span, tol / scale);
  return scale * integral;
}

// Distribution function P(Z <= x) of the standard spectrally positive law.
inline double cdf(double alpha, double x, double tol = 1e-13) {
  using detail::pi;
  detail::check_alpha(alpha);
  if (alpha == 2.0) return 0.5 * std::erfc(-x / 2.0);
  if (alpha == 1.0) {
    const detail::CauchyLikeKernel k(x);
    return detail::split_integral(k, detail::exp_minus_g, 0.0, pi, pi * tol) / pi;
  }
  if (x == 0.0) {
    const double theta0 = std::atan(std::tan(pi * alpha / 2.0)) / alpha;
    return (pi / 2.0 - theta0) / pi;
  }
  const double beta = x > 0.0 ? 1.0 : -1.0;
  const detail::ZolotarevKernel k(alpha, beta, std::abs(x));
  const double tail = detail::split_integral(k, detail::exp_minus_g, 0.0, k.span, pi * tol) / pi;
  // x > 0: F = 1 - tail;  x < 0: F(x; +1) = 1 - F(|x|; -1) = tail.
  return x > 0.0 ? 1.0 - tail : tail;
}

}  // namespace levystore::stable
