#pragma once

// Marginal laws of X(s): densities f(x, s) and distribution functions
// P(X(s) <= x) for every model family.

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/math/special_functions/gamma.hpp>

#include "levystore/error.hpp"
#include "levystore/models.hpp"
#include "levystore/quad.hpp"
#include "levystore/stable.hpp"

namespace levystore {

// Affine map X(s) = scale * Z + location onto the standard law of stable.hpp.
struct StableScaling {
  double alpha;
  double scale;
  double location;
};

// alpha > 1: log E e^{i t X(s)} = s c (-it)^alpha, i.e. S1 scale
//            (s c |cos(pi alpha / 2)|)^{1/alpha}, location 0.
// alpha = 1: log E e^{i t X(s)} = s sigma (-(pi/2)|t| - i t log|t|), i.e. S1
//            scale g = s sigma pi / 2; X = g Z + (2/pi) g log g.
inline StableScaling stable_scaling(double alpha, double sigma, double s) {
  if (alpha == 1.0) {
    const double g = s * sigma * std::numbers::pi / 2.0;
    return {alpha, g, 2.0 / std::numbers::pi * g * std::log(g)};
  }
  const double c = stable_constant(alpha, sigma);
  return {alpha, std::pow(s * c * std::abs(std::cos(std::numbers::pi * alpha / 2.0)), 1.0 / alpha),
          0.0};
}

namespace detail {

inline void require_time(double s) {
  if (!(s > 0.0) || !std::isfinite(s)) throw InvalidParameter("s", "time must be > 0");
}

inline double log_erfc(double z) {
  if (z < 25.0) return std::log(std::erfc(z));
  const double z2 = z * z;
  return -z2 - std::log(z * std::sqrt(std::numbers::pi)) +
         std::log1p(-0.5 / z2 + 0.75 / (z2 * z2) - 1.875 / (z2 * z2 * z2));
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

// kappa_S(lambda) and kappa_S'(lambda) of the untempered stable law: the
// tempered law at time s is the e^{-lambda x} tilt of the stable law shifted
// by m = s kappa_S'(lambda).
inline std::pair<double, double> stable_tilt(const TemperedStableParams& p) {
  if (p.alpha == 1.0) {
    return {p.sigma * p.lambda * std::log(p.lambda), p.sigma * (std::log(p.lambda) + 1.0)};
  }
  const double c = stable_constant(p.alpha, p.sigma);
  return {c * std::pow(p.lambda, p.alpha), c * p.alpha * std::pow(p.lambda, p.alpha - 1.0)};
}

// Smallest theta > 0 (on a doubling grid) with Re(s kappa(-i theta)) < -45.
inline double char_fn_cutoff(const LevyModel& m, double s) {
  double theta = 1.0;
  for (int i = 0; i < 200; ++i) {
    if ((s * log_laplace(m, cplx(0.0, -theta))).real() < -45.0) return theta;
    theta *= 2.0;
  }
  throw NumericalFailure("characteristic function does not decay; Fourier inversion unavailable");
}

inline unsigned fourier_pieces(const LevyModel& m, double s, double x, double cutoff) {
  const double phase = std::abs((s * log_laplace(m, cplx(0.0, -cutoff))).imag()) +
                       cutoff * std::abs(x);
  return static_cast<unsigned>(std::clamp(phase / std::numbers::pi + 8.0, 8.0, 20000.0));
}

inline void require_fourier_family(const LevyModel& m) {
  const auto f = m.family();
  if (f != Family::Stable && f != Family::TemperedStable && f != Family::InverseGaussian) {
    throw UnsupportedError(std::string("Fourier inversion is not available for the ") +
                           to_string(f) + " family");
  }
}

}  // namespace detail

// Density of X(s) by inversion of the characteristic function
// exp(s kappa(-i theta)).  Independent of the Zolotarev route.
inline double density_fourier(const LevyModel& m, double x, double s, double tol = 1e-13) {
  detail::require_time(s);
  detail::require_fourier_family(m);
  const double cutoff = detail::char_fn_cutoff(m, s);
  auto integrand = [&](double theta) {
    return std::exp(s * log_laplace(m, cplx(0.0, -theta)) - cplx(0.0, theta * x)).real();
  };
  quad::QuadOptions opts;
  opts.initial_pieces = detail::fourier_pieces(m, s, x, cutoff);
  opts.max_evaluations = 2'000'000;
  return quad::integrate(integrand, 0.0, cutoff, std::numbers::pi * tol, opts).value /
         std::numbers::pi;
}

// Gil-Pelaez inversion: F(x) = 1/2 - (1/pi) int_0^inf Im[e^{-i theta x} phi(theta)] / theta.
inline double cdf_fourier(const LevyModel& m, double x, double s, double tol = 1e-12) {
  detail::require_time(s);
  detail::require_fourier_family(m);
  const double cutoff = detail::char_fn_cutoff(m, s);
  auto integrand = [&](double theta) {
    if (theta == 0.0) return 0.0;
    const cplx v = std::exp(s * log_laplace(m, cplx(0.0, -theta)) - cplx(0.0, theta * x));
    return v.imag() / theta;
  };
  quad::QuadOptions opts;
  opts.initial_pieces = detail::fourier_pieces(m, s, x, cutoff);
  opts.max_evaluations = 2'000'000;
  const double v = quad::integrate(integrand, 0.0, cutoff, std::numbers::pi * tol, opts).value;
  return std::clamp(0.5 - v / std::numbers::pi, 0.0, 1.0);
}

// f(x, s), the density of X(s).  Gamma and inverse Gaussian in closed form;
// the stable families through the Zolotarev integral (tempered via the
// exponential tilt of the stable density).
inline double density(const LevyModel& m, double x, double s) {
  detail::require_time(s);
  return std::visit(
      [&](const auto& p) -> double {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, GammaParams>) {
          if (x <= 0.0) return 0.0;
          const double shape = p.a * s;
          return std::exp((shape - 1.0) * std::log(x) - x / p.b - std::lgamma(shape) -
                          shape * std::log(p.b));
        } else if constexpr (std::is_same_v<T, InverseGaussianParams>) {
          if (x <= 0.0) return 0.0;
          const double ds = p.delta * s;
          return std::exp(std::log(ds) + p.gamma * ds - 0.5 * std::log(2.0 * std::numbers::pi) -
                          1.5 * std::log(x) - 0.5 * (ds * ds / x + p.gamma * p.gamma * x));
        } else if constexpr (std::is_same_v<T, StableParams>) {
          const auto sc = stable_scaling(p.alpha, p.sigma, s);
          return stable::density(p.alpha, (x - sc.location) / sc.scale) / sc.scale;
        } else if constexpr (std::is_same_v<T, TemperedStableParams>) {
          const auto [kappa, kappa_prime] = detail::stable_tilt(p);
          const double shift = s * kappa_prime;
          const auto sc = stable_scaling(p.alpha, p.sigma, s);
          const double y = x - shift;
          const double fs = stable::density(p.alpha, (y - sc.location) / sc.scale) / sc.scale;
          if (fs == 0.0) return 0.0;
          return std::exp(-p.lambda * y - s * kappa) * fs;
        } else {
          throw UnsupportedError(std::string("no density: the law of X(s) for the ") +
                                 to_string(Family{m.family()}) +
                                 " family is not absolutely continuous");
        }
      },
      m.params());
}

// Checked stable density: Zolotarev integral and Fourier inversion must agree
// within tol, otherwise NumericalFailure.  Returns the Zolotarev value.
inline double stable_density(double alpha, double sigma, double x, double s, double tol = 1e-7) {
  const auto m = LevyModel::stable(alpha, sigma);
  const double primary = density(m, x, s);
  const double secondary = density_fourier(m, x, s);
  if (!(std::abs(primary - secondary) <= tol)) {
    throw NumericalFailure("stable density methods disagree at x = " + std::to_string(x) +
                               " (|diff| = " + std::to_string(std::abs(primary - secondary)) + ")",
                           primary, tol);
  }
  return primary;
}

// P(X(s) <= x).
inline double cdf(const LevyModel& m, double x, double s) {
  detail::require_time(s);
  if (x == std::numeric_limits<double>::infinity()) return 1.0;
  if (x == -std::numeric_limits<double>::infinity()) return 0.0;
  return std::visit(
      [&](const auto& p) -> double {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, GammaParams>) {
          if (x <= 0.0) return 0.0;
          return boost::math::gamma_p(p.a * s, x / p.b);
        } else if constexpr (std::is_same_v<T, InverseGaussianParams>) {
          if (x <= 0.0) return 0.0;
          const double mu = p.delta * s / p.gamma;
          const double lam = p.delta * p.delta * s * s;
          const double r = std::sqrt(lam / x);
          const double first = detail::normal_cdf(r * (x / mu - 1.0));
          const double z = r * (x / mu + 1.0) / std::numbers::sqrt2;
          const double second =
              std::exp(2.0 * lam / mu + std::log(0.5) + detail::log_erfc(z));
          return std::min(1.0, first + second);
        } else if constexpr (std::is_same_v<T, StableParams>) {
          const auto sc = stable_scaling(p.alpha, p.sigma, s);
          return stable::cdf(p.alpha, (x - sc.location) / sc.scale);
        } else if constexpr (std::is_same_v<T, TemperedStableParams>) {
          return cdf_fourier(m, x, s);
        } else if constexpr (std::is_same_v<T, CompoundPoissonExpParams>) {
          if (x < 0.0) return 0.0;
          const double mean_count = p.rate * s;
          double weight = std::exp(-mean_count);
          double total = weight;
          double mass = weight;
          for (int n = 1; n < 100000; ++n) {
            weight *= mean_count / n;
            mass += weight;
            if (x > 0.0) total += weight * boost::math::gamma_p(n, x / p.mean_jump);
            if (n > mean_count && 1.0 - mass < 1e-17) break;
          }
          return std::min(1.0, total);
        } else {
          return x >= 0.0 ? 1.0 : 0.0;
        }
      },
      m.params());
}

}  // namespace levystore
