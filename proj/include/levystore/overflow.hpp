#pragma once

// Overflow probabilities P(Z(t) > u) of the storage model (spectrally
// positive input X, unit linear outflow, empty at time 0) through the
// Takacs-type decomposition
//   P(Z(t) > u) = P(X(t) - t > u) + int_0^t f(u+s, s) J(t-s) / (t-s) ds,
// with J(r) = int_0^r P(X(r) <= x) dx for finite variation and
//      J(r) = int_{-inf}^r P(X(r) <= x) dx for infinite variation.

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/math/special_functions/gamma.hpp>

#include "levystore/distributions.hpp"
#include "levystore/error.hpp"
#include "levystore/models.hpp"
#include "levystore/quad.hpp"

namespace levystore {

enum class OverflowMethod { TakacsFinite, TakacsInfinite, GammaClosedForm, IGClosedForm };

inline const char* to_string(OverflowMethod m) {
  switch (m) {
    case OverflowMethod::TakacsFinite: return "takacs_finite";
    case OverflowMethod::TakacsInfinite: return "takacs_infinite";
    case OverflowMethod::GammaClosedForm: return "gamma_closed_form";
    case OverflowMethod::IGClosedForm: return "ig_closed_form";
  }
  return "?";
}

struct OverflowQuery {
  LevyModel model;
  double t;
  double u;
};

struct OverflowResult {
  double probability;
  double abs_error_estimate;
  OverflowMethod method;
};

struct OverflowOptions {
  double tol = 1e-9;
  double tail_eps = 1e-10;  // CDF level at which the (-inf, r] integral is cut
};

namespace detail {

inline void validate(const OverflowQuery& q) {
  if (q.model.orientation() != Orientation::Storage) {
    throw InvalidParameter("orientation", "overflow at fixed t is defined for the storage model");
  }
  if (!(q.t > 0.0) || !std::isfinite(q.t)) throw InvalidParameter("t", "horizon must be > 0");
  if (!(q.u >= 0.0) || !std::isfinite(q.u)) throw InvalidParameter("u", "threshold must be >= 0");
}

inline OverflowResult finish(double value, double error, OverflowMethod method) {
  const double slack = error + 1e-12;
  if (!(value >= -slack && value <= 1.0 + slack)) {
    throw NumericalFailure("overflow probability " + std::to_string(value) +
                               " outside [0, 1] beyond its error estimate",
                           value, error);
  }
  return {std::clamp(value, 0.0, 1.0), error, method};
}

// Right-endpoint behaviour of J(r)/r as r -> 0 for infinite variation:
// J(r) ~ r^{1/alpha}.
inline double takacs_right_exponent(const LevyModel& m) {
  const double a = m.alpha();
  return a == 1.0 ? -0.05 : 1.0 / a - 1.0;
}

}  // namespace detail

// P(Z(t) > 0) = 1 - (1/t) int_0^t P(X(t) <= x) dx under finite variation,
// and exactly 1 under infinite variation.
inline double prob_busy(const LevyModel& model, double t, double tol = 1e-11) {
  if (model.orientation() != Orientation::Storage) {
    throw InvalidParameter("orientation", "prob_busy is defined for the storage model");
  }
  if (!(t > 0.0)) throw InvalidParameter("t", "horizon must be > 0");
  if (!model.has_finite_variation()) return 1.0;
  if (model.family() == Family::Degenerate) return 0.0;
  auto integrand = [&](double x) { return cdf(model, x, t); };
  const auto r = quad::integrate(integrand, 0.0, t, tol * t);
  return std::clamp(1.0 - r.value / t, 0.0, 1.0);
}

// Finite-variation branch.  The kernel is written as
//   f(u+s, s) * mean_{v in (0,1)} P(X(r) <= r v),  r = t - s,
// which stays bounded as s -> t.
inline OverflowResult overflow_finite_variation(const OverflowQuery& q,
                                                const OverflowOptions& opts = {}) {
  detail::validate(q);
  const auto& m = q.model;
  if (!m.has_finite_variation()) {
    throw UnsupportedError(std::string("the ") + to_string(m.family()) +
                           " model has infinite variation; use overflow_infinite_variation");
  }
  if (m.family() == Family::Degenerate) return {0.0, 0.0, OverflowMethod::TakacsFinite};
  if (m.family() == Family::CompoundPoissonExp) {
    throw UnsupportedError(
        "compound Poisson input has an atom at 0 and no density; estimate by Monte Carlo");
  }
  if (q.u == 0.0) return {prob_busy(m, q.t, opts.tol), opts.tol, OverflowMethod::TakacsFinite};

  const double t = q.t, u = q.u;
  const double first = 1.0 - cdf(m, u + t, t);
  double inner_error = 0.0;
  double density_max = 0.0;
  auto mean_cdf = [&](double r) {
    auto g = [&](double v) { return cdf(m, r * v, r); };
    const auto res = quad::integrate(g, 0.0, 1.0, 0.01 * opts.tol);
    inner_error = std::max(inner_error, res.abs_error_estimate);
    return res.value;
  };
  auto outer = [&](double s) {
    const double f = density(m, u + s, s);
    density_max = std::max(density_max, f);
    if (f == 0.0) return 0.0;
    return f * mean_cdf(t - s);
  };
  quad::QuadOptions oo;
  oo.rel_tol = 1e-12;
  const auto res = quad::integrate(outer, 0.0, t, 0.5 * opts.tol, oo);
  const double err = res.abs_error_estimate + t * density_max * inner_error;
  return detail::finish(first + res.value, err, OverflowMethod::TakacsFinite);
}

// Infinite-variation branch (stable and tempered stable input).  The inner
// integral over (-inf, r] is cut where the CDF falls below tail_eps; the
// discarded mass bound is added to the error estimate.
inline OverflowResult overflow_infinite_variation(const OverflowQuery& q,
                                                  const OverflowOptions& opts = {}) {
  detail::validate(q);
  const auto& m = q.model;
  if (m.has_finite_variation()) {
    throw UnsupportedError(std::string("the ") + to_string(m.family()) +
                           " model has finite variation; use overflow_finite_variation");
  }
  if (q.u == 0.0) return {1.0, 0.0, OverflowMethod::TakacsInfinite};

  const double t = q.t, u = q.u;
  const double alpha = m.alpha();
  const double sigma = std::visit(
      [](const auto& p) -> double {
        if constexpr (requires { p.sigma; }) return p.sigma;
        else return 0.0;
      },
      m.params());

  const double first = 1.0 - cdf(m, u + t, t);
  double inner_error = 0.0;
  double density_max = 0.0;

  // J(r) = int_{-inf}^r P(X(r) <= x) dx.
  auto left_integral = [&](double r) {
    const double width = stable_scaling(alpha, sigma, r).scale;
    double lo = r - width;
    double tail = cdf(m, lo, r);
    for (int i = 0; tail >= opts.tail_eps; ++i) {
      if (i > 60) throw NumericalFailure("left tail of X(r) does not vanish", 0.0, opts.tail_eps);
      lo = r - width * std::ldexp(1.0, i + 1);
      tail = cdf(m, lo, r);
    }
    auto g = [&](double x) { return cdf(m, x, r); };
    quad::QuadOptions io;
    io.rel_tol = 1e-11;
    io.initial_pieces = 4;
    const auto res = quad::integrate(g, lo, r, 0.01 * opts.tol * std::max(r, 1e-3), io);
    const double truncation = tail * width;
    inner_error = std::max(inner_error, (res.abs_error_estimate + truncation) / r);
    return res.value;
  };
  auto outer = [&](double s) {
    const double r = t - s;
    const double f = density(m, u + s, s);
    density_max = std::max(density_max, f);
    if (f == 0.0 || r <= 0.0) return 0.0;
    return f * left_integral(r) / r;
  };
  quad::QuadOptions oo;
  oo.rel_tol = 1e-10;
  oo.hints.right_exponent = detail::takacs_right_exponent(m);
  const auto res = quad::integrate(outer, 0.0, t, 0.5 * opts.tol, oo);
  const double err = res.abs_error_estimate + t * density_max * inner_error;
  return detail::finish(first + res.value, err, OverflowMethod::TakacsInfinite);
}

// Generic entry point: picks the branch from the model's variation.
inline OverflowResult overflow(const OverflowQuery& q, const OverflowOptions& opts = {}) {
  return q.model.has_finite_variation() ? overflow_finite_variation(q, opts)
                                        : overflow_infinite_variation(q, opts);
}

// Gamma input: J(r)/r = P(X(r) <= r) - a b P(X(r + 1/a) <= r), using
// E[X(r); X(r) <= r] = a b r P(X(r + 1/a) <= r).
inline OverflowResult gamma_overflow_closed_form(double a, double b, double t, double u,
                                                 double tol = 1e-10) {
  const auto m = LevyModel::gamma(a, b);
  detail::validate({m, t, u});
  if (!(u > 0.0)) throw InvalidParameter("u", "closed form requires u > 0");
  const double first = boost::math::gamma_q(a * t, (u + t) / b);
  auto integrand = [&](double s) {
    const double r = t - s;
    if (r <= 0.0) return 0.0;
    const double f = density(m, u + s, s);
    if (f == 0.0) return 0.0;
    const double bracket =
        boost::math::gamma_p(a * r, r / b) - a * b * boost::math::gamma_p(a * r + 1.0, r / b);
    return bracket * f;
  };
  quad::QuadOptions o;
  o.rel_tol = 1e-13;
  const auto res = quad::integrate(integrand, 0.0, t, tol, o);
  return detail::finish(first + res.value, res.abs_error_estimate,
                        OverflowMethod::GammaClosedForm);
}

// Inverse Gaussian input, written out with the explicit densities:
//   delta t e^{gamma delta t} / sqrt(2 pi) int_{u+t}^inf x^{-3/2} e^{-(delta^2 t^2/x + gamma^2 x)/2} dx
//   + delta^2 e^{gamma delta t} / (2 pi) int_0^t s (u+s)^{-3/2} e^{-(delta^2 s^2/(u+s) + gamma^2 (u+s))/2}
//       * int_0^{t-s} ((t-s) x^{-3/2} - x^{-1/2}) e^{-(delta^2 (t-s)^2/x + gamma^2 x)/2} dx ds
inline OverflowResult ig_overflow_closed_form(double delta, double gamma, double t, double u,
                                              double tol = 1e-10) {
  const auto m = LevyModel::inverse_gaussian(delta, gamma);
  detail::validate({m, t, u});
  if (!(u > 0.0)) throw InvalidParameter("u", "closed form requires u > 0");
  const double dg = delta * gamma;
  const double g2 = gamma * gamma;
  const double d2 = delta * delta;
  constexpr double two_pi = 2.0 * std::numbers::pi;

  const double c1 = delta * t * std::exp(dg * t) / std::sqrt(two_pi);
  auto tail_integrand = [&](double x) {
    return std::pow(x, -1.5) * std::exp(-0.5 * (d2 * t * t / x + g2 * x));
  };
  auto tail_bound = [&](double x) {
    return std::pow(x, -1.5) * (2.0 / g2) * std::exp(-0.5 * g2 * x);
  };
  const auto first = quad::integrate_semi_infinite(tail_integrand, u + t, 0.1 * tol / c1,
                                                   tail_bound, std::max(1.0, 1.0 / g2));

  double inner_error = 0.0;
  auto inner = [&](double r) {
    auto h = [&](double x) {
      return (r * std::pow(x, -1.5) - std::pow(x, -0.5)) * std::exp(-0.5 * (d2 * r * r / x + g2 * x));
    };
    quad::QuadOptions io;
    io.hints.left_exponent = -0.5;
    io.rel_tol = 1e-12;
    // The mass sits near x ~ delta^2 r^2 / 3 when r is small.
    const double knee = std::min(r, 50.0 * d2 * r * r);
    auto part = quad::integrate(h, 0.0, knee, 1e-3 * tol, io);
    if (knee < r) {
      io.hints = {};
      const auto rest = quad::integrate(h, knee, r, 1e-3 * tol, io);
      part.value += rest.value;
      part.abs_error_estimate += rest.abs_error_estimate;
    }
    inner_error = std::max(inner_error, part.abs_error_estimate);
    return part.value;
  };
  const double c2 = d2 * std::exp(dg * t) / two_pi;
  auto outer = [&](double s) {
    const double r = t - s;
    if (r <= 0.0) return 0.0;
    const double us = u + s;
    const double w = s * std::pow(us, -1.5) * std::exp(-0.5 * (d2 * s * s / us + g2 * us));
    if (w == 0.0) return 0.0;
    return w * inner(r);
  };
  quad::QuadOptions oo;
  oo.rel_tol = 1e-12;
  const auto second = quad::integrate(outer, 0.0, t, 0.5 * tol / c2, oo);
  const double value = c1 * first.value + c2 * second.value;
  const double err = c1 * first.abs_error_estimate + c2 * second.abs_error_estimate +
                     c2 * t * inner_error;
  return detail::finish(value, err, OverflowMethod::IGClosedForm);
}

}  // namespace levystore
