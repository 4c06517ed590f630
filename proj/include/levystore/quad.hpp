#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <queue>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "levystore/error.hpp"

namespace levystore::quad {

struct QuadResult {
  double value = 0.0;
  double abs_error_estimate = 0.0;
  std::size_t evaluations = 0;
};

// Declared algebraic behaviour f(x) ~ |x - endpoint|^p near an endpoint.
// Only p > -1 is integrable.
struct SingularityHints {
  std::optional<double> left_exponent;
  std::optional<double> right_exponent;
};

struct QuadOptions {
  SingularityHints hints;
  double rel_tol = 0.0;
  std::size_t max_evaluations = 100'000;
  unsigned initial_pieces = 1;
};

namespace detail {

struct Segment {
  double a;
  double b;
  double value;
  double error;
  bool operator<(const Segment& other) const { return error < other.error; }
};

// Kronrod 21-point estimate with embedded 10-point Gauss rule on [a, b].
template <class F>
Segment gk21(F& f, double a, double b) {
  using kronrod = boost::math::quadrature::gauss_kronrod<double, 21>;
  using gauss = boost::math::quadrature::gauss<double, 10>;
  const auto& x = kronrod::abscissa();
  const auto& wk = kronrod::weights();
  const auto& wg = gauss::weights();

  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double f0 = f(center);
  double k = f0 * wk[0];
  double g = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i) {
    const double fp = f(center + half * x[i]);
    const double fm = f(center - half * x[i]);
    k += (fp + fm) * wk[i];
    if (i % 2 == 1) g += (fp + fm) * wg[i / 2];
  }
  k *= half;
  g *= half;
  if (!std::isfinite(k)) {
    throw NumericalFailure("non-finite integrand on [" + std::to_string(a) +
                           ", " + std::to_string(b) + "]");
  }
  const double err =
      std::max(std::abs(k - g), 2.0 * std::numeric_limits<double>::epsilon() * std::abs(k));
  return {a, b, k, err};
}

inline constexpr std::size_t kRuleEvaluations = 21;

// Global adaptive bisection: always refine the segment with the largest
// error until the summed error meets the tolerance.
template <class F>
QuadResult adaptive(F& f, double a, double b, double tol, const QuadOptions& opts) {
  std::priority_queue<Segment> heap;
  std::vector<Segment> frozen;
  std::size_t evaluations = 0;
  const unsigned pieces = std::max(1u, opts.initial_pieces);
  for (unsigned i = 0; i < pieces; ++i) {
    const double lo = a + (b - a) * i / pieces;
    const double hi = (i + 1 == pieces) ? b : a + (b - a) * (i + 1) / pieces;
    heap.push(gk21(f, lo, hi));
    evaluations += kRuleEvaluations;
  }

  auto totals = [&] {
    double value = 0.0, error = 0.0;
    auto copy = heap;
    while (!copy.empty()) {
      value += copy.top().value;
      error += copy.top().error;
      copy.pop();
    }
    for (const auto& s : frozen) {
      value += s.value;
      error += s.error;
    }
    return std::pair{value, error};
  };

  double value = 0.0, error = 0.0;
  std::tie(value, error) = totals();
  std::size_t since_resum = 0;
  while (error > std::max(tol, opts.rel_tol * std::abs(value))) {
    if (heap.empty()) {
      throw NumericalFailure("quadrature cannot subdivide further", value, tol);
    }
    if (evaluations + 2 * kRuleEvaluations > opts.max_evaluations) {
      throw NumericalFailure("quadrature evaluation budget exhausted (error " +
                                 std::to_string(error) + ")",
                             value, tol);
    }
    const Segment worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) {
      frozen.push_back(worst);
      continue;
    }
    const Segment left = gk21(f, worst.a, mid);
    const Segment right = gk21(f, mid, worst.b);
    evaluations += 2 * kRuleEvaluations;
    heap.push(left);
    heap.push(right);
    value += left.value + right.value - worst.value;
    error += left.error + right.error - worst.error;
    if (++since_resum == 64) {
      std::tie(value, error) = totals();
      since_resum = 0;
    }
  }
  std::tie(value, error) = totals();
  return {value, error, evaluations};
}

// Power substitution x = a + (b - a) t^k that removes a declared
// (x - a)^p behaviour from the integrand.
inline double substitution_power(double p) {
  if (p <= -1.0) throw InvalidParameter("singularity exponent", "must exceed -1");
  if (p < 0.0) return 1.0 / (1.0 + p);
  return (p == std::floor(p)) ? 1.0 : 2.0;
}

template <class F>
QuadResult one_sided(F& f, double a, double b, double tol, double p, bool at_left,
                     const QuadOptions& opts) {
  const double k = substitution_power(p);
  const double width = b - a;
  auto g = [&](double t) {
    const double tk = std::pow(t, k);
    const double x = at_left ? a + width * tk : b - width * tk;
    if (x == a || x == b) return 0.0;
    return f(x) * width * k * std::pow(t, k - 1.0);
  };
  QuadOptions inner = opts;
  inner.hints = {};
  return adaptive(g, 0.0, 1.0, tol, inner);
}

}  // namespace detail

// Adaptive Gauss-Kronrod integration of f over [a, b] to absolute tolerance
// tol.  Declared endpoint exponents trigger a power substitution at that end.
// Throws NumericalFailure (carrying the best estimate) when the evaluation
// budget runs out before the tolerance is met.
template <class F>
QuadResult integrate(F&& f, double a, double b, double tol, const QuadOptions& opts = {}) {
  if (!(tol > 0.0)) throw InvalidParameter("tol", "must be positive");
  if (!(a <= b)) throw InvalidParameter("interval", "requires a <= b");
  if (a == b) return {0.0, 0.0, 0};

  const auto& left = opts.hints.left_exponent;
  const auto& right = opts.hints.right_exponent;
  if (!left && !right) return detail::adaptive(f, a, b, tol, opts);
  if (left && right) {
    const double mid = 0.5 * (a + b);
    QuadOptions half = opts;
    half.max_evaluations = opts.max_evaluations / 2;
    const auto l = detail::one_sided(f, a, mid, 0.5 * tol, *left, true, half);
    const auto r = detail::one_sided(f, mid, b, 0.5 * tol, *right, false, half);
    return {l.value + r.value, l.abs_error_estimate + r.abs_error_estimate,
            l.evaluations + r.evaluations};
  }
  if (left) return detail::one_sided(f, a, b, tol, *left, true, opts);
  return detail::one_sided(f, a, b, tol, *right, false, opts);
}

// Integral of f over [a, infinity).  tail_bound(x) must bound the tail
// integral of |f| over [x, infinity) from above; the truncation point is the
// first of a + scale * 2^k where that bound drops below tol / 2, and the bound
// at the truncation point is added to the error estimate.
template <class F, class TailBound>
QuadResult integrate_semi_infinite(F&& f, double a, double tol, TailBound&& tail_bound,
                                   double scale = 1.0, const QuadOptions& opts = {}) {
  if (!(tol > 0.0)) throw InvalidParameter("tol", "must be positive");
  if (!(scale > 0.0)) throw InvalidParameter("scale", "must be positive");
  double cut = a + scale;
  int doublings = 0;
  double tail = tail_bound(cut);
  while (!(tail < 0.5 * tol)) {
    if (++doublings > 80) {
      throw NumericalFailure("tail bound never drops below tolerance", 0.0, tol);
    }
    cut = a + scale * std::ldexp(1.0, doublings);
    tail = tail_bound(cut);
  }

  // Geometric chunks [a, a+h], [a+h, a+2h], [a+2h, a+4h], ...
  const int chunks = doublings + 1;
  const double chunk_tol = 0.5 * tol / chunks;
  QuadResult total{0.0, tail, 0};
  double lo = a;
  for (int k = 0; k < chunks; ++k) {
    const double hi = a + scale * std::ldexp(1.0, k);
    QuadOptions chunk_opts = opts;
    if (k > 0) chunk_opts.hints.left_exponent.reset();
    const auto part = integrate(f, lo, hi, chunk_tol, chunk_opts);
    total.value += part.value;
    total.abs_error_estimate += part.abs_error_estimate;
    total.evaluations += part.evaluations;
    lo = hi;
  }
  return total;
}

}  // namespace levystore::quad
