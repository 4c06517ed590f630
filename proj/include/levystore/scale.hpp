#pragma once

// Scale functions of the spectrally negative process with Laplace exponent
// psi, defined by
//   int_0^inf e^{-w y} W^{(q)}(y) dy = 1 / (psi(w) - q),   w > Phi(q),
// and the first-passage laws built from them.  W is recovered by Euler
// inversion of the shifted transform 1/(psi(w + Phi) - q), whose inverse
// e^{-Phi x} W(x) stays bounded, so the contour sits at Phi + A/(2x).

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <boost/math/tools/toms748_solve.hpp>

#include "levystore/distributions.hpp"
#include "levystore/error.hpp"
#include "levystore/laplace_inversion.hpp"
#include "levystore/models.hpp"
#include "levystore/quad.hpp"

namespace levystore {

struct ScaleOptions {
  InversionOptions inversion{25.0, 60, 20};
  // Inner inversions at complex q inside overflow_by_time.
  InversionOptions complex_inversion{18.0, 40, 20};
  double derivative_step = 0.005;
  double quad_rel_tol = 1e-11;
};

struct AnalyticValue {
  double value;
  double abs_error_estimate;
  std::string diagnostic;
};

namespace detail {

inline void require_rate(double r) {
  if (!(r >= 0.0) || !std::isfinite(r)) throw InvalidParameter("r", "rate must be >= 0");
}

// argmin of psi on [0, inf); 0 when psi'(0+) >= 0.
inline double psi_minimiser(const LaplaceExponent& psi) {
  const double d0 = psi.derivative(0.0);
  if (!(d0 < 0.0)) return 0.0;
  double hi = 1.0;
  while (psi.derivative(hi) < 0.0) {
    hi *= 2.0;
    if (hi > 1e300) throw DomainError("psi decreases without bound; Phi undefined");
  }
  double lo = 0.0;
  for (int i = 0; i < 400 && hi - lo > 1e-16 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    (psi.derivative(mid) < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

// Phi(r): the largest root of psi(w) = r.
inline double phi(const LaplaceExponent& psi, double r) {
  detail::require_rate(r);
  const double wmin = detail::psi_minimiser(psi);
  if (r == 0.0 && wmin == 0.0) return 0.0;
  auto f = [&](double w) { return psi(w) - r; };
  double lo = wmin;
  double hi = std::max(1.0, 2.0 * wmin);
  int guard = 0;
  while (f(hi) <= 0.0) {
    lo = hi;
    hi *= 2.0;
    if (++guard > 1100) {
      throw DomainError("cannot bracket psi(w) = " + std::to_string(r) + " for " + psi.key());
    }
  }
  if (f(lo) == 0.0 && lo > 0.0) return lo;
  boost::uintmax_t iterations = 300;
  const auto [a, b] = boost::math::tools::toms748_solve(
      f, lo, hi, boost::math::tools::eps_tolerance<double>(52), iterations);
  double w = 0.5 * (a + b);
  for (int i = 0; i < 3; ++i) {
    const double d = psi.derivative(w);
    if (!(d > 0.0)) break;
    const double next = w - f(w) / d;
    if (!(next > wmin) || std::abs(f(next)) >= std::abs(f(w))) break;
    w = next;
  }
  return w;
}

inline double phi(const LevyModel& m, double r) { return phi(laplace_exponent(m), r); }

// Phi(q) for Re q > 0: the unique root of psi(theta) = q with Re theta > 0,
// reached by Newton continuation along q(s) = Re q + i s Im q from the real
// root.  An optional guess (e.g. the root at a neighbouring q) is tried first.
inline cplx phi_complex(const LaplaceExponent& psi, cplx q, std::optional<cplx> guess = {}) {
  if (q.imag() == 0.0) return phi(psi, q.real());
  if (!(q.real() > 0.0)) throw InvalidParameter("q", "complex rate needs Re q > 0");

  auto newton = [&](cplx target, cplx start) -> std::optional<cplx> {
    cplx th = start;
    const double tol = 1e-14 * std::max(1.0, std::abs(target));
    for (int i = 0; i < 60; ++i) {
      if (!(th.real() > 0.0)) return std::nullopt;
      const cplx f = psi(th) - target;
      if (std::abs(f) <= tol) return th;
      th -= f / psi.derivative(th);
    }
    if (th.real() > 0.0 && std::abs(psi(th) - target) <= 1e3 * tol) return th;
    return std::nullopt;
  };

  if (guess) {
    if (auto r = newton(q, *guess)) return *r;
  }
  cplx th = phi(psi, q.real());
  double s = 0.0, ds = 1.0;
  while (s < 1.0) {
    const double next = std::min(1.0, s + ds);
    const cplx target(q.real(), next * q.imag());
    const cplx d = psi.derivative(th);
    const cplx predictor = th + cplx(0.0, (next - s) * q.imag()) / d;
    if (auto r = newton(target, predictor)) {
      th = *r;
      s = next;
      ds *= 2.0;
    } else {
      ds *= 0.5;
      if (ds < 1e-12) throw NumericalFailure("continuation for complex Phi(q) stalled");
    }
  }
  return th;
}

// Evaluator for W^{(q)}, its integral and right derivative at real q >= 0.
class ScaleFunction {
 public:
  ScaleFunction(LaplaceExponent psi, double q, ScaleOptions opts = {})
      : psi_(std::move(psi)), q_(q), opts_(opts) {
    detail::require_rate(q);
    phi_ = levystore::phi(psi_, q_);
  }

  double q() const { return q_; }
  double phi() const { return phi_; }
  const LaplaceExponent& exponent() const { return psi_; }
  const ScaleOptions& options() const { return opts_; }

  // e^{-Phi x} W(x).
  InversionResult w_scaled(double x) const {
    if (x < 0.0) return {0.0, 0.0};
    if (x == 0.0) return {psi_.w_at_zero(), 0.0};
    auto G = [this](cplx w) { return 1.0 / (psi_(w + phi_) - q_); };
    return euler_invert(G, x, opts_.inversion);
  }

  InversionResult w(double x) const {
    const auto s = w_scaled(x);
    const double g = x > 0.0 ? std::exp(phi_ * x) : 1.0;
    return {g * s.value, g * s.error_estimate};
  }

  // bar W(x) = int_0^x W(y) dy by adaptive quadrature of the inverted W.
  InversionResult wbar(double x) const { return wbar_between(0.0, x); }

  InversionResult wbar_between(double a, double b) const {
    if (b <= a) return {0.0, 0.0};
    double worst = 0.0;
    auto f = [&](double y) {
      const auto r = w(y);
      worst = std::max(worst, r.error_estimate);
      return r.value;
    };
    quad::QuadOptions o;
    o.rel_tol = opts_.quad_rel_tol;
    if (a == 0.0 && psi_.w_at_zero() == 0.0) o.hints.left_exponent = 0.5;
    const auto res = quad::integrate(f, a, b, 1e-300, o);
    return {res.value, res.abs_error_estimate + worst * (b - a)};
  }

  // bar W by inverting 1/(theta (psi(theta) - q)); independent of wbar().
  InversionResult wbar_transform(double x) const {
    if (x <= 0.0) return {0.0, 0.0};
    auto G = [this](cplx w) { return 1.0 / ((w + phi_) * (psi_(w + phi_) - q_)); };
    const auto r = euler_invert(G, x, opts_.inversion);
    const double g = std::exp(phi_ * x);
    return {g * r.value, g * r.error_estimate};
  }

  InversionResult k(double x) const {
    const auto b = wbar(x);
    return {1.0 + q_ * b.value, q_ * b.error_estimate};
  }

  // W'_+(x): forward differences at h, h/2, h/4 with two Richardson steps.
  InversionResult w_right_derivative(double x) const {
    const double h = opts_.derivative_step;
    const auto w0 = w(x);
    const auto w1 = w(x + h);
    const auto w2 = w(x + h / 2.0);
    const auto w3 = w(x + h / 4.0);
    const double d1 = (w1.value - w0.value) / h;
    const double d2 = (w2.value - w0.value) / (h / 2.0);
    const double d3 = (w3.value - w0.value) / (h / 4.0);
    const double noise =
        (w0.error_estimate + std::max({w1.error_estimate, w2.error_estimate, w3.error_estimate})) /
        (h / 4.0);
    if (std::abs(d3 - d2) > 0.75 * std::abs(d2 - d1) + 10.0 * noise) {
      throw NumericalFailure("right derivative of W at x = " + std::to_string(x) +
                                 " does not settle under step refinement",
                             d3, std::abs(d3 - d2));
    }
    const double r1 = 2.0 * d2 - d1;
    const double r1b = 2.0 * d3 - d2;
    const double r2 = (4.0 * r1b - r1) / 3.0;
    return {r2, std::abs(r2 - r1b) + noise};
  }

  // W'(x) from the transform w / (psi(w + Phi) - q) - W(0) of (e^{-Phi x} W)'.
  InversionResult w_derivative_transform(double x) const {
    if (!(x > 0.0)) throw InvalidParameter("x", "derivative transform needs x > 0");
    const double w0 = psi_.w_at_zero();
    auto G = [this, w0](cplx w) { return w / (psi_(w + phi_) - q_) - w0; };
    const auto d = euler_invert(G, x, opts_.inversion);
    const auto s = w_scaled(x);
    const double g = std::exp(phi_ * x);
    return {g * (phi_ * s.value + d.value),
            g * (phi_ * s.error_estimate + d.error_estimate)};
  }

 private:
  LaplaceExponent psi_;
  double q_;
  ScaleOptions opts_;
  double phi_ = 0.0;
};

struct ScaleFunctionTable {
  std::string exponent_key;
  double r = 0.0;
  std::vector<double> grid;
  std::vector<double> w_values;
  std::vector<double> wbar_values;
  std::vector<double> k_values;
  double inversion_error = 0.0;
};

inline void validate_grid(const std::vector<double>& grid) {
  if (grid.empty()) throw InvalidParameter("grid", "must be nonempty");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] >= 0.0) || !std::isfinite(grid[i])) {
      throw InvalidParameter("grid", "points must be finite and >= 0");
    }
    if (i > 0 && !(grid[i] > grid[i - 1])) {
      throw InvalidParameter("grid", "points must be strictly increasing");
    }
  }
}

// Tabulates W^{(r)}, bar W^{(r)} and K^{(r)} = 1 + r bar W^{(r)} on a grid.
// bar W accumulates cell by cell, so K(0) = 1 exactly.
inline ScaleFunctionTable scale_function(const LaplaceExponent& psi, double r,
                                         const std::vector<double>& grid,
                                         const ScaleOptions& opts = {}) {
  validate_grid(grid);
  const ScaleFunction s(psi, r, opts);
  ScaleFunctionTable t;
  t.exponent_key = psi.key();
  t.r = r;
  t.grid = grid;
  double acc = 0.0, acc_err = 0.0, prev = 0.0, worst = 0.0;
  for (double x : grid) {
    const auto wv = s.w(x);
    const auto cell = s.wbar_between(prev, x);
    acc += cell.value;
    acc_err += cell.error_estimate;
    prev = x;
    worst = std::max({worst, wv.error_estimate, r * acc_err});
    t.w_values.push_back(wv.value);
    t.wbar_values.push_back(acc);
    t.k_values.push_back(1.0 + r * acc);
  }
  t.inversion_error = worst;
  return t;
}

inline ScaleFunctionTable scale_function(const LevyModel& m, double r,
                                         const std::vector<double>& grid,
                                         const ScaleOptions& opts = {}) {
  return scale_function(laplace_exponent(m), r, grid, opts);
}

// int_0^inf e^{-w x} W(x) dx for w > Phi.  The tail beyond x uses
// W_Phi(y) <= W_Phi(x) y / x, valid for the nondecreasing, at most linearly
// growing W_Phi = e^{-Phi y} W(y).
inline InversionResult forward_transform(const ScaleFunction& s, double w, double tol = 1e-9) {
  const double delta = w - s.phi();
  if (!(delta > 0.0)) throw InvalidParameter("w", "forward transform needs w > Phi(q)");
  double worst = 0.0;
  auto f = [&](double x) {
    const auto r = s.w_scaled(x);
    worst = std::max(worst, r.error_estimate * std::exp(-delta * x));
    return std::exp(-delta * x) * r.value;
  };
  auto tail = [&](double x) {
    const double wx = s.w_scaled(x).value;
    return wx / x * std::exp(-delta * x) * (x / delta + 1.0 / (delta * delta));
  };
  quad::QuadOptions o;
  if (s.exponent().w_at_zero() == 0.0) o.hints.left_exponent = 0.5;
  const auto res = quad::integrate_semi_infinite(f, 0.0, tol, tail, 1.0 / delta, o);
  return {res.value, res.abs_error_estimate + worst / delta};
}

// Round trip of a table: its W values against a fresh evaluator, and the
// forward transform of W at w = Phi(r) + 1 against 1 / (psi(w) - r).
// Returns the larger of the two discrepancies.
inline double table_round_trip(const LaplaceExponent& psi, const ScaleFunctionTable& t,
                               const ScaleOptions& opts = {}) {
  if (psi.key() != t.exponent_key) throw InvalidParameter("table", "exponent key mismatch");
  const ScaleFunction s(psi, t.r, opts);
  double worst = 0.0;
  for (std::size_t i = 0; i < t.grid.size(); ++i) {
    worst = std::max(worst, std::abs(s.w(t.grid[i]).value - t.w_values[i]));
  }
  const double w = s.phi() + 1.0;
  const double exact = 1.0 / (psi(w) - t.r);
  return std::max(worst, std::abs(forward_transform(s, w).value - exact));
}

// Supplies the table for (psi, r, grid); defaults to computing it.
using TableSource = std::function<ScaleFunctionTable(const LaplaceExponent&, double,
                                                     const std::vector<double>&)>;

namespace detail {

inline ScaleFunctionTable make_table(const TableSource& source, const LaplaceExponent& psi,
                                     double r, const std::vector<double>& grid,
                                     const ScaleOptions& opts) {
  return source ? source(psi, r, grid) : scale_function(psi, r, grid, opts);
}

}  // namespace detail

struct FirstPassageQuery {
  LevyModel model;
  double z;
  double u;
};

namespace detail {

inline void validate_fp(const FirstPassageQuery& q, Orientation expected) {
  if (q.model.orientation() != expected) {
    throw InvalidParameter("orientation", std::string("operation needs the ") +
                                              to_string(expected) + " orientation");
  }
  if (!(q.u > 0.0) || !std::isfinite(q.u)) throw InvalidParameter("u", "threshold must be > 0");
  if (!(q.z >= 0.0 && q.z <= q.u)) throw InvalidParameter("z", "requires 0 <= z <= u");
}

inline AnalyticValue checked_probability(double v, double err, const char* what) {
  const double slack = err + 1e-9;
  if (!(v >= -slack && v <= 1.0 + slack)) {
    throw NumericalFailure(std::string(what) + " = " + std::to_string(v) +
                               " lies outside [0, 1] beyond its error estimate",
                           v, err);
  }
  return {std::clamp(v, 0.0, 1.0), err, ""};
}

}  // namespace detail

// Storage model: E e^{-r tau(u)} = K(u-z) - r W(u-z) W(u) / W'_+(u).
inline AnalyticValue fp_transform_storage(const FirstPassageQuery& q, double r,
                                          const ScaleOptions& opts = {}) {
  detail::validate_fp(q, Orientation::Storage);
  detail::require_rate(r);
  if (r == 0.0) return {1.0, 0.0, "r = 0: the formula reduces to K(u - z) = 1"};
  const ScaleFunction s(laplace_exponent(q.model), r, opts);
  const double x = q.u - q.z;
  const auto k = s.k(x);
  const auto wx = s.w(x);
  const auto wu = s.w(q.u);
  const auto d = s.w_right_derivative(q.u);
  if (!(d.value > 0.0)) throw NumericalFailure("W'_+(u) is not positive", d.value, d.error_estimate);
  const double ratio = wx.value * wu.value / d.value;
  const double value = k.value - r * ratio;
  const double err = k.error_estimate +
                     r * (wx.error_estimate * wu.value + wx.value * wu.error_estimate) / d.value +
                     r * ratio * d.error_estimate / d.value;
  return detail::checked_probability(value, err, "storage first-passage transform");
}

// Inventory model: E e^{-r tau(u)} = K(z) / K(u), both read from one table.
inline AnalyticValue fp_transform_inventory(const FirstPassageQuery& q, double r,
                                            const ScaleOptions& opts = {},
                                            const TableSource& source = {}) {
  detail::validate_fp(q, Orientation::Inventory);
  detail::require_rate(r);
  if (r == 0.0) return {1.0, 0.0, "r = 0: K = 1"};
  const std::vector<double> grid =
      q.z == q.u ? std::vector<double>{q.u} : std::vector<double>{q.z, q.u};
  const auto t = detail::make_table(source, laplace_exponent(q.model), r, grid, opts);
  const double kz = t.k_values.front();
  const double ku = t.k_values.back();
  const double value = kz / ku;
  const double err = value * 2.0 * t.inversion_error / ku * r;
  return detail::checked_probability(value, err, "inventory first-passage transform");
}

// Storage model: E tau(u) = W(u-z) W(u) / W'_+(u) - bar W(u-z) at r = 0.
inline AnalyticValue expected_tau_storage(const FirstPassageQuery& q,
                                          const ScaleOptions& opts = {}) {
  detail::validate_fp(q, Orientation::Storage);
  const ScaleFunction s(laplace_exponent(q.model), 0.0, opts);
  const double x = q.u - q.z;
  const auto wx = s.w(x);
  const auto wu = s.w(q.u);
  const auto d = s.w_right_derivative(q.u);
  if (!(d.value > 3.0 * d.error_estimate)) {
    return {std::numeric_limits<double>::infinity(), 0.0,
            "W'_+(u) vanishes within its error estimate: the level is not reached in finite "
            "mean time, E tau(u) = infinity"};
  }
  const auto b = s.wbar(x);
  const double ratio = wx.value * wu.value / d.value;
  const double value = ratio - b.value;
  const double err = (wx.error_estimate * wu.value + wx.value * wu.error_estimate) / d.value +
                     ratio * d.error_estimate / d.value + b.error_estimate;
  if (value < -err - 1e-9) {
    throw NumericalFailure("expected passage time came out negative", value, err);
  }
  return {std::max(value, 0.0), err, ""};
}

// Inventory model: E tau(u) = bar W(u) - bar W(z).
inline AnalyticValue expected_tau_inventory(const FirstPassageQuery& q,
                                            const ScaleOptions& opts = {},
                                            const TableSource& source = {}) {
  detail::validate_fp(q, Orientation::Inventory);
  if (q.z == q.u) return {0.0, 0.0, ""};
  const auto t = detail::make_table(source, laplace_exponent(q.model), 0.0, {q.z, q.u}, opts);
  const double value = t.wbar_values.back() - t.wbar_values.front();
  const double err = t.inversion_error * (q.u - q.z);
  return {std::max(value, 0.0), err, ""};
}

namespace detail {

// Scale quantities at complex q, all multiplied by e^{-Phi(q) x}.
struct ComplexScale {
  const LaplaceExponent& psi;
  cplx q;
  cplx phi;
  InversionOptions base;

  // Components of W^{(q)} other than e^{Phi x} oscillate at frequency
  // |Im Phi| after scaling; the series must run past k = |Im Phi| x / pi.
  InversionOptions options_at(double x) const {
    InversionOptions o = base;
    o.n += static_cast<int>(std::min(2e4, std::ceil(1.5 * std::abs(phi.imag()) * x / std::numbers::pi)));
    return o;
  }

  ComplexInversionResult w_scaled(double x) const {
    if (x == 0.0) return {psi.w_at_zero(), 0.0};
    auto G = [this](cplx w) { return 1.0 / (psi(w + phi) - q); };
    return euler_invert_complex(G, x, options_at(x));
  }
  ComplexInversionResult w_scaled_derivative(double x) const {
    const double w0 = psi.w_at_zero();
    auto G = [this, w0](cplx w) { return w / (psi(w + phi) - q) - w0; };
    return euler_invert_complex(G, x, options_at(x));
  }
  ComplexInversionResult wbar_scaled(double x) const {
    if (x == 0.0) return {0.0, 0.0};
    auto G = [this](cplx w) { return 1.0 / ((w + phi) * (psi(w + phi) - q)); };
    return euler_invert_complex(G, x, options_at(x));
  }
  // e^{-Phi x} (bar W(x) - W(x) / Phi), transform -w G(w) / (Phi (w + Phi)).
  ComplexInversionResult wbar_minus_w_over_phi(double x) const {
    if (x == 0.0) return {-psi.w_at_zero() / phi, 0.0};
    auto G = [this](cplx w) { return -w / (phi * (w + phi) * (psi(w + phi) - q)); };
    return euler_invert_complex(G, x, options_at(x));
  }
  // K^{(q)}(x) = 1 + q e^{Phi x} (e^{-Phi x} bar W)(x).
  ComplexInversionResult k(double x) const {
    if (x == 0.0) return {1.0, 0.0};
    const auto b = wbar_scaled(x);
    const cplx g = q * std::exp(phi * x);
    return {1.0 + g * b.value, std::abs(g) * b.error_estimate};
  }
};

struct OutputTransform {
  cplx value;
  double error;
};

// Outer Euler inversion in q of T(q) / q at t, escalating the term counts
// until the series error estimate meets tol.
template <class TransformFn>
AnalyticValue invert_distribution(TransformFn&& T, double t, double A, double tol,
                                  const char* what) {
  static const std::pair<int, int> levels[] = {{60, 20}, {250, 60}, {1000, 200}, {4000, 600}};
  AnalyticValue best{0.0, std::numeric_limits<double>::infinity(), ""};
  for (const auto& [n, m] : levels) {
    double inner_worst = 0.0;
    auto F = [&](cplx q) {
      const auto r = T(q);
      inner_worst = std::max(inner_worst, r.error / std::abs(q));
      return r.value / q;
    };
    const InversionOptions o{A, n, m};
    const auto res = euler_invert(F, t, o);
    const double inner = std::exp(A / 2.0) / t * inner_worst;
    const double err = res.error_estimate + inner;
    if (err < best.abs_error_estimate) best = {res.value, err, ""};
    // More terms cannot help once the transform values themselves dominate.
    if (res.error_estimate <= tol || inner >= res.error_estimate) break;
  }
  if (!(best.abs_error_estimate <= std::max(1e-3, 100.0 * tol))) {
    throw NumericalFailure(std::string(what) + ": inversion did not converge", best.value,
                           best.abs_error_estimate);
  }
  auto out = checked_probability(best.value, 4.0 * std::max(best.abs_error_estimate, tol), what);
  out.abs_error_estimate = best.abs_error_estimate;
  if (best.abs_error_estimate > tol) {
    out.diagnostic = "inversion error estimate " + std::to_string(best.abs_error_estimate) +
                     " exceeds the requested tolerance";
  }
  return out;
}

}  // namespace detail

// P(tau(u) < t) = P(sup_{s<=t} Z(s) > u) by inverting E e^{-q tau(u)} / q.
inline AnalyticValue overflow_by_time(const FirstPassageQuery& fq, double t,
                                      const ScaleOptions& opts = {}, double tol = 1e-6) {
  if (!(t > 0.0) || !std::isfinite(t)) throw InvalidParameter("t", "horizon must be > 0");
  const auto orientation = fq.model.orientation();
  detail::validate_fp(fq, orientation);
  if (fq.z == fq.u && orientation == Orientation::Inventory) return {1.0, 0.0, "z = u: tau(u) = 0"};
  if (orientation == Orientation::Inventory && fq.model.is_subordinator() && t <= fq.u - fq.z) {
    return {0.0, 0.0, "Z rises at most at unit rate, so tau(u) >= u - z"};
  }
  const auto psi = laplace_exponent(fq.model);
  const double x = fq.u - fq.z;
  std::optional<cplx> last_phi;

  auto T = [&](cplx q) -> detail::OutputTransform {
    const cplx ph = phi_complex(psi, q, last_phi);
    last_phi = ph;
    const detail::ComplexScale s{psi, q, ph, opts.complex_inversion};
    if (orientation == Orientation::Inventory) {
      const auto kz = s.k(fq.z);
      const auto ku = s.k(fq.u);
      const cplx v = kz.value / ku.value;
      return {v, std::abs(v) * (kz.error_estimate / std::abs(kz.value) +
                                ku.error_estimate / std::abs(ku.value))};
    }
    // With rho = W_Phi'(u) / (Phi W_Phi(u)), the bracket of
    // T = 1 + q e^{Phi x} [bar W_Phi(x) - W_Phi(x) W_Phi(u) / (Phi W_Phi(u) + W_Phi'(u))]
    // splits into two pieces that are each small, so nothing large cancels.
    const auto wx = s.w_scaled(x);
    const auto wu = s.w_scaled(fq.u);
    const auto du = s.w_scaled_derivative(fq.u);
    const auto dx = s.wbar_minus_w_over_phi(x);
    const cplx rho = du.value / (ph * wu.value);
    const cplx tail = wx.value * rho / (ph * (1.0 + rho));
    const cplx bracket = dx.value + tail;
    const cplx g = q * std::exp(ph * x);
    const double e = dx.error_estimate + std::abs(tail) * wx.error_estimate / std::abs(wx.value) +
                     std::abs(wx.value / (ph * wu.value)) *
                         (du.error_estimate + std::abs(rho) * wu.error_estimate);
    return {1.0 + g * bracket, std::abs(g) * e};
  };
  // The cancellation is removed analytically, but the result is still scaled
  // by e^{Re Phi (u - z)}, so the damping A shrinks as u - z grows against t.
  const double A = orientation == Orientation::Inventory ? 20.0 : 30.0 / (1.5 + x / (2.0 * t));
  return detail::invert_distribution(T, t, A, tol, "P(tau(u) < t)");
}

// P(sup_{s<=t} Y(s) > u) for the unreflected Y = t - X, by inverting
// E e^{-q tau_u^+} = e^{-Phi(q) u}.
inline AnalyticValue passage_unreflected_by_time(const LevyModel& m, double u, double t,
                                                 double tol = 1e-6) {
  if (!(u > 0.0)) throw InvalidParameter("u", "threshold must be > 0");
  if (!(t > 0.0)) throw InvalidParameter("t", "horizon must be > 0");
  const auto psi = laplace_exponent(m);
  std::optional<cplx> last_phi;
  auto T = [&](cplx q) -> detail::OutputTransform {
    const cplx ph = phi_complex(psi, q, last_phi);
    last_phi = ph;
    return {std::exp(-ph * u), 0.0};
  };
  return detail::invert_distribution(T, t, 20.0, tol, "P(tau_u^+ < t)");
}

// Kendall's identity for spectrally negative Y = t - X (taken from the
// fluctuation-theory literature):
//   P(tau_u^+ in ds) = (u / s) f_X(s - u, s) ds,
// so P(sup_{s<=t} Y(s) > u) = int_0^t (u/s) f_X(s - u, s) ds.  With z = 0 this
// is also P(Z(t) > u) for the inventory level.  Secondary check only.
inline AnalyticValue kendall_cross_check(const LevyModel& m, double u, double t,
                                         double tol = 1e-9) {
  if (m.orientation() != Orientation::Inventory) {
    throw InvalidParameter("orientation", "Kendall cross-check is stated for the inventory model");
  }
  if (!(u > 0.0)) throw InvalidParameter("u", "threshold must be > 0");
  if (!(t > 0.0)) throw InvalidParameter("t", "horizon must be > 0");
  const char* tag = "literature-derived (Kendall's identity)";
  if (m.family() == Family::Degenerate) return {t > u ? 1.0 : 0.0, 0.0, tag};
  if (m.family() == Family::CompoundPoissonExp) {
    throw UnsupportedError("Kendall cross-check needs a density for X(s); CP-exp has an atom");
  }
  const double lo = m.is_subordinator() ? u : 0.0;
  if (t <= lo) return {0.0, 0.0, tag};
  auto f = [&](double s) {
    if (s <= 0.0) return 0.0;
    return u / s * density(m, s - u, s);
  };
  quad::QuadOptions o;
  o.rel_tol = 1e-10;
  o.max_evaluations = 400'000;
  auto res = quad::integrate(f, lo, t, tol, o);
  auto out = detail::checked_probability(res.value, res.abs_error_estimate, "Kendall probability");
  out.diagnostic = tag;
  return out;
}

}  // namespace levystore
