#pragma once

#include <cmath>
#include <complex>
#include <cstdio>
#include <functional>
#include <limits>
#include <numbers>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "levystore/error.hpp"

namespace levystore {

using cplx = std::complex<double>;

enum class Family { Gamma, InverseGaussian, Stable, TemperedStable, CompoundPoissonExp, Degenerate };

// Storage: random inflow X, unit linear outflow, Y = X - t.
// Inventory: unit linear inflow, random outflow X, Y = t - X.
enum class Orientation { Storage, Inventory };

struct GammaParams {
  double a;  // rate of the Levy measure a x^{-1} e^{-x/b}
  double b;  // scale
};
struct InverseGaussianParams {
  double delta;
  double gamma;
};
struct StableParams {
  double alpha;  // in [1, 2)
  double sigma;  // Levy measure sigma x^{-alpha-1} dx on x > 0
};
struct TemperedStableParams {
  double alpha;
  double sigma;
  double lambda;  // Levy measure sigma e^{-lambda x} x^{-alpha-1} dx
};
struct CompoundPoissonExpParams {
  double rate;
  double mean_jump;
};
struct DegenerateParams {};

using ModelParams = std::variant<GammaParams, InverseGaussianParams, StableParams,
                                 TemperedStableParams, CompoundPoissonExpParams, DegenerateParams>;

inline const char* to_string(Family f) {
  switch (f) {
    case Family::Gamma: return "gamma";
    case Family::InverseGaussian: return "inverse_gaussian";
    case Family::Stable: return "stable";
    case Family::TemperedStable: return "tempered_stable";
    case Family::CompoundPoissonExp: return "compound_poisson_exp";
    case Family::Degenerate: return "degenerate";
  }
  return "?";
}

inline const char* to_string(Orientation o) {
  return o == Orientation::Storage ? "storage" : "inventory";
}

namespace detail {

inline void require_positive(const char* name, double v) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw InvalidParameter(name, "must be a finite value > 0 (got " + std::to_string(v) + ")");
  }
}

inline void require_alpha(double alpha) {
  if (!(alpha >= 1.0 && alpha < 2.0)) {
    throw InvalidParameter("alpha", "must lie in [1, 2) (got " + std::to_string(alpha) + ")");
  }
}

inline std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

// Parametric description of the input process X together with the model
// orientation.  Immutable once constructed; every factory validates.
class LevyModel {
 public:
  static LevyModel gamma(double a, double b, Orientation o = Orientation::Storage) {
    detail::require_positive("a", a);
    detail::require_positive("b", b);
    return LevyModel(GammaParams{a, b}, o);
  }
  static LevyModel inverse_gaussian(double delta, double gamma,
                                    Orientation o = Orientation::Storage) {
    detail::require_positive("delta", delta);
    detail::require_positive("gamma", gamma);
    return LevyModel(InverseGaussianParams{delta, gamma}, o);
  }
  static LevyModel stable(double alpha, double sigma, Orientation o = Orientation::Storage) {
    detail::require_alpha(alpha);
    detail::require_positive("sigma", sigma);
    return LevyModel(StableParams{alpha, sigma}, o);
  }
  static LevyModel tempered_stable(double alpha, double sigma, double lambda,
                                   Orientation o = Orientation::Storage) {
    detail::require_alpha(alpha);
    detail::require_positive("sigma", sigma);
    detail::require_positive("lambda", lambda);
    return LevyModel(TemperedStableParams{alpha, sigma, lambda}, o);
  }
  static LevyModel compound_poisson_exp(double rate, double mean_jump,
                                        Orientation o = Orientation::Storage) {
    detail::require_positive("rate", rate);
    detail::require_positive("mean_jump", mean_jump);
    return LevyModel(CompoundPoissonExpParams{rate, mean_jump}, o);
  }
  static LevyModel degenerate(Orientation o = Orientation::Storage) {
    return LevyModel(DegenerateParams{}, o);
  }

  Family family() const { return static_cast<Family>(params_.index()); }
  Orientation orientation() const { return orientation_; }
  const ModelParams& params() const { return params_; }

  template <class P>
  const P& as() const {
    return std::get<P>(params_);
  }

  LevyModel with_orientation(Orientation o) const { return LevyModel(params_, o); }

  // Nondecreasing sample paths.
  bool is_subordinator() const {
    const auto f = family();
    return f == Family::Gamma || f == Family::InverseGaussian ||
           f == Family::CompoundPoissonExp || f == Family::Degenerate;
  }
  // int_0^1 x Q(dx) < infinity; the stable families here all have alpha >= 1.
  bool has_finite_variation() const { return is_subordinator(); }

  double alpha() const {
    if (auto* p = std::get_if<StableParams>(&params_)) return p->alpha;
    if (auto* p = std::get_if<TemperedStableParams>(&params_)) return p->alpha;
    return std::numeric_limits<double>::quiet_NaN();
  }

  std::vector<std::pair<std::string, double>> named_parameters() const {
    return std::visit(
        [](const auto& p) -> std::vector<std::pair<std::string, double>> {
          using T = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<T, GammaParams>) return {{"a", p.a}, {"b", p.b}};
          else if constexpr (std::is_same_v<T, InverseGaussianParams>)
            return {{"delta", p.delta}, {"gamma", p.gamma}};
          else if constexpr (std::is_same_v<T, StableParams>)
            return {{"alpha", p.alpha}, {"sigma", p.sigma}};
          else if constexpr (std::is_same_v<T, TemperedStableParams>)
            return {{"alpha", p.alpha}, {"sigma", p.sigma}, {"lambda", p.lambda}};
          else if constexpr (std::is_same_v<T, CompoundPoissonExpParams>)
            return {{"rate", p.rate}, {"mean_jump", p.mean_jump}};
          else return {};
        },
        params_);
  }

  // Family and exact parameter values; orientation excluded because the
  // Laplace exponent (and so every scale function) does not depend on it.
  std::string key() const {
    std::string k = to_string(family());
    for (const auto& [name, value] : named_parameters()) {
      k += ";" + name + "=" + detail::fmt_double(value);
    }
    return k;
  }

  std::string describe() const {
    std::string d = std::string(to_string(family())) + "(";
    bool first = true;
    for (const auto& [name, value] : named_parameters()) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%s%s=%g", first ? "" : ", ", name.c_str(), value);
      d += buf;
      first = false;
    }
    return d + ", " + to_string(orientation_) + ")";
  }

 private:
  LevyModel(ModelParams p, Orientation o) : params_(std::move(p)), orientation_(o) {}

  ModelParams params_;
  Orientation orientation_;
};

// Stable constant c = sigma * Gamma(-alpha): for alpha in (1, 2) the
// compensated integral of (e^{-wx} - 1 + wx) against sigma x^{-alpha-1} dx
// equals c w^alpha, with c > 0.
inline double stable_constant(double alpha, double sigma) {
  return sigma * std::tgamma(-alpha);
}

// kappa(w) = log E exp(-w X(1)), principal branches, X centred so that
// E X(1) = 0 for the (tempered) stable families with alpha > 1.
//   gamma:            -a log(1 + b w)
//   inverse Gaussian: -delta (sqrt(gamma^2 + 2w) - gamma)
//   stable alpha>1:    c w^alpha
//   stable alpha=1:    sigma w log w          (no linear term)
//   tempered alpha>1:  c [(lambda+w)^alpha - lambda^alpha - alpha lambda^{alpha-1} w]
//   tempered alpha=1:  sigma [(lambda+w) log((lambda+w)/lambda) - w]
//   CP-exp:           -rate * mean * w / (1 + mean * w)
// The tempered forms follow by integrating the Levy measure twice in w.
inline cplx log_laplace(const LevyModel& m, cplx w) {
  return std::visit(
      [w](const auto& p) -> cplx {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, GammaParams>) {
          return -p.a * std::log(1.0 + p.b * w);
        } else if constexpr (std::is_same_v<T, InverseGaussianParams>) {
          return -p.delta * (std::sqrt(p.gamma * p.gamma + 2.0 * w) - p.gamma);
        } else if constexpr (std::is_same_v<T, StableParams>) {
          if (w == cplx(0.0)) return 0.0;
          if (p.alpha == 1.0) return p.sigma * w * std::log(w);
          return stable_constant(p.alpha, p.sigma) * std::pow(w, p.alpha);
        } else if constexpr (std::is_same_v<T, TemperedStableParams>) {
          const cplx lw = p.lambda + w;
          if (p.alpha == 1.0) return p.sigma * (lw * std::log(lw / p.lambda) - w);
          return stable_constant(p.alpha, p.sigma) *
                 (std::pow(lw, p.alpha) - std::pow(p.lambda, p.alpha) -
                  p.alpha * std::pow(p.lambda, p.alpha - 1.0) * w);
        } else if constexpr (std::is_same_v<T, CompoundPoissonExpParams>) {
          return -p.rate * p.mean_jump * w / (1.0 + p.mean_jump * w);
        } else {
          return 0.0;
        }
      },
      m.params());
}

inline cplx log_laplace_derivative(const LevyModel& m, cplx w) {
  return std::visit(
      [w](const auto& p) -> cplx {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, GammaParams>) {
          return -p.a * p.b / (1.0 + p.b * w);
        } else if constexpr (std::is_same_v<T, InverseGaussianParams>) {
          return -p.delta / std::sqrt(p.gamma * p.gamma + 2.0 * w);
        } else if constexpr (std::is_same_v<T, StableParams>) {
          if (p.alpha == 1.0) return p.sigma * (std::log(w) + 1.0);
          return stable_constant(p.alpha, p.sigma) * p.alpha * std::pow(w, p.alpha - 1.0);
        } else if constexpr (std::is_same_v<T, TemperedStableParams>) {
          const cplx lw = p.lambda + w;
          if (p.alpha == 1.0) return p.sigma * std::log(lw / p.lambda);
          return stable_constant(p.alpha, p.sigma) * p.alpha *
                 (std::pow(lw, p.alpha - 1.0) - std::pow(p.lambda, p.alpha - 1.0));
        } else if constexpr (std::is_same_v<T, CompoundPoissonExpParams>) {
          const cplx d = 1.0 + p.mean_jump * w;
          return -p.rate * p.mean_jump / (d * d);
        } else {
          return 0.0;
        }
      },
      m.params());
}

// Left end of the real convergence domain of kappa; the stable family is
// only defined for Re w >= 0.
inline double laplace_domain_lower(const LevyModel& m) {
  return std::visit(
      [](const auto& p) -> double {
        using T = std::decay_t<decltype(p)>;
        constexpr double inf = std::numeric_limits<double>::infinity();
        if constexpr (std::is_same_v<T, GammaParams>) return -1.0 / p.b;
        else if constexpr (std::is_same_v<T, InverseGaussianParams>)
          return -0.5 * p.gamma * p.gamma;
        else if constexpr (std::is_same_v<T, StableParams>) return 0.0;
        else if constexpr (std::is_same_v<T, TemperedStableParams>) return -p.lambda;
        else if constexpr (std::is_same_v<T, CompoundPoissonExpParams>) return -1.0 / p.mean_jump;
        else return -inf;
      },
      m.params());
}

inline double mean_x(const LevyModel& m) {
  return std::visit(
      [](const auto& p) -> double {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, GammaParams>) return p.a * p.b;
        else if constexpr (std::is_same_v<T, InverseGaussianParams>) return p.delta / p.gamma;
        else if constexpr (std::is_same_v<T, StableParams>)
          return p.alpha == 1.0 ? std::numeric_limits<double>::infinity() : 0.0;
        else if constexpr (std::is_same_v<T, TemperedStableParams>) return 0.0;
        else if constexpr (std::is_same_v<T, CompoundPoissonExpParams>)
          return p.rate * p.mean_jump;
        else return 0.0;
      },
      m.params());
}

inline double variance_x(const LevyModel& m) {
  return std::visit(
      [](const auto& p) -> double {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, GammaParams>) return p.a * p.b * p.b;
        else if constexpr (std::is_same_v<T, InverseGaussianParams>)
          return p.delta / (p.gamma * p.gamma * p.gamma);
        else if constexpr (std::is_same_v<T, StableParams>)
          return std::numeric_limits<double>::infinity();
        else if constexpr (std::is_same_v<T, TemperedStableParams>)
          return p.sigma * std::tgamma(2.0 - p.alpha) * std::pow(p.lambda, p.alpha - 2.0);
        else if constexpr (std::is_same_v<T, CompoundPoissonExpParams>)
          return 2.0 * p.rate * p.mean_jump * p.mean_jump;
        else return 0.0;
      },
      m.params());
}

// psi with E exp(-w Y(1)) = e^{psi(w)} (storage) or E exp(w Y(1)) = e^{psi(w)}
// (inventory).  Both orientations give psi(w) = w + kappa(w), so one object
// serves both.  Also constructible from an arbitrary exponent (e.g. a pure
// stable w^alpha) for scale-function work.
class LaplaceExponent {
 public:
  using Fn = std::function<cplx(cplx)>;

  LaplaceExponent(std::string key, Fn value, Fn derivative, double domain_lower,
                  bool lower_closed, double w_at_zero)
      : key_(std::move(key)),
        value_(std::move(value)),
        derivative_(std::move(derivative)),
        lower_(domain_lower),
        lower_closed_(lower_closed),
        w_at_zero_(w_at_zero) {}

  // psi(w) = w^alpha: spectrally negative alpha-stable without drift.
  static LaplaceExponent pure_stable(double alpha) {
    if (!(alpha > 1.0 && alpha <= 2.0)) {
      throw InvalidParameter("alpha", "pure stable exponent needs alpha in (1, 2]");
    }
    auto value = [alpha](cplx w) { return w == cplx(0.0) ? cplx(0.0) : std::pow(w, alpha); };
    auto deriv = [alpha](cplx w) {
      return w == cplx(0.0) ? cplx(0.0) : alpha * std::pow(w, alpha - 1.0);
    };
    return LaplaceExponent("pure_stable;alpha=" + detail::fmt_double(alpha), value, deriv, 0.0,
                           true, 0.0);
  }

  bool in_domain(double w) const { return lower_closed_ ? w >= lower_ : w > lower_; }
  bool in_domain(cplx w) const { return in_domain(w.real()); }

  double operator()(double w) const {
    check(w);
    return value_(cplx(w, 0.0)).real();
  }
  cplx operator()(cplx w) const {
    check(w.real());
    return value_(w);
  }
  double derivative(double w) const {
    check(w);
    return derivative_(cplx(w, 0.0)).real();
  }
  cplx derivative(cplx w) const {
    check(w.real());
    return derivative_(w);
  }

  double domain_lower() const { return lower_; }
  // W(0) = 1/d with d the linear drift of the spectrally negative process:
  // 1 for the finite-variation families here, 0 otherwise.
  double w_at_zero() const { return w_at_zero_; }
  const std::string& key() const { return key_; }

 private:
  void check(double re) const {
    if (!in_domain(re) || std::isnan(re)) {
      throw DomainError("Laplace exponent " + key_ + " evaluated at Re w = " +
                        std::to_string(re) + " outside its domain");
    }
  }

  std::string key_;
  Fn value_;
  Fn derivative_;
  double lower_;
  bool lower_closed_;
  double w_at_zero_;
};

inline LaplaceExponent laplace_exponent(const LevyModel& m) {
  auto value = [m](cplx w) { return w + log_laplace(m, w); };
  auto deriv = [m](cplx w) { return 1.0 + log_laplace_derivative(m, w); };
  const bool closed = m.family() == Family::Stable;
  return LaplaceExponent(m.key(), value, deriv, laplace_domain_lower(m), closed,
                         m.has_finite_variation() ? 1.0 : 0.0);
}

}  // namespace levystore
