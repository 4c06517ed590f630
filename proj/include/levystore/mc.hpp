#pragma once

// Monte Carlo oracle: exact-in-distribution increments of X on a grid,
// reflected on the fly, and plain sample-mean estimators.
//
// Randomness: xoshiro256** with one stream per path, seeded by splitmix64
// from (seed, path index).  Per-path outcomes are reduced in path order, so
// results do not depend on the number of worker threads.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <random>
#include <thread>
#include <variant>
#include <vector>

#include "levystore/distributions.hpp"
#include "levystore/error.hpp"
#include "levystore/models.hpp"
#include "levystore/reflect.hpp"

namespace levystore::mc {

inline std::uint64_t splitmix64(std::uint64_t& x) {
  std::uint64_t z = (x += 0x9E3779B97F4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

class Xoshiro256 {
 public:
  using result_type = std::uint64_t;

  explicit Xoshiro256(std::uint64_t seed) {
    for (auto& s : s_) s = splitmix64(seed);
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform on the open interval (0, 1).
  double uniform() { return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53; }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  std::array<std::uint64_t, 4> s_{};
};

inline Xoshiro256 path_stream(std::uint64_t seed, std::uint64_t path) {
  std::uint64_t x = seed;
  const std::uint64_t a = splitmix64(x);
  std::uint64_t y = path ^ 0xD1B54A32D192ED03ull;
  return Xoshiro256(a ^ splitmix64(y));
}

// Draws from the law of X(dt) with constants fixed at construction.
class IncrementSampler {
 public:
  IncrementSampler(const LevyModel& m, double dt) : model_(m), dt_(dt) {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidParameter("dt", "step must be > 0");
    std::visit([this](const auto& p) { setup(p); }, m.params());
  }

  template <class Rng>
  double operator()(Rng& rng) {
    return std::visit([&](const auto& p) { return draw(p, rng); }, model_.params());
  }

  double dt() const { return dt_; }
  unsigned substeps() const { return substeps_; }

 private:
  struct StableConstants {
    double alpha = 0, b = 0, s = 0, scale = 1, location = 0;
  };

  void setup(const GammaParams& p) { gamma_ = std::gamma_distribution<double>(p.a * dt_, p.b); }
  void setup(const InverseGaussianParams& p) {
    ig_mu_ = p.delta * dt_ / p.gamma;
    ig_lambda_ = p.delta * p.delta * dt_ * dt_;
  }
  void setup(const StableParams& p) { stable_ = stable_constants(p.alpha, p.sigma, dt_); }
  void setup(const TemperedStableParams& p) {
    // Sub-steps keep the acceptance probability e^{-lambda (S + K)} of order
    // e^{-1}, with K the lower edge (location - 10 scale) of the proposal.
    auto edge = [&](double h) {
      const auto c = stable_constants(p.alpha, p.sigma, h);
      return 10.0 * c.scale - c.location;
    };
    substeps_ = 1;
    while (p.lambda * edge(dt_ / substeps_) > 1.5) {
      substeps_ *= 2;
      if (substeps_ > (1u << 24)) throw SamplerFailure("tempered stable: step too large to sample");
    }
    const double h = dt_ / substeps_;
    stable_ = stable_constants(p.alpha, p.sigma, h);
    tempered_edge_ = edge(h);
    tempered_shift_ = h * levystore::detail::stable_tilt(p).second;
  }
  void setup(const CompoundPoissonExpParams& p) {
    poisson_ = std::poisson_distribution<long>(p.rate * dt_);
  }
  void setup(const DegenerateParams&) {}

  static StableConstants stable_constants(double alpha, double sigma, double h) {
    StableConstants c;
    c.alpha = alpha;
    const auto sc = stable_scaling(alpha, sigma, h);
    c.scale = sc.scale;
    c.location = sc.location;
    if (alpha != 1.0) {
      const double t = std::tan(std::numbers::pi * alpha / 2.0);
      c.b = std::atan(t) / alpha;
      c.s = std::pow(1.0 + t * t, 1.0 / (2.0 * alpha));
    }
    return c;
  }

  // Chambers-Mallows-Stuck for the standard beta = 1 law of stable.hpp.
  template <class Rng>
  static double standard_stable(const StableConstants& c, Rng& rng) {
    const double v = std::numbers::pi * (rng.uniform() - 0.5);
    const double w = -std::log(rng.uniform());
    if (c.alpha == 1.0) {
      const double h = std::numbers::pi / 2.0 + v;
      return 2.0 / std::numbers::pi *
             (h * std::tan(v) - std::log(std::numbers::pi / 2.0 * w * std::cos(v) / h));
    }
    const double a = c.alpha;
    const double av = a * (v + c.b);
    return c.s * std::sin(av) / std::pow(std::cos(v), 1.0 / a) *
           std::pow(std::cos(v - av) / w, (1.0 - a) / a);
  }

  template <class Rng>
  double draw(const GammaParams&, Rng& rng) {
    return gamma_(rng);
  }

  // Michael-Schucany-Haas, using the larger root to avoid cancellation.
  template <class Rng>
  double draw(const InverseGaussianParams&, Rng& rng) {
    const double nu = normal_(rng);
    const double y = nu * nu;
    const double mu = ig_mu_, lam = ig_lambda_;
    const double x2 = mu + mu * mu * y / (2.0 * lam) +
                      mu / (2.0 * lam) * std::sqrt(4.0 * mu * lam * y + mu * mu * y * y);
    const double x1 = mu * mu / x2;
    return rng.uniform() <= mu / (mu + x1) ? x1 : x2;
  }

  template <class Rng>
  double draw(const StableParams&, Rng& rng) {
    return stable_.scale * standard_stable(stable_, rng) + stable_.location;
  }

  template <class Rng>
  double draw(const TemperedStableParams& p, Rng& rng) {
    double total = 0.0;
    for (unsigned k = 0; k < substeps_; ++k) {
      int tries = 0;
      for (;;) {
        const double s = stable_.scale * standard_stable(stable_, rng) + stable_.location;
        if (rng.uniform() <= std::exp(-p.lambda * (s + tempered_edge_))) {
          total += s + tempered_shift_;
          break;
        }
        if (++tries > 100000) throw SamplerFailure("tempered stable rejection budget exhausted");
      }
    }
    return total;
  }

  template <class Rng>
  double draw(const CompoundPoissonExpParams& p, Rng& rng) {
    const long n = poisson_(rng);
    if (n == 0) return 0.0;
    std::gamma_distribution<double> sum(static_cast<double>(n), p.mean_jump);
    return sum(rng);
  }

  template <class Rng>
  double draw(const DegenerateParams&, Rng&) {
    return 0.0;
  }

  LevyModel model_;
  double dt_;
  unsigned substeps_ = 1;
  std::gamma_distribution<double> gamma_;
  std::normal_distribution<double> normal_;
  std::poisson_distribution<long> poisson_;
  double ig_mu_ = 0, ig_lambda_ = 0;
  StableConstants stable_;
  double tempered_edge_ = 0, tempered_shift_ = 0;
};

// One draw of X(dt).  Builds a sampler each call; use IncrementSampler in loops.
template <class Rng>
double sample_increment(const LevyModel& m, double dt, Rng& rng) {
  IncrementSampler s(m, dt);
  return s(rng);
}

struct SimulationConfig {
  LevyModel model;
  double horizon;
  double step;
  std::size_t paths;
  std::uint64_t seed;
  double z0 = 0.0;
  unsigned threads = 1;
};

inline void validate(const SimulationConfig& c) {
  if (!(c.horizon > 0.0) || !std::isfinite(c.horizon)) {
    throw InvalidParameter("horizon", "must be > 0");
  }
  if (!(c.step > 0.0) || c.step > c.horizon) throw InvalidParameter("step", "need 0 < step <= t");
  if (c.paths < 1) throw InvalidParameter("paths", "need at least one path");
  if (!(c.z0 >= 0.0)) throw InvalidParameter("z0", "initial level must be >= 0");
}

inline std::size_t grid_steps(double t, double step) {
  const double n = t / step;
  const double r = std::round(n);
  if (std::abs(n - r) > 1e-9 * std::max(1.0, n)) {
    throw InvalidParameter("t", "time " + std::to_string(t) + " is not on the simulation grid");
  }
  return static_cast<std::size_t>(r);
}

// Y at time t given the accumulated input X(t): X - t (storage) or t - X
// (inventory).  Kept as a difference of totals so drift does not accumulate
// rounding.
inline double net_value(Orientation o, double x, double t) {
  return o == Orientation::Storage ? x - t : t - x;
}

// Path `index` of the ensemble on the grid 0, step, ..., horizon.
inline ReflectedPath simulate_path(const SimulationConfig& cfg, std::size_t index) {
  validate(cfg);
  const std::size_t n = grid_steps(cfg.horizon, cfg.step);
  auto rng = path_stream(cfg.seed, index);
  IncrementSampler sampler(cfg.model, cfg.step);
  std::vector<double> times(n + 1), values(n + 1);
  double x = 0.0;
  for (std::size_t k = 1; k <= n; ++k) {
    x += sampler(rng);
    times[k] = static_cast<double>(k) * cfg.step;
    values[k] = net_value(cfg.model.orientation(), x, times[k]);
  }
  return reflect(SamplePath(std::move(times), std::move(values), cfg.model), cfg.z0);
}

// Lazily generated ensemble, one ReflectedPath per call to next().
class EnsembleStream {
 public:
  explicit EnsembleStream(SimulationConfig cfg) : cfg_(std::move(cfg)) { validate(cfg_); }
  std::optional<ReflectedPath> next() {
    if (index_ >= cfg_.paths) return std::nullopt;
    return simulate_path(cfg_, index_++);
  }
  std::size_t index() const { return index_; }

 private:
  SimulationConfig cfg_;
  std::size_t index_ = 0;
};

inline EnsembleStream simulate_reflected_ensemble(const SimulationConfig& cfg) {
  return EnsembleStream(cfg);
}

// CSV dump: header "path_id,time,y,z", one row per grid point.
inline void write_paths_csv(std::ostream& out, const std::vector<ReflectedPath>& paths) {
  out << "path_id,time,y,z\n";
  out.precision(17);
  for (std::size_t p = 0; p < paths.size(); ++p) {
    const auto& t = paths[p].path().times();
    const auto& y = paths[p].path().values();
    const auto& z = paths[p].levels();
    for (std::size_t i = 0; i < t.size(); ++i) {
      out << p << ',' << t[i] << ',' << y[i] << ',' << z[i] << '\n';
    }
  }
}

// Functionals.
struct LevelExceeds {  // 1{Z(t) > u}; u = 0 gives the busy indicator
  double u, t;
};
struct MaxExceeds {  // 1{max_{s<=t} Z(s) > u}
  double u, t;
};
// Passage times are the first grid time with Z >= u.
struct TauMean {  // tau(u), horizon extended up to horizon * 2^max_doublings
  double u;
  int max_doublings = 12;
};
struct TauTransform {  // e^{-r tau(u)}, paths stopped once e^{-r s} < 1e-8 (r = 0: 1{tau < inf})
  double u, r;
};
struct LevelAtLeastZero {  // 1{Z(t) >= 0}; a constant functional for checks
  double t;
};
using Functional = std::variant<LevelExceeds, MaxExceeds, TauMean, TauTransform, LevelAtLeastZero>;

struct EstimatorResult {
  double estimate = 0.0;
  double std_error = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::size_t paths = 0;
  std::size_t censored = 0;  // TauMean draws with no passage by the extended horizon
  bool right_censored = false;
};

namespace detail {

inline constexpr double kTransformCut = 1e-8;

struct FunctionalState {
  std::size_t end_step = 0;  // last grid step (fine grid) the functional needs
  bool tau = false;
  double u = 0.0;
};

inline EstimatorResult summarise(const std::vector<double>& v, std::size_t censored) {
  // Two-pass mean and variance in path order.
  EstimatorResult r;
  r.paths = v.size();
  double sum = 0.0;
  for (double x : v) sum += x;
  const double mean = sum / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  const double var = v.size() > 1 ? ss / static_cast<double>(v.size() - 1) : 0.0;
  r.estimate = mean;
  r.std_error = std::sqrt(var / static_cast<double>(v.size()));
  r.ci_low = mean - 1.959963984540054 * r.std_error;
  r.ci_high = mean + 1.959963984540054 * r.std_error;
  r.censored = censored;
  r.right_censored = censored > 0;
  return r;
}

}  // namespace detail

// Estimates every functional from one ensemble at each coarsening factor c:
// the path is monitored on the grid with step c * cfg.step, built from the
// same fine increments (common random numbers).  results[i][j] belongs to
// factor i and functional j.
inline std::vector<std::vector<EstimatorResult>> estimate_many(
    const std::vector<Functional>& fs, const SimulationConfig& cfg,
    const std::vector<unsigned>& factors = {1}) {
  validate(cfg);
  if (factors.empty()) throw InvalidParameter("factors", "need at least one coarsening factor");
  const std::size_t nf = fs.size(), nc = factors.size();
  const double dt = cfg.step;
  const auto orientation = cfg.model.orientation();
  const std::size_t horizon_steps = grid_steps(cfg.horizon, dt);

  // Per-functional step budgets.
  std::vector<detail::FunctionalState> st(nf);
  std::size_t max_steps = 0;
  for (std::size_t j = 0; j < nf; ++j) {
    std::visit(
        [&](const auto& f) {
          using T = std::decay_t<decltype(f)>;
          if constexpr (std::is_same_v<T, LevelExceeds> || std::is_same_v<T, MaxExceeds> ||
                        std::is_same_v<T, LevelAtLeastZero>) {
            if (!(f.t > 0.0) || f.t > cfg.horizon * (1 + 1e-12)) {
              throw InvalidParameter("t", "functional time must lie in (0, horizon]");
            }
            st[j].end_step = grid_steps(f.t, dt);
            for (unsigned c : factors) grid_steps(f.t, dt * c);
            if constexpr (std::is_same_v<T, LevelExceeds>) {
              if (!(f.u >= 0.0)) throw InvalidParameter("u", "threshold must be >= 0");
            } else if constexpr (std::is_same_v<T, MaxExceeds>) {
              if (!(f.u > 0.0)) throw InvalidParameter("u", "threshold must be > 0");
            }
          } else if constexpr (std::is_same_v<T, TauMean>) {
            if (!(f.u > 0.0)) throw InvalidParameter("u", "threshold must be > 0");
            if (cfg.z0 > f.u) throw InvalidParameter("z0", "requires z0 <= u");
            st[j].tau = true;
            st[j].u = f.u;
            st[j].end_step = horizon_steps << f.max_doublings;
          } else {
            if (!(f.u > 0.0)) throw InvalidParameter("u", "threshold must be > 0");
            if (!(f.r >= 0.0)) throw InvalidParameter("r", "rate must be >= 0");
            if (cfg.z0 > f.u) throw InvalidParameter("z0", "requires z0 <= u");
            st[j].tau = true;
            st[j].u = f.u;
            st[j].end_step =
                f.r > 0.0 ? static_cast<std::size_t>(
                                std::ceil(-std::log(detail::kTransformCut) / f.r / dt))
                          : horizon_steps << 12;
          }
        },
        fs[j]);
    max_steps = std::max(max_steps, st[j].end_step);
  }

  // outcome[(path * nc + c) * nf + j]; censor flags alongside.
  std::vector<double> outcome(cfg.paths * nc * nf, 0.0);
  std::vector<unsigned char> censor(cfg.paths * nc * nf, 0);

  auto run_path = [&](std::size_t p) {
    auto rng = path_stream(cfg.seed, p);
    IncrementSampler sampler(cfg.model, dt);
    std::vector<Reflector> refl(nc, Reflector(cfg.z0));
    std::vector<double> running_max(nc * nf, cfg.z0);
    std::vector<unsigned char> done(nc * nf, 0);
    std::size_t open = nc * nf;
    double* out = &outcome[p * nc * nf];
    unsigned char* cen = &censor[p * nc * nf];

    // Started at the threshold, passage is immediate when u is regular: always
    // upward for the inventory model, and for storage with infinite variation.
    const bool immediate = orientation == Orientation::Inventory || !cfg.model.has_finite_variation();
    for (std::size_t c = 0; c < nc; ++c) {
      for (std::size_t j = 0; j < nf; ++j) {
        const std::size_t idx = c * nf + j;
        if (st[j].tau && immediate && cfg.z0 >= st[j].u) {
          out[idx] = std::holds_alternative<TauMean>(fs[j]) ? 0.0 : 1.0;
          done[idx] = 1;
          --open;
        }
      }
    }

    double x = 0.0;
    for (std::size_t k = 1; k <= max_steps && open > 0; ++k) {
      x += sampler(rng);
      const double time = static_cast<double>(k) * dt;
      const double y = net_value(orientation, x, time);
      for (std::size_t c = 0; c < nc; ++c) {
        if (k % factors[c] != 0) continue;
        const double z = refl[c].push(y);
        for (std::size_t j = 0; j < nf; ++j) {
          const std::size_t idx = c * nf + j;
          if (done[idx]) continue;
          std::visit(
              [&](const auto& f) {
                using T = std::decay_t<decltype(f)>;
                if constexpr (std::is_same_v<T, LevelExceeds>) {
                  if (k == st[j].end_step) {
                    out[idx] = z > f.u ? 1.0 : 0.0;
                    done[idx] = 1;
                  }
                } else if constexpr (std::is_same_v<T, LevelAtLeastZero>) {
                  if (k == st[j].end_step) {
                    out[idx] = z >= 0.0 ? 1.0 : 0.0;
                    done[idx] = 1;
                  }
                } else if constexpr (std::is_same_v<T, MaxExceeds>) {
                  running_max[idx] = std::max(running_max[idx], z);
                  if (running_max[idx] > f.u) {
                    out[idx] = 1.0;
                    done[idx] = 1;
                  } else if (k == st[j].end_step) {
                    out[idx] = 0.0;
                    done[idx] = 1;
                  }
                } else if constexpr (std::is_same_v<T, TauMean>) {
                  if (z >= f.u) {
                    out[idx] = time;
                    done[idx] = 1;
                  } else if (k + factors[c] > st[j].end_step) {
                    out[idx] = time;
                    cen[idx] = 1;
                    done[idx] = 1;
                  }
                } else if constexpr (std::is_same_v<T, TauTransform>) {
                  if (z >= f.u) {
                    out[idx] = std::exp(-f.r * time);
                    done[idx] = 1;
                  } else if (k + factors[c] > st[j].end_step) {
                    out[idx] = 0.0;
                    done[idx] = 1;
                  }
                }
              },
              fs[j]);
          if (done[idx]) --open;
        }
      }
    }
  };

  const unsigned threads = std::max(1u, std::min<unsigned>(cfg.threads, cfg.paths));
  if (threads == 1) {
    for (std::size_t p = 0; p < cfg.paths; ++p) run_path(p);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(threads);
    for (unsigned w = 0; w < threads; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t p = w; p < cfg.paths; p += threads) run_path(p);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  std::vector<std::vector<EstimatorResult>> results(nc, std::vector<EstimatorResult>(nf));
  std::vector<double> column(cfg.paths);
  for (std::size_t c = 0; c < nc; ++c) {
    for (std::size_t j = 0; j < nf; ++j) {
      std::size_t censored = 0;
      for (std::size_t p = 0; p < cfg.paths; ++p) {
        const std::size_t idx = (p * nc + c) * nf + j;
        column[p] = outcome[idx];
        censored += censor[idx];
      }
      if (censored == cfg.paths) {
        throw SamplerFailure("every path is right-censored: no passage within the horizon budget");
      }
      results[c][j] = detail::summarise(column, censored);
    }
  }
  return results;
}

inline EstimatorResult estimate(const Functional& f, const SimulationConfig& cfg) {
  return estimate_many({f}, cfg).front().front();
}

}  // namespace levystore::mc
