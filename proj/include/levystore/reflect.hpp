#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

#include "levystore/error.hpp"
#include "levystore/models.hpp"

namespace levystore {

// Net-supply path Y sampled on a time grid starting at (0, 0).
class SamplePath {
 public:
  SamplePath(std::vector<double> times, std::vector<double> values, LevyModel model)
      : times_(std::move(times)), values_(std::move(values)), model_(std::move(model)) {
    if (times_.empty() || times_.size() != values_.size()) {
      throw InvalidParameter("path", "times and values must be nonempty and of equal length");
    }
    if (times_[0] != 0.0 || values_[0] != 0.0) {
      throw InvalidParameter("path", "must start at time 0 with value 0");
    }
    for (std::size_t i = 1; i < times_.size(); ++i) {
      if (!(times_[i] > times_[i - 1])) {
        throw InvalidParameter("path", "times must be strictly increasing");
      }
    }
  }

  const std::vector<double>& times() const { return times_; }
  const std::vector<double>& values() const { return values_; }
  const LevyModel& model() const { return model_; }
  std::size_t size() const { return times_.size(); }

 private:
  std::vector<double> times_;
  std::vector<double> values_;
  LevyModel model_;
};

// Streaming form of the reflection map
//   Z(t) = z0 + Y(t) + max(0, -(min_{s<=t} Y(s) + z0)),
// fed one grid value of Y at a time.  Used by reflect() and by the Monte
// Carlo engine so both share the same arithmetic.
class Reflector {
 public:
  explicit Reflector(double z0) : z0_(z0) {
    if (!(z0 >= 0.0)) throw InvalidParameter("z0", "initial level must be >= 0");
  }

  double push(double y) {
    running_min_ = std::min(running_min_, y);
    return z0_ + y + std::max(0.0, -(running_min_ + z0_));
  }

  double running_min() const { return running_min_; }

 private:
  double z0_;
  double running_min_ = 0.0;
};

class ReflectedPath {
 public:
  ReflectedPath(SamplePath path, double z0, std::vector<double> levels)
      : path_(std::move(path)), z0_(z0), levels_(std::move(levels)) {}

  const SamplePath& path() const { return path_; }
  double z0() const { return z0_; }
  const std::vector<double>& levels() const { return levels_; }

 private:
  SamplePath path_;
  double z0_;
  std::vector<double> levels_;
};

inline ReflectedPath reflect(SamplePath path, double z0) {
  Reflector r(z0);
  std::vector<double> levels;
  levels.reserve(path.size());
  for (double y : path.values()) levels.push_back(r.push(y));
  return ReflectedPath(std::move(path), z0, std::move(levels));
}

inline double running_max(const ReflectedPath& reflected) {
  const auto& z = reflected.levels();
  return *std::max_element(z.begin(), z.end());
}

// First grid index with level strictly above u.
inline std::optional<std::size_t> first_passage_index(const ReflectedPath& reflected, double u) {
  if (!(u > 0.0)) throw InvalidParameter("u", "threshold must be > 0");
  const auto& z = reflected.levels();
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (z[i] > u) return i;
  }
  return std::nullopt;
}

}  // namespace levystore
