#pragma once

// On-disk cache of scale-function tables.
//
// One JSON document per table, named <hash>.json where the hash (FNV-1a 64)
// covers the exponent key, r and the grid.  Layout, format version 1:
//   {"format": "levystore-scale-table", "version": 1,
//    "key": "<exponent key>", "r": <double>, "grid_hash": "<hex>",
//    "grid": [...], "w": [...], "wbar": [...], "k": [...],
//    "inversion_error": <double>}
// Doubles are written in shortest round-trip form.  Unreadable, mismatched or
// older-version files are treated as misses and overwritten.

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "levystore/scale.hpp"

namespace levystore {

inline constexpr int kScaleCacheVersion = 1;

namespace detail {

inline std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t h = 0xCBF29CE484222325ull) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001B3ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << v;
  return s.str();
}

}  // namespace detail

inline std::string grid_hash(const std::vector<double>& grid) {
  return detail::hex64(detail::fnv1a(grid.data(), grid.size() * sizeof(double)));
}

inline std::string table_key_hash(const std::string& key, double r, const std::vector<double>& grid) {
  std::uint64_t h = detail::fnv1a(key.data(), key.size());
  h = detail::fnv1a(&r, sizeof r, h);
  h = detail::fnv1a(grid.data(), grid.size() * sizeof(double), h);
  return detail::hex64(h);
}

struct CacheStats {
  std::size_t files = 0;
  std::uintmax_t bytes = 0;
  std::size_t hits = 0;    // this process
  std::size_t misses = 0;  // this process
};

class ScaleCache {
 public:
  explicit ScaleCache(std::filesystem::path dir) : dir_(std::move(dir)) {}

  // LEVYSTORE_CACHE_DIR, else $XDG_CACHE_HOME/levystore, else ~/.cache/levystore.
  static std::filesystem::path default_directory() {
    if (const char* d = std::getenv("LEVYSTORE_CACHE_DIR"); d && *d) return d;
    if (const char* x = std::getenv("XDG_CACHE_HOME"); x && *x) {
      return std::filesystem::path(x) / "levystore";
    }
    if (const char* h = std::getenv("HOME"); h && *h) {
      return std::filesystem::path(h) / ".cache" / "levystore";
    }
    return std::filesystem::temp_directory_path() / "levystore";
  }

  static ScaleCache from_environment() { return ScaleCache(default_directory()); }

  const std::filesystem::path& directory() const { return dir_; }

  std::filesystem::path path_for(const std::string& key, double r,
                                 const std::vector<double>& grid) const {
    return dir_ / (table_key_hash(key, r, grid) + ".json");
  }

  std::optional<ScaleFunctionTable> load(const std::string& key, double r,
                                         const std::vector<double>& grid) const {
    std::ifstream in(path_for(key, r, grid));
    if (!in) return std::nullopt;
    try {
      const auto j = nlohmann::json::parse(in);
      if (j.at("format") != "levystore-scale-table" || j.at("version") != kScaleCacheVersion) {
        return std::nullopt;
      }
      ScaleFunctionTable t;
      t.exponent_key = j.at("key").get<std::string>();
      t.r = j.at("r").get<double>();
      t.grid = j.at("grid").get<std::vector<double>>();
      if (t.exponent_key != key || t.r != r || t.grid != grid) return std::nullopt;
      t.w_values = j.at("w").get<std::vector<double>>();
      t.wbar_values = j.at("wbar").get<std::vector<double>>();
      t.k_values = j.at("k").get<std::vector<double>>();
      t.inversion_error = j.at("inversion_error").get<double>();
      if (t.w_values.size() != grid.size() || t.wbar_values.size() != grid.size() ||
          t.k_values.size() != grid.size()) {
        return std::nullopt;
      }
      return t;
    } catch (const nlohmann::json::exception&) {
      return std::nullopt;
    }
  }

  // Writes to a temporary file and renames, so concurrent readers never see
  // a partial record.
  void store(const ScaleFunctionTable& t) const {
    std::filesystem::create_directories(dir_);
    nlohmann::json j = {{"format", "levystore-scale-table"},
                        {"version", kScaleCacheVersion},
                        {"key", t.exponent_key},
                        {"r", t.r},
                        {"grid_hash", grid_hash(t.grid)},
                        {"grid", t.grid},
                        {"w", t.w_values},
                        {"wbar", t.wbar_values},
                        {"k", t.k_values},
                        {"inversion_error", t.inversion_error}};
    const auto target = path_for(t.exponent_key, t.r, t.grid);
    auto tmp = target;
    tmp += ".tmp" + std::to_string(reinterpret_cast<std::uintptr_t>(&t));
    {
      std::ofstream out(tmp);
      if (!out) throw Error("cannot write cache file " + tmp.string());
      out << j.dump() << '\n';
    }
    std::filesystem::rename(tmp, target);
  }

  ScaleFunctionTable get_or_compute(const LaplaceExponent& psi, double r,
                                    const std::vector<double>& grid,
                                    const ScaleOptions& opts = {}) {
    if (auto t = load(psi.key(), r, grid)) {
      std::lock_guard lock(mutex_);
      ++hits_;
      return *t;
    }
    auto t = scale_function(psi, r, grid, opts);
    store(t);
    std::lock_guard lock(mutex_);
    ++misses_;
    return t;
  }

  CacheStats stats() const {
    CacheStats s;
    if (std::filesystem::is_directory(dir_)) {
      for (const auto& e : std::filesystem::directory_iterator(dir_)) {
        if (e.is_regular_file() && e.path().extension() == ".json") {
          ++s.files;
          s.bytes += e.file_size();
        }
      }
    }
    std::lock_guard lock(mutex_);
    s.hits = hits_;
    s.misses = misses_;
    return s;
  }

  // Removes cache records only; returns the number removed.
  std::size_t clear() const {
    std::size_t n = 0;
    if (!std::filesystem::is_directory(dir_)) return 0;
    for (const auto& e : std::filesystem::directory_iterator(dir_)) {
      if (e.is_regular_file() && e.path().extension() == ".json") {
        std::filesystem::remove(e.path());
        ++n;
      }
    }
    return n;
  }

 private:
  std::filesystem::path dir_;
  mutable std::mutex mutex_;
  std::size_t hits_ = 0;
  std::size_t misses_ = 0;
};

}  // namespace levystore
