#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <vector>

#include <gtest/gtest.h>

#include "levystore/scale_cache.hpp"

using namespace levystore;
namespace fs = std::filesystem;

namespace {

class CacheTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("levystore-cache-test-" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
            "-" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  fs::path dir_;
};

const std::vector<double> grid = {0.0, 0.5, 1.0, 2.0};

}  // namespace

TEST_F(CacheTest, RoundTripIsExact) {
  const auto psi = laplace_exponent(LevyModel::gamma(1, 1));
  const auto t = scale_function(psi, 0.5, grid);
  ScaleCache c(dir_);
  c.store(t);
  const auto back = c.load(psi.key(), 0.5, grid);
  ASSERT_TRUE(back.has_value());
  EXPECT_EQ(back->exponent_key, t.exponent_key);
  EXPECT_EQ(back->grid, t.grid);
  EXPECT_EQ(back->w_values, t.w_values);
  EXPECT_EQ(back->wbar_values, t.wbar_values);
  EXPECT_EQ(back->k_values, t.k_values);
  EXPECT_EQ(back->inversion_error, t.inversion_error);
}

TEST_F(CacheTest, MismatchedKeysMiss) {
  const auto psi = laplace_exponent(LevyModel::gamma(1, 1));
  ScaleCache c(dir_);
  c.store(scale_function(psi, 0.5, grid));
  EXPECT_FALSE(c.load(psi.key(), 0.6, grid).has_value());
  EXPECT_FALSE(c.load(psi.key(), 0.5, {0.0, 0.5}).has_value());
  EXPECT_FALSE(c.load(laplace_exponent(LevyModel::gamma(2, 1)).key(), 0.5, grid).has_value());
}

TEST_F(CacheTest, CorruptOrOldRecordsMiss) {
  const auto psi = laplace_exponent(LevyModel::inverse_gaussian(1, 1));
  ScaleCache c(dir_);
  fs::create_directories(dir_);
  std::ofstream(c.path_for(psi.key(), 1.0, grid)) << "{not json";
  EXPECT_FALSE(c.load(psi.key(), 1.0, grid).has_value());
  std::ofstream(c.path_for(psi.key(), 1.0, grid)) << R"({"format":"levystore-scale-table","version":0})";
  EXPECT_FALSE(c.load(psi.key(), 1.0, grid).has_value());
  const auto t = c.get_or_compute(psi, 1.0, grid);
  EXPECT_TRUE(c.load(psi.key(), 1.0, grid).has_value());
  EXPECT_EQ(c.stats().misses, 1u);
  EXPECT_EQ(t.w_values.size(), grid.size());
}

TEST_F(CacheTest, SecondLookupHits) {
  const auto psi = laplace_exponent(LevyModel::gamma(1, 1, Orientation::Inventory));
  ScaleCache c(dir_);
  const auto a = c.get_or_compute(psi, 2.0, grid);
  const auto b = c.get_or_compute(psi, 2.0, grid);
  EXPECT_EQ(a.k_values, b.k_values);
  const auto s = c.stats();
  EXPECT_EQ(s.hits, 1u);
  EXPECT_EQ(s.misses, 1u);
  EXPECT_EQ(s.files, 1u);
  EXPECT_GT(s.bytes, 0u);
}

TEST_F(CacheTest, TablesAreSharedAcrossOrientations) {
  ScaleCache c(dir_);
  c.get_or_compute(laplace_exponent(LevyModel::gamma(1, 1, Orientation::Storage)), 1.0, grid);
  c.get_or_compute(laplace_exponent(LevyModel::gamma(1, 1, Orientation::Inventory)), 1.0, grid);
  EXPECT_EQ(c.stats().hits, 1u);
}

TEST_F(CacheTest, ClearRemovesRecordsOnly) {
  ScaleCache c(dir_);
  c.get_or_compute(laplace_exponent(LevyModel::gamma(1, 1)), 0.5, grid);
  c.get_or_compute(laplace_exponent(LevyModel::gamma(1, 1)), 1.5, grid);
  std::ofstream(dir_ / "notes.txt") << "keep";
  EXPECT_EQ(c.clear(), 2u);
  EXPECT_EQ(c.stats().files, 0u);
  EXPECT_TRUE(fs::exists(dir_ / "notes.txt"));
  EXPECT_EQ(ScaleCache(dir_ / "absent").clear(), 0u);
}

TEST_F(CacheTest, DirectoryFromEnvironment) {
  ::setenv("LEVYSTORE_CACHE_DIR", dir_.c_str(), 1);
  EXPECT_EQ(ScaleCache::default_directory(), dir_);
  ::unsetenv("LEVYSTORE_CACHE_DIR");
  ::setenv("XDG_CACHE_HOME", "/tmp/xdg", 1);
  EXPECT_EQ(ScaleCache::default_directory(), fs::path("/tmp/xdg/levystore"));
  ::unsetenv("XDG_CACHE_HOME");
}

TEST(CacheKey, HashCoversEveryField) {
  const std::string k = LaplaceExponent::pure_stable(1.5).key();
  EXPECT_EQ(table_key_hash(k, 1.0, grid), table_key_hash(k, 1.0, grid));
  EXPECT_NE(table_key_hash(k, 1.0, grid), table_key_hash(k, 1.0 + 1e-15, grid));
  EXPECT_NE(table_key_hash(k, 1.0, grid), table_key_hash(k, 1.0, {0.0, 0.5, 1.0}));
  EXPECT_NE(grid_hash({0.0, 1.0}), grid_hash({0.0, 1.0 + 1e-15}));
}
