#include <doctest.h>

#include <cmath>
#include <set>

#include "imed/rng.hpp"

using namespace imed;

TEST_SUITE_BEGIN("rng");

TEST_CASE("streams are deterministic and key-separated") {
  auto s1 = rng::stream(42, {1, 2});
  auto s2 = rng::stream(42, {1, 2});
  auto s3 = rng::stream(42, {2, 1});
  for (int i = 0; i < 100; ++i) {
    const auto a = s1.next_u64();
    CHECK(a == s2.next_u64());
  }
  bool any_diff = false;
  auto s1b = rng::stream(42, {1, 2});
  for (int i = 0; i < 100; ++i) {
    if (s1b.next_u64() != s3.next_u64()) any_diff = true;
  }
  CHECK(any_diff);
}

TEST_CASE("uniforms live strictly inside (0,1)") {
  auto s = rng::stream(7, {});
  for (int i = 0; i < 100000; ++i) {
    const double u = s.next_uniform();
    CHECK(u > 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("normal moments") {
  auto s = rng::stream(11, {});
  const int n = 200000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = s.next_normal();
    sum += z;
    sum2 += z * z;
  }
  const double mean = sum / n;
  const double var = sum2 / n - mean * mean;
  CHECK(std::abs(mean) < 0.01);
  CHECK(std::abs(var - 1.0) < 0.02);
}

TEST_CASE("index draws stay in range and hit every value") {
  auto s = rng::stream(3, {9});
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 1000; ++i) {
    const auto v = s.next_index(7);
    CHECK(v < 7);
    seen.insert(v);
  }
  CHECK(seen.size() == 7);
}

TEST_CASE("name hash is stable across calls") {
  CHECK(rng::hash_name("m1") == rng::hash_name("m1"));
  CHECK(rng::hash_name("m1") != rng::hash_name("m2"));
}

TEST_SUITE_END();
