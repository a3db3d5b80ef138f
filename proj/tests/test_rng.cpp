#include <algorithm>
#include <cmath>
#include <set>

#include "doctest.h"
#include "hpiln/rng.hpp"

using namespace hpiln;

TEST_CASE("same seed reproduces the sequence") {
  Rng a(42);
  Rng b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("uniform stays in [0, 1)") {
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    const double u = rng.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
  for (int i = 0; i < 100; ++i) {
    const double u = rng.uniform(-2.0, 3.0);
    CHECK(u >= -2.0);
    CHECK(u < 3.0);
  }
}

TEST_CASE("uniform_int bounds and degenerate n") {
  Rng rng(2);
  CHECK(rng.uniform_int(1) == 0);
  for (int i = 0; i < 1000; ++i) CHECK(rng.uniform_int(7) < 7);
  CHECK_THROWS_AS(rng.uniform_int(0), std::invalid_argument);
}

TEST_CASE("uniform_int covers every residue") {
  Rng rng(3);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 500; ++i) seen.insert(rng.uniform_int(5));
  CHECK(seen == std::set<std::uint64_t>{0, 1, 2, 3, 4});
}

TEST_CASE("normal draws are finite and roughly centered") {
  Rng rng(4);
  double sum = 0.0;
  double sumsq = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    CHECK(std::isfinite(x));
    sum += x;
    sumsq += x * x;
  }
  const double mean = sum / n;
  const double var = sumsq / n - mean * mean;
  CHECK(std::abs(mean) < 0.05);     // sd of the mean ~ 0.007
  CHECK(std::abs(var - 1.0) < 0.1);
}

TEST_CASE("sample_without_replacement yields distinct in-range values") {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const auto picks = rng.sample_without_replacement(10, 4);
    REQUIRE(picks.size() == 4);
    std::set<std::size_t> uniq(picks.begin(), picks.end());
    CHECK(uniq.size() == 4);
    for (const auto p : picks) CHECK(p < 10);
  }
  const auto all = rng.sample_without_replacement(6, 6);
  std::set<std::size_t> uniq(all.begin(), all.end());
  CHECK(uniq.size() == 6);
  CHECK_THROWS_AS(rng.sample_without_replacement(3, 4), std::invalid_argument);
}

TEST_CASE("shuffle permutes without losing elements") {
  Rng rng(6);
  std::vector<int> v{1, 2, 3, 4, 5, 6, 7};
  std::vector<int> orig = v;
  rng.shuffle(v);
  std::sort(v.begin(), v.end());
  CHECK(v == orig);
}

TEST_CASE("derive separates stages and is label-sensitive") {
  const auto a = Rng::derive(7, "train");
  const auto b = Rng::derive(7, "eval");
  const auto c = Rng::derive(8, "train");
  CHECK(a != b);
  CHECK(a != c);
  CHECK(a == Rng::derive(7, "train"));  // deterministic
}
