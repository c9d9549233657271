#include <algorithm>
#include <set>

#include "doctest.h"
#include "prefgeom/rng.hpp"

using namespace prefgeom;

TEST_CASE("rng streams are deterministic per seed") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  Rng c(43);
  CHECK(Rng(42).next_u64() != c.next_u64());
}

TEST_CASE("split streams differ from parent and each other") {
  Rng root(7);
  Rng s0 = root.split(0);
  Rng s1 = root.split(1);
  CHECK(s0.next_u64() != s1.next_u64());
  // splitting does not disturb the parent stream
  Rng fresh(7);
  CHECK(root.next_u64() == fresh.next_u64());
}

TEST_CASE("uniform stays in [0, 1) and has sane mean") {
  Rng rng(1);
  double sum = 0.0;
  for (int i = 0; i < 20000; ++i) {
    double u = rng.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    sum += u;
  }
  CHECK(sum / 20000 == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("uniform_int covers the range without bias artifacts") {
  Rng rng(2);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 1000; ++i) {
    std::uint64_t v = rng.uniform_int(7);
    CHECK(v < 7);
    seen.insert(v);
  }
  CHECK(seen.size() == 7);
}

TEST_CASE("normal has approximately unit variance") {
  Rng rng(3);
  double sum = 0.0, ss = 0.0;
  const int n = 50000;
  for (int i = 0; i < n; ++i) {
    double x = rng.normal();
    sum += x;
    ss += x * x;
  }
  const double mean = sum / n;
  CHECK(std::abs(mean) < 0.02);
  CHECK(ss / n - mean * mean == doctest::Approx(1.0).epsilon(0.03));
}

TEST_CASE("shuffle is a permutation and seed-deterministic") {
  std::vector<int> v{1, 2, 3, 4, 5, 6, 7, 8, 9};
  std::vector<int> w = v;
  Rng(9).shuffle(v);
  Rng(9).shuffle(w);
  CHECK(v == w);
  std::vector<int> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  CHECK(sorted == std::vector<int>{1, 2, 3, 4, 5, 6, 7, 8, 9});
}
