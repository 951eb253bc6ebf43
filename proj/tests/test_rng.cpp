#include <doctest.h>

#include <set>

#include "ttb/rng.hpp"

using namespace ttb;

TEST_CASE("rng is deterministic per seed") {
  Rng a(42), b(42), c(43);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  bool any_diff = false;
  Rng a2(42);
  for (int i = 0; i < 100; ++i) any_diff = any_diff || (a2.next_u64() != c.next_u64());
  CHECK(any_diff);
}

TEST_CASE("uniform_int stays in range and hits every value") {
  Rng rng(7);
  std::set<int> seen;
  for (int i = 0; i < 2000; ++i) {
    int v = rng.uniform_int(5);
    CHECK(v >= 0);
    CHECK(v < 5);
    seen.insert(v);
  }
  CHECK(seen.size() == 5);
}

TEST_CASE("shuffle produces a permutation") {
  Rng rng(3);
  std::vector<int> v{0, 1, 2, 3, 4, 5, 6, 7};
  auto orig = v;
  rng.shuffle(v);
  auto sorted = v;
  std::sort(sorted.begin(), sorted.end());
  CHECK(sorted == orig);
}

TEST_CASE("child streams are independent of tag") {
  Rng base(99);
  Rng c0 = base.child(0), c1 = base.child(1), c0_again = base.child(0);
  CHECK(c0.next_u64() == c0_again.next_u64());
  Rng c0_b = base.child(0);
  CHECK(c0_b.next_u64() != c1.next_u64());
}

TEST_CASE("uniform_real is in [0,1)") {
  Rng rng(5);
  for (int i = 0; i < 1000; ++i) {
    double v = rng.uniform_real();
    CHECK(v >= 0.0);
    CHECK(v < 1.0);
  }
}
