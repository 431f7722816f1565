#include <doctest.h>

#include "ddkl/rng.hpp"

using ddkl::Rng;

// Anchor values from an independent reimplementation of the generator
// (splitmix64-seeded xoshiro256++, 53-bit uniforms, Box-Muller normals).
TEST_CASE("rng stream anchors") {
  Rng r(1);
  CHECK(r.next_u64() == 14971601782005023387ULL);
  CHECK(r.next_u64() == 13781649495232077965ULL);
  CHECK(r.next_u64() == 1847458086238483744ULL);
  CHECK(r.uniform01() == 0.7462168706168104);
}

TEST_CASE("rng normal pair uses the cached spare") {
  Rng r(2024);
  CHECK(r.normal() == -0.3394559789942177);
  CHECK(r.normal() == 1.1710074763463498);
}

TEST_CASE("rng fork is independent of parent consumption") {
  Rng a(7);
  Rng b(7);
  for (int i = 0; i < 5; ++i) a.next_u64();
  CHECK(a.fork(2).next_u64() == b.fork(2).next_u64());
  CHECK(a.fork(2).next_u64() == 1537716861355576626ULL);
  CHECK(a.fork(2).next_u64() != a.fork(3).next_u64());
}

TEST_CASE("rng determinism and ranges") {
  Rng a(99), b(99);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  Rng r(5);
  for (int i = 0; i < 1000; ++i) {
    const double u = r.uniform01();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
  const double x = r.uniform(-2.0, 3.0);
  CHECK(x >= -2.0);
  CHECK(x < 3.0);
}
