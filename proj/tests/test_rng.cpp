#include <doctest.h>

#include "wnet/rng.hpp"

using namespace wnet;

TEST_CASE("same seed, same stream") {
  Rng a(42), b(42);
  for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("uniform stays in range") {
  Rng rng(7);
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.uniform(-2.5, 3.5);
    CHECK(u >= -2.5);
    CHECK(u < 3.5);
  }
}

TEST_CASE("uniform_int covers the whole inclusive range") {
  Rng rng(3);
  bool seen[5] = {false, false, false, false, false};
  for (int i = 0; i < 2000; ++i) {
    const int v = rng.uniform_int(1, 5);
    REQUIRE(v >= 1);
    REQUIRE(v <= 5);
    seen[v - 1] = true;
  }
  for (bool s : seen) CHECK(s);
}

TEST_CASE("normal has roughly unit moments") {
  Rng rng(11);
  double sum = 0, sq = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    sum += z;
    sq += z * z;
  }
  CHECK(std::abs(sum / n) < 0.02);
  CHECK(std::abs(sq / n - 1.0) < 0.02);
}

TEST_CASE("derived seeds differ by tag and index") {
  const uint64_t base = 1234;
  CHECK(derive_seed(base, "streak") != derive_seed(base, "drop"));
  CHECK(derive_seed(base, "streak", 0) != derive_seed(base, "streak", 1));
  CHECK(derive_seed(base, "streak", 3) == derive_seed(base, "streak", 3));
}
