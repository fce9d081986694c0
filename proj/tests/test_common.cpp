#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "eagcl/common.hpp"

using namespace eagcl;

TEST_CASE("derive_seed is deterministic and purpose-separated") {
  CHECK(derive_seed(1, "emb") == derive_seed(1, "emb"));
  CHECK(derive_seed(1, "emb") != derive_seed(2, "emb"));
  CHECK(derive_seed(1, "emb") != derive_seed(1, "w1"));
  CHECK(derive_seed(1, "round", 0, 0) != derive_seed(1, "round", 0, 1));
  CHECK(derive_seed(1, "round", 1, 0) != derive_seed(1, "round", 0, 1));
}

TEST_CASE("Rng streams are reproducible") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  Rng c(43);
  CHECK(a.next_u64() != c.next_u64());
}

TEST_CASE("Rng next_double stays in [0,1)") {
  Rng rng(7);
  for (int i = 0; i < 1000; ++i) {
    double x = rng.next_double();
    CHECK(x >= 0.0);
    CHECK(x < 1.0);
  }
}

TEST_CASE("Rng next_below respects the bound") {
  Rng rng(11);
  for (int i = 0; i < 1000; ++i) CHECK(rng.next_below(17) < 17);
  CHECK(rng.next_below(0) == 0);
  CHECK(rng.next_below(1) == 0);
}

TEST_CASE("normal draws have sane first moments") {
  Rng rng(3);
  double sum = 0.0, sumsq = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    double x = rng.normal();
    sum += x;
    sumsq += x * x;
  }
  double mean = sum / n;
  double var = sumsq / n - mean * mean;
  CHECK(std::abs(mean) < 0.05);
  CHECK(std::abs(var - 1.0) < 0.05);
}

TEST_CASE("poisson draws have mean close to lambda") {
  Rng rng(5);
  double sum = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) sum += static_cast<double>(rng.poisson(4.0));
  CHECK(std::abs(sum / n - 4.0) < 0.1);
}

TEST_CASE("shuffle permutes without loss") {
  Rng rng(9);
  std::vector<int> v{1, 2, 3, 4, 5, 6, 7};
  auto orig = v;
  rng.shuffle(v);
  std::multiset<int> a(v.begin(), v.end()), b(orig.begin(), orig.end());
  CHECK(a == b);
}

TEST_CASE("sample_without_replacement yields distinct values in range") {
  Rng rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    auto s = rng.sample_without_replacement(10, 6);
    REQUIRE(s.size() == 6);
    std::set<std::size_t> uniq(s.begin(), s.end());
    CHECK(uniq.size() == 6);
    for (std::size_t x : s) CHECK(x < 10);
  }
  CHECK_THROWS_AS(rng.sample_without_replacement(3, 4), ContractError);
}

TEST_CASE("ceil_fraction matches exact ceiling despite float fuzz") {
  CHECK(ceil_fraction(10, 0.3) == 3);   // 10*0.3 = 3.0000000000000004
  CHECK(ceil_fraction(4, 0.5) == 2);
  CHECK(ceil_fraction(3, 1.0 / 3.0) == 1);
  CHECK(ceil_fraction(5, 0.0) == 0);
  CHECK(ceil_fraction(5, 1.0) == 5);
  CHECK(ceil_fraction(7, 0.3) == 3);  // ceil(2.1)
}

TEST_CASE("warning sink accumulates and drains") {
  drain_warnings();
  push_warning("first");
  push_warning("second");
  auto w = drain_warnings();
  REQUIRE(w.size() == 2);
  CHECK(w[0] == "first");
  CHECK(w[1] == "second");
  CHECK(drain_warnings().empty());
}
