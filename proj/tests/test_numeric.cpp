#include <gtest/gtest.h>

#include <set>

#include "epicount/numeric.hpp"
#include "epicount/primes.hpp"
#include "epicount/rng.hpp"

using namespace epicount;

TEST(Primes, SieveMatchesTrialDivision) {
  auto slow_prime = [](std::uint64_t n) {
    if (n < 2) return false;
    for (std::uint64_t d = 2; d * d <= n; ++d)
      if (n % d == 0) return false;
    return true;
  };
  std::vector<std::uint64_t> expect;
  for (std::uint64_t n = 0; n <= 5000; ++n)
    if (slow_prime(n)) expect.push_back(n);
  EXPECT_EQ(primes_up_to(5000), expect);
  EXPECT_TRUE(primes_up_to(1).empty());
  EXPECT_EQ(primes_up_to(2), std::vector<std::uint64_t>{2});
  EXPECT_EQ(primes_up_to(1000000).size(), 78498u);
}

TEST(Primes, Factorize) {
  for (std::uint64_t n = 1; n < 3000; ++n) {
    std::uint64_t back = 1;
    for (auto [p, e] : factorize(n)) {
      EXPECT_TRUE(is_prime(p));
      for (unsigned i = 0; i < e; ++i) back *= p;
    }
    EXPECT_EQ(back, n);
  }
}

TEST(Numeric, GaussianBinomialCountsSubspaces) {
  // [n, k]_2 against known values: subspaces of F_2^4.
  EXPECT_EQ(gaussian_binomial(4, 0, 2), 1.0);
  EXPECT_EQ(gaussian_binomial(4, 1, 2), 15.0);
  EXPECT_EQ(gaussian_binomial(4, 2, 2), 35.0);
  EXPECT_EQ(gaussian_binomial(3, 1, 3), 13.0);
  EXPECT_EQ(gaussian_binomial(2, 3, 3), 0.0);
  EXPECT_EQ(binomial(10, 3), 120.0);
}

TEST(Numeric, CheckedArithmetic) {
  EXPECT_EQ(checked_pow(3, 4), 81u);
  EXPECT_THROW(checked_mul(std::uint64_t{1} << 40, std::uint64_t{1} << 30), CapacityError);
  EXPECT_THROW(checked_add(UINT64_MAX, 1), CapacityError);
  EXPECT_TRUE(rel_equal(1.0, 1.0 + 1e-14));
  EXPECT_FALSE(rel_equal(1.0, 1.0 + 1e-9));
  EXPECT_TRUE(rel_equal(0.0, 0.0));
}

TEST(Rng, DeterministicAndDistinct) {
  Stream a(5), b(5);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next(), b.next());
  std::set<std::uint64_t> seeds;
  for (std::uint64_t t = 0; t < 10000; ++t) seeds.insert(derive_seed(42, t));
  EXPECT_EQ(seeds.size(), 10000u);
  EXPECT_NE(derive_seed(1, 0), derive_seed(2, 0));
  Stream c(9);
  for (int i = 0; i < 10000; ++i) {
    const double u = c.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    ASSERT_LT(c.below(7), 7u);
  }
}
