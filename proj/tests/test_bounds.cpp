#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <set>

#include "epicount/abgroups.hpp"
#include "epicount/bounds.hpp"
#include "epicount/orderings.hpp"
#include "epicount/subsets.hpp"
#include "oracles.hpp"

using namespace epicount;

namespace {

// An ordering given by an explicit finite table of (set, value).
Ordering<FinSet> table_ordering(std::vector<std::pair<FinSet, double>> table) {
  auto eval = [table](std::uint64_t, const FinSet& a) {
    for (const auto& [b, v] : table)
      if (a == b) return v;
    return 0.0;
  };
  auto support = [table](std::uint64_t) { return table; };
  return Ordering<FinSet>("table", eval, support, {false, false, true});
}

double prod_r(const std::set<unsigned>& s, const std::vector<double>& r) {
  double out = 1.0;
  for (auto j : s) out *= r[j - 1];
  return out;
}

std::set<unsigned> as_set(const FinSet& a) { return {a.elements().begin(), a.elements().end()}; }

// The j = 1..P integrals of prod |f| dM^{(j)} (dM)^{P-j} over P-tuples that
// `keep` accepts, for subsets under a product measure; M^{(j)} is the moment
// of the union of the first j coordinates.
std::vector<double> brute_terms(const std::vector<std::pair<FinSet, double>>& support, const std::vector<double>& r,
                                unsigned P, const std::function<bool(const std::vector<std::size_t>&)>& keep) {
  std::vector<double> out(P, 0.0);
  std::vector<std::size_t> idx(P, 0);
  const std::size_t s = support.size();
  if (s == 0) return out;
  while (true) {
    if (keep(idx)) {
      double w = 1.0;
      for (auto i : idx) w *= std::fabs(support[i].second);
      for (unsigned j = 1; j <= P; ++j) {
        std::set<unsigned> uni;
        for (unsigned i = 0; i < j; ++i) {
          const auto e = as_set(support[idx[i]].first);
          uni.insert(e.begin(), e.end());
        }
        double rest = 1.0;
        for (unsigned i = j; i < P; ++i) rest *= prod_r(as_set(support[idx[i]].first), r);
        out[j - 1] += w * prod_r(uni, r) * rest;
      }
    }
    unsigned pos = 0;
    while (pos < P && ++idx[pos] == s) idx[pos++] = 0;
    if (pos == P) break;
  }
  return out;
}

std::size_t distinct(const std::vector<std::size_t>& idx) { return std::set<std::size_t>(idx.begin(), idx.end()).size(); }

std::vector<std::pair<FinSet, double>> singletons(unsigned n) {
  std::vector<std::pair<FinSet, double>> s;
  for (unsigned j = 1; j <= n; ++j) s.emplace_back(FinSet{j}, 1.0);
  return s;
}

}  // namespace

TEST(Bound2, MaximalSubgroupsDiagonal) {
  AbGroupsInstance ab;
  for (std::uint64_t n : {10, 100, 1000}) {
    double j1 = 0, j2 = 0;
    for (auto p : primes_up_to(n)) {
      j1 += 1.0 / double((p - 1) * (p - 1));
      j2 += double(p) / double((p - 1) * (p - 1));
    }
    const auto t = bound_2_terms(maximal_subgroup_ordering(), n, unit_measure(), ab);
    EXPECT_NEAR(t[0], j1, 1e-12 * j1);
    EXPECT_NEAR(t[1], j2, 1e-12 * j2);
    EXPECT_DOUBLE_EQ(theoretical_bound_2(maximal_subgroup_ordering(), n, unit_measure(), ab), std::max(j1, j2));
  }
}

// Off-diagonal disjoint pairs are in E(2, M); the diagonal terms reproduce
// the exhaustively computed variance.
TEST(Bound2, SingletonsAgainstExhaustiveVariance) {
  SubsetsInstance inst;
  const unsigned n = 10;
  const std::vector<double> r(n, 0.5);
  const auto m = product_measure(RSequence::table(r));
  double mean = 0, second = 0;
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    const double c = __builtin_popcount(mask);
    mean += c / 1024;
    second += c * c / 1024;
  }
  const double var = second - mean * mean;
  const auto t = bound_2_terms(singleton_ordering(), n, m, inst);
  EXPECT_NEAR(t[1] - t[0], var, 1e-12);
  EXPECT_GE(theoretical_bound_2(singleton_ordering(), n, m, inst), var);
  const auto expect = brute_terms(singletons(n), r, 2, [](const auto& idx) { return idx[0] == idx[1]; });
  EXPECT_NEAR(t[0], expect[0], 1e-12);
  EXPECT_NEAR(t[1], expect[1], 1e-12);
}

TEST(Bound2, OverlappingSupportUsesPairwiseTest) {
  SubsetsInstance inst;
  Stream s(41);
  for (int trial = 0; trial < 20; ++trial) {
    const auto r = oracle::random_r(s, 6);
    const auto m = product_measure(RSequence::table(r));
    std::vector<std::pair<FinSet, double>> table;
    std::set<FinSet> used;
    for (int i = 0; i < 5; ++i) {
      std::vector<FinSet::value_type> xs;
      for (unsigned j = 1; j <= 6; ++j)
        if (s.bernoulli(0.4)) xs.push_back(j);
      FinSet a(xs);
      if (used.insert(a).second) table.emplace_back(a, s.uniform() * 2 - 1);
    }
    std::sort(table.begin(), table.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
    std::erase_if(table, [](const auto& e) { return e.second == 0.0; });
    const auto f = table_ordering(table);
    // Pairs outside E(2, M): the union moment differs from the product.
    const auto expect = brute_terms(table, r, 2, [&](const auto& idx) {
      const auto a = as_set(table[idx[0]].first), b = as_set(table[idx[1]].first);
      std::set<unsigned> u = a;
      u.insert(b.begin(), b.end());
      return !rel_equal(prod_r(u, r), prod_r(a, r) * prod_r(b, r), 1e-12);
    });
    const auto t = bound_2_terms(f, 1, m, inst);
    EXPECT_NEAR(t[0], expect[0], 1e-12);
    EXPECT_NEAR(t[1], expect[1], 1e-12);
  }
}

TEST(Bound2, CramerDropsDeterministicPoints) {
  SubsetsInstance inst;
  const auto m = product_measure(cramer_preset());
  double j1 = 0, j2 = 0;
  for (int j = 3; j <= 100; ++j) {
    const double r = 1.0 / std::log(double(j));
    j1 += r * r;
    j2 += r;
  }
  const auto t = bound_2_terms(singleton_ordering(), 100, m, inst);
  EXPECT_NEAR(t[0], j1, 1e-12);
  EXPECT_NEAR(t[1], j2, 1e-12);
  EXPECT_NEAR(t[1], 28.548743, 5e-7);
}

TEST(Bound2, TooManyUnreducedPairsIsCapacityError) {
  SubsetsInstance inst;
  std::vector<std::pair<FinSet, double>> table;
  for (unsigned j = 1; j <= 70; ++j) table.emplace_back(FinSet{j, j + 1}, 1.0);
  EXPECT_THROW(bound_2_terms(table_ordering(table), 1, product_measure(RSequence::constant(0.5)), inst),
               CapacityError);
}

TEST(Bound2k, AgainstExhaustiveTuplesAtSix) {
  SubsetsInstance inst;
  const unsigned n = 6;
  const std::vector<double> r(n, 0.5);
  const auto m = product_measure(RSequence::table(r));
  const auto t = bound_2k_terms(singleton_ordering(), n, m, inst, 2);
  const auto expect = brute_terms(singletons(n), r, 4, [](const auto& idx) { return distinct(idx) <= 2; });
  ASSERT_EQ(t.size(), 4u);
  for (unsigned j = 0; j < 4; ++j) EXPECT_NEAR(t[j], expect[j], 1e-12) << "j=" << j + 1;
  EXPECT_DOUBLE_EQ(t[0], 13.5);
  EXPECT_DOUBLE_EQ(t[3], 55.5);

  // The fourth central moment over all 2^6 outcomes sits below the bound.
  double cm4 = 0;
  for (unsigned mask = 0; mask < 64; ++mask) cm4 += std::pow(__builtin_popcount(mask) - 3.0, 4) / 64;
  EXPECT_DOUBLE_EQ(cm4, 6.0);
  EXPECT_LE(cm4, theoretical_bound_2k(singleton_ordering(), n, m, inst, 2));
}

TEST(Bound2k, KOneAgreesWithBound2) {
  SubsetsInstance inst;
  AbGroupsInstance ab;
  Stream s(3);
  for (int t = 0; t < 10; ++t) {
    const auto m = product_measure(RSequence::table(oracle::random_r(s, 50)));
    const std::uint64_t n = 1 + s.below(50);
    EXPECT_DOUBLE_EQ(theoretical_bound_2k(singleton_ordering(), n, m, inst, 1),
                     theoretical_bound_2(singleton_ordering(), n, m, inst));
  }
  EXPECT_DOUBLE_EQ(theoretical_bound_2k(maximal_subgroup_ordering(), 1000, unit_measure(), ab, 1),
                   theoretical_bound_2(maximal_subgroup_ordering(), 1000, unit_measure(), ab));
}

TEST(Bound2k, MaximalSubgroupsMatchExplicitTuples) {
  // Coprime simple support: tuples with <= k distinct primes, M^{(j)} of a
  // tuple of C_p's with d_p copies of p is prod_p (number of surjecting
  // subspaces of F_p^{d_p}) summed over dimensions.
  AbGroupsInstance ab;
  const std::vector<std::uint64_t> ps{2, 3, 5, 7};
  const unsigned P = 4;
  std::vector<double> expect(P, 0.0);
  std::vector<std::size_t> idx(P, 0);
  while (true) {
    if (distinct(idx) <= 2) {
      double w = 1.0;
      for (auto i : idx) w *= 1.0 / double(ps[i] - 1);
      for (unsigned j = 1; j <= P; ++j) {
        std::map<std::uint64_t, unsigned> mult;
        for (unsigned i = 0; i < j; ++i) ++mult[ps[idx[i]]];
        double mm = 1.0;
        for (auto [p, d] : mult) {
          // Subgroups of C_p^d surjecting on every factor, via the oracle's
          // closure enumeration for d <= 2 and inclusion-exclusion otherwise.
          double cnt = 0;
          if (d == 1) cnt = 1;
          else if (d == 2) cnt = double(oracle::subgroups_of_pair(p, p).surjecting);
          else for (unsigned dim = 1; dim <= d; ++dim) cnt += surjecting_subspace_count(p, d, dim);
          mm *= cnt;
        }
        expect[j - 1] += w * mm;
      }
    }
    unsigned pos = 0;
    while (pos < P && ++idx[pos] == ps.size()) idx[pos++] = 0;
    if (pos == P) break;
  }
  const auto t = bound_2k_terms(maximal_subgroup_ordering(), 10, unit_measure(), ab, 2);
  for (unsigned j = 0; j < P; ++j) EXPECT_NEAR(t[j], expect[j], 1e-12 * expect[j]) << j;
}

// The bound grows like a power of (1 + integral f dM), as for independent
// indicators.
TEST(Bound2k, PolynomialInTheMean) {
  SubsetsInstance inst;
  const auto m = product_measure(RSequence::constant(0.5));
  for (unsigned k = 1; k <= 3; ++k)
    for (std::uint64_t n : {5, 20, 80}) {
      const double mu = moment_integral(singleton_ordering(), n, m).value;
      const double b = theoretical_bound_2k(singleton_ordering(), n, m, inst, k);
      EXPECT_LE(b, std::pow(2.0 * k, 2.0 * k) * (std::pow(1 + mu, k) - 1)) << k << " " << n;
    }
}

TEST(Bound2k, NoReductionIsScopeError) {
  SubsetsInstance inst;
  const auto f = table_ordering({{FinSet{1, 2}, 1.0}, {FinSet{2, 3}, 1.0}});
  try {
    bound_2k_terms(f, 1, product_measure(RSequence::constant(0.5)), inst, 2);
    FAIL() << "expected ScopeError";
  } catch (const ScopeError& e) {
    EXPECT_NE(std::string(e.what()).find("distinct-coordinate reduction"), std::string::npos);
  }
  EXPECT_THROW(bound_2k_terms(singleton_ordering(), 3, product_measure(RSequence::constant(0.5)), inst, 0),
               DomainError);
}

TEST(Corollary, SingletonsAtTen) {
  SubsetsInstance inst;
  const std::vector<double> r(10, 0.5);
  const auto m = product_measure(RSequence::table(r));
  const auto t = corollary_terms(singleton_ordering(), 10, m, inst, 2);
  double j2 = 0;
  for (unsigned a = 1; a <= 10; ++a)
    for (unsigned b = 1; b <= 10; ++b) j2 += (a == b ? 0.5 : 0.25);
  EXPECT_DOUBLE_EQ(j2, 27.5);
  EXPECT_DOUBLE_EQ(t[1], j2);
  EXPECT_DOUBLE_EQ(t[0], 25.0);
  const auto all = brute_terms(singletons(10), r, 2, [](const auto&) { return true; });
  EXPECT_NEAR(t[0], all[0], 1e-12);
  EXPECT_NEAR(t[1], all[1], 1e-12);
  EXPECT_NEAR(corollary_denominator(singleton_ordering(), 10, m, inst, 2, 0.1), std::pow(10.0, 0.55) * std::sqrt(27.5),
              1e-12);
}

TEST(Corollary, KOneIsScaledAbsoluteIntegral) {
  SubsetsInstance inst;
  AbGroupsInstance ab;
  const auto m = product_measure(cramer_preset());
  for (std::uint64_t n : {10, 100, 1000}) {
    EXPECT_NEAR(corollary_denominator(singleton_ordering(), n, m, inst, 1, 0.2),
                std::pow(double(n), 1.2) * moment_integral(singleton_ordering(), n, m, true).value, 1e-9);
    EXPECT_NEAR(corollary_denominator(maximal_subgroup_ordering(), n, unit_measure(), ab, 1, 0.2),
                std::pow(double(n), 1.2) * moment_integral(maximal_subgroup_ordering(), n, unit_measure(), true).value,
                1e-9);
  }
  EXPECT_THROW(corollary_denominator(singleton_ordering(), 10, m, inst, 2, 0.0), DomainError);
}

TEST(Corollary, OverlappingSupportBruteForce) {
  SubsetsInstance inst;
  const std::vector<double> r{0.3, 0.6, 0.9, 0.2};
  const auto m = product_measure(RSequence::table(r));
  const std::vector<std::pair<FinSet, double>> table{{FinSet{1, 2}, 1.0}, {FinSet{2, 3}, -0.5}, {FinSet{4}, 2.0}};
  const auto t = corollary_terms(table_ordering(table), 1, m, inst, 3);
  const auto expect = brute_terms(table, r, 3, [](const auto&) { return true; });
  for (unsigned j = 0; j < 3; ++j) EXPECT_NEAR(t[j], expect[j], 1e-12);
}

TEST(Corollary, MaximalSubgroupsPairs) {
  AbGroupsInstance ab;
  const auto t = corollary_terms(maximal_subgroup_ordering(), 30, unit_measure(), ab, 2);
  double j1 = 0, j2 = 0;
  const auto ps = primes_up_to(30);
  for (auto p : ps)
    for (auto q : ps) {
      const double w = 1.0 / double((p - 1) * (q - 1));
      j1 += w;
      j2 += w * (p == q ? double(p) : 1.0);
    }
  EXPECT_NEAR(t[0], j1, 1e-12);
  EXPECT_NEAR(t[1], j2, 1e-12);
}
