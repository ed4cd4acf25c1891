#include <gtest/gtest.h>

#include <cmath>

#include "epicount/abgroups.hpp"
#include "epicount/category.hpp"
#include "epicount/subsets.hpp"
#include "oracles.hpp"

using namespace epicount;

namespace {

FinSet range_set(unsigned d) {
  std::vector<FinSet::value_type> xs(d);
  for (unsigned i = 0; i < d; ++i) xs[i] = i + 1;
  return FinSet(xs);
}

FinSet random_set(Stream& s, unsigned max_elem, double density = 0.4) {
  std::vector<FinSet::value_type> xs;
  for (unsigned j = 1; j <= max_elem; ++j)
    if (s.bernoulli(density)) xs.push_back(j);
  return FinSet(xs);
}

}  // namespace

// --- Moebius -----------------------------------------------------------------

TEST(Mobius, BooleanLatticeExamples) {
  SubsetsInstance inst;
  const auto level = inst.level(FinSet{1, 2, 3});
  EXPECT_EQ(mobius(level, FinSet{1}, FinSet{1, 2, 3}), 1);
  EXPECT_EQ(mobius(level, FinSet{}, FinSet{1, 2}), 1);
  EXPECT_EQ(mobius(level, FinSet{}, FinSet{1}), -1);
  for (const auto& a : level.elements()) EXPECT_EQ(mobius(level, a, a), 1);
}

TEST(Mobius, NotBelowIsDomainError) {
  SubsetsInstance inst;
  const auto level = inst.level(FinSet{1, 2});
  EXPECT_THROW(mobius(level, FinSet{1}, FinSet{2}), DomainError);
  EXPECT_THROW(mobius(level, FinSet{1, 2}, FinSet{1}), DomainError);
  EXPECT_THROW(mobius(level, FinSet{7}, FinSet{1}), DomainError);
}

TEST(Mobius, ClosedFormOnWholeLevelsUpToTen) {
  SubsetsInstance inst;
  for (unsigned d = 0; d <= 10; ++d) {
    const auto level = inst.level(range_set(d));
    for (std::size_t b = 0; b < level.size(); ++b)
      for (const auto& [a, mu] : level.mobius_row(b)) {
        const auto diff = level.element(a).size() - level.element(b).size();
        ASSERT_EQ(mu, diff % 2 ? -1 : 1) << "d=" << d;
      }
  }
}

TEST(Mobius, ClosedFormOnSampledRowsAtTwelve) {
  SubsetsInstance inst;
  const auto level = inst.level(range_set(12));
  Stream s(12);
  for (int t = 0; t < 24; ++t) {
    const std::size_t b = s.below(level.size());
    for (const auto& [a, mu] : level.mobius_row(b)) {
      const auto diff = level.element(a).size() - level.element(b).size();
      ASSERT_EQ(mu, diff % 2 ? -1 : 1);
    }
  }
}

// Property: sum_{B <= C <= A} mu(B, C) = 0 for B < A, on random Boolean
// levels and on subgroup lattices of small abelian groups.
TEST(Mobius, RecursionSumsToZero) {
  SubsetsInstance inst;
  Stream s(7);
  for (int trial = 0; trial < 30; ++trial) {
    const auto level = inst.level(random_set(s, 9, 0.6));
    for (std::size_t b = 0; b < level.size(); ++b) {
      const auto& row = level.mobius_row(b);
      for (const auto& [a, mu_ba] : row) {
        if (a == b) continue;
        std::int64_t sum = 0;
        for (const auto& [c, mu_bc] : row)
          if (level.leq(c, a)) sum += mu_bc;
        ASSERT_EQ(sum, 0);
      }
    }
  }
  AbGroupsInstance ab;
  for (const char* g : {"C8xC2", "C4xC4", "C2xC2xC2", "C12", "C3xC3xC2"}) {
    std::vector<AbGroup> elems;
    for (const auto& [h, n] : subgroups(AbGroup::parse(g))) elems.push_back(h);
    const auto level = make_level(ab, elems);
    for (std::size_t b = 0; b < level.size(); ++b) {
      const auto& row = level.mobius_row(b);
      for (const auto& [a, mu_ba] : row) {
        if (a == b) continue;
        std::int64_t sum = 0;
        for (const auto& [c, mu_bc] : row)
          if (level.leq(c, a)) sum += mu_bc;
        ASSERT_EQ(sum, 0) << g;
      }
    }
  }
}

// --- level measure -------------------------------------------------------------

TEST(LevelMeasure, TwoPointExample) {
  SubsetsInstance inst;
  const auto level = inst.level(FinSet{1, 2});
  const auto m = product_measure(RSequence::constant(0.5));
  EXPECT_NEAR(level_measure_v(inst, level, FinSet{1}, m), 0.25, 1e-15);
}

TEST(LevelMeasure, ZeroProbabilitiesConcentrateOnEmptySet) {
  SubsetsInstance inst;
  const auto level = inst.level(FinSet{1, 2, 3, 4});
  const auto m = product_measure(RSequence::constant(0.0));
  for (const auto& b : level.elements())
    EXPECT_EQ(level_measure_v(inst, level, b, m), b.empty() ? 1.0 : 0.0);
}

TEST(LevelMeasure, MatchesProductFormula) {
  SubsetsInstance inst;
  const std::vector<double> r{0.1, 0.5, 0.9};
  const auto m = product_measure(RSequence::table(r));
  const auto level = inst.level(FinSet{1, 2, 3});
  for (const auto& b : level.elements()) {
    double expect = 1.0;
    for (unsigned j = 1; j <= 3; ++j) expect *= b.contains(j) ? r[j - 1] : 1.0 - r[j - 1];
    EXPECT_NEAR(level_measure_v(inst, level, b, m), expect, 1e-12);
  }
}

TEST(LevelMeasure, AllAgreesWithPointwise) {
  SubsetsInstance inst;
  Stream s(3);
  const auto level = inst.level(range_set(6));
  const auto m = product_measure(RSequence::table(oracle::random_r(s, 6)));
  const auto all = level_measure_all(inst, level, m);
  for (std::size_t i = 0; i < level.size(); ++i)
    EXPECT_DOUBLE_EQ(all[i], level_measure_v(inst, level, level.element(i), m));
}

TEST(LevelMeasure, NontrivialAutomorphismsAreOutOfScope) {
  AbGroupsInstance ab;
  const auto level = make_level(ab, {AbGroup::parse("1"), AbGroup::parse("C3")});
  EXPECT_THROW(level_measure_v(ab, level, AbGroup::parse("1"), unit_measure()), ScopeError);
}

TEST(LevelMeasure, ObjectOutsideLevelIsDomainError) {
  SubsetsInstance inst;
  const auto level = inst.level(FinSet{1, 2});
  EXPECT_THROW(level_measure_v(inst, level, FinSet{5}, product_measure(RSequence::constant(0.5))), DomainError);
}

// --- mixed moments ---------------------------------------------------------------

TEST(MixedMoment, CpCpEqualsP) {
  AbGroupsInstance enumerate;
  enumerate.closed_form_for_simple = false;
  AbGroupsInstance closed;
  for (std::uint64_t p : {2, 3, 5, 7}) {
    const AbGroup c = AbGroup::cyclic(p);
    const AbGroup pair[] = {c, c};
    const auto census = oracle::subgroups_of_pair(p, p);
    ASSERT_EQ(census.surjecting, p);
    EXPECT_EQ(mixed_moment(enumerate, unit_measure(), std::span<const AbGroup>(pair)), static_cast<double>(p));
    EXPECT_EQ(mixed_moment(closed, unit_measure(), std::span<const AbGroup>(pair)), static_cast<double>(p));
  }
}

TEST(MixedMoment, CoprimeCyclicPairIsOne) {
  AbGroupsInstance enumerate;
  enumerate.closed_form_for_simple = false;
  for (auto [p, q] : {std::pair<std::uint64_t, std::uint64_t>{2, 3}, {3, 5}, {2, 7}, {5, 7}}) {
    const AbGroup pair[] = {AbGroup::cyclic(p), AbGroup::cyclic(q)};
    ASSERT_EQ(oracle::subgroups_of_pair(p, q).surjecting, 1u);
    EXPECT_EQ(mixed_moment(enumerate, unit_measure(), std::span<const AbGroup>(pair)), 1.0);
  }
}

TEST(MixedMoment, NonSimplePairsMatchBruteForceSurjectingCount) {
  AbGroupsInstance ab;
  for (auto [a, b] : {std::pair<std::uint64_t, std::uint64_t>{4, 2}, {4, 4}, {6, 4}, {9, 3}, {8, 4}}) {
    const AbGroup pair[] = {AbGroup::cyclic(a), AbGroup::cyclic(b)};
    EXPECT_EQ(mixed_moment(ab, unit_measure(), std::span<const AbGroup>(pair)),
              static_cast<double>(oracle::subgroups_of_pair(a, b).surjecting))
        << a << "," << b;
  }
}

TEST(MixedMoment, SingletonTupleIsTheMoment) {
  SubsetsInstance inst;
  Stream s(11);
  const auto m = product_measure(RSequence::table(oracle::random_r(s, 10)));
  for (int t = 0; t < 50; ++t) {
    const FinSet a[] = {random_set(s, 10)};
    EXPECT_EQ(mixed_moment(inst, m, std::span<const FinSet>(a)), m(a[0]));
  }
  AbGroupsInstance ab;
  const AbGroup g[] = {AbGroup::parse("C4xC2")};
  EXPECT_EQ(mixed_moment(ab, unit_measure(), std::span<const AbGroup>(g)), 1.0);
}

TEST(MixedMoment, SubsetsTupleIsMomentOfUnion) {
  SubsetsInstance inst;
  Stream s(5);
  const auto r = oracle::random_r(s, 14);
  const auto m = product_measure(RSequence::table(r));
  for (int t = 0; t < 300; ++t) {
    std::vector<FinSet> tuple(1 + s.below(4));
    std::set<unsigned> uni;
    for (auto& a : tuple) {
      a = random_set(s, 14, 0.25);
      uni.insert(a.elements().begin(), a.elements().end());
    }
    double expect = 1.0;
    for (auto j : uni) expect *= r[j - 1];
    EXPECT_NEAR(mixed_moment(inst, m, std::span<const FinSet>(tuple)), expect, 1e-15);
  }
}

// Property: M_{A u B} >= M_A M_B, with equality on disjoint sets.
TEST(MixedMoment, SubsetsSuperMultiplicative) {
  Stream s(99);
  for (int t = 0; t < 500; ++t) {
    const auto r = oracle::random_r(s, 12);
    const auto m = product_measure(RSequence::table(r));
    const auto a = random_set(s, 12), b = random_set(s, 12);
    EXPECT_GE(m(a.unite(b)), m(a) * m(b) * (1 - 1e-15));
    if (a.disjoint(b)) EXPECT_NEAR(m(a.unite(b)), m(a) * m(b), 1e-15);
  }
}

// --- epi-products ---------------------------------------------------------------------

TEST(EpiProduct, SubsetsUnion) {
  SubsetsInstance inst;
  Stream s(1);
  for (int t = 0; t < 100; ++t) {
    const auto a = random_set(s, 8), b = random_set(s, 8);
    const auto ep = epi_product(inst, a, b, std::max<std::uint64_t>({1, a.max(), b.max()}));
    ASSERT_TRUE(ep.found());
    EXPECT_EQ(*ep.product, a.unite(b));
  }
  const auto ep = epi_product(inst, FinSet{1, 2}, FinSet{2, 3}, 3);
  EXPECT_EQ(inst.to_string(*ep.product), "{1,2,3}");
}

TEST(EpiProduct, CoprimeGroupsGiveDirectProduct) {
  AbGroupsInstance ab;
  const auto ep = epi_product(ab, AbGroup::cyclic(2), AbGroup::cyclic(3), 100);
  ASSERT_TRUE(ep.found());
  EXPECT_EQ(ep.product->str(), "C6");
  const auto ep2 = epi_product(ab, AbGroup::parse("C4xC2"), AbGroup::cyclic(9), 100);
  ASSERT_TRUE(ep2.found());
  EXPECT_EQ(*ep2.product, AbGroup::parse("C4xC2") * AbGroup::cyclic(9));
}

TEST(EpiProduct, CpCpNotFoundWithWitness) {
  AbGroupsInstance ab;
  for (std::uint64_t p : {2, 3, 5}) {
    const auto c = AbGroup::cyclic(p);
    const auto ep = epi_product(ab, c, c, 100);
    EXPECT_FALSE(ep.found());
    ASSERT_TRUE(ep.witness.has_value());
    // No group of order <= 100 carries the required number of surjections.
    const Count need = ep.witness_required;
    EXPECT_EQ(need, epi_count(*ep.witness, c) * epi_count(*ep.witness, c));
    for (const auto& cand : ab.objects_up_to(100))
      if (epi_count(cand, c) > 0) EXPECT_NE(epi_count(*ep.witness, cand), need);
  }
}

TEST(EpiProduct, BoundBelowArgumentsIsDomainError) {
  AbGroupsInstance ab;
  EXPECT_THROW(epi_product(ab, AbGroup::cyclic(7), AbGroup::cyclic(3), 5), DomainError);
}

TEST(InE2, Examples) {
  SubsetsInstance inst;
  const auto m = product_measure(RSequence::constant(0.3));
  EXPECT_TRUE(in_e2(inst, m, FinSet{1, 2}, FinSet{3}, 3));
  EXPECT_FALSE(in_e2(inst, m, FinSet{1, 2}, FinSet{2, 3}, 3));
  AbGroupsInstance ab;
  EXPECT_TRUE(in_e2(ab, unit_measure(), AbGroup::cyclic(2), AbGroup::cyclic(3), 100));
  for (std::uint64_t p : {2, 3, 5})
    EXPECT_FALSE(in_e2(ab, unit_measure(), AbGroup::cyclic(p), AbGroup::cyclic(p), 100));
}

// Property: pairs in E(2, M) have uncorrelated epi counts. Checked by Monte
// Carlo within four standard errors of the sample covariance.
TEST(InE2, CovarianceVanishesForSubsets) {
  SubsetsInstance inst;
  Stream s(2024);
  for (int trial = 0; trial < 6; ++trial) {
    const auto r = oracle::random_r(s, 10);
    const auto m = product_measure(RSequence::table(r));
    FinSet a = random_set(s, 5, 0.5), b;
    std::vector<FinSet::value_type> bs;
    for (unsigned j = 6; j <= 10; ++j)
      if (s.bernoulli(0.5)) bs.push_back(j);
    b = FinSet(bs);
    ASSERT_TRUE(in_e2(inst, m, a, b, 10));
    const int T = 4000;
    double sx = 0, sy = 0;
    std::vector<double> xs(T), ys(T);
    for (int t = 0; t < T; ++t) {
      const auto smp = sample_subset(r, derive_seed(trial, t));
      xs[t] = smp.epi_count(a);
      ys[t] = smp.epi_count(b);
      sx += xs[t];
      sy += ys[t];
    }
    const double mx = sx / T, my = sy / T;
    double c = 0, c2 = 0;
    for (int t = 0; t < T; ++t) {
      const double z = (xs[t] - mx) * (ys[t] - my);
      c += z;
      c2 += z * z;
    }
    const double cov = c / T;
    const double se = std::sqrt(std::max(c2 / T - cov * cov, 0.0) / T);
    EXPECT_LE(std::fabs(cov), 4 * se + 1e-12) << a.str() << " " << b.str();
  }
}

TEST(InE2, CovarianceVanishesForCoprimeCyclicGroups) {
  AbGroupsInstance ab;
  ASSERT_TRUE(in_e2(ab, unit_measure(), AbGroup::cyclic(2), AbGroup::cyclic(3), 100));
  const int T = 20000;
  Stream s(77);
  std::vector<double> xs(T), ys(T);
  double sx = 0, sy = 0;
  for (int t = 0; t < T; ++t) {
    xs[t] = std::pow(2.0, sample_corank(2, 12, s)) - 1;
    ys[t] = std::pow(3.0, sample_corank(3, 12, s)) - 1;
    sx += xs[t];
    sy += ys[t];
  }
  double c = 0, c2 = 0;
  for (int t = 0; t < T; ++t) {
    const double z = (xs[t] - sx / T) * (ys[t] - sy / T);
    c += z;
    c2 += z * z;
  }
  const double cov = c / T;
  EXPECT_LE(std::fabs(cov), 4 * std::sqrt((c2 / T - cov * cov) / T));
}
