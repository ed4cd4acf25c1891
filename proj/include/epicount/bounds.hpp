#pragma once

// Theoretical moment bounds: the integrals of |f_n| against
// dM^{(j)} (dM)^{P-j} over tuples outside E(P, M), and the denominator of the
// almost-sure upper bound (full tuple space, no exclusion).
//
// Two supports admit an exact reduction: pairwise disjoint subsets under a
// product measure, and distinct groups of prime order under a coprime-
// multiplicative measure. There, tuples with a coordinate occurring exactly
// once are uncorrelated, the excluded set is cut down to tuples with at most
// P/2 distinct coordinates, and M^{(j)} factors over the distinct objects.
// The resulting sums are evaluated by grouping tuple positions into equal-
// coordinate blocks and removing coincidences by Moebius inversion on set
// partitions.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "abgroups.hpp"
#include "category.hpp"
#include "errors.hpp"
#include "orderings.hpp"
#include "subsets.hpp"

namespace epicount {

// ---------------------------------------------------------------------------
// Per-instance reductions

/// Off-diagonal support pairs are uncorrelated: pairwise disjoint sets under
/// a measure multiplicative over disjoint unions.
inline bool offdiagonal_uncorrelated(const SubsetsInstance&, const MomentMeasure<FinSet>& m,
                                     const Ordering<FinSet>::Support& support) {
  if (!m.coprime_multiplicative()) return false;
  std::vector<FinSet::value_type> all;
  for (const auto& [a, v] : support) all.insert(all.end(), a.elements().begin(), a.elements().end());
  std::sort(all.begin(), all.end());
  return std::adjacent_find(all.begin(), all.end()) == all.end();
}

/// Off-diagonal support pairs are uncorrelated: distinct groups of prime
/// order (hence pairwise coprime) under a coprime-multiplicative measure.
inline bool offdiagonal_uncorrelated(const AbGroupsInstance&, const MomentMeasure<AbGroup>& m,
                                     const Ordering<AbGroup>::Support& support) {
  if (!m.coprime_multiplicative()) return false;
  return std::all_of(support.begin(), support.end(), [](const auto& e) { return e.first.is_simple(); });
}

/// Diagonal tuples (A, ..., A) are uncorrelated when #Epi(G, A) is almost
/// surely constant. For subsets A x_Epi A = A, so (A, A) lies in E(2, M)
/// exactly when M_A = M_A^2.
inline bool degenerate_object(const SubsetsInstance&, const MomentMeasure<FinSet>& m, const FinSet& a) {
  const double v = m(a);
  return rel_equal(v, v * v);
}

/// (C_p, C_p) has no epi-product: any candidate receives an epimorphism from
/// C_p, so is C_p itself, and K = C_p^2 then carries (p^2-1)^2 epimorphisms
/// onto the pair but only p^2-1 onto C_p.
inline bool degenerate_object(const AbGroupsInstance&, const MomentMeasure<AbGroup>&, const AbGroup& g) {
  return g.trivial();
}

namespace detail {

/// Per-object data for the block sums: |f|, M_G and MM(G, c) = M^{(c)} of c
/// copies of G, for c = 0..P.
struct MomentTable {
  unsigned positions = 0;
  std::vector<double> abs_f;
  std::vector<double> m;
  std::vector<double> mm;  // row-major, stride positions + 1

  std::size_t size() const noexcept { return abs_f.size(); }
  double multi(std::size_t i, unsigned c) const { return mm[i * (positions + 1) + c]; }
};

template <CategoryInstance I>
MomentTable build_table(const I& inst, const MomentMeasure<typename I::object_type>& m,
                        const typename Ordering<typename I::object_type>::Support& support, unsigned positions) {
  using Object = typename I::object_type;
  MomentTable t;
  t.positions = positions;
  t.abs_f.reserve(support.size());
  t.m.reserve(support.size());
  t.mm.reserve(support.size() * (positions + 1));
  std::vector<Object> copies;
  for (const auto& [g, v] : support) {
    t.abs_f.push_back(std::fabs(v));
    const double mg = m(g);
    t.m.push_back(mg);
    t.mm.push_back(1.0);
    for (unsigned c = 1; c <= positions; ++c) {
      if (c == 1) {
        t.mm.push_back(mg);
        continue;
      }
      copies.assign(c, g);
      t.mm.push_back(mixed_moment(inst, m, std::span<const Object>(copies)));
    }
  }
  return t;
}

inline double ipow(double x, unsigned e) {
  double r = 1.0;
  for (unsigned i = 0; i < e; ++i) r *= x;
  return r;
}

/// Visits every set partition of {0..n-1} with at most max_blocks blocks as
/// a restricted growth string.
template <class Visit>
void for_each_set_partition(unsigned n, unsigned max_blocks, Visit&& visit) {
  if (n == 0) {
    std::vector<unsigned> empty;
    visit(empty, 0u);
    return;
  }
  std::vector<unsigned> rgs(n, 0);
  auto rec = [&](auto&& self, unsigned pos, unsigned blocks) -> void {
    if (pos == n) {
      visit(rgs, blocks);
      return;
    }
    for (unsigned b = 0; b <= blocks && b < max_blocks; ++b) {
      rgs[pos] = b;
      self(self, pos + 1, std::max(blocks, b + 1));
    }
  };
  rgs[0] = 0;
  rec(rec, 1, 1);
}

inline double factorial(unsigned n) {
  double f = 1.0;
  for (unsigned i = 2; i <= n; ++i) f *= i;
  return f;
}

/// I_j for j = 1..P: the sum over P-tuples of support objects with at most
/// max_distinct distinct coordinates of
///   prod_i |f(G_i)| * M^{(j)}(G_1..G_j) * prod_{i>j} M_{G_i},
/// assuming M^{(j)} factors over distinct coordinates.
inline std::vector<double> block_sums(const MomentTable& t, unsigned max_distinct) {
  const unsigned P = t.positions;
  using Key = std::vector<std::pair<unsigned, unsigned>>;  // sorted (c, c_j) of merged blocks
  std::map<Key, double> memo;
  auto block_total = [&](Key key) {
    std::sort(key.begin(), key.end());
    auto it = memo.find(key);
    if (it != memo.end()) return it->second;
    unsigned c_total = 0, free_total = 0;
    for (auto [c, cj] : key) {
      c_total += c;
      free_total += c - cj;
    }
    double s = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
      double w = ipow(t.abs_f[i], c_total) * ipow(t.m[i], free_total);
      for (auto [c, cj] : key) w *= t.multi(i, cj);
      s += w;
    }
    memo.emplace(std::move(key), s);
    return s;
  };

  std::vector<double> out(P, 0.0);
  for (unsigned j = 1; j <= P; ++j) {
    double total = 0.0;
    for_each_set_partition(P, max_distinct, [&](const std::vector<unsigned>& rgs, unsigned nb) {
      std::vector<std::pair<unsigned, unsigned>> blocks(nb, {0u, 0u});
      for (unsigned pos = 0; pos < P; ++pos) {
        ++blocks[rgs[pos]].first;
        if (pos < j) ++blocks[rgs[pos]].second;
      }
      // Distinct objects per block: sum over partitions sigma of the blocks
      // of mu(0, sigma) * prod_{S in sigma} sum_G prod_{b in S} w_b(G).
      for_each_set_partition(nb, nb, [&](const std::vector<unsigned>& sigma, unsigned ns) {
        std::vector<Key> merged(ns);
        for (unsigned b = 0; b < nb; ++b) merged[sigma[b]].push_back(blocks[b]);
        double term = 1.0;
        for (const auto& key : merged) {
          const unsigned sz = static_cast<unsigned>(key.size());
          term *= ((sz - 1) % 2 ? -1.0 : 1.0) * factorial(sz - 1) * block_total(key);
        }
        total += term;
      });
    });
    out[j - 1] = total;
  }
  return out;
}

template <class Object>
typename Ordering<Object>::Support drop_degenerate(typename Ordering<Object>::Support support,
                                                   const auto& inst, const MomentMeasure<Object>& m) {
  std::erase_if(support, [&](const auto& e) { return degenerate_object(inst, m, e.first); });
  return support;
}

inline constexpr std::size_t kPairwiseSupportLimit = 64;
inline constexpr std::size_t kBruteForceTupleLimit = 200000;

}  // namespace detail

// ---------------------------------------------------------------------------
// Second moment

/// The two integrals of |f_n(G_1) f_n(G_2)| over pairs outside E(2, M): index
/// 0 against M_{G_1} M_{G_2}, index 1 against M^{(2)}_{(G_1,G_2)}.
template <CategoryInstance I>
std::vector<double> bound_2_terms(const Ordering<typename I::object_type>& f, std::uint64_t n,
                                  const MomentMeasure<typename I::object_type>& m, const I& inst) {
  using Object = typename I::object_type;
  auto support = f.support(n);
  if (offdiagonal_uncorrelated(inst, m, support)) {
    auto kept = detail::drop_degenerate<Object>(std::move(support), inst, m);
    return detail::block_sums(detail::build_table(inst, m, kept, 2), 1);
  }
  if (support.size() > detail::kPairwiseSupportLimit)
    throw CapacityError("pairwise E(2,M) test over a support of " + std::to_string(support.size()) +
                            " objects with no applicable reduction",
                        detail::kPairwiseSupportLimit);
  std::vector<double> out(2, 0.0);
  for (const auto& [g, fg] : support)
    for (const auto& [h, fh] : support) {
      const std::uint64_t bound = std::max<std::uint64_t>({100, inst.size(g), inst.size(h)});
      bool e2 = false;
      try {
        e2 = in_e2(inst, m, g, h, bound);
      } catch (const CapacityError& e) {
        throw CapacityError("E(2,M) test for (" + inst.to_string(g) + ", " + inst.to_string(h) + "): " + e.what(),
                            e.bound());
      }
      if (e2) continue;
      const double w = std::fabs(fg * fh);
      const Object pair[] = {g, h};
      out[0] += w * m(g) * m(h);
      out[1] += w * mixed_moment(inst, m, std::span<const Object>(pair));
    }
  return out;
}

template <CategoryInstance I>
double theoretical_bound_2(const Ordering<typename I::object_type>& f, std::uint64_t n,
                           const MomentMeasure<typename I::object_type>& m, const I& inst) {
  const auto t = bound_2_terms(f, n, m, inst);
  return std::max(t[0], t[1]);
}

// ---------------------------------------------------------------------------
// 2k-th moment

/// j = 1..2k integrals over 2k-tuples outside E(2k, M). Only available where
/// the support reduction applies; anything else is a ScopeError.
template <CategoryInstance I>
std::vector<double> bound_2k_terms(const Ordering<typename I::object_type>& f, std::uint64_t n,
                                   const MomentMeasure<typename I::object_type>& m, const I& inst, unsigned k) {
  using Object = typename I::object_type;
  if (k == 0) throw DomainError("theoretical_bound_2k: k must be positive");
  auto support = f.support(n);
  if (!offdiagonal_uncorrelated(inst, m, support))
    throw ScopeError(std::string("theoretical_bound_2k: support of '") + f.family_id() + "' on " +
                     std::string(I::name) +
                     " is neither pairwise disjoint under a product measure nor pairwise coprime simple; "
                     "the distinct-coordinate reduction does not apply");
  auto kept = detail::drop_degenerate<Object>(std::move(support), inst, m);
  return detail::block_sums(detail::build_table(inst, m, kept, 2 * k), k);
}

template <CategoryInstance I>
double theoretical_bound_2k(const Ordering<typename I::object_type>& f, std::uint64_t n,
                            const MomentMeasure<typename I::object_type>& m, const I& inst, unsigned k) {
  const auto t = bound_2k_terms(f, n, m, inst, k);
  return *std::max_element(t.begin(), t.end());
}

// ---------------------------------------------------------------------------
// Almost-sure upper bound

/// j = 1..k integrals of |f_n| dM^{(j)} (dM)^{k-j} over all of C^k.
template <CategoryInstance I>
std::vector<double> corollary_terms(const Ordering<typename I::object_type>& f, std::uint64_t n,
                                    const MomentMeasure<typename I::object_type>& m, const I& inst, unsigned k) {
  using Object = typename I::object_type;
  if (k == 0) throw DomainError("corollary_denominator: k must be positive");
  const auto support = f.support(n);
  if (offdiagonal_uncorrelated(inst, m, support))
    return detail::block_sums(detail::build_table(inst, m, support, k), k);

  double tuples = 1.0;
  for (unsigned i = 0; i < k; ++i) tuples *= static_cast<double>(support.size());
  if (tuples > static_cast<double>(detail::kBruteForceTupleLimit))
    throw CapacityError("corollary_denominator: " + std::to_string(support.size()) + "^" + std::to_string(k) +
                            " tuples with no factorization available",
                        detail::kBruteForceTupleLimit);
  std::vector<double> out(k, 0.0);
  std::vector<std::size_t> idx(k, 0);
  std::vector<Object> tuple(k);
  const std::size_t s = support.size();
  if (s == 0) return out;
  while (true) {
    double w = 1.0;
    for (unsigned i = 0; i < k; ++i) {
      tuple[i] = support[idx[i]].first;
      w *= std::fabs(support[idx[i]].second);
    }
    for (unsigned j = 1; j <= k; ++j) {
      double rest = 1.0;
      for (unsigned i = j; i < k; ++i) rest *= m(tuple[i]);
      out[j - 1] += w * rest * mixed_moment(inst, m, std::span<const Object>(tuple.data(), j));
    }
    unsigned pos = 0;
    while (pos < k && ++idx[pos] == s) idx[pos++] = 0;
    if (pos == k) break;
  }
  return out;
}

/// n^{(1+eps)/k} * max_j (integral_j)^{1/k}.
template <CategoryInstance I>
double corollary_denominator(const Ordering<typename I::object_type>& f, std::uint64_t n,
                             const MomentMeasure<typename I::object_type>& m, const I& inst, unsigned k,
                             double eps) {
  if (!(eps > 0.0)) throw DomainError("corollary_denominator: epsilon must be positive");
  const auto t = corollary_terms(f, n, m, inst, k);
  const double top = *std::max_element(t.begin(), t.end());
  return std::pow(static_cast<double>(n), (1.0 + eps) / k) * std::pow(top, 1.0 / k);
}

}  // namespace epicount
