#pragma once

// Category-agnostic machinery shared by the concrete instances: the instance
// contract, moment measures, level posets with their Moebius functions,
// mixed moments through subobjects of products, and bounded epi-product
// search.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "errors.hpp"
#include "numeric.hpp"

namespace epicount {

/// An isomorphism class of subobject together with how many distinct
/// subobjects of that class occur.
template <class Object>
struct Subobject {
  Object object;
  double multiplicity;
};

/// What a concrete category must supply. Objects are canonical: equality is
/// isomorphism and operator< is a total order used for every deterministic
/// iteration.
template <class I>
concept CategoryInstance = requires(const I& inst, const typename I::object_type& g,
                                    std::span<const typename I::object_type> tuple,
                                    std::uint64_t bound) {
  typename I::object_type;
  requires std::totally_ordered<typename I::object_type>;
  { I::name } -> std::convertible_to<std::string_view>;
  { inst.epi_count(g, g) } -> std::same_as<Count>;
  { inst.aut_order(g) } -> std::same_as<Count>;
  { inst.size(g) } -> std::same_as<std::uint64_t>;
  { inst.product(tuple) } -> std::same_as<std::optional<typename I::object_type>>;
  { inst.surjecting_subobjects(tuple) }
      -> std::same_as<std::vector<Subobject<typename I::object_type>>>;
  { inst.objects_up_to(bound) } -> std::same_as<std::vector<typename I::object_type>>;
  { inst.to_string(g) } -> std::same_as<std::string>;
};

// ---------------------------------------------------------------------------
// Moment measures

/// A moment assignment G -> M_G >= 0. Values are checked on every lookup.
template <class Object>
class MomentMeasure {
 public:
  using Rule = std::function<double(const Object&)>;

  /// `coprime_multiplicative` declares M_{GxH} = M_G M_H whenever the instance
  /// regards G and H as coprime (disjoint sets, coprime group orders).
  MomentMeasure(std::string name, Rule rule, bool coprime_multiplicative)
      : name_(std::move(name)),
        rule_(std::move(rule)),
        coprime_multiplicative_(coprime_multiplicative) {}

  double operator()(const Object& g) const {
    const double v = rule_(g);
    if (!std::isfinite(v) || v < 0.0)
      throw DomainError("moment measure '" + name_ + "' produced an invalid value");
    return v;
  }

  const std::string& name() const noexcept { return name_; }
  bool coprime_multiplicative() const noexcept { return coprime_multiplicative_; }

 private:
  std::string name_;
  Rule rule_;
  bool coprime_multiplicative_;
};

// ---------------------------------------------------------------------------
// Level posets and Moebius functions

/// A finite poset stored by down-sets, built from a relation leq(b, a). For
/// levels built from an instance, b <= a means a admits an epimorphism onto b.
///
/// The Moebius cache is guarded by a mutex, so a poset may be shared between
/// threads; results never depend on evaluation order.
template <class T>
class LevelPoset {
 public:
  template <class Leq>
  LevelPoset(std::vector<T> elements, Leq leq) : elements_(std::move(elements)) {
    std::sort(elements_.begin(), elements_.end());
    elements_.erase(std::unique(elements_.begin(), elements_.end()), elements_.end());
    const std::size_t n = elements_.size();
    down_.resize(n);
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = 0; b < n; ++b)
        if (a == b || leq(elements_[b], elements_[a])) down_[a].push_back(b);
    // |down(B)| < |down(A)| whenever B < A, so sorting by down-set size gives
    // a linear extension.
    order_.resize(n);
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    std::stable_sort(order_.begin(), order_.end(), [&](std::size_t x, std::size_t y) {
      return down_[x].size() < down_[y].size();
    });
    rank_.resize(n);
    for (std::size_t i = 0; i < n; ++i) rank_[order_[i]] = i;
  }

  std::size_t size() const noexcept { return elements_.size(); }
  const std::vector<T>& elements() const noexcept { return elements_; }
  const T& element(std::size_t i) const { return elements_.at(i); }

  std::optional<std::size_t> index_of(const T& x) const {
    auto it = std::lower_bound(elements_.begin(), elements_.end(), x);
    if (it == elements_.end() || !(*it == x)) return std::nullopt;
    return static_cast<std::size_t>(it - elements_.begin());
  }

  bool leq(std::size_t b, std::size_t a) const {
    return std::binary_search(down_[a].begin(), down_[a].end(), b);
  }

  /// Indices of elements below or equal to a, ascending.
  const std::vector<std::size_t>& down_set(std::size_t a) const { return down_[a]; }

  /// Sparse row of the Moebius function: (A, mu(B, A)) for every A >= B,
  /// ascending in A.
  const std::vector<std::pair<std::size_t, std::int64_t>>& mobius_row(std::size_t b) const {
    std::lock_guard lock(*mutex_);
    auto it = rows_.find(b);
    if (it != rows_.end()) return *it->second;
    const std::size_t n = size();
    std::vector<std::int64_t> dense(n, 0);
    std::vector<bool> above(n, false);
    auto row = std::make_unique<std::vector<std::pair<std::size_t, std::int64_t>>>();
    for (std::size_t pos = rank_[b]; pos < n; ++pos) {
      const std::size_t a = order_[pos];
      if (a != b && !leq(b, a)) continue;
      above[a] = true;
      if (a == b) {
        dense[a] = 1;
      } else {
        std::int64_t s = 0;
        for (std::size_t c : down_[a])
          if (c != a && above[c]) s += dense[c];
        dense[a] = -s;
      }
    }
    for (std::size_t a = 0; a < n; ++a)
      if (above[a]) row->emplace_back(a, dense[a]);
    auto& ref = *row;
    rows_.emplace(b, std::move(row));
    return ref;
  }

  /// mu(B, A) by the recursive definition; B must be below A.
  std::int64_t mobius(std::size_t b, std::size_t a) const {
    if (!leq(b, a)) throw DomainError("mobius: first argument is not below the second");
    const auto& row = mobius_row(b);
    auto it = std::lower_bound(row.begin(), row.end(), std::make_pair(a, INT64_MIN));
    return it->second;
  }

 private:
  std::vector<T> elements_;
  std::vector<std::vector<std::size_t>> down_;
  std::vector<std::size_t> order_;
  std::vector<std::size_t> rank_;
  std::unique_ptr<std::mutex> mutex_ = std::make_unique<std::mutex>();
  mutable std::unordered_map<std::size_t,
                             std::unique_ptr<std::vector<std::pair<std::size_t, std::int64_t>>>>
      rows_;
};

/// The level poset on `elements`, with B <= A iff A admits an epimorphism onto B.
template <CategoryInstance I>
LevelPoset<typename I::object_type> make_level(const I& inst,
                                               std::vector<typename I::object_type> elements) {
  return LevelPoset<typename I::object_type>(
      std::move(elements), [&inst](const auto& b, const auto& a) {
        return inst.epi_count(a, b) > 0;
      });
}

template <class T>
std::int64_t mobius(const LevelPoset<T>& poset, const T& b, const T& a) {
  const auto ib = poset.index_of(b);
  const auto ia = poset.index_of(a);
  if (!ib || !ia) throw DomainError("mobius: object is not an element of the poset");
  return poset.mobius(*ib, *ia);
}

/// v_B = sum_{A >= B} mu(B, A) / |Aut(A)| * M_A.
///
/// Only defined here for posets whose elements all have trivial automorphism
/// groups; anything else raises ScopeError.
template <CategoryInstance I>
double level_measure_v(const I& inst, const LevelPoset<typename I::object_type>& poset,
                       const typename I::object_type& b,
                       const MomentMeasure<typename I::object_type>& m) {
  for (const auto& a : poset.elements())
    if (inst.aut_order(a) != 1)
      throw ScopeError("level_measure_v: " + inst.to_string(a) +
                       " has nontrivial automorphisms; weighting unsupported");
  const auto ib = poset.index_of(b);
  if (!ib) throw DomainError("level_measure_v: object is not an element of the level");
  double v = 0.0;
  for (const auto& [a, mu] : poset.mobius_row(*ib))
    v += static_cast<double>(mu) * m(poset.element(a));
  return v;
}

/// v_B for every element B of the level, indexed like poset.elements().
template <CategoryInstance I>
std::vector<double> level_measure_all(const I& inst, const LevelPoset<typename I::object_type>& poset,
                                      const MomentMeasure<typename I::object_type>& m) {
  std::vector<double> ma;
  ma.reserve(poset.size());
  for (const auto& a : poset.elements()) {
    if (inst.aut_order(a) != 1)
      throw ScopeError("level_measure_v: " + inst.to_string(a) +
                       " has nontrivial automorphisms; weighting unsupported");
    ma.push_back(m(a));
  }
  std::vector<double> v(poset.size(), 0.0);
  for (std::size_t b = 0; b < poset.size(); ++b)
    for (const auto& [a, mu] : poset.mobius_row(b)) v[b] += static_cast<double>(mu) * ma[a];
  return v;
}

// ---------------------------------------------------------------------------
// Mixed moments

/// M^{(j)}_{(G_1..G_j)}: sum of M_H over subobjects H of prod G_i whose
/// composite with every projection is an epimorphism. Terms are accumulated
/// in canonical object order.
template <CategoryInstance I>
double mixed_moment(const I& inst, const MomentMeasure<typename I::object_type>& m,
                    std::span<const typename I::object_type> tuple) {
  if (tuple.empty()) return 1.0;
  auto subs = inst.surjecting_subobjects(tuple);
  std::sort(subs.begin(), subs.end(),
            [](const auto& x, const auto& y) { return x.object < y.object; });
  double total = 0.0;
  for (const auto& s : subs) total += s.multiplicity * m(s.object);
  return total;
}

// ---------------------------------------------------------------------------
// Epi-products

template <class Object>
struct EpiProductFailure {
  Object candidate;
  Object test;       // first K where #Epi(K,P) != #Epi(K,G) #Epi(K,H)
  Count expected;
  Count actual;
};

template <class Object>
struct EpiProductResult {
  std::optional<Object> product;
  std::uint64_t bound = 0;
  /// When absent: a test object K for which no candidate carries the
  /// required number of epimorphisms, and that required number.
  std::optional<Object> witness;
  Count witness_required = 0;
  std::vector<EpiProductFailure<Object>> failures;

  bool found() const noexcept { return product.has_value(); }
};

/// Searches for G x_Epi H among objects of size <= search_bound.
///
/// A candidate P must admit epimorphisms onto G and H and satisfy
/// #Epi(K,P) = #Epi(K,G) #Epi(K,H) for every test object K. Instances may
/// narrow the candidates (`epi_product_candidates`) or the test objects
/// (`epi_product_tests`) when they know a complete finite family; otherwise
/// all objects up to the bound are used. Absence is only "not found up to
/// the bound".
template <CategoryInstance I>
EpiProductResult<typename I::object_type> epi_product(const I& inst,
                                                      const typename I::object_type& g,
                                                      const typename I::object_type& h,
                                                      std::uint64_t search_bound) {
  using Object = typename I::object_type;
  if (search_bound < std::max(inst.size(g), inst.size(h)))
    throw DomainError("epi_product: search bound below the size of an argument");

  std::vector<Object> candidates;
  if constexpr (requires { inst.epi_product_candidates(g, h, search_bound); })
    candidates = inst.epi_product_candidates(g, h, search_bound);
  else
    candidates = inst.objects_up_to(search_bound);
  std::vector<Object> tests;
  if constexpr (requires { inst.epi_product_tests(g, h, search_bound); })
    tests = inst.epi_product_tests(g, h, search_bound);
  else
    tests = inst.objects_up_to(search_bound);

  std::erase_if(candidates, [&](const Object& p) {
    return inst.size(p) > search_bound || inst.epi_count(p, g) == 0 || inst.epi_count(p, h) == 0;
  });

  EpiProductResult<Object> result;
  result.bound = search_bound;
  std::vector<Count> required;
  required.reserve(tests.size());
  for (const auto& k : tests) required.push_back(checked_mul(inst.epi_count(k, g), inst.epi_count(k, h)));

  for (const auto& p : candidates) {
    bool ok = true;
    for (std::size_t i = 0; i < tests.size(); ++i) {
      const Count got = inst.epi_count(tests[i], p);
      if (got != required[i]) {
        result.failures.push_back({p, tests[i], required[i], got});
        ok = false;
        break;
      }
    }
    if (ok) {
      result.product = p;
      result.failures.clear();
      return result;
    }
  }

  for (std::size_t i = 0; i < tests.size(); ++i) {
    const bool matched = std::any_of(candidates.begin(), candidates.end(), [&](const Object& p) {
      return inst.epi_count(tests[i], p) == required[i];
    });
    if (!matched) {
      result.witness = tests[i];
      result.witness_required = required[i];
      break;
    }
  }
  return result;
}

/// (G, H) in E(2, M): the epi-product exists within the bound and
/// M_{G x_Epi H} = M_G M_H to relative tolerance 1e-12.
template <CategoryInstance I>
bool in_e2(const I& inst, const MomentMeasure<typename I::object_type>& m,
           const typename I::object_type& g, const typename I::object_type& h,
           std::uint64_t search_bound) {
  const auto ep = epi_product(inst, g, h, search_bound);
  if (!ep.found()) return false;
  return rel_equal(m(*ep.product), m(g) * m(h), 1e-12);
}

}  // namespace epicount
