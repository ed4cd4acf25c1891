#pragma once

// Orderings n -> f_n on isomorphism classes, their moment integrals, and
// the counting function N(G, f_n) on sampled pro-objects.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "abgroups.hpp"
#include "category.hpp"
#include "errors.hpp"
#include "primes.hpp"
#include "subsets.hpp"

namespace epicount {

enum class OrderMode { threshold, interval };

/// A real-valued ordering. `support(n)` lists the objects with f_n != 0 and
/// their values, sorted by object. Orderings with infinite support must carry
/// a tail bound for sum_{G not listed} |f_n(G)| M_G.
template <class Object>
class Ordering {
 public:
  using Support = std::vector<std::pair<Object, double>>;
  using EvalFn = std::function<double(std::uint64_t, const Object&)>;
  using SupportFn = std::function<Support(std::uint64_t)>;
  using TailFn = std::function<double(std::uint64_t)>;

  struct Traits {
    bool nonnegative = true;
    /// support(n) is contained in support(n') with equal values for n < n'.
    bool nested = false;
    bool finite_support = true;
  };

  Ordering(std::string family_id, EvalFn eval, SupportFn support, Traits traits, TailFn tail = {})
      : family_id_(std::move(family_id)),
        eval_(std::move(eval)),
        support_(std::move(support)),
        traits_(traits),
        tail_(std::move(tail)) {}

  const std::string& family_id() const noexcept { return family_id_; }
  bool nonnegative() const noexcept { return traits_.nonnegative; }
  bool nested() const noexcept { return traits_.nested; }
  bool finite_support() const noexcept { return traits_.finite_support; }
  bool certified() const noexcept { return traits_.finite_support || static_cast<bool>(tail_); }

  double operator()(std::uint64_t n, const Object& g) const {
    check_index(n);
    return eval_(n, g);
  }

  Support support(std::uint64_t n) const {
    check_index(n);
    if (!certified())
      throw ScopeError("ordering '" + family_id_ + "' has infinite support and no tail certificate");
    Support s = support_(n);
    std::erase_if(s, [](const auto& e) { return e.second == 0.0; });
    if (!std::is_sorted(s.begin(), s.end(), [](const auto& a, const auto& b) { return a.first < b.first; }))
      std::sort(s.begin(), s.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    return s;
  }

  /// Declared bound on the L1 mass outside support(n); 0 for finite support.
  double tail_bound(std::uint64_t n) const {
    if (traits_.finite_support) return 0.0;
    if (!tail_) throw ScopeError("ordering '" + family_id_ + "' is not L1-certified");
    return tail_(n);
  }

  /// a f + b g, supported on the union of supports.
  friend Ordering linear_combination(double a, const Ordering& f, double b, const Ordering& g) {
    auto fid = std::to_string(a) + "*" + f.family_id_ + "+" + std::to_string(b) + "*" + g.family_id_;
    Traits t{(a >= 0 && b >= 0 && f.nonnegative() && g.nonnegative()), f.nested() && g.nested(),
             f.finite_support() && g.finite_support()};
    return Ordering(
        std::move(fid), [=](std::uint64_t n, const Object& x) { return a * f(n, x) + b * g(n, x); },
        [=](std::uint64_t n) {
          Support out;
          auto sf = f.support(n), sg = g.support(n);
          std::size_t i = 0, j = 0;
          while (i < sf.size() || j < sg.size()) {
            if (j == sg.size() || (i < sf.size() && sf[i].first < sg[j].first)) {
              out.emplace_back(sf[i].first, a * sf[i].second);
              ++i;
            } else if (i == sf.size() || sg[j].first < sf[i].first) {
              out.emplace_back(sg[j].first, b * sg[j].second);
              ++j;
            } else {
              out.emplace_back(sf[i].first, a * sf[i].second + b * sg[j].second);
              ++i;
              ++j;
            }
          }
          return out;
        },
        t);
  }

 private:
  void check_index(std::uint64_t n) const {
    if (n == 0) throw DomainError("ordering '" + family_id_ + "': index n must be positive");
  }

  std::string family_id_;
  EvalFn eval_;
  SupportFn support_;
  Traits traits_;
  TailFn tail_;
};

/// f_n = 1 on {G : order(G) <= n} (threshold) or {G : n < order(G) <= 2n}
/// (interval). `fiber(m)` lists the objects of order exactly m in the domain
/// of the ordering; it must be finite.
template <class Object>
Ordering<Object> classical_ordering(std::string family_id, std::function<std::uint64_t(const Object&)> order,
                                    std::function<std::vector<Object>(std::uint64_t)> fiber, OrderMode mode) {
  auto range = [mode](std::uint64_t n) {
    return mode == OrderMode::threshold ? std::pair<std::uint64_t, std::uint64_t>{1, n}
                                        : std::pair<std::uint64_t, std::uint64_t>{n + 1, 2 * n};
  };
  auto eval = [=](std::uint64_t n, const Object& g) {
    const auto m = order(g);
    const auto [lo, hi] = range(n);
    if (m < lo || m > hi) return 0.0;
    const auto f = fiber(m);
    return std::find(f.begin(), f.end(), g) != f.end() ? 1.0 : 0.0;
  };
  auto support = [=](std::uint64_t n) {
    typename Ordering<Object>::Support out;
    const auto [lo, hi] = range(n);
    for (std::uint64_t m = lo; m <= hi; ++m)
      for (auto& g : fiber(m)) out.emplace_back(std::move(g), 1.0);
    return out;
  };
  return Ordering<Object>(std::move(family_id), eval, support, {true, mode == OrderMode::threshold, true});
}

/// Indicator of singletons {m}, ordered by m.
inline Ordering<FinSet> singleton_ordering(OrderMode mode = OrderMode::threshold) {
  return classical_ordering<FinSet>(
      mode == OrderMode::threshold ? "singletons" : "interval", [](const FinSet& a) { return a.max(); },
      [](std::uint64_t m) { return std::vector<FinSet>{FinSet::singleton(static_cast<FinSet::value_type>(m))}; },
      mode);
}

/// f_n(C_p) = 1/(p-1) for primes p <= n, zero elsewhere. N(G, f_n) counts
/// maximal subgroups of index at most n.
inline Ordering<AbGroup> maximal_subgroup_ordering() {
  auto eval = [](std::uint64_t n, const AbGroup& g) {
    if (!g.is_simple()) return 0.0;
    const auto p = g.parts()[0].first;
    return p <= n ? 1.0 / static_cast<double>(p - 1) : 0.0;
  };
  auto support = [](std::uint64_t n) {
    Ordering<AbGroup>::Support out;
    for (auto p : primes_up_to(n)) out.emplace_back(AbGroup::cyclic(p), 1.0 / static_cast<double>(p - 1));
    return out;
  };
  return Ordering<AbGroup>("maximal-subgroups", eval, support, {true, true, true});
}

/// Membership predicates on positive integers, by name.
inline std::function<bool(std::uint64_t)> named_predicate(const std::string& name) {
  if (name == "all") return [](std::uint64_t) { return true; };
  if (name == "primes") return [](std::uint64_t m) { return is_prime(m); };
  if (name == "squares-plus-one")
    return [](std::uint64_t m) {
      if (m == 0) return false;
      auto x = static_cast<std::uint64_t>(std::sqrt(static_cast<double>(m - 1)));
      while (x * x > m - 1) --x;
      while ((x + 1) * (x + 1) <= m - 1) ++x;
      return x * x + 1 == m;
    };
  throw DomainError("unknown predicate '" + name + "' (expected all, primes, squares-plus-one)");
}

/// f_n = indicator of singletons {m} with m <= n and S(m).
inline Ordering<FinSet> characteristic_ordering(const std::string& predicate_name) {
  auto pred = named_predicate(predicate_name);
  auto eval = [pred](std::uint64_t n, const FinSet& a) {
    return a.size() == 1 && a.max() <= n && pred(a.max()) ? 1.0 : 0.0;
  };
  auto support = [pred](std::uint64_t n) {
    Ordering<FinSet>::Support out;
    if (n > std::numeric_limits<FinSet::value_type>::max())
      throw CapacityError("characteristic ordering index", std::numeric_limits<FinSet::value_type>::max());
    for (std::uint64_t m = 1; m <= n; ++m)
      if (pred(m)) out.emplace_back(FinSet::singleton(static_cast<FinSet::value_type>(m)), 1.0);
    return out;
  };
  return Ordering<FinSet>("charfun:" + predicate_name, eval, support, {true, true, true});
}

/// A moment integral with the tail certificate's error bar attached.
struct MomentValue {
  double value = 0.0;
  double error_bar = 0.0;
};

/// sum_G f_n(G) M_G (or |f_n(G)| M_G), over the support in object order.
template <class Object>
MomentValue moment_integral(const Ordering<Object>& f, std::uint64_t n, const MomentMeasure<Object>& m,
                            bool absolute = false) {
  MomentValue out;
  out.error_bar = f.tail_bound(n);
  for (const auto& [g, v] : f.support(n)) out.value += (absolute ? std::fabs(v) : v) * m(g);
  return out;
}

/// Per-checkpoint moment integrals on a grid.
struct OrderingMoments {
  std::vector<std::uint64_t> grid;
  std::vector<double> signed_integral;
  std::vector<double> absolute_integral;
  bool monotone = true;  // signed integral nondecreasing along the grid
};

template <class Object>
OrderingMoments ordering_moments(const Ordering<Object>& f, const std::vector<std::uint64_t>& grid,
                                 const MomentMeasure<Object>& m) {
  OrderingMoments out;
  out.grid = grid;
  for (auto n : grid) {
    out.signed_integral.push_back(moment_integral(f, n, m, false).value);
    out.absolute_integral.push_back(moment_integral(f, n, m, true).value);
    const auto k = out.signed_integral.size();
    if (k > 1 && out.signed_integral[k - 1] < out.signed_integral[k - 2]) out.monotone = false;
  }
  return out;
}

/// N(sample, f_n) = sum_G f_n(G) #Epi(sample, G). Samples raise HorizonError
/// for objects they cannot see.
template <class Object, class Sample>
double count(const Sample& sample, const Ordering<Object>& f, std::uint64_t n) {
  double total = 0.0;
  for (const auto& [g, v] : f.support(n)) total += v * sample.epi_count(g);
  return total;
}

}  // namespace epicount
