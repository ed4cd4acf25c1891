#pragma once

// Finite abelian groups in primary-decomposition form, with hom / epi /
// automorphism counting, bounded subgroup enumeration, and corank samplers
// for the measure with all moments equal to 1.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "category.hpp"
#include "errors.hpp"
#include "numeric.hpp"
#include "primes.hpp"
#include "rng.hpp"

namespace epicount {

/// A finite abelian group as prime -> partition, each partition listing the
/// exponents of its cyclic p-power factors in non-increasing order.
class AbGroup {
 public:
  using Partition = std::vector<std::uint32_t>;
  using Part = std::pair<std::uint64_t, Partition>;

  AbGroup() = default;

  static AbGroup from_parts(std::vector<Part> parts) {
    std::map<std::uint64_t, Partition> merged;
    for (auto& [p, part] : parts) {
      if (!is_prime(p)) throw DomainError("AbGroup: " + std::to_string(p) + " is not prime");
      for (auto e : part)
        if (e > 0) merged[p].push_back(e);
    }
    AbGroup g;
    for (auto& [p, part] : merged) {
      std::sort(part.begin(), part.end(), std::greater<>());
      g.parts_.emplace_back(p, std::move(part));
    }
    return g;
  }

  /// Direct sum of cyclic groups of the given orders.
  static AbGroup from_cyclic_orders(std::span<const std::uint64_t> orders) {
    std::vector<Part> parts;
    for (auto n : orders) {
      if (n == 0) throw DomainError("AbGroup: cyclic order must be positive");
      for (auto [p, e] : factorize(n)) parts.push_back({p, {e}});
    }
    return from_parts(std::move(parts));
  }

  static AbGroup cyclic(std::uint64_t n) {
    const std::uint64_t o[] = {n};
    return from_cyclic_orders(o);
  }

  /// "C4xC2xC9" (case-insensitive, 'x'-separated cyclic orders); "1" and
  /// "C1" denote the trivial group.
  static AbGroup parse(std::string_view text) {
    std::string s;
    for (char c : text)
      if (!std::isspace(static_cast<unsigned char>(c)))
        s += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (s.empty()) throw DomainError("AbGroup: empty group literal");
    if (s == "1" || s == "trivial") return AbGroup();
    std::vector<std::uint64_t> orders;
    std::string_view rest = s;
    while (true) {
      const auto cut = rest.find('x');
      std::string_view tok = rest.substr(0, cut);
      if (tok.size() < 2 || tok.front() != 'c')
        throw DomainError("AbGroup: bad factor '" + std::string(tok) + "' in '" + std::string(text) + "'");
      tok.remove_prefix(1);
      std::uint64_t n = 0;
      auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), n);
      if (ec != std::errc() || ptr != tok.data() + tok.size() || n == 0)
        throw DomainError("AbGroup: bad cyclic order in '" + std::string(text) + "'");
      orders.push_back(n);
      if (cut == std::string_view::npos) break;
      rest.remove_prefix(cut + 1);
    }
    return from_cyclic_orders(orders);
  }

  const std::vector<Part>& parts() const noexcept { return parts_; }

  Partition partition_at(std::uint64_t p) const {
    for (const auto& [q, part] : parts_)
      if (q == p) return part;
    return {};
  }

  bool trivial() const noexcept { return parts_.empty(); }

  /// Prime order (the simple abelian groups).
  bool is_simple() const noexcept {
    return parts_.size() == 1 && parts_[0].second == Partition{1};
  }

  /// Every nontrivial factor has order p for the single prime p.
  bool is_elementary() const noexcept {
    return parts_.size() == 1 &&
           std::all_of(parts_[0].second.begin(), parts_[0].second.end(),
                       [](auto e) { return e == 1; });
  }

  std::uint64_t order() const {
    Count n = 1;
    for (const auto& [p, part] : parts_)
      for (auto e : part) n = checked_mul(n, checked_pow(p, e, "group order"), "group order");
    return n;
  }

  /// p^e for every cyclic factor, primes ascending, exponents descending.
  std::vector<std::uint64_t> primary_factors() const {
    std::vector<std::uint64_t> out;
    for (const auto& [p, part] : parts_)
      for (auto e : part) out.push_back(checked_pow(p, e));
    return out;
  }

  /// d_1, d_2, ... with d_{i+1} | d_i, largest first.
  std::vector<std::uint64_t> invariant_factors() const {
    std::size_t len = 0;
    for (const auto& [p, part] : parts_) len = std::max(len, part.size());
    std::vector<std::uint64_t> out(len, 1);
    for (const auto& [p, part] : parts_)
      for (std::size_t i = 0; i < part.size(); ++i) out[i] = checked_mul(out[i], checked_pow(p, part[i]));
    return out;
  }

  AbGroup operator*(const AbGroup& other) const {
    std::vector<Part> parts = parts_;
    parts.insert(parts.end(), other.parts_.begin(), other.parts_.end());
    return from_parts(std::move(parts));
  }

  /// Canonical literal from invariant factors, e.g. "C12xC2"; "C1" if trivial.
  std::string str() const {
    const auto inv = invariant_factors();
    if (inv.empty()) return "C1";
    std::string out;
    for (std::size_t i = 0; i < inv.size(); ++i) {
      if (i) out += 'x';
      out += 'C' + std::to_string(inv[i]);
    }
    return out;
  }

  auto operator<=>(const AbGroup&) const = default;

 private:
  std::vector<Part> parts_;
};

namespace detail {

/// Exponents of the partitions of a, each non-increasing.
inline void partitions_of(unsigned a, unsigned max_part, AbGroup::Partition& cur,
                          std::vector<AbGroup::Partition>& out) {
  if (a == 0) {
    out.push_back(cur);
    return;
  }
  for (unsigned e = std::min(a, max_part); e >= 1; --e) {
    cur.push_back(e);
    partitions_of(a - e, e, cur, out);
    cur.pop_back();
  }
}

inline std::vector<AbGroup::Partition> partitions_of(unsigned a) {
  std::vector<AbGroup::Partition> out;
  AbGroup::Partition cur;
  partitions_of(a, a, cur, out);
  return out;
}

/// #Epi(G_p, H_p) for p-groups with the given partitions.
///
/// A hom is a choice of h_i in H[p^{e_i}] for each cyclic generator of G; it
/// is onto iff the reductions of the h_i span V = H/pH. The reduction of h_i
/// is uniform on U_e = image of H[p^e] in V, which has dimension
/// #{j : f_j <= e}, and these subspaces are nested in e. Processing
/// generators by increasing e keeps the running span inside the next U_e,
/// so a dynamic program over the span dimension counts surjections exactly.
inline Count epi_count_p(std::uint64_t p, const AbGroup::Partition& src,
                         const AbGroup::Partition& dst) {
  const std::size_t d = dst.size();
  if (src.size() < d) return 0;
  AbGroup::Partition es = src;
  std::sort(es.begin(), es.end());
  std::vector<Count> ways(d + 1, 0);
  ways[0] = 1;
  for (auto e : es) {
    std::uint32_t log_fixed = 0;  // log_p |H[p^e]|
    unsigned m = 0;               // dim U_e
    for (auto f : dst) {
      log_fixed += std::min(e, f);
      if (f <= e) ++m;
    }
    const Count fiber = checked_pow(p, log_fixed - m, "epi count");
    const Count pm = checked_pow(p, m, "epi count");
    std::vector<Count> next(d + 1, 0);
    for (std::size_t s = 0; s <= d; ++s) {
      if (ways[s] == 0) continue;
      const Count ps = checked_pow(p, static_cast<unsigned>(s), "epi count");
      next[s] = checked_add(next[s], checked_mul(checked_mul(ways[s], ps), fiber));
      if (s < m && s < d)
        next[s + 1] = checked_add(next[s + 1], checked_mul(checked_mul(ways[s], pm - ps), fiber));
    }
    ways = std::move(next);
  }
  return ways[d];
}

/// An explicit abelian group Z/m_1 x ... x Z/m_k with elements encoded as
/// mixed-radix integers. Used for brute-force subgroup work only.
class ExplicitGroup {
 public:
  explicit ExplicitGroup(std::vector<std::uint64_t> moduli, std::uint64_t bound)
      : moduli_(std::move(moduli)) {
    order_ = 1;
    for (auto m : moduli_) {
      order_ = checked_mul(order_, m, "explicit group order");
      if (order_ > bound) throw CapacityError("explicit group larger than enumeration bound", bound);
    }
    digits_.resize(order_ * moduli_.size());
    for (std::uint64_t x = 0; x < order_; ++x) {
      std::uint64_t r = x;
      for (std::size_t i = 0; i < moduli_.size(); ++i) {
        digits_[x * moduli_.size() + i] = static_cast<std::uint32_t>(r % moduli_[i]);
        r /= moduli_[i];
      }
    }
  }

  std::uint64_t order() const noexcept { return order_; }
  std::size_t rank() const noexcept { return moduli_.size(); }
  const std::vector<std::uint64_t>& moduli() const noexcept { return moduli_; }
  std::uint32_t digit(std::uint32_t x, std::size_t i) const { return digits_[x * moduli_.size() + i]; }

  std::uint32_t add(std::uint32_t a, std::uint32_t b) const {
    std::uint64_t out = 0;
    std::uint64_t place = 1;
    for (std::size_t i = 0; i < moduli_.size(); ++i) {
      out += place * ((digit(a, i) + digit(b, i)) % moduli_[i]);
      place *= moduli_[i];
    }
    return static_cast<std::uint32_t>(out);
  }

  std::uint64_t element_order(std::uint32_t x) const {
    std::uint64_t l = 1;
    for (std::size_t i = 0; i < moduli_.size(); ++i) {
      const std::uint64_t m = moduli_[i];
      l = std::lcm(l, m / std::gcd<std::uint64_t>(digit(x, i), m));
    }
    return l;
  }

 private:
  std::vector<std::uint64_t> moduli_;
  std::uint64_t order_ = 1;
  std::vector<std::uint32_t> digits_;
};

using ElementSet = std::vector<std::uint32_t>;  // sorted

/// S + <g> for a subgroup S.
inline ElementSet join_cyclic(const ExplicitGroup& grp, const ElementSet& s, std::uint32_t g) {
  std::vector<bool> in(grp.order(), false);
  for (auto x : s) in[x] = true;
  ElementSet out = s;
  std::uint32_t step = g;
  while (!in[step]) {
    for (auto x : s) {
      const auto y = grp.add(x, step);
      if (!in[y]) {
        in[y] = true;
        out.push_back(y);
      }
    }
    step = grp.add(step, g);
  }
  std::sort(out.begin(), out.end());
  return out;
}

/// Every subgroup of grp, as sorted element sets, in canonical order.
inline std::vector<ElementSet> all_subgroups(const ExplicitGroup& grp, std::size_t max_count) {
  std::set<ElementSet> seen{ElementSet{0}};
  std::vector<ElementSet> frontier{ElementSet{0}};
  while (!frontier.empty()) {
    std::vector<ElementSet> next;
    for (const auto& s : frontier) {
      std::vector<bool> tried(grp.order(), false);
      for (auto x : s) tried[x] = true;
      for (std::uint32_t g = 0; g < grp.order(); ++g) {
        if (tried[g]) continue;
        for (auto x : s) tried[grp.add(x, g)] = true;  // the coset g + S gives the same join
        auto t = join_cyclic(grp, s, g);
        if (seen.insert(t).second) {
          if (seen.size() > max_count) throw CapacityError("subgroup count", max_count);
          next.push_back(std::move(t));
        }
      }
    }
    frontier = std::move(next);
  }
  return {seen.begin(), seen.end()};
}

/// Isomorphism type of the subgroup s, read off from |S[p^k]| for each prime.
inline AbGroup iso_type(const ExplicitGroup& grp, const ElementSet& s) {
  std::vector<AbGroup::Part> parts;
  std::map<std::uint64_t, std::vector<std::uint64_t>> orders_by_prime;
  for (auto x : s) {
    const auto o = grp.element_order(x);
    if (o == 1) continue;
    const auto f = factorize(o);
    if (f.size() == 1) orders_by_prime[f[0].first].push_back(f[0].second);
  }
  for (auto& [p, exps] : orders_by_prime) {
    std::uint32_t top = *std::max_element(exps.begin(), exps.end());
    AbGroup::Partition conj;  // conj[k-1] = #parts >= k
    std::uint64_t prev = 1;
    for (std::uint32_t k = 1; k <= top; ++k) {
      const std::uint64_t c =
          1 + static_cast<std::uint64_t>(std::count_if(exps.begin(), exps.end(), [k](auto e) { return e <= k; }));
      std::uint32_t r = 0;
      for (std::uint64_t q = c / prev; q > 1; q /= p) ++r;
      conj.push_back(r);
      prev = c;
    }
    AbGroup::Partition part;
    for (std::uint32_t i = 0; i < (conj.empty() ? 0 : conj[0]); ++i) {
      std::uint32_t len = 0;
      for (auto c : conj)
        if (c > i) ++len;
      part.push_back(len);
    }
    parts.emplace_back(p, std::move(part));
  }
  return AbGroup::from_parts(std::move(parts));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Counting

/// |Hom(G, H)| = prod_p prod_{i,j} p^{min(e_i, f_j)}.
inline Count hom_count(const AbGroup& g, const AbGroup& h) {
  Count n = 1;
  for (const auto& [p, dst] : h.parts()) {
    const auto src = g.partition_at(p);
    for (auto e : src)
      for (auto f : dst) n = checked_mul(n, checked_pow(p, std::min(e, f), "hom count"), "hom count");
  }
  return n;
}

/// Number of surjective homomorphisms G -> H.
inline Count epi_count(const AbGroup& g, const AbGroup& h) {
  Count n = 1;
  for (const auto& [p, dst] : h.parts()) {
    n = checked_mul(n, detail::epi_count_p(p, g.partition_at(p), dst), "epi count");
    if (n == 0) return 0;
  }
  return n;
}

/// |Aut(G)|, multiplied across primes. For a p-part with exponents
/// e_1 <= ... <= e_n, d_k = max{l : e_l = e_k}, c_k = min{l : e_l = e_k}:
/// prod_k (p^{d_k} - p^{k-1}) * prod_j p^{e_j (n - d_j)} * prod_i p^{(e_i - 1)(n - c_i + 1)}.
inline Count aut_order(const AbGroup& g) {
  Count total = 1;
  for (const auto& [p, part] : g.parts()) {
    AbGroup::Partition e = part;
    std::sort(e.begin(), e.end());
    const std::size_t n = e.size();
    for (std::size_t k = 0; k < n; ++k) {
      std::size_t d = k, c = k;
      while (d + 1 < n && e[d + 1] == e[k]) ++d;
      while (c > 0 && e[c - 1] == e[k]) --c;
      const std::size_t d1 = d + 1, c1 = c + 1;  // 1-based
      const Count lead = checked_pow(p, static_cast<unsigned>(d1), "aut order") -
                         checked_pow(p, static_cast<unsigned>(k), "aut order");
      total = checked_mul(total, lead, "aut order");
      total = checked_mul(total, checked_pow(p, static_cast<unsigned>(e[k] * (n - d1)), "aut order"), "aut order");
      total = checked_mul(total, checked_pow(p, static_cast<unsigned>((e[k] - 1) * (n - c1 + 1)), "aut order"),
                          "aut order");
    }
  }
  return total;
}

inline constexpr std::uint64_t kDefaultSubgroupBound = 4096;
inline constexpr std::size_t kMaxSubgroupCount = 200000;

/// All subgroups of G grouped by isomorphism type, with how many subgroups
/// realise each type. Brute force; requires |G| <= bound.
inline std::vector<std::pair<AbGroup, Count>> subgroups(const AbGroup& g,
                                                        std::uint64_t bound = kDefaultSubgroupBound) {
  if (g.order() > bound) throw CapacityError("subgroups: |G| = " + std::to_string(g.order()), bound);
  detail::ExplicitGroup grp(g.primary_factors(), bound);
  std::map<AbGroup, Count> by_type;
  for (const auto& s : detail::all_subgroups(grp, kMaxSubgroupCount)) ++by_type[detail::iso_type(grp, s)];
  return {by_type.begin(), by_type.end()};
}

/// #Epi(G, H) = sum_{K <= H} mu(K, H) #Hom(G, K) over the explicit subgroup
/// lattice of H. An independent route to epi_count for small H.
inline Count epi_count_lattice(const AbGroup& g, const AbGroup& h, std::uint64_t bound = 256) {
  if (h.order() > bound) throw CapacityError("epi_count_lattice: |H| = " + std::to_string(h.order()), bound);
  detail::ExplicitGroup grp(h.primary_factors(), bound);
  auto subs = detail::all_subgroups(grp, kMaxSubgroupCount);
  LevelPoset<detail::ElementSet> lattice(subs, [](const auto& k, const auto& l) {
    return std::includes(l.begin(), l.end(), k.begin(), k.end());
  });
  detail::ElementSet whole(grp.order());
  std::iota(whole.begin(), whole.end(), 0u);
  const std::size_t top = *lattice.index_of(whole);
  std::int64_t total = 0;
  for (std::size_t k = 0; k < lattice.size(); ++k) {
    if (!lattice.leq(k, top)) continue;
    const auto mu = lattice.mobius(k, top);
    if (mu == 0) continue;
    total += mu * static_cast<std::int64_t>(hom_count(g, detail::iso_type(grp, lattice.element(k))));
  }
  if (total < 0) throw DomainError("epi_count_lattice: negative total");
  return static_cast<Count>(total);
}

/// Number of subspaces of F_p^m of dimension d that project onto every
/// coordinate line (no coordinate functional vanishes on them).
inline double surjecting_subspace_count(std::uint64_t p, unsigned m, unsigned d) {
  double total = 0.0;
  for (unsigned i = 0; i <= m; ++i) {
    const double term = binomial(m, i) * gaussian_binomial(m - i, d, static_cast<double>(p));
    total += (i % 2 ? -term : term);
  }
  return total;
}

// ---------------------------------------------------------------------------
// The instance

struct AbGroupsInstance {
  using object_type = AbGroup;
  static constexpr std::string_view name = "abgroups";

  std::uint64_t enumeration_bound = kDefaultSubgroupBound;
  /// Tuples of simple groups use the subspace count even when the product
  /// is small enough to enumerate.
  bool closed_form_for_simple = true;

  Count epi_count(const AbGroup& g, const AbGroup& h) const { return epicount::epi_count(g, h); }
  Count aut_order(const AbGroup& g) const { return epicount::aut_order(g); }
  std::uint64_t size(const AbGroup& g) const { return g.order(); }

  std::optional<AbGroup> product(std::span<const AbGroup> tuple) const {
    AbGroup out;
    for (const auto& g : tuple) out = out * g;
    return out;
  }

  /// Subgroups of prod G_i projecting onto every factor, grouped by type.
  /// Enumerated explicitly when the product is within the enumeration bound;
  /// tuples of simple groups use the subspace count in closed form.
  std::vector<Subobject<AbGroup>> surjecting_subobjects(std::span<const AbGroup> tuple) const {
    Count prod_order = 1;
    bool fits = true;
    for (const auto& g : tuple) {
      if (__builtin_mul_overflow(prod_order, g.order(), &prod_order) || prod_order > enumeration_bound) {
        fits = false;
        break;
      }
    }
    const bool simple = std::all_of(tuple.begin(), tuple.end(), [](const AbGroup& g) { return g.is_simple(); });
    if (simple && (closed_form_for_simple || !fits)) return simple_surjecting(tuple);
    if (fits) return enumerate_surjecting(tuple);
    throw CapacityError("surjecting subobjects: product exceeds enumeration bound", enumeration_bound);
  }

  /// Every abelian group of order <= bound, in canonical order.
  std::vector<AbGroup> objects_up_to(std::uint64_t bound) const {
    constexpr std::uint64_t kLimit = 100000;
    if (bound > kLimit) throw CapacityError("abelian group enumeration", kLimit);
    std::vector<AbGroup> out;
    for (std::uint64_t n = 1; n <= bound; ++n) {
      std::vector<std::vector<AbGroup::Part>> acc{{}};
      for (auto [p, a] : factorize(n)) {
        std::vector<std::vector<AbGroup::Part>> next;
        for (const auto& base : acc)
          for (auto& part : detail::partitions_of(a)) {
            auto ext = base;
            ext.emplace_back(p, part);
            next.push_back(std::move(ext));
          }
        acc = std::move(next);
      }
      for (auto& parts : acc) out.push_back(AbGroup::from_parts(std::move(parts)));
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  std::string to_string(const AbGroup& g) const { return g.str(); }

 private:
  std::vector<Subobject<AbGroup>> enumerate_surjecting(std::span<const AbGroup> tuple) const {
    std::vector<std::uint64_t> moduli;
    std::vector<std::pair<std::size_t, std::size_t>> ranges;  // digit range of each factor
    for (const auto& g : tuple) {
      const auto f = g.primary_factors();
      ranges.emplace_back(moduli.size(), moduli.size() + f.size());
      moduli.insert(moduli.end(), f.begin(), f.end());
    }
    detail::ExplicitGroup grp(moduli, enumeration_bound);
    std::map<AbGroup, double> by_type;
    for (const auto& s : detail::all_subgroups(grp, kMaxSubgroupCount)) {
      bool onto = true;
      for (std::size_t i = 0; i < tuple.size() && onto; ++i) {
        std::set<std::vector<std::uint32_t>> image;
        for (auto x : s) {
          std::vector<std::uint32_t> key;
          for (std::size_t d = ranges[i].first; d < ranges[i].second; ++d) key.push_back(grp.digit(x, d));
          image.insert(std::move(key));
        }
        onto = image.size() == tuple[i].order();
      }
      if (onto) by_type[detail::iso_type(grp, s)] += 1.0;
    }
    std::vector<Subobject<AbGroup>> out;
    for (auto& [h, c] : by_type) out.push_back({h, c});
    return out;
  }

  std::vector<Subobject<AbGroup>> simple_surjecting(std::span<const AbGroup> tuple) const {
    std::map<std::uint64_t, unsigned> mult;
    for (const auto& g : tuple) ++mult[g.parts()[0].first];
    // Across distinct primes the choices are independent; at prime p a
    // surjecting subgroup is a subspace of F_p^m meeting no coordinate kernel.
    std::vector<std::pair<std::vector<AbGroup::Part>, double>> acc{{{}, 1.0}};
    for (auto [p, m] : mult) {
      std::vector<std::pair<std::vector<AbGroup::Part>, double>> next;
      for (const auto& [parts, c] : acc)
        for (unsigned d = 1; d <= m; ++d) {
          const double s = surjecting_subspace_count(p, m, d);
          if (s == 0.0) continue;
          auto ext = parts;
          ext.emplace_back(p, AbGroup::Partition(d, 1));
          next.emplace_back(std::move(ext), c * s);
        }
      acc = std::move(next);
    }
    std::vector<Subobject<AbGroup>> out;
    for (auto& [parts, c] : acc) out.push_back({AbGroup::from_parts(parts), c});
    return out;
  }
};

/// M_G = 1 for every finite abelian group.
inline MomentMeasure<AbGroup> unit_measure() {
  return MomentMeasure<AbGroup>("one", [](const AbGroup&) { return 1.0; }, true);
}

// ---------------------------------------------------------------------------
// Coranks of random matrices over F_p

/// N - rank of a uniformly random N x N matrix over F_p, by row reduction.
inline unsigned sample_corank(std::uint64_t p, unsigned n, Stream& stream) {
  if (n == 0) throw DomainError("sample_corank: dimension must be positive");
  if (!is_prime(p) || p >= (std::uint64_t{1} << 32)) throw DomainError("sample_corank: p must be a prime below 2^32");
  std::vector<std::uint64_t> a(static_cast<std::size_t>(n) * n);
  for (auto& x : a) x = stream.below(p);
  auto inv = [p](std::uint64_t x) {
    std::uint64_t r = 1, e = p - 2;
    while (e) {
      if (e & 1) r = r * x % p;
      x = x * x % p;
      e >>= 1;
    }
    return r;
  };
  unsigned rank = 0;
  for (unsigned col = 0; col < n && rank < n; ++col) {
    unsigned piv = rank;
    while (piv < n && a[piv * n + col] == 0) ++piv;
    if (piv == n) continue;
    if (piv != rank)
      for (unsigned j = 0; j < n; ++j) std::swap(a[piv * n + j], a[rank * n + j]);
    const std::uint64_t iv = inv(a[rank * n + col]);
    for (unsigned i = rank + 1; i < n; ++i) {
      const std::uint64_t f = a[i * n + col] * iv % p;
      if (f == 0) continue;
      for (unsigned j = col; j < n; ++j) a[i * n + j] = (a[i * n + j] + (p - f) * a[rank * n + j]) % p;
    }
    ++rank;
  }
  return n - rank;
}

inline unsigned sample_corank(std::uint64_t p, unsigned n, std::uint64_t seed) {
  Stream stream(seed);
  return sample_corank(p, n, stream);
}

/// P(corank = r) for a uniform N x N matrix over F_p:
/// p^{-r^2} [prod_{j=r+1}^{N} (1 - p^{-j})]^2 / prod_{j=1}^{N-r} (1 - p^{-j}).
inline std::vector<double> corank_distribution(std::uint64_t p, unsigned n) {
  const double q = static_cast<double>(p);
  // factor[j] = 1 - p^{-j}
  std::vector<double> factor(n + 1, 1.0);
  for (unsigned j = 1; j <= n; ++j) factor[j] = 1.0 - std::pow(q, -static_cast<double>(j));
  std::vector<double> out(n + 1);
  for (unsigned r = 0; r <= n; ++r) {
    double num = 1.0, den = 1.0;
    for (unsigned j = r + 1; j <= n; ++j) num *= factor[j];
    for (unsigned j = 1; j + r <= n; ++j) den *= factor[j];
    out[r] = std::pow(q, -static_cast<double>(r) * r) * num * num / den;
  }
  return out;
}

/// E[p^{m * corank}] = E[#Hom(coker, F_p^m)]
///                   = sum_d [N choose d]_p prod_{i<d} (p^m - p^i) p^{-N d},
/// counting m-tuples of left-kernel vectors by the dimension of their span.
inline double corank_power_moment(std::uint64_t p, unsigned n, unsigned m) {
  const double q = static_cast<double>(p);
  double total = 0.0;
  for (unsigned d = 0; d <= std::min(n, m); ++d) {
    double surj = 1.0;
    for (unsigned i = 0; i < d; ++i) surj *= std::pow(q, m) - std::pow(q, i);
    total += gaussian_binomial(n, d, q) * surj * std::pow(q, -static_cast<double>(n) * d);
  }
  return total;
}

/// Exact corank law for every prime in a list, sampled by inversion with one
/// uniform draw per prime. Equal in distribution to sample_corank and fast
/// enough for all primes up to 10^6.
class CorankLaw {
 public:
  CorankLaw(std::shared_ptr<const std::vector<std::uint64_t>> primes, unsigned n)
      : primes_(std::move(primes)), n_(n) {
    if (n_ == 0) throw DomainError("CorankLaw: dimension must be positive");
    survival_.reserve(primes_->size());
    for (auto p : *primes_) {
      const auto dist = corank_distribution(p, n_);
      // survival[r-1] = P(corank >= r), summed from the top for accuracy.
      std::vector<double> surv(n_);
      double tail = 0.0;
      for (unsigned r = n_; r >= 1; --r) {
        tail += dist[r];
        surv[r - 1] = tail;
      }
      while (!surv.empty() && surv.back() == 0.0) surv.pop_back();
      survival_.push_back(std::move(surv));
    }
  }

  const std::vector<std::uint64_t>& primes() const noexcept { return *primes_; }
  std::shared_ptr<const std::vector<std::uint64_t>> shared_primes() const noexcept { return primes_; }
  unsigned dimension() const noexcept { return n_; }

  std::vector<std::uint8_t> sample(Stream& stream) const {
    std::vector<std::uint8_t> out(primes_->size());
    for (std::size_t i = 0; i < out.size(); ++i) {
      const double u = stream.uniform();
      std::uint8_t r = 0;
      for (double s : survival_[i]) {
        if (u < s) ++r; else break;
      }
      out[i] = r;
    }
    return out;
  }

 private:
  std::shared_ptr<const std::vector<std::uint64_t>> primes_;
  unsigned n_;
  std::vector<std::vector<double>> survival_;
};

/// A random pro-abelian group seen through its p-ranks for every prime in a
/// list: r_p = corank of an independent N x N matrix over F_p.
class CorankSample {
 public:
  CorankSample(std::shared_ptr<const std::vector<std::uint64_t>> primes, std::vector<std::uint8_t> coranks,
               unsigned truncation, std::uint64_t seed)
      : primes_(std::move(primes)), coranks_(std::move(coranks)), truncation_(truncation), seed_(seed) {}

  unsigned truncation() const noexcept { return truncation_; }
  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t max_prime() const noexcept { return primes_->empty() ? 1 : primes_->back(); }

  unsigned corank(std::uint64_t p) const {
    auto it = std::lower_bound(primes_->begin(), primes_->end(), p);
    if (it == primes_->end() || *it != p)
      throw HorizonError("prime " + std::to_string(p) + " not covered by corank sample", max_prime());
    return coranks_[static_cast<std::size_t>(it - primes_->begin())];
  }

  bool covers(const AbGroup& g) const {
    for (const auto& [p, part] : g.parts())
      if (!std::binary_search(primes_->begin(), primes_->end(), p)) return false;
    return true;
  }

  /// #Epi(sample, G) for G trivial or elementary abelian: the surjections
  /// F_p^{r_p} -> F_p^k number prod_{i<k} (p^{r_p} - p^i).
  double epi_count(const AbGroup& g) const {
    if (g.trivial()) return 1.0;
    if (!g.is_elementary())
      throw ScopeError("corank sample only determines elementary abelian quotients, not " + g.str());
    const auto p = g.parts()[0].first;
    const auto k = g.parts()[0].second.size();
    const double q = static_cast<double>(p);
    const double top = std::pow(q, corank(p));
    double n = 1.0;
    for (std::size_t i = 0; i < k; ++i) n *= top - std::pow(q, static_cast<double>(i));
    return std::max(n, 0.0);
  }

 private:
  std::shared_ptr<const std::vector<std::uint64_t>> primes_;
  std::vector<std::uint8_t> coranks_;
  unsigned truncation_;
  std::uint64_t seed_;
};

}  // namespace epicount
