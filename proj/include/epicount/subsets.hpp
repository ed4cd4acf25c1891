#pragma once

// The category whose opposite is finite subsets of the positive integers
// under inclusion: #Epi(B, A) = [A subset of B], every automorphism group is
// trivial, products are unions. Random pro-objects are random subsets with
// independent memberships.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <initializer_list>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "category.hpp"
#include "errors.hpp"
#include "rng.hpp"

namespace epicount {

/// A finite subset of {1, 2, ...}, stored strictly increasing.
class FinSet {
 public:
  using value_type = std::uint32_t;

  FinSet() = default;
  FinSet(std::initializer_list<value_type> xs) : FinSet(std::vector<value_type>(xs)) {}
  explicit FinSet(std::vector<value_type> xs) : elems_(std::move(xs)) {
    std::sort(elems_.begin(), elems_.end());
    elems_.erase(std::unique(elems_.begin(), elems_.end()), elems_.end());
    if (!elems_.empty() && elems_.front() == 0)
      throw DomainError("FinSet: elements must be positive integers");
  }

  static FinSet singleton(value_type x) { return FinSet{x}; }

  /// Accepts "{1,2,5}", "1,2,5" and "{}".
  static FinSet parse(std::string_view text) {
    std::string_view s = text;
    auto trim = [](std::string_view v) {
      while (!v.empty() && std::isspace(static_cast<unsigned char>(v.front()))) v.remove_prefix(1);
      while (!v.empty() && std::isspace(static_cast<unsigned char>(v.back()))) v.remove_suffix(1);
      return v;
    };
    s = trim(s);
    if (!s.empty() && s.front() == '{') {
      if (s.back() != '}') throw DomainError("FinSet: unbalanced brace in '" + std::string(text) + "'");
      s = trim(s.substr(1, s.size() - 2));
    }
    std::vector<value_type> xs;
    while (!s.empty()) {
      const auto comma = s.find(',');
      const std::string_view tok = trim(s.substr(0, comma));
      value_type v = 0;
      auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
      if (ec != std::errc() || ptr != tok.data() + tok.size() || v == 0)
        throw DomainError("FinSet: bad element '" + std::string(tok) + "'");
      xs.push_back(v);
      if (comma == std::string_view::npos) break;
      s.remove_prefix(comma + 1);
    }
    return FinSet(std::move(xs));
  }

  const std::vector<value_type>& elements() const noexcept { return elems_; }
  bool empty() const noexcept { return elems_.empty(); }
  std::size_t size() const noexcept { return elems_.size(); }
  /// Largest element, 0 for the empty set.
  value_type max() const noexcept { return elems_.empty() ? 0 : elems_.back(); }

  bool contains(value_type x) const {
    return std::binary_search(elems_.begin(), elems_.end(), x);
  }
  /// other is a subset of *this.
  bool includes(const FinSet& other) const {
    return std::includes(elems_.begin(), elems_.end(), other.elems_.begin(), other.elems_.end());
  }
  bool disjoint(const FinSet& other) const {
    auto a = elems_.begin();
    auto b = other.elems_.begin();
    while (a != elems_.end() && b != other.elems_.end()) {
      if (*a == *b) return false;
      if (*a < *b) ++a; else ++b;
    }
    return true;
  }
  FinSet unite(const FinSet& other) const {
    FinSet out;
    std::set_union(elems_.begin(), elems_.end(), other.elems_.begin(), other.elems_.end(),
                   std::back_inserter(out.elems_));
    return out;
  }

  std::string str() const {
    std::string out = "{";
    for (std::size_t i = 0; i < elems_.size(); ++i) {
      if (i) out += ',';
      out += std::to_string(elems_[i]);
    }
    return out + "}";
  }

  auto operator<=>(const FinSet&) const = default;

 private:
  std::vector<value_type> elems_;
};

/// All subsets of d, in canonical order.
inline std::vector<FinSet> power_set(const FinSet& d, std::size_t max_size = 24) {
  if (d.size() > max_size) throw CapacityError("power set too large", max_size);
  const auto& xs = d.elements();
  std::vector<FinSet> out;
  out.reserve(std::size_t{1} << xs.size());
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << xs.size()); ++mask) {
    std::vector<FinSet::value_type> pick;
    for (std::size_t i = 0; i < xs.size(); ++i)
      if (mask >> i & 1) pick.push_back(xs[i]);
    out.emplace_back(std::move(pick));
  }
  std::sort(out.begin(), out.end());
  return out;
}

// ---------------------------------------------------------------------------
// Membership probabilities

/// n -> r_n in [0, 1], identified by a preset key.
class RSequence {
 public:
  RSequence(std::string key, std::function<double(std::uint64_t)> rule)
      : key_(std::move(key)), rule_(std::move(rule)) {}

  static RSequence constant(double p) {
    if (!(p >= 0.0 && p <= 1.0)) throw DomainError("constant r-sequence outside [0,1]");
    char buf[64];
    std::snprintf(buf, sizeof buf, "constant:%.17g", p);
    return RSequence(buf, [p](std::uint64_t) { return p; });
  }

  /// r_1 = 0, r_2 = 1, r_n = 1/log n for n >= 3.
  static RSequence cramer() {
    return RSequence("cramer", [](std::uint64_t n) {
      if (n <= 1) return 0.0;
      if (n == 2) return 1.0;
      return 1.0 / std::log(static_cast<double>(n));
    });
  }

  /// values[j-1] = r_j. Untabulated n is an error unless `fallback` is set.
  static RSequence table(std::vector<double> values, std::optional<double> fallback = std::nullopt,
                         std::string key = "table") {
    for (double v : values)
      if (!(v >= 0.0 && v <= 1.0)) throw DomainError("r-table value outside [0,1]");
    return RSequence(std::move(key), [values = std::move(values), fallback](std::uint64_t n) {
      if (n >= 1 && n <= values.size()) return values[n - 1];
      if (fallback) return *fallback;
      throw DomainError("r_" + std::to_string(n) + " is not tabulated");
    });
  }

  /// "constant:<p>", "cramer" or "table:<path>" (one probability per line).
  static RSequence from_key(std::string_view key) {
    if (key == "cramer") return cramer();
    if (key.starts_with("constant:")) {
      const std::string num(key.substr(9));
      std::size_t used = 0;
      double p = 0;
      try {
        p = std::stod(num, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || used != num.size()) throw DomainError("bad constant r-sequence '" + num + "'");
      return constant(p);
    }
    if (key.starts_with("table:")) {
      const std::string path(key.substr(6));
      std::ifstream in(path);
      if (!in) throw DomainError("cannot open r-table '" + path + "'");
      std::vector<double> values;
      std::string line;
      std::size_t lineno = 0;
      while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
          values.push_back(std::stod(line));
        } catch (const std::exception&) {
          throw DomainError(path + ":" + std::to_string(lineno) + ": not a probability");
        }
      }
      return table(std::move(values), std::nullopt, std::string(key));
    }
    throw DomainError("unknown r-sequence preset '" + std::string(key) + "'");
  }

  double operator()(std::uint64_t n) const {
    const double r = rule_(n);
    if (!(r >= 0.0 && r <= 1.0))
      throw DomainError("r_" + std::to_string(n) + " outside [0,1] in '" + key_ + "'");
    return r;
  }

  /// r_1 .. r_horizon.
  std::vector<double> tabulate(std::uint64_t horizon) const {
    std::vector<double> out(horizon);
    for (std::uint64_t j = 1; j <= horizon; ++j) out[j - 1] = (*this)(j);
    return out;
  }

  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
  std::function<double(std::uint64_t)> rule_;
};

/// M_A = prod_{a in A} r_a (empty product 1).
inline double subset_moment(const FinSet& a, const RSequence& r) {
  double m = 1.0;
  for (auto x : a.elements()) m *= r(x);
  return m;
}

inline MomentMeasure<FinSet> product_measure(const RSequence& r) {
  return MomentMeasure<FinSet>(
      "prod:" + r.key(), [r](const FinSet& a) { return subset_moment(a, r); }, true);
}

// ---------------------------------------------------------------------------
// The instance

struct SubsetsInstance {
  using object_type = FinSet;
  static constexpr std::string_view name = "subsets";

  /// Largest ground set enumerated exhaustively.
  std::size_t enumeration_limit = 20;

  /// #Epi(B, A) = 1 if A is a subset of B, else 0.
  Count epi_count(const FinSet& b, const FinSet& a) const { return b.includes(a) ? 1 : 0; }
  Count aut_order(const FinSet&) const { return 1; }
  std::uint64_t size(const FinSet& a) const { return a.max(); }

  std::optional<FinSet> product(std::span<const FinSet> tuple) const {
    FinSet u;
    for (const auto& a : tuple) u = u.unite(a);
    return u;
  }

  /// #Epi(G, A_1) ... #Epi(G, A_j) = #Epi(G, A_1 u ... u A_j), so the union
  /// is the single contributing subobject.
  std::vector<Subobject<FinSet>> surjecting_subobjects(std::span<const FinSet> tuple) const {
    return {{*product(tuple), 1.0}};
  }

  /// All subsets of {1..bound}.
  std::vector<FinSet> objects_up_to(std::uint64_t bound) const {
    if (bound > enumeration_limit) throw CapacityError("subset enumeration", enumeration_limit);
    std::vector<FinSet::value_type> ground(bound);
    for (std::uint64_t i = 0; i < bound; ++i) ground[i] = static_cast<FinSet::value_type>(i + 1);
    return power_set(FinSet(std::move(ground)), enumeration_limit);
  }

  /// The union is the only possible epi-product: any candidate must receive
  /// an epimorphism from A u B and map onto both.
  std::vector<FinSet> epi_product_candidates(const FinSet& g, const FinSet& h, std::uint64_t) const {
    return {g.unite(h)};
  }

  /// #Epi(K, -) on subsets of U = G u H depends only on K n U, so subsets of
  /// U plus one outside element form a complete test family.
  std::vector<FinSet> epi_product_tests(const FinSet& g, const FinSet& h, std::uint64_t) const {
    auto u = g.unite(h).elements();
    u.push_back(static_cast<FinSet::value_type>((u.empty() ? 0 : u.back()) + 1));
    if (u.size() > enumeration_limit) throw CapacityError("epi-product test family", enumeration_limit);
    return power_set(FinSet(std::move(u)), enumeration_limit);
  }

  /// The level 2^D.
  LevelPoset<FinSet> level(const FinSet& d) const {
    if (d.size() > enumeration_limit) throw CapacityError("level size", enumeration_limit);
    auto elems = power_set(d, enumeration_limit);
    return LevelPoset<FinSet>(std::move(elems), [](const FinSet& b, const FinSet& a) {
      return a.includes(b);
    });
  }

  std::string to_string(const FinSet& a) const { return a.str(); }
};

// ---------------------------------------------------------------------------
// Random subsets

/// A random subset truncated to {1..horizon}.
class SubsetSample {
 public:
  SubsetSample(std::uint64_t horizon, std::vector<bool> membership, std::uint64_t seed)
      : horizon_(horizon), membership_(std::move(membership)), seed_(seed) {}

  std::uint64_t horizon() const noexcept { return horizon_; }
  std::uint64_t seed() const noexcept { return seed_; }

  bool contains(std::uint64_t j) const {
    if (j == 0 || j > horizon_) throw HorizonError("membership query beyond horizon", horizon_);
    return membership_[j - 1];
  }

  bool covers(const FinSet& a) const { return a.max() <= horizon_; }

  /// #Epi(sample, A); asking beyond the horizon is an error, never a zero.
  double epi_count(const FinSet& a) const {
    if (!covers(a))
      throw HorizonError("object " + a.str() + " exceeds sample horizon", horizon_);
    for (auto x : a.elements())
      if (!membership_[x - 1]) return 0.0;
    return 1.0;
  }

  std::uint64_t cardinality() const {
    return static_cast<std::uint64_t>(std::count(membership_.begin(), membership_.end(), true));
  }

 private:
  std::uint64_t horizon_;
  std::vector<bool> membership_;
  std::uint64_t seed_;
};

/// One uniform draw per j = 1..horizon, in order; j is included iff the draw
/// falls below r_j. `r_table[j-1]` = r_j.
inline SubsetSample sample_subset(std::span<const double> r_table, std::uint64_t seed) {
  Stream stream(seed);
  std::vector<bool> member(r_table.size());
  for (std::size_t j = 0; j < r_table.size(); ++j) member[j] = stream.bernoulli(r_table[j]);
  return SubsetSample(r_table.size(), std::move(member), seed);
}

inline SubsetSample sample_subset(const RSequence& r, std::uint64_t horizon, std::uint64_t seed) {
  if (horizon == 0) throw DomainError("sample_subset: horizon must be positive");
  const auto table = r.tabulate(horizon);
  return sample_subset(table, seed);
}

inline RSequence cramer_preset() { return RSequence::cramer(); }

}  // namespace epicount
