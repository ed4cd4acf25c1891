#pragma once

// Monte Carlo harness: trajectories of N(G_t, f_n) over an n-grid, empirical
// central moments against exact moment integrals, theoretical bounds, tail
// frequencies, and classification of which law-of-large-numbers hypotheses
// hold for a declared gamma / psi family.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <functional>
#include <iterator>
#include <limits>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "abgroups.hpp"
#include "bounds.hpp"
#include "category.hpp"
#include "errors.hpp"
#include "orderings.hpp"
#include "primes.hpp"
#include "rng.hpp"
#include "subsets.hpp"

namespace epicount {

// ---------------------------------------------------------------------------
// Growth families

/// gamma(n) = n^a (log n)^b, or psi(t) = t^a (log t)^b composed with the
/// mean, so that gamma(n) = psi(|mean(n)|). Logarithms are clamped at 1 so
/// the function stays positive. Summability facts come from the table for
/// these families, never from finitely many terms.
struct GammaFamily {
  enum class Role { gamma, psi };
  enum class Kind { power, power_log };

  Role role = Role::gamma;
  Kind kind = Kind::power;
  double a = 0.0;
  double b = 0.0;

  /// "gamma:power:<a>", "gamma:power-log:<a>:<b>", "psi:power:<a>", ...
  static GammaFamily parse(const std::string& text) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    for (std::string item; std::getline(ss, item, ':');) parts.push_back(item);
    auto number = [&](const std::string& s) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(s, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != s.size() || !std::isfinite(v)) throw DomainError("growth family '" + text + "': bad number '" + s + "'");
      return v;
    };
    GammaFamily g;
    if (parts.size() < 3) throw DomainError("growth family '" + text + "': expected role:kind:params");
    if (parts[0] == "gamma") g.role = Role::gamma;
    else if (parts[0] == "psi") g.role = Role::psi;
    else throw DomainError("growth family '" + text + "': role must be gamma or psi");
    if (parts[1] == "power" && parts.size() == 3) {
      g.kind = Kind::power;
      g.a = number(parts[2]);
    } else if (parts[1] == "power-log" && parts.size() == 4) {
      g.kind = Kind::power_log;
      g.a = number(parts[2]);
      g.b = number(parts[3]);
    } else {
      throw DomainError("growth family '" + text + "': kind must be power:<a> or power-log:<a>:<b>");
    }
    return g;
  }

  std::string str() const {
    char buf[96];
    if (kind == Kind::power)
      std::snprintf(buf, sizeof buf, "%s:power:%.17g", role == Role::gamma ? "gamma" : "psi", a);
    else
      std::snprintf(buf, sizeof buf, "%s:power-log:%.17g:%.17g", role == Role::gamma ? "gamma" : "psi", a, b);
    return buf;
  }

  double value(double t) const {
    const double lg = std::log(std::max(t, std::exp(1.0)));
    return std::pow(t, a) * std::pow(lg, b);
  }

  bool tends_to_infinity() const { return a > 0.0 || (a == 0.0 && b > 0.0); }
  /// sum 1/gamma(n) < infinity.
  bool reciprocal_summable() const { return a > 1.0 || (a == 1.0 && b > 1.0); }
  /// sum 1/(n psi(n)) < infinity.
  bool psi_condition() const { return a > 0.0 || (a == 0.0 && b > 1.0); }
};

// ---------------------------------------------------------------------------
// Configuration

struct ExperimentConfig {
  std::string name = "experiment";
  std::string instance;  // subsets | abgroups | counterexample
  std::string measure;   // constant:<p> | cramer | table:<path> | one
  std::string ordering;  // singletons | interval | charfun:<pred> | maximal-subgroups | harmonic
  std::vector<std::uint64_t> grid;
  std::uint64_t trials = 0;
  std::optional<std::uint64_t> seed;
  unsigned k = 2;
  std::string gamma = "gamma:power:2";
  unsigned threads = 1;
  std::uint64_t horizon = 0;  // subsets; 0 = smallest horizon covering the grid
  unsigned truncation = 24;   // abgroups: matrix size for coranks
  std::string corank_sampler = "law";
  double liminf_floor = 0.5;
  double growth_slack = 2.0;
  unsigned corollary_k = 2;
  double corollary_eps = 0.1;

  void validate() const {
    if (instance != "subsets" && instance != "abgroups" && instance != "counterexample")
      throw DomainError("instance must be subsets, abgroups or counterexample");
    if (grid.empty()) throw DomainError("grid must be nonempty");
    if (grid.front() == 0) throw DomainError("grid entries must be positive");
    for (std::size_t i = 1; i < grid.size(); ++i)
      if (grid[i] <= grid[i - 1]) throw DomainError("grid must be strictly increasing");
    if (trials < 2) throw DomainError("trials must be at least 2");
    if (!seed) throw DomainError("seed is required");
    if (k < 1) throw DomainError("k must be at least 1");
    if (threads < 1) throw DomainError("threads must be at least 1");
    if (truncation < 1 || truncation > 64) throw DomainError("truncation must be in 1..64");
    if (corank_sampler != "law" && corank_sampler != "matrix")
      throw DomainError("corank_sampler must be law or matrix");
    if (corollary_k < 1) throw DomainError("corollary_k must be at least 1");
    if (!(corollary_eps > 0.0)) throw DomainError("corollary_eps must be positive");
    if (!(growth_slack >= 1.0)) throw DomainError("growth_slack must be at least 1");
    (void)GammaFamily::parse(gamma);
  }
};

// ---------------------------------------------------------------------------
// Experiments

struct Trajectory {
  std::uint64_t trial = 0;
  std::uint64_t seed = 0;
  std::vector<double> values;  // one per grid checkpoint
};

/// Everything the harness needs about one configured experiment, with the
/// instance details erased. Bound callbacks take a checkpoint index and may
/// throw (ScopeError, CapacityError) when no computation applies.
struct Experiment {
  ExperimentConfig config;
  std::vector<double> exact_mean;      // integral of f_n dM
  std::vector<double> abs_mean;        // integral of |f_n| dM
  std::vector<double> exact_variance;  // of the sampled model, NaN if unknown
  bool nonnegative = true;
  std::uint64_t horizon = 0;
  std::string truncation_note;
  std::function<std::vector<double>(std::uint64_t seed)> trajectory;
  std::function<double(std::size_t)> bound_2;
  std::function<double(std::size_t)> bound_k;  // bound for the k-th central moment, NaN for odd k
  std::function<double(std::size_t)> corollary_denominator;
};

namespace detail {

/// Supports at each checkpoint; for nested orderings only the new entries.
template <class Object>
struct GridSupports {
  std::vector<typename Ordering<Object>::Support> pieces;
  bool cumulative = false;
};

template <class Object>
GridSupports<Object> grid_supports(const Ordering<Object>& f, const std::vector<std::uint64_t>& grid,
                                   const MomentMeasure<Object>& m, Experiment& ex,
                                   const std::function<double(const Object&, double)>& variance_term) {
  GridSupports<Object> gs;
  gs.cumulative = f.nested();
  typename Ordering<Object>::Support prev;
  for (auto n : grid) {
    auto s = f.support(n);
    double mean = 0.0, abs_mean = 0.0, var = 0.0;
    for (const auto& [g, v] : s) {
      const double mg = m(g);
      mean += v * mg;
      abs_mean += std::fabs(v) * mg;
      var += variance_term ? variance_term(g, v) : std::numeric_limits<double>::quiet_NaN();
    }
    ex.exact_mean.push_back(mean);
    ex.abs_mean.push_back(abs_mean);
    ex.exact_variance.push_back(variance_term ? var : std::numeric_limits<double>::quiet_NaN());
    if (gs.cumulative) {
      typename Ordering<Object>::Support delta;
      auto less = [](const auto& x, const auto& y) { return x.first < y.first; };
      std::set_difference(s.begin(), s.end(), prev.begin(), prev.end(), std::back_inserter(delta), less);
      gs.pieces.push_back(std::move(delta));
      prev = std::move(s);
    } else {
      gs.pieces.push_back(std::move(s));
    }
  }
  return gs;
}

template <class Object, class Sample>
std::vector<double> evaluate_grid(const GridSupports<Object>& gs, const Sample& sample) {
  std::vector<double> out(gs.pieces.size());
  double running = 0.0;
  for (std::size_t i = 0; i < gs.pieces.size(); ++i) {
    double s = gs.cumulative ? running : 0.0;
    for (const auto& [g, v] : gs.pieces[i]) s += v * sample.epi_count(g);
    out[i] = running = s;
  }
  return out;
}

template <CategoryInstance I>
void attach_bounds(Experiment& ex, std::shared_ptr<const I> inst,
                   std::shared_ptr<const Ordering<typename I::object_type>> f,
                   std::shared_ptr<const MomentMeasure<typename I::object_type>> m) {
  const auto grid = ex.config.grid;
  const unsigned k = ex.config.k;
  const unsigned ck = ex.config.corollary_k;
  const double eps = ex.config.corollary_eps;
  ex.bound_2 = [=](std::size_t i) { return theoretical_bound_2(*f, grid[i], *m, *inst); };
  ex.bound_k = [=](std::size_t i) {
    if (k % 2) return std::numeric_limits<double>::quiet_NaN();
    if (k == 2) return theoretical_bound_2(*f, grid[i], *m, *inst);
    return theoretical_bound_2k(*f, grid[i], *m, *inst, k / 2);
  };
  ex.corollary_denominator = [=](std::size_t i) { return corollary_denominator(*f, grid[i], *m, *inst, ck, eps); };
}

inline Experiment subsets_experiment(const ExperimentConfig& cfg) {
  Experiment ex;
  ex.config = cfg;
  auto r = std::make_shared<RSequence>(RSequence::from_key(cfg.measure));
  auto m = std::make_shared<MomentMeasure<FinSet>>(product_measure(*r));
  std::shared_ptr<Ordering<FinSet>> f;
  if (cfg.ordering == "singletons") f = std::make_shared<Ordering<FinSet>>(singleton_ordering(OrderMode::threshold));
  else if (cfg.ordering == "interval") f = std::make_shared<Ordering<FinSet>>(singleton_ordering(OrderMode::interval));
  else if (cfg.ordering.starts_with("charfun:"))
    f = std::make_shared<Ordering<FinSet>>(characteristic_ordering(cfg.ordering.substr(8)));
  else throw DomainError("ordering '" + cfg.ordering + "' is not available for subsets");
  ex.nonnegative = f->nonnegative();

  // All of these live on singletons, so the summands are independent:
  // Var N = sum f^2 (M - M^2).
  auto var_term = [m](const FinSet& a, double v) {
    const double ma = (*m)(a);
    return v * v * (ma - ma * ma);
  };
  auto gs = std::make_shared<GridSupports<FinSet>>(grid_supports<FinSet>(*f, cfg.grid, *m, ex, var_term));

  std::uint64_t needed = 0;
  for (const auto& piece : gs->pieces)
    for (const auto& [a, v] : piece) needed = std::max<std::uint64_t>(needed, a.max());
  const std::uint64_t horizon = cfg.horizon ? cfg.horizon : std::max<std::uint64_t>(needed, 1);
  if (horizon < needed)
    throw HorizonError("run_trials: ordering support reaches " + std::to_string(needed) + " beyond horizon", horizon);
  ex.horizon = horizon;
  auto table = std::make_shared<std::vector<double>>(r->tabulate(horizon));
  ex.truncation_note = "random subset sampled on {1.." + std::to_string(horizon) + "}";
  ex.trajectory = [gs, table](std::uint64_t seed) { return evaluate_grid(*gs, sample_subset(*table, seed)); };
  attach_bounds<SubsetsInstance>(ex, std::make_shared<SubsetsInstance>(), f, m);
  return ex;
}

inline Experiment abgroups_experiment(const ExperimentConfig& cfg) {
  Experiment ex;
  ex.config = cfg;
  if (cfg.measure != "one") throw DomainError("abgroups supports only measure = one");
  if (cfg.ordering != "maximal-subgroups") throw DomainError("ordering '" + cfg.ordering + "' is not available for abgroups");
  auto m = std::make_shared<MomentMeasure<AbGroup>>(unit_measure());
  auto f = std::make_shared<Ordering<AbGroup>>(maximal_subgroup_ordering());
  ex.nonnegative = true;
  const unsigned N = cfg.truncation;
  // #Epi(G, C_p) = p^r - 1 with r the corank: Var = E p^{2r} - (E p^r)^2.
  auto var_term = [N](const AbGroup& g, double v) {
    const auto p = g.parts()[0].first;
    const double e1 = corank_power_moment(p, N, 1), e2 = corank_power_moment(p, N, 2);
    return v * v * (e2 - e1 * e1);
  };
  auto gs = std::make_shared<GridSupports<AbGroup>>(grid_supports<AbGroup>(*f, cfg.grid, *m, ex, var_term));
  auto primes = std::make_shared<const std::vector<std::uint64_t>>(primes_up_to(cfg.grid.back()));
  ex.horizon = cfg.grid.back();
  ex.truncation_note = "p-coranks of independent uniform " + std::to_string(N) + "x" + std::to_string(N) +
                       " matrices over F_p for every prime p <= " + std::to_string(cfg.grid.back()) +
                       "; sampled mean of p^r - 1 is 1 - p^-" + std::to_string(N) + " rather than 1";
  if (cfg.corank_sampler == "law") {
    auto law = std::make_shared<CorankLaw>(primes, N);
    ex.trajectory = [gs, law, N](std::uint64_t seed) {
      Stream stream(seed);
      CorankSample sample(law->shared_primes(), law->sample(stream), N, seed);
      return evaluate_grid(*gs, sample);
    };
  } else {
    ex.trajectory = [gs, primes, N](std::uint64_t seed) {
      Stream stream(seed);
      std::vector<std::uint8_t> ranks(primes->size());
      for (std::size_t i = 0; i < ranks.size(); ++i)
        ranks[i] = static_cast<std::uint8_t>(sample_corank((*primes)[i], N, stream));
      CorankSample sample(primes, std::move(ranks), N, seed);
      return evaluate_grid(*gs, sample);
    };
  }
  attach_bounds<AbGroupsInstance>(ex, std::make_shared<AbGroupsInstance>(), f, m);
  return ex;
}

/// X_n = X / n with one fair coin X for the whole sequence; N_n = X H_n.
inline Experiment counterexample_experiment(const ExperimentConfig& cfg) {
  Experiment ex;
  ex.config = cfg;
  if (!cfg.ordering.empty() && cfg.ordering != "harmonic")
    throw DomainError("the counterexample only supports ordering = harmonic");
  std::vector<double> harmonic;
  double h = 0.0;
  std::uint64_t next = 1;
  for (auto n : cfg.grid) {
    for (; next <= n; ++next) h += 1.0 / static_cast<double>(next);
    harmonic.push_back(h);
    ex.exact_mean.push_back(h / 2);
    ex.abs_mean.push_back(h / 2);
    ex.exact_variance.push_back(h * h / 4);
  }
  ex.horizon = cfg.grid.back();
  ex.truncation_note = "single Bernoulli(1/2) draw per trial";
  ex.trajectory = [harmonic](std::uint64_t seed) {
    Stream stream(seed);
    const double x = stream.bernoulli(0.5) ? 1.0 : 0.0;
    std::vector<double> out;
    for (double v : harmonic) out.push_back(x * v);
    return out;
  };
  auto nan = [](std::size_t) { return std::numeric_limits<double>::quiet_NaN(); };
  ex.bound_2 = nan;
  ex.bound_k = nan;
  ex.corollary_denominator = nan;
  return ex;
}

}  // namespace detail

/// Validates the configuration and prepares exact moments, supports, and
/// samplers. Coverage problems surface here, before any sampling.
inline Experiment build_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.instance == "subsets") return detail::subsets_experiment(cfg);
  if (cfg.instance == "abgroups") return detail::abgroups_experiment(cfg);
  return detail::counterexample_experiment(cfg);
}

/// T independent trajectories; trial t uses derive_seed(seed, t). Workers pull
/// trial indices from a shared counter and write into their own slot, so the
/// result does not depend on the number of threads.
inline std::vector<Trajectory> run_trials(const Experiment& ex) {
  const auto& cfg = ex.config;
  std::vector<Trajectory> out(cfg.trials);
  std::atomic<std::uint64_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    while (true) {
      const std::uint64_t t = next.fetch_add(1);
      if (t >= cfg.trials) return;
      try {
        const std::uint64_t s = derive_seed(*cfg.seed, t);
        out[t] = Trajectory{t, s, ex.trajectory(s)};
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = cfg.trials;
        return;
      }
    }
  };
  const unsigned workers = static_cast<unsigned>(std::min<std::uint64_t>(cfg.threads, cfg.trials));
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

inline std::vector<Trajectory> run_trials(const ExperimentConfig& cfg) { return run_trials(build_experiment(cfg)); }

/// (1/T) sum_t |N_t(n) - exact_mean|^k, centred at the exact mean rather than
/// the sample mean.
inline double empirical_central_moment(const std::vector<Trajectory>& trajs, std::size_t checkpoint, unsigned k,
                                       double exact_mean) {
  if (trajs.empty()) throw DomainError("empirical_central_moment: no trajectories");
  double s = 0.0;
  for (const auto& t : trajs) s += std::pow(std::fabs(t.values.at(checkpoint) - exact_mean), static_cast<double>(k));
  return s / static_cast<double>(trajs.size());
}

inline double empirical_mean(const std::vector<Trajectory>& trajs, std::size_t checkpoint) {
  double s = 0.0;
  for (const auto& t : trajs) s += t.values.at(checkpoint);
  return s / static_cast<double>(trajs.size());
}

// ---------------------------------------------------------------------------
// Classification

struct ClassifyOptions {
  double liminf_floor = 0.5;
  double growth_slack = 2.0;
  bool nonnegative = false;
  bool monotone = false;  // every trajectory nondecreasing along the grid
};

struct Classification {
  bool liminf_positive = false;
  bool bound_fit_bounded = false;
  bool gamma_to_infinity = false;
  bool reciprocal_summable = false;
  bool psi_condition = false;
  bool nonnegative = false;
  bool monotone = false;
  std::string label = "none";
};

/// bound_fit[i] = (k-th central moment) * gamma(n_i) / |mean(n_i)|^k.
///
/// liminf positivity: min |mean| over the last half of the grid is at least
/// the floor. Boundedness: every value finite and the maximum over the last
/// half at most growth_slack times the maximum over the first half.
inline Classification classify_convergence(const std::vector<double>& bound_fit, const GammaFamily& gamma,
                                           const std::vector<double>& mean_sequence, const ClassifyOptions& opt) {
  Classification c;
  const std::size_t L = mean_sequence.size();
  if (L == 0 || bound_fit.size() != L) return c;
  const std::size_t half = L / 2;
  double min_tail = std::numeric_limits<double>::infinity();
  for (std::size_t i = half; i < L; ++i) min_tail = std::min(min_tail, std::fabs(mean_sequence[i]));
  c.liminf_positive = min_tail >= opt.liminf_floor && min_tail > 0.0;

  const bool finite = std::all_of(bound_fit.begin(), bound_fit.end(), [](double x) { return std::isfinite(x); });
  if (finite) {
    if (L < 2) {
      c.bound_fit_bounded = true;
    } else {
      const std::size_t split = (L + 1) / 2;
      const double head = *std::max_element(bound_fit.begin(), bound_fit.begin() + static_cast<std::ptrdiff_t>(split));
      const double tail = *std::max_element(bound_fit.begin() + static_cast<std::ptrdiff_t>(split), bound_fit.end());
      c.bound_fit_bounded = tail <= opt.growth_slack * head;
    }
  }

  c.nonnegative = opt.nonnegative;
  c.monotone = opt.monotone;
  c.psi_condition = gamma.role == GammaFamily::Role::psi && gamma.psi_condition();
  if (gamma.role == GammaFamily::Role::gamma) {
    c.gamma_to_infinity = gamma.tends_to_infinity();
    c.reciprocal_summable = gamma.reciprocal_summable();
  } else {
    // gamma(n) = psi(mean(n)) diverges when psi does and the means grow.
    bool increasing = true;
    for (std::size_t i = 1; i < L; ++i) increasing = increasing && mean_sequence[i] > mean_sequence[i - 1];
    c.gamma_to_infinity = gamma.tends_to_infinity() && increasing;
  }

  if (!c.liminf_positive || !c.bound_fit_bounded || !c.gamma_to_infinity) return c;
  if (gamma.role == GammaFamily::Role::gamma) {
    c.label = c.reciprocal_summable ? "SLLN-ii" : "WLLN";
  } else {
    c.label = (c.psi_condition && c.nonnegative && c.monotone) ? "SLLN-iii" : "WLLN";
  }
  return c;
}

// ---------------------------------------------------------------------------
// Reports

inline std::string format_real(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

struct ReportRow {
  std::uint64_t n = 0;
  double exact_mean = 0.0;
  double emp_mean = 0.0;
  double emp_cm_k = 0.0;
  double emp_cm_2 = 0.0;
  double bound = 0.0;
  double bound_2 = 0.0;
  double ratio = 0.0;  // emp_cm_k / bound
  double tail2 = 0.0, tail3 = 0.0, tail5 = 0.0;
  double bound_fit = 0.0;
  double exact_variance = 0.0;
  double corollary_denominator = 0.0;
  double corollary_envelope = 0.0;  // max_t |N_t(n)| / denominator
};

struct ConvergenceReport {
  ExperimentConfig config;
  std::vector<ReportRow> rows;
  Classification classification;
  GammaFamily gamma;
  double fitted_c_bound_k = std::numeric_limits<double>::quiet_NaN();
  double fitted_c_bound_2 = std::numeric_limits<double>::quiet_NaN();
  bool corollary_envelope_decreasing = false;
  std::string sigma_source;
  std::string truncation_note;
  std::vector<std::string> notes;
  std::vector<Trajectory> trajectories;

  void write_csv(std::ostream& os) const {
    os << "n,exact_mean,emp_mean,emp_cm_k,bound,ratio,tail2,tail3,tail5\n";
    for (const auto& r : rows)
      os << r.n << ',' << format_real(r.exact_mean) << ',' << format_real(r.emp_mean) << ','
         << format_real(r.emp_cm_k) << ',' << format_real(r.bound) << ',' << format_real(r.ratio) << ','
         << format_real(r.tail2) << ',' << format_real(r.tail3) << ',' << format_real(r.tail5) << '\n';
  }

  nlohmann::ordered_json summary_json() const {
    using nlohmann::ordered_json;
    auto real = [](double x) -> ordered_json {
      if (std::isfinite(x)) return x;
      return format_real(x);
    };
    ordered_json cfg = {
        {"version", 1},
        {"name", config.name},
        {"instance", config.instance},
        {"measure", config.measure},
        {"ordering", config.ordering},
        {"grid", config.grid},
        {"trials", config.trials},
        {"seed", config.seed.value_or(0)},
        {"k", config.k},
        {"gamma", config.gamma},
        {"horizon", config.horizon},
        {"truncation", config.truncation},
        {"corank_sampler", config.corank_sampler},
        {"liminf_floor", config.liminf_floor},
        {"growth_slack", config.growth_slack},
        {"corollary_k", config.corollary_k},
        {"corollary_eps", config.corollary_eps},
    };
    const auto& c = classification;
    ordered_json cls = {
        {"label", c.label},
        {"liminf_positive", c.liminf_positive},
        {"bound_fit_bounded", c.bound_fit_bounded},
        {"gamma_to_infinity", c.gamma_to_infinity},
        {"reciprocal_summable", c.reciprocal_summable},
        {"psi_condition", c.psi_condition},
        {"nonnegative", c.nonnegative},
        {"monotone_trajectories", c.monotone},
    };
    ordered_json checkpoints = ordered_json::array();
    for (const auto& r : rows)
      checkpoints.push_back({{"n", r.n},
                             {"exact_variance", real(r.exact_variance)},
                             {"emp_cm_2", real(r.emp_cm_2)},
                             {"bound_2", real(r.bound_2)},
                             {"bound_fit", real(r.bound_fit)},
                             {"corollary_denominator", real(r.corollary_denominator)},
                             {"corollary_envelope", real(r.corollary_envelope)}});
    std::vector<std::uint64_t> seeds;
    for (const auto& t : trajectories) seeds.push_back(t.seed);
    ordered_json out = {
        {"config", cfg},
        {"classification", cls},
        {"fitted_constants", {{"emp_cm_k_over_bound", real(fitted_c_bound_k)}, {"emp_cm_2_over_bound_2", real(fitted_c_bound_2)}}},
        {"sigma_source", sigma_source},
        {"corollary",
         {{"k", config.corollary_k},
          {"epsilon", config.corollary_eps},
          {"envelope_decreasing", corollary_envelope_decreasing},
          {"note", "necessary-condition check: max over trials of |N|/denominator along the grid"}}},
        {"checkpoints", checkpoints},
        {"truncation", truncation_note},
        {"notes", notes},
        {"seeds", {{"master", config.seed.value_or(0)}, {"trials", seeds}}},
    };
    return out;
  }
};

namespace detail {

/// Evaluates a bound callback, turning "not computable here" into NaN plus a
/// note; other errors propagate.
inline double optional_bound(const std::function<double(std::size_t)>& fn, std::size_t i, const char* what,
                             std::vector<std::string>& notes) {
  try {
    return fn(i);
  } catch (const ScopeError& e) {
    notes.push_back(std::string(what) + " unavailable: " + e.what());
  } catch (const CapacityError& e) {
    notes.push_back(std::string(what) + " unavailable: " + e.what());
  }
  return std::numeric_limits<double>::quiet_NaN();
}

}  // namespace detail

/// Runs the trials and assembles the report.
inline ConvergenceReport run_experiment(const ExperimentConfig& cfg) {
  Experiment ex = build_experiment(cfg);
  ConvergenceReport rep;
  rep.config = cfg;
  rep.gamma = GammaFamily::parse(cfg.gamma);
  rep.truncation_note = ex.truncation_note;
  rep.trajectories = run_trials(ex);
  const auto& trajs = rep.trajectories;
  const double T = static_cast<double>(trajs.size());

  bool monotone = true;
  for (const auto& t : trajs)
    for (std::size_t i = 1; i < t.values.size(); ++i) monotone = monotone && t.values[i] >= t.values[i - 1];

  std::vector<double> fits;
  bool sigma_from_bound = true;
  for (std::size_t i = 0; i < cfg.grid.size(); ++i) {
    ReportRow r;
    r.n = cfg.grid[i];
    r.exact_mean = ex.exact_mean[i];
    r.exact_variance = ex.exact_variance[i];
    r.emp_mean = empirical_mean(trajs, i);
    r.emp_cm_k = empirical_central_moment(trajs, i, cfg.k, r.exact_mean);
    r.emp_cm_2 = empirical_central_moment(trajs, i, 2, r.exact_mean);
    r.bound_2 = detail::optional_bound(ex.bound_2, i, "bound_2", rep.notes);
    r.bound = cfg.k == 2 ? r.bound_2 : detail::optional_bound(ex.bound_k, i, "bound_k", rep.notes);
    r.ratio = r.emp_cm_k / r.bound;

    double sigma = std::sqrt(r.bound_2);
    if (!std::isfinite(sigma)) {
      sigma = std::sqrt(r.exact_variance);
      sigma_from_bound = false;
    }
    auto tail = [&](double x) {
      if (!std::isfinite(sigma)) return std::numeric_limits<double>::quiet_NaN();
      double c = 0;
      for (const auto& t : trajs) c += std::fabs(t.values[i] - r.exact_mean) > x * sigma ? 1 : 0;
      return c / T;
    };
    r.tail2 = tail(2);
    r.tail3 = tail(3);
    r.tail5 = tail(5);

    const double g = rep.gamma.role == GammaFamily::Role::gamma ? rep.gamma.value(static_cast<double>(r.n))
                                                                 : rep.gamma.value(std::fabs(r.exact_mean));
    r.bound_fit = r.emp_cm_k * g / std::pow(std::fabs(r.exact_mean), static_cast<double>(cfg.k));
    fits.push_back(r.bound_fit);

    r.corollary_denominator = detail::optional_bound(ex.corollary_denominator, i, "corollary", rep.notes);
    double env = 0.0;
    for (const auto& t : trajs) env = std::max(env, std::fabs(t.values[i]) / r.corollary_denominator);
    r.corollary_envelope = std::isfinite(r.corollary_denominator) ? env : std::numeric_limits<double>::quiet_NaN();
    rep.rows.push_back(r);
  }
  rep.sigma_source = sigma_from_bound ? "sqrt(bound_2)" : "sqrt(exact variance)";

  rep.fitted_c_bound_k = 0.0;
  rep.fitted_c_bound_2 = 0.0;
  rep.corollary_envelope_decreasing = true;
  for (std::size_t i = 0; i < rep.rows.size(); ++i) {
    const auto& r = rep.rows[i];
    rep.fitted_c_bound_k = std::max(rep.fitted_c_bound_k, r.ratio);
    rep.fitted_c_bound_2 = std::max(rep.fitted_c_bound_2, r.emp_cm_2 / r.bound_2);
    if (i > 0 && !(r.corollary_envelope <= rep.rows[i - 1].corollary_envelope))
      rep.corollary_envelope_decreasing = false;
  }
  if (std::isnan(rep.rows.front().bound)) rep.fitted_c_bound_k = std::numeric_limits<double>::quiet_NaN();
  if (std::isnan(rep.rows.front().bound_2)) rep.fitted_c_bound_2 = std::numeric_limits<double>::quiet_NaN();

  std::sort(rep.notes.begin(), rep.notes.end());
  rep.notes.erase(std::unique(rep.notes.begin(), rep.notes.end()), rep.notes.end());

  rep.classification = classify_convergence(
      fits, rep.gamma, ex.exact_mean,
      ClassifyOptions{cfg.liminf_floor, cfg.growth_slack, ex.nonnegative, monotone});
  return rep;
}

}  // namespace epicount
