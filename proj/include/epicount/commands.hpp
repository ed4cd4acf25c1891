#pragma once

// Subcommand bodies for the command-line tool. Each writes to the given
// streams and returns an exit code; `guarded` maps library errors to codes.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "abgroups.hpp"
#include "acceptance.hpp"
#include "bounds.hpp"
#include "category.hpp"
#include "config.hpp"
#include "errors.hpp"
#include "harness.hpp"
#include "orderings.hpp"
#include "subsets.hpp"

namespace epicount::cli {

enum ExitCode : int { ok = 0, usage = 1, scope = 2, capacity = 3, acceptance_failure = 4 };

/// Runs `body`, reporting any library error on `err` with the failing
/// command's name.
inline int guarded(const std::string& command, std::ostream& err, const std::function<int()>& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << command << ": config error: " << e.what() << '\n';
    return usage;
  } catch (const ScopeError& e) {
    err << command << ": scope error: " << e.what() << '\n';
    return scope;
  } catch (const HorizonError& e) {
    err << command << ": horizon error: " << e.what() << '\n';
    return capacity;
  } catch (const CapacityError& e) {
    err << command << ": capacity error: " << e.what() << '\n';
    return capacity;
  } catch (const DomainError& e) {
    err << command << ": " << e.what() << '\n';
    return usage;
  } catch (const std::exception& e) {
    err << command << ": " << e.what() << '\n';
    return usage;
  }
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateOptions {
  std::filesystem::path config;
  std::filesystem::path out_dir = ".";
  std::optional<unsigned> threads;
  std::optional<std::uint64_t> seed_override;
};

inline int simulate(const SimulateOptions& opt, std::ostream& out) {
  auto cfg = load_config(opt.config);
  if (opt.threads) cfg.threads = *opt.threads;
  if (opt.seed_override) cfg.seed = *opt.seed_override;
  cfg.validate();
  const auto rep = run_experiment(cfg);

  std::filesystem::create_directories(opt.out_dir);
  const auto csv_path = opt.out_dir / (cfg.name + ".csv");
  const auto json_path = opt.out_dir / (cfg.name + ".json");
  {
    std::ofstream csv(csv_path);
    if (!csv) throw DomainError("cannot write " + csv_path.string());
    rep.write_csv(csv);
  }
  {
    std::ofstream js(json_path);
    if (!js) throw DomainError("cannot write " + json_path.string());
    js << rep.summary_json().dump(2) << '\n';
  }
  out << cfg.name << ": " << rep.rows.size() << " checkpoints, " << cfg.trials << " trials, label "
      << rep.classification.label << '\n';
  out << "wrote " << csv_path.string() << '\n' << "wrote " << json_path.string() << '\n';
  for (const auto& note : rep.notes) out << "note: " << note << '\n';
  return ok;
}

// ---------------------------------------------------------------------------
// moments

struct MomentsOptions {
  std::string ordering;            // singletons[:n] | interval | charfun:<pred> | maximal-subgroups
  std::optional<std::string> instance;
  std::optional<std::string> measure;
  std::vector<std::uint64_t> n;
};

inline std::string fixed6(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", x);
  return buf;
}

inline int moments(MomentsOptions opt, std::ostream& out) {
  std::string ordering = opt.ordering;
  if (ordering.starts_with("singletons:")) {
    opt.n.push_back(detail::parse_count(ordering.substr(11), 0, "singletons"));
    ordering = "singletons";
  }
  if (opt.n.empty()) throw DomainError("no index n given (use --n or singletons:<n>)");
  const std::string instance = opt.instance.value_or(ordering == "maximal-subgroups" ? "abgroups" : "subsets");
  const std::string measure = opt.measure.value_or(instance == "abgroups" ? "one" : "cramer");
  if (ordering == "primes" || ordering == "squares-plus-one" || ordering == "all") ordering = "charfun:" + ordering;

  // The header waits until the ordering and measure have resolved.
  auto table = [&](const auto& f, const auto& m, const auto& inst) {
    out << "instance=" << instance << " measure=" << measure << " ordering=" << ordering << '\n';
    out << "n\tintegral\tabs_integral\tbound_2\n";
    for (auto n : opt.n) {
      const auto s = moment_integral(f, n, m, false);
      const auto a = moment_integral(f, n, m, true);
      out << n << '\t' << fixed6(s.value) << '\t' << fixed6(a.value) << '\t'
          << fixed6(theoretical_bound_2(f, n, m, inst)) << '\n';
    }
  };
  if (instance == "subsets") {
    const auto m = product_measure(RSequence::from_key(measure));
    if (ordering == "singletons") table(singleton_ordering(OrderMode::threshold), m, SubsetsInstance{});
    else if (ordering == "interval") table(singleton_ordering(OrderMode::interval), m, SubsetsInstance{});
    else if (ordering.starts_with("charfun:")) table(characteristic_ordering(ordering.substr(8)), m, SubsetsInstance{});
    else throw DomainError("ordering '" + ordering + "' is not available for subsets");
  } else if (instance == "abgroups") {
    if (measure != "one") throw DomainError("abgroups supports only measure one");
    if (ordering != "maximal-subgroups") throw DomainError("ordering '" + ordering + "' is not available for abgroups");
    table(maximal_subgroup_ordering(), unit_measure(), AbGroupsInstance{});
  } else {
    throw DomainError("instance must be subsets or abgroups");
  }
  return ok;
}

// ---------------------------------------------------------------------------
// epi-product

struct EpiProductOptions {
  std::string g, h;
  std::optional<std::string> instance;
  std::optional<std::uint64_t> bound;
};

inline std::string detect_instance(const std::string& literal) {
  const auto c = literal.empty() ? '\0' : literal.front();
  return (c == 'C' || c == 'c') ? "abgroups" : "subsets";
}

template <CategoryInstance I>
int report_epi_product(const I& inst, const typename I::object_type& g, const typename I::object_type& h,
                       std::uint64_t bound, std::ostream& out) {
  const auto ep = epi_product(inst, g, h, bound);
  if (ep.found()) {
    out << inst.to_string(*ep.product) << '\n';
  } else {
    out << "not found up to bound " << bound;
    if (ep.witness)
      out << "; witness K=" << inst.to_string(*ep.witness) << " requires " << ep.witness_required
          << " epimorphism pairs, matched by no candidate";
    out << '\n';
  }
  return ok;
}

inline int epi_product_cmd(const EpiProductOptions& opt, std::ostream& out) {
  const std::string instance = opt.instance.value_or(detect_instance(opt.g));
  if (instance == "abgroups") {
    const auto g = AbGroup::parse(opt.g), h = AbGroup::parse(opt.h);
    return report_epi_product(AbGroupsInstance{}, g, h, opt.bound.value_or(std::max<std::uint64_t>({100, g.order(), h.order()})),
                              out);
  }
  if (instance == "subsets") {
    const auto g = FinSet::parse(opt.g), h = FinSet::parse(opt.h);
    return report_epi_product(SubsetsInstance{}, g, h,
                              opt.bound.value_or(std::max<std::uint64_t>({1, g.max(), h.max()})), out);
  }
  throw DomainError("instance must be subsets or abgroups");
}

// ---------------------------------------------------------------------------
// check-measure

struct CheckMeasureOptions {
  std::string level;  // "{1,2,3}" or a size d meaning {1..d}
  std::string measure = "cramer";
  std::string instance = "subsets";
};

inline int check_measure(const CheckMeasureOptions& opt, std::ostream& out) {
  if (opt.instance != "subsets")
    throw ScopeError("check-measure: levels are only constructed for the subsets instance");
  FinSet d;
  if (!opt.level.empty() && opt.level.find_first_not_of("0123456789") == std::string::npos) {
    std::vector<FinSet::value_type> xs(detail::parse_count(opt.level, 0, "level"));
    for (std::size_t i = 0; i < xs.size(); ++i) xs[i] = static_cast<FinSet::value_type>(i + 1);
    d = FinSet(xs);
  } else {
    d = FinSet::parse(opt.level);
  }
  SubsetsInstance inst;
  const auto level = inst.level(d);
  const auto m = product_measure(RSequence::from_key(opt.measure));
  const auto v = level_measure_all(inst, level, m);
  std::size_t arg = 0;
  double total = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    total += v[i];
    if (v[i] < v[arg]) arg = i;
  }
  out << "level 2^" << d.str() << " (" << v.size() << " elements), measure " << opt.measure << '\n';
  out << "min v = " << format_real(v[arg]) << " at B = " << level.element(arg).str() << '\n';
  out << "sum v = " << format_real(total) << '\n';
  out << (v[arg] >= -1e-12 ? "nonnegative: measure exists at this level" : "negative value: no measure at this level")
      << '\n';
  return ok;
}

// ---------------------------------------------------------------------------
// verify

inline int verify(const std::string& suite, std::ostream& out, std::optional<int> only = {}) {
  acceptance::Suite s;
  if (suite == "fast") s = acceptance::Suite::fast;
  else if (suite == "full") s = acceptance::Suite::full;
  else throw DomainError("suite must be fast or full");
  const auto results = acceptance::run_all(s, out, only);
  std::size_t failed = 0;
  for (const auto& r : results) failed += r.passed() ? 0 : 1;
  out << results.size() - failed << "/" << results.size() << " criteria passed";
  if (failed) {
    out << "; failed:";
    for (const auto& r : results)
      if (!r.passed()) out << " " << r.id << " (" << r.title << ")";
  }
  out << '\n';
  return failed ? acceptance_failure : ok;
}

}  // namespace epicount::cli
