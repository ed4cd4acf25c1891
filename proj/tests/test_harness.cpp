#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "epicount/harness.hpp"
#include "epicount/presets.hpp"

using namespace epicount;

namespace {

ExperimentConfig small_subsets(const std::string& measure, std::vector<std::uint64_t> grid, std::uint64_t trials) {
  ExperimentConfig c;
  c.name = "small";
  c.instance = "subsets";
  c.measure = measure;
  c.ordering = "singletons";
  c.grid = std::move(grid);
  c.trials = trials;
  c.seed = 1234;
  return c;
}

std::string csv_of(const ConvergenceReport& r) {
  std::ostringstream os;
  r.write_csv(os);
  return os.str();
}

}  // namespace

TEST(GammaFamily, ParseAndTable) {
  const auto g = GammaFamily::parse("gamma:power:2");
  EXPECT_TRUE(g.reciprocal_summable());
  EXPECT_TRUE(g.tends_to_infinity());
  EXPECT_EQ(GammaFamily::parse(g.str()).a, 2.0);
  EXPECT_FALSE(GammaFamily::parse("gamma:power:1").reciprocal_summable());
  EXPECT_TRUE(GammaFamily::parse("gamma:power-log:1:2").reciprocal_summable());
  EXPECT_FALSE(GammaFamily::parse("gamma:power-log:1:1").reciprocal_summable());
  EXPECT_TRUE(GammaFamily::parse("psi:power:0.5").psi_condition());
  EXPECT_FALSE(GammaFamily::parse("psi:power-log:0:1").psi_condition());
  EXPECT_TRUE(GammaFamily::parse("psi:power-log:0:1.5").psi_condition());
  EXPECT_FALSE(GammaFamily::parse("gamma:power:0").tends_to_infinity());
  EXPECT_DOUBLE_EQ(GammaFamily::parse("gamma:power-log:1:2").value(std::exp(2.0)), std::exp(2.0) * 4);
  EXPECT_THROW(GammaFamily::parse("gamma:exp:2"), DomainError);
  EXPECT_THROW(GammaFamily::parse("delta:power:2"), DomainError);
  EXPECT_THROW(GammaFamily::parse("gamma:power:x"), DomainError);
}

TEST(Config, Validation) {
  auto c = small_subsets("constant:0.5", {10, 20}, 5);
  EXPECT_NO_THROW(c.validate());
  auto bad = c;
  bad.grid = {10, 10};
  EXPECT_THROW(bad.validate(), DomainError);
  bad = c;
  bad.trials = 1;
  EXPECT_THROW(bad.validate(), DomainError);
  bad = c;
  bad.k = 0;
  EXPECT_THROW(bad.validate(), DomainError);
  bad = c;
  bad.seed.reset();
  EXPECT_THROW(bad.validate(), DomainError);
  bad = c;
  bad.instance = "graphs";
  EXPECT_THROW(bad.validate(), DomainError);
}

TEST(RunTrials, DeterministicFullSubset) {
  auto c = small_subsets("constant:1", {3, 7, 20}, 2);
  const auto trajs = run_trials(c);
  for (const auto& t : trajs) EXPECT_EQ(t.values, (std::vector<double>{3, 7, 20}));
}

TEST(RunTrials, IdenticalAcrossRunsAndThreadCounts) {
  auto c = small_subsets("cramer", {100, 1000, 5000}, 64);
  const auto a = run_trials(c);
  c.threads = 7;
  const auto b = run_trials(c);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t t = 0; t < a.size(); ++t) {
    EXPECT_EQ(a[t].seed, derive_seed(1234, t));
    EXPECT_EQ(a[t].values, b[t].values);
  }
}

TEST(RunTrials, HorizonCheckedBeforeSampling) {
  auto c = small_subsets("constant:0.5", {10, 50}, 4);
  c.horizon = 20;
  EXPECT_THROW(build_experiment(c), HorizonError);
  c.horizon = 50;
  EXPECT_NO_THROW(run_trials(c));
}

TEST(RunTrials, CounterexampleZeroFraction) {
  const auto cfg = presets::counterexample();
  const auto trajs = run_trials(cfg);
  std::size_t zeros = 0;
  for (const auto& t : trajs) {
    bool all_zero = true;
    for (double v : t.values) all_zero = all_zero && v == 0.0;
    zeros += all_zero;
  }
  const double T = static_cast<double>(trajs.size());
  EXPECT_LE(std::fabs(zeros / T - 0.5), 4 * std::sqrt(0.25 / T));
}

TEST(CentralMoment, Examples) {
  std::vector<Trajectory> trajs(5, Trajectory{0, 0, {2.5, 7.0}});
  EXPECT_EQ(empirical_central_moment(trajs, 0, 2, 2.5), 0.0);
  EXPECT_EQ(empirical_central_moment(trajs, 1, 3, 5.0), 8.0);
  EXPECT_THROW(empirical_central_moment({}, 0, 2, 0.0), DomainError);
}

TEST(CentralMoment, SubsetsVarianceWithinStdErrors) {
  auto c = small_subsets("constant:0.3", {50, 200}, 4000);
  const auto ex = build_experiment(c);
  const auto trajs = run_trials(ex);
  for (std::size_t i = 0; i < c.grid.size(); ++i) {
    const double n = double(c.grid[i]);
    const double var = n * 0.3 * 0.7;
    EXPECT_NEAR(ex.exact_variance[i], var, 1e-12 * var);
    // Standard error of the squared deviation: sqrt((mu4 - var^2) / T).
    const double mu4 = n * 0.21 * (1 + 3 * (n - 2) * 0.21);
    const double se = std::sqrt((mu4 - var * var) / 4000);
    EXPECT_LE(std::fabs(empirical_central_moment(trajs, i, 2, ex.exact_mean[i]) - var), 4 * se);
  }
}

// Full enumeration of all 2^12 outcomes replaces the samples: mean, variance
// and the bound must agree with the closed forms exactly.
TEST(ExhaustiveOracle, HorizonTwelve) {
  auto c = small_subsets("constant:0.5", {12}, 2);
  const auto ex = build_experiment(c);
  double mean = 0, var = 0;
  for (unsigned mask = 0; mask < 4096; ++mask) mean += __builtin_popcount(mask) / 4096.0;
  for (unsigned mask = 0; mask < 4096; ++mask) var += std::pow(__builtin_popcount(mask) - mean, 2) / 4096.0;
  EXPECT_NEAR(mean, 6.0, 1e-10);
  EXPECT_NEAR(var, 3.0, 1e-10);
  EXPECT_NEAR(ex.exact_mean[0], mean, 1e-10);
  EXPECT_NEAR(ex.exact_variance[0], var, 1e-10);
  EXPECT_GE(ex.bound_2(0), var);
}

TEST(Classify, Examples) {
  const auto gamma2 = GammaFamily::parse("gamma:power:2");
  const auto psi = GammaFamily::parse("psi:power:0.5");
  ClassifyOptions opt{0.5, 2.0, true, true};
  EXPECT_EQ(classify_convergence({1, 1, 1, 1}, gamma2, {10, 20, 30, 40}, opt).label, "SLLN-ii");
  EXPECT_EQ(classify_convergence({1, 1, 1, 1}, GammaFamily::parse("gamma:power:1"), {10, 20, 30, 40}, opt).label,
            "WLLN");
  EXPECT_EQ(classify_convergence({1, 1, 1, 1}, psi, {1, 2, 3, 4}, opt).label, "SLLN-iii");
  ClassifyOptions not_monotone = opt;
  not_monotone.monotone = false;
  EXPECT_EQ(classify_convergence({1, 1, 1, 1}, psi, {1, 2, 3, 4}, not_monotone).label, "WLLN");
  const auto zero = classify_convergence({1, 1, 1, 1}, gamma2, {0, 0, 0, 0}, opt);
  EXPECT_FALSE(zero.liminf_positive);
  EXPECT_EQ(zero.label, "none");
  EXPECT_EQ(classify_convergence({1, 1, 10, 50}, gamma2, {10, 20, 30, 40}, opt).label, "none");
  EXPECT_EQ(classify_convergence({1, NAN, 1, 1}, gamma2, {10, 20, 30, 40}, opt).label, "none");
}

TEST(Report, CsvColumnsAndDeterminism) {
  auto c = small_subsets("cramer", {100, 1000}, 40);
  c.k = 4;
  c.gamma = "gamma:power:2";
  const auto a = run_experiment(c);
  c.threads = 3;
  const auto b = run_experiment(c);
  const auto csv = csv_of(a);
  EXPECT_EQ(csv, csv_of(b));
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "n,exact_mean,emp_mean,emp_cm_k,bound,ratio,tail2,tail3,tail5");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
  EXPECT_EQ(a.summary_json().dump(), b.summary_json().dump());
  for (const auto& r : a.rows) {
    for (double t : {r.tail2, r.tail3, r.tail5}) {
      EXPECT_GE(t, 0.0);
      EXPECT_LE(t, 1.0);
    }
  }
}

TEST(Report, JsonEchoesConfigAndSeeds) {
  auto c = small_subsets("constant:0.5", {10, 100}, 8);
  const auto j = run_experiment(c).summary_json();
  EXPECT_EQ(j["config"]["seed"], 1234);
  EXPECT_EQ(j["config"]["grid"].size(), 2u);
  EXPECT_EQ(j["seeds"]["trials"].size(), 8u);
  EXPECT_EQ(j["seeds"]["trials"][3], derive_seed(1234, 3));
  EXPECT_TRUE(j.contains("classification"));
  EXPECT_TRUE(j["fitted_constants"].contains("emp_cm_2_over_bound_2"));
}

// Chebyshev: the frequency of |N - mean| > 5 sigma stays below 1/25 plus
// sampling slack, with sigma^2 the second-moment bound.
TEST(Report, ChebyshevConsistency) {
  auto c = small_subsets("constant:0.2", {50, 500, 2000}, 500);
  const auto rep = run_experiment(c);
  for (const auto& r : rep.rows) EXPECT_LE(r.tail5, 1.0 / 25 + 4 * std::sqrt(0.04 / 500));
  EXPECT_EQ(rep.sigma_source, "sqrt(bound_2)");
}

TEST(Report, CounterexampleHasNoBounds) {
  auto c = presets::counterexample();
  c.trials = 50;
  const auto rep = run_experiment(c);
  EXPECT_TRUE(std::isnan(rep.rows[0].bound));
  EXPECT_EQ(rep.sigma_source, "sqrt(exact variance)");
  EXPECT_NE(rep.classification.label, "SLLN-ii");
}

TEST(Report, OverlappingBoundsBecomeNotes) {
  // k = 3 is odd: the 2k reduction has no odd analogue, so the bound is NaN
  // and the report still completes.
  auto c = small_subsets("constant:0.5", {10, 20}, 10);
  c.k = 3;
  const auto rep = run_experiment(c);
  EXPECT_TRUE(std::isnan(rep.rows[0].bound));
  EXPECT_FALSE(std::isnan(rep.rows[0].bound_2));
}

TEST(Experiments, AbgroupsSamplersAgreeInMean) {
  ExperimentConfig c = presets::maximal_subgroups();
  c.grid = {10, 100};
  c.trials = 3000;
  c.truncation = 8;
  const auto law = run_experiment(c);
  c.corank_sampler = "matrix";
  const auto mat = run_experiment(c);
  for (std::size_t i = 0; i < 2; ++i) {
    const double se = std::sqrt(law.rows[i].exact_variance / 3000);
    EXPECT_LE(std::fabs(law.rows[i].emp_mean - law.rows[i].exact_mean), 4 * se);
    EXPECT_LE(std::fabs(mat.rows[i].emp_mean - mat.rows[i].exact_mean), 4 * se);
  }
}
