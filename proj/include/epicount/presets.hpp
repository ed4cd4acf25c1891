#pragma once

// The bundled experiments. configs/*.cfg carry the same values; a test keeps
// the two in sync.

#include "harness.hpp"

namespace epicount::presets {

/// Random subsets with r_n = 1/log n, counted by #(G & {1..n}). The sixth
/// central moment with gamma(n) = n^2 gives a bounded fit.
inline ExperimentConfig cramer() {
  ExperimentConfig c;
  c.name = "cramer";
  c.instance = "subsets";
  c.measure = "cramer";
  c.ordering = "singletons";
  c.grid = {100, 1000, 10000, 100000, 1000000};
  c.trials = 200;
  c.seed = 20230611;
  c.k = 6;
  c.gamma = "gamma:power:2";
  c.corollary_k = 2;
  c.corollary_eps = 0.1;
  return c;
}

/// Maximal subgroups of index <= n in a random pro-abelian group with all
/// moments 1, with psi(t) = t^{1/2}.
inline ExperimentConfig maximal_subgroups() {
  ExperimentConfig c;
  c.name = "maximal-subgroups";
  c.instance = "abgroups";
  c.measure = "one";
  c.ordering = "maximal-subgroups";
  c.grid = {10, 100, 1000, 10000, 100000, 1000000};
  c.trials = 200;
  c.seed = 19700101;
  c.k = 2;
  c.gamma = "psi:power:0.5";
  c.truncation = 24;
  c.corollary_k = 2;
  c.corollary_eps = 0.1;
  return c;
}

/// N_n = X H_n with a single fair coin X.
inline ExperimentConfig counterexample() {
  ExperimentConfig c;
  c.name = "counterexample";
  c.instance = "counterexample";
  c.ordering = "harmonic";
  c.grid = {1, 10, 100, 1000, 10000};
  c.trials = 10000;
  c.seed = 42;
  c.k = 2;
  c.gamma = "gamma:power:2";
  return c;
}

}  // namespace epicount::presets
