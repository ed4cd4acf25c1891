#pragma once

// Everything in one include.

#include "epicount/abgroups.hpp"
#include "epicount/bounds.hpp"
#include "epicount/category.hpp"
#include "epicount/config.hpp"
#include "epicount/errors.hpp"
#include "epicount/harness.hpp"
#include "epicount/numeric.hpp"
#include "epicount/orderings.hpp"
#include "epicount/presets.hpp"
#include "epicount/primes.hpp"
#include "epicount/rng.hpp"
#include "epicount/subsets.hpp"
