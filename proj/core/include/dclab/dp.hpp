#pragma once

#include "dclab/bytes.hpp"
#include "dclab/errors.hpp"
#include "dclab/random.hpp"
#include "dclab/rational.hpp"

#include <cstdint>
#include <vector>

namespace dclab {

struct DpParams {
  Rational epsilon;        // ε > 0, taken constant in n
  int64_t value_bound = 1; // B: each data value is an integer in [0, B]
  bool zero_noise = false; // test hook: noise support collapsed to {0}

  void validate() const {
    if (epsilon <= 0) throw ValueOutOfRange("epsilon must be positive");
    if (value_bound < 1) throw ValueOutOfRange("value_bound must be >= 1");
  }
};

struct Summary {
  int64_t noisy_sum = 0;  // in [0, B*m]
  int64_t m = 0;          // subset size the summary was computed over

  bool operator==(const Summary&) const = default;
};

struct NoiseOutcome {
  int64_t outcome;
  Rational probability;
};

// Per-unit noise parameter: a rational α with α >= e^{-ε/B}, so that the
// clamped geometric sum mechanism is ε-differentially private for sum
// queries whose value changes by at most B when one input changes.
Rational dp_alpha(const DpParams& params);

// Radius at which the two-sided geometric tails are folded into the extreme
// support points. Folding is a post-processing map, so privacy is exact; the
// radius is chosen so the folded mass per side is below 1e-9.
int64_t dp_truncation_radius(const DpParams& params);

// Exact distribution of clamp(true_sum + G, 0, B*m) where G is the folded
// two-sided geometric. Masses are exact rationals summing to exactly 1.
std::vector<NoiseOutcome> noise_distribution(const DpParams& params, int64_t m,
                                             int64_t true_sum);

// summary = clamp(sum(values) + G, 0, B*m), sampled from the exact
// distribution above via the given draw source.
Summary summarize(const std::vector<int64_t>& values, const DpParams& params,
                  const DrawScope& scope, DrawSource& draws);

}  // namespace dclab
