#pragma once

#include "dclab/bytes.hpp"
#include "dclab/errors.hpp"
#include "dclab/hidict.hpp"
#include "dclab/rational.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace dclab {

// One data row: d integer features and an integer target.
struct MlRow {
  std::vector<int32_t> features;
  int32_t target = 0;
};

Bytes encode_row(const MlRow& row);
std::optional<MlRow> decode_row(const Bytes& bytes, size_t d);

// Linear model maintained through exact sufficient statistics. All
// arithmetic is integer/rational, so models produced by different code paths
// over the same rows are byte-identical.
struct Model {
  int64_t d = 0;
  int64_t n = 0;
  std::vector<BigInt> sum_xx;          // d*d, row-major, Σ x xᵀ
  std::vector<BigInt> sum_xy;          // d, Σ x·y
  std::vector<Rational> coefficients;  // minimum-norm least-squares solution

  Bytes serialize() const;
  bool operator==(const Model&) const = default;
};

// Trains on every row of the dictionary in canonical key order. Rows that do
// not decode at dimension d raise DimensionMismatch.
Model learn(const HiDict& data, size_t d);

// Exact deletion: returns the model learn() would produce on the dataset
// without the given row, by subtracting that row's contributions and
// re-deriving the coefficients. The key must be present.
Model unlearn_delete(const HiDict& data, const Model& model, const Bytes& key);

// Deterministic minimum-norm solve of the normal equations A β = b with
// A = Σ x xᵀ and b = Σ x·y, valid for singular A.
std::vector<Rational> solve_normal_equations(const std::vector<BigInt>& sum_xx,
                                             const std::vector<BigInt>& sum_xy,
                                             size_t d);

}  // namespace dclab
