#include "dclab/unlearn.hpp"

namespace dclab {

namespace {

void append_i32_be(Bytes& out, int32_t v) {
  append_u32_be(out, static_cast<uint32_t>(v));
}

int32_t read_i32_be(const Bytes& b, size_t pos) {
  uint32_t v = 0;
  for (int k = 0; k < 4; ++k) v = (v << 8) | static_cast<uint8_t>(b[pos + k]);
  return static_cast<int32_t>(v);
}

void append_bigint(Bytes& out, const BigInt& v) {
  BigInt mag = v < 0 ? -v : v;
  Bytes digits;
  while (mag > 0) {
    digits.push_back(static_cast<char>(static_cast<uint8_t>(mag % 256)));
    mag /= 256;
  }
  std::reverse(digits.begin(), digits.end());
  out.push_back(v < 0 ? '\x01' : '\x00');
  append_frame(out, digits);
}

void append_rational(Bytes& out, const Rational& r) {
  append_bigint(out, numerator(r));
  append_bigint(out, denominator(r));
}

}  // namespace

Bytes encode_row(const MlRow& row) {
  Bytes out;
  for (int32_t f : row.features) append_i32_be(out, f);
  append_i32_be(out, row.target);
  return out;
}

std::optional<MlRow> decode_row(const Bytes& bytes, size_t d) {
  if (bytes.size() != 4 * (d + 1)) return std::nullopt;
  MlRow row;
  row.features.reserve(d);
  for (size_t i = 0; i < d; ++i) row.features.push_back(read_i32_be(bytes, 4 * i));
  row.target = read_i32_be(bytes, 4 * d);
  return row;
}

std::vector<Rational> solve_normal_equations(const std::vector<BigInt>& sum_xx,
                                             const std::vector<BigInt>& sum_xy,
                                             size_t d) {
  // Minimum-norm solution of A β = b for symmetric positive-semidefinite A:
  // solve A² z = b (always consistent, since b lies in range(A) = range(A²))
  // and return β = A z. The range components of z are unique, and A z kills
  // the rest, so β equals the pseudo-inverse solution for every pivot path.
  std::vector<std::vector<Rational>> m(d, std::vector<Rational>(d + 1));
  for (size_t i = 0; i < d; ++i) {
    for (size_t j = 0; j < d; ++j) {
      BigInt acc = 0;
      for (size_t k = 0; k < d; ++k) acc += sum_xx[i * d + k] * sum_xx[k * d + j];
      m[i][j] = Rational(acc);
    }
    m[i][d] = Rational(sum_xy[i]);
  }

  // Gauss-Jordan elimination with fixed pivot order: for each column, the
  // first row (top-down) with a nonzero entry.
  std::vector<ptrdiff_t> pivot_row_of_col(d, -1);
  size_t rank = 0;
  for (size_t col = 0; col < d && rank < d; ++col) {
    size_t sel = rank;
    while (sel < d && m[sel][col] == 0) ++sel;
    if (sel == d) continue;
    std::swap(m[sel], m[rank]);
    Rational inv = m[rank][col];
    for (size_t j = col; j <= d; ++j) m[rank][j] /= inv;
    for (size_t r = 0; r < d; ++r) {
      if (r == rank || m[r][col] == 0) continue;
      Rational factor = m[r][col];
      for (size_t j = col; j <= d; ++j) m[r][j] -= factor * m[rank][j];
    }
    pivot_row_of_col[col] = static_cast<ptrdiff_t>(rank);
    ++rank;
  }
  for (size_t r = rank; r < d; ++r) {
    if (m[r][d] != 0)
      throw Error("normal equations unexpectedly inconsistent");
  }

  std::vector<Rational> z(d, Rational(0));
  for (size_t col = 0; col < d; ++col) {
    if (pivot_row_of_col[col] >= 0)
      z[col] = m[static_cast<size_t>(pivot_row_of_col[col])][d];
  }

  std::vector<Rational> beta(d, Rational(0));
  for (size_t i = 0; i < d; ++i)
    for (size_t j = 0; j < d; ++j) beta[i] += Rational(sum_xx[i * d + j]) * z[j];
  return beta;
}

Model learn(const HiDict& data, size_t d) {
  Model model;
  model.d = static_cast<int64_t>(d);
  model.sum_xx.assign(d * d, BigInt(0));
  model.sum_xy.assign(d, BigInt(0));
  for (const auto& value : data.values()) {
    auto row = decode_row(value, d);
    if (!row) throw DimensionMismatch("stored row does not decode at dimension d");
    ++model.n;
    for (size_t i = 0; i < d; ++i) {
      for (size_t j = 0; j < d; ++j)
        model.sum_xx[i * d + j] += BigInt(row->features[i]) * row->features[j];
      model.sum_xy[i] += BigInt(row->features[i]) * row->target;
    }
  }
  model.coefficients = solve_normal_equations(model.sum_xx, model.sum_xy, d);
  return model;
}

Model unlearn_delete(const HiDict& data, const Model& model, const Bytes& key) {
  auto value = data.lookup(key);
  if (!value) throw KeyAbsent("delete of a key not present in the dataset");
  size_t d = static_cast<size_t>(model.d);
  auto row = decode_row(*value, d);
  if (!row) throw DimensionMismatch("stored row does not decode at dimension d");
  Model out = model;
  --out.n;
  for (size_t i = 0; i < d; ++i) {
    for (size_t j = 0; j < d; ++j)
      out.sum_xx[i * d + j] -= BigInt(row->features[i]) * row->features[j];
    out.sum_xy[i] -= BigInt(row->features[i]) * row->target;
  }
  out.coefficients = solve_normal_equations(out.sum_xx, out.sum_xy, d);
  return out;
}

Bytes Model::serialize() const {
  Bytes out = "MDL1";
  append_u32_be(out, static_cast<uint32_t>(d));
  append_u64_be(out, static_cast<uint64_t>(n));
  for (const auto& v : sum_xx) append_bigint(out, v);
  for (const auto& v : sum_xy) append_bigint(out, v);
  for (const auto& c : coefficients) append_rational(out, c);
  return out;
}

}  // namespace dclab
