#include "dclab/dp.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <tuple>

namespace dclab {

namespace {
constexpr int64_t kAlphaDenomBits = 16;
constexpr int64_t kAlphaDenom = 1 << kAlphaDenomBits;
constexpr double kTailMass = 1e-9;
constexpr int64_t kMaxRadius = 4096;
}  // namespace

Rational dp_alpha(const DpParams& params) {
  params.validate();
  double eps_unit = to_double(params.epsilon) / double(params.value_bound);
  double a = std::exp(-eps_unit);
  // Round up so that α >= e^{-ε/B} holds; the +1 absorbs the floating-point
  // error of exp(), which is far below one 2^-16 step.
  int64_t num = static_cast<int64_t>(std::floor(a * double(kAlphaDenom))) + 1;
  num = std::min<int64_t>(num, kAlphaDenom - 1);
  num = std::max<int64_t>(num, 1);
  return Rational(num, kAlphaDenom);
}

int64_t dp_truncation_radius(const DpParams& params) {
  double a = to_double(dp_alpha(params));
  // Smallest T with α^(T+1)/(1+α) <= kTailMass.
  double t = std::log(kTailMass * (1.0 + a)) / std::log(a) - 1.0;
  int64_t radius = static_cast<int64_t>(std::ceil(std::max(1.0, t)));
  return std::min(radius, kMaxRadius);
}

std::vector<NoiseOutcome> noise_distribution(const DpParams& params, int64_t m,
                                             int64_t true_sum) {
  params.validate();
  if (m < 1) throw ValueOutOfRange("subset size must be >= 1");
  const int64_t hi = params.value_bound * m;
  if (true_sum < 0 || true_sum > hi)
    throw ValueOutOfRange("true sum outside [0, B*m]");

  auto clamp_out = [hi](int64_t v) { return std::clamp<int64_t>(v, 0, hi); };

  if (params.zero_noise) {
    return {NoiseOutcome{clamp_out(true_sum), Rational(1)}};
  }

  const Rational alpha = dp_alpha(params);

  // The distribution is a pure function of (α, B, m, s); enumeration walks
  // hit the same handful of inputs millions of times.
  struct MemoKey {
    int64_t alpha_num, bound, m, sum;
    bool operator<(const MemoKey& o) const {
      return std::tie(alpha_num, bound, m, sum) <
             std::tie(o.alpha_num, o.bound, o.m, o.sum);
    }
  };
  thread_local std::map<MemoKey, std::vector<NoiseOutcome>> memo;
  MemoKey key{static_cast<int64_t>(numerator(alpha)), params.value_bound, m, true_sum};
  if (auto it = memo.find(key); it != memo.end()) return it->second;
  const BigInt a = numerator(alpha);
  const BigInt d = denominator(alpha);
  const int64_t radius = dp_truncation_radius(params);

  // Common denominator D = d^T * (d + a). Numerators:
  //   |g| <  T : (d - a) * a^|g| * d^(T-|g|)
  //   |g| == T : (d - a) * a^T + a^(T+1)   (the folded tail)
  // These sum to exactly D.
  std::vector<BigInt> apow(radius + 2), dpow(radius + 1);
  apow[0] = 1;
  for (int64_t i = 1; i <= radius + 1; ++i) apow[i] = apow[i - 1] * a;
  dpow[0] = 1;
  for (int64_t i = 1; i <= radius; ++i) dpow[i] = dpow[i - 1] * d;
  const BigInt denom = dpow[radius] * (d + a);

  std::vector<BigInt> mass(static_cast<size_t>(hi) + 1);
  for (int64_t g = -radius; g <= radius; ++g) {
    int64_t mag = g < 0 ? -g : g;
    BigInt numer = (d - a) * apow[mag] * dpow[radius - mag];
    if (mag == radius) numer += apow[radius + 1];
    mass[static_cast<size_t>(clamp_out(true_sum + g))] += numer;
  }

  std::vector<NoiseOutcome> out;
  out.reserve(mass.size());
  for (size_t o = 0; o < mass.size(); ++o) {
    if (mass[o] == 0) continue;
    out.push_back(NoiseOutcome{static_cast<int64_t>(o), Rational(mass[o], denom)});
  }
  memo.emplace(key, out);
  return out;
}

Summary summarize(const std::vector<int64_t>& values, const DpParams& params,
                  const DrawScope& scope, DrawSource& draws) {
  params.validate();
  if (values.empty()) throw ValueOutOfRange("summarize requires at least one value");
  int64_t sum = 0;
  for (int64_t v : values) {
    if (v < 0 || v > params.value_bound)
      throw ValueOutOfRange("data value outside [0, B]");
    sum += v;
  }
  const int64_t m = static_cast<int64_t>(values.size());
  auto dist = noise_distribution(params, m, sum);
  if (dist.size() == 1) return Summary{dist[0].outcome, m};
  std::vector<Rational> weights;
  weights.reserve(dist.size());
  for (const auto& no : dist) weights.push_back(no.probability);
  size_t idx = draws.weighted(scope, weights);
  return Summary{dist[idx].outcome, m};
}

}  // namespace dclab
