#include "dclab/random.hpp"

#include <limits>

namespace dclab {

namespace {

uint64_t mix64(uint64_t x) {
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

}  // namespace

uint64_t DrawSource::uniform(const DrawScope& scope, uint64_t range) {
  if (range == 0) throw ValueOutOfRange("uniform draw with empty range");
  uint32_t seq = seq_[scope.key()]++;
  uint64_t c = do_uniform(scope.key(), seq, range);
  if (trace_) trace_->push_back(DrawEvent{scope, seq, c, range});
  return c;
}

size_t DrawSource::weighted(const DrawScope& scope, const std::vector<Rational>& weights) {
  if (weights.empty()) throw ValueOutOfRange("weighted draw with no outcomes");
  for (const auto& w : weights)
    if (w <= 0) throw ValueOutOfRange("weighted draw requires positive weights");
  uint32_t seq = seq_[scope.key()]++;
  size_t c = do_weighted(scope.key(), seq, weights);
  if (trace_) trace_->push_back(DrawEvent{scope, seq, c, weights.size()});
  return c;
}

uint64_t SeededDraws::prf(uint64_t scope_key, uint32_t seq, uint32_t attempt) const {
  uint64_t h = mix64(seed_ ^ 0x9e3779b97f4a7c15ULL);
  h = mix64(h + scope_key);
  h = mix64(h + ((uint64_t(seq) << 32) | attempt));
  return h;
}

uint64_t SeededDraws::do_uniform(uint64_t scope_key, uint32_t seq, uint64_t range) {
  if (range == 1) return 0;
  // Rejection sampling for exact uniformity over [0, range).
  const uint64_t rem = (std::numeric_limits<uint64_t>::max() % range + 1) % range;
  const uint64_t limit = std::numeric_limits<uint64_t>::max() - rem;
  uint32_t attempt = 0;
  for (;;) {
    uint64_t v = prf(scope_key, seq, attempt++);
    if (v <= limit) return v % range;
  }
}

size_t SeededDraws::do_weighted(uint64_t scope_key, uint32_t seq,
                                const std::vector<Rational>& weights) {
  // Inverse CDF on a 128-bit uniform fraction. The 2^-128 quantization is
  // far below every tolerance used anywhere in the project.
  uint64_t hi = prf(scope_key, seq, 0x40000000u);
  uint64_t lo = prf(scope_key, seq, 0x40000001u);
  BigInt u = (BigInt(hi) << 64) | BigInt(lo);
  Rational total = 0;
  for (const auto& w : weights) total += w;
  Rational target = Rational(u, BigInt(1) << 128) * total;
  Rational cum = 0;
  for (size_t i = 0; i + 1 < weights.size(); ++i) {
    cum += weights[i];
    if (target < cum) return i;
  }
  return weights.size() - 1;
}

void EnumDraws::begin_run() { pos_ = 0; }

uint64_t EnumDraws::take(uint64_t space, const std::vector<Rational>* weights) {
  if (pos_ < path_.size()) {
    const Choice& c = path_[pos_];
    if (c.space != space)
      throw Error("enumeration replay diverged: draw space changed");
    ++pos_;
    return c.index;
  }
  Choice c;
  c.index = 0;
  c.space = space;
  if (weights) {
    WeightSet ws;
    ws.weights = *weights;
    ws.total = 0;
    for (const auto& w : *weights) ws.total += w;
    c.prob = (*weights)[0] / ws.total;
    weight_sets_.push_back(std::move(ws));
  } else {
    c.prob = Rational(1, space);
    weight_sets_.emplace_back();
  }
  path_.push_back(std::move(c));
  ++pos_;
  return 0;
}

uint64_t EnumDraws::do_uniform(uint64_t, uint32_t, uint64_t range) {
  return take(range, nullptr);
}

size_t EnumDraws::do_weighted(uint64_t, uint32_t, const std::vector<Rational>& weights) {
  return static_cast<size_t>(take(weights.size(), &weights));
}

bool EnumDraws::advance_path() {
  while (!path_.empty()) {
    Choice& c = path_.back();
    if (c.index + 1 < c.space) {
      ++c.index;
      const auto& ws = weight_sets_.back();
      if (!ws.weights.empty()) {
        c.prob = ws.weights[c.index] / ws.total;
      } else {
        c.prob = Rational(1, c.space);
      }
      return true;
    }
    path_.pop_back();
    weight_sets_.pop_back();
  }
  return false;
}

Rational EnumDraws::path_probability() const {
  Rational p = 1;
  for (const auto& c : path_) p *= c.prob;
  return p;
}

}  // namespace dclab
