#pragma once

#include "dclab/errors.hpp"
#include "dclab/rational.hpp"

#include <cstdint>
#include <unordered_map>
#include <vector>

namespace dclab {

enum class Party : uint8_t { Collector = 0, Environment = 1, Requester = 2 };

inline const char* party_name(Party p) {
  switch (p) {
    case Party::Collector: return "collector";
    case Party::Environment: return "environment";
    case Party::Requester: return "requester";
  }
  return "?";
}

// Identifies the stream a draw belongs to. Streams are keyed by the session
// that caused the work, not by a global draw counter, so that a paired
// ideal-world run (where the requester's sessions are absent) consumes
// identical randomness for every environment-triggered draw.
struct DrawScope {
  Party party = Party::Collector;   // who consumes the randomness
  uint8_t root_kind = 0;            // 0 = initialization, 1 + initiator role otherwise
  uint32_t root_index = 0;          // initiator-local index of the root session

  static DrawScope init(Party p) { return DrawScope{p, 0, 0}; }
  static DrawScope session(Party p, Party initiator, uint32_t index) {
    return DrawScope{p, static_cast<uint8_t>(1 + static_cast<uint8_t>(initiator)), index};
  }
  uint64_t key() const {
    return (uint64_t(static_cast<uint8_t>(party)) << 56) |
           (uint64_t(root_kind) << 48) | uint64_t(root_index);
  }
};

struct DrawEvent {
  DrawScope scope;
  uint32_t seq = 0;    // ordinal of this draw within its scope
  uint64_t choice = 0;
  uint64_t space = 0;  // number of possible outcomes of this draw
};

using DrawTrace = std::vector<DrawEvent>;

class DrawSource {
 public:
  virtual ~DrawSource() = default;

  // Uniform integer in [0, range). range >= 1.
  uint64_t uniform(const DrawScope& scope, uint64_t range);

  // Index into `weights`, chosen with probability weights[i] / sum(weights).
  // All weights must be positive.
  size_t weighted(const DrawScope& scope, const std::vector<Rational>& weights);

  void set_trace(DrawTrace* trace) { trace_ = trace; }

  // Clears per-stream sequence counters; call at the start of each execution
  // so a reused source numbers draws identically run after run.
  void reset_streams() { seq_.clear(); }

 protected:
  virtual uint64_t do_uniform(uint64_t scope_key, uint32_t seq, uint64_t range) = 0;
  virtual size_t do_weighted(uint64_t scope_key, uint32_t seq,
                             const std::vector<Rational>& weights) = 0;

 private:
  std::unordered_map<uint64_t, uint32_t> seq_;
  DrawTrace* trace_ = nullptr;
};

// PRF-backed source: every draw is a pure function of
// (master seed, scope, sequence number), independent across streams.
class SeededDraws final : public DrawSource {
 public:
  explicit SeededDraws(uint64_t master_seed) : seed_(master_seed) {}

 protected:
  uint64_t do_uniform(uint64_t scope_key, uint32_t seq, uint64_t range) override;
  size_t do_weighted(uint64_t scope_key, uint32_t seq,
                     const std::vector<Rational>& weights) override;

 private:
  uint64_t prf(uint64_t scope_key, uint32_t seq, uint32_t attempt) const;
  uint64_t seed_;
};

// Enumeration source: draws follow an explicit choice path; draws beyond the
// recorded prefix take branch 0 and extend the path. Together with
// advance_path() this walks the whole choice tree depth-first.
class EnumDraws final : public DrawSource {
 public:
  struct Choice {
    uint64_t index = 0;
    uint64_t space = 0;
    Rational prob;  // probability of this branch
  };

  // Resets the per-run position; the path prefix is preserved.
  void begin_run();
  // Moves to the next path in odometer order; false when the tree is done.
  bool advance_path();
  // Product of branch probabilities along the current path.
  Rational path_probability() const;
  size_t path_length() const { return path_.size(); }

 protected:
  uint64_t do_uniform(uint64_t scope_key, uint32_t seq, uint64_t range) override;
  size_t do_weighted(uint64_t scope_key, uint32_t seq,
                     const std::vector<Rational>& weights) override;

 private:
  uint64_t take(uint64_t space, const std::vector<Rational>* weights);
  struct WeightSet {
    std::vector<Rational> weights;  // empty for uniform draws
    Rational total;
  };
  std::vector<Choice> path_;
  std::vector<WeightSet> weight_sets_;  // parallel to path_
  size_t pos_ = 0;
};

}  // namespace dclab
