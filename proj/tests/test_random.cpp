#include "dclab/random.hpp"

#include <gtest/gtest.h>

#include <map>

namespace dclab {
namespace {

TEST(SeededDraws, DeterministicPerScopeAndSeq) {
  SeededDraws a(42), b(42);
  auto scope = DrawScope::session(Party::Collector, Party::Environment, 3);
  for (int i = 0; i < 32; ++i)
    EXPECT_EQ(a.uniform(scope, 256), b.uniform(scope, 256));
}

TEST(SeededDraws, StreamsAreIndependentOfOtherStreams) {
  // Consuming draws from one stream must not shift another stream: this is
  // what lets paired real/ideal runs share environment randomness.
  SeededDraws a(7), b(7);
  auto env_scope = DrawScope::session(Party::Collector, Party::Environment, 0);
  auto req_scope = DrawScope::session(Party::Collector, Party::Requester, 0);
  // Source a interleaves requester draws; source b does not.
  std::vector<uint64_t> via_a, via_b;
  for (int i = 0; i < 16; ++i) {
    (void)a.uniform(req_scope, 1000);
    via_a.push_back(a.uniform(env_scope, 1000));
    via_b.push_back(b.uniform(env_scope, 1000));
  }
  EXPECT_EQ(via_a, via_b);
}

TEST(SeededDraws, UniformCoversRangeRoughly) {
  SeededDraws src(123);
  auto scope = DrawScope::init(Party::Collector);
  std::map<uint64_t, int> counts;
  const int n = 8000;
  for (int i = 0; i < n; ++i) counts[src.uniform(scope, 4)]++;
  ASSERT_EQ(counts.size(), 4u);
  for (const auto& [v, c] : counts) {
    EXPECT_GT(c, n / 4 - n / 10);
    EXPECT_LT(c, n / 4 + n / 10);
  }
}

TEST(SeededDraws, WeightedMatchesWeights) {
  SeededDraws src(9);
  auto scope = DrawScope::init(Party::Collector);
  std::vector<Rational> weights{Rational(1, 10), Rational(9, 10)};
  int heavy = 0;
  const int n = 5000;
  for (int i = 0; i < n; ++i)
    if (src.weighted(scope, weights) == 1) ++heavy;
  EXPECT_GT(heavy, int(n * 0.85));
  EXPECT_LT(heavy, int(n * 0.95));
}

TEST(EnumDraws, WalksWholeTreeWithUnitMass) {
  // Two draws: a coin, then a range depending on the coin. All paths must be
  // visited exactly once and probabilities sum to 1.
  EnumDraws draws;
  auto scope = DrawScope::init(Party::Collector);
  Rational total = 0;
  int paths = 0;
  for (;;) {
    draws.begin_run();
    draws.reset_streams();
    uint64_t coin = draws.uniform(scope, 2);
    uint64_t range = coin == 0 ? 3 : 2;
    (void)draws.uniform(scope, range);
    total += draws.path_probability();
    ++paths;
    if (!draws.advance_path()) break;
  }
  EXPECT_EQ(paths, 5);
  EXPECT_EQ(total, Rational(1));
}

TEST(EnumDraws, WeightedBranchesCarryTheirMass) {
  EnumDraws draws;
  auto scope = DrawScope::init(Party::Collector);
  std::vector<Rational> weights{Rational(1, 4), Rational(3, 4)};
  std::map<size_t, Rational> mass;
  for (;;) {
    draws.begin_run();
    draws.reset_streams();
    size_t pick = draws.weighted(scope, weights);
    mass[pick] += draws.path_probability();
    if (!draws.advance_path()) break;
  }
  EXPECT_EQ(mass[0], Rational(1, 4));
  EXPECT_EQ(mass[1], Rational(3, 4));
}

TEST(DrawSource, TraceRecordsScopeAndChoice) {
  SeededDraws src(5);
  DrawTrace trace;
  src.set_trace(&trace);
  auto scope = DrawScope::session(Party::Environment, Party::Environment, 2);
  uint64_t v = src.uniform(scope, 16);
  ASSERT_EQ(trace.size(), 1u);
  EXPECT_EQ(trace[0].choice, v);
  EXPECT_EQ(trace[0].space, 16u);
  EXPECT_EQ(trace[0].scope.party, Party::Environment);
  EXPECT_EQ(trace[0].seq, 0u);
}

}  // namespace
}  // namespace dclab
