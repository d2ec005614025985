#include "dclab/collectors.hpp"

#include <gtest/gtest.h>

namespace dclab {
namespace {

struct Harness {
  explicit Harness(std::unique_ptr<Collector> c, uint32_t lambda = 2, uint64_t seed = 11)
      : collector(std::move(c)), draws(seed) {
    collector->init(lambda, Party::Collector, draws);
  }

  std::optional<Bytes> send(const std::string& proto, const TlvMessage& msg) {
    StepContext ctx{DrawScope::session(Party::Collector, Party::Environment, n_++),
                    &draws, outcaller};
    return collector->step(proto, msg.encode(), ctx);
  }

  std::unique_ptr<Collector> collector;
  SeededDraws draws;
  Outcaller* outcaller = nullptr;
  uint32_t n_ = 0;
};

TEST(HistIndCollector, InsertLookupDeleteFlow) {
  Harness h(std::make_unique<HistIndCollector>());
  auto auth = h.send("histind", make_msg(Inst::Insert, {Bytes("k"), std::nullopt, Bytes("v")}));
  ASSERT_TRUE(auth.has_value());

  auto hit = h.send("histind", make_msg(Inst::Lookup, {Bytes("k"), *auth, std::nullopt}));
  EXPECT_EQ(hit, Bytes("v"));

  auto miss = h.send("histind", make_msg(Inst::Lookup, {Bytes("k"), Bytes("??"), std::nullopt}));
  EXPECT_EQ(miss, kBotSentinel);

  Bytes empty_state = HiDict{}.serialize_canonical();
  EXPECT_NE(h.collector->serialize(), empty_state);
  EXPECT_FALSE(
      h.send("histind.d", make_msg(Inst::Delete, {Bytes("k"), *auth, std::nullopt})));
  EXPECT_EQ(h.collector->serialize(), empty_state);
}

TEST(HistIndCollector, MalformedPayloadIgnoredWithoutStateChange) {
  Harness h(std::make_unique<HistIndCollector>());
  Bytes before = h.collector->serialize();
  StepContext ctx{DrawScope::init(Party::Collector), &h.draws, nullptr};
  EXPECT_FALSE(h.collector->step("histind", Bytes("garbage"), ctx).has_value());
  // Delete instruction on π (not π_D) violates the grammar and is ignored.
  EXPECT_FALSE(h.send("histind", make_msg(Inst::Delete, {Bytes("k"), Bytes("a"), std::nullopt})));
  EXPECT_EQ(h.collector->serialize(), before);
}

TEST(HistIndCollector, TransientErasureOfRejectedLookups) {
  Harness h(std::make_unique<HistIndCollector>());
  Bytes canary = Bytes("\xde\xad\xbe\xef\x42\x42\x42\x42");
  h.send("histind", make_msg(Inst::Lookup, {Bytes("k"), canary, std::nullopt}));
  EXPECT_EQ(h.collector->serialize().find(canary), Bytes::npos);

  auto auth = h.send("histind", make_msg(Inst::Insert, {Bytes("k"), std::nullopt, canary}));
  EXPECT_NE(h.collector->serialize().find(canary), Bytes::npos);
  h.send("histind.d", make_msg(Inst::Delete, {Bytes("k"), *auth, std::nullopt}));
  EXPECT_EQ(h.collector->serialize().find(canary), Bytes::npos);
}

TEST(NoAuthCollector, LeaksValuesAcrossUsers) {
  Harness h(std::make_unique<NoAuthCollector>());
  h.send("histind", make_msg(Inst::Insert, {Bytes("k"), std::nullopt, Bytes("secret")}));
  // A different party that never saw the auth can still read the value.
  auto v = h.send("histind", make_msg(Inst::Lookup, {Bytes("k"), Bytes("guess"), std::nullopt}));
  EXPECT_EQ(v, Bytes("secret"));
}

TEST(TombstoneCollector, RetainsDeletedRecords) {
  Harness h(std::make_unique<TombstoneCollector>());
  Bytes empty = h.collector->serialize();
  auto auth = h.send("histind", make_msg(Inst::Insert, {Bytes("k"), std::nullopt, Bytes("v")}));
  h.send("histind.d", make_msg(Inst::Delete, {Bytes("k"), *auth, std::nullopt}));
  EXPECT_NE(h.collector->serialize(), empty);
  EXPECT_NE(h.collector->serialize().find(Bytes("v")), Bytes::npos);
}

TEST(DiffPCollector, ThresholdRangeAndSummaryFlow) {
  // λ=2: thr ∈ {3,4}. Drive inserts until the summary is computed and check
  // the counter bookkeeping along the way.
  for (uint64_t seed = 0; seed < 32; ++seed) {
    DpParams params{Rational(1, 2), 1};
    Harness h(std::make_unique<DiffPCollector>(params), 2, seed);
    auto* diffp = dynamic_cast<DiffPCollector*>(h.collector.get());
    ASSERT_GE(diffp->threshold(), 3);
    ASSERT_LE(diffp->threshold(), 4);

    // At λ=2 only four server keys exist, so enough inserts are needed for
    // the count to reach thr = 4 in the unlucky draw sequences.
    for (int i = 0; i < 64 && !diffp->summarized(); ++i) {
      auto key = h.send("diffp", make_msg(Inst::Insert, {Bytes(1, '\x01')}));
      ASSERT_TRUE(key.has_value());
    }
    EXPECT_TRUE(diffp->summarized());
  }
}

TEST(DiffPCollector, NoSummaryBelowThreshold) {
  DpParams params{Rational(1, 2), 1};
  Harness h(std::make_unique<DiffPCollector>(params), 4, 3);
  // λ=4: thr >= 5; two inserts and two deletes never reach it.
  auto k1 = h.send("diffp", make_msg(Inst::Insert, {Bytes(1, '\x01')}));
  auto k2 = h.send("diffp", make_msg(Inst::Insert, {Bytes(1, '\x00')}));
  h.send("diffp.d", make_msg(Inst::Delete, {*k1}));
  h.send("diffp.d", make_msg(Inst::Delete, {*k2}));
  auto* diffp = dynamic_cast<DiffPCollector*>(h.collector.get());
  EXPECT_FALSE(diffp->summarized());
}

TEST(DiffPCollector, ThrMinusCountInvariantAfterSummary) {
  DpParams params{Rational(1, 2), 1, /*zero_noise=*/true};
  Harness h(std::make_unique<DiffPCollector>(params), 8, 9);
  auto* diffp = dynamic_cast<DiffPCollector*>(h.collector.get());
  for (int i = 0; !diffp->summarized(); ++i) {
    ASSERT_LT(i, 64);
    auto k = h.send("diffp", make_msg(Inst::Insert, {Bytes(1, '\x01')}));
    ASSERT_TRUE(k.has_value());
  }
  Bytes state_before = h.collector->serialize();
  int64_t thr_before = diffp->threshold();
  // A matched insert/delete pair must restore thr - count (and thr itself,
  // since count returns to its prior value).
  auto k = h.send("diffp", make_msg(Inst::Insert, {Bytes(1, '\x00')}));
  h.send("diffp.d", make_msg(Inst::Delete, {*k}));
  EXPECT_EQ(diffp->threshold(), thr_before);
  EXPECT_EQ(h.collector->serialize(), state_before);
}

TEST(DiffPCollector, MalformedValuesIgnored) {
  DpParams params{Rational(1, 2), 1};
  Harness h(std::make_unique<DiffPCollector>(params), 2, 4);
  Bytes before = h.collector->serialize();
  EXPECT_FALSE(h.send("diffp", make_msg(Inst::Insert, {Bytes("toolong")})));
  EXPECT_FALSE(h.send("diffp", make_msg(Inst::Insert, {Bytes(1, '\x07')})));  // > B
  EXPECT_EQ(h.collector->serialize(), before);
}

TEST(MlCollector, LearnsAtThresholdAndUnlearnsExactly) {
  for (uint64_t seed = 0; seed < 16; ++seed) {
    Harness h(std::make_unique<MlCollector>(1), 2, seed);
    auto* ml = dynamic_cast<MlCollector*>(h.collector.get());
    ASSERT_GE(ml->threshold(), 2);
    ASSERT_LE(ml->threshold(), 4);

    std::vector<Bytes> keys;
    for (int i = 0; !ml->learnt(); ++i) {
      ASSERT_LT(i, 200);
      auto k = h.send("ml", make_msg(Inst::Insert, {encode_row({{2}, 4})}));
      ASSERT_TRUE(k.has_value());
      keys.push_back(*k);
    }
    Bytes learnt_state = h.collector->serialize();

    // Insert after learnt: key replied, nothing stored.
    auto extra = h.send("ml", make_msg(Inst::Insert, {encode_row({{9}, 1})}));
    ASSERT_TRUE(extra.has_value());
    EXPECT_EQ(h.collector->serialize(), learnt_state);

    // Deleting a key gives the exact retrained model.
    h.send("ml.d", make_msg(Inst::Delete, {keys.back()}));
    Bytes after_delete = h.collector->serialize();
    EXPECT_NE(after_delete, learnt_state);
    EXPECT_EQ(after_delete.find(Bytes("\x00\x00\x00\x09", 4)), Bytes::npos);
  }
}

TEST(MlCollector, DeleteOfUnknownKeyIsNoOp) {
  Harness h(std::make_unique<MlCollector>(1), 2, 5);
  h.send("ml", make_msg(Inst::Insert, {encode_row({{1}, 1})}));
  Bytes before = h.collector->serialize();
  h.send("ml.d", make_msg(Inst::Delete, {Bytes("nope")}));
  EXPECT_EQ(h.collector->serialize(), before);
}

TEST(Composite, RoutesAndConcatenatesState) {
  auto composite = compose(std::make_unique<HistIndCollector>(),
                           std::make_unique<DiffPCollector>(DpParams{Rational(1, 2), 1}));
  SeededDraws draws(8);
  composite->init(2, Party::Collector, draws);

  auto specs = composite->protocol_specs();
  ASSERT_EQ(specs.size(), 2u);

  // serialize = left || right; before any traffic the left side is an empty
  // dictionary blob, so the right side is the remaining suffix.
  Bytes initial = composite->serialize();
  Bytes right_before = initial.substr(HiDict{}.serialize_canonical().size());

  StepContext ctx{DrawScope::session(Party::Collector, Party::Environment, 0), &draws,
                  nullptr};
  auto auth = composite->step(
      "histind", make_msg(Inst::Insert, {Bytes("k"), std::nullopt, Bytes("v")}).encode(), ctx);
  ASSERT_TRUE(auth.has_value());
  // The histind session must leave the diffp sub-state untouched.
  Bytes after = composite->serialize();
  EXPECT_NE(after, initial);
  EXPECT_TRUE(after.ends_with(right_before));

  EXPECT_THROW(composite->step("nope", Bytes(), ctx), UnknownProtocol);
}

TEST(Composite, RejectsClashingProtocolIds) {
  EXPECT_THROW(compose(std::make_unique<HistIndCollector>(),
                       std::make_unique<HistIndCollector>()),
               ProtocolIdClash);
  // The negative controls are drop-in replacements and reuse the honest ids.
  EXPECT_THROW(compose(std::make_unique<HistIndCollector>(),
                       make_negative_control(ControlKind::Tombstone)),
               ProtocolIdClash);
}

// Records Φ sessions and plays a scripted storage server.
struct MockStorage : Outcaller {
  explicit MockStorage(Collector* watched = nullptr) : watched_(watched) {}

  std::optional<Bytes> outcall(const std::string& protocol, const Bytes& request) override {
    calls.emplace_back(protocol, request);
    if (watched_) state_at_call.push_back(watched_->serialize());
    if (protocol == "histind") {
      auto msg = TlvMessage::decode(request);
      if (msg && msg->inst == Inst::Insert) return Bytes("EXAUTH");
      if (msg && msg->inst == Inst::Lookup) return Bytes("WVALUE");
    }
    return std::nullopt;
  }

  std::vector<std::pair<std::string, Bytes>> calls;
  std::vector<Bytes> state_at_call;
  Collector* watched_;
};

TEST(HistInd2Collector, NeverStoresValuesLocally) {
  Harness h(std::make_unique<HistInd2Collector>(), 2, 12);
  MockStorage w;
  h.outcaller = &w;
  Bytes canary = Bytes("\x5e\xc2\xe7\x11\x77\x77");
  auto auth = h.send("histind2",
                     make_msg(Inst::Insert, {Bytes("k"), std::nullopt, canary}));
  ASSERT_TRUE(auth.has_value());
  ASSERT_EQ(w.calls.size(), 1u);
  EXPECT_EQ(w.calls[0].first, "histind");
  EXPECT_NE(w.calls[0].second.find(canary), Bytes::npos);
  EXPECT_EQ(h.collector->serialize().find(canary), Bytes::npos);
}

TEST(HistInd2Collector, FailedLookupRepliesBotWithoutOutcall) {
  Harness h(std::make_unique<HistInd2Collector>(), 2, 13);
  MockStorage w;
  h.outcaller = &w;
  auto v = h.send("histind2",
                  make_msg(Inst::Lookup, {Bytes("k"), Bytes("wrong"), std::nullopt}));
  EXPECT_EQ(v, kBotSentinel);
  EXPECT_TRUE(w.calls.empty());
}

TEST(HistInd2Collector, LookupForwardsToStorage) {
  Harness h(std::make_unique<HistInd2Collector>(), 2, 14);
  MockStorage w;
  h.outcaller = &w;
  auto auth = h.send("histind2",
                     make_msg(Inst::Insert, {Bytes("k"), std::nullopt, Bytes("v")}));
  auto v = h.send("histind2", make_msg(Inst::Lookup, {Bytes("k"), *auth, std::nullopt}));
  EXPECT_EQ(v, Bytes("WVALUE"));
  ASSERT_EQ(w.calls.size(), 2u);
  auto fwd = TlvMessage::decode(w.calls[1].second);
  ASSERT_TRUE(fwd.has_value());
  EXPECT_EQ(fwd->inst, Inst::Lookup);
}

TEST(HistInd2Collector, ForwardedDeletePrecedesLocalErase) {
  Harness h(std::make_unique<HistInd2Collector>(), 2, 15);
  MockStorage w(h.collector.get());
  h.outcaller = &w;
  auto auth = h.send("histind2",
                     make_msg(Inst::Insert, {Bytes("k"), std::nullopt, Bytes("v")}));
  Bytes with_entry = h.collector->serialize();
  h.send("histind2.d", make_msg(Inst::Delete, {Bytes("k"), *auth, std::nullopt}));
  ASSERT_EQ(w.calls.size(), 2u);
  EXPECT_EQ(w.calls[1].first, "histind.d");
  // At the moment the delete was forwarded, the local entry still existed.
  EXPECT_EQ(w.state_at_call[1], with_entry);
  EXPECT_EQ(h.collector->serialize(), HiDict{}.serialize_canonical());
}

TEST(HistInd2Collector, RequiresAuxiliaryMode) {
  Harness h(std::make_unique<HistInd2Collector>(), 2, 16);
  EXPECT_THROW(
      h.send("histind2", make_msg(Inst::Insert, {Bytes("k"), std::nullopt, Bytes("v")})),
      OutcallUnavailable);
}

TEST(DeletionToken, HistIndInsertTokenIsKeyAuthPair) {
  Transcript t;
  t.messages.push_back({Direction::ClientToServer,
                        make_msg(Inst::Insert, {Bytes(1, '\x01'), std::nullopt,
                                                Bytes("payload")}).encode()});
  t.messages.push_back({Direction::ServerToClient, Bytes(1, '\x9a')});
  Bytes token = compute_deletion_token(ProtoFamily::HistIndLike, 0, t);
  Bytes expected;
  append_frame(expected, Bytes(1, '\x01'));
  append_frame(expected, Bytes(1, '\x9a'));
  EXPECT_EQ(token, expected);
}

TEST(DeletionToken, LookupTokenIsBot) {
  Transcript t;
  t.messages.push_back({Direction::ClientToServer,
                        make_msg(Inst::Lookup, {Bytes("k"), Bytes("a"), std::nullopt})
                            .encode()});
  t.messages.push_back({Direction::ServerToClient, kBotSentinel});
  EXPECT_EQ(compute_deletion_token(ProtoFamily::HistIndLike, 3, t), kBotSentinel);
}

TEST(DeletionToken, KeyReplyTokenIsTheRepliedKey) {
  Transcript t;
  t.messages.push_back({Direction::ClientToServer,
                        make_msg(Inst::Insert, {Bytes(1, '\x05')}).encode()});
  t.messages.push_back({Direction::ServerToClient, Bytes(1, '\x2f')});
  EXPECT_EQ(compute_deletion_token(ProtoFamily::KeyReply, 1, t), Bytes(1, '\x2f'));
}

TEST(DeletionToken, IncompleteTranscriptRejected) {
  Transcript t;
  t.messages.push_back({Direction::ClientToServer,
                        make_msg(Inst::Insert, {Bytes("k"), std::nullopt, Bytes("v")})
                            .encode()});
  EXPECT_THROW(compute_deletion_token(ProtoFamily::HistIndLike, 0, t),
               IncompleteTranscript);
  EXPECT_THROW(compute_deletion_token(ProtoFamily::HistIndLike, 0, Transcript{}),
               IncompleteTranscript);
}

}  // namespace
}  // namespace dclab
