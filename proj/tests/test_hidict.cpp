#include "dclab/hidict.hpp"

#include <gtest/gtest.h>

#include <map>
#include <random>

namespace dclab {
namespace {

Bytes b(const char* s) { return Bytes(s); }

TEST(HiDict, InsertThenLookup) {
  HiDict d;
  EXPECT_TRUE(d.insert(b("k"), b("v")));
  EXPECT_EQ(d.lookup(b("k")), b("v"));
}

TEST(HiDict, InsertOnExistingKeyDoesNothing) {
  HiDict d;
  d.insert(b("k"), b("v1"));
  EXPECT_FALSE(d.insert(b("k"), b("v2")));
  EXPECT_EQ(d.lookup(b("k")), b("v1"));
}

TEST(HiDict, LookupAbsentReturnsBot) {
  HiDict d;
  EXPECT_FALSE(d.lookup(b("k")).has_value());
  d.insert(b("k"), b("v"));
  d.erase(b("k"));
  EXPECT_FALSE(d.lookup(b("k")).has_value());
}

TEST(HiDict, DeleteAbsentKeepsBytes) {
  HiDict d;
  d.insert(b("a"), b("1"));
  Bytes before = d.serialize_canonical();
  EXPECT_FALSE(d.erase(b("zz")));
  EXPECT_EQ(d.serialize_canonical(), before);
}

TEST(HiDict, EmptySerializationIsHeaderAndZeroCount) {
  HiDict d;
  Bytes expected = "HID1";
  expected += Bytes(4, '\0');
  EXPECT_EQ(d.serialize_canonical(), expected);

  d.insert(b("k"), b("v"));
  d.erase(b("k"));
  EXPECT_EQ(d.serialize_canonical(), expected);
}

TEST(HiDict, InsertOrderIrrelevant) {
  HiDict d1, d2;
  d1.insert(b("k1"), b("v1"));
  d1.insert(b("k2"), b("v2"));
  d2.insert(b("k2"), b("v2"));
  d2.insert(b("k1"), b("v1"));
  EXPECT_EQ(d1.serialize_canonical(), d2.serialize_canonical());
}

TEST(HiDict, KeysSortedByteLexicographically) {
  HiDict d;
  d.insert(Bytes(1, '\xff'), b("hi"));
  d.insert(Bytes(1, '\x01'), b("lo"));
  auto keys = d.keys();
  ASSERT_EQ(keys.size(), 2u);
  EXPECT_EQ(keys[0], Bytes(1, '\x01'));
  EXPECT_EQ(keys[1], Bytes(1, '\xff'));
}

TEST(HiDict, SizeBoundsEnforced) {
  HiDict d;
  EXPECT_THROW(d.insert(Bytes(HiDict::kMaxKeyLen + 1, 'x'), b("v")), SizeExceeded);
}

// --- randomized machinery -------------------------------------------------

struct Op {
  int kind;  // 0 insert, 1 delete
  Bytes key;
  Bytes value;
};

Bytes random_bytes(std::mt19937_64& rng, size_t max_len) {
  std::uniform_int_distribution<size_t> len(1, max_len);
  std::uniform_int_distribution<int> ch(0, 3);  // tiny alphabet to force reuse
  Bytes out;
  size_t n = len(rng);
  for (size_t i = 0; i < n; ++i) out.push_back(static_cast<char>('a' + ch(rng)));
  return out;
}

// Builds a random operation sequence guaranteed (by construction) to end at
// exactly the given content: inserts of the final entries in random order,
// interleaved with decoy insert/delete pairs and no-op operations.
std::vector<Op> sequence_for_content(const std::map<Bytes, Bytes>& content,
                                     std::mt19937_64& rng) {
  std::vector<Op> ops;
  std::vector<std::pair<Bytes, Bytes>> entries(content.begin(), content.end());
  std::shuffle(entries.begin(), entries.end(), rng);
  std::uniform_int_distribution<int> coin(0, 3);
  for (const auto& [k, v] : entries) {
    // Decoys: transient entry, delete of an absent key, duplicate insert.
    if (coin(rng) == 0) {
      Bytes dk = b("decoy-") + random_bytes(rng, 3);
      if (!content.count(dk)) {
        ops.push_back({0, dk, b("junk")});
        ops.push_back({1, dk, {}});
      }
    }
    if (coin(rng) == 1) ops.push_back({1, b("absent-") + random_bytes(rng, 3), {}});
    ops.push_back({0, k, v});
    if (coin(rng) == 2) ops.push_back({0, k, b("shadowed")});  // no-op insert
  }
  return ops;
}

void apply_ops(HiDict& d, const std::vector<Op>& ops) {
  for (const auto& op : ops) {
    if (op.kind == 0) d.insert(op.key, op.value);
    else d.erase(op.key);
  }
}

TEST(HiDict, UniqueRepresentationProperty) {
  std::mt19937_64 rng(0xd1c7);
  for (int trial = 0; trial < 2000; ++trial) {
    std::map<Bytes, Bytes> content;
    std::uniform_int_distribution<int> n_entries(0, 10);
    int n = n_entries(rng);
    for (int i = 0; i < n; ++i) content[random_bytes(rng, 4)] = random_bytes(rng, 4);

    HiDict d1, d2;
    apply_ops(d1, sequence_for_content(content, rng));
    apply_ops(d2, sequence_for_content(content, rng));
    ASSERT_EQ(d1.serialize_canonical(), d2.serialize_canonical());
  }
}

TEST(HiDict, UnequalContentUnequalBytes) {
  std::mt19937_64 rng(0xbeef);
  for (int trial = 0; trial < 500; ++trial) {
    std::map<Bytes, Bytes> c1, c2;
    std::uniform_int_distribution<int> n_entries(0, 5);
    int n1 = n_entries(rng), n2 = n_entries(rng);
    for (int i = 0; i < n1; ++i) c1[random_bytes(rng, 3)] = random_bytes(rng, 3);
    for (int i = 0; i < n2; ++i) c2[random_bytes(rng, 3)] = random_bytes(rng, 3);
    HiDict d1, d2;
    for (const auto& [k, v] : c1) d1.insert(k, v);
    for (const auto& [k, v] : c2) d2.insert(k, v);
    EXPECT_EQ(c1 == c2, d1.serialize_canonical() == d2.serialize_canonical());
  }
}

TEST(TombstoneDict, ViolatesUniqueRepresentation) {
  // The fuzzer must find two same-content sequences with different
  // serializations within 1,000 trials.
  std::mt19937_64 rng(0x7045);
  bool found = false;
  for (int trial = 0; trial < 1000 && !found; ++trial) {
    std::map<Bytes, Bytes> content;
    content[random_bytes(rng, 3)] = random_bytes(rng, 3);
    TombstoneDict t1, t2;
    for (const auto& op : sequence_for_content(content, rng)) {
      if (op.kind == 0) t1.insert(op.key, op.value);
      else t1.erase(op.key);
    }
    for (const auto& op : sequence_for_content(content, rng)) {
      if (op.kind == 0) t2.insert(op.key, op.value);
      else t2.erase(op.key);
    }
    found = t1.serialize() != t2.serialize();
  }
  EXPECT_TRUE(found);
}

TEST(TombstoneDict, FunctionallyEquivalentToHiDict) {
  std::mt19937_64 rng(0xfeed);
  for (int trial = 0; trial < 200; ++trial) {
    HiDict d;
    TombstoneDict t;
    for (int i = 0; i < 30; ++i) {
      Bytes k = random_bytes(rng, 2);
      std::uniform_int_distribution<int> kind(0, 2);
      switch (kind(rng)) {
        case 0: {
          Bytes v = random_bytes(rng, 3);
          EXPECT_EQ(d.insert(k, v), t.insert(k, v));
          break;
        }
        case 1:
          EXPECT_EQ(d.erase(k), t.erase(k));
          break;
        default:
          EXPECT_EQ(d.lookup(k), t.lookup(k));
      }
    }
    EXPECT_EQ(d.size(), t.size());
  }
}

}  // namespace
}  // namespace dclab
