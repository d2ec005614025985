#pragma once

#include "dclab/bytes.hpp"
#include "dclab/errors.hpp"

#include <map>
#include <optional>
#include <vector>

namespace dclab {

// History-independent dictionary with a unique canonical representation:
// two instances holding the same entry set serialize to identical bytes,
// regardless of the operation sequences that produced them.
//
// Wire format: "HID1", entry count (4-byte big-endian), then entries in
// byte-lexicographic key order, each as len(key) || key || len(value) ||
// value with 4-byte big-endian lengths.
class HiDict {
 public:
  static constexpr size_t kMaxKeyLen = 4096;
  static constexpr size_t kMaxValueLen = 4096;

  // Stores value under key; does nothing if the key is already in use.
  // Returns true iff an entry was actually inserted.
  bool insert(const Bytes& key, const Bytes& value);

  // Returns the stored value, or nullopt (⊥) if the key is absent.
  std::optional<Bytes> lookup(const Bytes& key) const;

  // Removes the entry under key; does nothing if the key is absent.
  // Returns true iff an entry was actually deleted.
  bool erase(const Bytes& key);

  size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  // Keys in canonical (byte-lexicographic) order.
  std::vector<Bytes> keys() const;
  // Values in canonical key order.
  std::vector<Bytes> values() const;

  Bytes serialize_canonical() const;

  bool operator==(const HiDict&) const = default;

 private:
  std::map<Bytes, Bytes> entries_;
};

// Append-only negative control: same lookup/insert/delete semantics as
// HiDict, but serialization retains the full operation log, deliberately
// violating history independence.
class TombstoneDict {
 public:
  bool insert(const Bytes& key, const Bytes& value);
  std::optional<Bytes> lookup(const Bytes& key) const;
  bool erase(const Bytes& key);

  size_t size() const;

  Bytes serialize() const;

 private:
  enum class Tag : uint8_t { Insert = 1, Delete = 2 };
  struct Record {
    Tag tag;
    Bytes key;
    Bytes value;
  };
  std::optional<Bytes> replay_lookup(const Bytes& key) const;
  std::vector<Record> log_;
};

}  // namespace dclab
