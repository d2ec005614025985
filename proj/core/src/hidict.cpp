#include "dclab/hidict.hpp"

namespace dclab {

bool HiDict::insert(const Bytes& key, const Bytes& value) {
  if (key.size() > kMaxKeyLen || value.size() > kMaxValueLen)
    throw SizeExceeded("dictionary key or value exceeds size bound");
  return entries_.emplace(key, value).second;
}

std::optional<Bytes> HiDict::lookup(const Bytes& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

bool HiDict::erase(const Bytes& key) { return entries_.erase(key) > 0; }

std::vector<Bytes> HiDict::keys() const {
  std::vector<Bytes> out;
  out.reserve(entries_.size());
  for (const auto& [k, v] : entries_) out.push_back(k);
  return out;
}

std::vector<Bytes> HiDict::values() const {
  std::vector<Bytes> out;
  out.reserve(entries_.size());
  for (const auto& [k, v] : entries_) out.push_back(v);
  return out;
}

Bytes HiDict::serialize_canonical() const {
  Bytes out = "HID1";
  append_u32_be(out, static_cast<uint32_t>(entries_.size()));
  for (const auto& [k, v] : entries_) {
    append_frame(out, k);
    append_frame(out, v);
  }
  return out;
}

bool TombstoneDict::insert(const Bytes& key, const Bytes& value) {
  if (replay_lookup(key)) return false;
  log_.push_back(Record{Tag::Insert, key, value});
  return true;
}

std::optional<Bytes> TombstoneDict::replay_lookup(const Bytes& key) const {
  std::optional<Bytes> found;
  for (const auto& r : log_) {
    if (r.key != key) continue;
    if (r.tag == Tag::Insert && !found) found = r.value;
    else if (r.tag == Tag::Delete) found.reset();
  }
  return found;
}

std::optional<Bytes> TombstoneDict::lookup(const Bytes& key) const {
  return replay_lookup(key);
}

bool TombstoneDict::erase(const Bytes& key) {
  if (!replay_lookup(key)) return false;
  log_.push_back(Record{Tag::Delete, key, {}});
  return true;
}

size_t TombstoneDict::size() const {
  size_t n = 0;
  std::map<Bytes, int> live;
  for (const auto& r : log_) {
    if (r.tag == Tag::Insert) live.emplace(r.key, 1);
    else live.erase(r.key);
  }
  n = live.size();
  return n;
}

Bytes TombstoneDict::serialize() const {
  Bytes out = "TSD1";
  append_u32_be(out, static_cast<uint32_t>(log_.size()));
  for (const auto& r : log_) {
    out.push_back(static_cast<char>(r.tag));
    append_frame(out, r.key);
    append_frame(out, r.value);
  }
  return out;
}

}  // namespace dclab
