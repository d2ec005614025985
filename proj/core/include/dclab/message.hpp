#pragma once

#include "dclab/bytes.hpp"

#include <optional>
#include <vector>

namespace dclab {

// Instruction tags of the fixed binary message grammar. Deletion tokens are
// computed from transcripts of these messages, so the encoding is a stable
// contract.
enum class Inst : uint8_t { Insert = 1, Lookup = 2, Delete = 3 };

// A protocol message: one instruction byte, a field count byte, then each
// field as either 0xFF (the ⊥ sentinel) or 0x01 followed by a 4-byte
// big-endian length and the field bytes.
struct TlvMessage {
  Inst inst = Inst::Insert;
  std::vector<std::optional<Bytes>> fields;

  Bytes encode() const;
  // Returns nullopt on any grammar violation (bad tag, truncation, trailing
  // bytes, or oversized field).
  static std::optional<TlvMessage> decode(const Bytes& payload,
                                          size_t max_field_len = 4096);

  const std::optional<Bytes>& field(size_t i) const { return fields[i]; }
};

inline TlvMessage make_msg(Inst inst, std::vector<std::optional<Bytes>> fields) {
  return TlvMessage{inst, std::move(fields)};
}

}  // namespace dclab
