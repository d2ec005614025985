#include "dclab/message.hpp"

namespace dclab {

namespace {
constexpr uint8_t kPresent = 0x01;
constexpr uint8_t kAbsent = 0xFF;
}  // namespace

Bytes TlvMessage::encode() const {
  Bytes out;
  out.push_back(static_cast<char>(inst));
  out.push_back(static_cast<char>(fields.size()));
  for (const auto& f : fields) {
    if (!f) {
      out.push_back(static_cast<char>(kAbsent));
      continue;
    }
    out.push_back(static_cast<char>(kPresent));
    append_frame(out, *f);
  }
  return out;
}

std::optional<TlvMessage> TlvMessage::decode(const Bytes& payload, size_t max_field_len) {
  if (payload.size() < 2) return std::nullopt;
  size_t pos = 0;
  auto u8 = [&]() -> std::optional<uint8_t> {
    if (pos >= payload.size()) return std::nullopt;
    return static_cast<uint8_t>(payload[pos++]);
  };
  auto tag = *u8();
  if (tag < 1 || tag > 3) return std::nullopt;
  TlvMessage msg;
  msg.inst = static_cast<Inst>(tag);
  uint8_t nfields = *u8();
  for (uint8_t i = 0; i < nfields; ++i) {
    auto marker = u8();
    if (!marker) return std::nullopt;
    if (*marker == kAbsent) {
      msg.fields.emplace_back(std::nullopt);
      continue;
    }
    if (*marker != kPresent) return std::nullopt;
    if (pos + 4 > payload.size()) return std::nullopt;
    uint32_t len = 0;
    for (int k = 0; k < 4; ++k) len = (len << 8) | static_cast<uint8_t>(payload[pos++]);
    if (len > max_field_len || pos + len > payload.size()) return std::nullopt;
    msg.fields.emplace_back(payload.substr(pos, len));
    pos += len;
  }
  if (pos != payload.size()) return std::nullopt;
  return msg;
}

}  // namespace dclab
