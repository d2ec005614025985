#pragma once

#include "dclab/bytes.hpp"
#include "dclab/errors.hpp"
#include "dclab/message.hpp"
#include "dclab/random.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace dclab {

enum class Direction : uint8_t { ClientToServer = 1, ServerToClient = 2 };

struct TranscriptMessage {
  Direction direction;
  Bytes payload;
};

// Ordered messages of one protocol session; append-only during execution.
struct Transcript {
  std::vector<TranscriptMessage> messages;
};

// Shape of a collector's client-facing protocol pair (π, π_D).
//   HistIndLike: π carries (inst, key, auth, value); insert token (key, auth'),
//                lookup token ⊥; π_D carries (key, auth).
//   KeyReply:    π carries (value) and replies a server-drawn key, which is
//                the token; π_D carries (key).
enum class ProtoFamily : uint8_t { HistIndLike = 1, KeyReply = 2 };

struct ProtocolSpec {
  std::string pi;
  std::string pi_d;
  ProtoFamily family;
};

// Callback surface for collector-initiated sessions toward the environment
// (the paper's Φ). Only available in auxiliary-mode executions.
class Outcaller {
 public:
  virtual ~Outcaller() = default;
  virtual std::optional<Bytes> outcall(const std::string& protocol,
                                       const Bytes& request) = 0;
};

struct StepContext {
  DrawScope scope;  // stream for any randomness this step consumes
  DrawSource* draws = nullptr;
  Outcaller* outcaller = nullptr;  // null unless Φ is enabled
};

// A data collector: deterministic state machine processing one protocol
// message per activation. Scratch data lives only inside a step call;
// serialize() covers exactly the persistent fields, in a fixed order.
class Collector {
 public:
  virtual ~Collector() = default;
  virtual std::unique_ptr<Collector> clone() const = 0;

  // Initialization draws (thresholds etc.). `self` names the party whose
  // randomness streams this instance consumes.
  virtual void init(uint32_t lambda, Party self, DrawSource& draws) {
    lambda_ = lambda;
    self_ = self;
  }

  // Processes one incoming message; returns the reply payload, if any.
  // Payloads violating the message grammar are ignored without state change.
  virtual std::optional<Bytes> step(const std::string& protocol,
                                    const Bytes& request, StepContext& ctx) = 0;

  virtual Bytes serialize() const = 0;
  virtual std::vector<ProtocolSpec> protocol_specs() const = 0;

  uint32_t lambda() const { return lambda_; }
  Party self() const { return self_; }

  std::optional<ProtocolSpec> find_protocol(const std::string& id) const {
    for (const auto& s : protocol_specs())
      if (s.pi == id || s.pi_d == id) return s;
    return std::nullopt;
  }

 protected:
  // λ-bit uniform string, canonically encoded as 4 big-endian bytes.
  Bytes draw_lambda_bits(StepContext& ctx) const {
    uint64_t v = ctx.draws->uniform(ctx.scope, uint64_t(1) << lambda_);
    Bytes out;
    append_u32_be(out, static_cast<uint32_t>(v));
    return out;
  }

  uint32_t lambda_ = 8;
  Party self_ = Party::Collector;
};

// Deletion token of a completed π instance: a deterministic function of the
// session id and transcript. For the protocol families here the transcript
// alone determines it.
Bytes compute_deletion_token(ProtoFamily family, uint64_t sid,
                             const Transcript& transcript);

// Builds the π_D request payload carrying the given token.
Bytes pi_d_request_from_token(ProtoFamily family, const Bytes& token);

}  // namespace dclab
