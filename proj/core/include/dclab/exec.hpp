#pragma once

#include "dclab/collector.hpp"
#include "dclab/errors.hpp"
#include "dclab/random.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <variant>
#include <vector>

namespace dclab {

// ------------------------------------------------------------------ Scripts

// A literal byte string or a splice of the response captured by an earlier
// environment step.
struct TmplPart {
  enum class Kind : uint8_t { Literal, ResponseOf } kind = Kind::Literal;
  Bytes literal;
  uint32_t ref_step = 0;
};

// One message field: ⊥, or a concatenation of template parts.
struct FieldTemplate {
  bool bot = false;
  std::vector<TmplPart> parts;

  static FieldTemplate bottom() { return FieldTemplate{true, {}}; }
  static FieldTemplate lit(Bytes b) {
    return FieldTemplate{false, {TmplPart{TmplPart::Kind::Literal, std::move(b), 0}}};
  }
  static FieldTemplate ref(uint32_t step) {
    return FieldTemplate{false, {TmplPart{TmplPart::Kind::ResponseOf, {}, step}}};
  }
};

// Environment actions. The environment is adversarial: it may send arbitrary
// payloads on any of the collector's protocols.
struct EnvStart {
  std::string protocol;
  Inst inst = Inst::Insert;
  std::vector<FieldTemplate> fields;
};
struct EnvSend {  // further message on the session opened by step `start_step`
  uint32_t start_step = 0;
  Inst inst = Inst::Insert;
  std::vector<FieldTemplate> fields;
};
struct EnvInstruct {
  Bytes payload;
};
struct EnvActivate {
  Party target = Party::Requester;
};
struct EnvEndAlive {};

using EnvAction = std::variant<EnvStart, EnvSend, EnvInstruct, EnvActivate, EnvEndAlive>;

// Requester actions compile to honest client state machines only: inserts
// with chosen inputs, lookups of its own instances, and deletions by token.
struct ReqInsert {
  std::string protocol;
  Bytes key;    // used by the histind-like family; ignored otherwise
  Bytes value;
};
struct ReqLookup {
  uint32_t of_action = 0;  // index of an earlier ReqInsert
};
struct ReqDelete {
  uint32_t of_action = 0;  // index of an earlier ReqInsert
};

using ReqAction = std::variant<ReqInsert, ReqLookup, ReqDelete>;

struct RequesterProfile {
  std::vector<ReqAction> script;
  bool oblivious = false;
  std::optional<uint32_t> k_bound;  // max number of π instances
};

// -------------------------------------------------------------- Executions

struct SessionId {
  uint64_t sid = 0;          // strictly increasing in creation order
  Party initiator = Party::Environment;
  uint32_t initiator_index = 0;  // per-initiator ordinal
};

struct ViewEvent {
  enum class Kind : uint8_t {
    SessionStart = 1,
    Sent = 2,
    Received = 3,
    InstructSent = 4,
    OutcallStart = 5,   // collector opened a session toward this party
    EndAliveMark = 6,
  };
  uint32_t activation = 0;   // party-local activation ordinal
  Kind kind = Kind::Sent;
  uint32_t session = kNoSession;  // party-local session ordinal
  std::string protocol;
  Bytes payload;

  static constexpr uint32_t kNoSession = 0xFFFFFFFFu;
};

// Normalized event-list view: every message the party sent or received, in
// order, with sessions numbered party-locally so the serialization carries
// no artifacts of other parties' scheduling.
struct View {
  Bytes random_tape_prefix;
  std::vector<ViewEvent> events;

  Bytes serialize() const;
};

struct ExecutionOutcome {
  Bytes state_x;
  View view_z;
  Bytes state_z;
  std::vector<Bytes> deletion_tokens_issued;

  Bytes view_z_bytes() const { return view_z.serialize(); }
};

enum class ExecMode : uint8_t { Plain = 1, Auxiliary = 2 };

struct ExecutionConfig {
  uint32_t lambda = 8;
  std::shared_ptr<const Collector> collector;
  std::vector<EnvAction> env_script;
  std::optional<RequesterProfile> requester;  // nullopt = silent Y₀
  ExecMode mode = ExecMode::Plain;
  // The environment-embedded storage server W answering Φ sessions. Required
  // in auxiliary mode.
  std::shared_ptr<const Collector> env_w;
  uint64_t master_seed = 0;
  uint64_t activation_budget = 100000;

  void validate() const;
};

using TraceSink = std::function<void(const std::string&)>;

// One seeded execution: alive phase, then the three-step terminate phase
// (complete requester π instances, auto-issue π_D for every completed π
// instance lacking one, complete the π_D instances).
ExecutionOutcome run_execution(const ExecutionConfig& config,
                               const TraceSink& trace = nullptr);

// Same with the requester replaced by the silent Y₀.
ExecutionOutcome run_ideal(const ExecutionConfig& config,
                           const TraceSink& trace = nullptr);

// Runs one execution against a caller-supplied draw source (used by the
// enumeration walker and by tests).
ExecutionOutcome run_execution_with(const ExecutionConfig& config,
                                    DrawSource& draws,
                                    const TraceSink& trace = nullptr);

struct EnumeratedOutcome {
  Rational probability;
  ExecutionOutcome outcome;
  DrawTrace draws;
};

inline constexpr uint64_t kDefaultEnumerationLimit = uint64_t(1) << 24;

// Streams every reachable outcome with its exact probability; probabilities
// sum to exactly 1. Throws EnumerationTooLarge past `limit` outcomes.
void enumerate_executions_fold(
    const ExecutionConfig& config,
    const std::function<void(const Rational&, const ExecutionOutcome&, const DrawTrace&)>& fn,
    uint64_t limit = kDefaultEnumerationLimit);

std::vector<EnumeratedOutcome> enumerate_executions(
    const ExecutionConfig& config, uint64_t limit = kDefaultEnumerationLimit);

}  // namespace dclab
