#include "dclab/collectors.hpp"

#include <algorithm>

namespace dclab {

namespace {

Bytes pair_key(const Bytes& a, const Bytes& b) {
  Bytes out;
  append_frame(out, a);
  append_frame(out, b);
  return out;
}

std::optional<std::pair<Bytes, Bytes>> split_pair(const Bytes& packed) {
  if (packed.size() < 8) return std::nullopt;
  auto read_frame = [&](size_t& pos) -> std::optional<Bytes> {
    if (pos + 4 > packed.size()) return std::nullopt;
    uint32_t len = 0;
    for (int k = 0; k < 4; ++k) len = (len << 8) | static_cast<uint8_t>(packed[pos++]);
    if (pos + len > packed.size()) return std::nullopt;
    Bytes b = packed.substr(pos, len);
    pos += len;
    return b;
  };
  size_t pos = 0;
  auto a = read_frame(pos);
  auto b = read_frame(pos);
  if (!a || !b || pos != packed.size()) return std::nullopt;
  return std::make_pair(*a, *b);
}

// (inst, key, auth, value) messages: fields[0]=key, fields[1]=auth, fields[2]=value.
struct HistIndRequest {
  Inst inst;
  Bytes key;
  std::optional<Bytes> auth;
  std::optional<Bytes> value;
};

std::optional<HistIndRequest> parse_histind(const Bytes& payload, bool deletion) {
  auto msg = TlvMessage::decode(payload);
  if (!msg || msg->fields.size() != 3) return std::nullopt;
  if (!msg->fields[0]) return std::nullopt;  // key is mandatory
  HistIndRequest req{msg->inst, *msg->fields[0], msg->fields[1], msg->fields[2]};
  if (deletion) {
    // π_D carries (delete, key, auth).
    if (req.inst != Inst::Delete || !req.auth) return std::nullopt;
  } else {
    // π serves insert (needs value) and lookup (needs auth).
    if (req.inst == Inst::Insert && !req.value) return std::nullopt;
    if (req.inst == Inst::Lookup && !req.auth) return std::nullopt;
    if (req.inst == Inst::Delete) return std::nullopt;
  }
  return req;
}

// (insert, value) / (delete, key) messages of the key-reply family.
std::optional<std::pair<Inst, Bytes>> parse_keyreply(const Bytes& payload, bool deletion) {
  auto msg = TlvMessage::decode(payload);
  if (!msg || msg->fields.size() != 1 || !msg->fields[0]) return std::nullopt;
  if (deletion && msg->inst != Inst::Delete) return std::nullopt;
  if (!deletion && msg->inst != Inst::Insert) return std::nullopt;
  return std::make_pair(msg->inst, *msg->fields[0]);
}

}  // namespace

Bytes compute_deletion_token(ProtoFamily family, uint64_t, const Transcript& transcript) {
  if (transcript.messages.empty() ||
      transcript.messages.front().direction != Direction::ClientToServer)
    throw IncompleteTranscript("transcript has no client request");
  const Bytes& request = transcript.messages.front().payload;
  auto reply = [&]() -> std::optional<Bytes> {
    for (const auto& m : transcript.messages)
      if (m.direction == Direction::ServerToClient) return m.payload;
    return std::nullopt;
  };
  switch (family) {
    case ProtoFamily::HistIndLike: {
      auto req = parse_histind(request, /*deletion=*/false);
      if (!req) throw IncompleteTranscript("transcript request does not parse");
      if (req->inst == Inst::Lookup) return kBotSentinel;
      auto auth = reply();
      if (!auth) throw IncompleteTranscript("insert instance lacks a reply");
      return pair_key(req->key, *auth);
    }
    case ProtoFamily::KeyReply: {
      auto key = reply();
      if (!key) throw IncompleteTranscript("instance lacks a key reply");
      return *key;
    }
  }
  throw UnknownProtocol("unknown protocol family");
}

Bytes pi_d_request_from_token(ProtoFamily family, const Bytes& token) {
  switch (family) {
    case ProtoFamily::HistIndLike: {
      auto pair = split_pair(token);
      if (!pair) throw IncompleteTranscript("malformed histind deletion token");
      return make_msg(Inst::Delete, {pair->first, pair->second, std::nullopt}).encode();
    }
    case ProtoFamily::KeyReply:
      return make_msg(Inst::Delete, {token}).encode();
  }
  throw UnknownProtocol("unknown protocol family");
}

// ---------------------------------------------------------------- HistInd

std::unique_ptr<Collector> HistIndCollector::clone() const {
  return std::make_unique<HistIndCollector>(*this);
}

std::vector<ProtocolSpec> HistIndCollector::protocol_specs() const {
  return {{"histind", "histind.d", ProtoFamily::HistIndLike}};
}

std::optional<Bytes> HistIndCollector::step(const std::string& protocol,
                                            const Bytes& request, StepContext& ctx) {
  bool deletion = protocol == "histind.d";
  auto req = parse_histind(request, deletion);
  if (!req) return std::nullopt;
  switch (req->inst) {
    case Inst::Insert: {
      Bytes auth = draw_lambda_bits(ctx);
      dict_.insert(pair_key(req->key, auth), *req->value);
      return auth;
    }
    case Inst::Lookup: {
      auto value = dict_.lookup(pair_key(req->key, *req->auth));
      return value ? *value : kBotSentinel;
    }
    case Inst::Delete:
      dict_.erase(pair_key(req->key, *req->auth));
      return std::nullopt;
  }
  return std::nullopt;
}

Bytes HistIndCollector::serialize() const { return dict_.serialize_canonical(); }

// ---------------------------------------------------------------- NoAuth

std::unique_ptr<Collector> NoAuthCollector::clone() const {
  return std::make_unique<NoAuthCollector>(*this);
}

std::vector<ProtocolSpec> NoAuthCollector::protocol_specs() const {
  return {{"histind", "histind.d", ProtoFamily::HistIndLike}};
}

std::optional<Bytes> NoAuthCollector::step(const std::string& protocol,
                                           const Bytes& request, StepContext& ctx) {
  bool deletion = protocol == "histind.d";
  auto req = parse_histind(request, deletion);
  if (!req) return std::nullopt;
  switch (req->inst) {
    case Inst::Insert: {
      // auth is still drawn and returned, but ignored by lookup and delete.
      Bytes auth = draw_lambda_bits(ctx);
      dict_.insert(req->key, *req->value);
      return auth;
    }
    case Inst::Lookup: {
      auto value = dict_.lookup(req->key);
      return value ? *value : kBotSentinel;
    }
    case Inst::Delete:
      dict_.erase(req->key);
      return std::nullopt;
  }
  return std::nullopt;
}

Bytes NoAuthCollector::serialize() const { return dict_.serialize_canonical(); }

// -------------------------------------------------------------- Tombstone

std::unique_ptr<Collector> TombstoneCollector::clone() const {
  return std::make_unique<TombstoneCollector>(*this);
}

std::vector<ProtocolSpec> TombstoneCollector::protocol_specs() const {
  return {{"histind", "histind.d", ProtoFamily::HistIndLike}};
}

std::optional<Bytes> TombstoneCollector::step(const std::string& protocol,
                                              const Bytes& request, StepContext& ctx) {
  bool deletion = protocol == "histind.d";
  auto req = parse_histind(request, deletion);
  if (!req) return std::nullopt;
  switch (req->inst) {
    case Inst::Insert: {
      Bytes auth = draw_lambda_bits(ctx);
      dict_.insert(pair_key(req->key, auth), *req->value);
      return auth;
    }
    case Inst::Lookup: {
      auto value = dict_.lookup(pair_key(req->key, *req->auth));
      return value ? *value : kBotSentinel;
    }
    case Inst::Delete:
      dict_.erase(pair_key(req->key, *req->auth));
      return std::nullopt;
  }
  return std::nullopt;
}

Bytes TombstoneCollector::serialize() const { return dict_.serialize(); }

// -------------------------------------------------------------- HistInd2

std::unique_ptr<Collector> HistInd2Collector::clone() const {
  return std::make_unique<HistInd2Collector>(*this);
}

std::vector<ProtocolSpec> HistInd2Collector::protocol_specs() const {
  return {{"histind2", "histind2.d", ProtoFamily::HistIndLike}};
}

std::optional<Bytes> HistInd2Collector::step(const std::string& protocol,
                                             const Bytes& request, StepContext& ctx) {
  bool deletion = protocol == "histind2.d";
  auto req = parse_histind(request, deletion);
  if (!req) return std::nullopt;
  if (!ctx.outcaller)
    throw OutcallUnavailable("histind2 requires Φ-enabled (auxiliary) execution");
  switch (req->inst) {
    case Inst::Insert: {
      Bytes auth = draw_lambda_bits(ctx);
      Bytes exkey = draw_lambda_bits(ctx);
      auto exauth = ctx.outcaller->outcall(
          "histind",
          make_msg(Inst::Insert, {exkey, std::nullopt, *req->value}).encode());
      if (!exauth) return std::nullopt;  // storage server misbehaved; drop
      dict_.insert(pair_key(req->key, auth), pair_key(exkey, *exauth));
      return auth;
    }
    case Inst::Lookup: {
      auto stored = dict_.lookup(pair_key(req->key, *req->auth));
      if (!stored) return kBotSentinel;
      auto ex = split_pair(*stored);
      if (!ex) return kBotSentinel;
      auto value = ctx.outcaller->outcall(
          "histind",
          make_msg(Inst::Lookup, {ex->first, ex->second, std::nullopt}).encode());
      return value ? *value : kBotSentinel;
    }
    case Inst::Delete: {
      auto stored = dict_.lookup(pair_key(req->key, *req->auth));
      if (!stored) return std::nullopt;
      auto ex = split_pair(*stored);
      if (ex) {
        ctx.outcaller->outcall(
            "histind.d",
            make_msg(Inst::Delete, {ex->first, ex->second, std::nullopt}).encode());
      }
      dict_.erase(pair_key(req->key, *req->auth));
      return std::nullopt;
    }
  }
  return std::nullopt;
}

Bytes HistInd2Collector::serialize() const { return dict_.serialize_canonical(); }

// ------------------------------------------------------------------ DiffP

void DiffPCollector::init(uint32_t lambda, Party self, DrawSource& draws) {
  Collector::init(lambda, self, draws);
  params_.validate();
  // thr uniform over [λ+1, 2λ]
  thr_ = int64_t(lambda) + 1 +
         int64_t(draws.uniform(DrawScope::init(self), lambda));
  count_ = 0;
  summarized_ = false;
  summary_.reset();
}

std::unique_ptr<Collector> DiffPCollector::clone() const {
  return std::make_unique<DiffPCollector>(*this);
}

std::vector<ProtocolSpec> DiffPCollector::protocol_specs() const {
  return {{"diffp", "diffp.d", ProtoFamily::KeyReply}};
}

std::optional<Bytes> DiffPCollector::step(const std::string& protocol,
                                          const Bytes& request, StepContext& ctx) {
  bool deletion = protocol == "diffp.d";
  auto req = parse_keyreply(request, deletion);
  if (!req) return std::nullopt;
  if (req->first == Inst::Insert) {
    // Value grammar: one byte, integer in [0, B].
    if (req->second.size() != 1) return std::nullopt;
    int64_t v = static_cast<uint8_t>(req->second[0]);
    if (v > params_.value_bound) return std::nullopt;

    Bytes key = draw_lambda_bits(ctx);
    bool inserted = dict_.insert(key, req->second);
    if (inserted) {
      ++count_;
      if (summarized_) ++thr_;
    }
    if (count_ == thr_ && !summarized_) {
      // Random subset S with |S| = λ via a partial Fisher-Yates pass over
      // the values in canonical dictionary order.
      std::vector<Bytes> vals = dict_.values();
      size_t take = std::min<size_t>(lambda_, vals.size());
      for (size_t i = 0; i < take; ++i) {
        size_t j = i + static_cast<size_t>(
                           ctx.draws->uniform(ctx.scope, vals.size() - i));
        std::swap(vals[i], vals[j]);
      }
      std::vector<int64_t> subset;
      subset.reserve(take);
      for (size_t i = 0; i < take; ++i)
        subset.push_back(static_cast<uint8_t>(vals[i][0]));
      summary_ = summarize(subset, params_, ctx.scope, *ctx.draws);
      summarized_ = true;
    }
    return key;
  }
  // Delete.
  bool deleted = dict_.erase(req->second);
  if (deleted) {
    --count_;
    if (summarized_) --thr_;
  }
  return std::nullopt;
}

Bytes DiffPCollector::serialize() const {
  Bytes out = dict_.serialize_canonical();
  append_i64_be(out, thr_);
  append_i64_be(out, count_);
  out.push_back(summarized_ ? '\x01' : '\x00');
  if (summary_) {
    out.push_back('\x01');
    append_i64_be(out, summary_->noisy_sum);
    append_i64_be(out, summary_->m);
  } else {
    out += kBotSentinel;
  }
  return out;
}

// --------------------------------------------------------------------- ML

void MlCollector::init(uint32_t lambda, Party self, DrawSource& draws) {
  Collector::init(lambda, self, draws);
  // thr uniform over [λ, 2λ]
  thr_ = int64_t(lambda) +
         int64_t(draws.uniform(DrawScope::init(self), uint64_t(lambda) + 1));
  count_ = 0;
  learnt_ = false;
  model_.reset();
}

std::unique_ptr<Collector> MlCollector::clone() const {
  return std::make_unique<MlCollector>(*this);
}

std::vector<ProtocolSpec> MlCollector::protocol_specs() const {
  return {{"ml", "ml.d", ProtoFamily::KeyReply}};
}

std::optional<Bytes> MlCollector::step(const std::string& protocol,
                                       const Bytes& request, StepContext& ctx) {
  bool deletion = protocol == "ml.d";
  auto req = parse_keyreply(request, deletion);
  if (!req) return std::nullopt;
  if (req->first == Inst::Insert) {
    if (!decode_row(req->second, d_)) return std::nullopt;
    // The key is drawn and replied even when learnt = true and the row is
    // discarded.
    Bytes key = draw_lambda_bits(ctx);
    if (!learnt_) {
      bool inserted = dict_.insert(key, req->second);
      if (inserted) ++count_;
      if (count_ == thr_) {
        model_ = learn(dict_, d_);
        learnt_ = true;
      }
    }
    return key;
  }
  // Delete: only acts if the key is present.
  if (dict_.lookup(req->second)) {
    if (learnt_) model_ = unlearn_delete(dict_, *model_, req->second);
    dict_.erase(req->second);
    --count_;
    if (learnt_) --thr_;
  }
  return std::nullopt;
}

Bytes MlCollector::serialize() const {
  Bytes out = dict_.serialize_canonical();
  append_i64_be(out, thr_);
  append_i64_be(out, count_);
  out.push_back(learnt_ ? '\x01' : '\x00');
  if (model_) {
    out.push_back('\x01');
    out += model_->serialize();
  } else {
    out += kBotSentinel;
  }
  return out;
}

// -------------------------------------------------------------- Composite

CompositeCollector::CompositeCollector(std::unique_ptr<Collector> left,
                                       std::unique_ptr<Collector> right)
    : left_(std::move(left)), right_(std::move(right)) {
  for (const auto& l : left_->protocol_specs())
    for (const auto& r : right_->protocol_specs())
      if (l.pi == r.pi || l.pi_d == r.pi_d || l.pi == r.pi_d || l.pi_d == r.pi)
        throw ProtocolIdClash("composite sides share protocol identifier " + l.pi);
}

void CompositeCollector::init(uint32_t lambda, Party self, DrawSource& draws) {
  Collector::init(lambda, self, draws);
  left_->init(lambda, self, draws);
  right_->init(lambda, self, draws);
}

std::unique_ptr<Collector> CompositeCollector::clone() const {
  return std::make_unique<CompositeCollector>(left_->clone(), right_->clone());
}

std::vector<ProtocolSpec> CompositeCollector::protocol_specs() const {
  auto specs = left_->protocol_specs();
  auto rs = right_->protocol_specs();
  specs.insert(specs.end(), rs.begin(), rs.end());
  return specs;
}

std::optional<Bytes> CompositeCollector::step(const std::string& protocol,
                                              const Bytes& request, StepContext& ctx) {
  if (left_->find_protocol(protocol)) return left_->step(protocol, request, ctx);
  if (right_->find_protocol(protocol)) return right_->step(protocol, request, ctx);
  throw UnknownProtocol("no composite side serves protocol " + protocol);
}

Bytes CompositeCollector::serialize() const {
  return left_->serialize() + right_->serialize();
}

// ---------------------------------------------------------------- Factory

std::unique_ptr<Collector> make_negative_control(ControlKind kind, const DpParams& dp_params) {
  switch (kind) {
    case ControlKind::NoAuth:
      return std::make_unique<NoAuthCollector>();
    case ControlKind::Tombstone:
      return std::make_unique<TombstoneCollector>();
    case ControlKind::ExactSummary: {
      DpParams p = dp_params;
      p.zero_noise = true;  // summarize degenerates to the exact sum
      return std::make_unique<DiffPCollector>(p);
    }
  }
  throw Error("unknown control kind");
}

}  // namespace dclab
