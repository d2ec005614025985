#include "dclab/exec.hpp"

#include <algorithm>
#include <deque>
#include <sstream>
#include <unordered_map>

namespace dclab {

Bytes View::serialize() const {
  Bytes out = "VIEW";
  append_frame(out, random_tape_prefix);
  append_u32_be(out, static_cast<uint32_t>(events.size()));
  for (const auto& e : events) {
    append_u32_be(out, e.activation);
    out.push_back(static_cast<char>(e.kind));
    append_u32_be(out, e.session);
    append_frame(out, e.protocol);
    append_frame(out, e.payload);
  }
  return out;
}

namespace {

const ProtocolSpec* find_spec(const std::vector<ProtocolSpec>& specs,
                              const std::string& id, bool* is_deletion) {
  for (const auto& s : specs) {
    if (s.pi == id) {
      if (is_deletion) *is_deletion = false;
      return &s;
    }
    if (s.pi_d == id) {
      if (is_deletion) *is_deletion = true;
      return &s;
    }
  }
  return nullptr;
}

}  // namespace

void ExecutionConfig::validate() const {
  if (!collector) throw Error("execution config lacks a collector");
  if (lambda < 1 || lambda > 62)
    throw ValueOutOfRange("lambda must be in [1, 62]");
  if (mode == ExecMode::Auxiliary && !env_w)
    throw Error("auxiliary mode requires an embedded storage server W");
  if (mode == ExecMode::Plain && env_w)
    throw Error("embedded W is only meaningful in auxiliary mode");

  const auto specs = collector->protocol_specs();

  // Environment script checks: protocols must exist; splices and follow-up
  // sends may only reference earlier steps.
  for (size_t i = 0; i < env_script.size(); ++i) {
    const auto& action = env_script[i];
    if (const auto* st = std::get_if<EnvStart>(&action)) {
      if (!find_spec(specs, st->protocol, nullptr))
        throw ScriptError("environment step " + std::to_string(i) +
                          " targets unknown protocol " + st->protocol);
      for (const auto& f : st->fields)
        for (const auto& p : f.parts)
          if (p.kind == TmplPart::Kind::ResponseOf && p.ref_step >= i)
            throw ScriptError("environment step " + std::to_string(i) +
                              " splices a response not yet captured");
    } else if (const auto* sp = std::get_if<EnvSend>(&action)) {
      if (sp->start_step >= i ||
          !std::holds_alternative<EnvStart>(env_script[sp->start_step]))
        throw ScriptError("environment step " + std::to_string(i) +
                          " sends on a session it has not opened");
      for (const auto& f : sp->fields)
        for (const auto& p : f.parts)
          if (p.kind == TmplPart::Kind::ResponseOf && p.ref_step >= i)
            throw ScriptError("environment step " + std::to_string(i) +
                              " splices a response not yet captured");
    }
  }

  if (!requester) return;
  const auto& prof = *requester;
  uint32_t pi_instances = 0;
  for (size_t i = 0; i < prof.script.size(); ++i) {
    const auto& action = prof.script[i];
    if (const auto* ins = std::get_if<ReqInsert>(&action)) {
      bool is_del = false;
      const auto* spec = find_spec(specs, ins->protocol, &is_del);
      if (!spec || is_del)
        throw ScriptError("requester step " + std::to_string(i) +
                          " must initiate an honest π instance");
      ++pi_instances;
    } else if (const auto* lk = std::get_if<ReqLookup>(&action)) {
      if (prof.oblivious)
        throw ScriptError("oblivious requester may not read responses via lookup");
      if (lk->of_action >= i ||
          !std::holds_alternative<ReqInsert>(prof.script[lk->of_action]))
        throw ScriptError("requester step " + std::to_string(i) +
                          " references a handle before its creation");
      const auto& target = std::get<ReqInsert>(prof.script[lk->of_action]);
      bool is_del = false;
      const auto* spec = find_spec(specs, target.protocol, &is_del);
      if (!spec || spec->family != ProtoFamily::HistIndLike)
        throw ScriptError("lookup is only part of the histind-like protocol family");
      ++pi_instances;
    } else if (const auto* dl = std::get_if<ReqDelete>(&action)) {
      if (dl->of_action >= i ||
          !std::holds_alternative<ReqInsert>(prof.script[dl->of_action]))
        throw ScriptError("requester step " + std::to_string(i) +
                          " references a handle before its creation");
    }
  }
  if (prof.k_bound && pi_instances > *prof.k_bound)
    throw ScriptError("requester initiates more π instances than its k bound");
}

namespace {

struct SessionState {
  SessionId id;
  std::string protocol;
  bool is_deletion = false;
  ProtoFamily family = ProtoFamily::HistIndLike;
  Transcript transcript;
  bool completed = false;
};

class Engine final : public Outcaller {
 public:
  Engine(const ExecutionConfig& cfg, DrawSource& draws, const TraceSink& trace)
      : cfg_(cfg), draws_(draws), trace_(trace) {}

  ExecutionOutcome run() {
    cfg_.validate();
    draws_.reset_streams();
    collector_ = cfg_.collector->clone();
    collector_->init(cfg_.lambda, Party::Collector, draws_);
    if (cfg_.mode == ExecMode::Auxiliary) {
      w_ = cfg_.env_w->clone();
      w_->init(cfg_.lambda, Party::Environment, draws_);
    }
    specs_ = collector_->protocol_specs();
    env_responses_.assign(cfg_.env_script.size(), std::nullopt);

    alive_phase();
    terminate_phase();

    ExecutionOutcome out;
    out.state_x = collector_->serialize();
    out.view_z.events = std::move(z_events_);
    out.state_z = environment_state();
    out.deletion_tokens_issued = std::move(tokens_);
    return out;
  }

  // Collector-initiated session toward the environment (Φ). The environment
  // serves it with its embedded storage server W.
  std::optional<Bytes> outcall(const std::string& protocol, const Bytes& request) override {
    if (cfg_.mode != ExecMode::Auxiliary || !w_)
      throw OutcallUnavailable("collector outcalls need auxiliary mode");
    bool is_del = false;
    const auto* spec = find_spec(w_->protocol_specs(), protocol, &is_del);
    if (!spec) throw UnknownProtocol("environment does not serve protocol " + protocol);

    SessionState sess;
    sess.id = SessionId{next_sid_++, Party::Collector, outcall_count_++};
    sess.protocol = protocol;
    sess.is_deletion = is_del;
    sess.family = spec->family;
    sess.transcript.messages.push_back({Direction::ClientToServer, request});

    uint32_t z_act = ++z_activations_;
    uint32_t z_sess = z_session_count_++;
    z_events_.push_back({z_act, ViewEvent::Kind::OutcallStart, z_sess, protocol, {}});
    z_events_.push_back({z_act, ViewEvent::Kind::Received, z_sess, protocol, request});

    charge();
    StepContext wctx{DrawScope::session(Party::Environment, current_root_initiator_,
                                        current_root_index_),
                     &draws_, nullptr};
    auto reply = w_->step(protocol, request, wctx);
    if (reply) {
      sess.transcript.messages.push_back({Direction::ServerToClient, *reply});
      z_events_.push_back({z_act, ViewEvent::Kind::Sent, z_sess, protocol, *reply});
    }
    sess.completed = true;
    trace_line("phi", "collector -> environment " + protocol +
               " request=" + to_hex(request) +
               (reply ? " reply=" + to_hex(*reply) : ""));
    sessions_.push_back(std::move(sess));
    return reply;
  }

 private:
  struct YInstance {
    uint32_t action_index = 0;
    const ProtocolSpec* spec = nullptr;
    size_t session_index = 0;
    Bytes token;
    Bytes key;    // histind-like: the key used by the insert
    Bytes reply;  // captured response (auth' or server key)
    bool lookup_instance = false;
    bool deleted = false;
  };

  void charge() {
    if (++activations_ > cfg_.activation_budget)
      throw BudgetExceeded("activation budget exceeded");
  }

  void trace_line(const std::string& phase, const std::string& text) {
    if (!trace_) return;
    trace_("[" + phase + "] " + text);
  }

  // Delivers one message to the collector within the session; returns the
  // reply, if any.
  std::optional<Bytes> deliver(SessionState& sess, const Bytes& payload) {
    sess.transcript.messages.push_back({Direction::ClientToServer, payload});
    charge();
    current_root_initiator_ = sess.id.initiator;
    current_root_index_ = sess.id.initiator_index;
    StepContext ctx{DrawScope::session(Party::Collector, sess.id.initiator,
                                       sess.id.initiator_index),
                    &draws_,
                    cfg_.mode == ExecMode::Auxiliary ? this : nullptr};
    auto reply = collector_->step(sess.protocol, payload, ctx);
    if (reply)
      sess.transcript.messages.push_back({Direction::ServerToClient, *reply});
    sess.completed = true;
    return reply;
  }

  Bytes render_field(const FieldTemplate& f, size_t step) {
    Bytes out;
    for (const auto& p : f.parts) {
      if (p.kind == TmplPart::Kind::Literal) {
        out += p.literal;
      } else {
        if (p.ref_step >= step || !env_responses_[p.ref_step])
          throw ScriptError("environment splices a response that was never received");
        out += *env_responses_[p.ref_step];
      }
    }
    return out;
  }

  Bytes render_payload(Inst inst, const std::vector<FieldTemplate>& fields, size_t step) {
    TlvMessage msg;
    msg.inst = inst;
    for (const auto& f : fields) {
      if (f.bot) msg.fields.emplace_back(std::nullopt);
      else msg.fields.emplace_back(render_field(f, step));
    }
    return msg.encode();
  }

  void alive_phase() {
    for (size_t step = 0; step < cfg_.env_script.size(); ++step) {
      charge();  // environment activation
      uint32_t z_act = ++z_activations_;
      const auto& action = cfg_.env_script[step];
      if (const auto* st = std::get_if<EnvStart>(&action)) {
        bool is_del = false;
        const auto* spec = find_spec(specs_, st->protocol, &is_del);
        SessionState sess;
        sess.id = SessionId{next_sid_++, Party::Environment, env_session_count_++};
        sess.protocol = st->protocol;
        sess.is_deletion = is_del;
        sess.family = spec->family;
        uint32_t z_sess = z_session_count_++;
        size_t sess_idx = sessions_.size();
        env_step_session_[step] = sess_idx;
        Bytes payload = render_payload(st->inst, st->fields, step);
        z_events_.push_back({z_act, ViewEvent::Kind::SessionStart, z_sess, st->protocol, {}});
        z_events_.push_back({z_act, ViewEvent::Kind::Sent, z_sess, st->protocol, payload});
        sessions_.push_back(std::move(sess));
        auto reply = deliver(sessions_[sess_idx], payload);
        if (reply) {
          z_events_.push_back({z_act, ViewEvent::Kind::Received, z_sess, st->protocol, *reply});
          env_responses_[step] = *reply;
          z_captured_.emplace_back(static_cast<uint32_t>(step), *reply);
        }
        trace_line("alive", "Z starts " + st->protocol + " sid=" +
                   std::to_string(sessions_[sess_idx].id.sid) +
                   " payload=" + to_hex(payload) +
                   (reply ? " reply=" + to_hex(*reply) : ""));
      } else if (const auto* sp = std::get_if<EnvSend>(&action)) {
        size_t sess_idx = env_step_session_.at(sp->start_step);
        Bytes payload = render_payload(sp->inst, sp->fields, step);
        uint32_t z_sess = z_session_of(sess_idx);
        z_events_.push_back({z_act, ViewEvent::Kind::Sent, z_sess,
                             sessions_[sess_idx].protocol, payload});
        auto reply = deliver(sessions_[sess_idx], payload);
        if (reply) {
          z_events_.push_back({z_act, ViewEvent::Kind::Received, z_sess,
                               sessions_[sess_idx].protocol, *reply});
          env_responses_[step] = *reply;
          z_captured_.emplace_back(static_cast<uint32_t>(step), *reply);
        }
        trace_line("alive", "Z sends on sid=" +
                   std::to_string(sessions_[sess_idx].id.sid) +
                   " payload=" + to_hex(payload));
      } else if (const auto* in = std::get_if<EnvInstruct>(&action)) {
        z_events_.push_back({z_act, ViewEvent::Kind::InstructSent,
                             ViewEvent::kNoSession, "", in->payload});
        trace_line("alive", "Z instructs Y payload=" + to_hex(in->payload));
        activate_requester();
      } else if (const auto* av = std::get_if<EnvActivate>(&action)) {
        trace_line("alive", std::string("Z passes activation to ") + party_name(av->target));
        if (av->target == Party::Requester) activate_requester();
        else charge();  // the target runs and immediately halts
      } else if (std::holds_alternative<EnvEndAlive>(action)) {
        z_events_.push_back({z_act, ViewEvent::Kind::EndAliveMark,
                             ViewEvent::kNoSession, "", {}});
        trace_line("alive", "Z declares end of the alive phase");
        break;
      }
    }
  }

  void activate_requester() {
    charge();  // requester activation (Y₀ just halts)
    ++y_activations_;
    if (!cfg_.requester) {
      trace_line("alive", "Y0 is activated and halts");
      return;
    }
    const auto& script = cfg_.requester->script;
    if (y_pc_ >= script.size()) {
      trace_line("alive", "Y is activated; script exhausted, halts");
      return;
    }
    size_t action_index = y_pc_++;
    const auto& action = script[action_index];
    if (const auto* ins = std::get_if<ReqInsert>(&action)) {
      const auto* spec = find_spec(specs_, ins->protocol, nullptr);
      YInstance inst;
      inst.action_index = static_cast<uint32_t>(action_index);
      inst.spec = spec;
      inst.key = ins->key;
      Bytes payload =
          spec->family == ProtoFamily::HistIndLike
              ? make_msg(Inst::Insert, {ins->key, std::nullopt, ins->value}).encode()
              : make_msg(Inst::Insert, {ins->value}).encode();
      SessionState sess;
      sess.id = SessionId{next_sid_++, Party::Requester, req_session_count_++};
      sess.protocol = spec->pi;
      sess.family = spec->family;
      size_t sess_idx = sessions_.size();
      inst.session_index = sess_idx;
      sessions_.push_back(std::move(sess));
      auto reply = deliver(sessions_[sess_idx], payload);
      if (!reply)
        throw ProtocolViolation("collector failed to answer an honest insert");
      inst.reply = *reply;
      inst.token = compute_deletion_token(spec->family, sessions_[sess_idx].id.sid,
                                          sessions_[sess_idx].transcript);
      trace_line("alive", "Y runs π insert on " + spec->pi + " sid=" +
                 std::to_string(sessions_[sess_idx].id.sid) +
                 " reply=" + to_hex(*reply));
      y_instances_.push_back(std::move(inst));
      action_instance_[action_index] = y_instances_.size() - 1;
    } else if (const auto* lk = std::get_if<ReqLookup>(&action)) {
      const YInstance& target = y_instances_.at(action_instance_.at(lk->of_action));
      YInstance inst;
      inst.action_index = static_cast<uint32_t>(action_index);
      inst.spec = target.spec;
      inst.lookup_instance = true;
      inst.token = kBotSentinel;
      Bytes payload =
          make_msg(Inst::Lookup, {target.key, target.reply, std::nullopt}).encode();
      SessionState sess;
      sess.id = SessionId{next_sid_++, Party::Requester, req_session_count_++};
      sess.protocol = target.spec->pi;
      sess.family = target.spec->family;
      size_t sess_idx = sessions_.size();
      inst.session_index = sess_idx;
      sessions_.push_back(std::move(sess));
      auto reply = deliver(sessions_[sess_idx], payload);
      if (reply) inst.reply = *reply;
      trace_line("alive", "Y runs π lookup on " + target.spec->pi);
      y_instances_.push_back(std::move(inst));
    } else if (const auto* dl = std::get_if<ReqDelete>(&action)) {
      YInstance& target = y_instances_.at(action_instance_.at(dl->of_action));
      issue_deletion(target, "alive");
    }
  }

  void issue_deletion(YInstance& target, const std::string& phase) {
    SessionState sess;
    sess.id = SessionId{next_sid_++, Party::Requester, req_session_count_++};
    sess.protocol = target.spec->pi_d;
    sess.is_deletion = true;
    sess.family = target.spec->family;
    Bytes payload = pi_d_request_from_token(target.spec->family, target.token);
    size_t sess_idx = sessions_.size();
    sessions_.push_back(std::move(sess));
    deliver(sessions_[sess_idx], payload);
    tokens_.push_back(target.token);
    target.deleted = true;
    trace_line(phase, "Y runs π_D on " + target.spec->pi_d +
               " token=" + to_hex(target.token));
  }

  void terminate_phase() {
    // (a) every requester π instance already ran to completion (sessions are
    // synchronous one-round exchanges);
    // (b) issue π_D for every completed π instance lacking one — lookup
    // instances carry the ⊥ token and have nothing to delete;
    // (c) those π_D instances complete synchronously as well.
    for (auto& inst : y_instances_) {
      if (inst.deleted || inst.lookup_instance) continue;
      if (is_bot(inst.token)) continue;
      charge();  // requester activation for the π_D client
      ++y_activations_;
      issue_deletion(inst, "terminate");
    }
  }

  Bytes environment_state() {
    // The environment's persistent memory: its embedded storage server (in
    // auxiliary mode) plus the responses its script captured.
    Bytes out = "ZST1";
    if (w_) out += w_->serialize();
    append_u32_be(out, static_cast<uint32_t>(z_captured_.size()));
    for (const auto& [step, bytes] : z_captured_) {
      append_u32_be(out, step);
      append_frame(out, bytes);
    }
    return out;
  }

  uint32_t z_session_of(size_t sess_idx) {
    // Recover the Z-local ordinal assigned when the session was created.
    uint32_t ordinal = 0;
    for (size_t i = 0; i < sess_idx; ++i)
      if (sessions_[i].id.initiator != Party::Requester) ++ordinal;
    return ordinal;
  }

  ExecutionConfig cfg_;
  DrawSource& draws_;
  TraceSink trace_;

  std::unique_ptr<Collector> collector_;
  std::unique_ptr<Collector> w_;
  std::vector<ProtocolSpec> specs_;

  std::deque<SessionState> sessions_;
  uint64_t next_sid_ = 0;
  uint32_t env_session_count_ = 0;
  uint32_t req_session_count_ = 0;
  uint32_t outcall_count_ = 0;

  uint64_t activations_ = 0;
  uint32_t z_activations_ = 0;
  uint32_t y_activations_ = 0;
  uint32_t z_session_count_ = 0;

  std::vector<ViewEvent> z_events_;
  std::vector<std::optional<Bytes>> env_responses_;
  std::vector<std::pair<uint32_t, Bytes>> z_captured_;
  std::unordered_map<uint32_t, size_t> env_step_session_;

  std::vector<YInstance> y_instances_;
  std::unordered_map<uint32_t, size_t> action_instance_;
  size_t y_pc_ = 0;

  std::vector<Bytes> tokens_;

  Party current_root_initiator_ = Party::Environment;
  uint32_t current_root_index_ = 0;
};

}  // namespace

ExecutionOutcome run_execution_with(const ExecutionConfig& config, DrawSource& draws,
                                    const TraceSink& trace) {
  Engine engine(config, draws, trace);
  return engine.run();
}

ExecutionOutcome run_execution(const ExecutionConfig& config, const TraceSink& trace) {
  SeededDraws draws(config.master_seed);
  return run_execution_with(config, draws, trace);
}

ExecutionOutcome run_ideal(const ExecutionConfig& config, const TraceSink& trace) {
  ExecutionConfig ideal = config;
  ideal.requester.reset();
  return run_execution(ideal, trace);
}

void enumerate_executions_fold(
    const ExecutionConfig& config,
    const std::function<void(const Rational&, const ExecutionOutcome&, const DrawTrace&)>& fn,
    uint64_t limit) {
  config.validate();
  if (config.lambda > 30)
    throw EnumerationTooLarge(uint64_t(1) << config.lambda);
  EnumDraws draws;
  uint64_t count = 0;
  for (;;) {
    draws.begin_run();
    DrawTrace trace;
    draws.set_trace(&trace);
    ExecutionOutcome outcome = run_execution_with(config, draws, nullptr);
    if (++count > limit) throw EnumerationTooLarge(count);
    fn(draws.path_probability(), outcome, trace);
    if (!draws.advance_path()) break;
  }
}

std::vector<EnumeratedOutcome> enumerate_executions(const ExecutionConfig& config,
                                                    uint64_t limit) {
  std::vector<EnumeratedOutcome> out;
  enumerate_executions_fold(
      config,
      [&](const Rational& p, const ExecutionOutcome& o, const DrawTrace& t) {
        out.push_back(EnumeratedOutcome{p, o, t});
      },
      limit);
  return out;
}

}  // namespace dclab
