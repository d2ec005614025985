#include "dclab/scenario.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <sstream>

namespace dclab {

using nlohmann::json;

namespace {

void reject_unknown(const json& obj, std::initializer_list<const char*> allowed,
                    const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed)
      if (it.key() == a) ok = true;
    if (!ok)
      throw SchemaError("unknown field \"" + it.key() + "\" in " + where);
  }
}

const json& require(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end())
    throw SchemaError("missing field \"" + std::string(key) + "\" in " + where);
  return *it;
}

Bytes hex_field(const json& v, const std::string& where) {
  if (!v.is_string()) throw SchemaError(where + " must be a hex string");
  auto bytes = from_hex(v.get<std::string>());
  if (!bytes) throw SchemaError(where + " is not valid hex");
  return *bytes;
}

Rational rational_field(const json& v, const std::string& where) {
  std::string s;
  if (v.is_string()) s = v.get<std::string>();
  else if (v.is_number_integer()) s = std::to_string(v.get<int64_t>());
  else throw SchemaError(where + " must be a rational string like \"1/4\"");
  auto r = parse_rational(s);
  if (!r) throw SchemaError(where + " is not a valid rational");
  return *r;
}

std::shared_ptr<const Collector> build_collector(const json& spec, const std::string& where);

DpParams dp_params_from(const json& params, const std::string& where) {
  reject_unknown(params, {"epsilon", "value_bound", "zero_noise", "left", "right",
                          "dimension"},
                 where);
  DpParams p;
  p.epsilon = params.contains("epsilon")
                  ? rational_field(params["epsilon"], where + ".epsilon")
                  : Rational(1, 2);
  if (params.contains("value_bound")) {
    if (!params["value_bound"].is_number_integer())
      throw SchemaError(where + ".value_bound must be an integer");
    p.value_bound = params["value_bound"].get<int64_t>();
  }
  if (params.contains("zero_noise")) {
    if (!params["zero_noise"].is_boolean())
      throw SchemaError(where + ".zero_noise must be a boolean");
    p.zero_noise = params["zero_noise"].get<bool>();
  }
  return p;
}

std::shared_ptr<const Collector> build_collector(const json& spec, const std::string& where) {
  if (!spec.is_object()) throw SchemaError(where + " must be an object");
  reject_unknown(spec, {"kind", "params"}, where);
  std::string kind = require(spec, "kind", where).get<std::string>();
  json params = spec.contains("params") ? spec["params"] : json::object();
  if (!params.is_object()) throw SchemaError(where + ".params must be an object");

  if (kind == "histind") {
    reject_unknown(params, {}, where + ".params");
    return std::make_shared<HistIndCollector>();
  }
  if (kind == "histind2") {
    reject_unknown(params, {}, where + ".params");
    return std::make_shared<HistInd2Collector>();
  }
  if (kind == "histind-noauth") {
    reject_unknown(params, {}, where + ".params");
    return std::make_shared<NoAuthCollector>();
  }
  if (kind == "histind-tombstone") {
    reject_unknown(params, {}, where + ".params");
    return std::make_shared<TombstoneCollector>();
  }
  if (kind == "diffp") {
    return std::make_shared<DiffPCollector>(dp_params_from(params, where + ".params"));
  }
  if (kind == "diffp-exactsummary") {
    DpParams p = dp_params_from(params, where + ".params");
    p.zero_noise = true;
    return std::make_shared<DiffPCollector>(p);
  }
  if (kind == "ml") {
    reject_unknown(params, {"dimension"}, where + ".params");
    size_t d = 1;
    if (params.contains("dimension")) {
      if (!params["dimension"].is_number_integer() || params["dimension"].get<int64_t>() < 1)
        throw SchemaError(where + ".params.dimension must be a positive integer");
      d = params["dimension"].get<size_t>();
    }
    return std::make_shared<MlCollector>(d);
  }
  if (kind == "composite") {
    reject_unknown(params, {"left", "right"}, where + ".params");
    auto left = build_collector(require(params, "left", where + ".params"),
                                where + ".params.left");
    auto right = build_collector(require(params, "right", where + ".params"),
                                 where + ".params.right");
    return std::make_shared<CompositeCollector>(left->clone(), right->clone());
  }
  throw SchemaError(where + ".kind \"" + kind + "\" is not a known collector");
}

FieldTemplate parse_field(const json& f, const std::string& where) {
  if (f.is_string()) {
    if (f.get<std::string>() == "bot") return FieldTemplate::bottom();
    throw SchemaError(where + ": the only string field form is \"bot\"");
  }
  auto parse_part = [&](const json& p) -> TmplPart {
    if (!p.is_object()) throw SchemaError(where + " parts must be objects");
    reject_unknown(p, {"lit", "ref"}, where);
    if (p.contains("lit"))
      return TmplPart{TmplPart::Kind::Literal, hex_field(p["lit"], where + ".lit"), 0};
    if (p.contains("ref")) {
      if (!p["ref"].is_number_integer())
        throw SchemaError(where + ".ref must be a step index");
      return TmplPart{TmplPart::Kind::ResponseOf, {}, p["ref"].get<uint32_t>()};
    }
    throw SchemaError(where + " part needs \"lit\" or \"ref\"");
  };
  FieldTemplate out;
  if (f.is_array()) {
    for (const auto& p : f) out.parts.push_back(parse_part(p));
    return out;
  }
  out.parts.push_back(parse_part(f));
  return out;
}

Inst parse_inst(const json& v, const std::string& where) {
  std::string s = v.is_string() ? v.get<std::string>() : "";
  if (s == "insert") return Inst::Insert;
  if (s == "lookup") return Inst::Lookup;
  if (s == "delete") return Inst::Delete;
  throw SchemaError(where + ".inst must be insert, lookup, or delete");
}

std::vector<EnvAction> parse_env(const json& arr, const std::string& where) {
  if (!arr.is_array()) throw SchemaError(where + " must be an array of steps");
  std::vector<EnvAction> out;
  for (size_t i = 0; i < arr.size(); ++i) {
    const json& step = arr[i];
    std::string at = where + "[" + std::to_string(i) + "]";
    if (!step.is_object()) throw SchemaError(at + " must be an object");
    std::string op = require(step, "op", at).get<std::string>();
    if (op == "start") {
      reject_unknown(step, {"op", "proto", "inst", "fields"}, at);
      EnvStart a;
      a.protocol = require(step, "proto", at).get<std::string>();
      a.inst = parse_inst(require(step, "inst", at), at);
      for (const auto& f : require(step, "fields", at))
        a.fields.push_back(parse_field(f, at + ".fields"));
      out.emplace_back(std::move(a));
    } else if (op == "send") {
      reject_unknown(step, {"op", "session", "inst", "fields"}, at);
      EnvSend a;
      a.start_step = require(step, "session", at).get<uint32_t>();
      a.inst = parse_inst(require(step, "inst", at), at);
      for (const auto& f : require(step, "fields", at))
        a.fields.push_back(parse_field(f, at + ".fields"));
      out.emplace_back(std::move(a));
    } else if (op == "instruct") {
      reject_unknown(step, {"op", "payload"}, at);
      out.emplace_back(EnvInstruct{hex_field(require(step, "payload", at), at + ".payload")});
    } else if (op == "activate") {
      reject_unknown(step, {"op", "target"}, at);
      std::string target = require(step, "target", at).get<std::string>();
      if (target == "requester") out.emplace_back(EnvActivate{Party::Requester});
      else if (target == "collector") out.emplace_back(EnvActivate{Party::Collector});
      else throw SchemaError(at + ".target must be requester or collector");
    } else if (op == "end_alive") {
      reject_unknown(step, {"op"}, at);
      out.emplace_back(EnvEndAlive{});
    } else {
      throw SchemaError(at + ".op \"" + op + "\" is not a known environment action");
    }
  }
  return out;
}

RequesterProfile parse_requester(const json& obj, const std::string& where) {
  reject_unknown(obj, {"script", "oblivious", "k_bound"}, where);
  RequesterProfile prof;
  const json& script = require(obj, "script", where);
  if (!script.is_array()) throw SchemaError(where + ".script must be an array");
  for (size_t i = 0; i < script.size(); ++i) {
    const json& step = script[i];
    std::string at = where + ".script[" + std::to_string(i) + "]";
    std::string op = require(step, "op", at).get<std::string>();
    if (op == "insert") {
      reject_unknown(step, {"op", "proto", "key", "value"}, at);
      ReqInsert a;
      a.protocol = require(step, "proto", at).get<std::string>();
      if (step.contains("key")) a.key = hex_field(step["key"], at + ".key");
      a.value = hex_field(require(step, "value", at), at + ".value");
      prof.script.emplace_back(std::move(a));
    } else if (op == "lookup") {
      reject_unknown(step, {"op", "of"}, at);
      prof.script.emplace_back(ReqLookup{require(step, "of", at).get<uint32_t>()});
    } else if (op == "delete") {
      reject_unknown(step, {"op", "of"}, at);
      prof.script.emplace_back(ReqDelete{require(step, "of", at).get<uint32_t>()});
    } else {
      throw SchemaError(at + ".op \"" + op + "\" is not an honest requester action");
    }
  }
  if (obj.contains("oblivious")) prof.oblivious = obj["oblivious"].get<bool>();
  if (obj.contains("k_bound")) prof.k_bound = obj["k_bound"].get<uint32_t>();
  return prof;
}

}  // namespace

ComplianceJob Scenario::to_job() const {
  ComplianceJob job;
  job.collector = collector;
  job.env_script = env_script;
  job.requester = requester;
  job.lambda = lambda;
  job.conditional = conditional;
  job.env_w = env_w;
  job.bound = bound;
  job.margin = margin;
  return job;
}

ExecutionConfig Scenario::to_execution_config(bool real, uint64_t seed_override) const {
  ExecutionConfig cfg;
  cfg.lambda = lambda;
  cfg.collector = collector;
  cfg.env_script = env_script;
  if (real) cfg.requester = requester;
  cfg.mode = conditional ? ExecMode::Auxiliary : ExecMode::Plain;
  cfg.env_w = conditional ? env_w : nullptr;
  cfg.master_seed = seed_override;
  return cfg;
}

Scenario parse_scenario(const std::string& json_text, const std::string& name) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    // Convert the byte offset into line/column diagnostics.
    size_t line = 1, col = 1;
    for (size_t i = 0; i < e.byte && i < json_text.size(); ++i) {
      if (json_text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw SchemaError("JSON parse error at line " + std::to_string(line) +
                      ", column " + std::to_string(col) + ": " + e.what());
  }
  if (!doc.is_object()) throw SchemaError("scenario must be a JSON object");
  reject_unknown(doc,
                 {"schema", "description", "lambda", "collector", "environment",
                  "requester", "check", "conditional"},
                 "scenario");

  Scenario s;
  s.name = name;
  s.file_bytes = json_text;
  if (require(doc, "schema", "scenario").get<std::string>() != "dclab-scenario/1")
    throw SchemaError("unsupported scenario schema");
  s.lambda = require(doc, "lambda", "scenario").get<uint32_t>();
  s.collector = build_collector(require(doc, "collector", "scenario"), "collector");
  s.env_script = parse_env(require(doc, "environment", "scenario"), "environment");
  s.requester = parse_requester(require(doc, "requester", "scenario"), "requester");

  const json& check = require(doc, "check", "scenario");
  reject_unknown(check, {"mode", "n_samples", "seed", "margin", "bound"}, "check");
  std::string mode = require(check, "mode", "check").get<std::string>();
  if (mode == "sample") {
    s.mode = CheckMode::Sample;
    s.n_samples = require(check, "n_samples", "check").get<uint64_t>();
    if (!check.contains("seed"))
      throw SchemaError("sample mode requires a seed");
    s.seed = check["seed"].get<uint64_t>();
  } else if (mode == "enumerate") {
    s.mode = CheckMode::Enumerate;
    if (check.contains("seed")) s.seed = check["seed"].get<uint64_t>();
    if (check.contains("n_samples"))
      throw SchemaError("enumerate mode does not take n_samples");
  } else {
    throw SchemaError("check.mode must be sample or enumerate");
  }
  if (check.contains("margin")) s.margin = rational_field(check["margin"], "check.margin");
  const json& bound = require(check, "bound", "check");
  reject_unknown(bound, {"name", "value"}, "check.bound");
  s.bound.name = require(bound, "name", "check.bound").get<std::string>();
  s.bound.value = rational_field(require(bound, "value", "check.bound"), "check.bound.value");

  if (doc.contains("conditional")) {
    const json& cond = doc["conditional"];
    reject_unknown(cond, {"w_kind"}, "conditional");
    std::string w = require(cond, "w_kind", "conditional").get<std::string>();
    s.conditional = true;
    if (w == "histind") s.env_w = std::make_shared<HistIndCollector>();
    else if (w == "tombstone") s.env_w = std::make_shared<TombstoneCollector>();
    else throw SchemaError("conditional.w_kind must be histind or tombstone");
  }

  // Surface script structure errors (bad handles, role violations) as
  // schema problems at load time.
  try {
    s.to_execution_config(true, 0).validate();
  } catch (const Error& e) {
    throw SchemaError(std::string("invalid scenario: ") + e.what());
  }
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError("cannot open scenario file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  std::string name = path;
  if (auto slash = name.find_last_of('/'); slash != std::string::npos)
    name = name.substr(slash + 1);
  if (auto dot = name.rfind(".json"); dot != std::string::npos) name = name.substr(0, dot);
  return parse_scenario(buf.str(), name);
}

ComplianceReport run_scenario_check(const Scenario& scenario) {
  ComplianceJob job = scenario.to_job();
  if (scenario.mode == CheckMode::Sample)
    return estimate_compliance(job, scenario.n_samples, scenario.seed);
  ComplianceReport report = exact_compliance(job);
  report.seed = scenario.seed;
  return report;
}

namespace {

json rational_json(const Rational& r) {
  return json{{"rational", to_string(r)}, {"decimal", to_double(r)}};
}

}  // namespace

json report_to_json(const ComplianceReport& report, const Scenario& scenario) {
  json out;
  out["schema"] = "dclab-report/1";
  out["scenario"] = scenario.name;
  out["scenario_hash"] = scenario.scenario_hash();
  out["mode"] = report.mode == ComplianceReport::Mode::Sampling ? "sample" : "enumerate";
  out["tv_estimate"] = rational_json(report.tv_estimate);
  out["ci_halfwidth"] = rational_json(report.ci_halfwidth);
  out["n_samples"] = report.n_samples;
  out["support"] = report.support;
  out["bound"] = json{{"name", report.bound.name},
                      {"value", to_string(report.bound.value)},
                      {"decimal", to_double(report.bound.value)}};
  out["margin"] = rational_json(report.margin);
  out["verdict"] = verdict_name(report.verdict);
  out["seed"] = report.seed;
  out["notes"] = report.notes;
  return out;
}

}  // namespace dclab
