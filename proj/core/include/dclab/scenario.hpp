#pragma once

#include "dclab/collectors.hpp"
#include "dclab/compliance.hpp"
#include "dclab/exec.hpp"

#include <nlohmann/json_fwd.hpp>

#include <string>

namespace dclab {

// Scenario files that do not validate raise this (CLI exit code 2).
struct SchemaError : Error {
  using Error::Error;
};

enum class CheckMode : uint8_t { Sample, Enumerate };

struct Scenario {
  std::string name;
  Bytes file_bytes;  // raw content, hashed into reports
  uint32_t lambda = 8;
  std::shared_ptr<const Collector> collector;
  std::vector<EnvAction> env_script;
  RequesterProfile requester;
  CheckMode mode = CheckMode::Enumerate;
  uint64_t n_samples = 0;
  uint64_t seed = 0;
  Rational margin = Rational(1, 50);
  BoundSpec bound;
  bool conditional = false;
  std::shared_ptr<const Collector> env_w;

  std::string scenario_hash() const {
    char buf[17];
    snprintf(buf, sizeof buf, "%016llx",
             static_cast<unsigned long long>(fnv1a64(file_bytes)));
    return buf;
  }

  ComplianceJob to_job() const;
  ExecutionConfig to_execution_config(bool real, uint64_t seed_override) const;
};

Scenario parse_scenario(const std::string& json_text, const std::string& name);
Scenario load_scenario(const std::string& path);

// Runs the scenario's configured check (sampling or enumeration).
ComplianceReport run_scenario_check(const Scenario& scenario);

nlohmann::json report_to_json(const ComplianceReport& report, const Scenario& scenario);

}  // namespace dclab
