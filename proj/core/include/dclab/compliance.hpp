#pragma once

#include "dclab/exec.hpp"
#include "dclab/rational.hpp"

#include <map>
#include <string>
#include <vector>

namespace dclab {

// Finite distribution over canonical byte strings.
using Distribution = std::map<Bytes, Rational>;

// Total variation distance ½ Σ |p - q|. Each input must sum to 1 within
// 1e-9 (NotNormalized otherwise).
Rational tv_distance(const Distribution& p, const Distribution& q);

struct BoundSpec {
  std::string name;   // named theorem bound being checked
  Rational value;
};

enum class Verdict : uint8_t { Pass, Fail, Inconclusive };

inline const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::Pass: return "Pass";
    case Verdict::Fail: return "Fail";
    case Verdict::Inconclusive: return "Inconclusive";
  }
  return "?";
}

struct ComplianceReport {
  enum class Mode : uint8_t { Sampling, Enumeration } mode = Mode::Enumeration;
  Rational tv_estimate;
  Rational ci_halfwidth;  // 0 in enumeration mode
  uint64_t n_samples = 0;
  uint64_t support = 0;   // distinct outcome buckets observed / enumerated
  BoundSpec bound;
  Rational margin;
  Verdict verdict = Verdict::Inconclusive;
  uint64_t seed = 0;
  std::vector<std::string> notes;
};

// A compliance question: collector + adversary script + requester profile.
struct ComplianceJob {
  std::shared_ptr<const Collector> collector;
  std::vector<EnvAction> env_script;
  RequesterProfile requester;
  uint32_t lambda = 8;
  // Conditional mode: auxiliary execution, comparing (state_X, state_Z)
  // instead of (state_X, view_Z); env_w is the storage server embedded in Z.
  bool conditional = false;
  std::shared_ptr<const Collector> env_w;
  BoundSpec bound{"unnamed", Rational(1)};
  Rational margin = Rational(1, 50);  // default 0.02
  uint64_t activation_budget = 100000;
};

// Plug-in TV over n paired real/ideal executions (seeds shared across
// worlds), with a DKW-style half-width sqrt(ln(2/0.01)·|support|/(2n))
// capped at 1. Requires n_samples >= 1000.
ComplianceReport estimate_compliance(const ComplianceJob& job, uint64_t n_samples,
                                     uint64_t seed);

// Exact TV over the enumerated outcome distributions of both worlds.
ComplianceReport exact_compliance(const ComplianceJob& job,
                                  uint64_t limit = kDefaultEnumerationLimit);

// Conditional deletion-compliance: same pipelines over (state_X, state_Z).
// `n_samples == 0` selects enumeration mode.
ComplianceReport conditional_compliance(const ComplianceJob& job, uint64_t n_samples,
                                        uint64_t seed);

// Exact TV conditioned on each value of the collector's first initialization
// draw (the threshold for the diffp/ml collectors). Keys are the draw's
// choice indices; values are conditional TVs with both worlds conditioned on
// the same choice.
std::map<uint64_t, Rational> exact_tv_by_init_draw(
    const ComplianceJob& job, uint64_t limit = kDefaultEnumerationLimit);

struct CompositionReport {
  std::vector<Rational> single_errors;  // exact error of each profile alone
  Rational e1;                          // max of the singles
  Rational ek;                          // error of the merged requester
  Rational bound;                       // k * e1 + margin
  bool pass = false;
};

// Checks the k-fold composition bound: merges k mutually handle-independent
// oblivious 1-representative profiles into one requester and verifies
// e_k <= k * e_1 + margin, all in exact enumeration mode.
CompositionReport composition_check(const ComplianceJob& base,
                                    const std::vector<RequesterProfile>& requesters,
                                    const Rational& margin = Rational(1, 1000000));

// Joint distribution over pairs of byte strings.
using JointDistribution = std::map<std::pair<Bytes, Bytes>, Rational>;

// Verifies TV((X,Y),(X',Y')) <= TV(X,X') + E_{x<-X}[ TV(Y_x, Y'_x) ] for the
// given joints (supports of at most 100 points), in exact arithmetic.
bool sd_chain_rule_check(const JointDistribution& joint_p,
                         const JointDistribution& joint_q);

}  // namespace dclab
