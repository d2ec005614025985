#include "dclab/compliance.hpp"

#include <cmath>
#include <set>
#include <unordered_map>

namespace dclab {

namespace {

const Rational kNormalizationSlack(1, 1000000000);

void check_normalized(const Distribution& d, const char* which) {
  Rational total = 0;
  for (const auto& [k, v] : d) total += v;
  Rational off = total - 1;
  if (off < 0) off = -off;
  if (off > kNormalizationSlack)
    throw NotNormalized(std::string(which) + " does not sum to 1");
}

Bytes outcome_bucket(const ExecutionOutcome& o, bool conditional) {
  Bytes out;
  append_frame(out, o.state_x);
  if (conditional) append_frame(out, o.state_z);
  else append_frame(out, o.view_z_bytes());
  return out;
}

ExecutionConfig config_for(const ComplianceJob& job, bool real) {
  ExecutionConfig cfg;
  cfg.lambda = job.lambda;
  cfg.collector = job.collector;
  cfg.env_script = job.env_script;
  if (real) cfg.requester = job.requester;
  cfg.mode = job.conditional ? ExecMode::Auxiliary : ExecMode::Plain;
  cfg.env_w = job.conditional ? job.env_w : nullptr;
  cfg.activation_budget = job.activation_budget;
  return cfg;
}

Verdict decide(const Rational& tv, const Rational& ci, const Rational& bound,
               const Rational& margin) {
  if (tv + ci <= bound + margin) return Verdict::Pass;
  // The plug-in estimate is biased upward, so a point estimate above the
  // bound is already conclusive evidence against compliance.
  if (tv > bound + margin) return Verdict::Fail;
  return Verdict::Inconclusive;
}

uint64_t mix_seed(uint64_t seed, uint64_t i) {
  uint64_t x = seed ^ (0x9e3779b97f4a7c15ULL + i * 0xbf58476d1ce4e5b9ULL);
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

}  // namespace

Rational tv_distance(const Distribution& p, const Distribution& q) {
  check_normalized(p, "first distribution");
  check_normalized(q, "second distribution");
  Rational acc = 0;
  auto it_p = p.begin();
  auto it_q = q.begin();
  while (it_p != p.end() || it_q != q.end()) {
    if (it_q == q.end() || (it_p != p.end() && it_p->first < it_q->first)) {
      acc += it_p->second;
      ++it_p;
    } else if (it_p == p.end() || it_q->first < it_p->first) {
      acc += it_q->second;
      ++it_q;
    } else {
      Rational diff = it_p->second - it_q->second;
      acc += diff < 0 ? -diff : diff;
      ++it_p;
      ++it_q;
    }
  }
  return acc / 2;
}

ComplianceReport estimate_compliance(const ComplianceJob& job, uint64_t n_samples,
                                     uint64_t seed) {
  if (n_samples < 1000)
    throw ValueOutOfRange("sampling mode requires n_samples >= 1000");
  ExecutionConfig real_cfg = config_for(job, true);
  ExecutionConfig ideal_cfg = config_for(job, false);

  std::unordered_map<Bytes, std::pair<uint64_t, uint64_t>> buckets;
  for (uint64_t i = 0; i < n_samples; ++i) {
    // Paired seeding: the same per-sample seed drives both worlds, and draw
    // streams are keyed per originating session, so environment randomness
    // is identical across worlds.
    uint64_t s = mix_seed(seed, i);
    real_cfg.master_seed = s;
    ideal_cfg.master_seed = s;
    buckets[outcome_bucket(run_execution(real_cfg), job.conditional)].first++;
    buckets[outcome_bucket(run_execution(ideal_cfg), job.conditional)].second++;
  }

  BigInt l1 = 0;
  for (const auto& [k, counts] : buckets) {
    int64_t diff = int64_t(counts.first) - int64_t(counts.second);
    l1 += diff < 0 ? -diff : diff;
  }
  ComplianceReport report;
  report.mode = ComplianceReport::Mode::Sampling;
  report.tv_estimate = Rational(l1, BigInt(2) * n_samples);
  report.n_samples = n_samples;
  report.support = buckets.size();
  double ci = std::sqrt(std::log(2.0 / 0.01) * double(buckets.size()) /
                        (2.0 * double(n_samples)));
  report.ci_halfwidth = ci >= 1.0 ? Rational(1) : rational_ceil_2p32(ci);
  report.bound = job.bound;
  report.margin = job.margin;
  report.seed = seed;
  report.verdict = decide(report.tv_estimate, report.ci_halfwidth,
                          job.bound.value, job.margin);
  if (job.conditional && report.verdict == Verdict::Fail)
    report.notes.push_back("environment not auxiliary-compliant");
  return report;
}

namespace {

// Enumerates one world into a distribution over outcome buckets.
Distribution enumerate_world(const ExecutionConfig& cfg, bool conditional,
                             uint64_t limit) {
  Distribution dist;
  Rational total = 0;
  enumerate_executions_fold(
      cfg,
      [&](const Rational& p, const ExecutionOutcome& o, const DrawTrace&) {
        dist[outcome_bucket(o, conditional)] += p;
        total += p;
      },
      limit);
  if (total != 1)
    throw Error("enumerated probabilities do not sum to 1");
  return dist;
}

}  // namespace

ComplianceReport exact_compliance(const ComplianceJob& job, uint64_t limit) {
  Distribution real = enumerate_world(config_for(job, true), job.conditional, limit);
  Distribution ideal = enumerate_world(config_for(job, false), job.conditional, limit);

  ComplianceReport report;
  report.mode = ComplianceReport::Mode::Enumeration;
  report.tv_estimate = tv_distance(real, ideal);
  report.ci_halfwidth = 0;
  std::set<Bytes> support;
  for (const auto& [k, v] : real) support.insert(k);
  for (const auto& [k, v] : ideal) support.insert(k);
  report.support = support.size();
  report.bound = job.bound;
  report.margin = job.margin;
  report.verdict = decide(report.tv_estimate, Rational(0), job.bound.value, job.margin);
  if (job.conditional && report.verdict == Verdict::Fail)
    report.notes.push_back("environment not auxiliary-compliant");
  return report;
}

ComplianceReport conditional_compliance(const ComplianceJob& job, uint64_t n_samples,
                                        uint64_t seed) {
  ComplianceJob cond = job;
  cond.conditional = true;
  if (!cond.env_w)
    throw Error("conditional compliance requires an embedded W collector");
  return n_samples == 0 ? exact_compliance(cond)
                        : estimate_compliance(cond, n_samples, seed);
}

std::map<uint64_t, Rational> exact_tv_by_init_draw(const ComplianceJob& job,
                                                   uint64_t limit) {
  // Splits each world's outcome distribution by the collector's first
  // initialization draw, then compares the renormalized conditionals.
  auto split = [&](const ExecutionConfig& cfg) {
    std::map<uint64_t, Distribution> by_choice;
    std::map<uint64_t, Rational> mass;
    enumerate_executions_fold(
        cfg,
        [&](const Rational& p, const ExecutionOutcome& o, const DrawTrace& t) {
          uint64_t choice = 0;
          bool found = false;
          for (const auto& e : t) {
            if (e.scope.party == Party::Collector && e.scope.root_kind == 0 &&
                e.seq == 0) {
              choice = e.choice;
              found = true;
              break;
            }
          }
          if (!found) throw Error("collector made no initialization draw");
          by_choice[choice][outcome_bucket(o, job.conditional)] += p;
          mass[choice] += p;
        },
        limit);
    for (auto& [choice, dist] : by_choice)
      for (auto& [k, v] : dist) v /= mass[choice];
    return by_choice;
  };

  auto real = split(config_for(job, true));
  auto ideal = split(config_for(job, false));
  std::map<uint64_t, Rational> out;
  for (const auto& [choice, dist] : real) {
    auto it = ideal.find(choice);
    if (it == ideal.end()) {
      out[choice] = 1;
      continue;
    }
    out[choice] = tv_distance(dist, it->second);
  }
  return out;
}

CompositionReport composition_check(const ComplianceJob& base,
                                    const std::vector<RequesterProfile>& requesters,
                                    const Rational& margin) {
  if (requesters.empty()) throw ScriptError("composition check needs requesters");
  for (const auto& r : requesters) {
    if (!r.oblivious)
      throw ScriptError("composition check requires oblivious requesters");
    uint32_t instances = 0;
    for (const auto& a : r.script)
      if (!std::holds_alternative<ReqDelete>(a)) ++instances;
    if (instances > 1)
      throw ScriptError("composition check requires 1-representative requesters");
  }

  CompositionReport report;
  for (const auto& r : requesters) {
    ComplianceJob job = base;
    job.requester = r;
    report.single_errors.push_back(exact_compliance(job).tv_estimate);
  }
  report.e1 = 0;
  for (const auto& e : report.single_errors)
    if (e > report.e1) report.e1 = e;

  // Merge the k scripts into one requester, reindexing delete handles.
  RequesterProfile merged;
  merged.oblivious = true;
  for (const auto& r : requesters) {
    uint32_t offset = static_cast<uint32_t>(merged.script.size());
    for (auto a : r.script) {
      if (auto* dl = std::get_if<ReqDelete>(&a)) dl->of_action += offset;
      if (auto* lk = std::get_if<ReqLookup>(&a)) lk->of_action += offset;
      merged.script.push_back(std::move(a));
    }
  }
  ComplianceJob merged_job = base;
  merged_job.requester = merged;
  report.ek = exact_compliance(merged_job).tv_estimate;
  report.bound = Rational(static_cast<int64_t>(requesters.size())) * report.e1 + margin;
  report.pass = report.ek <= report.bound;
  return report;
}

bool sd_chain_rule_check(const JointDistribution& joint_p,
                         const JointDistribution& joint_q) {
  if (joint_p.size() > 100 || joint_q.size() > 100)
    throw SizeExceeded("joint supports are limited to 100 points");
  auto normalize_check = [](const JointDistribution& j, const char* which) {
    Rational total = 0;
    for (const auto& [k, v] : j) total += v;
    Rational off = total - 1;
    if (off < 0) off = -off;
    if (off > kNormalizationSlack)
      throw NotNormalized(std::string(which) + " joint does not sum to 1");
  };
  normalize_check(joint_p, "first");
  normalize_check(joint_q, "second");

  // Left side: TV over the joint.
  std::set<std::pair<Bytes, Bytes>> keys;
  for (const auto& [k, v] : joint_p) keys.insert(k);
  for (const auto& [k, v] : joint_q) keys.insert(k);
  Rational lhs = 0;
  for (const auto& k : keys) {
    auto ip = joint_p.find(k);
    auto iq = joint_q.find(k);
    Rational pv = ip == joint_p.end() ? Rational(0) : ip->second;
    Rational qv = iq == joint_q.end() ? Rational(0) : iq->second;
    Rational d = pv - qv;
    lhs += d < 0 ? -d : d;
  }
  lhs /= 2;

  // Right side: TV of the X marginals plus the expected conditional TV.
  std::map<Bytes, Rational> px, qx;
  for (const auto& [k, v] : joint_p) px[k.first] += v;
  for (const auto& [k, v] : joint_q) qx[k.first] += v;
  std::set<Bytes> xs;
  for (const auto& [k, v] : px) xs.insert(k);
  for (const auto& [k, v] : qx) xs.insert(k);
  Rational marg = 0;
  for (const auto& x : xs) {
    Rational pv = px.count(x) ? px[x] : Rational(0);
    Rational qv = qx.count(x) ? qx[x] : Rational(0);
    Rational d = pv - qv;
    marg += d < 0 ? -d : d;
  }
  marg /= 2;

  Rational expected_cond = 0;
  for (const auto& [x, pmass] : px) {
    if (pmass == 0) continue;
    if (!qx.count(x) || qx[x] == 0) {
      // No conditional on the other side; the worst case contributes 1.
      expected_cond += pmass;
      continue;
    }
    std::map<Bytes, Rational> py, qy;
    for (const auto& [k, v] : joint_p)
      if (k.first == x) py[k.second] += v / pmass;
    for (const auto& [k, v] : joint_q)
      if (k.first == x) qy[k.second] += v / qx[x];
    std::set<Bytes> ys;
    for (const auto& [k, v] : py) ys.insert(k);
    for (const auto& [k, v] : qy) ys.insert(k);
    Rational cond = 0;
    for (const auto& y : ys) {
      Rational pv = py.count(y) ? py[y] : Rational(0);
      Rational qv = qy.count(y) ? qy[y] : Rational(0);
      Rational d = pv - qv;
      cond += d < 0 ? -d : d;
    }
    expected_cond += pmass * cond / 2;
  }

  return lhs <= marg + expected_cond;
}

}  // namespace dclab
