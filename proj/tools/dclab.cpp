// Command-line front end: loads scenario files, runs executions and
// compliance checks, and emits reports with reproduction seeds.
//
// Exit codes: 0 pass, 1 fail (or inconclusive / suite failures), 2 scenario
// schema error, 3 runtime error.

#include "dclab/scenario.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <set>
#include <thread>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitPass = 0;
constexpr int kExitFail = 1;
constexpr int kExitSchema = 2;
constexpr int kExitRuntime = 3;

struct CheckOptions {
  std::optional<uint64_t> seed;
  std::optional<std::string> mode;
  std::optional<std::string> margin;
};

dclab::Scenario load_with_overrides(const std::string& path, const CheckOptions& opt) {
  dclab::Scenario scenario = dclab::load_scenario(path);
  if (opt.seed) scenario.seed = *opt.seed;
  if (opt.mode) {
    if (*opt.mode == "enumerate") {
      scenario.mode = dclab::CheckMode::Enumerate;
    } else if (*opt.mode == "sample") {
      scenario.mode = dclab::CheckMode::Sample;
      if (scenario.n_samples == 0) scenario.n_samples = 20000;
    } else {
      throw dclab::SchemaError("--mode must be sample or enumerate");
    }
  }
  if (opt.margin) {
    auto r = dclab::parse_rational(*opt.margin);
    if (!r) throw dclab::SchemaError("--margin is not a valid rational");
    scenario.margin = *r;
  }
  return scenario;
}

int cmd_run(const std::string& path, const std::string& world,
            std::optional<uint64_t> seed) {
  dclab::Scenario scenario = dclab::load_scenario(path);
  uint64_t use_seed = seed.value_or(scenario.seed);
  auto cfg = scenario.to_execution_config(world == "real", use_seed);
  std::printf("scenario %s  world=%s  seed=%llu\n", scenario.name.c_str(),
              world.c_str(), static_cast<unsigned long long>(use_seed));
  auto outcome = dclab::run_execution(
      cfg, [](const std::string& line) { std::printf("%s\n", line.c_str()); });
  std::printf("deletion tokens issued: %zu\n", outcome.deletion_tokens_issued.size());
  for (const auto& t : outcome.deletion_tokens_issued)
    std::printf("  token %s\n", dclab::to_hex(t).c_str());
  std::printf("state_x  = %s\n", dclab::to_hex(outcome.state_x).c_str());
  if (scenario.conditional)
    std::printf("state_z  = %s\n", dclab::to_hex(outcome.state_z).c_str());
  std::printf("view_z   = %s\n", dclab::to_hex(outcome.view_z_bytes()).c_str());
  return kExitPass;
}

int cmd_check(const std::string& path, const std::string& out_path,
              const CheckOptions& opt) {
  dclab::Scenario scenario = load_with_overrides(path, opt);
  dclab::ComplianceReport report = dclab::run_scenario_check(scenario);
  json doc = dclab::report_to_json(report, scenario);
  std::string text = doc.dump(2);
  if (!out_path.empty()) {
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw dclab::Error("cannot write report to " + out_path);
    out << text << "\n";
  }
  std::printf("%s\n", text.c_str());
  return report.verdict == dclab::Verdict::Pass ? kExitPass : kExitFail;
}

struct SuiteEntry {
  std::string name;
  std::string path;
  json report;
  std::string verdict;
  std::string error;
  double tv = 0.0;
};

int cmd_suite(const std::string& dir, const std::string& out_dir, unsigned jobs) {
  std::vector<std::string> paths;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".json")
      paths.push_back(entry.path().string());
  std::sort(paths.begin(), paths.end());

  std::vector<SuiteEntry> entries(paths.size());
  std::atomic<size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      size_t i = next.fetch_add(1);
      if (i >= paths.size()) return;
      SuiteEntry& e = entries[i];
      e.path = paths[i];
      try {
        dclab::Scenario scenario = dclab::load_scenario(paths[i]);
        e.name = scenario.name;
        dclab::ComplianceReport report = dclab::run_scenario_check(scenario);
        e.report = dclab::report_to_json(report, scenario);
        e.verdict = dclab::verdict_name(report.verdict);
        e.tv = dclab::to_double(report.tv_estimate);
      } catch (const std::exception& ex) {
        if (e.name.empty()) e.name = fs::path(paths[i]).stem().string();
        e.error = ex.what();
        e.verdict = "Error";
      }
    }
  };
  jobs = std::max(1u, jobs);
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < jobs; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  // Disambiguate duplicate scenario names for output files.
  std::set<std::string> used;
  for (auto& e : entries) {
    std::string base = e.name;
    int suffix = 2;
    while (used.count(e.name)) e.name = base + "-" + std::to_string(suffix++);
    used.insert(e.name);
  }

  size_t pass = 0, fail = 0, inconclusive = 0, errors = 0;
  json summary;
  summary["schema"] = "dclab-suite/1";
  summary["scenarios"] = json::array();
  std::printf("%-28s %-10s %-12s %-12s %s\n", "scenario", "mode", "tv", "bound",
              "verdict");
  for (auto& e : entries) {
    if (!e.error.empty()) {
      ++errors;
      std::printf("%-28s %-10s %-12s %-12s %s (%s)\n", e.name.c_str(), "-", "-",
                  "-", "Error", e.error.c_str());
      summary["scenarios"].push_back(
          json{{"scenario", e.name}, {"error", e.error}});
      continue;
    }
    if (e.verdict == "Pass") ++pass;
    else if (e.verdict == "Fail") ++fail;
    else ++inconclusive;
    std::printf("%-28s %-10s %-12.6f %-12s %s\n", e.name.c_str(),
                e.report["mode"].get<std::string>().c_str(), e.tv,
                e.report["bound"]["value"].get<std::string>().c_str(),
                e.verdict.c_str());
    summary["scenarios"].push_back(e.report);
    if (!out_dir.empty()) {
      fs::create_directories(out_dir);
      std::ofstream out(fs::path(out_dir) / (e.name + ".report.json"),
                        std::ios::binary);
      out << e.report.dump(2) << "\n";
    }
  }
  summary["pass"] = pass;
  summary["fail"] = fail;
  summary["inconclusive"] = inconclusive;
  summary["errors"] = errors;
  std::printf("summary: %zu pass, %zu fail, %zu inconclusive, %zu errors\n", pass,
              fail, inconclusive, errors);
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    std::ofstream out(fs::path(out_dir) / "summary.json", std::ios::binary);
    out << summary.dump(2) << "\n";
  }
  return (fail > 0 || errors > 0) ? kExitFail : kExitPass;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dclab: deletion-compliance simulation and testing"};
  app.require_subcommand(1);

  std::string scenario_path, world = "real", out_path, dir, out_dir;
  CheckOptions opt;
  uint64_t seed_value = 0;
  bool seed_given = false;
  unsigned jobs = 1;
  std::string mode_value, margin_value;

  auto* run = app.add_subcommand("run", "run one execution and print its trace");
  run->add_option("scenario", scenario_path, "scenario file")->required();
  run->add_option("--world", world, "real or ideal")
      ->check(CLI::IsMember({"real", "ideal"}));
  run->add_option("--seed", seed_value, "override the scenario seed")
      ->each([&](const std::string&) { seed_given = true; });

  auto* check = app.add_subcommand("check", "run the scenario's compliance check");
  check->add_option("scenario", scenario_path, "scenario file")->required();
  check->add_option("--out", out_path, "write the report JSON here");
  check->add_option("--seed", seed_value, "override the scenario seed")
      ->each([&](const std::string&) { seed_given = true; });
  check->add_option("--mode", mode_value, "override the check mode");
  check->add_option("--margin", margin_value, "override the pass margin");

  auto* suite = app.add_subcommand("suite", "run every scenario in a directory");
  suite->add_option("--dir", dir, "scenario directory")->required();
  suite->add_option("--out", out_dir, "directory for per-scenario reports");
  suite->add_option("--jobs", jobs, "parallel scenario jobs");

  CLI11_PARSE(app, argc, argv);

  if (seed_given) opt.seed = seed_value;
  if (!mode_value.empty()) opt.mode = mode_value;
  if (!margin_value.empty()) opt.margin = margin_value;
  if (const char* env_jobs = std::getenv("DCLAB_JOBS")) {
    char* end = nullptr;
    unsigned long v = std::strtoul(env_jobs, &end, 10);
    if (end && *end == '\0' && v >= 1) jobs = static_cast<unsigned>(v);
  }

  try {
    if (run->parsed())
      return cmd_run(scenario_path, world,
                     seed_given ? std::optional<uint64_t>(seed_value) : std::nullopt);
    if (check->parsed()) return cmd_check(scenario_path, out_path, opt);
    if (suite->parsed()) return cmd_suite(dir, out_dir, jobs);
  } catch (const dclab::SchemaError& e) {
    std::fprintf(stderr, "schema error: %s\n", e.what());
    return kExitSchema;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitRuntime;
  }
  return kExitPass;
}
