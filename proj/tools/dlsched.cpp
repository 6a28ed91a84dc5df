// dlsched: run, compare and validate downlink scheduling scenarios.
//
//   dlsched run <scenario> [--scheduler X] [--seed N] [--out DIR] [--window K]
//   dlsched compare <scenario> [--schedulers apds,fifo,dfpq] [--seed N] [--out DIR] [--window K]
//   dlsched validate <scenario>
//
// Results go to <DIR>/metrics.csv. DIR defaults to $DLSCHED_OUT_DIR, or
// ./out when that is unset.

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <future>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dlsched/engine.hpp"
#include "dlsched/metrics.hpp"
#include "dlsched/scenario_io.hpp"

namespace {

using namespace dlsched;

struct RunOptions {
  std::string scenario_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::int64_t window = 20;
};

std::string default_out_dir() {
  if (const char* env = std::getenv("DLSCHED_OUT_DIR"); env && *env) return env;
  return "out";
}

std::vector<SchedulerKind> parse_scheduler_list(const std::string& list) {
  std::vector<SchedulerKind> kinds;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    auto k = parse_scheduler_kind(item);
    if (!k) {
      std::string lower;
      for (char ch : item) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
      if (lower == "scsa") {
        std::cerr << "note: scheduler 'scsa' is not supported and was skipped\n";
        continue;
      }
      throw std::invalid_argument("--schedulers: unknown scheduler '" + item + "'");
    }
    if (std::find(kinds.begin(), kinds.end(), *k) == kinds.end()) kinds.push_back(*k);
  }
  if (kinds.empty()) throw std::invalid_argument("--schedulers: no supported scheduler given");
  return kinds;
}

SchedulerMetrics run_one(Scenario scenario, SchedulerKind kind, std::int64_t window) {
  scenario.scheduler = kind;
  const auto frames = run_simulation(scenario);
  return summarize_run(kind, frames, window, scenario.frame_duration);
}

int execute(const RunOptions& opt, const std::vector<SchedulerKind>& kinds) {
  if (opt.window < 1) throw std::invalid_argument("--window must be >= 1");
  const auto root = read_json_file(opt.scenario_path);
  Scenario scenario = parse_scenario(root);
  if (opt.seed) scenario.seed = *opt.seed;

  std::vector<std::future<SchedulerMetrics>> jobs;
  jobs.reserve(kinds.size());
  for (auto k : kinds) jobs.push_back(std::async(std::launch::async, run_one, scenario, k, opt.window));

  MetricsReport report;
  report.seed = scenario.seed;
  report.scenario_hash = scenario_hash(root);
  report.window_frames = opt.window;
  for (auto& j : jobs) report.runs.push_back(j.get());

  const auto path = std::filesystem::path(opt.out_dir) / "metrics.csv";
  emit_csv(report, path);
  std::cout << "wrote " << path.string() << '\n';
  return 0;
}

void add_run_options(CLI::App* cmd, RunOptions& opt) {
  cmd->add_option("scenario", opt.scenario_path, "Scenario JSON file")->required();
  cmd->add_option("--seed", opt.seed, "Override the scenario seed");
  cmd->add_option("--out", opt.out_dir, "Output directory");
  cmd->add_option("--window", opt.window, "Frames per reporting window")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Frame-based downlink scheduler simulator"};
  app.require_subcommand(1);

  RunOptions run_opt;
  run_opt.out_dir = default_out_dir();
  std::string scheduler = "apds";
  auto* run = app.add_subcommand("run", "Simulate one scheduler");
  add_run_options(run, run_opt);
  run->add_option("--scheduler", scheduler, "apds, fifo or dfpq")->capture_default_str();

  RunOptions cmp_opt;
  cmp_opt.out_dir = default_out_dir();
  std::string schedulers = "apds,fifo,dfpq";
  auto* compare = app.add_subcommand("compare", "Simulate several schedulers on one scenario");
  add_run_options(compare, cmp_opt);
  compare->add_option("--schedulers", schedulers, "Comma-separated scheduler list")->capture_default_str();

  std::string validate_path;
  auto* validate = app.add_subcommand("validate", "Check a scenario file");
  validate->add_option("scenario", validate_path, "Scenario JSON file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      auto k = parse_scheduler_kind(scheduler);
      if (!k) throw std::invalid_argument("--scheduler: unknown scheduler '" + scheduler + "'");
      return execute(run_opt, {*k});
    }
    if (*compare) return execute(cmp_opt, parse_scheduler_list(schedulers));
    if (*validate) {
      const auto s = load_scenario(validate_path);
      std::cout << validate_path << ": ok, " << s.connections.size() << " connections, "
                << s.num_frames << " frames\n";
      return 0;
    }
  } catch (const ScenarioError& e) {
    std::cerr << "scenario error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
