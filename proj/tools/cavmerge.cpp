// Copyright 2026 the cavmerge authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "cavmerge/metrics.hpp"
#include "cavmerge/sim.hpp"
#include "cavmerge/validation.hpp"

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitIncomplete = 3;

#ifndef CAVMERGE_SCENARIO_DIR
#define CAVMERGE_SCENARIO_DIR "data/scenarios"
#endif

fs::path scenario_dir() {
  if (const char* env = std::getenv("CAVMERGE_SCENARIO_DIR")) return env;
  return CAVMERGE_SCENARIO_DIR;
}

// A scenario argument is either a JSON file path or a bundled name.
fs::path resolve_scenario(const std::string& arg) {
  if (fs::exists(arg)) return arg;
  const fs::path bundled = scenario_dir() / (arg + ".json");
  if (fs::exists(bundled)) return bundled;
  throw cavmerge::ScenarioError(arg + ": not a file and not a bundled scenario (" +
                                bundled.string() + " missing)");
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw cavmerge::ScenarioError(path.string() + ": cannot open");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(path.string() + ": cannot write");
  out << content;
}

// Applies `dotted.path=value` onto the scenario document. Values parse as
// JSON literals when possible (numbers, booleans) and as strings otherwise.
// Unknown keys are caught downstream by the strict scenario parser.
void apply_override(ordered_json& doc, const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos)
    throw cavmerge::ScenarioError("override '" + spec + "': expected key=value");
  const std::string path = spec.substr(0, eq);
  const std::string raw = spec.substr(eq + 1);

  ordered_json value;
  try {
    value = ordered_json::parse(raw);
  } catch (const nlohmann::json::parse_error&) {
    value = raw;
  }

  ordered_json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = path.find('.', start);
    const std::string key = path.substr(start, dot - start);
    if (key.empty())
      throw cavmerge::ScenarioError("override '" + spec + "': empty path segment");
    const bool leaf = dot == std::string::npos;
    const bool is_index = !key.empty() &&
                          key.find_first_not_of("0123456789") == std::string::npos;
    if (is_index && node->is_array()) {
      const std::size_t idx = std::stoul(key);
      if (idx >= node->size())
        throw cavmerge::ScenarioError("override '" + spec + "': index " + key +
                                      " out of range");
      node = &(*node)[idx];
    } else {
      if (!node->is_object())
        throw cavmerge::ScenarioError("override '" + spec + "': '" + key +
                                      "' does not address an object");
      node = &(*node)[key];
      if (!leaf && node->is_null())
        *node = ordered_json::object();
    }
    if (leaf) {
      *node = value;
      return;
    }
    start = dot + 1;
  }
}

struct RunManifest {
  std::string scenario;
  std::string resolved_path;
  std::string out_dir;
  std::vector<std::string> overrides;
  std::string order = "forward";
};

std::string manifest_json(const RunManifest& m) {
  ordered_json j;
  j["scenario"] = m.scenario;
  j["resolved_path"] = m.resolved_path;
  j["out_dir"] = m.out_dir;
  j["overrides"] = m.overrides;
  j["order"] = m.order;
  return j.dump();
}

cavmerge::ScenarioSpec load_with_overrides(const RunManifest& m) {
  const std::string text = read_file(m.resolved_path);
  ordered_json doc;
  try {
    doc = ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw cavmerge::ScenarioError(m.resolved_path + ": " + e.what());
  }
  for (const std::string& o : m.overrides) apply_override(doc, o);
  return cavmerge::parse_scenario(doc.dump(), m.resolved_path);
}

std::string series_csv(const cavmerge::SimResult& result, std::uint32_t id) {
  std::string out = "t,v,gap_ip,gap_merge,u,energy\n";
  for (const cavmerge::LogRow& row : result.rows) {
    if (row.id != id) continue;
    out += cavmerge::format_double(row.t);
    out += ',' + cavmerge::format_double(row.v);
    out += ',' + cavmerge::format_double(row.gap_ip);
    out += ',' + cavmerge::format_double(row.gap_merge);
    out += ',' + cavmerge::format_double(row.u);
    out += ',' + cavmerge::format_double(row.energy);
    out += '\n';
  }
  return out;
}

int finish_run(const cavmerge::SimResult& result,
               const cavmerge::MetricsReport& report) {
  if (result.collision) {
    std::cerr << "collision: run halted at t=" << result.end_time_s << "\n";
    return kExitIncomplete;
  }
  if (report.incomplete > 0) {
    std::cerr << "warning: " << report.incomplete
              << " vehicle(s) did not reach the merge point\n";
    return kExitIncomplete;
  }
  return kExitOk;
}

int cmd_run(const RunManifest& manifest, const cavmerge::SimOptions& options) {
  const cavmerge::ScenarioSpec spec = load_with_overrides(manifest);
  const cavmerge::SimResult result = cavmerge::run_simulation(spec, options);
  const cavmerge::MetricsReport report = cavmerge::summarize(result);

  const fs::path out_dir = manifest.out_dir;
  fs::create_directories(out_dir / "series");
  write_file(out_dir / "trajectory.csv", cavmerge::log_csv(result));
  write_file(out_dir / "events.csv", cavmerge::events_csv(result));
  write_file(out_dir / "summary.json",
             cavmerge::summary_json(result, report, manifest_json(manifest)));
  write_file(out_dir / "timing.json", cavmerge::timings_json(result));
  write_file(out_dir / "scenario.json", cavmerge::serialize_scenario(spec));
  for (const cavmerge::VehicleState& v : result.vehicles)
    write_file(out_dir / "series" / ("vehicle_" + std::to_string(v.id) + ".csv"),
               series_csv(result, v.id));

  std::cout << "scenario: " << spec.name << "\n"
            << "vehicles: " << report.total << " (" << report.completed
            << " completed, " << report.incomplete << " incomplete)\n"
            << "avg travel time: " << cavmerge::format_double(report.avg_travel_time_s)
            << " s\n"
            << "avg energy: " << cavmerge::format_double(report.avg_energy_j)
            << " J\n"
            << "events: merge=" << report.merge_events
            << " fallback=" << report.fallback_events
            << " safety_violation=" << report.violation_events
            << " collision=" << report.collision_events << "\n"
            << "outputs: " << out_dir.string() << "\n";
  return finish_run(result, report);
}

int cmd_compare(const RunManifest& manifest, const cavmerge::SimOptions& options,
                const std::string& baseline_path, const std::string& out_file) {
  const cavmerge::ScenarioSpec spec = load_with_overrides(manifest);
  const cavmerge::SimResult result = cavmerge::run_simulation(spec, options);
  const cavmerge::MetricsReport report = cavmerge::summarize(result);

  ordered_json base;
  try {
    base = ordered_json::parse(read_file(baseline_path));
  } catch (const nlohmann::json::parse_error& e) {
    throw cavmerge::ScenarioError(baseline_path + ": " + e.what());
  }
  if (!base.contains("averages"))
    throw cavmerge::ScenarioError(baseline_path + ": not a run summary (no averages)");
  const double base_time = base["averages"]["travel_time_s"].get<double>();
  const double base_energy = base["averages"]["energy_j"].get<double>();
  const std::string base_name =
      base.contains("scenario") ? base["scenario"].get<std::string>() : "baseline";

  std::string out = "{\n";
  out += "  \"schema\": \"cavmerge-comparison/1\",\n";
  out += "  \"baseline\": {\"scenario\": \"" + base_name +
         "\", \"avg_travel_time_s\": " + cavmerge::format_double(base_time) +
         ", \"avg_energy_j\": " + cavmerge::format_double(base_energy) + "},\n";
  out += "  \"candidate\": {\"scenario\": \"" + spec.name +
         "\", \"avg_travel_time_s\": " +
         cavmerge::format_double(report.avg_travel_time_s) +
         ", \"avg_energy_j\": " + cavmerge::format_double(report.avg_energy_j) +
         "},\n";
  out += "  \"savings\": {\"travel_time_ratio\": " +
         cavmerge::format_double(
             cavmerge::saving_ratio(base_time, report.avg_travel_time_s)) +
         ", \"energy_ratio\": " +
         cavmerge::format_double(
             cavmerge::saving_ratio(base_energy, report.avg_energy_j)) +
         "}\n";
  out += "}\n";

  std::cout << out;
  if (!out_file.empty()) write_file(out_file, out);
  return finish_run(result, report);
}

int cmd_validate(std::uint64_t seed) {
  const std::vector<cavmerge::SuiteResult> suites =
      cavmerge::run_validation_suites(seed);
  bool all_ok = true;
  for (const cavmerge::SuiteResult& s : suites) {
    std::cout << (s.passed ? "PASS" : "FAIL") << "  " << s.name << "  —  "
              << s.detail << "\n";
    all_ok = all_ok && s.passed;
  }
  return all_ok ? kExitOk : kExitValidation;
}

int cmd_list() {
  const fs::path dir = scenario_dir();
  if (!fs::exists(dir)) {
    std::cerr << "scenario directory missing: " << dir.string() << "\n";
    return kExitValidation;
  }
  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.path().extension() == ".json") names.push_back(entry.path().stem());
  std::sort(names.begin(), names.end());
  for (const std::string& n : names) std::cout << n << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deterministic on-ramp merging simulator: CBF/CLF-controlled "
               "automated vehicles in mixed traffic"};
  app.require_subcommand(1);

  RunManifest manifest;
  std::string order = "forward";
  std::string dt_override;
  std::string seed_override;
  std::string baseline_path;
  std::string compare_out;
  std::uint64_t validate_seed = 424242;

  const auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("scenario", manifest.scenario,
                    "Bundled scenario name or path to a scenario JSON file")
        ->required();
    cmd->add_option("--override", manifest.overrides,
                    "dotted.path=value applied to the scenario document "
                    "(repeatable); e.g. controller.sample_dt_s=0.05");
    cmd->add_option("--dt", dt_override,
                    "Shorthand for --override controller.sample_dt_s=<value>");
    cmd->add_option("--seed", seed_override, "Shorthand for --override seed=<value>");
    cmd->add_option("--order", order,
                    "Per-step decision evaluation order: forward|reverse")
        ->check(CLI::IsMember({"forward", "reverse"}));
  };

  CLI::App* run = app.add_subcommand("run", "Run a scenario and write its logs");
  add_common(run);
  run->add_option("--out", manifest.out_dir, "Output directory")
      ->default_val("out");

  CLI::App* compare = app.add_subcommand(
      "compare", "Run a scenario and compare its averages against a baseline summary");
  add_common(compare);
  compare->add_option("--baseline", baseline_path, "Baseline summary.json")
      ->required();
  compare->add_option("--out", compare_out, "Write the comparison JSON here too");

  CLI::App* validate =
      app.add_subcommand("validate", "Run the oracle validation suites");
  validate->add_option("--seed", validate_seed, "Random seed for the suites");

  app.add_subcommand("list-scenarios", "List bundled scenario names");

  CLI11_PARSE(app, argc, argv);

  try {
    if (!dt_override.empty())
      manifest.overrides.push_back("controller.sample_dt_s=" + dt_override);
    if (!seed_override.empty()) manifest.overrides.push_back("seed=" + seed_override);
    manifest.order = order;

    cavmerge::SimOptions options;
    options.order = order == "reverse" ? cavmerge::EvalOrder::REVERSE
                                       : cavmerge::EvalOrder::FORWARD;

    if (run->parsed()) {
      manifest.resolved_path = resolve_scenario(manifest.scenario).string();
      return cmd_run(manifest, options);
    }
    if (compare->parsed()) {
      manifest.resolved_path = resolve_scenario(manifest.scenario).string();
      return cmd_compare(manifest, options, baseline_path, compare_out);
    }
    if (validate->parsed()) return cmd_validate(validate_seed);
    return cmd_list();
  } catch (const cavmerge::ScenarioError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
