// SPDX-License-Identifier: Apache-2.0

#include <vector>

#include "CLI11.hpp"
#include "common.hpp"

namespace {

bool parse_csv(const std::string& s, std::vector<double>& out, std::size_t n) {
  out.clear();
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stod(item));
    } catch (...) {
      return false;
    }
  }
  return out.size() == n;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ARcall deterministic simulation harness"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Run a scenario and write its event log");
  std::string scenario_path, out_path, net, thermal;
  std::uint64_t seed = 1;
  std::int64_t processing = 5;
  double start_temp = 0;
  run->add_option("scenario", scenario_path, "Scenario JSON file")->required()->check(CLI::ExistingFile);
  run->add_option("--seed", seed, "Network RNG seed")->capture_default_str();
  run->add_option("--net", net, "base_ms,jitter_ms per hop (default 35,10)");
  run->add_option("--processing", processing, "Server processing time in ms")->capture_default_str();
  run->add_option("--thermal", thermal, "ambient,heat,cool,cutoff in degC and degC/s (default 25,0.35,0.2,55)");
  auto* start_opt = run->add_option("--start-temp", start_temp, "Initial glasses temperature in degC");
  run->add_option("--out", out_path, "Write the JSONL log here instead of stdout");

  auto* metrics = app.add_subcommand("metrics", "Aggregate metrics from an event log");
  std::string metrics_log;
  metrics->add_option("log", metrics_log, "JSONL event log")->required()->check(CLI::ExistingFile);

  auto* latency = app.add_subcommand("latency", "Per-hop latency breakdown of an event log");
  std::string latency_log;
  double budget = 100.0;
  latency->add_option("log", latency_log, "JSONL event log")->required()->check(CLI::ExistingFile);
  latency->add_option("--budget", budget, "End-to-end p50 budget in ms")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  if (*run) {
    arcall_sim_options opts;
    arcall_sim_options_init(&opts);
    opts.seed = seed;
    opts.processing_ms = processing;
    std::vector<double> v;
    if (!net.empty()) {
      if (!parse_csv(net, v, 2)) return std::cerr << "--net expects base,jitter\n", 2;
      opts.base_delay_ms = static_cast<std::int64_t>(v[0]);
      opts.jitter_ms = static_cast<std::int64_t>(v[1]);
    }
    if (!thermal.empty()) {
      if (!parse_csv(thermal, v, 4)) return std::cerr << "--thermal expects ambient,heat,cool,cutoff\n", 2;
      opts.ambient_c = v[0];
      opts.heat_c_per_s = v[1];
      opts.cool_c_per_s = v[2];
      opts.cutoff_c = v[3];
    }
    if (*start_opt) opts.initial_temp_c = start_temp;
    auto text = tools::slurp(scenario_path);
    if (!text) return std::cerr << "cannot read " << scenario_path << '\n', 1;
    char* log = nullptr;
    if (auto s = arcall_sim_run(text->c_str(), &opts, &log); s != ARCALL_OK) return tools::report(s, "run");
    std::string out = tools::take(log);
    if (out_path.empty()) {
      std::cout << out;
    } else if (!tools::spit(out_path, out)) {
      std::cerr << "cannot write " << out_path << '\n';
      return 1;
    }
    return 0;
  }

  const bool is_metrics = metrics->parsed();
  auto text = tools::slurp(is_metrics ? metrics_log : latency_log);
  if (!text) return std::cerr << "cannot read log\n", 1;
  char* report = nullptr;
  auto s = is_metrics ? arcall_sim_metrics(text->c_str(), &report) : arcall_sim_latency(text->c_str(), budget, &report);
  if (s != ARCALL_OK) return tools::report(s, is_metrics ? "metrics" : "latency");
  std::cout << tools::take(report) << '\n';
  return 0;
}
