// SPDX-License-Identifier: Apache-2.0

/// \file sim.hpp
/// \brief Deterministic discrete-event simulation of Wearer/Friend bots
/// talking to the relay over a latency/jitter network, with a wearable
/// thermal model and metric extraction from the resulting event log.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "result.hpp"
#include "session.hpp"

namespace arcall::sim {

/// xorshift64* seeded through splitmix64.
///
///   seed:  s = splitmix64(seed); if s == 0 then s = 0x9E3779B97F4A7C15
///   next:  x ^= x >> 12; x ^= x << 25; x ^= x >> 27; return x * 0x2545F4914F6CDD1D
///   uniform_int(lo, hi) = lo + next() % (hi - lo + 1)
class Rng {
 public:
  explicit Rng(std::uint64_t seed);
  std::uint64_t next();
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

 private:
  std::uint64_t state_;
};

std::uint64_t splitmix64(std::uint64_t x);

struct NetworkModel {
  Millis base_delay_ms = 35;
  Millis jitter_ms = 10;  // uniform, +/-
  std::uint64_t seed = 1;
  Millis processing_ms = 5;
};

/// One-hop delay sampler: max(0, base + U{-jitter..jitter}).
class DelaySampler {
 public:
  explicit DelaySampler(const NetworkModel& model) : model_(model), rng_(model.seed) {}
  Millis sample();

 private:
  NetworkModel model_;
  Rng rng_;
};

/// Temperatures and rates in millidegrees Celsius (per second).
struct ThermalState {
  std::int64_t temp_mc = 25'000;
  std::int64_t ambient_mc = 25'000;
  std::int64_t heat_rate_mc_per_s = 350;
  std::int64_t cool_rate_mc_per_s = 200;
  std::int64_t cutoff_mc = 55'000;

  double temp_c() const { return static_cast<double>(temp_mc) / 1000.0; }
  bool valid() const {
    return temp_mc >= ambient_mc && heat_rate_mc_per_s >= 0 && cool_rate_mc_per_s >= 0;
  }
  bool operator==(const ThermalState&) const = default;
};

/// Builds a state from degrees, rounding to the nearest millidegree. The
/// device starts at ambient.
ThermalState thermal_from_celsius(double ambient_c, double heat_c_per_s, double cool_c_per_s,
                                  double cutoff_c);

/// streaming: temp += heat * dt; idle: temp = max(ambient, temp - cool * dt).
ThermalState thermal_step(const ThermalState& state, std::int64_t dt_s, bool streaming);

struct Action {
  Millis at = 0;
  std::string actor;
  std::string action;  // start, drop_in, project, reposition, tap, mute, end, end_dropin, connect, disconnect
  nlohmann::json params = nlohmann::json::object();
};

struct Actor {
  std::string id;
  std::string role;  // wearer | friend
  bool online = true;
  std::string token;
};

struct MediaPlan {
  Millis frame_interval_ms = 100;
  int frame_width = 32;
  int frame_height = 24;
  Millis audio_interval_ms = 200;
  int audio_bytes = 160;
  std::string when = "session";  // session | dropin | never
};

struct Scenario {
  std::vector<Actor> actors;
  std::vector<std::pair<std::string, std::string>> friendships;
  MediaPlan media;
  Millis timer_sync_interval_ms = 10'000;
  double glasses_fraction = 0.4;
  std::optional<Millis> until_ms;
  std::vector<Action> actions;
};

enum class SimErrorCode { ScenarioInvalid, MalformedLog };

struct SimError {
  SimErrorCode code;
  std::string detail;
  std::string message() const;
};

Result<Scenario, SimError> parse_scenario(std::string_view json_text);
Result<Scenario, SimError> load_scenario(const std::string& path);

/// One JSON object per line; keys sorted.
struct EventLog {
  std::vector<nlohmann::json> entries;

  std::string to_jsonl() const;
  static Result<EventLog, SimError> from_jsonl(std::string_view text);
};

Result<EventLog, SimError> run_scenario(const Scenario& scenario, const NetworkModel& network,
                                        const ThermalState& thermal);

struct MetricsReport {
  std::vector<double> dropin_durations_s;
  std::optional<double> median_dropin_s;
  std::vector<std::int64_t> contents_per_dropin;
  std::optional<std::int64_t> median_contents_per_dropin;
  std::int64_t total_contents = 0;
  std::int64_t total_extensions = 0;
  std::optional<double> p50_latency_ms;
  std::optional<double> peak_temp_c;
  std::int64_t media_dropped = 0;

  nlohmann::json to_json() const;
};

/// Lower median: element (n-1)/2 of the sorted list.
template <class T>
std::optional<T> lower_median(std::vector<T> values);

Result<MetricsReport, SimError> compute_metrics(const EventLog& log);

struct LatencyReport {
  std::size_t samples = 0;
  std::optional<double> e2e_p50_ms;
  std::optional<double> e2e_p95_ms;
  std::optional<double> uplink_p50_ms;
  std::optional<double> downlink_p50_ms;
  std::optional<double> processing_p50_ms;
  double budget_ms = 100.0;
  bool within_budget = false;

  nlohmann::json to_json() const;
};

/// End-to-end is Wearer capture to Friend delivery of FrameChunk.
LatencyReport latency_breakdown(const EventLog& log, double budget_ms = 100.0);

/// Expected end-to-end median under the model: 2 * base + processing.
double analytic_e2e_median_ms(const NetworkModel& model);

}  // namespace arcall::sim
