// SPDX-License-Identifier: Apache-2.0

#include "arcall/arcall.h"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <limits>
#include <memory>
#include <string>

#include "catalog.hpp"
#include "json.hpp"
#include "media.hpp"
#include "protocol.hpp"
#include "server.hpp"
#include "session.hpp"
#include "sim.hpp"
#include "store.hpp"

using nlohmann::json;
namespace proto = arcall::protocol;

struct arcall_store {
  arcall::relay::Store store;
  arcall::relay::StoreData data;
};

struct arcall_server {
  std::unique_ptr<arcall::server::Server> server;
};

namespace {

thread_local std::string g_last_error;

arcall_status ok() {
  g_last_error.clear();
  return ARCALL_OK;
}

arcall_status err(arcall_status status, std::string detail) {
  g_last_error = std::move(detail);
  return status;
}

char* dup_string(const std::string& s) {
  auto* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (p) std::memcpy(p, s.c_str(), s.size() + 1);
  return p;
}

std::uint8_t* dup_bytes(const std::vector<std::uint8_t>& v) {
  auto* p = static_cast<std::uint8_t*>(std::malloc(v.empty() ? 1 : v.size()));
  if (p && !v.empty()) std::memcpy(p, v.data(), v.size());
  return p;
}

template <class F>
arcall_status guarded(F&& f) {
  try {
    return f();
  } catch (const std::bad_alloc&) {
    return err(ARCALL_E_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return err(ARCALL_E_INTERNAL, e.what());
  } catch (...) {
    return err(ARCALL_E_INTERNAL, "unknown exception");
  }
}

arcall::session::RawConfig raw_config_from_json(const json& j) {
  arcall::session::RawConfig raw;
  if (j.contains("arcall_duration_s")) raw.arcall_duration_s = j.at("arcall_duration_s").get<std::int64_t>();
  if (j.contains("dropin_duration_s")) raw.dropin_duration_s = j.at("dropin_duration_s").get<std::int64_t>();
  if (j.contains("blur_level")) raw.blur_level = j.at("blur_level").get<std::int64_t>();
  if (j.contains("friend")) raw.friend_id = j.at("friend").get<std::string>();
  raw.presence_indicator = j.value("presence_indicator", false);
  raw.strict_extensions = j.value("strict_extensions", false);
  return raw;
}

json config_json(const arcall::session::SessionConfig& c) {
  return json{{"arcall_duration_s", c.arcall_duration_s}, {"dropin_duration_s", c.dropin_duration_s},
              {"blur_level", c.blur_level},               {"friend", c.friend_id},
              {"presence_indicator", c.presence_indicator}, {"strict_extensions", c.strict_extensions}};
}

arcall_status parse_config(const char* text, arcall::session::SessionConfig& out) {
  if (!text) return err(ARCALL_E_INVALID_ARGUMENT, "config_json is NULL");
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) return err(ARCALL_E_INVALID_ARGUMENT, "config must be a JSON object");
  arcall::session::RawConfig raw;
  try {
    raw = raw_config_from_json(j);
  } catch (const json::exception& e) {
    return err(ARCALL_E_INVALID_CONFIG, e.what());
  }
  auto cfg = arcall::session::validate_config(raw);
  if (!cfg)
    return err(ARCALL_E_INVALID_CONFIG,
               std::string(arcall::session::to_string(cfg.error().code)) + ": " + cfg.error().field);
  out = *cfg;
  return ok();
}

arcall_status store_error(const arcall::relay::StoreError& e) {
  return err(e.code == arcall::relay::StoreErrorCode::CorruptStore ? ARCALL_E_CORRUPT_STORE : ARCALL_E_IO,
             e.message());
}

arcall_status persist(arcall_store* s) {
  auto r = s->store.persist(s->data);
  return r ? ok() : store_error(r.error());
}

arcall_status sim_error(const arcall::sim::SimError& e) {
  return err(e.code == arcall::sim::SimErrorCode::ScenarioInvalid ? ARCALL_E_SCENARIO_INVALID
                                                                   : ARCALL_E_MALFORMED_LOG,
             e.message());
}

arcall::sim::NetworkModel network_of(const arcall_sim_options& o) {
  arcall::sim::NetworkModel n;
  n.seed = o.seed;
  n.base_delay_ms = o.base_delay_ms;
  n.jitter_ms = o.jitter_ms;
  n.processing_ms = o.processing_ms;
  return n;
}

}  // namespace

extern "C" {

const char* arcall_status_string(arcall_status status) {
  switch (status) {
    case ARCALL_OK: return "ARCALL_OK";
    case ARCALL_E_INVALID_ARGUMENT: return "ARCALL_E_INVALID_ARGUMENT";
    case ARCALL_E_INVALID_CONFIG: return "ARCALL_E_INVALID_CONFIG";
    case ARCALL_E_CORRUPT_STORE: return "ARCALL_E_CORRUPT_STORE";
    case ARCALL_E_IO: return "ARCALL_E_IO";
    case ARCALL_E_BIND: return "ARCALL_E_BIND";
    case ARCALL_E_SCENARIO_INVALID: return "ARCALL_E_SCENARIO_INVALID";
    case ARCALL_E_MALFORMED_LOG: return "ARCALL_E_MALFORMED_LOG";
    case ARCALL_E_DECODE: return "ARCALL_E_DECODE";
    case ARCALL_E_UNKNOWN_CONTENT: return "ARCALL_E_UNKNOWN_CONTENT";
    case ARCALL_E_INTERNAL: return "ARCALL_E_INTERNAL";
  }
  return "ARCALL_E_UNKNOWN";
}

const char* arcall_last_error(void) { return g_last_error.c_str(); }

void arcall_free(void* ptr) { std::free(ptr); }

const char* arcall_version(void) { return "0.1.0"; }

// --- store ---

arcall_status arcall_store_open(const char* dir, arcall_store** out) {
  return guarded([&] {
    if (!dir || !out) return err(ARCALL_E_INVALID_ARGUMENT, "dir and out are required");
    *out = nullptr;
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) return err(ARCALL_E_IO, std::string(dir) + ": " + ec.message());
    arcall::relay::Store store(dir);
    auto data = store.load();
    if (!data) return store_error(data.error());
    *out = new arcall_store{std::move(store), std::move(*data)};
    return ok();
  });
}

void arcall_store_close(arcall_store* store) { delete store; }

arcall_status arcall_store_befriend(arcall_store* store, const char* a, const char* b) {
  return guarded([&] {
    if (!store || !a || !b) return err(ARCALL_E_INVALID_ARGUMENT, "store, a and b are required");
    if (!store->data.friendships.add(a, b)) return err(ARCALL_E_INVALID_ARGUMENT, "users must be distinct and non-empty");
    return persist(store);
  });
}

arcall_status arcall_store_unfriend(arcall_store* store, const char* a, const char* b) {
  return guarded([&] {
    if (!store || !a || !b) return err(ARCALL_E_INVALID_ARGUMENT, "store, a and b are required");
    store->data.friendships.remove(a, b);
    return persist(store);
  });
}

arcall_status arcall_store_set_token(arcall_store* store, const char* user, const char* token) {
  return guarded([&] {
    if (!store || !user || !*user) return err(ARCALL_E_INVALID_ARGUMENT, "store and user are required");
    if (!token || !*token)
      store->data.tokens.erase(user);
    else
      store->data.tokens[user] = token;
    return persist(store);
  });
}

arcall_status arcall_store_set_preferences(arcall_store* store, const char* wearer, const char* config_json) {
  return guarded([&] {
    if (!store || !wearer || !*wearer) return err(ARCALL_E_INVALID_ARGUMENT, "store and wearer are required");
    arcall::session::SessionConfig cfg;
    if (auto s = parse_config(config_json, cfg); s != ARCALL_OK) return s;
    store->data.preferences.set(wearer, cfg);
    return persist(store);
  });
}

arcall_status arcall_store_dump(const arcall_store* store, char** json_out) {
  return guarded([&] {
    if (!store || !json_out) return err(ARCALL_E_INVALID_ARGUMENT, "store and json_out are required");
    json friendships = json::object();
    for (const auto& [user, friends] : store->data.friendships.edges()) friendships[user] = friends;
    json prefs = json::object();
    for (const auto& [wearer, cfg] : store->data.preferences.all()) prefs[wearer] = config_json(cfg);
    json tokens = json::object();
    for (const auto& [user, _] : store->data.tokens) tokens[user] = "***";
    json doc{{"friendships", friendships}, {"preferences", prefs}, {"tokens", tokens}};
    *json_out = dup_string(doc.dump(2));
    return ok();
  });
}

// --- server ---

void arcall_server_options_init(arcall_server_options* options) {
  if (!options) return;
  options->listen_addr = "127.0.0.1:7700";
  options->ws_addr = "127.0.0.1:7701";
  options->store_dir = "arcall-store";
  options->static_dir = nullptr;
  options->glasses_fraction = 0.4;
  options->log_level = "info";
}

arcall_status arcall_server_create(const arcall_server_options* options, arcall_server** out) {
  return guarded([&] {
    if (!options || !out) return err(ARCALL_E_INVALID_ARGUMENT, "options and out are required");
    *out = nullptr;
    arcall::server::ServerOptions o;
    if (options->listen_addr) o.listen_addr = options->listen_addr;
    if (options->ws_addr) o.ws_addr = options->ws_addr;
    if (options->store_dir) o.store_dir = options->store_dir;
    if (options->static_dir) o.static_dir = options->static_dir;
    o.glasses_fraction = options->glasses_fraction;
    if (options->log_level) {
      auto lvl = arcall::server::parse_log_level(options->log_level);
      if (!lvl) return err(ARCALL_E_INVALID_ARGUMENT, std::string("unknown log level '") + options->log_level + "'");
      o.log_level = *lvl;
    }
    auto s = arcall::server::Server::create(std::move(o));
    if (!s) {
      using C = arcall::server::ServerError::Code;
      switch (s.error().code) {
        case C::CorruptStore: return err(ARCALL_E_CORRUPT_STORE, s.error().detail);
        case C::Io: return err(ARCALL_E_IO, s.error().detail);
        default: return err(ARCALL_E_INVALID_ARGUMENT, s.error().detail);
      }
    }
    *out = new arcall_server{std::move(*s)};
    return ok();
  });
}

arcall_status arcall_server_start(arcall_server* server) {
  return guarded([&] {
    if (!server) return err(ARCALL_E_INVALID_ARGUMENT, "server is NULL");
    auto r = server->server->start();
    return r ? ok() : err(ARCALL_E_BIND, r.error().detail);
  });
}

uint16_t arcall_server_tcp_port(const arcall_server* server) { return server ? server->server->tcp_port() : 0; }
uint16_t arcall_server_ws_port(const arcall_server* server) { return server ? server->server->ws_port() : 0; }

void arcall_server_wait(arcall_server* server) {
  if (server) server->server->wait();
}

void arcall_server_stop(arcall_server* server) {
  if (server) server->server->stop();
}

void arcall_server_destroy(arcall_server* server) { delete server; }

// --- sim ---

void arcall_sim_options_init(arcall_sim_options* o) {
  if (!o) return;
  arcall::sim::NetworkModel n;
  o->seed = n.seed;
  o->base_delay_ms = n.base_delay_ms;
  o->jitter_ms = n.jitter_ms;
  o->processing_ms = n.processing_ms;
  o->initial_temp_c = std::numeric_limits<double>::quiet_NaN();
  o->ambient_c = 25.0;
  o->heat_c_per_s = 0.35;
  o->cool_c_per_s = 0.2;
  o->cutoff_c = 55.0;
}

arcall_status arcall_sim_run(const char* scenario_json, const arcall_sim_options* options, char** log_jsonl) {
  return guarded([&] {
    if (!scenario_json || !log_jsonl) return err(ARCALL_E_INVALID_ARGUMENT, "scenario_json and log_jsonl are required");
    arcall_sim_options o;
    arcall_sim_options_init(&o);
    if (options) o = *options;
    auto sc = arcall::sim::parse_scenario(scenario_json);
    if (!sc) return sim_error(sc.error());
    auto thermal = arcall::sim::thermal_from_celsius(o.ambient_c, o.heat_c_per_s, o.cool_c_per_s, o.cutoff_c);
    if (!std::isnan(o.initial_temp_c)) thermal.temp_mc = std::llround(o.initial_temp_c * 1000.0);
    auto log = arcall::sim::run_scenario(*sc, network_of(o), thermal);
    if (!log) return sim_error(log.error());
    *log_jsonl = dup_string(log->to_jsonl());
    return ok();
  });
}

arcall_status arcall_sim_metrics(const char* log_text, char** report_json) {
  return guarded([&] {
    if (!log_text || !report_json) return err(ARCALL_E_INVALID_ARGUMENT, "log and report_json are required");
    auto log = arcall::sim::EventLog::from_jsonl(log_text);
    if (!log) return sim_error(log.error());
    auto m = arcall::sim::compute_metrics(*log);
    if (!m) return sim_error(m.error());
    *report_json = dup_string(m->to_json().dump(2));
    return ok();
  });
}

arcall_status arcall_sim_latency(const char* log_text, double budget_ms, char** report_json) {
  return guarded([&] {
    if (!log_text || !report_json) return err(ARCALL_E_INVALID_ARGUMENT, "log and report_json are required");
    auto log = arcall::sim::EventLog::from_jsonl(log_text);
    if (!log) return sim_error(log.error());
    *report_json = dup_string(arcall::sim::latency_breakdown(*log, budget_ms).to_json().dump(2));
    return ok();
  });
}

double arcall_sim_analytic_e2e_median_ms(const arcall_sim_options* options) {
  arcall_sim_options o;
  arcall_sim_options_init(&o);
  if (options) o = *options;
  return arcall::sim::analytic_e2e_median_ms(network_of(o));
}

// --- protocol ---

arcall_status arcall_encode_json(const char* message_json, uint8_t** bytes, size_t* len) {
  return guarded([&] {
    if (!message_json || !bytes || !len) return err(ARCALL_E_INVALID_ARGUMENT, "message_json, bytes and len are required");
    auto msg = proto::from_json(message_json);
    if (!msg) return err(ARCALL_E_DECODE, std::string(proto::to_string(msg.error().code)) + ": " + msg.error().detail);
    auto enc = proto::encode(*msg);
    *bytes = dup_bytes(enc);
    *len = enc.size();
    return ok();
  });
}

arcall_status arcall_decode(const uint8_t* bytes, size_t len, char** message_json, size_t* consumed) {
  return guarded([&] {
    if ((!bytes && len) || !message_json) return err(ARCALL_E_INVALID_ARGUMENT, "bytes and message_json are required");
    auto d = proto::decode(std::span<const std::uint8_t>(bytes, len));
    if (!d) return err(ARCALL_E_DECODE, std::string(proto::to_string(d.error().code)) + ": " + d.error().detail);
    *message_json = dup_string(proto::to_json(d->message, true));
    if (consumed) *consumed = d->consumed;
    return ok();
  });
}

// --- session / media ---

arcall_status arcall_validate_config(const char* text, char** normalized_json) {
  return guarded([&] {
    arcall::session::SessionConfig cfg;
    if (auto s = parse_config(text, cfg); s != ARCALL_OK) return s;
    if (normalized_json) *normalized_json = dup_string(config_json(cfg).dump());
    return ok();
  });
}

arcall_status arcall_blur_pgm(const uint8_t* pgm, size_t len, int level, uint8_t** out, size_t* out_len) {
  return guarded([&] {
    if (!pgm || !out || !out_len) return err(ARCALL_E_INVALID_ARGUMENT, "pgm, out and out_len are required");
    if (level < 0 || level > 10) return err(ARCALL_E_INVALID_ARGUMENT, "blur level must be in 0..10");
    auto frame = arcall::media::from_pgm(std::span<const std::uint8_t>(pgm, len));
    if (!frame) return err(ARCALL_E_DECODE, frame.error());
    auto bytes = arcall::media::to_pgm(arcall::media::blur_frame(*frame, arcall::media::BlurLevel{level}));
    *out = dup_bytes(bytes);
    *out_len = bytes.size();
    return ok();
  });
}

arcall_status arcall_view_mismatch(const char* content_id, double anchor_x, double anchor_y, double glasses_fraction,
                                   double* out) {
  return guarded([&] {
    if (!content_id || !out) return err(ARCALL_E_INVALID_ARGUMENT, "content_id and out are required");
    arcall::media::FovModel fov{glasses_fraction};
    if (!fov.valid()) return err(ARCALL_E_INVALID_ARGUMENT, "glasses fraction must be in (0, 1]");
    arcall::catalog::Catalog cat(arcall::catalog::builtin_catalog());
    const auto* item = cat.find(content_id);
    if (!item) return err(ARCALL_E_UNKNOWN_CONTENT, std::string("unknown content '") + content_id + "'");
    *out = arcall::media::view_mismatch(*item, {anchor_x, anchor_y}, fov);
    return ok();
  });
}

}  // extern "C"
