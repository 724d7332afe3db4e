// SPDX-License-Identifier: Apache-2.0

#include "sim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <queue>
#include <set>
#include <sstream>

#include "catalog.hpp"
#include "protocol.hpp"
#include "relay.hpp"

namespace arcall::sim {

using nlohmann::json;
namespace proto = arcall::protocol;

// --- rng / network / thermal ------------------------------------------------------

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

Rng::Rng(std::uint64_t seed) : state_(splitmix64(seed)) {
  if (state_ == 0) state_ = 0x9E3779B97F4A7C15ull;
}

std::uint64_t Rng::next() {
  state_ ^= state_ >> 12;
  state_ ^= state_ << 25;
  state_ ^= state_ >> 27;
  return state_ * 0x2545F4914F6CDD1Dull;
}

std::int64_t Rng::uniform_int(std::int64_t lo, std::int64_t hi) {
  const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
  return lo + static_cast<std::int64_t>(next() % span);
}

Millis DelaySampler::sample() {
  Millis jitter = model_.jitter_ms > 0 ? rng_.uniform_int(-model_.jitter_ms, model_.jitter_ms) : 0;
  return std::max<Millis>(0, model_.base_delay_ms + jitter);
}

ThermalState thermal_from_celsius(double ambient_c, double heat_c_per_s, double cool_c_per_s,
                                  double cutoff_c) {
  auto mc = [](double c) { return static_cast<std::int64_t>(std::llround(c * 1000.0)); };
  ThermalState s;
  s.ambient_mc = mc(ambient_c);
  s.temp_mc = s.ambient_mc;
  s.heat_rate_mc_per_s = mc(heat_c_per_s);
  s.cool_rate_mc_per_s = mc(cool_c_per_s);
  s.cutoff_mc = mc(cutoff_c);
  return s;
}

ThermalState thermal_step(const ThermalState& state, std::int64_t dt_s, bool streaming) {
  ThermalState next = state;
  if (dt_s <= 0) return next;
  if (streaming)
    next.temp_mc += state.heat_rate_mc_per_s * dt_s;
  else
    next.temp_mc = std::max(state.ambient_mc, state.temp_mc - state.cool_rate_mc_per_s * dt_s);
  return next;
}

std::string SimError::message() const {
  return std::string(code == SimErrorCode::ScenarioInvalid ? "ScenarioInvalid: " : "MalformedLog: ") + detail;
}

// --- scenario parsing -------------------------------------------------------------

namespace {

SimError invalid(std::string detail) { return {SimErrorCode::ScenarioInvalid, std::move(detail)}; }
SimError malformed(std::string detail) { return {SimErrorCode::MalformedLog, std::move(detail)}; }

const std::set<std::string>& known_actions() {
  static const std::set<std::string> k = {"start", "drop_in", "project", "reposition", "tap",
                                          "mute", "end", "end_dropin", "connect", "disconnect"};
  return k;
}

}  // namespace

Result<Scenario, SimError> parse_scenario(std::string_view json_text) {
  json j = json::parse(json_text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) return fail(invalid("scenario must be a JSON object"));
  Scenario sc;
  try {
    std::set<std::string> ids;
    for (const auto& a : j.value("actors", json::array())) {
      Actor actor;
      actor.id = a.at("id").get<std::string>();
      actor.role = a.at("role").get<std::string>();
      actor.online = a.value("online", true);
      actor.token = a.value("token", std::string{});
      if (actor.id.empty()) return fail(invalid("actor id must be non-empty"));
      if (actor.role != "wearer" && actor.role != "friend")
        return fail(invalid("actor '" + actor.id + "' has unknown role '" + actor.role + "'"));
      if (!ids.insert(actor.id).second) return fail(invalid("duplicate actor '" + actor.id + "'"));
      sc.actors.push_back(std::move(actor));
    }
    for (const auto& f : j.value("friendships", json::array())) {
      if (!f.is_array() || f.size() != 2) return fail(invalid("friendships entries are [a, b] pairs"));
      sc.friendships.emplace_back(f[0].get<std::string>(), f[1].get<std::string>());
    }
    if (auto m = j.find("media"); m != j.end()) {
      sc.media.frame_interval_ms = m->value("frame_interval_ms", sc.media.frame_interval_ms);
      sc.media.frame_width = m->value("frame_width", sc.media.frame_width);
      sc.media.frame_height = m->value("frame_height", sc.media.frame_height);
      sc.media.audio_interval_ms = m->value("audio_interval_ms", sc.media.audio_interval_ms);
      sc.media.audio_bytes = m->value("audio_bytes", sc.media.audio_bytes);
      sc.media.when = m->value("when", sc.media.when);
      if (sc.media.when != "session" && sc.media.when != "dropin" && sc.media.when != "never")
        return fail(invalid("media.when must be session, dropin or never"));
      if (sc.media.frame_interval_ms <= 0 || sc.media.audio_interval_ms <= 0)
        return fail(invalid("media intervals must be positive"));
      if (sc.media.frame_width < 1 || sc.media.frame_height < 1 || sc.media.frame_width > 4096 ||
          sc.media.frame_height > 4096 || sc.media.audio_bytes < 0)
        return fail(invalid("media frame/audio sizes out of range"));
    }
    if (auto r = j.find("relay"); r != j.end()) {
      sc.timer_sync_interval_ms = r->value("timer_sync_interval_ms", sc.timer_sync_interval_ms);
      sc.glasses_fraction = r->value("glasses_fraction", sc.glasses_fraction);
    }
    if (j.contains("until_ms")) sc.until_ms = j.at("until_ms").get<Millis>();

    Millis last = 0;
    for (const auto& a : j.value("actions", json::array())) {
      if (!a.is_object()) return fail(invalid("actions must be objects"));
      Action act;
      act.at = a.at("at").get<Millis>();
      act.actor = a.at("actor").get<std::string>();
      act.action = a.at("action").get<std::string>();
      act.params = a;
      if (act.at < 0) return fail(invalid("action time must be >= 0"));
      if (act.at < last) return fail(invalid("action times must be nondecreasing (at " + std::to_string(act.at) + ")"));
      last = act.at;
      if (!ids.count(act.actor)) return fail(invalid("unknown actor '" + act.actor + "'"));
      if (!known_actions().count(act.action)) return fail(invalid("unknown action '" + act.action + "'"));
      sc.actions.push_back(std::move(act));
    }
  } catch (const json::exception& e) {
    return fail(invalid(e.what()));
  }
  return sc;
}

Result<Scenario, SimError> load_scenario(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return fail(invalid("cannot open " + path));
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

std::string EventLog::to_jsonl() const {
  std::string out;
  for (const auto& e : entries) {
    out += e.dump(-1, ' ', false, json::error_handler_t::replace);
    out += '\n';
  }
  return out;
}

Result<EventLog, SimError> EventLog::from_jsonl(std::string_view text) {
  EventLog log;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() : nl + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) return fail(malformed("line " + std::to_string(line_no) + " is not a JSON object"));
    if (!j.contains("ev") || !j["ev"].is_string()) return fail(malformed("line " + std::to_string(line_no) + " lacks 'ev'"));
    if (!j.contains("t") || !j["t"].is_number_integer()) return fail(malformed("line " + std::to_string(line_no) + " lacks integer 't'"));
    log.entries.push_back(std::move(j));
  }
  return log;
}

// --- simulation engine --------------------------------------------------------------

namespace {

struct ThermalTick {};
struct ActionEv {
  std::size_t index;
};
struct ToServer {
  std::size_t bot;
  proto::Message msg;
  Millis sent;
  Millis origin;
};
struct Process {
  std::size_t bot;
  proto::Message msg;
  Millis origin;
};
struct ToBot {
  std::size_t bot;
  proto::Message msg;
  Millis sent;
  Millis origin;
};
struct RelayTick {};
struct MediaTick {
  std::size_t bot;
  bool frame;
};

using Payload = std::variant<ThermalTick, ActionEv, ToServer, Process, ToBot, RelayTick, MediaTick>;

struct Event {
  Millis t;
  int prio;
  std::uint64_t seq;
  Payload payload;
};

struct Later {
  bool operator()(const Event& a, const Event& b) const {
    if (a.t != b.t) return a.t > b.t;
    if (a.prio != b.prio) return a.prio > b.prio;
    return a.seq > b.seq;
  }
};

struct Bot {
  Actor actor;
  relay::ConnId conn = 0;
  bool online = false;
  std::string session;
  std::string dropin;
  bool session_live = false;
  bool dropin_active = false;
  bool muted = false;
  std::int64_t audio_seq = 0;
  std::int64_t frame_no = 0;
  Millis up_last = 0;
  Millis down_last = 0;
};

class Engine {
 public:
  Engine(const Scenario& sc, const NetworkModel& net, const ThermalState& thermal)
      : sc_(sc), net_(net), sampler_(net), thermal_(thermal), relay_(make_relay(sc)) {}

  EventLog run();

 private:
  static relay::Relay make_relay(const Scenario& sc) {
    relay::StoreData store;
    for (const auto& [a, b] : sc.friendships) store.friendships.add(a, b);
    for (const auto& a : sc.actors)
      if (!a.token.empty()) store.tokens[a.id] = a.token;
    relay::RelayOptions opts;
    opts.timer_sync_interval_ms = sc.timer_sync_interval_ms;
    opts.fov.glasses_fraction = sc.glasses_fraction;
    return relay::Relay(opts, std::move(store), catalog::Catalog(catalog::builtin_catalog()));
  }

  void push(Millis t, int prio, Payload p) { queue_.push(Event{t, prio, seq_++, std::move(p)}); }

  void log(json entry) { log_.entries.push_back(std::move(entry)); }

  void send_up(std::size_t b, proto::Message msg, Millis now, Millis origin);
  void apply_output(relay::Output&& out, Millis now, std::optional<Millis> audio_origin);
  void schedule_tick();
  void connect(std::size_t b, Millis now);
  void do_action(const Action& a, Millis now);
  void on_bot_receive(Bot& bot, const proto::Message& msg);
  bool wants_media(const Bot& bot, bool frame) const;
  bool idle() const;

  const Scenario& sc_;
  NetworkModel net_;
  DelaySampler sampler_;
  ThermalState thermal_;
  bool over_cutoff_ = false;
  relay::Relay relay_;
  std::vector<Bot> bots_;
  std::map<relay::ConnId, std::size_t> by_conn_;
  std::priority_queue<Event, std::vector<Event>, Later> queue_;
  std::uint64_t seq_ = 0;
  std::set<Millis> ticks_;
  Millis ticked_at_ = -1;
  EventLog log_;
  std::size_t pending_actions_ = 0;
  std::size_t in_flight_ = 0;
  std::int64_t active_dropins_ = 0;
  std::uint64_t sent_ = 0, delivered_ = 0, lost_ = 0;
};

json body_json(const proto::Message& msg) { return json::parse(proto::to_json(msg)); }

std::string dropin_of(const proto::Message& msg) {
  return std::visit(
      [](const auto& m) -> std::string {
        if constexpr (requires { m.dropin_id; }) return m.dropin_id;
        else return {};
      },
      msg);
}

void Engine::send_up(std::size_t b, proto::Message msg, Millis now, Millis origin) {
  Bot& bot = bots_[b];
  if (!bot.online) return;
  Millis arrive = now + sampler_.sample();
  // Control rides an ordered stream; media is loss-tolerant datagrams.
  if (!proto::is_media(msg)) {
    arrive = std::max(arrive, bot.up_last);
    bot.up_last = arrive;
  }
  ++in_flight_;
  ++sent_;
  push(arrive, 1, ToServer{b, std::move(msg), now, origin});
}

void Engine::apply_output(relay::Output&& out, Millis now, std::optional<Millis> audio_origin) {
  for (auto& ev : out.events) {
    if (ev.kind == relay::EventKind::DropInStarted) ++active_dropins_;
    if (ev.kind == relay::EventKind::DropInEnded) --active_dropins_;
    json e{{"ev", std::string(relay::to_string(ev.kind))}, {"t", ev.at}};
    if (!ev.session_id.empty()) e["session"] = ev.session_id;
    if (!ev.dropin_id.empty()) e["dropin"] = ev.dropin_id;
    if (!ev.detail.empty()) e["detail"] = ev.detail;
    if (ev.value != 0) e["value"] = ev.value;
    log(std::move(e));
  }
  for (auto& o : out.messages) {
    auto it = by_conn_.find(o.to);
    if (it == by_conn_.end()) continue;
    Bot& bot = bots_[it->second];
    Millis origin = now;
    if (auto* f = std::get_if<proto::FrameChunk>(&o.message)) origin = f->captured_at;
    if (std::holds_alternative<proto::AudioChunk>(o.message) && audio_origin) origin = *audio_origin;
    Millis arrive = now + sampler_.sample();
    if (!proto::is_media(o.message)) {
      arrive = std::max(arrive, bot.down_last);
      bot.down_last = arrive;
    }
    ++in_flight_;
    ++sent_;
    push(arrive, 1, ToBot{it->second, std::move(o.message), now, origin});
  }
  for (auto c : out.close) {
    auto it = by_conn_.find(c);
    if (it != by_conn_.end()) bots_[it->second].online = false;
  }
}

void Engine::schedule_tick() {
  auto nd = relay_.next_deadline();
  if (!nd) return;
  // A deadline the relay failed to clear at the last tick must not spin the loop.
  Millis at = *nd <= ticked_at_ ? ticked_at_ + 1 : *nd;
  if (!ticks_.count(at)) {
    ticks_.insert(at);
    push(at, 1, RelayTick{});
  }
}

void Engine::connect(std::size_t b, Millis now) {
  Bot& bot = bots_[b];
  bot.online = true;
  auto role = *relay::parse_role(bot.actor.role);
  log(json{{"ev", "connect"}, {"t", now}, {"actor", bot.actor.id}});
  apply_output(relay_.connect(bot.conn, bot.actor.id, role, bot.actor.token, now), now, std::nullopt);
}

void Engine::do_action(const Action& a, Millis now) {
  auto it = std::find_if(bots_.begin(), bots_.end(), [&](const Bot& b) { return b.actor.id == a.actor; });
  const std::size_t b = static_cast<std::size_t>(it - bots_.begin());
  Bot& bot = *it;
  log(json{{"ev", "action"}, {"t", now}, {"actor", a.actor}, {"action", a.action}});

  const json& p = a.params;
  auto dropin = bot.dropin.empty() ? std::string("none") : bot.dropin;
  if (a.action == "connect") {
    if (!bot.online) connect(b, now);
    return;
  }
  if (a.action == "disconnect") {
    if (bot.online) {
      bot.online = false;
      log(json{{"ev", "disconnect"}, {"t", now}, {"actor", bot.actor.id}});
      apply_output(relay_.disconnect(bot.conn, now), now, std::nullopt);
    }
    return;
  }
  if (!bot.online) {
    log(json{{"ev", "action_skipped"}, {"t", now}, {"actor", a.actor}, {"action", a.action}});
    return;
  }

  if (a.action == "start") {
    proto::StartArcall s;
    s.friend_id = p.value("friend", std::string{});
    if (p.contains("arcall_duration_s")) s.arcall_duration_s = p["arcall_duration_s"].get<std::int64_t>();
    if (p.contains("dropin_duration_s")) s.dropin_duration_s = p["dropin_duration_s"].get<std::int64_t>();
    if (p.contains("blur_level")) s.blur_level = p["blur_level"].get<std::int64_t>();
    if (p.contains("presence_indicator")) s.presence_indicator = p["presence_indicator"].get<bool>();
    send_up(b, s, now, now);
  } else if (a.action == "drop_in") {
    std::string sid = p.value("session", bot.session.empty() ? std::string("none") : bot.session);
    send_up(b, proto::DropInRequest{sid}, now, now);
  } else if (a.action == "project") {
    send_up(b, proto::Project{dropin, p.value("content", std::string("dragon"))}, now, now);
  } else if (a.action == "reposition") {
    send_up(b, proto::Reposition{dropin, p.value("x", 0.5), p.value("y", 0.5)}, now, now);
  } else if (a.action == "tap") {
    send_up(b, proto::ExtendTap{dropin}, now, now);
  } else if (a.action == "mute") {
    bot.muted = p.value("muted", true);
    send_up(b, proto::MuteToggle{dropin, bot.muted}, now, now);
  } else if (a.action == "end") {
    send_up(b, proto::SessionEnd{bot.session.empty() ? std::string("none") : bot.session, "wearer"}, now, now);
  } else if (a.action == "end_dropin") {
    send_up(b, proto::DropInEnd{dropin, "hangup"}, now, now);
  }
}

void Engine::on_bot_receive(Bot& bot, const proto::Message& msg) {
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, proto::InviteNotify>) {
          bot.session = m.session_id;
          bot.session_live = true;
        } else if constexpr (std::is_same_v<T, proto::DropInGrant>) {
          bot.dropin = m.dropin_id;
          bot.dropin_active = true;
        } else if constexpr (std::is_same_v<T, proto::TimerSync>) {
          bot.dropin = m.dropin_id;
          bot.dropin_active = m.remaining_ms > 0;
        } else if constexpr (std::is_same_v<T, proto::DropInEnd>) {
          if (m.dropin_id == bot.dropin) bot.dropin_active = false;
        } else if constexpr (std::is_same_v<T, proto::SessionEnd>) {
          if (m.session_id == bot.session) {
            bot.session_live = false;
            bot.dropin_active = false;
          }
        }
      },
      msg);
}

bool Engine::wants_media(const Bot& bot, bool frame) const {
  if (!bot.online || sc_.media.when == "never") return false;
  if (frame && bot.actor.role != "wearer") return false;
  if (sc_.media.when == "dropin") return bot.dropin_active;
  return bot.session_live;
}

bool Engine::idle() const {
  return pending_actions_ == 0 && in_flight_ == 0 && !relay_.next_deadline();
}

EventLog Engine::run() {
  if (sc_.actions.empty() && !sc_.until_ms) return log_;

  for (const auto& a : sc_.actors) {
    Bot bot;
    bot.actor = a;
    bot.conn = bots_.size() + 1;
    by_conn_[bot.conn] = bots_.size();
    bots_.push_back(std::move(bot));
  }
  for (std::size_t i = 0; i < bots_.size(); ++i)
    if (bots_[i].actor.online) connect(i, 0);

  for (std::size_t i = 0; i < sc_.actions.size(); ++i) push(sc_.actions[i].at, 1, ActionEv{i});
  pending_actions_ = sc_.actions.size();
  push(1000, 0, ThermalTick{});
  for (std::size_t i = 0; i < bots_.size(); ++i) {
    push(sc_.media.frame_interval_ms, 1, MediaTick{i, true});
    push(sc_.media.audio_interval_ms, 1, MediaTick{i, false});
  }

  // Hard stop one day past the last scripted action.
  const Millis horizon = sc_.until_ms.value_or((sc_.actions.empty() ? 0 : sc_.actions.back().at) + 86'400'000);
  Millis now = 0;
  while (!queue_.empty()) {
    Event ev = queue_.top();
    if (ev.t > horizon) break;
    if (!sc_.until_ms && idle() && !std::holds_alternative<ActionEv>(ev.payload)) break;
    queue_.pop();
    now = ev.t;

    std::visit(
        [&](auto& p) {
          using T = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<T, ThermalTick>) {
            const bool streaming = active_dropins_ > 0;
            ThermalState before = thermal_;
            thermal_ = thermal_step(thermal_, 1, streaming);
            if (streaming || thermal_.temp_mc != before.temp_mc)
              log(json{{"ev", "thermal"}, {"t", now}, {"temp_mc", thermal_.temp_mc}, {"streaming", streaming}});
            if (!over_cutoff_ && thermal_.temp_mc >= thermal_.cutoff_mc) {
              over_cutoff_ = true;
              log(json{{"ev", "thermal_cutoff"}, {"t", now}, {"temp_mc", thermal_.temp_mc}});
            } else if (thermal_.temp_mc < thermal_.cutoff_mc) {
              over_cutoff_ = false;
            }
            push(now + 1000, 0, ThermalTick{});
          } else if constexpr (std::is_same_v<T, ActionEv>) {
            --pending_actions_;
            do_action(sc_.actions[p.index], now);
          } else if constexpr (std::is_same_v<T, ToServer>) {
            Bot& bot = bots_[p.bot];
            ++delivered_;
            json e{{"ev", "msg"},        {"t", now},       {"from", bot.actor.id},
                   {"to", "server"},     {"sent", p.sent}, {"deliver", now},
                   {"origin", p.origin}, {"type", std::string(proto::type_name(proto::type_of(p.msg)))},
                   {"body", body_json(p.msg)}};
            log(std::move(e));
            push(now + net_.processing_ms, 1, Process{p.bot, std::move(p.msg), p.origin});
          } else if constexpr (std::is_same_v<T, Process>) {
            --in_flight_;
            Bot& bot = bots_[p.bot];
            std::optional<Millis> audio_origin;
            if (std::holds_alternative<proto::AudioChunk>(p.msg)) audio_origin = p.origin;
            apply_output(relay_.handle(bot.conn, p.msg, now), now, audio_origin);
          } else if constexpr (std::is_same_v<T, ToBot>) {
            --in_flight_;
            Bot& bot = bots_[p.bot];
            json e{{"ev", "msg"},        {"t", now},       {"from", "server"},
                   {"to", bot.actor.id}, {"sent", p.sent}, {"deliver", now},
                   {"origin", p.origin}, {"type", std::string(proto::type_name(proto::type_of(p.msg)))},
                   {"body", body_json(p.msg)}};
            if (auto d = dropin_of(p.msg); !d.empty()) e["dropin"] = d;
            if (!bot.online) {
              ++lost_;
              e["ev"] = "lost_offline";
              log(std::move(e));
              return;
            }
            ++delivered_;
            log(std::move(e));
            on_bot_receive(bot, p.msg);
          } else if constexpr (std::is_same_v<T, RelayTick>) {
            ticks_.erase(now);
            ticked_at_ = now;
            apply_output(relay_.tick(now), now, std::nullopt);
          } else if constexpr (std::is_same_v<T, MediaTick>) {
            Bot& bot = bots_[p.bot];
            if (wants_media(bot, p.frame)) {
              if (p.frame) {
                const int w = sc_.media.frame_width, h = sc_.media.frame_height;
                proto::Bytes px(static_cast<std::size_t>(w) * h);
                for (int y = 0; y < h; ++y)
                  for (int x = 0; x < w; ++x)
                    px[static_cast<std::size_t>(y) * w + x] =
                        static_cast<std::uint8_t>((x * 7 + y * 13 + bot.frame_no * 3) & 0xFF);
                ++bot.frame_no;
                send_up(p.bot, proto::FrameChunk{bot.dropin.empty() ? "none" : bot.dropin, now, w, h, 0, std::move(px)},
                        now, now);
              } else {
                proto::Bytes pcm(static_cast<std::size_t>(sc_.media.audio_bytes),
                                 static_cast<std::uint8_t>(bot.audio_seq & 0xFF));
                send_up(p.bot, proto::AudioChunk{bot.dropin.empty() ? "none" : bot.dropin, bot.audio_seq++,
                                                 bot.actor.id, std::move(pcm)},
                        now, now);
              }
            }
            push(now + (p.frame ? sc_.media.frame_interval_ms : sc_.media.audio_interval_ms), 1, p);
          }
        },
        ev.payload);
    schedule_tick();
  }

  const auto& st = relay_.stats();
  log(json{{"ev", "summary"},
           {"t", now},
           {"sent", sent_},
           {"delivered", delivered_},
           {"lost_offline", lost_},
           {"in_flight", in_flight_},
           {"frames_relayed", st.frames_relayed},
           {"frames_dropped", st.frames_dropped},
           {"audio_relayed", st.audio_relayed},
           {"audio_dropped", st.audio_dropped},
           {"control_dropped", st.control_dropped},
           {"final_temp_mc", thermal_.temp_mc}});
  return log_;
}

template <class T>
std::optional<double> percentile(std::vector<T> v, double p) {
  if (v.empty()) return std::nullopt;
  std::sort(v.begin(), v.end());
  auto rank = static_cast<std::size_t>(std::ceil(p * static_cast<double>(v.size())));
  if (rank == 0) rank = 1;
  return static_cast<double>(v[rank - 1]);
}

}  // namespace

Result<EventLog, SimError> run_scenario(const Scenario& scenario, const NetworkModel& network,
                                        const ThermalState& thermal) {
  if (network.base_delay_ms < 0 || network.jitter_ms < 0 || network.processing_ms < 0)
    return fail(invalid("network delays must be >= 0"));
  if (!thermal.valid()) return fail(invalid("thermal state must have ambient <= temp and rates >= 0"));
  Millis last = 0;
  for (const auto& a : scenario.actions) {
    if (a.at < last) return fail(invalid("action times must be nondecreasing"));
    last = a.at;
    if (std::none_of(scenario.actors.begin(), scenario.actors.end(),
                     [&](const Actor& x) { return x.id == a.actor; }))
      return fail(invalid("unknown actor '" + a.actor + "'"));
  }
  Engine engine(scenario, network, thermal);
  return engine.run();
}

// --- metrics ----------------------------------------------------------------------

template <class T>
std::optional<T> lower_median(std::vector<T> values) {
  if (values.empty()) return std::nullopt;
  std::sort(values.begin(), values.end());
  return values[(values.size() - 1) / 2];
}

template std::optional<double> lower_median(std::vector<double>);
template std::optional<std::int64_t> lower_median(std::vector<std::int64_t>);

json MetricsReport::to_json() const {
  json j{{"dropin_durations_s", dropin_durations_s},
         {"contents_per_dropin", contents_per_dropin},
         {"total_contents", total_contents},
         {"total_extensions", total_extensions},
         {"media_dropped", media_dropped}};
  j["median_dropin_s"] = median_dropin_s ? json(*median_dropin_s) : json(nullptr);
  j["median_contents_per_dropin"] = median_contents_per_dropin ? json(*median_contents_per_dropin) : json(nullptr);
  j["p50_latency_ms"] = p50_latency_ms ? json(*p50_latency_ms) : json(nullptr);
  j["peak_temp_c"] = peak_temp_c ? json(*peak_temp_c) : json(nullptr);
  return j;
}

Result<MetricsReport, SimError> compute_metrics(const EventLog& log) {
  MetricsReport r;
  std::map<std::string, Millis> starts;
  std::vector<std::string> order;
  std::map<std::string, Millis> ends;
  std::map<std::string, std::int64_t> contents;
  std::vector<std::int64_t> latencies;
  std::optional<std::int64_t> peak_mc;

  try {
    for (const auto& e : log.entries) {
      if (!e.is_object() || !e.contains("ev") || !e.contains("t")) return fail(malformed("entry without ev/t"));
      const std::string ev = e.at("ev").get<std::string>();
      const Millis t = e.at("t").get<Millis>();
      if (ev == "dropin_start") {
        const auto id = e.at("dropin").get<std::string>();
        if (starts.count(id)) return fail(malformed("drop-in '" + id + "' started twice"));
        starts[id] = t;
        order.push_back(id);
        contents[id] = 0;
      } else if (ev == "dropin_end") {
        const auto id = e.at("dropin").get<std::string>();
        if (!starts.count(id)) return fail(malformed("drop-in '" + id + "' ended without start"));
        if (ends.count(id)) return fail(malformed("drop-in '" + id + "' ended twice"));
        if (t < starts[id]) return fail(malformed("drop-in '" + id + "' ends before it starts"));
        ends[id] = t;
      } else if (ev == "project") {
        const auto id = e.at("dropin").get<std::string>();
        if (!starts.count(id)) return fail(malformed("projection for unknown drop-in '" + id + "'"));
        ++contents[id];
        ++r.total_contents;
      } else if (ev == "extend") {
        ++r.total_extensions;
      } else if (ev == "media_dropped") {
        ++r.media_dropped;
      } else if (ev == "thermal") {
        auto mc = e.at("temp_mc").get<std::int64_t>();
        if (!peak_mc || mc > *peak_mc) peak_mc = mc;
      } else if (ev == "msg") {
        const auto type = e.at("type").get<std::string>();
        if (type == "FrameChunk" || type == "AudioChunk")
          latencies.push_back(e.at("deliver").get<Millis>() - e.at("sent").get<Millis>());
      }
    }
  } catch (const json::exception& ex) {
    return fail(malformed(ex.what()));
  }

  for (const auto& id : order) {
    auto end = ends.find(id);
    if (end == ends.end()) continue;  // still running when the log stopped
    r.dropin_durations_s.push_back(static_cast<double>(end->second - starts[id]) / 1000.0);
    r.contents_per_dropin.push_back(contents[id]);
  }
  r.median_dropin_s = lower_median(r.dropin_durations_s);
  r.median_contents_per_dropin = lower_median(r.contents_per_dropin);
  if (auto m = lower_median(latencies)) r.p50_latency_ms = static_cast<double>(*m);
  if (peak_mc) r.peak_temp_c = static_cast<double>(*peak_mc) / 1000.0;
  return r;
}

json LatencyReport::to_json() const {
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  return json{{"samples", samples},
              {"e2e_p50_ms", opt(e2e_p50_ms)},
              {"e2e_p95_ms", opt(e2e_p95_ms)},
              {"uplink_p50_ms", opt(uplink_p50_ms)},
              {"downlink_p50_ms", opt(downlink_p50_ms)},
              {"processing_p50_ms", opt(processing_p50_ms)},
              {"budget_ms", budget_ms},
              {"within_budget", within_budget}};
}

LatencyReport latency_breakdown(const EventLog& log, double budget_ms) {
  std::vector<Millis> e2e, up, down, processing;
  std::map<Millis, Millis> uplink_arrival;  // captured_at -> arrival at server
  for (const auto& e : log.entries) {
    if (e.value("ev", "") != "msg" || e.value("type", "") != "FrameChunk") continue;
    const Millis sent = e.value("sent", Millis{0});
    const Millis deliver = e.value("deliver", Millis{0});
    const Millis origin = e.value("origin", Millis{0});
    if (e.value("to", "") == "server") {
      up.push_back(deliver - sent);
      uplink_arrival[origin] = deliver;
    } else {
      down.push_back(deliver - sent);
      e2e.push_back(deliver - origin);
      if (auto it = uplink_arrival.find(origin); it != uplink_arrival.end()) processing.push_back(sent - it->second);
    }
  }
  LatencyReport r;
  r.samples = e2e.size();
  r.budget_ms = budget_ms;
  r.e2e_p50_ms = percentile(e2e, 0.5);
  r.e2e_p95_ms = percentile(e2e, 0.95);
  r.uplink_p50_ms = percentile(up, 0.5);
  r.downlink_p50_ms = percentile(down, 0.5);
  r.processing_p50_ms = percentile(processing, 0.5);
  r.within_budget = r.e2e_p50_ms && *r.e2e_p50_ms <= budget_ms;
  return r;
}

double analytic_e2e_median_ms(const NetworkModel& model) {
  return 2.0 * static_cast<double>(model.base_delay_ms) + static_cast<double>(model.processing_ms);
}

}  // namespace arcall::sim
