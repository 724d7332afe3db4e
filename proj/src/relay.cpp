// SPDX-License-Identifier: Apache-2.0

#include "relay.hpp"

#include <algorithm>

namespace arcall::relay {

namespace proto = arcall::protocol;

std::string_view to_string(Role role) { return role == Role::Wearer ? "wearer" : "friend"; }

std::optional<Role> parse_role(std::string_view s) {
  if (s == "wearer") return Role::Wearer;
  if (s == "friend") return Role::Friend;
  return std::nullopt;
}

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::Connected: return "connected";
    case EventKind::Disconnected: return "disconnected";
    case EventKind::SessionStarted: return "session_start";
    case EventKind::SessionEnded: return "session_end";
    case EventKind::SessionExpired: return "session_expire";
    case EventKind::DropInStarted: return "dropin_start";
    case EventKind::DropInEnded: return "dropin_end";
    case EventKind::Projected: return "project";
    case EventKind::Repositioned: return "reposition";
    case EventKind::Extended: return "extend";
    case EventKind::Muted: return "mute";
    case EventKind::InviteQueued: return "invite_queued";
    case EventKind::InviteDelivered: return "invite_delivered";
    case EventKind::MediaDropped: return "media_dropped";
    case EventKind::ControlDropped: return "control_dropped";
    case EventKind::Rejected: return "rejected";
  }
  return "unknown";
}

void Output::append(Output&& other) {
  messages.insert(messages.end(), std::make_move_iterator(other.messages.begin()),
                  std::make_move_iterator(other.messages.end()));
  events.insert(events.end(), std::make_move_iterator(other.events.begin()),
                std::make_move_iterator(other.events.end()));
  close.insert(close.end(), other.close.begin(), other.close.end());
}

Relay::Relay(RelayOptions options, StoreData store, catalog::Catalog catalog)
    : options_(options), store_(std::move(store)), catalog_(std::move(catalog)) {}

bool Relay::take_store_dirty() {
  bool d = store_dirty_;
  store_dirty_ = false;
  return d;
}

std::optional<SessionView> Relay::find_session(const SessionId& id) const {
  auto it = sessions_.find(id);
  if (it == sessions_.end()) return std::nullopt;
  const auto& r = it->second;
  return SessionView{r.session, r.dropins, r.projection, r.friend_muted};
}

std::optional<SessionId> Relay::current_session(const UserId& wearer) const {
  auto it = wearer_current_.find(wearer);
  if (it == wearer_current_.end()) return std::nullopt;
  return it->second;
}

// --- plumbing ---------------------------------------------------------------

void Relay::emit(Output& out, EventKind kind, Millis at, const SessionRecord* rec,
                 std::string dropin_id, std::string detail, std::int64_t value) {
  out.events.push_back(RelayEvent{kind, at, rec ? rec->session.id : std::string{},
                                  std::move(dropin_id), std::move(detail), value});
}

void Relay::send(Output& out, const UserId& user, Role role, proto::Message msg, Millis now,
                 const std::string& session_id) {
  auto it = by_endpoint_.find({user, role});
  if (it != by_endpoint_.end()) {
    if (std::holds_alternative<proto::FrameChunk>(msg)) ++stats_.frames_relayed;
    if (std::holds_alternative<proto::AudioChunk>(msg)) ++stats_.audio_relayed;
    out.messages.push_back({it->second, std::move(msg)});
    return;
  }
  const auto type = proto::type_name(proto::type_of(msg));
  auto* invite = std::get_if<proto::InviteNotify>(&msg);
  if (invite && role == Role::Friend) {
    pending_invites_[user].push_back(*invite);
    out.events.push_back({EventKind::InviteQueued, now, invite->session_id, {}, user, 0});
  } else if (proto::is_media(msg)) {
    if (std::holds_alternative<proto::FrameChunk>(msg)) ++stats_.frames_dropped;
    else ++stats_.audio_dropped;
    out.events.push_back({EventKind::MediaDropped, now, session_id, {}, std::string(type) + ":peer_offline", 0});
  } else {
    ++stats_.control_dropped;
    out.events.push_back({EventKind::ControlDropped, now, session_id, {},
                          std::string(type) + ":" + user + "/" + std::string(to_string(role)) + " offline", 0});
  }
}

void Relay::send_both(Output& out, const SessionRecord& rec, const proto::Message& msg, Millis now) {
  send(out, rec.session.friend_id, Role::Friend, msg, now, rec.session.id);
  send(out, rec.session.wearer, Role::Wearer, msg, now, rec.session.id);
}

void Relay::reply_error(Output& out, ConnId conn, std::string code, std::string detail) {
  ++stats_.errors_sent;
  out.messages.push_back({conn, proto::Error{std::move(code), std::move(detail)}});
}

session::DropInSession* Relay::active_dropin(SessionRecord& rec) {
  for (auto& d : rec.dropins)
    if (d.active()) return &d;
  return nullptr;
}

Relay::SessionRecord* Relay::wearer_session(const UserId& wearer) {
  auto it = wearer_current_.find(wearer);
  if (it == wearer_current_.end()) return nullptr;
  auto s = sessions_.find(it->second);
  return s == sessions_.end() ? nullptr : &s->second;
}

Relay::SessionRecord* Relay::session_for_dropin(const DropInId& id) {
  auto it = dropin_index_.find(id);
  if (it == dropin_index_.end()) return nullptr;
  auto s = sessions_.find(it->second);
  return s == sessions_.end() ? nullptr : &s->second;
}

void Relay::sync_timer(Output& out, SessionRecord& rec, const session::DropInSession& d, Millis now) {
  rec.last_sync = now;
  send_both(out, rec, proto::TimerSync{d.id, std::max<Millis>(0, d.ends_at - now)}, now);
}

void Relay::finish_dropin(Output& out, SessionRecord& rec, const session::ExpiryEvent& ev,
                          const std::string& cause, Millis now) {
  auto it = std::find_if(rec.dropins.begin(), rec.dropins.end(),
                         [&](const session::DropInSession& d) { return d.id == ev.subject; });
  std::int64_t duration = 0;
  std::int64_t extensions = 0;
  if (it != rec.dropins.end()) {
    duration = ev.at - it->started_at;
    extensions = it->extensions;
  }
  rec.projection = catalog::clear_on_dropin_end(rec.projection);
  rec.friend_muted = false;
  emit(out, EventKind::DropInEnded, ev.at, &rec, ev.subject,
       cause + ":extensions=" + std::to_string(extensions), duration);
  send_both(out, rec, proto::DropInEnd{ev.subject, cause}, now);
}

void Relay::finish_session(Output& out, SessionRecord& rec, EventKind kind, const std::string& cause,
                           Millis now) {
  rec.finished_at = now;
  auto cur = wearer_current_.find(rec.session.wearer);
  if (cur != wearer_current_.end() && cur->second == rec.session.id) wearer_current_.erase(cur);
  auto pend = pending_invites_.find(rec.session.friend_id);
  if (pend != pending_invites_.end()) {
    std::erase_if(pend->second, [&](const proto::InviteNotify& n) { return n.session_id == rec.session.id; });
    if (pend->second.empty()) pending_invites_.erase(pend);
  }
  emit(out, kind, now, &rec, {}, cause, rec.session.expires_at);
  send_both(out, rec, proto::SessionEnd{rec.session.id, cause}, now);
}

// --- connections --------------------------------------------------------------

Output Relay::connect(ConnId conn, const UserId& user, Role role, const std::string& token, Millis now) {
  Output out;
  if (user.empty()) {
    reply_error(out, conn, "BadHello", "empty user id");
    out.close.push_back(conn);
    emit(out, EventKind::Rejected, now, nullptr, {}, "empty user");
    return out;
  }
  if (auto tok = store_.tokens.find(user); tok != store_.tokens.end() && tok->second != token) {
    reply_error(out, conn, "BadToken", "token rejected for " + user);
    out.close.push_back(conn);
    emit(out, EventKind::Rejected, now, nullptr, {}, user);
    return out;
  }
  if (auto old = by_endpoint_.find({user, role}); old != by_endpoint_.end() && old->second != conn) {
    reply_error(out, old->second, "Replaced", "a newer connection took over");
    out.close.push_back(old->second);
    conns_.erase(old->second);
    by_endpoint_.erase(old);
  }
  if (auto prev = conns_.find(conn); prev != conns_.end()) {
    by_endpoint_.erase({prev->second.user, prev->second.role});
  }
  conns_[conn] = Endpoint{user, role, now};
  by_endpoint_[{user, role}] = conn;
  emit(out, EventKind::Connected, now, nullptr, {}, user + "/" + std::string(to_string(role)));

  if (role == Role::Friend) {
    auto pend = pending_invites_.find(user);
    if (pend != pending_invites_.end()) {
      auto invites = std::move(pend->second);
      pending_invites_.erase(pend);
      for (auto& inv : invites) {
        auto s = sessions_.find(inv.session_id);
        if (s == sessions_.end() || s->second.session.state != session::State::Active ||
            now >= s->second.session.expires_at)
          continue;
        out.events.push_back({EventKind::InviteDelivered, now, inv.session_id, {}, user, 0});
        out.messages.push_back({conn, std::move(inv)});
      }
    }
  }
  return out;
}

Output Relay::disconnect(ConnId conn, Millis now) {
  Output out;
  auto it = conns_.find(conn);
  if (it == conns_.end()) return out;
  emit(out, EventKind::Disconnected, now, nullptr, {},
       it->second.user + "/" + std::string(to_string(it->second.role)));
  auto ep = by_endpoint_.find({it->second.user, it->second.role});
  if (ep != by_endpoint_.end() && ep->second == conn) by_endpoint_.erase(ep);
  conns_.erase(it);
  return out;
}

// --- message handling -----------------------------------------------------------

Output Relay::handle(ConnId conn, const proto::Message& msg, Millis now) {
  Output out = tick(now);

  auto it = conns_.find(conn);
  if (it == conns_.end()) {
    if (auto* hello = std::get_if<proto::Hello>(&msg)) {
      auto role = parse_role(hello->role);
      if (!role) {
        reply_error(out, conn, "BadHello", "unknown role '" + hello->role + "'");
        out.close.push_back(conn);
        return out;
      }
      out.append(connect(conn, hello->user, *role, hello->token, now));
    } else {
      reply_error(out, conn, "NotIdentified", "send Hello first");
    }
    return out;
  }
  it->second.last_seen = now;
  const Endpoint from = it->second;

  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, proto::Hello>) {
          reply_error(out, conn, "AlreadyIdentified", "connection already identified");
        } else if constexpr (std::is_same_v<T, proto::StartArcall>) {
          on_start(out, from, conn, m, now);
        } else if constexpr (std::is_same_v<T, proto::DropInRequest>) {
          if (from.role != Role::Friend) return reply_error(out, conn, "WrongRole", "DropInRequest is Friend-only");
          on_dropin_request(out, from, m, now);
        } else if constexpr (std::is_same_v<T, proto::FrameChunk>) {
          if (from.role != Role::Wearer) return reply_error(out, conn, "WrongRole", "FrameChunk is Wearer-only");
          on_frame(out, from, m, now);
        } else if constexpr (std::is_same_v<T, proto::AudioChunk>) {
          on_audio(out, from, m, now);
        } else if constexpr (std::is_same_v<T, proto::MuteToggle>) {
          if (from.role != Role::Friend) return reply_error(out, conn, "WrongRole", "MuteToggle is Friend-only");
          on_mute(out, from, conn, m, now);
        } else if constexpr (std::is_same_v<T, proto::Project>) {
          if (from.role != Role::Friend) return reply_error(out, conn, "WrongRole", "Project is Friend-only");
          on_project(out, from, conn, m, now);
        } else if constexpr (std::is_same_v<T, proto::Reposition>) {
          if (from.role != Role::Friend && !options_.wearer_can_reposition)
            return reply_error(out, conn, "WrongRole", "Reposition is Friend-only");
          on_reposition(out, from, conn, m, now);
        } else if constexpr (std::is_same_v<T, proto::ExtendTap>) {
          if (from.role != Role::Wearer) return reply_error(out, conn, "WrongRole", "ExtendTap is Wearer-only");
          on_extend(out, from, conn, m, now);
        } else if constexpr (std::is_same_v<T, proto::DropInEnd>) {
          on_dropin_end(out, from, conn, m, now);
        } else if constexpr (std::is_same_v<T, proto::SessionEnd>) {
          if (from.role != Role::Wearer) return reply_error(out, conn, "WrongRole", "SessionEnd is Wearer-only");
          on_session_end(out, from, conn, m, now);
        } else {
          reply_error(out, conn, "UnexpectedMessage",
                      std::string(proto::type_name(proto::type_of(msg))) + " is server-originated");
        }
      },
      msg);
  return out;
}

void Relay::on_start(Output& out, const Endpoint& from, ConnId conn, const proto::StartArcall& m, Millis now) {
  if (from.role != Role::Wearer) return reply_error(out, conn, "WrongRole", "StartArcall is Wearer-only");

  session::SessionConfig defaults;
  if (const auto* prefs = store_.preferences.get(from.user)) defaults = *prefs;
  session::RawConfig raw;
  raw.arcall_duration_s = m.arcall_duration_s.value_or(defaults.arcall_duration_s);
  raw.dropin_duration_s = m.dropin_duration_s.value_or(defaults.dropin_duration_s);
  raw.blur_level = m.blur_level.value_or(defaults.blur_level);
  raw.friend_id = m.friend_id.empty() ? defaults.friend_id : m.friend_id;
  raw.presence_indicator = m.presence_indicator.value_or(defaults.presence_indicator);
  raw.strict_extensions = defaults.strict_extensions;

  auto cfg = session::validate_config(raw);
  if (!cfg)
    return reply_error(out, conn, "InvalidConfig",
                       std::string(session::to_string(cfg.error().code)) + ": " + cfg.error().field);
  if (!store_.friendships.are_friends(from.user, cfg->friend_id))
    return reply_error(out, conn, "NotFriends", from.user + " and " + cfg->friend_id + " are not friends");

  if (SessionRecord* prev = wearer_session(from.user)) {
    auto evs = session::end_arcall(prev->session, prev->dropins, now);
    if (evs)
      for (const auto& ev : *evs) finish_dropin(out, *prev, ev, "session_ended", now);
    finish_session(out, *prev, EventKind::SessionEnded, "replaced", now);
  }

  SessionRecord rec;
  rec.session = session::start_arcall(*cfg, from.user, now, ids_);
  const SessionId id = rec.session.id;
  auto& stored = sessions_.emplace(id, std::move(rec)).first->second;
  wearer_current_[from.user] = id;

  if (const auto* prev = store_.preferences.get(from.user); !prev || !(*prev == *cfg)) {
    store_.preferences.set(from.user, *cfg);
    store_dirty_ = true;
  }

  emit(out, EventKind::SessionStarted, now, &stored, {}, stored.session.friend_id,
       stored.session.config.arcall_duration_s);
  const proto::InviteNotify invite{id, from.user, stored.session.expires_at};
  send(out, from.user, Role::Wearer, invite, now, id);
  send(out, stored.session.friend_id, Role::Friend, invite, now, id);
}

void Relay::on_dropin_request(Output& out, const Endpoint& from, const proto::DropInRequest& m, Millis now) {
  auto it = sessions_.find(m.session_id);
  if (it == sessions_.end() || it->second.session.friend_id != from.user) {
    send(out, from.user, Role::Friend, proto::DropInDeny{"NotInvited"}, now, m.session_id);
    return;
  }
  SessionRecord& rec = it->second;
  auto d = session::drop_in(rec.session, rec.dropins, now, ids_);
  if (!d) {
    auto err = d.error();
    std::string reason(session::to_string(err == session::SessionError::NotStarted
                                              ? session::SessionError::SessionExpired
                                              : err));
    send(out, from.user, Role::Friend, proto::DropInDeny{reason}, now, rec.session.id);
    return;
  }
  rec.dropins.push_back(std::move(d).value());
  const auto& dropin = rec.dropins.back();
  dropin_index_[dropin.id] = rec.session.id;
  rec.friend_muted = false;
  rec.projection = catalog::clear_on_dropin_end(rec.projection);

  emit(out, EventKind::DropInStarted, now, &rec, dropin.id, {}, dropin.duration_s * 1000);
  const proto::DropInGrant grant{dropin.id, dropin.ends_at, rec.session.config.presence_indicator};
  send(out, rec.session.friend_id, Role::Friend, grant, now, rec.session.id);
  if (rec.session.config.presence_indicator) send(out, rec.session.wearer, Role::Wearer, grant, now, rec.session.id);
  sync_timer(out, rec, dropin, now);
}

void Relay::on_frame(Output& out, const Endpoint& from, const proto::FrameChunk& m, Millis now) {
  SessionRecord* rec = wearer_session(from.user);
  session::DropInSession* d = rec ? active_dropin(*rec) : nullptr;
  if (!d) {
    ++stats_.frames_dropped;
    out.events.push_back({EventKind::MediaDropped, now, rec ? rec->session.id : std::string{}, {},
                          "FrameChunk:no_active_dropin", 0});
    return;
  }
  media::Frame frame{static_cast<int>(m.width), static_cast<int>(m.height), m.payload, m.captured_at};
  if (!frame.valid()) {
    ++stats_.frames_dropped;
    out.events.push_back({EventKind::MediaDropped, now, rec->session.id, d->id, "FrameChunk:invalid", 0});
    return;
  }
  const int level = rec->session.config.blur_level;
  media::Frame blurred = media::blur_frame(frame, media::BlurLevel{level});
  send(out, rec->session.friend_id, Role::Friend,
       proto::FrameChunk{d->id, m.captured_at, m.width, m.height, level, std::move(blurred.pixels)}, now,
       rec->session.id);
}

void Relay::on_audio(Output& out, const Endpoint& from, const proto::AudioChunk& m, Millis now) {
  SessionRecord* rec = nullptr;
  if (from.role == Role::Wearer) {
    rec = wearer_session(from.user);
  } else {
    rec = session_for_dropin(m.dropin_id);
    if (rec && rec->session.friend_id != from.user) rec = nullptr;
  }
  session::DropInSession* d = rec ? active_dropin(*rec) : nullptr;
  if (d && from.role == Role::Friend && d->id != m.dropin_id) d = nullptr;
  if (!d || (from.role == Role::Friend && rec->friend_muted)) {
    ++stats_.audio_dropped;
    out.events.push_back({EventKind::MediaDropped, now, rec ? rec->session.id : std::string{}, m.dropin_id,
                          d ? "AudioChunk:muted" : "AudioChunk:no_active_dropin", 0});
    return;
  }
  proto::AudioChunk fwd{d->id, m.seq, from.user, m.payload};
  if (from.role == Role::Wearer)
    send(out, rec->session.friend_id, Role::Friend, std::move(fwd), now, rec->session.id);
  else
    send(out, rec->session.wearer, Role::Wearer, std::move(fwd), now, rec->session.id);
}

void Relay::on_mute(Output& out, const Endpoint& from, ConnId conn, const proto::MuteToggle& m, Millis now) {
  SessionRecord* rec = session_for_dropin(m.dropin_id);
  if (!rec || rec->session.friend_id != from.user) return reply_error(out, conn, "NoActiveDropIn", m.dropin_id);
  session::DropInSession* d = active_dropin(*rec);
  if (!d || d->id != m.dropin_id) return reply_error(out, conn, "NoActiveDropIn", m.dropin_id);
  rec->friend_muted = m.muted;
  emit(out, EventKind::Muted, now, rec, d->id, {}, m.muted ? 1 : 0);
  send_both(out, *rec, proto::MuteToggle{d->id, m.muted}, now);
}

void Relay::on_project(Output& out, const Endpoint& from, ConnId conn, const proto::Project& m, Millis now) {
  SessionRecord* rec = session_for_dropin(m.dropin_id);
  if (!rec || rec->session.friend_id != from.user) return reply_error(out, conn, "NoActiveDropIn", m.dropin_id);
  session::DropInSession* d = active_dropin(*rec);
  const bool active = d && d->id == m.dropin_id;
  auto next = catalog::project(rec->projection, catalog_, m.content_id, active, now);
  if (!next) return reply_error(out, conn, std::string(catalog::to_string(next.error())), m.content_id);
  rec->projection = std::move(next).value();
  emit(out, EventKind::Projected, now, rec, d->id, m.content_id);
  send_both(out, *rec, proto::Project{d->id, m.content_id}, now);
}

void Relay::on_reposition(Output& out, const Endpoint& from, ConnId conn, const proto::Reposition& m, Millis now) {
  SessionRecord* rec = nullptr;
  if (from.role == Role::Wearer) {
    rec = wearer_session(from.user);
  } else {
    rec = session_for_dropin(m.dropin_id);
    if (rec && rec->session.friend_id != from.user) rec = nullptr;
  }
  session::DropInSession* d = rec ? active_dropin(*rec) : nullptr;
  if (!d || d->id != m.dropin_id) return reply_error(out, conn, "NoActiveDropIn", m.dropin_id);
  auto next = catalog::reposition(rec->projection, catalog_, {m.anchor_x, m.anchor_y});
  if (!next) return reply_error(out, conn, std::string(catalog::to_string(next.error())), m.dropin_id);
  rec->projection = std::move(next).value();
  const auto& a = rec->projection.active->anchor;
  emit(out, EventKind::Repositioned, now, rec, d->id, rec->projection.active->id);
  send_both(out, *rec, proto::Reposition{d->id, a.x, a.y}, now);
}

void Relay::on_extend(Output& out, const Endpoint& from, ConnId conn, const proto::ExtendTap& m, Millis now) {
  SessionRecord* rec = wearer_session(from.user);
  session::DropInSession* d = rec ? active_dropin(*rec) : nullptr;
  if (!d || d->id != m.dropin_id) return reply_error(out, conn, "NotActive", m.dropin_id);
  auto ext = session::extend_drop_in(*d, rec->session, now);
  if (!ext) return reply_error(out, conn, std::string(session::to_string(ext.error())), m.dropin_id);
  *d = std::move(ext).value();
  emit(out, EventKind::Extended, now, rec, d->id, {}, d->extensions);
  sync_timer(out, *rec, *d, now);
}

void Relay::on_dropin_end(Output& out, const Endpoint& from, ConnId conn, const proto::DropInEnd& m, Millis now) {
  SessionRecord* rec = nullptr;
  if (from.role == Role::Wearer) {
    rec = wearer_session(from.user);
  } else {
    rec = session_for_dropin(m.dropin_id);
    if (rec && rec->session.friend_id != from.user) rec = nullptr;
  }
  session::DropInSession* d = rec ? active_dropin(*rec) : nullptr;
  if (!d || d->id != m.dropin_id) return reply_error(out, conn, "NotActive", m.dropin_id);
  auto ev = session::end_dropin(*d, now);
  if (!ev) return reply_error(out, conn, std::string(session::to_string(ev.error())), m.dropin_id);
  finish_dropin(out, *rec, *ev, from.role == Role::Wearer ? "wearer_hangup" : "friend_hangup", now);
}

void Relay::on_session_end(Output& out, const Endpoint& from, ConnId conn, const proto::SessionEnd& m, Millis now) {
  auto it = sessions_.find(m.session_id);
  if (it == sessions_.end() || it->second.session.wearer != from.user)
    return reply_error(out, conn, "NotActive", m.session_id);
  SessionRecord& rec = it->second;
  auto evs = session::end_arcall(rec.session, rec.dropins, now);
  if (!evs) return reply_error(out, conn, std::string(session::to_string(evs.error())), m.session_id);
  for (const auto& ev : *evs) finish_dropin(out, rec, ev, "session_ended", now);
  finish_session(out, rec, EventKind::SessionEnded, "wearer", now);
}

// --- time -------------------------------------------------------------------------

Output Relay::tick(Millis now) {
  Output out;
  for (auto& [id, rec] : sessions_) {
    if (rec.finished_at) continue;
    auto events = session::tick(rec.session, rec.dropins, now);
    for (const auto& ev : events) {
      if (ev.kind == session::ExpiryKind::DropInEnded)
        finish_dropin(out, rec, ev, "timeout", now);
      else
        finish_session(out, rec, EventKind::SessionExpired, "expired", now);
    }
    if (rec.finished_at || options_.timer_sync_interval_ms <= 0) continue;
    if (auto* d = active_dropin(rec); d && now - rec.last_sync >= options_.timer_sync_interval_ms)
      sync_timer(out, rec, *d, now);
  }
  for (auto it = sessions_.begin(); it != sessions_.end();) {
    const auto& rec = it->second;
    if (rec.finished_at && now - *rec.finished_at >= options_.retention_ms) {
      for (const auto& d : rec.dropins) dropin_index_.erase(d.id);
      it = sessions_.erase(it);
    } else {
      ++it;
    }
  }
  return out;
}

std::optional<Millis> Relay::next_deadline() const {
  std::optional<Millis> best;
  auto consider = [&](Millis t) {
    if (!best || t < *best) best = t;
  };
  for (const auto& [id, rec] : sessions_) {
    if (rec.finished_at) continue;
    if (auto t = session::next_deadline(rec.session, rec.dropins)) consider(*t);
    if (options_.timer_sync_interval_ms > 0) {
      for (const auto& d : rec.dropins)
        if (d.active()) consider(rec.last_sync + options_.timer_sync_interval_ms);
    }
  }
  return best;
}

}  // namespace arcall::relay
