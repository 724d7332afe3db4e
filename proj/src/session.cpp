// SPDX-License-Identifier: Apache-2.0

#include "session.hpp"

#include <algorithm>

namespace arcall::session {

std::string_view to_string(ValidationCode code) {
  switch (code) {
    case ValidationCode::DurationOutOfRange: return "DurationOutOfRange";
    case ValidationCode::BlurOutOfRange: return "BlurOutOfRange";
    case ValidationCode::MissingFriend: return "MissingFriend";
  }
  return "Unknown";
}

std::string_view to_string(SessionError err) {
  switch (err) {
    case SessionError::SessionExpired: return "SessionExpired";
    case SessionError::AlreadyDroppedIn: return "AlreadyDroppedIn";
    case SessionError::SessionEnded: return "SessionEnded";
    case SessionError::NotStarted: return "NotStarted";
    case SessionError::NotActive: return "NotActive";
    case SessionError::PastParentExpiry: return "PastParentExpiry";
  }
  return "Unknown";
}

std::string_view to_string(State s) {
  switch (s) {
    case State::Active: return "Active";
    case State::Ended: return "Ended";
    case State::Expired: return "Expired";
  }
  return "Unknown";
}

std::string IdSource::next(std::string_view prefix) {
  auto it = counters_.find(prefix);
  if (it == counters_.end()) it = counters_.emplace(std::string(prefix), 0).first;
  return std::string(prefix) + tag_ + std::to_string(++it->second);
}

Result<SessionConfig, ValidationError> validate_config(const RawConfig& raw) {
  auto in_range = [](const std::optional<std::int64_t>& v, std::int64_t lo,
                     std::int64_t hi) { return v && *v >= lo && *v <= hi; };

  if (!in_range(raw.arcall_duration_s, kMinArcallSeconds, kMaxArcallSeconds))
    return fail(ValidationError{ValidationCode::DurationOutOfRange, "arcall_duration_s"});
  if (!in_range(raw.dropin_duration_s, kMinDropInSeconds, kMaxDropInSeconds))
    return fail(ValidationError{ValidationCode::DurationOutOfRange, "dropin_duration_s"});
  if (!in_range(raw.blur_level, kMinBlur, kMaxBlur))
    return fail(ValidationError{ValidationCode::BlurOutOfRange, "blur_level"});
  if (!raw.friend_id || raw.friend_id->empty())
    return fail(ValidationError{ValidationCode::MissingFriend, "friend"});

  SessionConfig cfg;
  cfg.arcall_duration_s = *raw.arcall_duration_s;
  cfg.dropin_duration_s = *raw.dropin_duration_s;
  cfg.blur_level = static_cast<int>(*raw.blur_level);
  cfg.friend_id = *raw.friend_id;
  cfg.presence_indicator = raw.presence_indicator;
  cfg.strict_extensions = raw.strict_extensions;
  return cfg;
}

ArcallSession start_arcall(const SessionConfig& config, const UserId& wearer,
                           Millis now, IdSource& ids) {
  ArcallSession s;
  s.id = ids.next("s");
  s.wearer = wearer;
  s.friend_id = config.friend_id;
  s.config = config;
  s.state = State::Active;
  s.started_at = now;
  s.expires_at = now + config.arcall_duration_s * 1000;
  return s;
}

Result<DropInSession, SessionError> drop_in(
    const ArcallSession& session, std::span<const DropInSession> dropins,
    Millis now, IdSource& ids) {
  if (session.state == State::Ended) return fail(SessionError::SessionEnded);
  if (session.state == State::Expired || now >= session.expires_at)
    return fail(SessionError::SessionExpired);
  if (now < session.started_at) return fail(SessionError::NotStarted);
  if (std::any_of(dropins.begin(), dropins.end(),
                  [](const DropInSession& d) { return d.active(); }))
    return fail(SessionError::AlreadyDroppedIn);

  DropInSession d;
  d.id = ids.next("d");
  d.parent = session.id;
  d.state = State::Active;
  d.started_at = now;
  d.duration_s = session.config.dropin_duration_s;
  d.ends_at = now + d.duration_s * 1000;
  d.extensions = 0;
  return d;
}

Result<DropInSession, SessionError> extend_drop_in(
    const DropInSession& dropin, const ArcallSession& parent, Millis now) {
  if (!dropin.active() || now >= dropin.ends_at) return fail(SessionError::NotActive);
  DropInSession d = dropin;
  d.ends_at += kExtensionSeconds * 1000;
  d.extensions += 1;
  if (parent.config.strict_extensions && d.ends_at > parent.expires_at)
    return fail(SessionError::PastParentExpiry);
  return d;
}

std::vector<ExpiryEvent> tick(ArcallSession& session,
                              std::span<DropInSession> dropins, Millis now) {
  std::vector<ExpiryEvent> events;
  bool running = false;
  for (auto& d : dropins) {
    if (!d.active()) continue;
    if (now >= d.ends_at) {
      d.state = State::Ended;
      d.ended_at = d.ends_at;
      events.push_back({ExpiryKind::DropInEnded, d.id, d.ends_at});
    } else {
      running = true;
    }
  }
  if (session.state == State::Active && now >= session.expires_at && !running) {
    session.state = State::Expired;
    events.push_back({ExpiryKind::ArcallExpired, session.id, session.expires_at});
  }
  return events;
}

Result<std::vector<ExpiryEvent>, SessionError> end_arcall(
    ArcallSession& session, std::span<DropInSession> dropins, Millis now) {
  if (session.state != State::Active) return fail(SessionError::NotActive);
  std::vector<ExpiryEvent> events;
  for (auto& d : dropins) {
    if (!d.active()) continue;
    d.state = State::Ended;
    d.ended_at = std::min(now, d.ends_at);
    events.push_back({ExpiryKind::DropInEnded, d.id, *d.ended_at});
  }
  session.state = State::Ended;
  return events;
}

Result<ExpiryEvent, SessionError> end_dropin(DropInSession& dropin, Millis now) {
  if (!dropin.active()) return fail(SessionError::NotActive);
  dropin.state = State::Ended;
  dropin.ended_at = std::min(now, dropin.ends_at);
  return ExpiryEvent{ExpiryKind::DropInEnded, dropin.id, *dropin.ended_at};
}

std::optional<Millis> next_deadline(const ArcallSession& session,
                                    std::span<const DropInSession> dropins) {
  std::optional<Millis> best;
  auto consider = [&](Millis t) {
    if (!best || t < *best) best = t;
  };
  bool running = false;
  for (const auto& d : dropins) {
    if (d.active()) {
      consider(d.ends_at);
      running = true;
    }
  }
  if (session.state == State::Active && !running) consider(session.expires_at);
  return best;
}

}  // namespace arcall::session
