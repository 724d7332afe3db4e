// SPDX-License-Identifier: Apache-2.0

/// \file relay.hpp
/// \brief Transport-independent relay: owns sessions and connections,
/// routes media and projection between one Wearer and one Friend, and
/// enforces the gating rules.
///
/// The relay never reads a clock and never touches a socket. Each call takes
/// the current time and returns the envelopes to deliver plus a log of what
/// happened, so the network server and the simulator drive the same code.

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "catalog.hpp"
#include "media.hpp"
#include "protocol.hpp"
#include "session.hpp"
#include "store.hpp"

namespace arcall::relay {

using ConnId = std::uint64_t;

enum class Role { Wearer, Friend };

std::string_view to_string(Role role);
std::optional<Role> parse_role(std::string_view s);

struct RelayOptions {
  media::FovModel fov;
  /// Periodic TimerSync cadence while a drop-in runs; 0 disables.
  Millis timer_sync_interval_ms = 10'000;
  /// Ended sessions are kept this long so late requests get a precise deny.
  Millis retention_ms = 3'600'000;
  bool wearer_can_reposition = false;
};

struct Outgoing {
  ConnId to = 0;
  protocol::Message message;
};

enum class EventKind {
  Connected,
  Disconnected,
  SessionStarted,
  SessionEnded,
  SessionExpired,
  DropInStarted,
  DropInEnded,
  Projected,
  Repositioned,
  Extended,
  Muted,
  InviteQueued,
  InviteDelivered,
  MediaDropped,
  ControlDropped,
  Rejected,
};

std::string_view to_string(EventKind kind);

struct RelayEvent {
  EventKind kind;
  Millis at = 0;
  std::string session_id;
  std::string dropin_id;
  std::string detail;
  std::int64_t value = 0;
};

struct Output {
  std::vector<Outgoing> messages;
  std::vector<RelayEvent> events;
  std::vector<ConnId> close;

  void append(Output&& other);
};

struct RelayStats {
  std::uint64_t frames_relayed = 0;
  std::uint64_t frames_dropped = 0;
  std::uint64_t audio_relayed = 0;
  std::uint64_t audio_dropped = 0;
  std::uint64_t control_dropped = 0;
  std::uint64_t errors_sent = 0;
};

/// Snapshot of one session for inspection.
struct SessionView {
  session::ArcallSession session;
  std::vector<session::DropInSession> dropins;
  catalog::ProjectionState projection;
  bool friend_muted = false;
};

class Relay {
 public:
  Relay(RelayOptions options, StoreData store, catalog::Catalog catalog);

  /// Registers an identified connection. A second live connection for the
  /// same (user, role) replaces the first, which is listed in `close`.
  /// A token mismatch rejects the connection.
  Output connect(ConnId conn, const UserId& user, Role role, const std::string& token, Millis now);
  Output disconnect(ConnId conn, Millis now);

  /// Processes one message from `conn`. Unidentified connections may only
  /// send Hello.
  Output handle(ConnId conn, const protocol::Message& msg, Millis now);

  /// Fires due deadlines and periodic timer syncs.
  Output tick(Millis now);
  std::optional<Millis> next_deadline() const;

  bool is_identified(ConnId conn) const { return conns_.count(conn) > 0; }
  const RelayStats& stats() const { return stats_; }
  const StoreData& store() const { return store_; }
  StoreData& mutable_store() {
    store_dirty_ = true;
    return store_;
  }
  /// True once since the last call if the store changed.
  bool take_store_dirty();

  std::optional<SessionView> find_session(const SessionId& id) const;
  std::optional<SessionId> current_session(const UserId& wearer) const;
  const catalog::Catalog& catalog() const { return catalog_; }
  const RelayOptions& options() const { return options_; }

 private:
  struct Endpoint {
    UserId user;
    Role role;
    Millis last_seen = 0;
  };

  struct SessionRecord {
    session::ArcallSession session;
    std::vector<session::DropInSession> dropins;
    catalog::ProjectionState projection;
    bool friend_muted = false;
    Millis last_sync = 0;
    std::optional<Millis> finished_at;
  };

  using Key = std::pair<UserId, Role>;

  void send(Output& out, const UserId& user, Role role, protocol::Message msg, Millis now,
            const std::string& session_id = {});
  void send_both(Output& out, const SessionRecord& rec, const protocol::Message& msg, Millis now);
  void reply_error(Output& out, ConnId conn, std::string code, std::string detail);
  void emit(Output& out, EventKind kind, Millis at, const SessionRecord* rec,
            std::string dropin_id = {}, std::string detail = {}, std::int64_t value = 0);

  session::DropInSession* active_dropin(SessionRecord& rec);
  SessionRecord* wearer_session(const UserId& wearer);
  SessionRecord* session_for_dropin(const DropInId& id);

  void finish_dropin(Output& out, SessionRecord& rec, const session::ExpiryEvent& ev,
                     const std::string& cause, Millis now);
  void finish_session(Output& out, SessionRecord& rec, EventKind kind, const std::string& cause,
                      Millis now);
  void sync_timer(Output& out, SessionRecord& rec, const session::DropInSession& d, Millis now);

  void on_start(Output& out, const Endpoint& from, ConnId conn, const protocol::StartArcall& m, Millis now);
  void on_dropin_request(Output& out, const Endpoint& from, const protocol::DropInRequest& m, Millis now);
  void on_frame(Output& out, const Endpoint& from, const protocol::FrameChunk& m, Millis now);
  void on_audio(Output& out, const Endpoint& from, const protocol::AudioChunk& m, Millis now);
  void on_mute(Output& out, const Endpoint& from, ConnId conn, const protocol::MuteToggle& m, Millis now);
  void on_project(Output& out, const Endpoint& from, ConnId conn, const protocol::Project& m, Millis now);
  void on_reposition(Output& out, const Endpoint& from, ConnId conn, const protocol::Reposition& m, Millis now);
  void on_extend(Output& out, const Endpoint& from, ConnId conn, const protocol::ExtendTap& m, Millis now);
  void on_dropin_end(Output& out, const Endpoint& from, ConnId conn, const protocol::DropInEnd& m, Millis now);
  void on_session_end(Output& out, const Endpoint& from, ConnId conn, const protocol::SessionEnd& m, Millis now);

  RelayOptions options_;
  StoreData store_;
  bool store_dirty_ = false;
  catalog::Catalog catalog_;
  session::IdSource ids_;
  RelayStats stats_;

  std::map<ConnId, Endpoint> conns_;
  std::map<Key, ConnId> by_endpoint_;
  std::map<SessionId, SessionRecord> sessions_;
  std::map<UserId, SessionId> wearer_current_;
  std::map<DropInId, SessionId> dropin_index_;
  std::map<UserId, std::vector<protocol::InviteNotify>> pending_invites_;
};

}  // namespace arcall::relay
