// SPDX-License-Identifier: Apache-2.0

/// \file session.hpp
/// \brief ARcall and Drop-In session state machines.
///
/// An ARcall session is the invite window the Wearer opens for one Friend.
/// While it is open the Friend may drop in; each Drop-In is a short
/// co-presence window that the Wearer can extend in 30 s steps. Everything
/// here is a value transition on a caller-supplied clock (integer
/// milliseconds); nothing reads wall-clock time.

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "result.hpp"

namespace arcall {

using Millis = std::int64_t;
using UserId = std::string;
using SessionId = std::string;
using DropInId = std::string;

}  // namespace arcall

namespace arcall::session {

inline constexpr std::int64_t kMinArcallSeconds = 300;
inline constexpr std::int64_t kMaxArcallSeconds = 3600;
inline constexpr std::int64_t kMinDropInSeconds = 30;
inline constexpr std::int64_t kMaxDropInSeconds = 60;
inline constexpr int kMinBlur = 0;
inline constexpr int kMaxBlur = 10;
inline constexpr std::int64_t kExtensionSeconds = 30;

struct SessionConfig {
  std::int64_t arcall_duration_s = kMaxArcallSeconds;
  std::int64_t dropin_duration_s = kMaxDropInSeconds;
  int blur_level = 0;
  UserId friend_id;
  bool presence_indicator = false;
  /// Reject extensions that would run past the ARcall expiry.
  bool strict_extensions = false;

  bool operator==(const SessionConfig&) const = default;
};

/// Unvalidated configuration as it arrives from a client or a file.
struct RawConfig {
  std::optional<std::int64_t> arcall_duration_s;
  std::optional<std::int64_t> dropin_duration_s;
  std::optional<std::int64_t> blur_level;
  std::optional<UserId> friend_id;
  bool presence_indicator = false;
  bool strict_extensions = false;
};

enum class ValidationCode { DurationOutOfRange, BlurOutOfRange, MissingFriend };

struct ValidationError {
  ValidationCode code;
  std::string field;
};

enum class State { Active, Ended, Expired };

struct ArcallSession {
  SessionId id;
  UserId wearer;
  UserId friend_id;
  SessionConfig config;
  State state = State::Active;
  Millis started_at = 0;
  Millis expires_at = 0;
};

struct DropInSession {
  DropInId id;
  SessionId parent;
  State state = State::Active;  // never Expired
  Millis started_at = 0;
  Millis ends_at = 0;
  std::int64_t extensions = 0;
  std::int64_t duration_s = 0;
  std::optional<Millis> ended_at;

  bool active() const { return state == State::Active; }
};

enum class ExpiryKind { DropInEnded, ArcallExpired };

struct ExpiryEvent {
  ExpiryKind kind;
  std::string subject;
  Millis at = 0;

  bool operator==(const ExpiryEvent&) const = default;
};

enum class SessionError {
  SessionExpired,
  AlreadyDroppedIn,
  SessionEnded,
  NotStarted,
  NotActive,
  PastParentExpiry,
};

std::string_view to_string(ValidationCode code);
std::string_view to_string(SessionError err);
std::string_view to_string(State s);

/// Deterministic id allocator ("s1", "s2", ... / "d1", ...).
class IdSource {
 public:
  explicit IdSource(std::string tag = {}) : tag_(std::move(tag)) {}
  std::string next(std::string_view prefix);

 private:
  std::string tag_;
  std::map<std::string, std::uint64_t, std::less<>> counters_;
};

Result<SessionConfig, ValidationError> validate_config(const RawConfig& raw);

ArcallSession start_arcall(const SessionConfig& config, const UserId& wearer,
                           Millis now, IdSource& ids);

/// Opens a Drop-In under `session`. `dropins` are the session's existing
/// drop-ins; any one still in state Active blocks a new one.
Result<DropInSession, SessionError> drop_in(
    const ArcallSession& session, std::span<const DropInSession> dropins,
    Millis now, IdSource& ids);

/// Adds 30 s to the current end time.
Result<DropInSession, SessionError> extend_drop_in(
    const DropInSession& dropin, const ArcallSession& parent, Millis now);

/// Fires every deadline at or before `now`. Drop-ins end first; the
/// session expires only once none of its drop-ins is still running (an
/// extended drop-in may outlive expires_at). Idempotent.
std::vector<ExpiryEvent> tick(ArcallSession& session,
                              std::span<DropInSession> dropins, Millis now);

/// Ends the session, ending its active drop-in first.
Result<std::vector<ExpiryEvent>, SessionError> end_arcall(
    ArcallSession& session, std::span<DropInSession> dropins, Millis now);

Result<ExpiryEvent, SessionError> end_dropin(DropInSession& dropin, Millis now);

/// Earliest pending deadline for the session and its drop-ins.
std::optional<Millis> next_deadline(const ArcallSession& session,
                                    std::span<const DropInSession> dropins);

}  // namespace arcall::session
