// SPDX-License-Identifier: Apache-2.0

/// \file protocol.hpp
/// \brief Wire messages and their framed encoding.
///
/// Envelope layout (all multi-byte integers big-endian):
///
///     0xA2 | 0x01 | msg_type | length:u32 | payload[length]
///
/// The payload is canonical JSON (sorted keys, no whitespace). FrameChunk and
/// AudioChunk append their raw media bytes directly after the JSON object;
/// `length` covers both.

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "result.hpp"
#include "session.hpp"

namespace arcall::protocol {

inline constexpr std::uint8_t kMagic = 0xA2;
inline constexpr std::uint8_t kVersion = 0x01;
inline constexpr std::size_t kHeaderSize = 7;
inline constexpr std::uint32_t kMaxPayload = 32u * 1024u * 1024u;

using Bytes = std::vector<std::uint8_t>;

struct InviteNotify {
  SessionId session_id;
  UserId wearer;
  Millis expires_at = 0;
  bool operator==(const InviteNotify&) const = default;
};
struct DropInRequest {
  SessionId session_id;
  bool operator==(const DropInRequest&) const = default;
};
struct DropInGrant {
  DropInId dropin_id;
  Millis ends_at = 0;
  bool presence_indicator = false;
  bool operator==(const DropInGrant&) const = default;
};
struct DropInDeny {
  std::string reason;
  bool operator==(const DropInDeny&) const = default;
};
struct FrameChunk {
  DropInId dropin_id;
  Millis captured_at = 0;
  std::int64_t width = 0;
  std::int64_t height = 0;
  std::int64_t blur_applied = 0;  // blur level applied by the relay, 0 = raw
  Bytes payload;
  bool operator==(const FrameChunk&) const = default;
};
struct AudioChunk {
  DropInId dropin_id;
  std::int64_t seq = 0;
  UserId sender;
  Bytes payload;
  bool operator==(const AudioChunk&) const = default;
};
struct MuteToggle {
  DropInId dropin_id;
  bool muted = false;
  bool operator==(const MuteToggle&) const = default;
};
struct Project {
  DropInId dropin_id;
  std::string content_id;
  bool operator==(const Project&) const = default;
};
struct Reposition {
  DropInId dropin_id;
  double anchor_x = 0.5;
  double anchor_y = 0.5;
  bool operator==(const Reposition&) const = default;
};
struct ExtendTap {
  DropInId dropin_id;
  bool operator==(const ExtendTap&) const = default;
};
struct TimerSync {
  DropInId dropin_id;
  std::int64_t remaining_ms = 0;
  bool operator==(const TimerSync&) const = default;
};
struct DropInEnd {
  DropInId dropin_id;
  std::string cause;
  bool operator==(const DropInEnd&) const = default;
};
struct SessionEnd {
  SessionId session_id;
  std::string cause;
  bool operator==(const SessionEnd&) const = default;
};
struct Error {
  std::string code;
  std::string detail;
  bool operator==(const Error&) const = default;
};

// Control-plane extensions (0x81..): connection identity and session start.
struct Hello {
  UserId user;
  std::string role;  // "wearer" | "friend"
  std::string token;
  bool operator==(const Hello&) const = default;
};
struct StartArcall {
  UserId friend_id;
  std::optional<std::int64_t> arcall_duration_s;
  std::optional<std::int64_t> dropin_duration_s;
  std::optional<std::int64_t> blur_level;
  std::optional<bool> presence_indicator;
  bool operator==(const StartArcall&) const = default;
};

using Message = std::variant<InviteNotify, DropInRequest, DropInGrant, DropInDeny, FrameChunk,
                             AudioChunk, MuteToggle, Project, Reposition, ExtendTap, TimerSync,
                             DropInEnd, SessionEnd, Error, Hello, StartArcall>;

enum class MsgType : std::uint8_t {
  InviteNotify = 0x01,
  DropInRequest = 0x02,
  DropInGrant = 0x03,
  DropInDeny = 0x04,
  FrameChunk = 0x05,
  AudioChunk = 0x06,
  MuteToggle = 0x07,
  Project = 0x08,
  Reposition = 0x09,
  ExtendTap = 0x0A,
  TimerSync = 0x0B,
  DropInEnd = 0x0C,
  SessionEnd = 0x0D,
  Error = 0x0E,
  Hello = 0x81,
  StartArcall = 0x82,
};

MsgType type_of(const Message& msg);
std::string_view type_name(MsgType type);
bool is_media(const Message& msg);

enum class DecodeErrorCode {
  BadMagic,
  BadVersion,
  UnknownType,
  LengthMismatch,
  Truncated,
  MalformedPayload,
};

struct DecodeError {
  DecodeErrorCode code;
  std::string detail;
};

std::string_view to_string(DecodeErrorCode code);

struct Decoded {
  Message message;
  std::size_t consumed = 0;
};

Bytes encode(const Message& msg);

/// Parses the first envelope in `bytes`. Trailing data is left alone;
/// `consumed` tells the caller how far to advance.
Result<Decoded, DecodeError> decode(std::span<const std::uint8_t> bytes);

/// Canonical JSON of the message with an added "type" key naming the
/// variant. Media bytes are summarized as "payload_len", or carried as
/// "payload_hex" when `with_payload` is set.
std::string to_json(const Message& msg, bool with_payload = false);

/// Inverse of to_json (accepts "payload_hex" for media messages).
Result<Message, DecodeError> from_json(std::string_view text);

/// Reassembles envelopes from an arbitrarily chunked byte stream.
class StreamDecoder {
 public:
  void feed(std::span<const std::uint8_t> chunk);

  /// Next complete message. Returns Truncated when more bytes are needed;
  /// any other error is sticky because the stream cannot resynchronize.
  Result<Message, DecodeError> next();

  std::size_t buffered() const { return buffer_.size(); }

 private:
  std::vector<std::uint8_t> buffer_;
  std::optional<DecodeError> broken_;
};

}  // namespace arcall::protocol
