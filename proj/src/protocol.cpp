// SPDX-License-Identifier: Apache-2.0

#include "protocol.hpp"

#include <cstdio>
#include <limits>
#include <stdexcept>

#include "json.hpp"

namespace arcall::protocol {

using nlohmann::json;

namespace {

struct BadField : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string dump(const json& j) {
  return j.dump(-1, ' ', false, json::error_handler_t::replace);
}

const json& field(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw BadField(std::string("missing field '") + key + "'");
  return *it;
}

std::string get_str(const json& j, const char* key) {
  const json& v = field(j, key);
  if (!v.is_string()) throw BadField(std::string("field '") + key + "' must be a string");
  return v.get<std::string>();
}

std::string get_id(const json& j, const char* key) {
  auto s = get_str(j, key);
  if (s.empty()) throw BadField(std::string("field '") + key + "' must be non-empty");
  return s;
}

std::int64_t get_int(const json& j, const char* key) {
  const json& v = field(j, key);
  if (!v.is_number_integer()) throw BadField(std::string("field '") + key + "' must be an integer");
  if (v.is_number_unsigned() &&
      v.get<std::uint64_t>() > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max()))
    throw BadField(std::string("field '") + key + "' overflows int64");
  return v.get<std::int64_t>();
}

std::optional<std::int64_t> get_opt_int(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return get_int(j, key);
}

double get_num(const json& j, const char* key) {
  const json& v = field(j, key);
  if (!v.is_number()) throw BadField(std::string("field '") + key + "' must be a number");
  return v.get<double>();
}

bool get_bool(const json& j, const char* key) {
  const json& v = field(j, key);
  if (!v.is_boolean()) throw BadField(std::string("field '") + key + "' must be a boolean");
  return v.get<bool>();
}

json body_of(const Message& msg) {
  return std::visit(
      [](const auto& m) -> json {
        using T = std::decay_t<decltype(m)>;
        json j = json::object();
        if constexpr (std::is_same_v<T, InviteNotify>) {
          j["session_id"] = m.session_id;
          j["wearer"] = m.wearer;
          j["expires_at"] = m.expires_at;
        } else if constexpr (std::is_same_v<T, DropInRequest>) {
          j["session_id"] = m.session_id;
        } else if constexpr (std::is_same_v<T, DropInGrant>) {
          j["dropin_id"] = m.dropin_id;
          j["ends_at"] = m.ends_at;
          j["presence_indicator"] = m.presence_indicator;
        } else if constexpr (std::is_same_v<T, DropInDeny>) {
          j["reason"] = m.reason;
        } else if constexpr (std::is_same_v<T, FrameChunk>) {
          j["dropin_id"] = m.dropin_id;
          j["captured_at"] = m.captured_at;
          j["width"] = m.width;
          j["height"] = m.height;
          j["blur_applied"] = m.blur_applied;
        } else if constexpr (std::is_same_v<T, AudioChunk>) {
          j["dropin_id"] = m.dropin_id;
          j["seq"] = m.seq;
          j["sender"] = m.sender;
        } else if constexpr (std::is_same_v<T, MuteToggle>) {
          j["dropin_id"] = m.dropin_id;
          j["muted"] = m.muted;
        } else if constexpr (std::is_same_v<T, Project>) {
          j["dropin_id"] = m.dropin_id;
          j["content_id"] = m.content_id;
        } else if constexpr (std::is_same_v<T, Reposition>) {
          j["dropin_id"] = m.dropin_id;
          j["anchor_x"] = m.anchor_x;
          j["anchor_y"] = m.anchor_y;
        } else if constexpr (std::is_same_v<T, ExtendTap>) {
          j["dropin_id"] = m.dropin_id;
        } else if constexpr (std::is_same_v<T, TimerSync>) {
          j["dropin_id"] = m.dropin_id;
          j["remaining_ms"] = m.remaining_ms;
        } else if constexpr (std::is_same_v<T, DropInEnd>) {
          j["dropin_id"] = m.dropin_id;
          j["cause"] = m.cause;
        } else if constexpr (std::is_same_v<T, SessionEnd>) {
          j["session_id"] = m.session_id;
          j["cause"] = m.cause;
        } else if constexpr (std::is_same_v<T, Error>) {
          j["code"] = m.code;
          j["detail"] = m.detail;
        } else if constexpr (std::is_same_v<T, Hello>) {
          j["user"] = m.user;
          j["role"] = m.role;
          j["token"] = m.token;
        } else if constexpr (std::is_same_v<T, StartArcall>) {
          j["friend"] = m.friend_id;
          if (m.arcall_duration_s) j["arcall_duration_s"] = *m.arcall_duration_s;
          if (m.dropin_duration_s) j["dropin_duration_s"] = *m.dropin_duration_s;
          if (m.blur_level) j["blur_level"] = *m.blur_level;
          if (m.presence_indicator) j["presence_indicator"] = *m.presence_indicator;
        }
        return j;
      },
      msg);
}

const Bytes* media_payload(const Message& msg) {
  if (auto* f = std::get_if<FrameChunk>(&msg)) return &f->payload;
  if (auto* a = std::get_if<AudioChunk>(&msg)) return &a->payload;
  return nullptr;
}

bool known_type(std::uint8_t t) { return (t >= 0x01 && t <= 0x0E) || t == 0x81 || t == 0x82; }

bool carries_media(MsgType t) { return t == MsgType::FrameChunk || t == MsgType::AudioChunk; }

Message message_from_body(MsgType type, const json& j, Bytes payload) {
  if (!j.is_object()) throw BadField("payload must be a JSON object");
  switch (type) {
    case MsgType::InviteNotify:
      return InviteNotify{get_id(j, "session_id"), get_id(j, "wearer"), get_int(j, "expires_at")};
    case MsgType::DropInRequest:
      return DropInRequest{get_id(j, "session_id")};
    case MsgType::DropInGrant:
      return DropInGrant{get_id(j, "dropin_id"), get_int(j, "ends_at"),
                         get_bool(j, "presence_indicator")};
    case MsgType::DropInDeny:
      return DropInDeny{get_str(j, "reason")};
    case MsgType::FrameChunk: {
      FrameChunk f{get_id(j, "dropin_id"), get_int(j, "captured_at"), get_int(j, "width"),
                   get_int(j, "height"), get_int(j, "blur_applied"), std::move(payload)};
      if (f.width < 1 || f.height < 1 || f.width > 4096 || f.height > 4096)
        throw BadField("frame dimensions out of range");
      if (f.payload.size() != static_cast<std::size_t>(f.width * f.height))
        throw BadField("frame payload size does not match width*height");
      if (f.blur_applied < 0 || f.blur_applied > 10) throw BadField("blur_applied out of range");
      return f;
    }
    case MsgType::AudioChunk:
      return AudioChunk{get_id(j, "dropin_id"), get_int(j, "seq"), get_id(j, "sender"),
                        std::move(payload)};
    case MsgType::MuteToggle:
      return MuteToggle{get_id(j, "dropin_id"), get_bool(j, "muted")};
    case MsgType::Project:
      return Project{get_id(j, "dropin_id"), get_id(j, "content_id")};
    case MsgType::Reposition:
      return Reposition{get_id(j, "dropin_id"), get_num(j, "anchor_x"), get_num(j, "anchor_y")};
    case MsgType::ExtendTap:
      return ExtendTap{get_id(j, "dropin_id")};
    case MsgType::TimerSync:
      return TimerSync{get_id(j, "dropin_id"), get_int(j, "remaining_ms")};
    case MsgType::DropInEnd:
      return DropInEnd{get_id(j, "dropin_id"), get_str(j, "cause")};
    case MsgType::SessionEnd:
      return SessionEnd{get_id(j, "session_id"), get_str(j, "cause")};
    case MsgType::Error:
      return Error{get_str(j, "code"), get_str(j, "detail")};
    case MsgType::Hello: {
      Hello h{get_id(j, "user"), get_str(j, "role"), get_str(j, "token")};
      if (h.role != "wearer" && h.role != "friend") throw BadField("role must be wearer or friend");
      return h;
    }
    case MsgType::StartArcall: {
      StartArcall s;
      s.friend_id = get_str(j, "friend");
      s.arcall_duration_s = get_opt_int(j, "arcall_duration_s");
      s.dropin_duration_s = get_opt_int(j, "dropin_duration_s");
      s.blur_level = get_opt_int(j, "blur_level");
      if (j.contains("presence_indicator") && !j.at("presence_indicator").is_null())
        s.presence_indicator = get_bool(j, "presence_indicator");
      return s;
    }
  }
  throw BadField("unknown type");
}

// End offset of the JSON object starting at data[0], or npos.
std::size_t json_object_end(std::span<const std::uint8_t> data) {
  if (data.empty() || data[0] != '{') return std::string::npos;
  int depth = 0;
  bool in_string = false;
  bool escape = false;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const std::uint8_t c = data[i];
    if (in_string) {
      if (escape) escape = false;
      else if (c == '\\') escape = true;
      else if (c == '"') in_string = false;
      continue;
    }
    if (c == '"') in_string = true;
    else if (c == '{' || c == '[') ++depth;
    else if (c == '}' || c == ']') {
      if (--depth == 0) return i + 1;
    }
  }
  return std::string::npos;
}

DecodeError malformed(std::string detail) {
  return {DecodeErrorCode::MalformedPayload, std::move(detail)};
}

std::string to_hex(const Bytes& b) {
  static const char* digits = "0123456789abcdef";
  std::string s;
  s.reserve(b.size() * 2);
  for (auto v : b) {
    s.push_back(digits[v >> 4]);
    s.push_back(digits[v & 0xF]);
  }
  return s;
}

std::optional<Bytes> from_hex(std::string_view s) {
  if (s.size() % 2) return std::nullopt;
  auto nib = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
  };
  Bytes out;
  out.reserve(s.size() / 2);
  for (std::size_t i = 0; i < s.size(); i += 2) {
    int hi = nib(s[i]), lo = nib(s[i + 1]);
    if (hi < 0 || lo < 0) return std::nullopt;
    out.push_back(static_cast<std::uint8_t>(hi << 4 | lo));
  }
  return out;
}

}  // namespace

MsgType type_of(const Message& msg) {
  static constexpr MsgType kTypes[] = {
      MsgType::InviteNotify, MsgType::DropInRequest, MsgType::DropInGrant, MsgType::DropInDeny,
      MsgType::FrameChunk,   MsgType::AudioChunk,    MsgType::MuteToggle,  MsgType::Project,
      MsgType::Reposition,   MsgType::ExtendTap,     MsgType::TimerSync,   MsgType::DropInEnd,
      MsgType::SessionEnd,   MsgType::Error,         MsgType::Hello,       MsgType::StartArcall};
  return kTypes[msg.index()];
}

std::string_view type_name(MsgType type) {
  switch (type) {
    case MsgType::InviteNotify: return "InviteNotify";
    case MsgType::DropInRequest: return "DropInRequest";
    case MsgType::DropInGrant: return "DropInGrant";
    case MsgType::DropInDeny: return "DropInDeny";
    case MsgType::FrameChunk: return "FrameChunk";
    case MsgType::AudioChunk: return "AudioChunk";
    case MsgType::MuteToggle: return "MuteToggle";
    case MsgType::Project: return "Project";
    case MsgType::Reposition: return "Reposition";
    case MsgType::ExtendTap: return "ExtendTap";
    case MsgType::TimerSync: return "TimerSync";
    case MsgType::DropInEnd: return "DropInEnd";
    case MsgType::SessionEnd: return "SessionEnd";
    case MsgType::Error: return "Error";
    case MsgType::Hello: return "Hello";
    case MsgType::StartArcall: return "StartArcall";
  }
  return "Unknown";
}

bool is_media(const Message& msg) { return media_payload(msg) != nullptr; }

std::string_view to_string(DecodeErrorCode code) {
  switch (code) {
    case DecodeErrorCode::BadMagic: return "BadMagic";
    case DecodeErrorCode::BadVersion: return "BadVersion";
    case DecodeErrorCode::UnknownType: return "UnknownType";
    case DecodeErrorCode::LengthMismatch: return "LengthMismatch";
    case DecodeErrorCode::Truncated: return "Truncated";
    case DecodeErrorCode::MalformedPayload: return "MalformedPayload";
  }
  return "Unknown";
}

Bytes encode(const Message& msg) {
  const std::string body = dump(body_of(msg));
  const Bytes* media = media_payload(msg);
  const std::size_t length = body.size() + (media ? media->size() : 0);

  Bytes out;
  out.reserve(kHeaderSize + length);
  out.push_back(kMagic);
  out.push_back(kVersion);
  out.push_back(static_cast<std::uint8_t>(type_of(msg)));
  out.push_back(static_cast<std::uint8_t>(length >> 24));
  out.push_back(static_cast<std::uint8_t>(length >> 16));
  out.push_back(static_cast<std::uint8_t>(length >> 8));
  out.push_back(static_cast<std::uint8_t>(length));
  out.insert(out.end(), body.begin(), body.end());
  if (media) out.insert(out.end(), media->begin(), media->end());
  return out;
}

Result<Decoded, DecodeError> decode(std::span<const std::uint8_t> bytes) {
  if (bytes.size() >= 1 && bytes[0] != kMagic)
    return fail(DecodeError{DecodeErrorCode::BadMagic, "bad magic byte"});
  if (bytes.size() >= 2 && bytes[1] != kVersion)
    return fail(DecodeError{DecodeErrorCode::BadVersion, "unsupported version " + std::to_string(bytes[1])});
  if (bytes.size() >= 3 && !known_type(bytes[2]))
    return fail(DecodeError{DecodeErrorCode::UnknownType, "unknown msg_type " + std::to_string(bytes[2])});
  if (bytes.size() < kHeaderSize)
    return fail(DecodeError{DecodeErrorCode::Truncated, "incomplete header"});

  const auto type = static_cast<MsgType>(bytes[2]);
  const std::uint32_t length = (std::uint32_t{bytes[3]} << 24) | (std::uint32_t{bytes[4]} << 16) |
                               (std::uint32_t{bytes[5]} << 8) | std::uint32_t{bytes[6]};
  if (length > kMaxPayload)
    return fail(DecodeError{DecodeErrorCode::LengthMismatch, "declared length exceeds limit"});
  if (bytes.size() - kHeaderSize < length)
    return fail(DecodeError{DecodeErrorCode::Truncated,
                            "need " + std::to_string(length) + " payload bytes, have " +
                                std::to_string(bytes.size() - kHeaderSize)});

  auto payload = bytes.subspan(kHeaderSize, length);
  std::size_t json_end = json_object_end(payload);
  if (json_end == std::string::npos) return fail(malformed("payload is not a JSON object"));
  if (!carries_media(type) && json_end != payload.size())
    return fail(DecodeError{DecodeErrorCode::LengthMismatch,
                            "declared length " + std::to_string(length) + " but JSON body is " +
                                std::to_string(json_end) + " bytes"});

  json j = json::parse(payload.begin(), payload.begin() + static_cast<std::ptrdiff_t>(json_end),
                       nullptr, false);
  if (j.is_discarded()) return fail(malformed("invalid JSON"));
  try {
    Bytes media(payload.begin() + static_cast<std::ptrdiff_t>(json_end), payload.end());
    return Decoded{message_from_body(type, j, std::move(media)), kHeaderSize + length};
  } catch (const BadField& e) {
    return fail(malformed(e.what()));
  } catch (const json::exception& e) {
    return fail(malformed(e.what()));
  }
}

std::string to_json(const Message& msg, bool with_payload) {
  json j = body_of(msg);
  j["type"] = std::string(type_name(type_of(msg)));
  if (const Bytes* media = media_payload(msg)) {
    if (with_payload) j["payload_hex"] = to_hex(*media);
    else j["payload_len"] = media->size();
  }
  return dump(j);
}

Result<Message, DecodeError> from_json(std::string_view text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) return fail(malformed("invalid JSON"));
  auto t = j.find("type");
  if (t == j.end() || !t->is_string()) return fail(malformed("missing type"));
  const std::string name = t->get<std::string>();
  std::optional<MsgType> type;
  for (int v : {0x01, 0x02, 0x03, 0x04, 0x05, 0x06, 0x07, 0x08, 0x09, 0x0A, 0x0B, 0x0C, 0x0D, 0x0E,
                0x81, 0x82}) {
    if (type_name(static_cast<MsgType>(v)) == name) type = static_cast<MsgType>(v);
  }
  if (!type) return fail(DecodeError{DecodeErrorCode::UnknownType, "unknown type '" + name + "'"});
  Bytes media;
  if (auto h = j.find("payload_hex"); h != j.end()) {
    if (!h->is_string()) return fail(malformed("payload_hex must be a string"));
    auto b = from_hex(h->get<std::string>());
    if (!b) return fail(malformed("payload_hex is not hex"));
    media = std::move(*b);
  }
  try {
    return message_from_body(*type, j, std::move(media));
  } catch (const BadField& e) {
    return fail(malformed(e.what()));
  } catch (const json::exception& e) {
    return fail(malformed(e.what()));
  }
}

void StreamDecoder::feed(std::span<const std::uint8_t> chunk) {
  buffer_.insert(buffer_.end(), chunk.begin(), chunk.end());
}

Result<Message, DecodeError> StreamDecoder::next() {
  if (broken_) return fail(*broken_);
  auto r = decode(buffer_);
  if (!r) {
    if (r.error().code != DecodeErrorCode::Truncated) broken_ = r.error();
    return fail(r.error());
  }
  buffer_.erase(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(r->consumed));
  return std::move(r->message);
}

}  // namespace arcall::protocol
