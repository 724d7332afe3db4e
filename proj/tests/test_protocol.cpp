// SPDX-License-Identifier: Apache-2.0

#include <random>

#include "criteria.hpp"
#include "doctest.h"
#include "protocol.hpp"

using namespace arcall::protocol;

namespace {

Bytes raw(std::initializer_list<int> v) {
  Bytes b;
  for (int x : v) b.push_back(static_cast<std::uint8_t>(x));
  return b;
}

Bytes envelope(std::uint8_t type, const std::string& body) {
  Bytes b{kMagic, kVersion, type, 0, 0, 0, static_cast<std::uint8_t>(body.size())};
  b.insert(b.end(), body.begin(), body.end());
  return b;
}

DecodeErrorCode code_of(const Bytes& b) {
  auto r = decode(b);
  REQUIRE_FALSE(r.ok());
  return r.error().code;
}

}  // namespace

TEST_SUITE("protocol") {
  TEST_CASE("golden envelopes") {
    REQUIRE(criteria::golden_envelopes().size() == 16);
    for (const auto& g : criteria::golden_envelopes()) {
      CAPTURE(type_name(type_of(g.message)));
      CHECK(criteria::to_hex(encode(g.message)) == g.hex);
    }
  }

  TEST_CASE("header layout") {
    auto b = encode(DropInRequest{"s-1"});
    const std::string body = R"({"session_id":"s-1"})";
    CHECK(b == envelope(0x02, body));
    FrameChunk f{"d-1", 5, 1, 1, 0, raw({0xFF, 0x00})};
    auto e = encode(f);
    CHECK(e[2] == 0x05);
    CHECK(e.back() == 0x00);
    CHECK(e[e.size() - 2] == 0xFF);
  }

  TEST_CASE("round trip and canonical re-encode") {
    std::mt19937_64 rng(41);
    for (int i = 0; i < 2000; ++i) {
      auto m = criteria::random_message(rng);
      auto b = encode(m);
      auto d = decode(b);
      REQUIRE(d.ok());
      CHECK(d->consumed == b.size());
      CHECK(d->message == m);
      CHECK(encode(d->message) == b);

      auto j = from_json(to_json(m, true));
      REQUIRE(j.ok());
      CHECK(*j == m);
    }
  }

  TEST_CASE("decode error codes") {
    CHECK(code_of(raw({0xA3, 0x01, 0x02, 0, 0, 0, 2, '{', '}'})) == DecodeErrorCode::BadMagic);
    CHECK(code_of(raw({0xA2, 0x02, 0x02, 0, 0, 0, 2, '{', '}'})) == DecodeErrorCode::BadVersion);
    CHECK(code_of(raw({0xA2, 0x01, 0x0F, 0, 0, 0, 2, '{', '}'})) == DecodeErrorCode::UnknownType);
    CHECK(code_of(raw({0xA2, 0x01, 0x00})) == DecodeErrorCode::UnknownType);
    CHECK(code_of(raw({0xA2, 0x01, 0x02, 0, 0})) == DecodeErrorCode::Truncated);
    CHECK(code_of(raw({0xA2, 0x01, 0x02, 0, 0, 0, 9, '{', '}'})) == DecodeErrorCode::Truncated);
    CHECK(code_of(raw({0xA2, 0x01, 0x02, 0xFF, 0xFF, 0xFF, 0xFF})) == DecodeErrorCode::LengthMismatch);
    CHECK(code_of(envelope(0x02, R"({"session_id":"s"} )")) == DecodeErrorCode::LengthMismatch);
    CHECK(code_of(envelope(0x02, R"({"session_id":7})")) == DecodeErrorCode::MalformedPayload);
    CHECK(code_of(envelope(0x02, R"({})")) == DecodeErrorCode::MalformedPayload);
    CHECK(code_of(envelope(0x02, R"([1])")) == DecodeErrorCode::MalformedPayload);
    CHECK(code_of(envelope(0x02, R"({"session_id":"\xff"})")) == DecodeErrorCode::MalformedPayload);
  }

  TEST_CASE("trailing bytes are left for the caller") {
    auto a = encode(ExtendTap{"d-1"});
    auto b = encode(TimerSync{"d-1", 1000});
    Bytes both = a;
    both.insert(both.end(), b.begin(), b.end());
    auto d = decode(both);
    REQUIRE(d.ok());
    CHECK(d->consumed == a.size());
    CHECK(d->message == Message{ExtendTap{"d-1"}});
  }

  TEST_CASE("stream decoder reassembles arbitrary chunking") {
    std::mt19937_64 rng(5);
    std::vector<Message> sent;
    Bytes stream;
    for (int i = 0; i < 200; ++i) {
      sent.push_back(criteria::random_message(rng));
      auto b = encode(sent.back());
      stream.insert(stream.end(), b.begin(), b.end());
    }
    for (int round = 0; round < 5; ++round) {
      StreamDecoder dec;
      std::vector<Message> got;
      std::size_t pos = 0;
      while (pos < stream.size()) {
        std::size_t n = std::min<std::size_t>(1 + rng() % 97, stream.size() - pos);
        dec.feed(std::span(stream).subspan(pos, n));
        pos += n;
        for (;;) {
          auto r = dec.next();
          if (!r) {
            REQUIRE(r.error().code == DecodeErrorCode::Truncated);
            break;
          }
          got.push_back(std::move(*r));
        }
      }
      CHECK(got == sent);
      CHECK(dec.buffered() == 0);
    }
  }

  TEST_CASE("stream decoder errors are sticky") {
    StreamDecoder dec;
    dec.feed(raw({0x00, 0x01, 0x02}));
    CHECK(dec.next().error().code == DecodeErrorCode::BadMagic);
    auto good = encode(ExtendTap{"d"});
    dec.feed(good);
    CHECK(dec.next().error().code == DecodeErrorCode::BadMagic);
  }

  TEST_CASE("json view") {
    FrameChunk f{"d-1", 10, 2, 1, 3, raw({1, 2})};
    CHECK(to_json(f) ==
          R"({"blur_applied":3,"captured_at":10,"dropin_id":"d-1","height":1,"payload_len":2,"type":"FrameChunk","width":2})");
    CHECK(to_json(f, true).find(R"("payload_hex":"0102")") != std::string::npos);
    CHECK(from_json(R"({"type":"Nope"})").error().code == DecodeErrorCode::UnknownType);
    CHECK(from_json("not json").error().code == DecodeErrorCode::MalformedPayload);
    CHECK(from_json(R"({"type":"FrameChunk","dropin_id":"d","captured_at":0,"width":1,"height":1,"blur_applied":0,"payload_hex":"zz"})")
              .error()
              .code == DecodeErrorCode::MalformedPayload);
  }

  TEST_CASE("media classification") {
    CHECK(is_media(FrameChunk{}));
    CHECK(is_media(AudioChunk{}));
    CHECK_FALSE(is_media(Project{}));
    CHECK(type_name(MsgType::StartArcall) == "StartArcall");
  }

  TEST_CASE("codec criterion at reduced size") {
    auto v = criteria::codec(1000, 5000, 77);
    INFO(v.detail);
    CHECK(v.pass);
  }
}
