// SPDX-License-Identifier: Apache-2.0

#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "relay.hpp"

using namespace arcall;
using namespace arcall::relay;
namespace proto = arcall::protocol;

namespace {

constexpr ConnId kWearer = 1;
constexpr ConnId kFriend = 2;

struct Harness {
  Relay relay;
  Millis now = 0;

  explicit Harness(RelayOptions opts = {}, StoreData store = friends())
      : relay(opts, std::move(store), catalog::Catalog(catalog::builtin_catalog())) {}

  static StoreData friends() {
    StoreData s;
    s.friendships.add("alice", "bob");
    return s;
  }

  Output hello(ConnId c, const std::string& user, const std::string& role, const std::string& token = {}) {
    return relay.handle(c, proto::Hello{user, role, token}, now);
  }
  Output send(ConnId c, const proto::Message& m) { return relay.handle(c, m, now); }
  Output at(Millis t) {
    now = t;
    return relay.tick(now);
  }

  // Connects both sides, starts a session and opens a drop-in. Returns the drop-in id.
  std::string open(int blur = 0, bool presence = false, std::int64_t dropin_s = 60) {
    hello(kWearer, "alice", "wearer");
    hello(kFriend, "bob", "friend");
    proto::StartArcall start{"bob", 300, dropin_s, blur, presence};
    auto o = send(kWearer, start);
    auto invite = find<proto::InviteNotify>(o, kFriend);
    REQUIRE(invite);
    auto g = send(kFriend, proto::DropInRequest{invite->session_id});
    auto grant = find<proto::DropInGrant>(g, kFriend);
    REQUIRE(grant);
    return grant->dropin_id;
  }

  template <class T>
  static std::optional<T> find(const Output& o, ConnId to) {
    for (const auto& m : o.messages)
      if (m.to == to)
        if (auto* p = std::get_if<T>(&m.message)) return *p;
    return std::nullopt;
  }

  template <class T>
  static int count(const Output& o, ConnId to) {
    int n = 0;
    for (const auto& m : o.messages)
      if (m.to == to && std::holds_alternative<T>(m.message)) ++n;
    return n;
  }

  static std::string error_code(const Output& o, ConnId to) {
    auto e = find<proto::Error>(o, to);
    return e ? e->code : std::string{};
  }
};

proto::FrameChunk frame(const std::string& dropin, int w, int h, std::mt19937_64& rng) {
  proto::FrameChunk f{dropin, 0, w, h, 0, {}};
  for (int i = 0; i < w * h; ++i) f.payload.push_back(static_cast<std::uint8_t>(rng() & 0xFF));
  return f;
}

}  // namespace

TEST_SUITE("relay") {
  TEST_CASE("identification") {
    Harness h;
    CHECK(Harness::error_code(h.send(kWearer, proto::ExtendTap{"d1"}), kWearer) == "NotIdentified");
    auto bad = h.hello(kWearer, "alice", "pilot");
    CHECK(Harness::error_code(bad, kWearer) == "BadHello");
    CHECK(bad.close == std::vector<ConnId>{kWearer});
    h.hello(kWearer, "alice", "wearer");
    CHECK(h.relay.is_identified(kWearer));
    CHECK(Harness::error_code(h.hello(kWearer, "alice", "wearer"), kWearer) == "AlreadyIdentified");
    auto replaced = h.hello(9, "alice", "wearer");
    CHECK(replaced.close == std::vector<ConnId>{kWearer});
    CHECK_FALSE(h.relay.is_identified(kWearer));
  }

  TEST_CASE("tokens") {
    StoreData s = Harness::friends();
    s.tokens["alice"] = "secret";
    Harness h({}, s);
    auto r = h.hello(kWearer, "alice", "wearer", "guess");
    CHECK(Harness::error_code(r, kWearer) == "BadToken");
    CHECK_FALSE(h.relay.is_identified(kWearer));
    h.hello(kWearer, "alice", "wearer", "secret");
    CHECK(h.relay.is_identified(kWearer));
    h.hello(kFriend, "bob", "friend");  // no token registered
    CHECK(h.relay.is_identified(kFriend));
  }

  TEST_CASE("start requires friendship and a valid config") {
    Harness h;
    h.hello(kWearer, "alice", "wearer");
    CHECK(Harness::error_code(h.send(kWearer, proto::StartArcall{"carol", 300, 60, 0, false}), kWearer) ==
          "NotFriends");
    CHECK(Harness::error_code(h.send(kWearer, proto::StartArcall{"bob", 299, 60, 0, false}), kWearer) ==
          "InvalidConfig");
    CHECK(Harness::error_code(h.send(kWearer, proto::StartArcall{"bob", 300, 60, 11, false}), kWearer) ==
          "InvalidConfig");
    h.hello(kFriend, "bob", "friend");
    CHECK(Harness::error_code(h.send(kFriend, proto::StartArcall{"alice", 300, 60, 0, false}), kFriend) ==
          "WrongRole");
    auto ok = h.send(kWearer, proto::StartArcall{"bob", 300, 60, 0, false});
    auto inv = Harness::find<proto::InviteNotify>(ok, kFriend);
    REQUIRE(inv);
    CHECK(inv->expires_at == 300'000);
    CHECK(h.relay.take_store_dirty());
    REQUIRE(h.relay.store().preferences.get("alice"));
  }

  TEST_CASE("offline invite is queued and delivered on connect") {
    Harness h;
    h.hello(kWearer, "alice", "wearer");
    auto o = h.send(kWearer, proto::StartArcall{"bob", 300, 60, 0, false});
    CHECK(Harness::count<proto::InviteNotify>(o, kFriend) == 0);
    h.now = 5000;
    auto c = h.hello(kFriend, "bob", "friend");
    auto inv = Harness::find<proto::InviteNotify>(c, kFriend);
    REQUIRE(inv);
    CHECK(inv->wearer == "alice");
  }

  TEST_CASE("queued invite for an expired session is discarded") {
    Harness h;
    h.hello(kWearer, "alice", "wearer");
    h.send(kWearer, proto::StartArcall{"bob", 300, 60, 0, false});
    h.at(300'000);
    auto c = h.hello(kFriend, "bob", "friend");
    CHECK(Harness::count<proto::InviteNotify>(c, kFriend) == 0);
  }

  TEST_CASE("drop-in denials") {
    Harness h;
    h.hello(kFriend, "bob", "friend");
    auto o = h.send(kFriend, proto::DropInRequest{"s404"});
    auto deny = Harness::find<proto::DropInDeny>(o, kFriend);
    REQUIRE(deny);
    CHECK(deny->reason == "NotInvited");

    h.hello(kWearer, "alice", "wearer");
    auto s = Harness::find<proto::InviteNotify>(h.send(kWearer, proto::StartArcall{"bob", 300, 60, 0, false}), kFriend);
    REQUIRE(s);
    h.at(300'000);
    auto late = Harness::find<proto::DropInDeny>(h.send(kFriend, proto::DropInRequest{s->session_id}), kFriend);
    REQUIRE(late);
    CHECK(late->reason == "SessionExpired");
  }

  TEST_CASE("second drop-in while one runs is denied") {
    Harness h;
    auto d = h.open();
    auto s = h.relay.current_session("alice");
    REQUIRE(s);
    auto deny = Harness::find<proto::DropInDeny>(h.send(kFriend, proto::DropInRequest{*s}), kFriend);
    REQUIRE(deny);
    CHECK(deny->reason == "AlreadyDroppedIn");
  }

  TEST_CASE("blur 0 frames pass bit-identical") {
    Harness h;
    auto d = h.open(0);
    std::mt19937_64 rng(1);
    auto f = frame(d, 32, 24, rng);
    auto out = Harness::find<proto::FrameChunk>(h.send(kWearer, f), kFriend);
    REQUIRE(out);
    CHECK(out->payload == f.payload);
    CHECK(out->blur_applied == 0);
  }

  TEST_CASE("blur 10 frames match the oracle") {
    Harness h;
    auto d = h.open(10);
    std::mt19937_64 rng(2);
    for (int i = 0; i < 5; ++i) {
      auto f = frame(d, 8 + static_cast<int>(rng() % 30), 8 + static_cast<int>(rng() % 30), rng);
      auto out = Harness::find<proto::FrameChunk>(h.send(kWearer, f), kFriend);
      REQUIRE(out);
      CHECK(out->blur_applied == 10);
      CHECK(out->payload ==
            oracle::brute_blur(f.payload, static_cast<int>(f.width), static_cast<int>(f.height), 10));
    }
  }

  TEST_CASE("frames outside a drop-in are dropped and counted") {
    Harness h;
    auto d = h.open();
    std::mt19937_64 rng(3);
    h.now = 60'000;
    auto end = h.send(kWearer, frame(d, 4, 4, rng));
    CHECK(Harness::count<proto::DropInEnd>(end, kFriend) == 1);
    CHECK(Harness::count<proto::FrameChunk>(end, kFriend) == 0);
    CHECK(h.relay.stats().frames_dropped == 1);

    proto::FrameChunk broken{d, 0, 4, 4, 0, {1, 2, 3}};
    h.send(kWearer, broken);
    CHECK(h.relay.stats().frames_dropped == 2);
  }

  TEST_CASE("mute drops friend audio only") {
    Harness h;
    auto d = h.open();
    CHECK(Harness::count<proto::AudioChunk>(h.send(kFriend, proto::AudioChunk{d, 1, "bob", {1}}), kWearer) == 1);
    auto m = h.send(kFriend, proto::MuteToggle{d, true});
    CHECK(Harness::count<proto::MuteToggle>(m, kWearer) == 1);
    CHECK(Harness::count<proto::AudioChunk>(h.send(kFriend, proto::AudioChunk{d, 2, "bob", {1}}), kWearer) == 0);
    CHECK(h.relay.stats().audio_dropped == 1);
    auto w = Harness::find<proto::AudioChunk>(h.send(kWearer, proto::AudioChunk{d, 3, "", {9}}), kFriend);
    REQUIRE(w);
    CHECK(w->sender == "alice");
    h.send(kFriend, proto::MuteToggle{d, false});
    CHECK(Harness::count<proto::AudioChunk>(h.send(kFriend, proto::AudioChunk{d, 4, "bob", {1}}), kWearer) == 1);
  }

  TEST_CASE("projection rules") {
    Harness h;
    auto d = h.open();
    CHECK(Harness::error_code(h.send(kWearer, proto::Project{d, "dragon"}), kWearer) == "WrongRole");
    CHECK(Harness::error_code(h.send(kFriend, proto::Project{d, "unicorn-x"}), kFriend) == "UnknownContent");
    CHECK(Harness::error_code(h.send(kFriend, proto::Reposition{d, 0.1, 0.1}), kFriend) == "NoActiveContent");
    auto p = h.send(kFriend, proto::Project{d, "dragon"});
    CHECK(Harness::count<proto::Project>(p, kWearer) == 1);
    auto r = Harness::find<proto::Reposition>(h.send(kFriend, proto::Reposition{d, -3.0, 0.5}), kWearer);
    REQUIRE(r);
    CHECK(r->anchor_x >= 0.0);
    CHECK(Harness::error_code(h.send(kWearer, proto::Reposition{d, 0.5, 0.5}), kWearer) == "WrongRole");
    h.send(kFriend, proto::Project{d, "snow"});
    CHECK(Harness::error_code(h.send(kFriend, proto::Reposition{d, 0.2, 0.2}), kFriend) == "NotMovable");
    auto view = h.relay.find_session(*h.relay.current_session("alice"));
    REQUIRE(view);
    REQUIRE(view->projection.active);
    CHECK(view->projection.active->id == "snow");
    CHECK(view->projection.history.size() == 2);
  }

  TEST_CASE("wearer reposition can be enabled") {
    RelayOptions opts;
    opts.wearer_can_reposition = true;
    Harness h(opts);
    auto d = h.open();
    h.send(kFriend, proto::Project{d, "dragon"});
    CHECK(Harness::count<proto::Reposition>(h.send(kWearer, proto::Reposition{d, 0.4, 0.4}), kFriend) == 1);
  }

  TEST_CASE("extension taps") {
    Harness h;
    auto d = h.open();
    CHECK(Harness::error_code(h.send(kFriend, proto::ExtendTap{d}), kFriend) == "WrongRole");
    for (int i = 1; i <= 3; ++i) {
      h.now = i * 1000;
      auto sync = Harness::find<proto::TimerSync>(h.send(kWearer, proto::ExtendTap{d}), kFriend);
      REQUIRE(sync);
      CHECK(sync->remaining_ms == 60'000 + i * 30'000 - h.now);
    }
    CHECK(Harness::count<proto::DropInEnd>(h.at(149'999), kFriend) == 0);
    auto end = h.at(150'000);
    auto e = Harness::find<proto::DropInEnd>(end, kFriend);
    REQUIRE(e);
    CHECK(e->cause == "timeout");
    CHECK(Harness::error_code(h.send(kWearer, proto::ExtendTap{d}), kWearer) == "NotActive");
  }

  TEST_CASE("timer sync is periodic and monotone") {
    Harness h;
    auto d = h.open();
    std::int64_t last = 60'001;
    int syncs = 0;
    for (Millis t = 0; t < 60'000; t += 250) {
      for (const auto& m : h.at(t).messages)
        if (auto* s = std::get_if<proto::TimerSync>(&m.message); s && m.to == kFriend) {
          CHECK(s->remaining_ms < last);
          CHECK(s->remaining_ms == 60'000 - t);
          last = s->remaining_ms;
          ++syncs;
        }
    }
    CHECK(syncs == 5);
    auto next = h.relay.next_deadline();
    REQUIRE(next);
    CHECK(*next == 60'000);
  }

  TEST_CASE("presence indicator reaches the wearer") {
    Harness on;
    on.hello(kWearer, "alice", "wearer");
    on.hello(kFriend, "bob", "friend");
    auto inv = Harness::find<proto::InviteNotify>(on.send(kWearer, proto::StartArcall{"bob", 300, 60, 0, true}), kFriend);
    REQUIRE(inv);
    auto g = on.send(kFriend, proto::DropInRequest{inv->session_id});
    auto wg = Harness::find<proto::DropInGrant>(g, kWearer);
    REQUIRE(wg);
    CHECK(wg->presence_indicator);

    Harness off;
    off.open(0, false);
    CHECK_FALSE(Harness::find<proto::DropInGrant>(off.send(kFriend, proto::DropInRequest{*off.relay.current_session("alice")}), kWearer));
  }

  TEST_CASE("ending") {
    Harness h;
    auto d = h.open();
    auto s = *h.relay.current_session("alice");
    auto e = h.send(kFriend, proto::DropInEnd{d, ""});
    auto end = Harness::find<proto::DropInEnd>(e, kWearer);
    REQUIRE(end);
    CHECK(end->cause == "friend_hangup");
    CHECK(Harness::error_code(h.send(kFriend, proto::SessionEnd{s, ""}), kFriend) == "WrongRole");
    auto se = Harness::find<proto::SessionEnd>(h.send(kWearer, proto::SessionEnd{s, ""}), kFriend);
    REQUIRE(se);
    CHECK(se->cause == "wearer");
    CHECK_FALSE(h.relay.current_session("alice"));
    auto deny = Harness::find<proto::DropInDeny>(h.send(kFriend, proto::DropInRequest{s}), kFriend);
    REQUIRE(deny);
    CHECK(deny->reason == "SessionEnded");
  }

  TEST_CASE("a new start replaces the previous session") {
    Harness h;
    auto d = h.open();
    auto first = *h.relay.current_session("alice");
    auto o = h.send(kWearer, proto::StartArcall{"bob", 600, 30, 0, false});
    CHECK(Harness::count<proto::DropInEnd>(o, kFriend) == 1);
    auto se = Harness::find<proto::SessionEnd>(o, kFriend);
    REQUIRE(se);
    CHECK(se->session_id == first);
    CHECK(se->cause == "replaced");
    CHECK(*h.relay.current_session("alice") != first);
  }

  TEST_CASE("server-originated messages are rejected from clients") {
    Harness h;
    auto d = h.open();
    CHECK(Harness::error_code(h.send(kFriend, proto::TimerSync{d, 5}), kFriend) == "UnexpectedMessage");
    CHECK(Harness::error_code(h.send(kWearer, proto::DropInGrant{d, 0, false}), kWearer) == "UnexpectedMessage");
  }

  TEST_CASE("random traffic never leaks media or projection outside an active drop-in") {
    std::mt19937_64 rng(99);
    int relayed = 0;
    for (int run = 0; run < 30; ++run) {
      StoreData store = Harness::friends();
      store.friendships.add("alice", "carol");
      Harness h({}, store);
      const std::vector<std::pair<std::string, std::string>> who = {
          {"alice", "wearer"}, {"bob", "friend"}, {"carol", "friend"}, {"bob", "wearer"}};
      std::vector<std::string> dropins = {"d1", "d2", "d3", "bogus"};
      int blur = static_cast<int>(rng() % 11);
      for (int step = 0; step < 400; ++step) {
        h.now += static_cast<Millis>(rng() % 1500);
        const ConnId c = 1 + rng() % who.size();
        if (!h.relay.is_identified(c)) {
          h.hello(c, who[c - 1].first, who[c - 1].second);
          continue;
        }
        std::string d = dropins[rng() % dropins.size()];
        if (auto cur = h.relay.current_session("alice"); cur && rng() % 4 != 0)
          if (auto v = h.relay.find_session(*cur); v && !v->dropins.empty()) d = v->dropins.back().id;
        proto::Message m;
        switch (rng() % 11) {
          case 0: m = proto::StartArcall{rng() % 2 ? "bob" : "carol", 300, 30 + static_cast<std::int64_t>(rng() % 31), blur, rng() % 2 == 0}; break;
          case 1: {
            auto s = h.relay.current_session("alice");
            m = proto::DropInRequest{s && rng() % 4 ? *s : "s" + std::to_string(rng() % 4)};
            break;
          }
          case 2: m = frame(d, 6, 5, rng); break;
          case 3: m = proto::AudioChunk{d, step, "", {1, 2}}; break;
          case 4: m = proto::MuteToggle{d, rng() % 2 == 0}; break;
          case 5: m = proto::Project{d, rng() % 2 ? "dragon" : "snow"}; break;
          case 6: m = proto::Reposition{d, 0.3, 0.7}; break;
          case 7: m = proto::ExtendTap{d}; break;
          case 8: m = proto::DropInEnd{d, ""}; break;
          case 9: m = proto::SessionEnd{h.relay.current_session("alice").value_or("s1"), ""}; break;
          default: h.relay.disconnect(c, h.now); continue;
        }
        auto out = h.send(c, m);
        for (const auto& o : out.messages) {
          std::string id;
          if (auto* f = std::get_if<proto::FrameChunk>(&o.message)) {
            id = f->dropin_id;
            CHECK(f->blur_applied == blur);
          } else if (auto* a = std::get_if<proto::AudioChunk>(&o.message)) id = a->dropin_id;
          else if (auto* p = std::get_if<proto::Project>(&o.message)) id = p->dropin_id;
          else if (auto* r = std::get_if<proto::Reposition>(&o.message)) id = r->dropin_id;
          else continue;
          bool active = false;
          for (int s = 1; s <= 400; ++s)
            if (auto v = h.relay.find_session("s" + std::to_string(s)))
              for (const auto& di : v->dropins)
                if (di.id == id && di.active() && h.now < di.ends_at) active = true;
          ++relayed;
          CHECK_MESSAGE(active, "leak of ", proto::type_name(proto::type_of(o.message)), " for ", id);
        }
      }
    }
    CHECK(relayed > 100);
  }
}
