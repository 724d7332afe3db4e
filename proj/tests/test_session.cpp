// SPDX-License-Identifier: Apache-2.0

#include "criteria.hpp"
#include "doctest.h"
#include "session.hpp"

using namespace arcall::session;

namespace {

RawConfig raw(std::int64_t arcall, std::int64_t dropin, std::int64_t blur, const char* friend_id = "bob") {
  RawConfig r;
  r.arcall_duration_s = arcall;
  r.dropin_duration_s = dropin;
  r.blur_level = blur;
  r.friend_id = friend_id;
  return r;
}

SessionConfig cfg(std::int64_t arcall = 3600, std::int64_t dropin = 60, bool strict = false) {
  auto r = raw(arcall, dropin, 0);
  r.strict_extensions = strict;
  return *validate_config(r);
}

}  // namespace

TEST_SUITE("session") {
  TEST_CASE("validate_config ranges and field names") {
    CHECK(validate_config(raw(3600, 60, 0)).ok());
    auto short_call = validate_config(raw(240, 60, 0));
    REQUIRE_FALSE(short_call.ok());
    CHECK(short_call.error().code == ValidationCode::DurationOutOfRange);
    CHECK(short_call.error().field == "arcall_duration_s");
    auto short_drop = validate_config(raw(3600, 29, 0));
    REQUIRE_FALSE(short_drop.ok());
    CHECK(short_drop.error().field == "dropin_duration_s");
    auto blur = validate_config(raw(3600, 60, 11));
    REQUIRE_FALSE(blur.ok());
    CHECK(blur.error().code == ValidationCode::BlurOutOfRange);
    auto nobody = validate_config(raw(3600, 60, 0, ""));
    REQUIRE_FALSE(nobody.ok());
    CHECK(nobody.error().code == ValidationCode::MissingFriend);
    RawConfig missing;
    CHECK_FALSE(validate_config(missing).ok());
  }

  TEST_CASE("start_arcall sets the invite window") {
    IdSource ids;
    auto a = start_arcall(cfg(3600), "alice", 0, ids);
    CHECK(a.expires_at == 3'600'000);
    CHECK(a.state == State::Active);
    CHECK(a.friend_id == "bob");
    auto b = start_arcall(cfg(300), "alice", 12'345, ids);
    CHECK(b.expires_at == 12'345 + 300'000);
    CHECK(a.id != b.id);
  }

  TEST_CASE("drop_in examples") {
    IdSource ids;
    auto s = start_arcall(cfg(3600, 60), "alice", 0, ids);
    std::vector<DropInSession> ds;
    auto d = drop_in(s, ds, 100'000, ids);
    REQUIRE(d.ok());
    CHECK(d->ends_at == 160'000);
    CHECK(d->extensions == 0);
    CHECK(d->state == State::Active);
    ds.push_back(*d);
    auto again = drop_in(s, ds, 110'000, ids);
    REQUIRE_FALSE(again.ok());
    CHECK(again.error() == SessionError::AlreadyDroppedIn);
    auto late = drop_in(s, {}, 3'601'000, ids);
    REQUIRE_FALSE(late.ok());
    CHECK(late.error() == SessionError::SessionExpired);
    auto early = drop_in(s, {}, -1, ids);
    REQUIRE_FALSE(early.ok());
    CHECK(early.error() == SessionError::NotStarted);
  }

  TEST_CASE("extend adds 30 s to the current end") {
    IdSource ids;
    auto s = start_arcall(cfg(3600, 60), "alice", 0, ids);
    auto d = *drop_in(s, {}, 100'000, ids);
    auto e1 = extend_drop_in(d, s, 150'000);
    REQUIRE(e1.ok());
    CHECK(e1->ends_at == 190'000);
    CHECK(e1->extensions == 1);
    auto e2 = extend_drop_in(*e1, s, 151'000);
    REQUIRE(e2.ok());
    CHECK(e2->ends_at == d.started_at + 60'000 + 60'000);
    auto after = extend_drop_in(*e2, s, e2->ends_at);
    REQUIRE_FALSE(after.ok());
    CHECK(after.error() == SessionError::NotActive);

    auto many = d;
    for (int i = 0; i < 3; ++i) many = *extend_drop_in(many, s, 100'000);
    CHECK(many.extensions == 3);
    CHECK(many.ends_at - many.started_at == 60'000 + 90'000);
  }

  TEST_CASE("tick boundaries are inclusive and ordered") {
    IdSource ids;
    auto s = start_arcall(cfg(300, 60), "alice", 0, ids);
    std::vector<DropInSession> ds{*drop_in(s, {}, 10'000, ids)};
    CHECK(tick(s, ds, 69'999).empty());
    auto at_end = tick(s, ds, 70'000);
    REQUIRE(at_end.size() == 1);
    CHECK(at_end[0] == ExpiryEvent{ExpiryKind::DropInEnded, ds[0].id, 70'000});
    CHECK(tick(s, ds, 70'000).empty());

    auto s2 = start_arcall(cfg(300, 60), "alice", 0, ids);
    std::vector<DropInSession> ds2{*drop_in(s2, {}, 250'000, ids)};
    auto both = tick(s2, ds2, 400'000);
    REQUIRE(both.size() == 2);
    CHECK(both[0].kind == ExpiryKind::DropInEnded);
    CHECK(both[0].at == 310'000);
    CHECK(both[1].kind == ExpiryKind::ArcallExpired);
    CHECK(both[1].at == 300'000);
    CHECK(s2.state == State::Expired);
  }

  TEST_CASE("an extended drop-in outlives the session expiry, then the session expires") {
    IdSource ids;
    auto s = start_arcall(cfg(300, 60), "alice", 0, ids);
    std::vector<DropInSession> ds{*drop_in(s, {}, 280'000, ids)};
    ds[0] = *extend_drop_in(ds[0], s, 290'000);  // ends at 370 s
    CHECK(tick(s, ds, 300'000).empty());
    CHECK(s.state == State::Active);
    CHECK(next_deadline(s, ds) == 370'000);
    auto no_new = drop_in(s, {}, 300'000, ids);
    CHECK(no_new.error() == SessionError::SessionExpired);
    auto evs = tick(s, ds, 370'000);
    REQUIRE(evs.size() == 2);
    CHECK(evs[0].kind == ExpiryKind::DropInEnded);
    CHECK(evs[1].kind == ExpiryKind::ArcallExpired);
  }

  TEST_CASE("strict mode refuses extensions past the session expiry") {
    IdSource ids;
    auto s = start_arcall(cfg(300, 60, true), "alice", 0, ids);
    auto d = *drop_in(s, {}, 250'000, ids);
    auto r = extend_drop_in(d, s, 260'000);
    REQUIRE_FALSE(r.ok());
    CHECK(r.error() == SessionError::PastParentExpiry);
    auto ok = extend_drop_in(*drop_in(s, {}, 100'000, ids), s, 110'000);
    CHECK(ok.ok());
  }

  TEST_CASE("ending sessions and drop-ins") {
    IdSource ids;
    auto s = start_arcall(cfg(), "alice", 0, ids);
    std::vector<DropInSession> ds{*drop_in(s, {}, 1'000, ids)};
    auto evs = end_arcall(s, ds, 5'000);
    REQUIRE(evs.ok());
    CHECK(s.state == State::Ended);
    CHECK(ds[0].state == State::Ended);
    CHECK(ds[0].ended_at == 5'000);
    CHECK(end_arcall(s, ds, 6'000).error() == SessionError::NotActive);

    auto s2 = start_arcall(cfg(), "alice", 0, ids);
    std::vector<DropInSession> ds2{*drop_in(s2, {}, 1'000, ids)};
    CHECK(end_dropin(ds2[0], 2'000).ok());
    CHECK(s2.state == State::Active);
    CHECK(end_dropin(ds2[0], 3'000).error() == SessionError::NotActive);
    auto again = drop_in(s2, ds2, 4'000, ids);
    CHECK(again.ok());
    CHECK(drop_in(s, {}, 7'000, ids).error() == SessionError::SessionEnded);
  }

  TEST_CASE("next_deadline") {
    IdSource ids;
    auto s = start_arcall(cfg(300, 30), "alice", 0, ids);
    CHECK(next_deadline(s, {}) == 300'000);
    std::vector<DropInSession> ds{*drop_in(s, {}, 1'000, ids)};
    CHECK(next_deadline(s, ds) == 31'000);
    end_arcall(s, ds, 2'000);
    CHECK_FALSE(next_deadline(s, ds).has_value());
  }

  TEST_CASE("random sequences agree with the timeline oracle") {
    auto v = criteria::session_rules(2'000, 99);
    INFO(v.detail);
    CHECK(v.pass);
  }
}
