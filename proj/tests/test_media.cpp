// SPDX-License-Identifier: Apache-2.0

#include <random>

#include "catalog.hpp"
#include "criteria.hpp"
#include "doctest.h"
#include "media.hpp"
#include "oracles.hpp"

using namespace arcall::media;
using arcall::catalog::ArContent;
using arcall::catalog::Catalog;
using arcall::catalog::ContentKind;
using arcall::catalog::ProjectionState;
using arcall::catalog::Vec2;

namespace {

Frame gradient4() {
  Frame f;
  f.width = f.height = 4;
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) f.pixels.push_back(static_cast<std::uint8_t>(x * 16 + y * 64));
  return f;
}

Frame random_frame(std::mt19937_64& rng, int w, int h) {
  Frame f;
  f.width = w;
  f.height = h;
  f.pixels.resize(static_cast<std::size_t>(w) * h);
  for (auto& p : f.pixels) p = static_cast<std::uint8_t>(rng() & 0xFF);
  return f;
}

ProjectionState showing(const std::string& id, Vec2 anchor) {
  ProjectionState st;
  st.active = arcall::catalog::ActiveContent{id, anchor, 0};
  return st;
}

}  // namespace

TEST_SUITE("media") {
  TEST_CASE("blur radius ladder") {
    CHECK(blur_radius(0, 640, 480) == 0);
    CHECK(blur_radius(1, 640, 480) == 24);
    CHECK(blur_radius(10, 640, 480) == 240);
    CHECK(blur_radius(5, 4, 4) == 1);
    CHECK(blur_radius(1, 1, 1) == 1);
  }

  TEST_CASE("level 0 and constant frames") {
    std::mt19937_64 rng(3);
    auto f = random_frame(rng, 17, 9);
    CHECK(blur_frame(f, {0}) == f);
    Frame flat;
    flat.width = 13;
    flat.height = 7;
    flat.pixels.assign(13 * 7, 77);
    for (int level = 0; level <= 10; ++level) CHECK(blur_frame(flat, {level}).pixels == flat.pixels);
  }

  TEST_CASE("4x4 gradient goldens") {
    const std::vector<std::uint8_t> level5 = {27, 37, 53, 64, 69, 80, 96, 107, 133, 144, 160, 171, 176, 187, 203, 213};
    const std::vector<std::uint8_t> level10 = {48, 58, 67, 77, 86, 96, 106, 115, 125, 134, 144, 154, 163, 173, 182, 192};
    CHECK(blur_frame(gradient4(), {5}).pixels == level5);
    CHECK(blur_frame(gradient4(), {10}).pixels == level10);

    auto golden = read_pgm(std::string(ARCALL_FIXTURE_DIR) + "/gradient4x4_level5.pgm");
    REQUIRE(golden.ok());
    CHECK(golden->pixels == level5);
    auto bytes = to_pgm(blur_frame(gradient4(), {5}));
    std::vector<std::uint8_t> expected{'P', '5', '\n', '4', ' ', '4', '\n', '2', '5', '5', '\n'};
    expected.insert(expected.end(), level5.begin(), level5.end());
    CHECK(bytes == expected);
  }

  TEST_CASE("blur matches the brute-force oracle on random frames") {
    auto v = criteria::blur_oracle(60, 21);
    INFO(v.detail);
    CHECK(v.pass);
  }

  TEST_CASE("pgm round trip and errors") {
    std::mt19937_64 rng(4);
    auto f = random_frame(rng, 5, 3);
    auto back = from_pgm(to_pgm(f));
    REQUIRE(back.ok());
    CHECK(back->pixels == f.pixels);
    CHECK(back->width == 5);
    const std::string comment = "P5\n# made by hand\n2 1\n255\n\x01\x02";
    auto c = from_pgm(std::span(reinterpret_cast<const std::uint8_t*>(comment.data()), comment.size()));
    REQUIRE(c.ok());
    CHECK(c->pixels == std::vector<std::uint8_t>{1, 2});
    auto bad = [](std::string s) {
      return !from_pgm(std::span(reinterpret_cast<const std::uint8_t*>(s.data()), s.size())).ok();
    };
    CHECK(bad("P2\n1 1\n255\n0"));
    CHECK(bad("P5\n2 2\n255\n\x01"));
    CHECK(bad("P5\n0 2\n255\n"));
    CHECK(bad("P5\n1 1\n65535\n\x01\x01"));
    CHECK(bad(""));
  }

  TEST_CASE("glasses viewport") {
    CHECK(glasses_viewport({1.0}, 640, 480) == Rect{0, 0, 640, 480});
    CHECK(glasses_viewport({0.5}, 100, 100) == Rect{25, 25, 50, 50});
    CHECK(glasses_viewport({0.5}, 3, 3) == Rect{1, 1, 2, 2});
    CHECK(glasses_viewport({0.01}, 10, 10) == Rect{5, 5, 1, 1});
  }

  TEST_CASE("view_mismatch examples") {
    Catalog cat(arcall::catalog::builtin_catalog());
    CHECK(view_mismatch(*cat.find("snow"), {0.5, 0.5}, {0.5}) == 0.75);
    ArContent small{"pin", "Pin", ContentKind::Object, {0.5, 0.5}, {0.1, 0.1}};
    CHECK(view_mismatch(small, {0.5, 0.5}, {0.5}) == 0.0);
    ArContent wide{"wide", "Wide", ContentKind::Object, {0.5, 0.5}, {0.3, 0.3}};
    const double got = view_mismatch(wide, {0.9, 0.5}, {0.5});
    const double mc = oracle::mc_view_mismatch(0.9, 0.5, 0.3, 0.3, 0.5, 1000, 1);
    CHECK(std::abs(got - mc) <= 1e-3);
    CHECK(got == doctest::Approx(0.6875));
  }

  TEST_CASE("view_mismatch properties") {
    Catalog cat(arcall::catalog::builtin_catalog());
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 2000; ++i) {
      const auto& c = cat.items()[rng() % cat.size()];
      Vec2 a{u(rng), u(rng)};
      CHECK(view_mismatch(c, a, {1.0}) == 0.0);
      double f1 = 0.05 + 0.95 * u(rng), f2 = 0.05 + 0.95 * u(rng);
      if (f1 > f2) std::swap(f1, f2);
      const double m1 = view_mismatch(c, a, {f1}), m2 = view_mismatch(c, a, {f2});
      CHECK(m1 >= m2 - 1e-12);
      CHECK(m1 >= 0.0);
      CHECK(m1 <= 1.0);
    }
    auto v = criteria::view_mismatch(20, 33);
    INFO(v.detail);
    CHECK(v.pass);
  }

  TEST_CASE("compose_overlay") {
    Catalog cat(arcall::catalog::builtin_catalog());
    Frame f;
    f.width = f.height = 100;
    f.pixels.assign(100 * 100, 10);
    CHECK(compose_overlay(f, {}, cat, {0.5}) == f);

    auto full = compose_overlay(f, showing("snow", {0.5, 0.5}), cat, {1.0});
    CHECK(std::all_of(full.pixels.begin(), full.pixels.end(), [](auto p) { return p == 255; }));

    Catalog big({ArContent{"big", "Big", ContentKind::Object, {0.5, 0.5}, {0.45, 0.45}}});
    auto out = compose_overlay(f, showing("big", {0.5, 0.5}), big, {0.5});
    for (int y = 0; y < 100; ++y)
      for (int x = 0; x < 100; ++x) {
        const bool inside = x >= 25 && x < 75 && y >= 25 && y < 75;
        CHECK_MESSAGE(out.at(x, y) == (inside ? 255 : 10), x, ",", y);
      }

    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 300; ++i) {
      const int w = 1 + static_cast<int>(rng() % 64), h = 1 + static_cast<int>(rng() % 64);
      Frame g;
      g.width = w;
      g.height = h;
      g.pixels.assign(static_cast<std::size_t>(w) * h, 0);
      const auto& c = cat.items()[rng() % cat.size()];
      FovModel fov{0.05 + 0.95 * u(rng)};
      auto o = compose_overlay(g, showing(c.id, {u(rng), u(rng)}), cat, fov);
      auto vp = glasses_viewport(fov, w, h);
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
          if (!vp.contains(x, y)) REQUIRE(o.at(x, y) == 0);
    }
  }

  TEST_CASE("sample variance") {
    Frame f;
    f.width = 2;
    f.height = 1;
    f.pixels = {0, 10};
    CHECK(sample_variance(f) == doctest::Approx(oracle::variance(f.pixels)));
  }
}
