// SPDX-License-Identifier: Apache-2.0

/// \file media.hpp
/// \brief Privacy blur, the glasses field-of-view model and overlay
/// composition on 8-bit grayscale frames.

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "catalog.hpp"
#include "result.hpp"

namespace arcall::media {

inline constexpr int kMaxFrameSide = 4096;

struct Frame {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // row-major
  Millis captured_at = 0;

  bool valid() const;
  std::uint8_t at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
  bool operator==(const Frame&) const = default;
};

/// Pixel rectangle, half-open: [x, x + w) x [y, y + h).
struct Rect {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;
  bool contains(int px, int py) const { return px >= x && px < x + w && py >= y && py < y + h; }
  bool operator==(const Rect&) const = default;
};

/// Centered sub-rectangle of the phone view that the glasses can display,
/// as a fraction of each axis.
struct FovModel {
  double glasses_fraction = 0.4;
  bool valid() const { return glasses_fraction > 0.0 && glasses_fraction <= 1.0; }
};

struct BlurLevel {
  int level = 0;
};

/// Radius of the box kernel: ceil(level * min(w, h) / 20).
int blur_radius(int level, int width, int height);

/// Single-pass (2r+1)^2 box mean with edge replication and round-half-up.
/// Level 0 returns the frame unchanged.
Frame blur_frame(const Frame& frame, BlurLevel level);

Rect glasses_viewport(const FovModel& fov, int width, int height);

/// Fraction of the content's on-screen phone-view footprint that falls
/// outside the glasses viewport.
double view_mismatch(const catalog::ArContent& content, const catalog::Vec2& anchor,
                     const FovModel& fov);

/// Copy of `frame` with the active content footprint filled with 255,
/// clipped to the glasses viewport.
Frame compose_overlay(const Frame& frame, const catalog::ProjectionState& projection,
                      const catalog::Catalog& catalog, const FovModel& fov);

/// Binary PGM (P5, maxval 255).
std::vector<std::uint8_t> to_pgm(const Frame& frame);
Result<Frame, std::string> from_pgm(std::span<const std::uint8_t> bytes);
Result<Frame, std::string> read_pgm(const std::filesystem::path& path);
Result<bool, std::string> write_pgm(const std::filesystem::path& path, const Frame& frame);

double sample_variance(const Frame& frame);

}  // namespace arcall::media
