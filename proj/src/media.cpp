// SPDX-License-Identifier: Apache-2.0

#include "media.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>

namespace arcall::media {

namespace {

int round_half_up(double v) { return static_cast<int>(std::floor(v + 0.5)); }

// Pixel span [lo, hi) covered by normalized interval [a, b] on an axis of n px.
std::pair<int, int> to_pixels(double a, double b, int n) {
  int lo = std::clamp(round_half_up(a * n), 0, n);
  int hi = std::clamp(round_half_up(b * n), 0, n);
  return {lo, std::max(lo, hi)};
}

}  // namespace

bool Frame::valid() const {
  return width >= 1 && height >= 1 && width <= kMaxFrameSide && height <= kMaxFrameSide &&
         pixels.size() == static_cast<std::size_t>(width) * height;
}

int blur_radius(int level, int width, int height) {
  if (level <= 0) return 0;
  int short_side = std::min(width, height);
  return (level * short_side + 19) / 20;
}

Frame blur_frame(const Frame& frame, BlurLevel level) {
  const int r = blur_radius(level.level, frame.width, frame.height);
  if (r == 0) return frame;

  const int w = frame.width;
  const int h = frame.height;
  const std::int64_t count = static_cast<std::int64_t>(2 * r + 1) * (2 * r + 1);

  // Horizontal window sums over edge-replicated rows, then vertical sums of
  // those with the same replication. Both passes are exact integer sums.
  std::vector<std::int64_t> rows(static_cast<std::size_t>(w) * h);
  std::vector<std::int64_t> prefix(static_cast<std::size_t>(w + 2 * r) + 1);
  for (int y = 0; y < h; ++y) {
    prefix[0] = 0;
    for (int i = 0; i < w + 2 * r; ++i) {
      int sx = std::clamp(i - r, 0, w - 1);
      prefix[i + 1] = prefix[i] + frame.at(sx, y);
    }
    for (int x = 0; x < w; ++x)
      rows[static_cast<std::size_t>(y) * w + x] = prefix[x + 2 * r + 1] - prefix[x];
  }

  Frame out;
  out.width = w;
  out.height = h;
  out.captured_at = frame.captured_at;
  out.pixels.resize(frame.pixels.size());
  std::vector<std::int64_t> col(static_cast<std::size_t>(h + 2 * r) + 1);
  for (int x = 0; x < w; ++x) {
    col[0] = 0;
    for (int i = 0; i < h + 2 * r; ++i) {
      int sy = std::clamp(i - r, 0, h - 1);
      col[i + 1] = col[i] + rows[static_cast<std::size_t>(sy) * w + x];
    }
    for (int y = 0; y < h; ++y) {
      std::int64_t sum = col[y + 2 * r + 1] - col[y];
      out.pixels[static_cast<std::size_t>(y) * w + x] =
          static_cast<std::uint8_t>((2 * sum + count) / (2 * count));
    }
  }
  return out;
}

Rect glasses_viewport(const FovModel& fov, int width, int height) {
  double f = std::clamp(fov.glasses_fraction, 0.0, 1.0);
  int vw = std::clamp(round_half_up(f * width), 1, std::max(1, width));
  int vh = std::clamp(round_half_up(f * height), 1, std::max(1, height));
  return {(width - vw + 1) / 2, (height - vh + 1) / 2, vw, vh};
}

double view_mismatch(const catalog::ArContent& content, const catalog::Vec2& anchor,
                     const FovModel& fov) {
  double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (content.kind == catalog::ContentKind::Object) {
    x0 = std::max(0.0, anchor.x - content.footprint.x);
    x1 = std::min(1.0, anchor.x + content.footprint.x);
    y0 = std::max(0.0, anchor.y - content.footprint.y);
    y1 = std::min(1.0, anchor.y + content.footprint.y);
  }
  double area = std::max(0.0, x1 - x0) * std::max(0.0, y1 - y0);
  if (area <= 0.0) return 0.0;

  double f = std::clamp(fov.glasses_fraction, 0.0, 1.0);
  double lo = (1.0 - f) / 2.0;
  double hi = (1.0 + f) / 2.0;
  // A footprint spanning the viewport on an axis overlaps it by exactly f.
  auto overlap = [&](double a, double b) {
    if (a <= lo && b >= hi) return f;
    return std::max(0.0, std::min(b, hi) - std::max(a, lo));
  };
  double ix = overlap(x0, x1);
  double iy = overlap(y0, y1);
  return std::clamp(1.0 - (ix * iy) / area, 0.0, 1.0);
}

Frame compose_overlay(const Frame& frame, const catalog::ProjectionState& projection,
                      const catalog::Catalog& catalog, const FovModel& fov) {
  Frame out = frame;
  if (!projection.active) return out;
  const catalog::ArContent* item = catalog.find(projection.active->id);
  if (!item) return out;

  std::pair<int, int> xs{0, frame.width};
  std::pair<int, int> ys{0, frame.height};
  if (item->kind == catalog::ContentKind::Object) {
    const auto& a = projection.active->anchor;
    xs = to_pixels(a.x - item->footprint.x, a.x + item->footprint.x, frame.width);
    ys = to_pixels(a.y - item->footprint.y, a.y + item->footprint.y, frame.height);
  }
  Rect vp = glasses_viewport(fov, frame.width, frame.height);
  int x0 = std::max(xs.first, vp.x), x1 = std::min(xs.second, vp.x + vp.w);
  int y0 = std::max(ys.first, vp.y), y1 = std::min(ys.second, vp.y + vp.h);
  for (int y = y0; y < y1; ++y)
    for (int x = x0; x < x1; ++x) out.pixels[static_cast<std::size_t>(y) * frame.width + x] = 255;
  return out;
}

std::vector<std::uint8_t> to_pgm(const Frame& frame) {
  std::string header = "P5\n" + std::to_string(frame.width) + " " +
                       std::to_string(frame.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), frame.pixels.begin(), frame.pixels.end());
  return out;
}

Result<Frame, std::string> from_pgm(std::span<const std::uint8_t> bytes) {
  std::size_t pos = 0;
  auto skip_space = [&] {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto read_int = [&]() -> long {
    skip_space();
    long v = -1;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) {
      v = (v < 0 ? 0 : v) * 10 + (bytes[pos++] - '0');
      if (v > 1'000'000) return -1;
    }
    return v;
  };

  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') return fail(std::string("not a P5 PGM"));
  pos = 2;
  long w = read_int(), h = read_int(), maxval = read_int();
  if (w < 1 || h < 1 || w > kMaxFrameSide || h > kMaxFrameSide) return fail(std::string("bad PGM dimensions"));
  if (maxval != 255) return fail(std::string("only maxval 255 is supported"));
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) return fail(std::string("bad PGM header"));
  ++pos;
  std::size_t n = static_cast<std::size_t>(w) * h;
  if (bytes.size() - pos < n) return fail(std::string("truncated PGM raster"));
  Frame f;
  f.width = static_cast<int>(w);
  f.height = static_cast<int>(h);
  f.pixels.assign(bytes.begin() + pos, bytes.begin() + pos + n);
  return f;
}

Result<Frame, std::string> read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return fail("cannot open " + path.string());
  std::vector<std::uint8_t> data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return from_pgm(data);
}

Result<bool, std::string> write_pgm(const std::filesystem::path& path, const Frame& frame) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) return fail("cannot write " + path.string());
  auto bytes = to_pgm(frame);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) return fail("write failed for " + path.string());
  return true;
}

double sample_variance(const Frame& frame) {
  if (frame.pixels.empty()) return 0.0;
  double mean = 0.0;
  for (auto p : frame.pixels) mean += p;
  mean /= static_cast<double>(frame.pixels.size());
  double acc = 0.0;
  for (auto p : frame.pixels) acc += (p - mean) * (p - mean);
  return acc / static_cast<double>(frame.pixels.size());
}

}  // namespace arcall::media
