// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "result.hpp"
#include "session.hpp"

namespace arcall::catalog {

using ContentId = std::string;

/// Point or half-extent in normalized display coordinates.
struct Vec2 {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Vec2&) const = default;
};

enum class ContentKind {
  Object,    // head-locked 3D object, movable
  Particle,  // fills the whole display
};

struct ArContent {
  ContentId id;
  std::string name;
  ContentKind kind = ContentKind::Object;
  Vec2 default_anchor{0.5, 0.5};
  Vec2 footprint{0.15, 0.15};  // half-extents
};

struct ActiveContent {
  ContentId id;
  Vec2 anchor;
  Millis since = 0;
  bool operator==(const ActiveContent&) const = default;
};

struct HistoryEntry {
  ContentId id;
  Millis at = 0;
  bool operator==(const HistoryEntry&) const = default;
};

struct ProjectionState {
  std::optional<ActiveContent> active;
  std::vector<HistoryEntry> history;
  bool operator==(const ProjectionState&) const = default;
};

enum class CatalogError {
  UnknownContent,
  NoActiveDropIn,
  NoActiveContent,
  NotMovable,
  BadCatalogFile,
};

std::string_view to_string(ContentKind kind);
std::string_view to_string(CatalogError err);

class Catalog {
 public:
  Catalog() = default;
  explicit Catalog(std::vector<ArContent> items);

  const ArContent* find(std::string_view id) const;
  const std::vector<ArContent>& items() const { return items_; }
  std::size_t size() const { return items_.size(); }

 private:
  std::vector<ArContent> items_;
};

/// The eleven items used in the field deployment.
std::vector<ArContent> builtin_catalog();

/// Loads [{id, name, kind, anchor:[x,y], footprint:[w,h]}, ...].
Result<Catalog, std::string> load_catalog(const std::filesystem::path& path);
Result<Catalog, std::string> parse_catalog(std::string_view json_text);

/// True when the footprint centered at `anchor` lies inside the unit square.
bool footprint_inside(const Vec2& anchor, const Vec2& footprint);

/// Anchor moved the least distance needed to keep the footprint inside the
/// unit square.
Vec2 clamp_anchor(const Vec2& anchor, const Vec2& footprint);

Result<ProjectionState, CatalogError> project(const ProjectionState& state,
                                              const Catalog& catalog,
                                              std::string_view content,
                                              bool dropin_active, Millis now);

Result<ProjectionState, CatalogError> reposition(const ProjectionState& state,
                                                 const Catalog& catalog,
                                                 const Vec2& anchor);

ProjectionState clear_on_dropin_end(const ProjectionState& state);

}  // namespace arcall::catalog
