// SPDX-License-Identifier: Apache-2.0

#include "catalog.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace arcall::catalog {

std::string_view to_string(ContentKind kind) {
  return kind == ContentKind::Particle ? "particle" : "object";
}

std::string_view to_string(CatalogError err) {
  switch (err) {
    case CatalogError::UnknownContent: return "UnknownContent";
    case CatalogError::NoActiveDropIn: return "NoActiveDropIn";
    case CatalogError::NoActiveContent: return "NoActiveContent";
    case CatalogError::NotMovable: return "NotMovable";
    case CatalogError::BadCatalogFile: return "BadCatalogFile";
  }
  return "Unknown";
}

Catalog::Catalog(std::vector<ArContent> items) : items_(std::move(items)) {}

const ArContent* Catalog::find(std::string_view id) const {
  auto it = std::find_if(items_.begin(), items_.end(),
                         [&](const ArContent& c) { return c.id == id; });
  return it == items_.end() ? nullptr : &*it;
}

std::vector<ArContent> builtin_catalog() {
  auto object = [](std::string id, std::string name, double w, double h) {
    return ArContent{std::move(id), std::move(name), ContentKind::Object,
                     {0.5, 0.5}, {w, h}};
  };
  return {
      object("bird", "Bird", 0.15, 0.12),
      object("dragon", "Dragon", 0.3, 0.25),
      object("ornaments", "Holiday ornaments", 0.25, 0.2),
      object("gifts", "Holiday gifts", 0.2, 0.15),
      ArContent{"snow", "Snow", ContentKind::Particle, {0.5, 0.5}, {0.5, 0.5}},
      object("star_of_david", "Star of David", 0.15, 0.15),
      object("whale", "Whale", 0.35, 0.2),
      object("mistletoe", "Mistletoe sprig", 0.12, 0.12),
      object("unicorn", "Unicorn", 0.25, 0.25),
      object("reindeer", "Reindeer", 0.25, 0.25),
      object("santa_sleigh", "Santa on a sleigh", 0.4, 0.2),
  };
}

bool footprint_inside(const Vec2& anchor, const Vec2& fp) {
  return anchor.x - fp.x >= 0.0 && anchor.x + fp.x <= 1.0 &&
         anchor.y - fp.y >= 0.0 && anchor.y + fp.y <= 1.0;
}

Vec2 clamp_anchor(const Vec2& anchor, const Vec2& fp) {
  auto clamp1 = [](double v, double half) {
    if (half >= 0.5) return 0.5;
    return std::clamp(v, half, 1.0 - half);
  };
  return {clamp1(anchor.x, fp.x), clamp1(anchor.y, fp.y)};
}

namespace {

Result<ArContent, std::string> content_from_json(const nlohmann::json& j) {
  try {
    ArContent c;
    c.id = j.at("id").get<std::string>();
    c.name = j.value("name", c.id);
    auto kind = j.at("kind").get<std::string>();
    if (kind == "particle") {
      c.kind = ContentKind::Particle;
      c.default_anchor = {0.5, 0.5};
      c.footprint = {0.5, 0.5};
    } else if (kind == "object") {
      c.kind = ContentKind::Object;
      auto a = j.value("anchor", std::vector<double>{0.5, 0.5});
      auto f = j.at("footprint").get<std::vector<double>>();
      if (a.size() != 2 || f.size() != 2) return fail(std::string("anchor/footprint need 2 values"));
      c.default_anchor = {a[0], a[1]};
      c.footprint = {f[0], f[1]};
      if (c.footprint.x <= 0 || c.footprint.y <= 0)
        return fail("footprint of '" + c.id + "' must be positive");
      // strictly inside at the center anchor
      if (c.footprint.x >= 0.5 || c.footprint.y >= 0.5)
        return fail("footprint of '" + c.id + "' does not fit the display");
      if (!footprint_inside(c.default_anchor, c.footprint))
        return fail("default anchor of '" + c.id + "' puts it off-display");
    } else {
      return fail("unknown kind '" + kind + "'");
    }
    if (c.id.empty()) return fail(std::string("empty content id"));
    return c;
  } catch (const nlohmann::json::exception& e) {
    return fail(std::string(e.what()));
  }
}

}  // namespace

Result<Catalog, std::string> parse_catalog(std::string_view json_text) {
  auto j = nlohmann::json::parse(json_text, nullptr, false);
  if (j.is_discarded() || !j.is_array()) return fail(std::string("catalog must be a JSON array"));
  std::vector<ArContent> items;
  for (const auto& e : j) {
    auto c = content_from_json(e);
    if (!c) return fail(c.error());
    if (std::any_of(items.begin(), items.end(),
                    [&](const ArContent& x) { return x.id == c->id; }))
      return fail("duplicate content id '" + c->id + "'");
    items.push_back(std::move(c).value());
  }
  return Catalog(std::move(items));
}

Result<Catalog, std::string> load_catalog(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return fail("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  auto c = parse_catalog(ss.str());
  if (!c) return fail(path.string() + ": " + c.error());
  return c;
}

Result<ProjectionState, CatalogError> project(const ProjectionState& state,
                                              const Catalog& catalog,
                                              std::string_view content,
                                              bool dropin_active, Millis now) {
  const ArContent* item = catalog.find(content);
  if (!item) return fail(CatalogError::UnknownContent);
  if (!dropin_active) return fail(CatalogError::NoActiveDropIn);
  ProjectionState next = state;
  next.active = ActiveContent{item->id, item->default_anchor, now};
  next.history.push_back({item->id, now});
  return next;
}

Result<ProjectionState, CatalogError> reposition(const ProjectionState& state,
                                                 const Catalog& catalog,
                                                 const Vec2& anchor) {
  if (!state.active) return fail(CatalogError::NoActiveContent);
  const ArContent* item = catalog.find(state.active->id);
  if (!item) return fail(CatalogError::UnknownContent);
  if (item->kind == ContentKind::Particle) return fail(CatalogError::NotMovable);
  ProjectionState next = state;
  next.active->anchor = clamp_anchor(anchor, item->footprint);
  return next;
}

ProjectionState clear_on_dropin_end(const ProjectionState& state) {
  ProjectionState next = state;
  next.active.reset();
  return next;
}

}  // namespace arcall::catalog
