#include "toptag/layout.hpp"

#include <algorithm>

#include "toptag/error.hpp"

namespace toptag {

TagLayout TagLayout::from_tags(std::string name, std::span<const TagSpec> tags) {
  TagLayout layout;
  layout.name_ = std::move(name);
  for (const auto& t : tags) {
    if (!(t.half_x > 0.0 && t.half_y > 0.0)) {
      throw Error(ErrorCode::InvalidArgument, "tag half sizes must be positive");
    }
    if (layout.find_tag(t.tag_id) != nullptr) {
      throw Error(ErrorCode::InvalidArgument, "duplicate tag id in layout");
    }
    layout.tags_.push_back({t.tag_id, static_cast<int>(layout.points_.size())});
    layout.points_.emplace_back(t.cx - t.half_x, t.cy - t.half_y, 0.0);
    layout.points_.emplace_back(t.cx - t.half_x, t.cy + t.half_y, 0.0);
    layout.points_.emplace_back(t.cx + t.half_x, t.cy + t.half_y, 0.0);
    layout.points_.emplace_back(t.cx + t.half_x, t.cy - t.half_y, 0.0);
  }
  return layout;
}

TagLayout TagLayout::from_points(std::string name, std::vector<Vec3> points) {
  TagLayout layout;
  layout.name_ = std::move(name);
  layout.points_ = std::move(points);
  return layout;
}

TagLayout TagLayout::named(std::string_view name, double tag_width, double bus_length) {
  const double w = 0.5 * tag_width;
  // A tag occupies its black square plus a one-cell white band (8 cells across
  // for a 6x6 code), so the footprint is 10/8 of the black square.
  const double footprint = tag_width * 10.0 / 8.0;
  if (name == "single-center") {
    const TagSpec tags[] = {{0, 0.0, 0.0, w, w}};
    return from_tags(std::string(name), tags);
  }
  if (name == "double-front-rear") {
    const double c = 0.5 * (bus_length - footprint) - 0.05;
    const TagSpec tags[] = {{0, c, 0.0, w, w}, {1, -c, 0.0, w, w}};
    return from_tags(std::string(name), tags);
  }
  if (name == "triple") {
    const double c = std::min(footprint, 0.5 * (bus_length - footprint));
    const TagSpec tags[] = {{0, c, 0.0, w, w}, {1, 0.0, 0.0, w, w}, {2, -c, 0.0, w, w}};
    return from_tags(std::string(name), tags);
  }
  if (name == "long") {
    // Stretched along the bus: 3x the width, with its band still inside the roof.
    const double half_long = std::min(3.0 * w, 0.5 * bus_length * 8.0 / 10.0);
    const TagSpec tags[] = {{0, 0.0, 0.0, half_long, w}};
    return from_tags(std::string(name), tags);
  }
  throw Error(ErrorCode::InvalidArgument, "unknown layout name: " + std::string(name));
}

const TagPlacement* TagLayout::find_tag(int tag_id) const {
  for (const auto& t : tags_)
    if (t.tag_id == tag_id) return &t;
  return nullptr;
}

Vec3 TagLayout::pattern_point(const TagPlacement& t, double a, double b) const {
  const Vec3& c0 = points_[t.first_index];
  const Vec3& c1 = points_[t.first_index + 1];
  const Vec3& c2 = points_[t.first_index + 2];
  return c1 + a * (c2 - c1) + b * (c0 - c1);
}

}  // namespace toptag
