#pragma once

#include <array>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "toptag/geometry.hpp"

namespace toptag {

/// One square (or rectangular) tag in the vehicle-top-tag frame.
/// Corner order: (-x,-y), (-x,+y), (+x,+y), (+x,-y) relative to the tag
/// center, i.e. rear-right, rear-left, front-left, front-right with x forward
/// and y to the left.
struct TagPlacement {
  int tag_id = 0;
  int first_index = 0;  // index of corner 0 in TagLayout::control_points
};

class TagLayout {
 public:
  static constexpr std::array<std::string_view, 4> kNames = {"single-center", "double-front-rear",
                                                            "triple", "long"};

  /// Builds one of the named configurations for a tag of black-square width
  /// `tag_width` on a bus top of the given length.
  static TagLayout named(std::string_view name, double tag_width = 1.6, double bus_length = 6.0);

  /// Layout from explicit tags; each entry is (tag_id, center x, center y,
  /// half-size along x, half-size along y).
  struct TagSpec {
    int tag_id;
    double cx, cy, half_x, half_y;
  };
  static TagLayout from_tags(std::string name, std::span<const TagSpec> tags);

  /// Free-form layout of arbitrary control points with no tag grouping.
  static TagLayout from_points(std::string name, std::vector<Vec3> points);

  const std::string& name() const { return name_; }
  const std::vector<Vec3>& control_points() const { return points_; }
  const std::vector<TagPlacement>& tags() const { return tags_; }
  std::size_t size() const { return points_.size(); }

  /// Corner index range for a tag id, or nullptr when the id is not part of the layout.
  const TagPlacement* find_tag(int tag_id) const;

  /// Tag-frame position of pattern coordinate (a, b) in [0,1]^2 of tag `t`:
  /// a runs from the pattern's left edge to its right edge (corner 1 -> 2),
  /// b from its top edge to its bottom edge (corner 1 -> 0).
  Vec3 pattern_point(const TagPlacement& t, double a, double b) const;

 private:
  std::string name_;
  std::vector<Vec3> points_;
  std::vector<TagPlacement> tags_;
};

}  // namespace toptag
