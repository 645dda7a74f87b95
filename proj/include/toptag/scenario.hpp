#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "toptag/geometry.hpp"
#include "toptag/layout.hpp"

namespace toptag {

/// Intersection, roadside camera and bus geometry of the simulated study.
/// Lengths are meters, angles degrees, image quantities pixels.
struct ScenarioConfig {
  double lane_width = 3.7;
  double rsu_height = 8.0;
  double rsu_pitch_down = 40.0;
  int rsu_count = 1;  // cameras on the corners (-o,-o), (o,-o), (o,o), (-o,o), o = 2 * lane_width
  int image_width = 960;
  int image_height = 720;
  double focal_length = 0.0;  // 0 selects 800 px scaled by image_width / 960
  double bus_length = 6.0;
  double bus_width = 2.0;
  double bus_height = 3.0;
  double tag_width = 1.6;
  std::string layout = "double-front-rear";
  double height_disturbance_max = 0.0;
  double pixel_noise_sigma = 0.3;
  double sector_min_radius = 6.0;
  double sector_max_radius = 17.0;
  double sector_half_angle = 30.0;  // about the first camera's forward axis
  double heading_min = 0.0;
  double heading_max = 360.0;
  int samples = 20000;
  std::uint64_t seed = 1;
  int threads = 0;  // 0 uses the hardware concurrency
  std::string codebook;  // empty selects the built-in family

  /// Key names accepted by set() and the config file.
  static const std::vector<std::string_view>& keys();

  /// Flat `key = value` text with '#' comments. Unknown keys and malformed
  /// values throw ConfigError. The result is not validated.
  static ScenarioConfig parse(std::istream& in);
  static ScenarioConfig load(const std::filesystem::path& path);

  /// Applies one override; throws ConfigError for an unknown key or bad value.
  void set(std::string_view key, std::string_view value);
  /// Parses `key=value`.
  void apply_override(std::string_view assignment);

  /// Throws ConfigError when a field is out of range.
  void validate() const;

  void write(std::ostream& out) const;

  double effective_focal() const;
  Resolution resolution() const { return {image_width, image_height}; }
  TagLayout tag_layout() const;
  /// Roadside cameras in corner order; the first one defines the sector.
  std::vector<CameraModel> cameras() const;
  Vec3 rsu_position(int index) const;
};

/// Camera text file: `width W`, `height H`, `intrinsics` (9 values, row
/// major), `rotation` (9 values, world to camera, row major) and
/// `translation` (3 values). '#' starts a comment. Malformed files throw
/// ConfigError; unreadable ones IoFailure.
void write_camera(std::ostream& out, const CameraModel& cam);
CameraModel read_camera(std::istream& in);
CameraModel read_camera(const std::filesystem::path& path);

}  // namespace toptag
