#include "toptag/sim.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <numbers>
#include <thread>

#include "toptag/error.hpp"

namespace toptag {

namespace {

double deg(double d) { return d * std::numbers::pi / 180.0; }

}  // namespace

std::mt19937_64 trial_rng(std::uint64_t seed, std::uint64_t trial, RngPurpose purpose,
                          std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(trial), static_cast<std::uint32_t>(trial >> 32),
                    static_cast<std::uint32_t>(purpose), static_cast<std::uint32_t>(stream)};
  return std::mt19937_64(seq);
}

GroundTruthSample sample_pose(const ScenarioConfig& cfg, std::uint64_t trial) {
  const double r0 = cfg.sector_min_radius, r1 = cfg.sector_max_radius;
  if (!(r1 > r0) || !(cfg.sector_half_angle > 0.0)) {
    throw Error(ErrorCode::EmptySector, "sampling sector has no area");
  }
  auto rng = trial_rng(cfg.seed, trial, RngPurpose::Pose);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double half = deg(cfg.sector_half_angle);
  std::uniform_real_distribution<double> azimuth(-half, half);
  std::uniform_real_distribution<double> heading(deg(cfg.heading_min), deg(cfg.heading_max));

  const double radius = std::sqrt(r0 * r0 + unit(rng) * (r1 * r1 - r0 * r0));
  const double alpha = azimuth(rng);
  const double phi = cfg.heading_max > cfg.heading_min ? heading(rng) : deg(cfg.heading_min);
  double delta = 0.0;
  if (cfg.height_disturbance_max > 0.0) {
    std::uniform_real_distribution<double> dist(-cfg.height_disturbance_max, cfg.height_disturbance_max);
    delta = dist(rng);
  }

  const Vec3 foot = cfg.rsu_position(0);
  const double yaw = std::atan2(-foot.y(), -foot.x());
  GroundTruthSample s;
  s.pose = {foot.x() + radius * std::cos(yaw + alpha), foot.y() + radius * std::sin(yaw + alpha),
            wrap_angle(phi)};
  s.delta = delta;
  s.distance = radius;
  return s;
}

std::vector<GroundTruthSample> sample_poses(const ScenarioConfig& cfg) {
  std::vector<GroundTruthSample> out;
  out.reserve(static_cast<std::size_t>(std::max(cfg.samples, 0)));
  for (int i = 0; i < cfg.samples; ++i) out.push_back(sample_pose(cfg, static_cast<std::uint64_t>(i)));
  if (cfg.samples == 0) {
    // Still reject an empty sector.
    if (!(cfg.sector_max_radius > cfg.sector_min_radius) || !(cfg.sector_half_angle > 0.0)) {
      throw Error(ErrorCode::EmptySector, "sampling sector has no area");
    }
  }
  return out;
}

RigidTransform sample_tag_to_world(const ScenarioConfig& cfg, const GroundTruthSample& s) {
  return {rot_from_vec(RotationVector(0.0, 0.0, s.pose.phi)),
          Vec3(s.pose.x, s.pose.y, cfg.bus_height + s.delta)};
}

ImageObservations observe_corners(const ScenarioConfig& cfg, const TagLayout& layout,
                                  const CameraModel& cam, const GroundTruthSample& s,
                                  std::mt19937_64& rng) {
  const RigidTransform tag_to_world = sample_tag_to_world(cfg, s);
  std::normal_distribution<double> noise(0.0, cfg.pixel_noise_sigma > 0.0 ? cfg.pixel_noise_sigma : 1.0);
  ImageObservations obs;
  for (std::size_t i = 0; i < layout.size(); ++i) {
    Vec2 uv = project_or_nan(cam, tag_to_world.apply(layout.control_points()[i]));
    if (cfg.pixel_noise_sigma > 0.0) {
      const double du = noise(rng);
      const double dv = noise(rng);
      uv += Vec2(du, dv);
    }
    if (uv.allFinite() && cam.in_image(uv)) obs.points.push_back({static_cast<int>(i), uv});
  }
  if (obs.size() < 4) obs.points.clear();
  return obs;
}

namespace {

// Region lookup on the roof plane (tag-frame coordinates).
class RoofScene {
 public:
  RoofScene(const ScenarioConfig& cfg, const TagLayout& layout, const TagCodebook& codebook)
      : half_length_(0.5 * cfg.bus_length),
        half_width_(0.5 * cfg.bus_width),
        k_(codebook.cell_count()),
        g_(codebook.cell_count() + 2) {
    for (const auto& t : layout.tags()) {
      const CodebookEntry* entry = codebook.find(t.tag_id);
      if (entry == nullptr) {
        throw Error(ErrorCode::InvalidArgument, "tag id " + std::to_string(t.tag_id) + " is not in the codebook");
      }
      TagFrame f;
      f.origin = layout.control_points()[t.first_index + 1].head<2>();
      Eigen::Matrix2d E;
      E.col(0) = (layout.control_points()[t.first_index + 2] - layout.control_points()[t.first_index + 1]).head<2>();
      E.col(1) = (layout.control_points()[t.first_index] - layout.control_points()[t.first_index + 1]).head<2>();
      f.to_pattern = E.inverse() * static_cast<double>(g_);
      f.code = entry->code;
      tags_.push_back(f);
    }
  }

  int cells_per_tag() const { return (g_ + 2) * (g_ + 2); }

  // 0 ground, 1 roof, then one id per tag cell.
  int region(double x, double y) const {
    for (std::size_t t = 0; t < tags_.size(); ++t) {
      const Vec2 gp = tags_[t].to_pattern * (Vec2(x, y) - tags_[t].origin);
      if (gp.x() >= -1.0 && gp.x() < g_ + 1.0 && gp.y() >= -1.0 && gp.y() < g_ + 1.0) {
        const int c = static_cast<int>(std::floor(gp.x()));
        const int r = static_cast<int>(std::floor(gp.y()));
        return 2 + static_cast<int>(t) * cells_per_tag() + (r + 1) * (g_ + 2) + (c + 1);
      }
    }
    if (std::abs(x) <= half_length_ && std::abs(y) <= half_width_) return 1;
    return 0;
  }

  std::uint8_t level(int id) const {
    if (id == 0) return kGroundLevel;
    if (id == 1) return kRoofLevel;
    const int local = (id - 2) % cells_per_tag();
    const int t = (id - 2) / cells_per_tag();
    const int r = local / (g_ + 2) - 1;
    const int c = local % (g_ + 2) - 1;
    if (r < 0 || c < 0 || r >= g_ || c >= g_) return kWhiteLevel;
    if (r == 0 || c == 0 || r == g_ - 1 || c == g_ - 1) return kBlackLevel;
    return code_bit(tags_[t].code, k_, r - 1, c - 1) ? kBlackLevel : kWhiteLevel;
  }

 private:
  struct TagFrame {
    Vec2 origin;
    Eigen::Matrix2d to_pattern;
    TagCode code = 0;
  };
  double half_length_;
  double half_width_;
  int k_;
  int g_;
  std::vector<TagFrame> tags_;
};

}  // namespace

GrayImage render_frame(const ScenarioConfig& cfg, const TagLayout& layout, const TagCodebook& codebook,
                       const CameraModel& cam, const GroundTruthSample& s) {
  const RoofScene scene(cfg, layout, codebook);
  const RigidTransform tag_to_cam = cam.world_to_cam() * sample_tag_to_world(cfg, s);

  // Roof plane (z = 0 in the tag frame) to image.
  Mat3 M;
  M.col(0) = tag_to_cam.R.col(0);
  M.col(1) = tag_to_cam.R.col(1);
  M.col(2) = tag_to_cam.T;
  const Mat3 H = cam.A() * M;
  const Mat3 Hinv = H.inverse();

  const int W = cfg.image_width, Ht = cfg.image_height;
  GrayImage img(W, Ht, kGroundLevel);

  // The tag bands may reach past the roof outline, so bound their footprint too.
  double extent_x = 0.5 * cfg.bus_length, extent_y = 0.5 * cfg.bus_width;
  double margin = 0.0;
  for (const auto& t : layout.tags()) {
    const auto& pts = layout.control_points();
    const double side = std::max((pts[t.first_index + 2] - pts[t.first_index + 1]).norm(),
                                 (pts[t.first_index] - pts[t.first_index + 1]).norm());
    margin = std::max(margin, side / (codebook.cell_count() + 2));
  }
  for (const auto& p : layout.control_points()) {
    extent_x = std::max(extent_x, std::abs(p.x()) + margin);
    extent_y = std::max(extent_y, std::abs(p.y()) + margin);
  }
  double umin = 1e300, umax = -1e300, vmin = 1e300, vmax = -1e300;
  for (int sx : {-1, 1}) {
    for (int sy : {-1, 1}) {
      const Vec3 pc = tag_to_cam.apply(Vec3(sx * extent_x, sy * extent_y, 0.0));
      if (!(pc.z() > kMinDepth)) throw Error(ErrorCode::BehindCamera, "bus top is not in front of the camera");
      const Vec2 uv = (cam.A() * pc).hnormalized();
      umin = std::min(umin, uv.x());
      umax = std::max(umax, uv.x());
      vmin = std::min(vmin, uv.y());
      vmax = std::max(vmax, uv.y());
    }
  }
  const int x0 = std::max(0, static_cast<int>(std::floor(umin)) - 1);
  const int x1 = std::min(W - 1, static_cast<int>(std::ceil(umax)) + 1);
  const int y0 = std::max(0, static_cast<int>(std::floor(vmin)) - 1);
  const int y1 = std::min(Ht - 1, static_cast<int>(std::ceil(vmax)) + 1);
  if (x1 < x0 || y1 < y0) return img;

  const auto region_of = [&](const Vec3& q) {
    if (!(q.z() > 0.0)) return 0;
    return scene.region(q.x() / q.z(), q.y() / q.z());
  };
  const auto region_at = [&](double u, double v) { return region_of(Hinv * Vec3(u, v, 1.0)); };
  // Pixel-corner regions of one grid row, stepping the homography along u.
  const auto corner_row = [&](double v, std::vector<int>& out) {
    Vec3 q = Hinv * Vec3(x0 - 0.5, v, 1.0);
    const Vec3 step = Hinv.col(0);
    for (std::size_t i = 0; i < out.size(); ++i, q += step) out[i] = region_of(q);
  };

  const int n = x1 - x0 + 2;
  std::vector<int> top(n), bottom(n);
  corner_row(y0 - 0.5, top);
  for (int y = y0; y <= y1; ++y) {
    corner_row(y + 0.5, bottom);
    for (int x = x0; x <= x1; ++x) {
      const int i = x - x0;
      const int id = top[i];
      if (top[i + 1] == id && bottom[i] == id && bottom[i + 1] == id) {
        img.at(x, y) = scene.level(id);
        continue;
      }
      int sum = 0;
      for (int sy = 0; sy < 4; ++sy)
        for (int sx = 0; sx < 4; ++sx)
          sum += scene.level(region_at(x - 0.5 + (sx + 0.5) / 4.0, y - 0.5 + (sy + 0.5) / 4.0));
      img.at(x, y) = static_cast<std::uint8_t>((sum + 8) / 16);
    }
    std::swap(top, bottom);
  }
  return img;
}

namespace {

// Random convex quadrilateral with positive signed area: a rotated square
// with jittered corners.
std::array<Vec2, 4> random_quad(std::mt19937_64& rng, int width, int height, double min_side,
                                double max_side) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (;;) {
    const double side = min_side + (max_side - min_side) * unit(rng);
    const Vec2 c(width * unit(rng), height * unit(rng));
    const double theta = 2.0 * std::numbers::pi * unit(rng);
    const Eigen::Rotation2Dd R(theta);
    std::array<Vec2, 4> q;
    const std::array<Vec2, 4> unit_square = {Vec2(-1, -1), Vec2(1, -1), Vec2(1, 1), Vec2(-1, 1)};
    for (int i = 0; i < 4; ++i) {
      const Vec2 jitter(unit(rng) - 0.5, unit(rng) - 0.5);
      q[i] = c + R * (0.5 * side * unit_square[i]) + 0.3 * side * jitter;
    }
    bool convex = true;
    for (int i = 0; i < 4; ++i) {
      const Vec2 a = q[(i + 1) % 4] - q[i];
      const Vec2 b = q[(i + 2) % 4] - q[(i + 1) % 4];
      convex = convex && a.x() * b.y() - a.y() * b.x() > 0.05 * side * side;
    }
    if (convex) return q;
  }
}

// Paints `level(gx, gy)` over the pattern square [lo, hi]^2 mapped onto quad.
template <typename Level>
void paint_quad(GrayImage& img, const std::array<Vec2, 4>& quad, double lo, double hi, Level&& level) {
  const std::array<PointPair, 4> pairs = {{{Vec2(lo, lo), quad[0]},
                                           {Vec2(hi, lo), quad[1]},
                                           {Vec2(hi, hi), quad[2]},
                                           {Vec2(lo, hi), quad[3]}}};
  const Mat3 Hinv = dlt_homography(pairs).H.inverse();
  double umin = 1e300, umax = -1e300, vmin = 1e300, vmax = -1e300;
  for (const Vec2& c : quad) {
    umin = std::min(umin, c.x());
    umax = std::max(umax, c.x());
    vmin = std::min(vmin, c.y());
    vmax = std::max(vmax, c.y());
  }
  const int x0 = std::max(0, static_cast<int>(std::floor(umin)));
  const int x1 = std::min(img.width - 1, static_cast<int>(std::ceil(umax)));
  const int y0 = std::max(0, static_cast<int>(std::floor(vmin)));
  const int y1 = std::min(img.height - 1, static_cast<int>(std::ceil(vmax)));
  const auto level_at = [&](double u, double v) {
    const Vec2 g = (Hinv * Vec3(u, v, 1.0)).hnormalized();
    return (g.x() < lo || g.x() >= hi || g.y() < lo || g.y() >= hi) ? -1 : level(g.x(), g.y());
  };
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      const int l00 = level_at(x - 0.5, y - 0.5);
      if (l00 >= 0 && level_at(x + 0.5, y - 0.5) == l00 && level_at(x - 0.5, y + 0.5) == l00 &&
          level_at(x + 0.5, y + 0.5) == l00) {
        img.at(x, y) = static_cast<std::uint8_t>(l00);
        continue;
      }
      int sum = 0, inside = 0;
      for (int sy = 0; sy < 4; ++sy) {
        for (int sx = 0; sx < 4; ++sx) {
          const Vec2 g = (Hinv * Vec3(x - 0.375 + 0.25 * sx, y - 0.375 + 0.25 * sy, 1.0)).hnormalized();
          if (g.x() < lo || g.x() >= hi || g.y() < lo || g.y() >= hi) continue;
          sum += level(g.x(), g.y());
          ++inside;
        }
      }
      if (inside == 0) continue;
      const int background = img.at(x, y);
      img.at(x, y) = static_cast<std::uint8_t>((sum + background * (16 - inside) + 8) / 16);
    }
  }
}

}  // namespace

GrayImage render_decoy_frame(int width, int height, const TagCodebook& codebook, std::uint64_t seed,
                             std::uint64_t index) {
  if (width < 1 || height < 1) throw Error(ErrorCode::InvalidArgument, "decoy image must not be empty");
  std::mt19937_64 rng = trial_rng(seed, index, RngPurpose::Decoy);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 6.0);

  // Sum of a few random plane waves.
  struct Wave {
    Vec2 k;
    double phase, amplitude;
  };
  std::vector<Wave> waves(4);
  for (auto& w : waves) {
    const double len = 2.0 * std::numbers::pi / (40.0 + 400.0 * unit(rng));
    const double dir = 2.0 * std::numbers::pi * unit(rng);
    w = {len * Vec2(std::cos(dir), std::sin(dir)), 2.0 * std::numbers::pi * unit(rng), 10.0 + 20.0 * unit(rng)};
  }
  // sin(a + b) = sin a cos b + cos a sin b with a along x and b along y.
  Eigen::MatrixXd sx(width, waves.size()), cx(width, waves.size());
  Eigen::MatrixXd sy(height, waves.size()), cy(height, waves.size());
  for (std::size_t j = 0; j < waves.size(); ++j) {
    for (int x = 0; x < width; ++x) {
      sx(x, j) = waves[j].amplitude * std::sin(waves[j].k.x() * x + waves[j].phase);
      cx(x, j) = waves[j].amplitude * std::cos(waves[j].k.x() * x + waves[j].phase);
    }
    for (int y = 0; y < height; ++y) {
      sy(y, j) = std::sin(waves[j].k.y() * y);
      cy(y, j) = std::cos(waves[j].k.y() * y);
    }
  }
  GrayImage img(width, height, 0);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      double v = 128.0 + noise(rng);
      for (std::size_t j = 0; j < waves.size(); ++j) v += sx(x, j) * cy(y, j) + cx(x, j) * sy(y, j);
      img.at(x, y) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
    }
  }

  const double max_side = 0.3 * std::min(width, height);
  const int plain = 1 + static_cast<int>(4 * unit(rng));
  for (int i = 0; i < plain; ++i) {
    const auto q = random_quad(rng, width, height, 12.0, max_side);
    const int level = static_cast<int>(10 + 60 * unit(rng));
    paint_quad(img, q, 0.0, 1.0, [&](double, double) { return level; });
  }

  const int k = codebook.cell_count();
  const int g = k + 2;
  const int min_distance = codebook.max_hamming() + 2;
  const TagCode payload_mask = k * k == 64 ? ~TagCode{0} : (TagCode{1} << (k * k)) - 1;
  const int decoys = 2 + static_cast<int>(4 * unit(rng));
  for (int i = 0; i < decoys; ++i) {
    TagCode code = 0;
    do {
      if (!codebook.entries().empty() && unit(rng) < 0.5) {
        // A valid code with a few bits flipped.
        code = codebook.entries()[static_cast<std::size_t>(unit(rng) * codebook.entries().size())].code;
        for (int f = 0; f < min_distance; ++f) code ^= TagCode{1} << static_cast<int>(unit(rng) * k * k);
      } else {
        code = rng() & payload_mask;
      }
    } while (!codebook.entries().empty() && codebook.best_match(code).hamming < min_distance);
    const auto q = random_quad(rng, width, height, 3.0 * g, max_side);
    paint_quad(img, q, -1.0, g + 1.0, [&](double gx, double gy) -> int {
      const int c = static_cast<int>(std::floor(gx));
      const int r = static_cast<int>(std::floor(gy));
      if (r < 0 || c < 0 || r >= g || c >= g) return kWhiteLevel;
      if (r == 0 || c == 0 || r == g - 1 || c == g - 1) return kBlackLevel;
      return code_bit(code, k, r - 1, c - 1) ? kBlackLevel : kWhiteLevel;
    });
  }
  return img;
}

const char* solver_name(SolverKind s) {
  switch (s) {
    case SolverKind::Basic: return "bas";
    case SolverKind::Hard: return "hopt";
    case SolverKind::Soft: return "sopt";
  }
  return "?";
}

SolverKind parse_solver(std::string_view name) {
  for (SolverKind s : kAllSolvers)
    if (name == solver_name(s)) return s;
  throw Error(ErrorCode::ConfigError, "unknown solver '" + std::string(name) + "' (expected bas, hopt or sopt)");
}

ImageObservations observations_from_detections(const TagLayout& layout,
                                               const std::vector<TagDetection>& detections) {
  ImageObservations obs;
  std::vector<int> used;
  for (const auto& d : detections) {
    const TagPlacement* t = layout.find_tag(d.tag_id);
    if (t == nullptr || std::find(used.begin(), used.end(), d.tag_id) != used.end()) continue;
    used.push_back(d.tag_id);
    for (int j = 0; j < 4; ++j) obs.points.push_back({t->first_index + j, d.corners[j]});
  }
  return obs;
}

namespace {

void audit_detections(const ScenarioConfig& cfg, const TagLayout& layout, int cell_count,
                      const CameraModel& cam, const GroundTruthSample& s, const std::vector<TagDetection>& detections,
                      DetectionAudit& audit) {
  constexpr double kMatchRadius = 3.0;
  const RigidTransform tag_to_world = sample_tag_to_world(cfg, s);
  std::vector<bool> matched(detections.size(), false);
  for (const auto& t : layout.tags()) {
    std::array<Vec2, 4> truth;
    for (int j = 0; j < 4; ++j) {
      truth[j] = project_or_nan(cam, tag_to_world.apply(layout.control_points()[t.first_index + j]));
    }
    // A tag is in frame when its white quiet zone is, with a one-pixel margin.
    bool in_frame = true;
    const double band = 1.0 / (cell_count + 2);
    for (double a : {-band, 1.0 + band}) {
      for (double b : {-band, 1.0 + band}) {
        const Vec2 uv = project_or_nan(cam, tag_to_world.apply(layout.pattern_point(t, a, b)));
        const Resolution res = cam.resolution();
        in_frame = in_frame && uv.allFinite() && uv.x() >= 1.0 && uv.y() >= 1.0 &&
                   uv.x() <= res.width - 2.0 && uv.y() <= res.height - 2.0;
      }
    }
    for (std::size_t d = 0; d < detections.size(); ++d) {
      if (matched[d] || detections[d].tag_id != t.tag_id) continue;
      double worst = 0.0, sq = 0.0;
      for (int j = 0; j < 4; ++j) {
        const double e = (detections[d].corners[j] - truth[j]).norm();
        worst = std::max(worst, e);
        sq += e * e;
      }
      if (!(worst <= kMatchRadius)) continue;
      matched[d] = true;
      if (in_frame) {
        audit.corner_sq_error += sq;
        audit.corner_count += 4;
      }
      break;
    }
    if (!in_frame) continue;
    ++audit.tags_in_frame;
    bool found = false;
    for (std::size_t d = 0; d < detections.size(); ++d)
      found = found || (matched[d] && detections[d].tag_id == t.tag_id);
    if (!found) ++audit.missed;
  }
  for (std::size_t d = 0; d < detections.size(); ++d)
    if (!matched[d]) ++audit.false_detections;
}

}  // namespace

ControlPointObservations observe_trial(const ScenarioConfig& cfg, const TagLayout& layout,
                                       const TagCodebook& codebook,
                                       const std::vector<CameraModel>& cams, const GroundTruthSample& s,
                                       std::uint64_t trial, ObservationMode mode, DetectionAudit* audit) {
  ControlPointObservations obs(cams.size());
  for (std::size_t k = 0; k < cams.size(); ++k) {
    if (mode == ObservationMode::Analytic) {
      auto rng = trial_rng(cfg.seed, trial, RngPurpose::PixelNoise, k);
      obs[k] = observe_corners(cfg, layout, cams[k], s, rng);
      continue;
    }
    GrayImage img;
    try {
      img = render_frame(cfg, layout, codebook, cams[k], s);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::BehindCamera) throw;
      continue;
    }
    const auto detections = detect_tags(img, codebook, DetectorParams::for_width(img.width));
    if (k == 0 && audit != nullptr) audit_detections(cfg, layout, codebook.cell_count(), cams[k], s, detections, *audit);
    obs[k] = observations_from_detections(layout, detections);
    if (obs[k].size() < 4) obs[k].points.clear();
  }
  return obs;
}

TrialRecord run_trial(const ScenarioConfig& cfg, const TagLayout& layout, const TagCodebook& codebook,
                      const std::vector<CameraModel>& cams, std::uint64_t trial,
                      const TrialOptions& options) {
  TrialRecord rec;
  rec.trial = trial;
  rec.sample = sample_pose(cfg, trial);
  rec.observations = observe_trial(cfg, layout, codebook, cams, rec.sample, trial, options.mode, &rec.audit);

  const auto ref = reference_camera(rec.observations);
  if (!ref) {
    rec.dropped = true;
    return rec;
  }
  const double h = cfg.bus_height;  // the solvers never see delta
  const ImageObservations& single = rec.observations[*ref];
  for (SolverKind kind : kAllSolvers) {
    const auto idx = static_cast<std::size_t>(kind);
    if (!options.solvers[idx]) continue;
    SolverOutcome& out = rec.solvers[idx];
    out.ran = true;
    try {
      switch (kind) {
        case SolverKind::Basic: out.estimate = estimate_basic(layout, single, cams[*ref]); break;
        case SolverKind::Hard: out.estimate = estimate_hard(layout, single, cams[*ref], h, options.settings); break;
        case SolverKind::Soft: out.estimate = estimate_soft(layout, rec.observations, cams, h, options.settings); break;
      }
      out.position_error = std::hypot(out.estimate.horizontal.x - rec.sample.pose.x,
                                      out.estimate.horizontal.y - rec.sample.pose.y);
      out.orientation_error = std::abs(wrap_angle(out.estimate.horizontal.phi - rec.sample.pose.phi));
    } catch (const Error&) {
      out.failed = true;
    }
  }
  return rec;
}

TagCodebook scenario_codebook(const ScenarioConfig& cfg) {
  return cfg.codebook.empty() ? TagCodebook::builtin() : TagCodebook::load(cfg.codebook);
}

std::vector<TrialRecord> run_trials(const ScenarioConfig& cfg, const TrialOptions& options) {
  cfg.validate();
  const TagLayout layout = cfg.tag_layout();
  const TagCodebook codebook = scenario_codebook(cfg);
  const std::vector<CameraModel> cams = cfg.cameras();
  const auto n = static_cast<std::size_t>(cfg.samples);
  if (n > 0) (void)sample_pose(cfg, 0);  // surfaces EmptySector before spawning workers

  std::vector<TrialRecord> records(n);
  int threads = options.threads >= 0 ? options.threads : cfg.threads;
  if (threads == 0) threads = static_cast<int>(std::max(1U, std::thread::hardware_concurrency()));
  threads = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(threads), std::max<std::size_t>(n, 1)));

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        records[i] = run_trial(cfg, layout, codebook, cams, i, options);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = n;
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
  return records;
}

}  // namespace toptag
