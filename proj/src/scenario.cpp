#include "toptag/scenario.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "toptag/error.hpp"

namespace toptag {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

double parse_double(std::string_view key, std::string_view v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(out)) {
    throw Error(ErrorCode::ConfigError, "bad number for " + std::string(key) + ": '" + std::string(v) + "'");
  }
  return out;
}

template <typename Int>
Int parse_int(std::string_view key, std::string_view v) {
  Int out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw Error(ErrorCode::ConfigError, "bad integer for " + std::string(key) + ": '" + std::string(v) + "'");
  }
  return out;
}

double deg(double d) { return d * std::numbers::pi / 180.0; }

}  // namespace

const std::vector<std::string_view>& ScenarioConfig::keys() {
  static const std::vector<std::string_view> k = {
      "lane_width",        "rsu_height",          "rsu_pitch_down",     "rsu_count",
      "image_width",       "image_height",        "focal_length",       "bus_length",
      "bus_width",         "bus_height",          "tag_width",          "layout",
      "height_disturbance_max", "pixel_noise_sigma", "sector_min_radius", "sector_max_radius",
      "sector_half_angle", "heading_min",         "heading_max",        "samples",
      "seed",              "threads",             "codebook"};
  return k;
}

void ScenarioConfig::set(std::string_view key, std::string_view raw) {
  const std::string_view v = trim(raw);
  if (key == "lane_width") lane_width = parse_double(key, v);
  else if (key == "rsu_height") rsu_height = parse_double(key, v);
  else if (key == "rsu_pitch_down") rsu_pitch_down = parse_double(key, v);
  else if (key == "rsu_count") rsu_count = parse_int<int>(key, v);
  else if (key == "image_width") image_width = parse_int<int>(key, v);
  else if (key == "image_height") image_height = parse_int<int>(key, v);
  else if (key == "focal_length") focal_length = parse_double(key, v);
  else if (key == "bus_length") bus_length = parse_double(key, v);
  else if (key == "bus_width") bus_width = parse_double(key, v);
  else if (key == "bus_height") bus_height = parse_double(key, v);
  else if (key == "tag_width") tag_width = parse_double(key, v);
  else if (key == "layout") layout = std::string(v);
  else if (key == "height_disturbance_max") height_disturbance_max = parse_double(key, v);
  else if (key == "pixel_noise_sigma") pixel_noise_sigma = parse_double(key, v);
  else if (key == "sector_min_radius") sector_min_radius = parse_double(key, v);
  else if (key == "sector_max_radius") sector_max_radius = parse_double(key, v);
  else if (key == "sector_half_angle") sector_half_angle = parse_double(key, v);
  else if (key == "heading_min") heading_min = parse_double(key, v);
  else if (key == "heading_max") heading_max = parse_double(key, v);
  else if (key == "samples") samples = parse_int<int>(key, v);
  else if (key == "seed") seed = parse_int<std::uint64_t>(key, v);
  else if (key == "threads") threads = parse_int<int>(key, v);
  else if (key == "codebook") codebook = std::string(v);
  else throw Error(ErrorCode::ConfigError, "unknown config key '" + std::string(key) + "'");
}

void ScenarioConfig::apply_override(std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) {
    throw Error(ErrorCode::ConfigError, "override must look like key=value: '" + std::string(assignment) + "'");
  }
  set(trim(assignment.substr(0, eq)), assignment.substr(eq + 1));
}

ScenarioConfig ScenarioConfig::parse(std::istream& in) {
  ScenarioConfig cfg;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string_view body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::ConfigError, "line " + std::to_string(line_no) + ": expected key = value");
    }
    cfg.set(trim(body.substr(0, eq)), body.substr(eq + 1));
  }
  return cfg;
}

ScenarioConfig ScenarioConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot open config " + path.string());
  return parse(in);
}

void ScenarioConfig::validate() const {
  const auto require = [](bool ok, const char* what) {
    if (!ok) throw Error(ErrorCode::ConfigError, what);
  };
  require(lane_width > 0.0 && rsu_height > 0.0, "lane_width and rsu_height must be positive");
  require(rsu_pitch_down > 0.0 && rsu_pitch_down < 90.0, "rsu_pitch_down must be in (0, 90)");
  require(rsu_count >= 1 && rsu_count <= 4, "rsu_count must be in [1, 4]");
  require(image_width >= 16 && image_height >= 16, "image must be at least 16x16");
  require(focal_length >= 0.0, "focal_length must be non-negative");
  require(bus_length > 0.0 && bus_width > 0.0 && bus_height > 0.0, "bus dimensions must be positive");
  require(tag_width > 0.0, "tag_width must be positive");
  require(height_disturbance_max >= 0.0, "height_disturbance_max must be non-negative");
  require(pixel_noise_sigma >= 0.0, "pixel_noise_sigma must be non-negative");
  require(sector_min_radius >= 0.0 && sector_max_radius > 0.0, "sector radii must be positive");
  require(sector_half_angle >= 0.0 && sector_half_angle <= 180.0, "sector_half_angle must be in [0, 180]");
  require(heading_max >= heading_min, "heading_max must not be below heading_min");
  require(samples >= 0, "samples must be non-negative");
  require(threads >= 0, "threads must be non-negative");
  try {
    (void)tag_layout();
  } catch (const Error& e) {
    throw Error(ErrorCode::ConfigError, e.what());
  }
}

void ScenarioConfig::write(std::ostream& out) const {
  const auto old_precision = out.precision(17);
  out << "lane_width = " << lane_width << "\nrsu_height = " << rsu_height
      << "\nrsu_pitch_down = " << rsu_pitch_down << "\nrsu_count = " << rsu_count
      << "\nimage_width = " << image_width << "\nimage_height = " << image_height
      << "\nfocal_length = " << focal_length << "\nbus_length = " << bus_length
      << "\nbus_width = " << bus_width << "\nbus_height = " << bus_height
      << "\ntag_width = " << tag_width << "\nlayout = " << layout
      << "\nheight_disturbance_max = " << height_disturbance_max
      << "\npixel_noise_sigma = " << pixel_noise_sigma << "\nsector_min_radius = " << sector_min_radius
      << "\nsector_max_radius = " << sector_max_radius << "\nsector_half_angle = " << sector_half_angle
      << "\nheading_min = " << heading_min << "\nheading_max = " << heading_max
      << "\nsamples = " << samples << "\nseed = " << seed << "\nthreads = " << threads << '\n';
  if (!codebook.empty()) out << "codebook = " << codebook << '\n';
  out.precision(old_precision);
}

double ScenarioConfig::effective_focal() const {
  return focal_length > 0.0 ? focal_length : 800.0 * image_width / 960.0;
}

TagLayout ScenarioConfig::tag_layout() const { return TagLayout::named(layout, tag_width, bus_length); }

Vec3 ScenarioConfig::rsu_position(int index) const {
  const double o = 2.0 * lane_width;
  static constexpr int sx[] = {-1, 1, 1, -1};
  static constexpr int sy[] = {-1, -1, 1, 1};
  return {sx[index % 4] * o, sy[index % 4] * o, rsu_height};
}

std::vector<CameraModel> ScenarioConfig::cameras() const {
  const double f = effective_focal();
  const Mat3 A = CameraModel::intrinsics(f, 0.5 * (image_width - 1), 0.5 * (image_height - 1));
  std::vector<CameraModel> cams;
  for (int k = 0; k < rsu_count; ++k) {
    const Vec3 p = rsu_position(k);
    const double yaw = std::atan2(-p.y(), -p.x());  // towards the intersection center
    cams.push_back(CameraModel::looking_at_heading(A, p, yaw, deg(rsu_pitch_down), resolution()));
  }
  return cams;
}

void write_camera(std::ostream& out, const CameraModel& cam) {
  const auto old_precision = out.precision(17);
  const auto row_major = [&](const Mat3& m) {
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) out << ' ' << m(r, c);
  };
  out << "width " << cam.resolution().width << "\nheight " << cam.resolution().height << "\nintrinsics";
  row_major(cam.A());
  out << "\nrotation";
  row_major(cam.world_to_cam().R);
  const Vec3& t = cam.world_to_cam().T;
  out << "\ntranslation " << t.x() << ' ' << t.y() << ' ' << t.z() << '\n';
  out.precision(old_precision);
}

CameraModel read_camera(std::istream& in) {
  Resolution res;
  Mat3 A, R;
  Vec3 T;
  bool seen[5] = {false, false, false, false, false};
  std::string line;
  while (std::getline(in, line)) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    std::string key;
    if (!(ls >> key)) continue;
    const auto read_values = [&](double* dst, int n) {
      for (int i = 0; i < n; ++i) {
        std::string tok;
        if (!(ls >> tok)) throw Error(ErrorCode::ConfigError, "camera: too few values for " + key);
        dst[i] = parse_double(key, tok);
      }
      std::string extra;
      if (ls >> extra) throw Error(ErrorCode::ConfigError, "camera: too many values for " + key);
    };
    double v[9];
    if (key == "width" || key == "height") {
      read_values(v, 1);
      if (v[0] != std::floor(v[0]) || v[0] < 1.0) throw Error(ErrorCode::ConfigError, "camera: bad " + key);
      (key == "width" ? res.width : res.height) = static_cast<int>(v[0]);
      seen[key == "width" ? 0 : 1] = true;
    } else if (key == "intrinsics" || key == "rotation") {
      read_values(v, 9);
      Mat3& m = key == "intrinsics" ? A : R;
      for (int i = 0; i < 9; ++i) m(i / 3, i % 3) = v[i];
      seen[key == "intrinsics" ? 2 : 3] = true;
    } else if (key == "translation") {
      read_values(v, 3);
      T = Vec3(v[0], v[1], v[2]);
      seen[4] = true;
    } else {
      throw Error(ErrorCode::ConfigError, "camera: unknown key '" + key + "'");
    }
  }
  for (bool b : seen) {
    if (!b) throw Error(ErrorCode::ConfigError, "camera: missing width, height, intrinsics, rotation or translation");
  }
  if (!((R.transpose() * R - Mat3::Identity()).norm() < 1e-6) || !(R.determinant() > 0.0)) {
    throw Error(ErrorCode::ConfigError, "camera: rotation is not a rotation matrix");
  }
  if (!(std::abs(A.determinant()) > 0.0) || !A.allFinite()) {
    throw Error(ErrorCode::ConfigError, "camera: singular intrinsics");
  }
  return CameraModel(A, {R, T}, res);
}

CameraModel read_camera(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open camera file " + path.string());
  return read_camera(in);
}

}  // namespace toptag
