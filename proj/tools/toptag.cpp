#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#ifdef __GLIBC__
#include <malloc.h>
#endif

#include "toptag/codebook.hpp"
#include "toptag/detect.hpp"
#include "toptag/error.hpp"
#include "toptag/pose.hpp"
#include "toptag/scenario.hpp"
#include "toptag/sim.hpp"
#include "toptag/stats.hpp"

namespace fs = std::filesystem;
using namespace toptag;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

double rad2deg(double r) { return r * 180.0 / std::numbers::pi; }

struct CommonOptions {
  std::string config;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config, "Scenario config file (key = value)");
  cmd->add_option("--set", o.overrides, "Override a config key, key=value (repeatable)");
  cmd->add_option("--seed", o.seed, "Random seed");
}

ScenarioConfig load_config(const CommonOptions& o) {
  ScenarioConfig cfg;
  if (!o.config.empty()) cfg = ScenarioConfig::load(o.config);
  for (const auto& s : o.overrides) cfg.apply_override(s);
  if (o.seed) cfg.seed = *o.seed;
  return cfg;
}

std::array<bool, 3> parse_solver_list(const std::string& list) {
  std::array<bool, 3> on = {false, false, false};
  std::stringstream ss(list);
  std::string name;
  while (std::getline(ss, name, ',')) on[static_cast<int>(parse_solver(name))] = true;
  if (!on[0] && !on[1] && !on[2]) throw Error(ErrorCode::ConfigError, "no solver selected");
  return on;
}

ObservationMode parse_mode(const std::string& mode) {
  if (mode == "analytic") return ObservationMode::Analytic;
  if (mode == "rendered") return ObservationMode::Rendered;
  throw Error(ErrorCode::ConfigError, "mode must be analytic or rendered, got '" + mode + "'");
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoFailure, "cannot create " + dir.string() + ": " + ec.message());
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  return out;
}

// render

struct RenderOptions {
  CommonOptions common;
  std::string out = ".";
  std::vector<std::uint64_t> indices = {0};
  int camera = 0;
};

void run_render(const RenderOptions& o) {
  ScenarioConfig cfg = load_config(o.common);
  cfg.validate();
  const auto cams = cfg.cameras();
  if (o.camera < 0 || o.camera >= static_cast<int>(cams.size())) {
    throw Error(ErrorCode::ConfigError, "camera index out of range");
  }
  const TagLayout layout = cfg.tag_layout();
  const TagCodebook codebook = scenario_codebook(cfg);
  ensure_dir(o.out);
  for (std::uint64_t i : o.indices) {
    if (i >= static_cast<std::uint64_t>(cfg.samples)) {
      throw Error(ErrorCode::ConfigError, "sample index " + std::to_string(i) + " is not below samples");
    }
    const GroundTruthSample s = sample_pose(cfg, i);
    const GrayImage img = render_frame(cfg, layout, codebook, cams[o.camera], s);
    char stem[32];
    std::snprintf(stem, sizeof stem, "frame_%06llu", static_cast<unsigned long long>(i));
    const fs::path base = fs::path(o.out) / stem;
    write_pgm(img, base.string() + ".pgm");
    auto cam_out = open_out(base.string() + ".cam");
    write_camera(cam_out, cams[o.camera]);
    auto truth = open_out(base.string() + ".truth");
    truth << "x " << format_number(s.pose.x) << "\ny " << format_number(s.pose.y) << "\nphi_deg "
          << format_number(rad2deg(s.pose.phi)) << "\ndelta " << format_number(s.delta) << "\ndist "
          << format_number(s.distance) << '\n';
    std::cout << base.string() << ".pgm\n";
  }
}

// detect

struct DetectOptions {
  CommonOptions common;
  std::string image;
  std::string codebook;
};

void run_detect(const DetectOptions& o) {
  ScenarioConfig cfg = load_config(o.common);
  if (!o.codebook.empty()) cfg.codebook = o.codebook;
  cfg.validate();
  const TagCodebook codebook = scenario_codebook(cfg);
  const GrayImage img = read_pgm(o.image);
  for (const auto& d : detect_tags(img, codebook)) {
    std::cout << d.tag_id;
    for (const auto& c : d.corners) std::cout << ' ' << format_number(c.x()) << ' ' << format_number(c.y());
    std::cout << ' ' << d.hamming << '\n';
  }
}

// estimate

struct EstimateOptions {
  CommonOptions common;
  std::string detections;
  std::string camera;
  std::string solvers = "bas,hopt,sopt";
};

// Detection lines `id u0 v0 u1 v1 u2 v2 u3 v3 hamming` and single control
// points `corner index u v`; '#' starts a comment.
ImageObservations read_observations(const TagLayout& layout, const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open detections file " + path.string());
  std::vector<TagDetection> detections;
  ImageObservations extra;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    std::vector<std::string> tok;
    for (std::string t; ls >> t;) tok.push_back(t);
    if (tok.empty()) continue;
    const auto bad = [&]() {
      return Error(ErrorCode::ConfigError, path.string() + ":" + std::to_string(line_no) + ": malformed line");
    };
    try {
      if (tok[0] == "corner") {
        if (tok.size() != 4) throw bad();
        extra.points.push_back({std::stoi(tok[1]), Vec2(std::stod(tok[2]), std::stod(tok[3]))});
      } else {
        if (tok.size() != 10) throw bad();
        TagDetection d;
        d.tag_id = std::stoi(tok[0]);
        for (int i = 0; i < 4; ++i) d.corners[i] = Vec2(std::stod(tok[1 + 2 * i]), std::stod(tok[2 + 2 * i]));
        d.hamming = std::stoi(tok[9]);
        detections.push_back(d);
      }
    } catch (const std::logic_error&) {
      throw bad();
    }
  }
  ImageObservations obs = observations_from_detections(layout, detections);
  obs.points.insert(obs.points.end(), extra.points.begin(), extra.points.end());
  validate_observations(layout, obs);
  return obs;
}

void run_estimate(const EstimateOptions& o) {
  ScenarioConfig cfg = load_config(o.common);
  cfg.validate();
  const auto solvers = parse_solver_list(o.solvers);
  const TagLayout layout = cfg.tag_layout();
  const CameraModel cam = o.camera.empty() ? cfg.cameras().front() : read_camera(o.camera);
  const ImageObservations obs = read_observations(layout, o.detections);
  if (obs.size() < 4) {
    throw Error(ErrorCode::DegenerateConfiguration,
                "need at least 4 control points, got " + std::to_string(obs.size()));
  }

  std::cout << "solver x y phi_deg rms_px iterations converged\n";
  for (SolverKind kind : kAllSolvers) {
    if (!solvers[static_cast<int>(kind)]) continue;
    PoseEstimate e;
    switch (kind) {
      case SolverKind::Basic: e = estimate_basic(layout, obs, cam); break;
      case SolverKind::Hard: e = estimate_hard(layout, obs, cam, cfg.bus_height); break;
      case SolverKind::Soft: {
        const ControlPointObservations all = {obs};
        e = estimate_soft(layout, all, std::span<const CameraModel>(&cam, 1), cfg.bus_height);
        break;
      }
    }
    std::cout << solver_name(kind) << ' ' << format_number(e.horizontal.x) << ' '
              << format_number(e.horizontal.y) << ' ' << format_number(rad2deg(e.horizontal.phi)) << ' '
              << format_number(e.rms_reprojection) << ' ' << e.iterations << ' ' << (e.converged ? 1 : 0)
              << '\n';
  }
}

// bench and report

struct BenchOptions {
  CommonOptions common;
  std::string out = "bench_out";
  std::string mode = "rendered";
  std::string solvers = "bas,hopt,sopt";
  std::optional<int> trials;
  std::optional<int> threads;
};

// Bins are computed from the parsed CSV so that `report` on the same file
// reproduces stats.csv byte for byte.
void report_from_trials_text(const std::string& csv, const std::array<bool, 3>& solvers,
                             const fs::path& out) {
  std::istringstream in(csv);
  const auto rows = read_trials_csv(in);
  emit_report(bin_by_distance(rows), solvers, out);
}

void run_bench(const BenchOptions& o) {
  ScenarioConfig cfg = load_config(o.common);
  if (o.trials) cfg.samples = *o.trials;
  if (o.threads) cfg.threads = *o.threads;
  cfg.validate();
  TrialOptions options;
  options.mode = parse_mode(o.mode);
  options.solvers = parse_solver_list(o.solvers);

  const auto records = run_trials(cfg, options);
  ensure_dir(o.out);
  {
    auto cfg_out = open_out(fs::path(o.out) / "config.txt");
    cfg.write(cfg_out);
  }
  std::ostringstream csv;
  write_trials_csv(csv, trial_rows(records, options.solvers));
  {
    auto trials_out = open_out(fs::path(o.out) / "trials.csv");
    trials_out << csv.str();
    if (!trials_out) throw Error(ErrorCode::IoFailure, "failed writing trials.csv");
  }
  report_from_trials_text(csv.str(), options.solvers, o.out);

  int dropped = 0;
  DetectionAudit total;
  for (const auto& r : records) {
    dropped += r.dropped;
    total.tags_in_frame += r.audit.tags_in_frame;
    total.missed += r.audit.missed;
    total.false_detections += r.audit.false_detections;
    total.corner_count += r.audit.corner_count;
    total.corner_sq_error += r.audit.corner_sq_error;
  }
  std::cout << "trials " << records.size() << " dropped " << dropped << '\n';
  if (options.mode == ObservationMode::Rendered) {
    const double rms = total.corner_count ? std::sqrt(total.corner_sq_error / total.corner_count) : 0.0;
    std::cout << "tags_in_frame " << total.tags_in_frame << " missed " << total.missed << " false "
              << total.false_detections << " corner_rms_px " << format_number(rms) << '\n';
  }
  std::cout << "wrote " << (fs::path(o.out) / "stats.csv").string() << '\n';
}

struct ReportOptions {
  std::string trials;
  std::string out = ".";
};

void run_report(const ReportOptions& o) {
  std::ifstream in(o.trials);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + o.trials);
  std::stringstream text;
  text << in.rdbuf();
  std::istringstream parse(text.str());
  const auto rows = read_trials_csv(parse);
  ensure_dir(o.out);
  emit_report(bin_by_distance(rows), solvers_present(rows), o.out);
  std::cout << "wrote " << (fs::path(o.out) / "stats.csv").string() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
#ifdef __GLIBC__
  // Frames are large and short-lived; keep them on the heap instead of
  // mapping fresh pages for every allocation.
  mallopt(M_MMAP_THRESHOLD, 1 << 30);
  mallopt(M_TOP_PAD, 256 << 20);
#endif

  CLI::App app{"Vehicle top tag simulation and pose estimation"};
  app.require_subcommand(1);

  RenderOptions render;
  auto* render_cmd = app.add_subcommand("render", "Render frames of sampled poses");
  add_common(render_cmd, render.common);
  render_cmd->add_option("--out", render.out, "Output directory");
  render_cmd->add_option("--indices", render.indices, "Sample indices")->delimiter(',');
  render_cmd->add_option("--camera", render.camera, "Camera index");

  DetectOptions detect;
  auto* detect_cmd = app.add_subcommand("detect", "Detect tags in a PGM image");
  add_common(detect_cmd, detect.common);
  detect_cmd->add_option("--image", detect.image, "Input PGM")->required();
  detect_cmd->add_option("--codebook", detect.codebook, "Codebook file");

  EstimateOptions estimate;
  auto* estimate_cmd = app.add_subcommand("estimate", "Estimate the bus pose from detections");
  add_common(estimate_cmd, estimate.common);
  estimate_cmd->add_option("--detections", estimate.detections, "Detections file")->required();
  estimate_cmd->add_option("--camera", estimate.camera, "Camera file (default: first RSU of the config)");
  estimate_cmd->add_option("--solvers", estimate.solvers, "Comma-separated subset of bas,hopt,sopt");

  BenchOptions bench;
  auto* bench_cmd = app.add_subcommand("bench", "Monte Carlo benchmark and report");
  add_common(bench_cmd, bench.common);
  bench_cmd->add_option("--out", bench.out, "Output directory");
  bench_cmd->add_option("--mode", bench.mode, "analytic or rendered");
  bench_cmd->add_option("--solvers", bench.solvers, "Comma-separated subset of bas,hopt,sopt");
  bench_cmd->add_option("--trials", bench.trials, "Number of sampled poses");
  bench_cmd->add_option("--threads", bench.threads, "Worker threads (0 = hardware)");

  ReportOptions report;
  auto* report_cmd = app.add_subcommand("report", "Re-aggregate a trials CSV");
  report_cmd->add_option("--trials", report.trials, "trials.csv from bench")->required();
  report_cmd->add_option("--out", report.out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    if (*render_cmd) run_render(render);
    if (*detect_cmd) run_detect(detect);
    if (*estimate_cmd) run_estimate(estimate);
    if (*bench_cmd) run_bench(bench);
    if (*report_cmd) run_report(report);
  } catch (const Error& e) {
    std::cerr << "toptag: " << e.what() << '\n';
    return e.code() == ErrorCode::ConfigError ? kExitConfig : kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "toptag: " << e.what() << '\n';
    return kExitRuntime;
  }
  return 0;
}
