// Acceptance run: one PASS/FAIL line per criterion, details indented above it.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#ifdef __GLIBC__
#include <malloc.h>
#endif

#include "toptag/error.hpp"
#include "toptag/least_squares.hpp"
#include "toptag/pose.hpp"
#include "toptag/sim.hpp"
#include "toptag/stats.hpp"

using namespace toptag;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kRadToDeg = 180.0 / kPi;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Options {
  int c2_samples = 20000;
  int c3_samples = 20000;
  int c4_samples = 4000;
  int decoys = 1000;
  int threads = 4;
  std::string out;
};

struct Outcome {
  bool pass = true;
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      std::printf("    failed: %s\n", what.c_str());
    }
  }
};

void verdict(int n, bool pass, const std::string& summary) {
  std::printf("criterion %d: %s  %s\n", n, pass ? "PASS" : "FAIL", summary.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

// Stats exactly as the bench command computes them: through the trials CSV text.
std::string stats_text(const std::vector<TrialRecord>& records) {
  std::stringstream trials;
  write_trials_csv(trials, trial_rows(records));
  const auto rows = read_trials_csv(trials);
  std::ostringstream out;
  write_stats_csv(out, bin_by_distance(rows), solvers_present(rows));
  return out.str();
}

std::map<int, DistanceBinStats> bins_of(const std::vector<TrialRecord>& records) {
  std::map<int, DistanceBinStats> m;
  for (const auto& b : bin_by_distance(trial_rows(records))) m[b.distance] = b;
  return m;
}

const SolverBinStats* usable(const std::map<int, DistanceBinStats>& bins, int d, int solver) {
  const auto it = bins.find(d);
  if (it == bins.end() || it->second.solvers[solver].count < kMinBinCount) return nullptr;
  return &it->second.solvers[solver];
}

void print_bins(const std::map<int, DistanceBinStats>& bins) {
  std::printf("    dist  bas_rms    hopt_rms   sopt_rms   sopt_max   sopt_ang_deg  count\n");
  for (const auto& [d, b] : bins) {
    std::printf("    %4d  %-9.5f  %-9.5f  %-9.5f  %-9.5f  %-12.5f  %d\n", d, b.solvers[0].pos_rms,
                b.solvers[1].pos_rms, b.solvers[2].pos_rms, b.solvers[2].pos_max, b.solvers[2].ang_rms * kRadToDeg,
                b.solvers[2].count);
  }
}

void save(const Options& opt, const std::string& name, const std::string& text) {
  if (opt.out.empty()) return;
  std::filesystem::create_directories(opt.out);
  std::ofstream(std::filesystem::path(opt.out) / name) << text;
}

std::vector<TrialRecord> run(const ScenarioConfig& cfg, ObservationMode mode, int threads) {
  TrialOptions t;
  t.mode = mode;
  t.threads = threads;
  return run_trials(cfg, t);
}

// ---------------------------------------------------------------------------

// True if some four observed layout points have no three collinear, i.e. a
// plane-to-image homography is determined.
bool well_posed(const TagLayout& layout, const ImageObservations& obs) {
  std::vector<Vec2> p;
  for (const auto& o : obs.points) p.push_back(layout.control_points()[o.index].head<2>());
  const auto cross = [&](std::size_t a, std::size_t b, std::size_t c) {
    const Vec2 u = p[b] - p[a], v = p[c] - p[a];
    return std::abs(u.x() * v.y() - u.y() * v.x()) > 1e-9;
  };
  const std::size_t n = p.size();
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 1; b < n; ++b)
      for (std::size_t c = b + 1; c < n; ++c)
        for (std::size_t d = c + 1; d < n; ++d)
          if (cross(a, b, c) && cross(a, b, d) && cross(a, c, d) && cross(b, c, d)) return true;
  return false;
}

bool criterion1() {
  ScenarioConfig cfg;
  cfg.samples = 1000;
  cfg.pixel_noise_sigma = 0.0;
  cfg.height_disturbance_max = 0.0;
  const TagLayout layout = cfg.tag_layout();
  const auto t0 = Clock::now();
  const auto records = run(cfg, ObservationMode::Analytic, 1);
  const double secs = seconds_since(t0);

  Outcome o;
  std::array<double, 3> pos{}, ang{};
  int n = 0, degenerate = 0, dropped = 0;
  for (const auto& r : records) {
    if (r.dropped) {
      ++dropped;
      continue;
    }
    if (!well_posed(layout, r.observations[0])) {
      // Corners cut by the image edge can leave only collinear points.
      ++degenerate;
      continue;
    }
    ++n;
    for (int s = 0; s < 3; ++s) {
      o.require(!r.solvers[s].failed, std::string(solver_name(static_cast<SolverKind>(s))) + " failed in trial " +
                                          std::to_string(r.trial));
      pos[s] += r.solvers[s].position_error * r.solvers[s].position_error;
      ang[s] += r.solvers[s].orientation_error * r.solvers[s].orientation_error;
    }
  }
  o.require(n > 0, "no retained trials");
  std::printf("    %d well-posed trials, %d with only collinear corners in view, %d out of view\n", n, degenerate,
              dropped);
  for (int s = 0; s < 3; ++s) {
    pos[s] = std::sqrt(pos[s] / n);
    ang[s] = std::sqrt(ang[s] / n);
    std::printf("    %-4s position RMS %.3e m, orientation RMS %.3e rad\n", solver_name(static_cast<SolverKind>(s)),
                pos[s], ang[s]);
    o.require(pos[s] < 1e-5, "position RMS >= 1e-5 m");
    o.require(ang[s] < 1e-6, "orientation RMS >= 1e-6 rad");
  }
  o.require(secs < 10.0, "runtime " + fmt("%.2f", secs) + " s");
  verdict(1, o.pass,
          "noiseless closure over " + std::to_string(n) + " well-posed trials: max position RMS " +
              fmt("%.2e", std::max({pos[0], pos[1], pos[2]})) + " m, max orientation RMS " +
              fmt("%.2e", std::max({ang[0], ang[1], ang[2]})) + " rad; " + fmt("%.2f", secs) + " s");
  return o.pass;
}

bool criterion2(const Options& opt, std::string& stats_serial) {
  ScenarioConfig cfg;
  cfg.samples = opt.c2_samples;
  cfg.height_disturbance_max = 0.0;
  const auto t0 = Clock::now();
  const auto records = run(cfg, ObservationMode::Rendered, 1);
  const double secs = seconds_since(t0);
  stats_serial = stats_text(records);
  save(opt, "criterion2_stats.csv", stats_serial);
  const auto bins = bins_of(records);
  print_bins(bins);

  Outcome o;
  const SolverBinStats* b16 = usable(bins, 16, 0);
  const SolverBinStats* b6 = usable(bins, 6, 0);
  o.require(b16 && b6, "6 m or 16 m bin has fewer than " + std::to_string(kMinBinCount) + " samples");
  double ratio = 0.0;
  if (b16 && b6) {
    ratio = b16->pos_rms / b6->pos_rms;
    o.require(b16->pos_rms < 1.0, "Bas. RMS at 16 m is not sub-meter");
    o.require(ratio >= 2.0, "Bas. RMS at 16 m is less than twice its 6 m value");
  }
  int compared = 0;
  for (const auto& [d, b] : bins) {
    if (d < 10) continue;
    const SolverBinStats* bas = usable(bins, d, 0);
    for (int s : {1, 2}) {
      const SolverBinStats* st = usable(bins, d, s);
      if (!bas || !st) continue;
      ++compared;
      o.require(st->pos_rms <= bas->pos_rms, std::string(solver_name(static_cast<SolverKind>(s))) +
                                                  " above Bas. at " + std::to_string(d) + " m");
    }
  }
  o.require(compared > 0, "no bins >= 10 m to compare");
  verdict(2, o.pass,
          "960x720, no disturbance: Bas. 16 m RMS " + fmt("%.3f", b16 ? b16->pos_rms : NAN) + " m (" +
              fmt("%.1f", ratio) + "x the 6 m bin); H.Opt./S.Opt. <= Bas. in " + std::to_string(compared) +
              " bin comparisons >= 10 m; " + fmt("%.0f", secs) + " s");
  return o.pass;
}

struct LowResRun {
  double focal = 0.0;  // effective, px
  std::vector<TrialRecord> records;
  bool pass = false;
};

bool check_fig7(const std::map<int, DistanceBinStats>& bins, std::string& summary) {
  Outcome o;
  const SolverBinStats* s = usable(bins, 16, 2);
  const SolverBinStats* h = usable(bins, 16, 1);
  o.require(s && h, "16 m bin is sparse");
  if (!s || !h) return false;
  const double ang_deg = s->ang_rms * kRadToDeg;
  o.require(s->pos_max < 0.30, "S.Opt. max error at 16 m " + fmt("%.3f", s->pos_max) + " m");
  o.require(s->pos_rms < 0.20, "S.Opt. RMS at 16 m " + fmt("%.3f", s->pos_rms) + " m");
  o.require(ang_deg < 0.5, "S.Opt. orientation RMS at 16 m " + fmt("%.3f", ang_deg) + " deg");
  o.require(s->pos_rms <= h->pos_rms, "S.Opt. RMS above H.Opt. at 16 m");
  summary = "S.Opt. 16 m: max " + fmt("%.3f", s->pos_max) + " m, RMS " + fmt("%.4f", s->pos_rms) + " m, angle RMS " +
            fmt("%.3f", ang_deg) + " deg; H.Opt. RMS " + fmt("%.4f", h->pos_rms) + " m";
  return o.pass;
}

bool criterion3(const Options& opt, std::vector<LowResRun>& runs, const LowResRun*& passing) {
  const auto t0 = Clock::now();
  std::string passing_summary, last_summary;
  for (double focal : {0.0, 700.0, 900.0}) {
    ScenarioConfig cfg;
    cfg.samples = opt.c3_samples;
    cfg.height_disturbance_max = 0.10;
    cfg.focal_length = focal;
    LowResRun r;
    r.focal = cfg.effective_focal();
    r.records = run(cfg, ObservationMode::Rendered, opt.threads);
    const auto bins = bins_of(r.records);
    std::printf("    focal %.0f px:\n", r.focal);
    print_bins(bins);
    r.pass = check_fig7(bins, last_summary);
    std::printf("    focal %.0f px %s: %s\n", r.focal, r.pass ? "passes" : "fails", last_summary.c_str());
    save(opt, "criterion3_f" + fmt("%.0f", r.focal) + "_stats.csv", stats_text(r.records));
    runs.push_back(std::move(r));
    if (runs.size() == 1 && runs[0].pass) break;  // the default passes; no fallback needed
  }
  passing = nullptr;
  for (const auto& r : runs) {
    if (r.pass) {
      passing = &r;
      break;
    }
  }
  if (passing) check_fig7(bins_of(passing->records), passing_summary);
  verdict(3, passing != nullptr,
          passing ? "960x720, +-10 cm disturbance, focal " + fmt("%.0f", passing->focal) + " px: " + passing_summary +
                        "; " + fmt("%.0f", seconds_since(t0)) + " s"
                  : "no focal length passes; last: " + last_summary);
  return passing != nullptr;
}

bool criterion4(const Options& opt, const LowResRun* low) {
  const auto t0 = Clock::now();
  ScenarioConfig cfg;
  cfg.height_disturbance_max = 0.10;
  cfg.image_width = 3200;
  cfg.image_height = 2400;
  const double low_focal = low ? low->focal : 800.0;
  cfg.focal_length = low_focal * 3200.0 / 960.0;
  cfg.samples = opt.c4_samples;
  const auto high = run(cfg, ObservationMode::Rendered, opt.threads);
  save(opt, "criterion4_stats.csv", stats_text(high));

  // Low-resolution counterpart over the same trial indices (same poses and disturbances).
  std::vector<TrialRecord> paired;
  if (low) {
    for (const auto& r : low->records)
      if (r.trial < static_cast<std::uint64_t>(opt.c4_samples)) paired.push_back(r);
  } else {
    ScenarioConfig lc = cfg;
    lc.image_width = 960;
    lc.image_height = 720;
    lc.focal_length = low_focal;
    paired = run(lc, ObservationMode::Rendered, opt.threads);
  }
  // H.Opt. holds the plane at bus_height, so a disturbed bus leaves a
  // resolution-independent error. Exact corners show that floor.
  ScenarioConfig exact = cfg;
  exact.pixel_noise_sigma = 0.0;
  const auto floor_bins = bins_of(run(exact, ObservationMode::Analytic, opt.threads));

  const auto hb = bins_of(high);
  const auto lb = bins_of(paired);
  std::printf("    3200x2400 at focal %.1f px vs 960x720 at %.1f px, trials 0..%d, position RMS low/high:\n",
              cfg.focal_length, low_focal, opt.c4_samples - 1);
  std::printf("    dist  bas                hopt               sopt               hopt, exact corners\n");

  Outcome o;
  int compared = 0;
  std::vector<std::string> worse;
  for (const auto& [d, b] : hb) {
    if (d < 8) continue;
    std::printf("    %4d", d);
    for (int s = 0; s < 3; ++s) {
      const SolverBinStats* h = usable(hb, d, s);
      const SolverBinStats* l = usable(lb, d, s);
      if (!h || !l) {
        std::printf("  %-17s", "sparse");
        continue;
      }
      std::printf("  %.5f/%.5f", l->pos_rms, h->pos_rms);
      ++compared;
      if (!(h->pos_rms < l->pos_rms))
        worse.push_back(std::string(solver_name(static_cast<SolverKind>(s))) + " not improved at " +
                        std::to_string(d) + " m");
    }
    const SolverBinStats* f = usable(floor_bins, d, 1);
    std::printf("  %.5f\n", f ? f->pos_rms : NAN);
  }
  for (const auto& w : worse) o.require(false, w);
  o.require(compared > 0, "no bins >= 8 m to compare");

  std::array<double, 3> factor{}, reduction{};
  const bool have16 = [&] {
    for (int s = 0; s < 3; ++s) {
      const SolverBinStats* h = usable(hb, 16, s);
      const SolverBinStats* l = usable(lb, 16, s);
      if (!h || !l) return false;
      factor[s] = l->pos_rms / h->pos_rms;
      reduction[s] = l->pos_rms - h->pos_rms;
    }
    return true;
  }();
  o.require(have16, "16 m bin is sparse");
  if (have16) {
    std::printf("    16 m: improvement factor bas %.2f, hopt %.2f, sopt %.2f; RMS reduction bas %.4f m, hopt %.4f m, "
                "sopt %.4f m\n",
                factor[0], factor[1], factor[2], reduction[0], reduction[1], reduction[2]);
    o.require(factor[0] > factor[1] && factor[0] > factor[2], "Bas. does not improve by the largest factor at 16 m");
  }
  verdict(4, o.pass,
          "3200x2400: " + std::to_string(compared - static_cast<int>(worse.size())) + " of " +
              std::to_string(compared) + " per-bin comparisons >= 8 m improved; 16 m improvement bas " +
              fmt("%.2f", factor[0]) + "x, hopt " + fmt("%.2f", factor[1]) + "x, sopt " + fmt("%.2f", factor[2]) +
              "x; " + fmt("%.0f", seconds_since(t0)) + " s");
  return o.pass;
}

bool criterion5(const Options& opt, const std::vector<LowResRun>& runs) {
  const auto t0 = Clock::now();
  const std::size_t tag_count = ScenarioConfig().tag_layout().tags().size();
  long frames = 0, tags = 0, missed = 0, false_dets = 0;
  for (const auto& r : runs) {
    for (const auto& rec : r.records) {
      if (rec.sample.distance > 16.0 || rec.audit.tags_in_frame != static_cast<int>(tag_count)) continue;
      ++frames;
      tags += rec.audit.tags_in_frame;
      missed += rec.audit.missed;
      false_dets += rec.audit.false_detections;
    }
  }
  const TagCodebook& book = TagCodebook::builtin();
  const std::uint64_t seed = ScenarioConfig().seed;
  long decoy_hits = 0;
  for (int i = 0; i < opt.decoys; ++i) {
    decoy_hits += static_cast<long>(detect_tags(render_decoy_frame(960, 720, book, seed, i), book).size());
  }
  std::printf("    %ld frames with both tags in frame at <= 16 m: %ld tags, %ld missed, %ld false\n", frames, tags,
              missed, false_dets);
  std::printf("    %d tag-free images: %ld detections\n", opt.decoys, decoy_hits);
  Outcome o;
  o.require(frames > 0, "no qualifying frames");
  o.require(missed == 0, "missed tags");
  o.require(false_dets == 0, "false detections");
  o.require(decoy_hits == 0, "detections on tag-free images");
  verdict(5, o.pass,
          std::to_string(tags) + " tags in " + std::to_string(frames) + " frames: " + std::to_string(missed) +
              " missed, " + std::to_string(false_dets) + " false; " + std::to_string(opt.decoys) +
              " tag-free images: " + std::to_string(decoy_hits) + " detections; " +
              fmt("%.0f", seconds_since(t0)) + " s");
  return o.pass;
}

// Numerical invariants on the default roadside camera.
bool criterion6() {
  const auto t0 = Clock::now();
  Outcome o;
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const ScenarioConfig cfg;
  const CameraModel cam = cfg.cameras()[0];
  const TagLayout layout = cfg.tag_layout();
  const std::span<const CameraModel> cams(&cam, 1);

  // Rodrigues round trip.
  double rod = 0.0;
  for (int i = 0; i < 10000; ++i) {
    Vec3 w(u(rng), u(rng), u(rng));
    w = w.normalized() * (kPi - 1e-6) * std::abs(u(rng));
    rod = std::max(rod, (vec_from_rot(rot_from_vec(RotationVector(w))).w - w).norm());
  }
  o.require(rod < 1e-9, "Rodrigues round trip " + fmt("%.2e", rod));

  // DLT on exact correspondences: layout points seen by the roadside camera.
  double dlt = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const GroundTruthSample gt = sample_pose(cfg, static_cast<std::uint64_t>(i));
    const RigidTransform T{rot_from_vec(RotationVector(0, 0, gt.pose.phi)), Vec3(gt.pose.x, gt.pose.y, 3.0)};
    const auto pixel_of = [&](const Vec2& p) { return project(cam, T.apply(Vec3(p.x(), p.y(), 0.0))); };
    std::vector<PointPair> pairs;
    for (const Vec3& c : layout.control_points()) pairs.push_back({c.head<2>(), pixel_of(c.head<2>())});
    const Homography est = dlt_homography(pairs);
    for (int k = 0; k < 10; ++k) {
      const Vec2 p(3.0 * u(rng), 0.8 * u(rng));
      dlt = std::max(dlt, (est.map(p) - pixel_of(p)).norm());
    }
  }
  o.require(dlt < 1e-8, "DLT reprojection " + fmt("%.2e", dlt) + " px");

  // Project / backproject.
  double inv = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const Vec2 px(479.5 + 470 * u(rng), 500 + 210 * u(rng));
    const double h = 3.0 + 0.5 * u(rng);
    const Vec2 xy = backproject_to_height(cam, px, h);
    inv = std::max(inv, (project(cam, Vec3(xy.x(), xy.y(), h)) - px).norm());
  }
  o.require(inv < 1e-9, "project/backproject " + fmt("%.2e", inv) + " px");

  const auto observe = [&](const RigidTransform& T, double sigma) {
    std::normal_distribution<double> n(0.0, sigma);
    ImageObservations obs;
    for (std::size_t i = 0; i < layout.size(); ++i)
      obs.points.push_back({static_cast<int>(i), project(cam, T.apply(layout.control_points()[i])) + Vec2(n(rng), n(rng))});
    return obs;
  };
  const auto random_pose = [&](double z) {
    const GroundTruthSample s = sample_pose(cfg, rng() % 100000);
    return RigidTransform{rot_from_vec(RotationVector(0, 0, s.pose.phi)), Vec3(s.pose.x, s.pose.y, z)};
  };

  // Soft objective: central differences agree under step refinement.
  double jac = 0.0;
  for (int i = 0; i < 100; ++i) {
    const RigidTransform T = random_pose(3.0);
    const ControlPointObservations obs = {observe(T, 0.3)};
    Eigen::VectorXd p(6);
    p << 0.05 * u(rng), 0.05 * u(rng), vec_from_rot(T.R).w.z(), T.T;
    const auto fn = [&](const Eigen::VectorXd& q) { return soft_residual(layout, obs, cams, 3.0, 1.0, q); };
    const Eigen::MatrixXd J = finite_difference_jacobian(fn, p, 1e-6);
    const Eigen::MatrixXd Jf = finite_difference_jacobian(fn, p, 1e-7);
    jac = std::max(jac, (J - Jf).norm() / Jf.norm());
  }
  o.require(jac < 1e-4, "soft Jacobian relative difference " + fmt("%.2e", jac));

  // Accepted costs never increase, for the hard and the soft objective.
  int non_monotone = 0;
  for (int i = 0; i < 100; ++i) {
    const RigidTransform T = random_pose(3.0 + 0.1 * u(rng));
    const ImageObservations obs = observe(T, 0.5);
    const HorizontalPose init = init_constrained(layout, obs, cam, 3.0);
    Eigen::VectorXd p0(3);
    p0 << init.x + 0.2 * u(rng), init.y + 0.2 * u(rng), init.phi + 0.1 * u(rng);
    const auto fn = [&](const Eigen::VectorXd& q) { return hard_residual(layout, obs, cam, 3.0, q); };
    const auto res = solve_least_squares(fn, p0, {});
    for (std::size_t k = 1; k < res.accepted_costs.size(); ++k)
      non_monotone += res.accepted_costs[k] > res.accepted_costs[k - 1];

    const ControlPointObservations all = {obs};
    Eigen::VectorXd q0(6);
    q0 << 0.03 * u(rng), 0.03 * u(rng), init.phi + 0.1 * u(rng), init.x + 0.2 * u(rng), init.y + 0.2 * u(rng),
        3.0 + 0.2 * u(rng);
    const auto soft = [&](const Eigen::VectorXd& q) { return soft_residual(layout, all, cams, 3.0, 1.0, q); };
    const auto sres = solve_least_squares(soft, q0, {});
    for (std::size_t k = 1; k < sres.accepted_costs.size(); ++k)
      non_monotone += sres.accepted_costs[k] > sres.accepted_costs[k - 1];
  }
  o.require(non_monotone == 0, std::to_string(non_monotone) + " cost increases");

  // Moving the world horizontally moves every estimate the same way. With
  // consistent observations the optimum has zero residual and the solvers
  // must agree to 1e-9. With noise and a wrong plane height the optimum of a
  // central-difference Jacobian (step 1e-6) shifts by rounding, up to a few
  // 1e-8; that case is bounded at 1e-6.
  SolverSettings tight;
  tight.step_tolerance = 1e-14;
  tight.residual_tolerance = 1e-20;
  const auto equivariance = [&](double sigma, double dz, int count) {
    std::array<double, 3> worst{};
    for (int i = 0; i < count; ++i) {
      const RigidTransform T = random_pose(3.0 + dz * u(rng));
      const ImageObservations obs = observe(T, sigma);
      const RigidTransform G{rot_from_vec(RotationVector(0, 0, kPi * u(rng))), Vec3(5 * u(rng), 5 * u(rng), 0.0)};
      const CameraModel moved(cam.A(), cam.world_to_cam() * G.inverse(), cam.resolution());
      const std::span<const CameraModel> mcams(&moved, 1);
      const auto diff = [&](const PoseEstimate& a, const PoseEstimate& b) {
        return std::max((b.T_tw - G.apply(a.T_tw)).norm(),
                        (rot_from_vec(b.w_tw) - G.R * rot_from_vec(a.w_tw)).norm());
      };
      worst[0] = std::max(worst[0], diff(estimate_basic(layout, obs, cam), estimate_basic(layout, obs, moved)));
      worst[1] = std::max(worst[1], diff(estimate_hard(layout, obs, cam, 3.0, tight),
                                         estimate_hard(layout, obs, moved, 3.0, tight)));
      worst[2] = std::max(worst[2], diff(estimate_soft(layout, {obs}, cams, 3.0, tight),
                                         estimate_soft(layout, {obs}, mcams, 3.0, tight)));
    }
    std::printf("    equivariance, sigma %.1f px, height offset up to %.2f m: bas %.2e, hopt %.2e, sopt %.2e\n", sigma,
                dz, worst[0], worst[1], worst[2]);
    return std::max({worst[0], worst[1], worst[2]});
  };
  const double equi = equivariance(0.0, 0.0, 100);
  const double equi_noisy = equivariance(0.4, 0.05, 100);
  o.require(equi < 1e-9, "equivariance " + fmt("%.2e", equi));
  o.require(equi_noisy < 1e-6, "equivariance with noise " + fmt("%.2e", equi_noisy));

  const double secs = seconds_since(t0);
  o.require(secs < 30.0, "runtime " + fmt("%.1f", secs) + " s");
  verdict(6, o.pass,
          "Rodrigues " + fmt("%.1e", rod) + ", DLT " + fmt("%.1e", dlt) + ", backprojection " + fmt("%.1e", inv) +
              " px, Jacobian " + fmt("%.1e", jac) + ", " + std::to_string(non_monotone) +
              " cost increases in 200 solves, equivariance " + fmt("%.1e", equi) + " (" +
              fmt("%.1e", equi_noisy) + " with noise); " + fmt("%.1f", secs) + " s");
  return o.pass;
}

bool criterion7(const Options& opt, const std::string& stats_serial) {
  const auto t0 = Clock::now();
  ScenarioConfig cfg;
  cfg.samples = opt.c2_samples;
  cfg.height_disturbance_max = 0.0;
  const std::string parallel = stats_text(run(cfg, ObservationMode::Rendered, opt.threads));
  const bool same = !stats_serial.empty() && parallel == stats_serial;
  verdict(7, same,
          std::string("criterion 2 stats.csv, 1 thread vs ") + std::to_string(opt.threads) + " threads: " +
              (same ? "byte-identical" : "different") + " (" + std::to_string(parallel.size()) + " bytes); " +
              fmt("%.0f", seconds_since(t0)) + " s");
  return same;
}

}  // namespace

int main(int argc, char** argv) {
#ifdef __GLIBC__
  // Large frames are allocated per trial; keep them out of mmap.
  mallopt(M_MMAP_THRESHOLD, 1 << 30);
  mallopt(M_TOP_PAD, 256 << 20);
#endif
  Options opt;
  CLI::App app("toptag acceptance run");
  app.add_option("--c2-samples", opt.c2_samples, "Samples of the low-resolution, undisturbed run");
  app.add_option("--c3-samples", opt.c3_samples, "Samples of the low-resolution, disturbed run");
  app.add_option("--c4-samples", opt.c4_samples, "Samples of the high-resolution run");
  app.add_option("--decoys", opt.decoys, "Tag-free images");
  app.add_option("--threads", opt.threads, "Worker threads of the parallel runs");
  app.add_option("--out", opt.out, "Directory for the stats tables");
  CLI11_PARSE(app, argc, argv);

  try {
    std::vector<bool> results;
    results.push_back(criterion1());
    std::string stats2;
    results.push_back(criterion2(opt, stats2));
    std::vector<LowResRun> runs;
    const LowResRun* passing = nullptr;
    results.push_back(criterion3(opt, runs, passing));
    results.push_back(criterion4(opt, passing ? passing : (runs.empty() ? nullptr : &runs.front())));
    results.push_back(criterion5(opt, runs));
    results.push_back(criterion6());
    results.push_back(criterion7(opt, stats2));
    const auto passed = std::count(results.begin(), results.end(), true);
    std::printf("%ld of %zu criteria passed\n", static_cast<long>(passed), results.size());
    return passed == static_cast<long>(results.size()) ? 0 : 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "acceptance run aborted: %s\n", e.what());
    return 2;
  }
}
