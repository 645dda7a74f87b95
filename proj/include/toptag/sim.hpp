#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "toptag/codebook.hpp"
#include "toptag/detect.hpp"
#include "toptag/image.hpp"
#include "toptag/pose.hpp"
#include "toptag/scenario.hpp"

namespace toptag {

struct GroundTruthSample {
  HorizontalPose pose;  // tag-frame origin on the bus top
  double delta = 0.0;     // actual tag-plane height minus bus_height
  double distance = 0.0;  // horizontal distance to the first camera's ground foot
};

enum class RngPurpose : std::uint64_t { Pose = 0, PixelNoise = 1, Decoy = 2 };

/// Independent generator for one trial, keyed by (seed, trial, purpose) so
/// results do not depend on thread scheduling or on other trials.
std::mt19937_64 trial_rng(std::uint64_t seed, std::uint64_t trial, RngPurpose purpose,
                          std::uint64_t stream = 0);

/// Ground-truth pose of a trial; sample_poses(cfg)[i] == sample_pose(cfg, i).
GroundTruthSample sample_pose(const ScenarioConfig& cfg, std::uint64_t trial);

/// cfg.samples poses, area-uniform over the sector. Throws EmptySector when
/// the sector has no area.
std::vector<GroundTruthSample> sample_poses(const ScenarioConfig& cfg);

/// Tag-to-world transform of a sample (the tag plane sits at bus_height + delta).
RigidTransform sample_tag_to_world(const ScenarioConfig& cfg, const GroundTruthSample& s);

/// Projected layout corners with Gaussian pixel noise; points outside the
/// image are dropped and fewer than 4 survivors give an empty observation.
ImageObservations observe_corners(const ScenarioConfig& cfg, const TagLayout& layout,
                                  const CameraModel& cam, const GroundTruthSample& s,
                                  std::mt19937_64& rng);

inline constexpr std::uint8_t kGroundLevel = 200;
inline constexpr std::uint8_t kRoofLevel = 140;
inline constexpr std::uint8_t kBlackLevel = 20;
inline constexpr std::uint8_t kWhiteLevel = 235;

/// Renders the bus top with its tags. Tag patterns follow the codebook entry
/// with the tag's id. Throws BehindCamera when the roof is not entirely in
/// front of the camera and InvalidArgument for a tag id missing from the codebook.
GrayImage render_frame(const ScenarioConfig& cfg, const TagLayout& layout, const TagCodebook& codebook,
                       const CameraModel& cam, const GroundTruthSample& s);

/// Tag-free test image: smooth textured noise, plain dark quads and
/// perspective tag look-alikes whose payload is more than max_hamming + 1
/// bits away from every codebook entry in every rotation.
GrayImage render_decoy_frame(int width, int height, const TagCodebook& codebook, std::uint64_t seed,
                             std::uint64_t index);

enum class ObservationMode { Analytic, Rendered };

enum class SolverKind { Basic = 0, Hard = 1, Soft = 2 };
inline constexpr std::array<SolverKind, 3> kAllSolvers = {SolverKind::Basic, SolverKind::Hard,
                                                         SolverKind::Soft};
const char* solver_name(SolverKind s);  // "bas", "hopt", "sopt"
SolverKind parse_solver(std::string_view name);

struct SolverOutcome {
  bool ran = false;
  bool failed = false;  // solver threw; estimate is meaningless
  PoseEstimate estimate;
  double position_error = 0.0;     // m, horizontal
  double orientation_error = 0.0;  // rad, wrapped to [0, pi]
};

/// Detector bookkeeping of a rendered trial (first camera).
struct DetectionAudit {
  int tags_in_frame = 0;  // layout tags whose white quiet zone projects inside the image
  int missed = 0;         // in-frame tags without a matching detection
  int false_detections = 0;  // ids outside the layout or corners far from the truth
  int corner_count = 0;
  double corner_sq_error = 0.0;  // px^2, summed over matched corners
};

struct TrialRecord {
  std::uint64_t trial = 0;
  GroundTruthSample sample;
  ControlPointObservations observations;
  std::array<SolverOutcome, 3> solvers;
  bool dropped = false;
  DetectionAudit audit;
};

struct TrialOptions {
  ObservationMode mode = ObservationMode::Analytic;
  std::array<bool, 3> solvers = {true, true, true};
  int threads = -1;  // -1 uses cfg.threads
  SolverSettings settings;
};

/// Observation of one trial for every camera (no solver involved).
ControlPointObservations observe_trial(const ScenarioConfig& cfg, const TagLayout& layout,
                                       const TagCodebook& codebook,
                                       const std::vector<CameraModel>& cams, const GroundTruthSample& s,
                                       std::uint64_t trial, ObservationMode mode, DetectionAudit* audit);

/// Detected tag corners mapped to layout indices; unknown ids are ignored.
ImageObservations observations_from_detections(const TagLayout& layout,
                                               const std::vector<TagDetection>& detections);

TrialRecord run_trial(const ScenarioConfig& cfg, const TagLayout& layout, const TagCodebook& codebook,
                      const std::vector<CameraModel>& cams, std::uint64_t trial,
                      const TrialOptions& options);

/// All cfg.samples trials. Solvers only receive the observations, the
/// cameras and bus_height. Records come back in trial order regardless of
/// the thread count.
std::vector<TrialRecord> run_trials(const ScenarioConfig& cfg, const TrialOptions& options);

/// Codebook named by the config, or the built-in one.
TagCodebook scenario_codebook(const ScenarioConfig& cfg);

}  // namespace toptag
