#pragma once

#include <optional>
#include <span>
#include <vector>

#include "toptag/geometry.hpp"
#include "toptag/layout.hpp"
#include "toptag/least_squares.hpp"

namespace toptag {

struct ObservedPoint {
  int index = 0;  // into TagLayout::control_points
  Vec2 uv;        // pixels
};

/// Control points seen by one camera.
struct ImageObservations {
  std::vector<ObservedPoint> points;

  bool empty() const { return points.empty(); }
  std::size_t size() const { return points.size(); }
};

/// Observations over m cameras, indexed like the camera list.
using ControlPointObservations = std::vector<ImageObservations>;

/// Throws InvalidArgument for out-of-range or repeated layout indices.
void validate_observations(const TagLayout& layout, const ImageObservations& obs);

struct HorizontalPose {
  double x = 0.0;
  double y = 0.0;
  double phi = 0.0;
};

struct PoseEstimate {
  RotationVector w_tw;
  Vec3 T_tw = Vec3::Zero();
  HorizontalPose horizontal;
  double rms_reprojection = 0.0;  // px
  int iterations = 0;
  bool converged = true;

  RigidTransform tag_to_world() const { return {rot_from_vec(w_tw), T_tw}; }
};

/// Horizontal part (e1.T, e2.T, e3.w) of a full pose.
HorizontalPose horizontal_from(const RotationVector& w_tw, const Vec3& T_tw);

/// Closed-form estimate: homography, its decomposition into the tag-to-camera
/// pose, composition with the camera extrinsics and horizontal extraction.
/// Throws DegenerateConfiguration (fewer than 4 usable points) and
/// TagBehindCamera.
PoseEstimate estimate_basic(const TagLayout& layout, const ImageObservations& obs,
                            const CameraModel& cam);

/// Tag-to-camera pose from a tag-plane homography (exposed for tests).
RigidTransform pose_from_homography(const Homography& H, const CameraModel& cam);

/// Initial horizontal pose on the plane z = h: observed pixels are
/// back-projected onto the plane and averaged; heading comes from
/// estimate_basic. When only part of the layout is observed, the rotated
/// centroid of the observed layout points is subtracted so the result is the
/// tag-frame origin (a no-op for complete symmetric layouts).
HorizontalPose init_constrained(const TagLayout& layout, const ImageObservations& obs,
                                const CameraModel& cam, double h);

/// Same initialisation with a known heading.
HorizontalPose init_constrained_with_heading(const TagLayout& layout, const ImageObservations& obs,
                                             const CameraModel& cam, double h, double phi);

/// 3-DoF refinement with the tag plane held at z = h.
PoseEstimate estimate_hard(const TagLayout& layout, const ImageObservations& obs,
                           const CameraModel& cam, double h, const SolverSettings& settings = {});

/// 6-DoF refinement with the soft plane penalty mu^2 (z_i - h)^2 over one or
/// more cameras. The init comes from the camera with the most points (lowest
/// index on ties).
PoseEstimate estimate_soft(const TagLayout& layout, const ControlPointObservations& obs,
                           std::span<const CameraModel> cams, double h,
                           const SolverSettings& settings = {});

/// Camera used to initialise the multi-camera solver, or nullopt if none has 4 points.
std::optional<std::size_t> reference_camera(const ControlPointObservations& obs);

/// Residual vectors of the optimisers, exposed for the Jacobian and
/// monotonicity checks. Parameters: (x, y, phi) for the hard residual,
/// (w_tw, T_tw) for the soft residual.
Eigen::VectorXd hard_residual(const TagLayout& layout, const ImageObservations& obs,
                              const CameraModel& cam, double h, const Eigen::VectorXd& params);
Eigen::VectorXd soft_residual(const TagLayout& layout, const ControlPointObservations& obs,
                              std::span<const CameraModel> cams, double h, double mu,
                              const Eigen::VectorXd& params);

/// RMS pixel reprojection error of a full pose over all cameras.
double reprojection_rms(const TagLayout& layout, const ControlPointObservations& obs,
                        std::span<const CameraModel> cams, const RigidTransform& tag_to_world);

}  // namespace toptag
