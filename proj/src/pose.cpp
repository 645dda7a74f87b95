#include "toptag/pose.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <set>

#include "toptag/error.hpp"

namespace toptag {

void validate_observations(const TagLayout& layout, const ImageObservations& obs) {
  std::set<int> seen;
  for (const auto& p : obs.points) {
    if (p.index < 0 || p.index >= static_cast<int>(layout.size())) {
      throw Error(ErrorCode::InvalidArgument, "observation refers to a control point outside the layout");
    }
    if (!seen.insert(p.index).second) {
      throw Error(ErrorCode::InvalidArgument, "control point observed twice by one camera");
    }
  }
}

HorizontalPose horizontal_from(const RotationVector& w_tw, const Vec3& T_tw) {
  return {T_tw.x(), T_tw.y(), w_tw.w.z()};
}

RigidTransform pose_from_homography(const Homography& homography, const CameraModel& cam) {
  Mat3 H = homography.H;
  for (int attempt = 0; attempt < 2; ++attempt) {
    const Mat3 M = cam.A_inv() * H;
    const Vec3 m1 = M.col(0);
    const Vec3 m2 = M.col(1);
    const double n1 = m1.norm();
    const double n2 = m2.norm();
    if (!(n1 > 0.0 && n2 > 0.0)) {
      throw Error(ErrorCode::DegenerateConfiguration, "homography columns vanish");
    }
    Mat3 quasi;
    quasi.col(0) = m1 / n1;
    quasi.col(1) = m2 / n2;
    quasi.col(2) = quasi.col(0).cross(quasi.col(1));
    const RotationVector w_tc = vec_from_rot(quasi);
    const double lambda = std::sqrt(n1 * n2);
    const Vec3 T_tc = M.col(2) / lambda;
    if (T_tc.z() > 0.0) {
      return {rot_from_vec(w_tc), T_tc};
    }
    // Tag must lie in front of the camera: flip the homography's sign.
    H = -H;
  }
  throw Error(ErrorCode::TagBehindCamera, "tag plane lies behind the camera");
}

namespace {

std::vector<PointPair> plane_pairs(const TagLayout& layout, const ImageObservations& obs) {
  std::vector<PointPair> pairs;
  pairs.reserve(obs.size());
  for (const auto& p : obs.points) {
    const Vec3& q = layout.control_points()[p.index];
    pairs.push_back({q.head<2>(), p.uv});
  }
  return pairs;
}

double reprojection_rms_single(const TagLayout& layout, const ImageObservations& obs,
                               const CameraModel& cam, const RigidTransform& tag_to_world) {
  const ControlPointObservations all{obs};
  return reprojection_rms(layout, all, std::span<const CameraModel>(&cam, 1), tag_to_world);
}

Vec3 mean_observed_layout_point(const TagLayout& layout, const ImageObservations& obs) {
  Vec3 sum = Vec3::Zero();
  for (const auto& p : obs.points) sum += layout.control_points()[p.index];
  return sum / static_cast<double>(obs.size());
}

}  // namespace

PoseEstimate estimate_basic(const TagLayout& layout, const ImageObservations& obs,
                            const CameraModel& cam) {
  validate_observations(layout, obs);
  const auto pairs = plane_pairs(layout, obs);
  const Homography H = dlt_homography(pairs);
  const RigidTransform tag_to_cam = pose_from_homography(H, cam);
  const RigidTransform tag_to_world = cam.cam_to_world() * tag_to_cam;

  PoseEstimate est;
  est.w_tw = vec_from_rot(tag_to_world.R);
  est.T_tw = tag_to_world.T;
  est.horizontal = horizontal_from(est.w_tw, est.T_tw);
  est.rms_reprojection = reprojection_rms_single(layout, obs, cam, tag_to_world);
  est.iterations = 0;
  est.converged = true;
  return est;
}

HorizontalPose init_constrained_with_heading(const TagLayout& layout, const ImageObservations& obs,
                                             const CameraModel& cam, double h, double phi) {
  validate_observations(layout, obs);
  if (obs.empty()) {
    throw Error(ErrorCode::DegenerateConfiguration, "no observed control points");
  }
  Vec2 sum = Vec2::Zero();
  for (const auto& p : obs.points) sum += backproject_to_height(cam, p.uv, h);
  const Vec2 mean = sum / static_cast<double>(obs.size());
  const Vec3 offset = rot_from_vec(RotationVector(0.0, 0.0, phi)) * mean_observed_layout_point(layout, obs);
  return {mean.x() - offset.x(), mean.y() - offset.y(), phi};
}

HorizontalPose init_constrained(const TagLayout& layout, const ImageObservations& obs,
                                const CameraModel& cam, double h) {
  const PoseEstimate basic = estimate_basic(layout, obs, cam);
  return init_constrained_with_heading(layout, obs, cam, h, basic.horizontal.phi);
}

Eigen::VectorXd hard_residual(const TagLayout& layout, const ImageObservations& obs,
                              const CameraModel& cam, double h, const Eigen::VectorXd& params) {
  const Mat3 R_tw = rot_from_vec(RotationVector(0.0, 0.0, params(2)));
  const Vec3 T_tw(params(0), params(1), h);
  Eigen::VectorXd r(2 * obs.size());
  for (std::size_t i = 0; i < obs.size(); ++i) {
    const auto& p = obs.points[i];
    const Vec2 uv = project_or_nan(cam, R_tw * layout.control_points()[p.index] + T_tw);
    r.segment<2>(2 * static_cast<Eigen::Index>(i)) = uv - p.uv;
  }
  return r;
}

PoseEstimate estimate_hard(const TagLayout& layout, const ImageObservations& obs,
                           const CameraModel& cam, double h, const SolverSettings& settings) {
  settings.validate();
  const HorizontalPose init = init_constrained(layout, obs, cam, h);
  Eigen::VectorXd x0(3);
  x0 << init.x, init.y, init.phi;
  const auto fn = [&](const Eigen::VectorXd& p) { return hard_residual(layout, obs, cam, h, p); };
  const LeastSquaresResult res = solve_least_squares(fn, x0, settings);

  PoseEstimate est;
  est.w_tw = RotationVector(0.0, 0.0, wrap_angle(res.params(2)));
  est.T_tw = Vec3(res.params(0), res.params(1), h);
  est.horizontal = horizontal_from(est.w_tw, est.T_tw);
  est.rms_reprojection = std::sqrt(res.final_cost / static_cast<double>(obs.size()));
  est.iterations = res.iterations;
  est.converged = res.converged;
  return est;
}

std::optional<std::size_t> reference_camera(const ControlPointObservations& obs) {
  std::optional<std::size_t> best;
  for (std::size_t k = 0; k < obs.size(); ++k) {
    if (obs[k].size() < 4) continue;
    if (!best || obs[k].size() > obs[*best].size()) best = k;
  }
  return best;
}

namespace {

std::vector<int> penalised_indices(const ControlPointObservations& obs) {
  std::set<int> idx;
  for (const auto& cam_obs : obs)
    for (const auto& p : cam_obs.points) idx.insert(p.index);
  return {idx.begin(), idx.end()};
}

}  // namespace

Eigen::VectorXd soft_residual(const TagLayout& layout, const ControlPointObservations& obs,
                              std::span<const CameraModel> cams, double h, double mu,
                              const Eigen::VectorXd& params) {
  const Mat3 R_tw = rot_from_vec(RotationVector(params.head<3>()));
  const Vec3 T_tw = params.segment<3>(3);
  const std::vector<int> penalised = penalised_indices(obs);

  std::size_t count = 0;
  for (const auto& cam_obs : obs) count += cam_obs.size();
  Eigen::VectorXd r(2 * count + penalised.size());

  Eigen::Index row = 0;
  for (std::size_t k = 0; k < obs.size(); ++k) {
    for (const auto& p : obs[k].points) {
      const Vec3 pw = R_tw * layout.control_points()[p.index] + T_tw;
      r.segment<2>(row) = project_or_nan(cams[k], pw) - p.uv;
      row += 2;
    }
  }
  for (int i : penalised) {
    const double z = R_tw.row(2).dot(layout.control_points()[i]) + T_tw.z();
    r(row++) = mu * (z - h);
  }
  return r;
}

PoseEstimate estimate_soft(const TagLayout& layout, const ControlPointObservations& obs,
                           std::span<const CameraModel> cams, double h,
                           const SolverSettings& settings) {
  settings.validate();
  if (obs.size() != cams.size()) {
    throw Error(ErrorCode::InvalidArgument, "one observation list per camera is required");
  }
  for (const auto& cam_obs : obs) validate_observations(layout, cam_obs);
  const auto ref = reference_camera(obs);
  if (!ref) {
    throw Error(ErrorCode::DegenerateConfiguration, "no camera observes at least 4 control points");
  }
  const HorizontalPose init = init_constrained(layout, obs[*ref], cams[*ref], h);
  Eigen::VectorXd x0(6);
  x0 << 0.0, 0.0, init.phi, init.x, init.y, h;

  const auto fn = [&](const Eigen::VectorXd& p) {
    return soft_residual(layout, obs, cams, h, settings.mu, p);
  };
  const LeastSquaresResult res = solve_least_squares(fn, x0, settings);

  PoseEstimate est;
  // Re-normalise through the rotation matrix so the angle stays in [0, pi].
  est.w_tw = vec_from_rot(rot_from_vec(RotationVector(res.params.head<3>())));
  est.T_tw = res.params.segment<3>(3);
  est.horizontal = horizontal_from(est.w_tw, est.T_tw);
  est.rms_reprojection = reprojection_rms(layout, obs, cams, est.tag_to_world());
  est.iterations = res.iterations;
  est.converged = res.converged;
  return est;
}

double reprojection_rms(const TagLayout& layout, const ControlPointObservations& obs,
                        std::span<const CameraModel> cams, const RigidTransform& tag_to_world) {
  double sq = 0.0;
  std::size_t n = 0;
  for (std::size_t k = 0; k < obs.size(); ++k) {
    for (const auto& p : obs[k].points) {
      const Vec2 uv = project_or_nan(cams[k], tag_to_world.apply(layout.control_points()[p.index]));
      sq += (uv - p.uv).squaredNorm();
      ++n;
    }
  }
  return n == 0 ? 0.0 : std::sqrt(sq / static_cast<double>(n));
}

}  // namespace toptag
