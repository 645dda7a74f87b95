#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <array>
#include <span>

namespace toptag {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat9 = Eigen::Matrix<double, 9, 9>;
using Vec9 = Eigen::Matrix<double, 9, 1>;

/// Axis-angle rotation: direction is the axis, norm the angle in radians.
struct RotationVector {
  Vec3 w = Vec3::Zero();

  RotationVector() = default;
  explicit RotationVector(const Vec3& v) : w(v) {}
  RotationVector(double x, double y, double z) : w(x, y, z) {}

  double angle() const { return w.norm(); }
};

Mat3 skew(const Vec3& v);

/// Rodrigues exponential map. Uses the second-order series below 1e-8 rad.
Mat3 rot_from_vec(const RotationVector& w);

/// Logarithm of the nearest proper rotation (polar factor) of R.
/// The returned angle lies in [0, pi]. Throws NotARotation when the polar
/// factor is not a proper rotation.
RotationVector vec_from_rot(const Mat3& R);

/// Orthogonal polar factor of M via the Newton iteration X <- (X + X^-T) / 2.
/// Throws NotARotation for singular or reflecting input.
Mat3 nearest_rotation(const Mat3& M);

/// Rigid motion x -> R x + T.
struct RigidTransform {
  Mat3 R = Mat3::Identity();
  Vec3 T = Vec3::Zero();

  static RigidTransform identity() { return {}; }

  Vec3 apply(const Vec3& p) const { return R * p + T; }
  RigidTransform inverse() const { return {R.transpose(), -R.transpose() * T}; }
  RigidTransform operator*(const RigidTransform& rhs) const { return {R * rhs.R, R * rhs.T + T}; }
};

struct Resolution {
  int width = 0;
  int height = 0;
};

/// Calibrated pinhole camera. world_to_cam holds (R_wc, T_wc) and
/// cam_to_world holds (R_cw, T_cw); both are kept in sync by construction.
class CameraModel {
 public:
  CameraModel() = default;
  CameraModel(const Mat3& intrinsics, const RigidTransform& world_to_cam, Resolution resolution);

  /// Camera at `position` whose optical axis points along heading `yaw`
  /// (radians from world +x) tilted down by `pitch_down` radians. World z is up.
  static CameraModel looking_at_heading(const Mat3& intrinsics, const Vec3& position, double yaw,
                                        double pitch_down, Resolution resolution);

  static Mat3 intrinsics(double focal, double cx, double cy);

  const Mat3& A() const { return A_; }
  const Mat3& A_inv() const { return A_inv_; }
  const RigidTransform& world_to_cam() const { return world_to_cam_; }
  const RigidTransform& cam_to_world() const { return cam_to_world_; }
  Resolution resolution() const { return resolution_; }
  Vec3 center() const { return cam_to_world_.T; }

  bool in_image(const Vec2& uv) const;

 private:
  Mat3 A_ = Mat3::Identity();
  Mat3 A_inv_ = Mat3::Identity();
  RigidTransform world_to_cam_;
  RigidTransform cam_to_world_;
  Resolution resolution_;
};

inline constexpr double kMinDepth = 1e-6;

/// Pinhole projection of a world point. Throws BehindCamera for depth <= 1e-6.
Vec2 project(const CameraModel& cam, const Vec3& p_world);

/// Same chain without the depth check; returns NaNs for points behind the camera.
Vec2 project_or_nan(const CameraModel& cam, const Vec3& p_world);

/// Planar projective map, defined up to scale.
struct Homography {
  Mat3 H = Mat3::Identity();

  Vec2 map(const Vec2& p) const {
    const Vec3 q = H * p.homogeneous();
    return q.hnormalized();
  }
};

struct PointPair {
  Vec2 plane;  // tag-plane coordinates, meters
  Vec2 pixel;  // image coordinates, pixels
};

/// Direct linear transform with Hartley normalization of both point sets.
/// The solution is the eigenvector of L^T L with the smallest eigenvalue,
/// scaled to unit Frobenius norm with H(2,2) >= 0.
/// Throws DegenerateConfiguration for fewer than four pairs or when the two
/// smallest eigenvalues are within relative 1e-8 of each other.
Homography dlt_homography(std::span<const PointPair> pairs);

/// Hartley similarity: centroid to origin, RMS distance sqrt(2).
Mat3 hartley_normalization(std::span<const Vec2> points);

struct SymmetricEigen {
  Vec9 values;   // ascending
  Mat9 vectors;  // column i pairs with values(i)
};

/// Cyclic Jacobi eigen-decomposition of a symmetric 9x9 matrix.
SymmetricEigen jacobi_eigen(const Mat9& S);

/// Intersection of the viewing ray through `pixel` with the plane z = h.
/// Throws RayParallelToPlane when the 3x3 system is singular and
/// NegativeDepth when the intersection lies behind the camera.
Vec2 backproject_to_height(const CameraModel& cam, const Vec2& pixel, double h);

/// Wraps an angle to (-pi, pi].
double wrap_angle(double a);

}  // namespace toptag
