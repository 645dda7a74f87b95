#include "toptag/geometry.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "toptag/error.hpp"

namespace toptag {

Mat3 skew(const Vec3& v) {
  Mat3 S;
  S << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return S;
}

Mat3 rot_from_vec(const RotationVector& rv) {
  const Vec3& w = rv.w;
  const double theta = w.norm();
  const Mat3 W = skew(w);
  if (theta < 1e-8) {
    return Mat3::Identity() + W + 0.5 * W * W;
  }
  const double a = std::sin(theta) / theta;
  const double b = (1.0 - std::cos(theta)) / (theta * theta);
  return Mat3::Identity() + a * W + b * W * W;
}

Mat3 nearest_rotation(const Mat3& M) {
  Mat3 X = M;
  for (int it = 0; it < 100; ++it) {
    const double det = X.determinant();
    if (!std::isfinite(det) || std::abs(det) < 1e-300) {
      throw Error(ErrorCode::NotARotation, "matrix is singular");
    }
    const Mat3 next = 0.5 * (X + X.inverse().transpose());
    const double change = (next - X).norm();
    X = next;
    if (change < 1e-15) break;
  }
  if (!(X.determinant() > 0.0)) {
    throw Error(ErrorCode::NotARotation, "polar factor has non-positive determinant");
  }
  return X;
}

RotationVector vec_from_rot(const Mat3& input) {
  const Mat3 R = nearest_rotation(input);
  const double cos_theta = std::clamp((R.trace() - 1.0) * 0.5, -1.0, 1.0);
  // vee(R - R^T) = 2 sin(theta) * axis
  const Vec3 v(R(2, 1) - R(1, 2), R(0, 2) - R(2, 0), R(1, 0) - R(0, 1));
  const double theta = std::atan2(0.5 * v.norm(), cos_theta);

  if (theta < 1e-6) {
    // sin(theta)/theta ~ 1 - theta^2/6
    return RotationVector(0.5 * v * (1.0 + theta * theta / 6.0));
  }
  if (theta < std::numbers::pi - 1e-3) {
    return RotationVector(v * (theta / (2.0 * std::sin(theta))));
  }
  // Near pi the antisymmetric part vanishes; recover the axis from the
  // symmetric part (R + R^T)/2 - cos(theta) I = (1 - cos(theta)) a a^T.
  const Mat3 B = 0.5 * (R + R.transpose()) - cos_theta * Mat3::Identity();
  int k = 0;
  B.diagonal().maxCoeff(&k);
  Vec3 axis = B.col(k) / std::sqrt(std::max(B(k, k), 1e-300));
  axis.normalize();
  if (axis.dot(v) < 0.0) axis = -axis;
  return RotationVector(axis * theta);
}

CameraModel::CameraModel(const Mat3& intrinsics, const RigidTransform& world_to_cam,
                         Resolution resolution)
    : A_(intrinsics),
      A_inv_(intrinsics.inverse()),
      world_to_cam_(world_to_cam),
      cam_to_world_(world_to_cam.inverse()),
      resolution_(resolution) {
  if (std::abs(A_(2, 2) - 1.0) > 1e-12 || A_(1, 0) != 0.0 || A_(2, 0) != 0.0 || A_(2, 1) != 0.0) {
    throw Error(ErrorCode::InvalidArgument, "intrinsic matrix must be upper triangular with A(2,2) = 1");
  }
}

Mat3 CameraModel::intrinsics(double focal, double cx, double cy) {
  Mat3 A;
  A << focal, 0.0, cx,
       0.0, focal, cy,
       0.0, 0.0, 1.0;
  return A;
}

CameraModel CameraModel::looking_at_heading(const Mat3& intrinsics, const Vec3& position, double yaw,
                                            double pitch_down, Resolution resolution) {
  const Vec3 forward(std::cos(yaw) * std::cos(pitch_down), std::sin(yaw) * std::cos(pitch_down),
                     -std::sin(pitch_down));
  const Vec3 right(std::sin(yaw), -std::cos(yaw), 0.0);
  const Vec3 down = forward.cross(right);
  RigidTransform w2c;
  w2c.R.row(0) = right.transpose();
  w2c.R.row(1) = down.transpose();
  w2c.R.row(2) = forward.transpose();
  w2c.T = -w2c.R * position;
  return CameraModel(intrinsics, w2c, resolution);
}

bool CameraModel::in_image(const Vec2& uv) const {
  return uv.x() >= 0.0 && uv.y() >= 0.0 && uv.x() <= resolution_.width - 1.0 &&
         uv.y() <= resolution_.height - 1.0;
}

Vec2 project_or_nan(const CameraModel& cam, const Vec3& p_world) {
  const Vec3 pc = cam.world_to_cam().apply(p_world);
  if (!(pc.z() > kMinDepth)) {
    return Vec2::Constant(std::numeric_limits<double>::quiet_NaN());
  }
  return (cam.A() * pc).hnormalized();
}

Vec2 project(const CameraModel& cam, const Vec3& p_world) {
  const Vec3 pc = cam.world_to_cam().apply(p_world);
  if (!(pc.z() > kMinDepth)) {
    throw Error(ErrorCode::BehindCamera, "point depth is not positive");
  }
  return (cam.A() * pc).hnormalized();
}

Mat3 hartley_normalization(std::span<const Vec2> points) {
  Vec2 centroid = Vec2::Zero();
  for (const auto& p : points) centroid += p;
  centroid /= static_cast<double>(points.size());
  double sq = 0.0;
  for (const auto& p : points) sq += (p - centroid).squaredNorm();
  const double rms = std::sqrt(sq / static_cast<double>(points.size()));
  if (!(rms > 0.0)) {
    throw Error(ErrorCode::DegenerateConfiguration, "coincident points");
  }
  const double s = std::sqrt(2.0) / rms;
  Mat3 T;
  T << s, 0.0, -s * centroid.x(),
       0.0, s, -s * centroid.y(),
       0.0, 0.0, 1.0;
  return T;
}

SymmetricEigen jacobi_eigen(const Mat9& S) {
  constexpr int n = 9;
  Mat9 a = 0.5 * (S + S.transpose());
  Mat9 v = Mat9::Identity();

  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off <= 1e-300 || off <= 1e-32 * a.squaredNorm()) break;

    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (int k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::array<int, n> order{};
  for (int i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](int i, int j) { return a(i, i) < a(j, j); });

  SymmetricEigen out;
  for (int i = 0; i < n; ++i) {
    out.values(i) = a(order[i], order[i]);
    out.vectors.col(i) = v.col(order[i]);
  }
  return out;
}

Homography dlt_homography(std::span<const PointPair> pairs) {
  const std::size_t n = pairs.size();
  if (n < 4) {
    throw Error(ErrorCode::DegenerateConfiguration, "homography needs at least 4 correspondences");
  }
  std::vector<Vec2> plane(n), pixel(n);
  for (std::size_t i = 0; i < n; ++i) {
    plane[i] = pairs[i].plane;
    pixel[i] = pairs[i].pixel;
  }
  const Mat3 Tp = hartley_normalization(plane);
  const Mat3 Ti = hartley_normalization(pixel);

  Mat9 LtL = Mat9::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 x = (Tp * plane[i].homogeneous()).hnormalized();
    const Vec2 u = (Ti * pixel[i].homogeneous()).hnormalized();
    Vec9 r1, r2;
    r1 << x.x(), x.y(), 1.0, 0.0, 0.0, 0.0, -u.x() * x.x(), -u.x() * x.y(), -u.x();
    r2 << 0.0, 0.0, 0.0, x.x(), x.y(), 1.0, -u.y() * x.x(), -u.y() * x.y(), -u.y();
    LtL.noalias() += r1 * r1.transpose();
    LtL.noalias() += r2 * r2.transpose();
  }

  const SymmetricEigen eig = jacobi_eigen(LtL);
  const double scale = std::max(std::abs(eig.values(8)), 1e-300);
  if (eig.values(1) - eig.values(0) <= 1e-8 * scale) {
    throw Error(ErrorCode::DegenerateConfiguration, "homography solution is not unique");
  }

  const Vec9 h = eig.vectors.col(0);
  Mat3 Hn;
  Hn << h(0), h(1), h(2),
        h(3), h(4), h(5),
        h(6), h(7), h(8);
  Mat3 H = Ti.inverse() * Hn * Tp;
  H /= H.norm();
  if (H(2, 2) < 0.0) H = -H;
  return Homography{H};
}

Vec2 backproject_to_height(const CameraModel& cam, const Vec2& pixel, double h) {
  const Mat3& A = cam.A();
  const Mat3& Rwc = cam.world_to_cam().R;
  const Vec3& Twc = cam.world_to_cam().T;
  Mat3 M;
  M.col(0) = A * Rwc.col(0);
  M.col(1) = A * Rwc.col(1);
  M.col(2) = pixel.homogeneous();
  const double det = M.determinant();
  if (!(std::abs(det) > 1e-12)) {
    throw Error(ErrorCode::RayParallelToPlane, "viewing ray is parallel to the height plane");
  }
  const Vec3 rhs = -(A * Rwc.col(2)) * h - A * Twc;
  const Vec3 sol = M.partialPivLu().solve(rhs);
  const double depth = -sol.z();
  if (!(depth > 0.0)) {
    throw Error(ErrorCode::NegativeDepth, "height-plane intersection is behind the camera");
  }
  return sol.head<2>();
}

double wrap_angle(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  a = std::fmod(a, two_pi);
  if (a <= -std::numbers::pi) a += two_pi;
  if (a > std::numbers::pi) a -= two_pi;
  return a;
}

}  // namespace toptag
