// SPDX-License-Identifier: Apache-2.0
#include "apsim/geom.hpp"

#include <cmath>
#include <stdexcept>

namespace apsim {

namespace {
constexpr double kBehindCameraEps = 1e-6;
constexpr double kPi = 3.14159265358979323846;
}  // namespace

bool is_rotation_matrix(const Mat3& m, double tol) {
  const Mat3 should_be_identity = m * m.transpose();
  return (should_be_identity - Mat3::Identity()).cwiseAbs().maxCoeff() <= tol &&
         std::abs(m.determinant() - 1.0) <= tol;
}

bool is_unit_quaternion(const Quat& q, double tol) {
  return std::abs(q.norm() - 1.0) <= tol;
}

bool is_finite(const Vec3& v) { return v.allFinite(); }

void validate_intrinsics(const CameraIntrinsics& k) {
  if (!(k.fx > 0.0) || !(k.fy > 0.0))
    throw std::invalid_argument("intrinsics: fx and fy must be positive");
  if (k.width <= 0 || k.height <= 0)
    throw std::invalid_argument("intrinsics: image size must be positive");
  if (k.cx < 0.0 || k.cx >= k.width || k.cy < 0.0 || k.cy >= k.height)
    throw std::invalid_argument("intrinsics: principal point outside image");
}

HomogeneousTransform compose(const HomogeneousTransform& a, const HomogeneousTransform& b) {
  HomogeneousTransform out;
  out.rotation = a.rotation * b.rotation;
  out.translation = a.rotation * b.translation + a.translation;
  return out;
}

HomogeneousTransform invert(const HomogeneousTransform& t) {
  HomogeneousTransform out;
  out.rotation = t.rotation.transpose();
  out.translation = -(out.rotation * t.translation);
  return out;
}

Vec3 transform_point(const HomogeneousTransform& t, const Vec3& p) {
  return t.rotation * p + t.translation;
}

HomogeneousTransform pose_to_transform(const Pose& pose) {
  HomogeneousTransform out;
  out.rotation = pose.orientation.toRotationMatrix();
  out.translation = pose.position;
  return out;
}

Pose transform_to_pose(const HomogeneousTransform& t) {
  Pose out;
  out.orientation = Quat(t.rotation).normalized();
  out.position = t.translation;
  return out;
}

Vec3 marker_vertex_to_base(const HomogeneousTransform& t_cam_to_base,
                           const HomogeneousTransform& t_marker_to_cam,
                           const Vec3& v_marker) {
  return transform_point(compose(t_cam_to_base, t_marker_to_cam), v_marker);
}

Vec3 world_to_camera(const Pose& camera_pose, const Vec3& world_point) {
  return camera_pose.orientation.conjugate() * (world_point - camera_pose.position);
}

std::optional<PixelCoord> project(const CameraIntrinsics& k, const Pose& camera_pose,
                                  const Vec3& world_point) {
  const Vec3 pc = world_to_camera(camera_pose, world_point);
  if (pc.z() <= kBehindCameraEps) return std::nullopt;
  PixelCoord px;
  px.u = k.fx * pc.x() / pc.z() + k.cx;
  px.v = k.fy * pc.y() / pc.z() + k.cy;
  px.depth = pc.z();
  return px;
}

Vec3 unproject(const CameraIntrinsics& k, double u, double v, double depth) {
  return {(u - k.cx) * depth / k.fx, (v - k.cy) * depth / k.fy, depth};
}

bool pixel_in_bounds(const CameraIntrinsics& k, double u, double v) {
  return u >= 0.0 && u < k.width && v >= 0.0 && v < k.height;
}

double quat_angle_deg(const Quat& a, const Quat& b) {
  const double d = std::min(1.0, std::abs(a.dot(b)));
  return 2.0 * std::acos(d) * 180.0 / kPi;
}

Quat top_down_orientation() {
  // 180 degrees about base +X maps camera +Z onto base -Z and keeps
  // image +X aligned with base +X.
  return Quat(0.0, 1.0, 0.0, 0.0);
}

Pose look_at_pose(const Vec3& eye, const Vec3& target) {
  Pose pose;
  pose.position = eye;
  const Vec3 dir = target - eye;
  const double len = dir.norm();
  if (len < 1e-12) {
    pose.orientation = top_down_orientation();
    return pose;
  }
  const Vec3 z = dir / len;
  const Vec3 up(0.0, 0.0, 1.0);
  Vec3 x = z.cross(up);
  const double xn = x.norm();
  if (xn < 1e-9) {
    // Looking straight up or down; pick the straight-down convention and
    // flip it when the view points up.
    pose.orientation = z.z() < 0.0 ? top_down_orientation()
                                   : Quat::Identity();
    return pose;
  }
  x /= xn;
  const Vec3 y = z.cross(x);
  Mat3 r;
  r.col(0) = x;
  r.col(1) = y;
  r.col(2) = z;
  pose.orientation = Quat(r).normalized();
  return pose;
}

}  // namespace apsim
