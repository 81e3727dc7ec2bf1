// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <optional>

namespace apsim {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Quat = Eigen::Quaterniond;  // unit quaternion; q and -q are the same rotation

constexpr double kOrthonormalTol = 1e-9;
constexpr double kUnitQuatTol = 1e-9;

/// Rigid-body pose in the base frame: position in meters plus unit orientation.
struct Pose {
  Vec3 position = Vec3::Zero();
  Quat orientation = Quat::Identity();
};

/// Rigid transform p' = rotation * p + translation.
/// rotation must stay orthonormal with determinant +1 (within 1e-9).
struct HomogeneousTransform {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();
};

/// Pinhole camera parameters. The camera frame has +Z along the optical
/// axis (out of the lens), +X right and +Y down in the image.
struct CameraIntrinsics {
  double fx = 290.0;
  double fy = 290.0;
  double cx = 320.0;
  double cy = 240.0;
  int width = 640;
  int height = 480;
};

/// Image-plane point in pixels plus the camera-frame depth it came from.
struct PixelCoord {
  double u = 0.0;
  double v = 0.0;
  double depth = 0.0;
};

bool is_rotation_matrix(const Mat3& m, double tol = kOrthonormalTol);
bool is_unit_quaternion(const Quat& q, double tol = kUnitQuatTol);
bool is_finite(const Vec3& v);

/// Throws std::invalid_argument when fx/fy are not positive or the
/// principal point lies outside the image.
void validate_intrinsics(const CameraIntrinsics& k);

/// Result applies b first, then a.
HomogeneousTransform compose(const HomogeneousTransform& a, const HomogeneousTransform& b);
HomogeneousTransform invert(const HomogeneousTransform& t);
Vec3 transform_point(const HomogeneousTransform& t, const Vec3& p);

/// Transform mapping points of the pose's local frame into the base frame.
HomogeneousTransform pose_to_transform(const Pose& pose);
Pose transform_to_pose(const HomogeneousTransform& t);

/// Chains a marker-frame point into the base frame through the camera:
/// composes camera-to-base with marker-to-camera, then transforms the point.
Vec3 marker_vertex_to_base(const HomogeneousTransform& t_cam_to_base,
                           const HomogeneousTransform& t_marker_to_cam,
                           const Vec3& v_marker);

/// Point expressed in the camera frame of the given pose.
Vec3 world_to_camera(const Pose& camera_pose, const Vec3& world_point);

/// Pinhole projection u = fx*Xc/Zc + cx, v = fy*Yc/Zc + cy.
/// Returns nullopt when the point is behind the camera (Zc <= 1e-6).
/// The returned pixel may lie outside the image bounds; callers clip.
std::optional<PixelCoord> project(const CameraIntrinsics& k, const Pose& camera_pose,
                                  const Vec3& world_point);

/// Camera-frame point for a pixel at the given positive depth.
Vec3 unproject(const CameraIntrinsics& k, double u, double v, double depth);

bool pixel_in_bounds(const CameraIntrinsics& k, double u, double v);

/// Geodesic angle 2*acos(|a.b|) in degrees, range [0, 180].
/// Symmetric and invariant under the quaternion double cover.
double quat_angle_deg(const Quat& a, const Quat& b);

/// Orientation with the optical axis pointing along -Z of the base frame
/// and image +X aligned with base +X (straight-down view).
Quat top_down_orientation();

/// Pose at eye with the optical axis through target; image-down follows
/// world -Z. Falls back to the top-down orientation when the view direction
/// is (anti)parallel to the world vertical.
Pose look_at_pose(const Vec3& eye, const Vec3& target);

}  // namespace apsim
