// SPDX-License-Identifier: Apache-2.0
#include "apsim/scene.hpp"

#include <algorithm>
#include <cmath>

namespace apsim {

namespace {

constexpr double kNearPlane = 0.01;
constexpr Rgb kBackground{232, 232, 236};
constexpr Rgb kTableColor{205, 180, 144};
constexpr Rgb kGridLineColor{40, 40, 200};
constexpr Rgb kGridLabelColor{20, 20, 110};
constexpr int kCylinderRimSamples = 24;

std::array<double, 2> to_pixel(const CameraIntrinsics& k, const Vec3& cam_point) {
  return {k.fx * cam_point.x() / cam_point.z() + k.cx,
          k.fy * cam_point.y() / cam_point.z() + k.cy};
}

// Sutherland-Hodgman clip of an ordered polygon against z >= near, in the
// camera frame.
std::vector<Vec3> clip_near(const std::vector<Vec3>& poly) {
  std::vector<Vec3> out;
  const size_t n = poly.size();
  for (size_t i = 0; i < n; ++i) {
    const Vec3& a = poly[i];
    const Vec3& b = poly[(i + 1) % n];
    const bool a_in = a.z() >= kNearPlane;
    const bool b_in = b.z() >= kNearPlane;
    if (a_in != b_in) {
      const double t = (kNearPlane - a.z()) / (b.z() - a.z());
      out.push_back(a + t * (b - a));
    }
    if (b_in) out.push_back(b);
  }
  return out;
}

void fill_camera_polygon(RasterImage& img, const CameraIntrinsics& k,
                         const std::vector<Vec3>& poly_cam, Rgb color) {
  const std::vector<Vec3> clipped = clip_near(poly_cam);
  if (clipped.size() < 3) return;
  std::vector<std::array<double, 2>> px;
  px.reserve(clipped.size());
  for (const auto& p : clipped) px.push_back(to_pixel(k, p));
  fill_polygon(img, px, color);
}

std::vector<Vec3> shape_outline_points(const ObjectSpec& obj) {
  std::vector<Vec3> pts;
  if (const auto* box = std::get_if<BoxShape>(&obj.shape)) {
    const Vec3 h = box->dims * 0.5;
    for (int sx : {-1, 1})
      for (int sy : {-1, 1})
        for (int sz : {-1, 1}) pts.emplace_back(sx * h.x(), sy * h.y(), sz * h.z());
  } else {
    const auto& cyl = std::get<CylinderShape>(obj.shape);
    for (int s = 0; s < kCylinderRimSamples; ++s) {
      const double a = 2.0 * M_PI * s / kCylinderRimSamples;
      const double x = cyl.radius * std::cos(a);
      const double y = cyl.radius * std::sin(a);
      pts.emplace_back(x, y, -cyl.height * 0.5);
      pts.emplace_back(x, y, cyl.height * 0.5);
    }
  }
  for (auto& p : pts) p = obj.pose.orientation * p + obj.pose.position;
  return pts;
}

void draw_object(RasterImage& img, const CameraIntrinsics& k, const Pose& camera_pose,
                 const ObjectSpec& obj) {
  std::vector<std::array<double, 2>> px;
  for (const auto& wp : shape_outline_points(obj)) {
    const Vec3 cp = world_to_camera(camera_pose, wp);
    if (cp.z() < kNearPlane) continue;
    px.push_back(to_pixel(k, cp));
  }
  if (px.size() < 3) return;
  // The perspective image of a convex solid is convex, so the silhouette is
  // the hull of the projected outline samples.
  fill_polygon(img, convex_hull(std::move(px)), color_from_id(obj.id));
}

}  // namespace

RasterImage render(const SceneSpec& scene, const Pose& camera_pose, const CameraIntrinsics& k,
                   const OverlayPrimitiveSet& overlay) {
  validate_intrinsics(k);
  RasterImage img(k.width, k.height, kBackground);

  if (scene.table.xmax > scene.table.xmin && scene.table.ymax > scene.table.ymin) {
    std::vector<Vec3> quad = {
        {scene.table.xmin, scene.table.ymin, 0.0},
        {scene.table.xmax, scene.table.ymin, 0.0},
        {scene.table.xmax, scene.table.ymax, 0.0},
        {scene.table.xmin, scene.table.ymax, 0.0},
    };
    for (auto& p : quad) p = world_to_camera(camera_pose, p);
    fill_camera_polygon(img, k, quad, kTableColor);
  }

  // Painter's algorithm over object centroid depths, far to near.
  std::vector<const ObjectSpec*> order;
  order.reserve(scene.objects.size());
  for (const auto& o : scene.objects) order.push_back(&o);
  std::stable_sort(order.begin(), order.end(), [&](const ObjectSpec* a, const ObjectSpec* b) {
    return world_to_camera(camera_pose, shape_centroid(*a)).z() >
           world_to_camera(camera_pose, shape_centroid(*b)).z();
  });
  for (const ObjectSpec* obj : order) draw_object(img, k, camera_pose, *obj);

  for (const auto& s : overlay.segments) draw_line(img, s.x0, s.y0, s.x1, s.y1, kGridLineColor);
  for (const auto& l : overlay.labels) {
    const int x = static_cast<int>(std::lround(l.x));
    const int y = static_cast<int>(std::lround(l.y));
    img.set(x, y, kGridLabelColor);
    draw_text(img, x + 2, y - 9, l.text, kGridLabelColor);
  }
  return img;
}

}  // namespace apsim
