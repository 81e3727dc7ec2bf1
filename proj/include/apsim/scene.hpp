// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "apsim/geom.hpp"
#include "apsim/grid.hpp"
#include "apsim/image.hpp"

#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace apsim {

struct SceneError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Box with full extents `dims`, centered on the owning pose.
struct BoxShape {
  Vec3 dims = Vec3::Ones();
};

/// Cylinder with its axis along the local +Z of the owning pose, centered.
struct CylinderShape {
  double radius = 0.05;
  double height = 0.1;
};

using Shape = std::variant<BoxShape, CylinderShape>;

struct ObjectSpec {
  std::string id;
  Shape shape;
  Pose pose;
  std::vector<std::string> surface_attributes;  // readable whenever the object is visible
};

/// Observability model for a fact that is only visible when looking into an
/// object's opening: the camera must sit inside the cone around
/// opening_normal, within the distance band, with a clear line of sight.
struct HiddenAttribute {
  std::string owner_id;
  std::string fact;
  Vec3 opening_center = Vec3::Zero();
  Vec3 opening_normal = Vec3::UnitZ();
  double cone_half_angle_deg = 40.0;
  double min_distance = 0.02;
  double max_distance = 0.45;
};

/// Axis-aligned table rectangle on the z = 0 plane.
struct TableBounds {
  double xmin = -0.4, ymin = 0.0, xmax = 0.4, ymax = 0.8;
};

struct MarkerSpec {
  int id = 0;
  Pose pose;  // marker +Z is its facing normal
};

struct SceneSpec {
  std::string id = "scene";
  TableBounds table;
  std::vector<ObjectSpec> objects;
  HiddenAttribute hidden;
  std::vector<MarkerSpec> markers;  // defaulted to a 3x3 ring when absent
  GridSpec grid;
  Pose home_pose;
  Pose goal_pose;
  std::string query;
  std::string truth_answer;
  CameraIntrinsics camera;
};

struct MarkerDetection {
  int id = 0;
  HomogeneousTransform marker_to_camera;
};

struct ObservationFacts {
  Pose camera_pose;
  std::vector<std::string> visible_object_ids;
  std::vector<std::pair<std::string, std::string>> visible_surface_facts;  // (object id, fact)
  bool hidden_fact_visible = false;
  std::vector<MarkerDetection> detected_markers;
};

Vec3 shape_centroid(const ObjectSpec& obj);

/// First positive ray parameter at which the ray hits the object, if any.
/// The ray direction must be unit length.
std::optional<double> ray_shape_hit(const ObjectSpec& obj, const Vec3& origin, const Vec3& dir);

/// Cone + distance-band part of the hidden-fact predicate (no occlusion or
/// field-of-view terms).
bool hidden_cone_ok(const HiddenAttribute& hidden, const Vec3& camera_position);

Pose default_home_pose();
std::vector<MarkerSpec> default_marker_ring(const GridSpec& grid);

/// Symbolic observation: an object is visible iff its centroid projects
/// inside the image and no other object blocks the sight line. The hidden
/// fact additionally requires the cone, band and an unoccluded ray to the
/// opening. Markers are filled via detect_markers; rng may be null when
/// marker_noise_std is zero.
ObservationFacts observe(const SceneSpec& scene, const Pose& camera_pose,
                         const CameraIntrinsics& k, double marker_noise_std = 0.0,
                         std::mt19937_64* rng = nullptr);

/// Marker-to-camera transforms for markers whose center projects inside the
/// image and whose face normal points toward the camera. Translation is
/// perturbed per component by N(0, noise_std) draws from rng.
std::vector<MarkerDetection> detect_markers(const SceneSpec& scene, const Pose& camera_pose,
                                            const CameraIntrinsics& k, double noise_std,
                                            std::mt19937_64* rng = nullptr);

/// Flat-shaded silhouette rendering: background, table quad, objects sorted
/// back-to-front by centroid depth, then the grid overlay on top. Identical
/// inputs produce identical pixels.
RasterImage render(const SceneSpec& scene, const Pose& camera_pose, const CameraIntrinsics& k,
                   const OverlayPrimitiveSet& overlay);

/// Throws SceneError when invariants fail, including when the goal pose does
/// not satisfy the hidden-fact visibility predicate.
void validate_scene(const SceneSpec& scene);

SceneSpec load_scene(const std::string& path);
SceneSpec parse_scene_json(const std::string& text, const std::string& fallback_id = "scene");
std::string scene_to_json(const SceneSpec& scene);

}  // namespace apsim
