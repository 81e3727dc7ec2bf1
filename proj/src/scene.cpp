// SPDX-License-Identifier: Apache-2.0
#include "apsim/scene.hpp"

#include "json_util.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace apsim {

namespace {

using jsonutil::json;
using jsonutil::pose_from;
using jsonutil::pose_to;
using jsonutil::vec3_from;
using jsonutil::vec3_to;

constexpr double kRayEps = 1e-9;
constexpr double kPi = 3.14159265358979323846;

// Slab test against an axis-aligned box of half extents `half` centered at
// the local origin; ray already expressed in the local frame. Returns the
// first boundary crossing in front of the origin (the exit point when the
// origin is inside).
std::optional<double> ray_aabb(const Vec3& o, const Vec3& d, const Vec3& half) {
  double tmin = -std::numeric_limits<double>::infinity();
  double tmax = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    if (std::abs(d[a]) < 1e-15) {
      if (std::abs(o[a]) > half[a]) return std::nullopt;
      continue;
    }
    double t1 = (-half[a] - o[a]) / d[a];
    double t2 = (half[a] - o[a]) / d[a];
    if (t1 > t2) std::swap(t1, t2);
    tmin = std::max(tmin, t1);
    tmax = std::min(tmax, t2);
    if (tmin > tmax) return std::nullopt;
  }
  if (tmax <= kRayEps) return std::nullopt;
  return tmin > kRayEps ? tmin : tmax;
}

std::optional<double> ray_cylinder(const Vec3& o, const Vec3& d, double radius, double half_h) {
  std::optional<double> best;
  auto consider = [&](double t) {
    if (t > kRayEps && (!best || t < *best)) best = t;
  };

  // Lateral surface: (ox + t dx)^2 + (oy + t dy)^2 = r^2 with |z| <= h/2.
  const double a = d.x() * d.x() + d.y() * d.y();
  if (a > 1e-15) {
    const double b = 2.0 * (o.x() * d.x() + o.y() * d.y());
    const double c = o.x() * o.x() + o.y() * o.y() - radius * radius;
    const double disc = b * b - 4.0 * a * c;
    if (disc >= 0.0) {
      const double sq = std::sqrt(disc);
      for (double t : {(-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)}) {
        const double z = o.z() + t * d.z();
        if (std::abs(z) <= half_h) consider(t);
      }
    }
  }

  // Caps at z = +-h/2.
  if (std::abs(d.z()) > 1e-15) {
    for (double zc : {-half_h, half_h}) {
      const double t = (zc - o.z()) / d.z();
      const double x = o.x() + t * d.x();
      const double y = o.y() + t * d.y();
      if (x * x + y * y <= radius * radius) consider(t);
    }
  }
  return best;
}

bool ray_blocked(const SceneSpec& scene, const Vec3& origin, const Vec3& target,
                 const std::string& skip_id) {
  const Vec3 diff = target - origin;
  const double dist = diff.norm();
  if (dist < 1e-12) return false;
  const Vec3 dir = diff / dist;
  for (const auto& obj : scene.objects) {
    if (obj.id == skip_id) continue;
    const auto hit = ray_shape_hit(obj, origin, dir);
    if (hit && *hit < dist - 1e-9) return true;
  }
  return false;
}

}  // namespace

Vec3 shape_centroid(const ObjectSpec& obj) { return obj.pose.position; }

std::optional<double> ray_shape_hit(const ObjectSpec& obj, const Vec3& origin, const Vec3& dir) {
  // Work in the object's local frame.
  const Quat inv = obj.pose.orientation.conjugate();
  const Vec3 o = inv * (origin - obj.pose.position);
  const Vec3 d = inv * dir;
  if (const auto* box = std::get_if<BoxShape>(&obj.shape)) return ray_aabb(o, d, box->dims * 0.5);
  const auto& cyl = std::get<CylinderShape>(obj.shape);
  return ray_cylinder(o, d, cyl.radius, cyl.height * 0.5);
}

bool hidden_cone_ok(const HiddenAttribute& hidden, const Vec3& camera_position) {
  const Vec3 rel = camera_position - hidden.opening_center;
  const double dist = rel.norm();
  if (dist < hidden.min_distance || dist > hidden.max_distance) return false;
  const double cos_angle = hidden.opening_normal.normalized().dot(rel / std::max(dist, 1e-12));
  const double angle_deg = std::acos(std::clamp(cos_angle, -1.0, 1.0)) * 180.0 / kPi;
  return angle_deg <= hidden.cone_half_angle_deg;
}

Pose default_home_pose() {
  Pose p;
  p.position = Vec3(-0.1, 0.3, 0.8);
  p.orientation = top_down_orientation();
  return p;
}

std::vector<MarkerSpec> default_marker_ring(const GridSpec& grid) {
  // 3x3 lattice over the grid footprint on the table plane, facing up.
  std::vector<MarkerSpec> out;
  int id = 0;
  for (int j = 0; j < 3; ++j) {
    for (int i = 0; i < 3; ++i) {
      MarkerSpec m;
      m.id = id++;
      m.pose.position = Vec3(grid.anchor.x() + i * grid.extent.x() / 2.0,
                             grid.anchor.y() + j * grid.extent.y() / 2.0, 0.0);
      m.pose.orientation = Quat::Identity();
      out.push_back(m);
    }
  }
  return out;
}

std::vector<MarkerDetection> detect_markers(const SceneSpec& scene, const Pose& camera_pose,
                                            const CameraIntrinsics& k, double noise_std,
                                            std::mt19937_64* rng) {
  if (noise_std < 0.0) throw std::invalid_argument("detect_markers: noise_std must be >= 0");
  if (noise_std > 0.0 && rng == nullptr)
    throw std::invalid_argument("detect_markers: noisy detection needs a generator");

  const HomogeneousTransform base_to_cam = invert(pose_to_transform(camera_pose));
  std::vector<MarkerDetection> out;
  std::normal_distribution<double> gauss(0.0, noise_std);
  for (const auto& m : scene.markers) {
    const auto px = project(k, camera_pose, m.pose.position);
    if (!px || !pixel_in_bounds(k, px->u, px->v)) continue;
    const Vec3 normal = m.pose.orientation * Vec3::UnitZ();
    const Vec3 view = m.pose.position - camera_pose.position;
    if (normal.dot(view) >= 0.0) continue;  // back side toward the camera
    MarkerDetection det;
    det.id = m.id;
    det.marker_to_camera = compose(base_to_cam, pose_to_transform(m.pose));
    if (noise_std > 0.0)
      det.marker_to_camera.translation += Vec3(gauss(*rng), gauss(*rng), gauss(*rng));
    out.push_back(det);
  }
  return out;
}

ObservationFacts observe(const SceneSpec& scene, const Pose& camera_pose,
                         const CameraIntrinsics& k, double marker_noise_std,
                         std::mt19937_64* rng) {
  validate_intrinsics(k);
  ObservationFacts facts;
  facts.camera_pose = camera_pose;

  for (const auto& obj : scene.objects) {
    const Vec3 centroid = shape_centroid(obj);
    const auto px = project(k, camera_pose, centroid);
    if (!px || !pixel_in_bounds(k, px->u, px->v)) continue;
    if (ray_blocked(scene, camera_pose.position, centroid, obj.id)) continue;
    facts.visible_object_ids.push_back(obj.id);
    for (const auto& fact : obj.surface_attributes)
      facts.visible_surface_facts.emplace_back(obj.id, fact);
  }

  const bool owner_visible =
      std::find(facts.visible_object_ids.begin(), facts.visible_object_ids.end(),
                scene.hidden.owner_id) != facts.visible_object_ids.end();
  facts.hidden_fact_visible =
      owner_visible && hidden_cone_ok(scene.hidden, camera_pose.position) &&
      !ray_blocked(scene, camera_pose.position, scene.hidden.opening_center,
                   scene.hidden.owner_id);

  facts.detected_markers = detect_markers(scene, camera_pose, k, marker_noise_std, rng);
  return facts;
}

void validate_scene(const SceneSpec& scene) {
  validate_grid(scene.grid);
  validate_intrinsics(scene.camera);
  if (scene.query.empty()) throw SceneError("scene query must be non-empty");
  if (scene.truth_answer.empty()) throw SceneError("scene truth answer must be non-empty");
  if (scene.markers.empty()) throw SceneError("scene needs at least one marker");
  if (scene.table.xmax <= scene.table.xmin || scene.table.ymax <= scene.table.ymin)
    throw SceneError("degenerate table bounds");

  bool owner_found = false;
  for (const auto& obj : scene.objects) {
    if (obj.id.empty()) throw SceneError("object with empty id");
    if (const auto* box = std::get_if<BoxShape>(&obj.shape)) {
      if (!(box->dims.x() > 0 && box->dims.y() > 0 && box->dims.z() > 0))
        throw SceneError("box dims must be positive: " + obj.id);
    } else {
      const auto& cyl = std::get<CylinderShape>(obj.shape);
      if (!(cyl.radius > 0 && cyl.height > 0))
        throw SceneError("cylinder dims must be positive: " + obj.id);
    }
    if (!is_unit_quaternion(obj.pose.orientation, 1e-6))
      throw SceneError("object orientation not unit: " + obj.id);
    owner_found = owner_found || obj.id == scene.hidden.owner_id;
  }
  if (!owner_found) throw SceneError("hidden attribute owner not in scene: " + scene.hidden.owner_id);

  if (scene.hidden.fact.empty()) throw SceneError("hidden fact must be non-empty");
  if (std::abs(scene.hidden.opening_normal.norm() - 1.0) > 1e-6)
    throw SceneError("opening normal must be unit length");
  if (!(scene.hidden.cone_half_angle_deg > 0.0 && scene.hidden.cone_half_angle_deg < 90.0))
    throw SceneError("cone half angle must lie in (0, 90) degrees");
  if (!(scene.hidden.min_distance > 0.0 && scene.hidden.min_distance < scene.hidden.max_distance))
    throw SceneError("need 0 < min_distance < max_distance");

  const ObservationFacts at_goal = observe(scene, scene.goal_pose, scene.camera);
  if (!at_goal.hidden_fact_visible)
    throw SceneError("goal pose does not satisfy the hidden-fact visibility predicate");
}

namespace {

Shape shape_from(const json& j) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "box") {
    BoxShape b;
    b.dims = vec3_from(j.at("dims"));
    return b;
  }
  if (type == "cylinder") {
    CylinderShape c;
    c.radius = j.at("radius").get<double>();
    c.height = j.at("height").get<double>();
    return c;
  }
  throw SceneError("unknown shape type: " + type);
}

json shape_to(const Shape& s) {
  if (const auto* box = std::get_if<BoxShape>(&s))
    return json{{"type", "box"}, {"dims", vec3_to(box->dims)}};
  const auto& cyl = std::get<CylinderShape>(s);
  return json{{"type", "cylinder"}, {"radius", cyl.radius}, {"height", cyl.height}};
}

}  // namespace

SceneSpec parse_scene_json(const std::string& text, const std::string& fallback_id) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw SceneError(std::string("scene file is not valid JSON: ") + e.what());
  }
  try {
    SceneSpec s;
    s.id = j.value("id", fallback_id);
    if (j.contains("table")) {
      const auto& t = j.at("table");
      s.table = {t.at("min")[0].get<double>(), t.at("min")[1].get<double>(),
                 t.at("max")[0].get<double>(), t.at("max")[1].get<double>()};
    }
    if (j.contains("grid")) s.grid = jsonutil::grid_from(j.at("grid"));
    for (const auto& jo : j.at("objects")) {
      ObjectSpec o;
      o.id = jo.at("id").get<std::string>();
      o.shape = shape_from(jo.at("shape"));
      o.pose = pose_from(jo.at("pose"));
      if (jo.contains("surface_attributes"))
        for (const auto& f : jo.at("surface_attributes")) o.surface_attributes.push_back(f);
      s.objects.push_back(std::move(o));
    }
    const auto& jh = j.at("hidden");
    s.hidden.owner_id = jh.at("owner").get<std::string>();
    s.hidden.fact = jh.at("fact").get<std::string>();
    s.hidden.opening_center = vec3_from(jh.at("opening_center"));
    s.hidden.opening_normal = vec3_from(jh.at("opening_normal")).normalized();
    s.hidden.cone_half_angle_deg = jh.at("cone_half_angle_deg").get<double>();
    s.hidden.min_distance = jh.at("min_distance").get<double>();
    s.hidden.max_distance = jh.at("max_distance").get<double>();
    if (j.contains("markers")) {
      for (const auto& jm : j.at("markers")) {
        MarkerSpec m;
        m.id = jm.at("id").get<int>();
        m.pose = pose_from(jm.at("pose"));
        s.markers.push_back(m);
      }
    } else {
      s.markers = default_marker_ring(s.grid);
    }
    s.home_pose = j.contains("home_pose") ? pose_from(j.at("home_pose")) : default_home_pose();
    s.goal_pose = pose_from(j.at("goal_pose"));
    s.query = j.at("query").get<std::string>();
    s.truth_answer = j.at("truth_answer").get<std::string>();
    if (j.contains("camera")) {
      const auto& jc = j.at("camera");
      s.camera.fx = jc.value("fx", s.camera.fx);
      s.camera.fy = jc.value("fy", s.camera.fy);
      s.camera.cx = jc.value("cx", s.camera.cx);
      s.camera.cy = jc.value("cy", s.camera.cy);
      s.camera.width = jc.value("width", s.camera.width);
      s.camera.height = jc.value("height", s.camera.height);
    }
    validate_scene(s);
    return s;
  } catch (const SceneError&) {
    throw;
  } catch (const std::exception& e) {
    throw SceneError(std::string("scene file missing or mistyped field: ") + e.what());
  }
}

SceneSpec load_scene(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw SceneError("cannot open scene file: " + path);
  std::stringstream buf;
  buf << f.rdbuf();
  return parse_scene_json(buf.str(), std::filesystem::path(path).stem().string());
}

std::string scene_to_json(const SceneSpec& s) {
  json j;
  j["id"] = s.id;
  j["table"] = {{"min", json::array({s.table.xmin, s.table.ymin})},
                {"max", json::array({s.table.xmax, s.table.ymax})}};
  j["grid"] = jsonutil::grid_to(s.grid);
  j["objects"] = json::array();
  for (const auto& o : s.objects) {
    json jo{{"id", o.id}, {"shape", shape_to(o.shape)}, {"pose", pose_to(o.pose)}};
    jo["surface_attributes"] = o.surface_attributes;
    j["objects"].push_back(jo);
  }
  j["hidden"] = {{"owner", s.hidden.owner_id},
                 {"fact", s.hidden.fact},
                 {"opening_center", vec3_to(s.hidden.opening_center)},
                 {"opening_normal", vec3_to(s.hidden.opening_normal)},
                 {"cone_half_angle_deg", s.hidden.cone_half_angle_deg},
                 {"min_distance", s.hidden.min_distance},
                 {"max_distance", s.hidden.max_distance}};
  j["markers"] = json::array();
  for (const auto& m : s.markers)
    j["markers"].push_back(json{{"id", m.id}, {"pose", pose_to(m.pose)}});
  j["home_pose"] = pose_to(s.home_pose);
  j["goal_pose"] = pose_to(s.goal_pose);
  j["query"] = s.query;
  j["truth_answer"] = s.truth_answer;
  j["camera"] = {{"fx", s.camera.fx}, {"fy", s.camera.fy}, {"cx", s.camera.cx},
                 {"cy", s.camera.cy}, {"width", s.camera.width}, {"height", s.camera.height}};
  return j.dump(2) + "\n";
}

}  // namespace apsim
