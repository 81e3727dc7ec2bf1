// SPDX-License-Identifier: Apache-2.0
// Shared helpers for the test suites: fixture loading, temp directories and
// procedurally generated scenes.
#pragma once

#include "apsim/loop.hpp"
#include "apsim/scene.hpp"

#include <filesystem>
#include <random>
#include <stdexcept>
#include <string>

namespace testutil {

inline std::string source_path(const std::string& rel) {
  return std::string(APSIM_SOURCE_DIR) + "/" + rel;
}

inline apsim::SceneSpec load_fixture(const std::string& name) {
  return apsim::load_scene(source_path("scenes/" + name));
}

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("apsim_test_" + std::to_string(std::random_device{}()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

/// Upright-vessel scene built in code (no file dependency): hidden fact
/// observable from straight above within a generous cone.
inline apsim::SceneSpec upright_cup_scene() {
  using namespace apsim;
  SceneSpec s;
  s.id = "upright";
  ObjectSpec cup;
  cup.id = "cup";
  cup.shape = CylinderShape{0.035, 0.05};
  cup.pose.position = Vec3(0.1, 0.5, 0.025);
  cup.surface_attributes = {"white ceramic cup"};
  ObjectSpec box;
  box.id = "cracker_box";
  box.shape = BoxShape{Vec3(0.06, 0.16, 0.21)};
  box.pose.position = Vec3(-0.2, 0.25, 0.105);
  box.surface_attributes = {"red cracker box"};
  s.objects = {cup, box};
  s.hidden.owner_id = "cup";
  s.hidden.fact = "contains a golf ball";
  s.hidden.opening_center = Vec3(0.1, 0.5, 0.05);
  s.hidden.opening_normal = Vec3::UnitZ();
  s.hidden.cone_half_angle_deg = 40.0;
  s.hidden.min_distance = 0.02;
  s.hidden.max_distance = 0.45;
  s.markers = default_marker_ring(s.grid);
  s.home_pose = default_home_pose();
  s.goal_pose.position = Vec3(0.1, 0.5, 0.2);
  s.goal_pose.orientation = top_down_orientation();
  s.query = "What is inside the cup?";
  s.truth_answer = "golf ball";
  validate_scene(s);
  return s;
}

/// Random solvable scene: a vessel tilted about the x axis so that some grid
/// vertex plus one of the {-35, 0, 35} tilts satisfies the visibility
/// predicate; that pose becomes the goal.
inline apsim::SceneSpec random_scene(std::mt19937_64& rng) {
  using namespace apsim;
  std::uniform_int_distribution<int> di(0, 3), dj(0, 3), dk(1, 3);
  std::uniform_real_distribution<double> tilt_deg(0.0, 50.0);
  std::uniform_real_distribution<double> dist(0.08, 0.25);
  std::uniform_real_distribution<double> cone(10.0, 25.0);
  std::uniform_int_distribution<int> flip(0, 1);

  for (int attempt = 0; attempt < 200; ++attempt) {
    SceneSpec s;
    s.id = "random";
    const GridIndex idx{di(rng), dj(rng), dk(rng)};
    const Vec3 vpos = vertex_position(s.grid, idx);
    const double tilt = tilt_deg(rng) * (flip(rng) ? 1.0 : -1.0);
    const double rad = tilt * M_PI / 180.0;
    const Vec3 axis(0.0, std::sin(rad), std::cos(rad));
    const double d = dist(rng);
    const Vec3 opening = vpos - d * axis;
    if (opening.z() < 0.03) continue;

    ObjectSpec vessel;
    vessel.id = "vessel";
    vessel.shape = CylinderShape{0.04, 0.08};
    vessel.pose.position = opening - 0.04 * axis;
    vessel.pose.orientation = Quat(Eigen::AngleAxisd(-rad, Vec3::UnitX()));
    ObjectSpec box;
    box.id = "crate";
    box.shape = BoxShape{Vec3(0.05, 0.05, 0.1)};
    box.pose.position = Vec3(-0.25, 0.15, 0.05);
    s.objects = {vessel, box};

    s.hidden.owner_id = "vessel";
    s.hidden.fact = "contains a marble";
    s.hidden.opening_center = opening;
    s.hidden.opening_normal = axis;
    s.hidden.cone_half_angle_deg = cone(rng);
    s.hidden.min_distance = std::max(0.02, d - 0.07);
    s.hidden.max_distance = d + 0.07;
    s.markers = default_marker_ring(s.grid);
    s.home_pose = default_home_pose();
    s.query = "What is inside the vessel?";
    s.truth_answer = "marble";

    // Goal: the construction vertex with the best-aligned allowed tilt.
    int best_rot = 0;
    double best_angle = 1e9;
    for (int rot : {0, -35, 35}) {
      const Quat q = Quat(Eigen::AngleAxisd(rot * M_PI / 180.0, Vec3::UnitX())) *
                     top_down_orientation();
      const Vec3 optical = q * Vec3::UnitZ();
      const double ang = std::acos(std::clamp(
          optical.dot((opening - vpos).normalized()), -1.0, 1.0));
      if (ang < best_angle) {
        best_angle = ang;
        best_rot = rot;
      }
    }
    s.goal_pose.position = vpos;
    s.goal_pose.orientation =
        Quat(Eigen::AngleAxisd(best_rot * M_PI / 180.0, Vec3::UnitX())) * top_down_orientation();
    try {
      validate_scene(s);
      return s;
    } catch (const SceneError&) {
      continue;
    }
  }
  throw std::runtime_error("random_scene: no solvable draw after 200 attempts");
}

}  // namespace testutil
