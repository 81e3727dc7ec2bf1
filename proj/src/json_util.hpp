// SPDX-License-Identifier: Apache-2.0
// Shared JSON encodings for the file formats: vectors as [x,y,z], quaternions
// as [w,x,y,z], poses as {position, orientation}.
#pragma once

#include "apsim/actionspace.hpp"
#include "apsim/agent.hpp"

#include <nlohmann/json.hpp>

#include <stdexcept>

namespace apsim::jsonutil {

using nlohmann::json;

inline json vec3_to(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

inline Vec3 vec3_from(const json& j) {
  if (!j.is_array() || j.size() != 3) throw std::runtime_error("expected a 3-element array");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

inline json quat_to(const Quat& q) { return json::array({q.w(), q.x(), q.y(), q.z()}); }

inline Quat quat_from(const json& j) {
  if (!j.is_array() || j.size() != 4)
    throw std::runtime_error("expected a 4-element quaternion [w,x,y,z]");
  Quat q(j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>());
  if (q.norm() < 1e-9) throw std::runtime_error("zero quaternion");
  return q.normalized();
}

inline json pose_to(const Pose& p) {
  return json{{"position", vec3_to(p.position)}, {"orientation", quat_to(p.orientation)}};
}

inline Pose pose_from(const json& j) {
  Pose p;
  p.position = vec3_from(j.at("position"));
  if (j.contains("orientation")) p.orientation = quat_from(j.at("orientation"));
  return p;
}

inline json grid_to(const GridSpec& g) {
  return json{{"anchor", vec3_to(g.anchor)},
              {"extent", vec3_to(g.extent)},
              {"spacing_xy", g.spacing_xy},
              {"spacing_z", g.spacing_z},
              {"dimensionality", g.dimensionality == GridDimensionality::TwoD ? "2d" : "3d"},
              {"annotated", g.annotated}};
}

inline GridSpec grid_from(const json& j) {
  GridSpec g;
  if (j.contains("anchor")) g.anchor = vec3_from(j.at("anchor"));
  if (j.contains("extent")) g.extent = vec3_from(j.at("extent"));
  if (j.contains("spacing_xy")) g.spacing_xy = j.at("spacing_xy").get<double>();
  if (j.contains("spacing_z")) g.spacing_z = j.at("spacing_z").get<double>();
  if (j.contains("dimensionality")) {
    const std::string d = j.at("dimensionality").get<std::string>();
    if (d == "2d") g.dimensionality = GridDimensionality::TwoD;
    else if (d == "3d") g.dimensionality = GridDimensionality::ThreeD;
    else throw std::runtime_error("grid dimensionality must be \"2d\" or \"3d\"");
  }
  if (j.contains("annotated")) g.annotated = j.at("annotated").get<bool>();
  return g;
}

inline json action_to(const Action& a) {
  json j;
  if (const auto* idx = std::get_if<GridIndex>(&a.target))
    j["vertex"] = json::array({idx->i, idx->j, idx->k});
  else
    j["point"] = vec3_to(std::get<Vec3>(a.target));
  j["rot_x"] = a.rot_x_deg;
  j["rot_y"] = a.rot_y_deg;
  return j;
}

inline Action action_from(const json& j) {
  Action a;
  if (j.contains("vertex")) {
    const auto& v = j.at("vertex");
    a.target = GridIndex{v[0].get<int>(), v[1].get<int>(), v[2].get<int>()};
  } else {
    a.target = vec3_from(j.at("point"));
  }
  a.rot_x_deg = j.value("rot_x", 0);
  a.rot_y_deg = j.value("rot_y", 0);
  return a;
}

inline json answer_to(const Answer& a) {
  return json{{"conclusive", a.conclusive}, {"text", a.text}, {"confidence", a.confidence}};
}

inline Answer answer_from(const json& j) {
  Answer a;
  a.conclusive = j.at("conclusive").get<bool>();
  a.text = j.value("text", "");
  a.confidence = j.at("confidence").get<double>();
  return a;
}

}  // namespace apsim::jsonutil
