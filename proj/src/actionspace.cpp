// SPDX-License-Identifier: Apache-2.0
#include "apsim/actionspace.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace apsim {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

std::string to_string(ActionSpaceKind kind) {
  switch (kind) {
    case ActionSpaceKind::NAP: return "NAP";
    case ActionSpaceKind::TwoDNA: return "2DNA";
    case ActionSpaceKind::TwoDA: return "2DA";
    case ActionSpaceKind::ThreeDD: return "3DD";
    case ActionSpaceKind::ThreeDC: return "3DC";
    case ActionSpaceKind::ThreeDx: return "3Dx";
    case ActionSpaceKind::ThreeDxN: return "3DxN";
    case ActionSpaceKind::ThreeDxy: return "3Dxy";
  }
  return "?";
}

std::optional<ActionSpaceKind> parse_action_space(const std::string& name) {
  for (ActionSpaceKind k : all_action_spaces())
    if (to_string(k) == name) return k;
  return std::nullopt;
}

const std::vector<ActionSpaceKind>& all_action_spaces() {
  static const std::vector<ActionSpaceKind> kAll = {
      ActionSpaceKind::NAP,     ActionSpaceKind::TwoDNA,  ActionSpaceKind::TwoDA,
      ActionSpaceKind::ThreeDD, ActionSpaceKind::ThreeDC, ActionSpaceKind::ThreeDx,
      ActionSpaceKind::ThreeDxN, ActionSpaceKind::ThreeDxy};
  return kAll;
}

bool allowed_rotation_value(int deg) {
  return deg == 0 || deg == kRotationStepDeg || deg == -kRotationStepDeg;
}

ActionSpaceRules rules_for(ActionSpaceKind kind, const GridSpec& base_grid) {
  ActionSpaceRules r;
  r.kind = kind;
  r.grid = base_grid;
  r.grid.dimensionality = GridDimensionality::ThreeD;
  r.grid.annotated = true;
  switch (kind) {
    case ActionSpaceKind::NAP:
      r.allows_movement = false;
      r.annotated = false;
      break;
    case ActionSpaceKind::TwoDNA:
      r.grid.dimensionality = GridDimensionality::TwoD;
      r.annotated = false;
      break;
    case ActionSpaceKind::TwoDA:
      r.grid.dimensionality = GridDimensionality::TwoD;
      break;
    case ActionSpaceKind::ThreeDD:
      break;
    case ActionSpaceKind::ThreeDC:
      r.allows_continuous = true;
      break;
    case ActionSpaceKind::ThreeDx:
      r.allows_continuous = true;
      r.allows_rot_x = true;
      break;
    case ActionSpaceKind::ThreeDxN:
      r.allows_continuous = true;
      r.allows_rot_x = true;
      r.include_home_obs = false;
      break;
    case ActionSpaceKind::ThreeDxy:
      r.allows_continuous = true;
      r.allows_rot_x = true;
      r.allows_rot_y = true;
      break;
  }
  r.grid.annotated = r.annotated;
  return r;
}

ActionSpaceRules rules_for(ActionSpaceKind kind) { return rules_for(kind, GridSpec{}); }

std::string to_string(RejectReason reason) {
  switch (reason) {
    case RejectReason::OutOfBounds: return "OutOfBounds";
    case RejectReason::WrongTargetType: return "WrongTargetType";
    case RejectReason::RotationNotAllowed: return "RotationNotAllowed";
    case RejectReason::Revisit: return "Revisit";
  }
  return "?";
}

Vec3 target_position(const ActionSpaceRules& rules, const Action& a) {
  if (const auto* idx = std::get_if<GridIndex>(&a.target))
    return vertex_position(rules.grid, *idx);
  return std::get<Vec3>(a.target);
}

GridIndex snapped_vertex(const ActionSpaceRules& rules, const Action& a) {
  if (const auto* idx = std::get_if<GridIndex>(&a.target)) return *idx;
  return nearest_vertex(rules.grid, std::get<Vec3>(a.target)).index;
}

std::optional<Rejection> validate(const ActionSpaceRules& rules, const Action& a,
                                  const std::set<GridIndex>& visited) {
  // Bounds first, so out-of-cube targets report OutOfBounds regardless of
  // their target kind.
  if (const auto* point = std::get_if<Vec3>(&a.target)) {
    if (!is_finite(*point) || !point_in_cube(rules.grid, *point))
      return Rejection{RejectReason::OutOfBounds, "target point lies outside the workspace cube"};
  } else {
    const GridIndex idx = std::get<GridIndex>(a.target);
    if (!index_in_grid(rules.grid, idx))
      return Rejection{RejectReason::OutOfBounds, "vertex index outside the grid"};
  }

  if (!rules.allows_movement)
    return Rejection{RejectReason::WrongTargetType, "this action space admits no movement"};
  const bool is_continuous = std::holds_alternative<Vec3>(a.target);
  if (is_continuous != rules.allows_continuous)
    return Rejection{RejectReason::WrongTargetType,
                     rules.allows_continuous ? "expected a continuous target point"
                                             : "expected a grid vertex target"};

  if (!allowed_rotation_value(a.rot_x_deg) || !allowed_rotation_value(a.rot_y_deg))
    return Rejection{RejectReason::RotationNotAllowed, "rotation must be -35, 0 or +35 degrees"};
  if (a.rot_x_deg != 0 && !rules.allows_rot_x)
    return Rejection{RejectReason::RotationNotAllowed, "x rotation not allowed in this space"};
  if (a.rot_y_deg != 0 && !rules.allows_rot_y)
    return Rejection{RejectReason::RotationNotAllowed, "y rotation not allowed in this space"};

  if (visited.count(snapped_vertex(rules, a)))
    return Rejection{RejectReason::Revisit, "target snaps to an already visited vertex"};
  return std::nullopt;
}

Pose action_to_pose(const ActionSpaceRules& rules, const Action& a) {
  Pose pose;
  pose.position = target_position(rules, a);
  const Quat rx(Eigen::AngleAxisd(a.rot_x_deg * kPi / 180.0, Vec3::UnitX()));
  const Quat ry(Eigen::AngleAxisd(a.rot_y_deg * kPi / 180.0, Vec3::UnitY()));
  pose.orientation = (ry * rx * top_down_orientation()).normalized();
  return pose;
}

std::string describe_rules(const ActionSpaceRules& rules) {
  std::ostringstream out;
  out << "Action space " << to_string(rules.kind) << ": ";
  if (!rules.allows_movement) {
    out << "no camera movement; a single observation from the home pose.";
    return out.str();
  }
  const Vec3 hi = rules.grid.anchor + rules.grid.extent;
  if (rules.allows_continuous)
    out << "move to any point inside the workspace cube";
  else
    out << "move to " << (rules.grid.dimensionality == GridDimensionality::TwoD ? "2D" : "3D")
        << " grid vertices";
  out << " x in [" << rules.grid.anchor.x() << ", " << hi.x() << "], y in ["
      << rules.grid.anchor.y() << ", " << hi.y() << "], z in [" << rules.grid.anchor.z() << ", "
      << hi.z() << "] meters.";
  if (rules.allows_rot_x)
    out << " Camera may tilt " << kRotationStepDeg << " degrees about the base x axis.";
  if (rules.allows_rot_y)
    out << " Camera may tilt " << kRotationStepDeg << " degrees about the base y axis.";
  if (rules.annotated)
    out << " Grid vertices are labeled \"(x; y)\" with base-frame meters.";
  out << " Previously visited vertices may not be revisited.";
  return out.str();
}

}  // namespace apsim
