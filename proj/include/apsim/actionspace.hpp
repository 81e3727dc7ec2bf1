// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "apsim/grid.hpp"

#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

namespace apsim {

/// The eight viewpoint-selection regimes. Wire names: "NAP", "2DNA", "2DA",
/// "3DD", "3DC", "3Dx", "3DxN", "3Dxy".
enum class ActionSpaceKind { NAP, TwoDNA, TwoDA, ThreeDD, ThreeDC, ThreeDx, ThreeDxN, ThreeDxy };

std::string to_string(ActionSpaceKind kind);
std::optional<ActionSpaceKind> parse_action_space(const std::string& name);
const std::vector<ActionSpaceKind>& all_action_spaces();

/// Rotations come in one step size on either side of level.
constexpr int kRotationStepDeg = 35;
bool allowed_rotation_value(int deg);  // exactly -35, 0 or +35

/// A camera move: either a lattice vertex or a continuous point inside the
/// cube, plus absolute tilt commands about the base x and y axes.
struct Action {
  std::variant<GridIndex, Vec3> target;
  int rot_x_deg = 0;
  int rot_y_deg = 0;
};

/// Capabilities of one action space; a pure function of its kind (the grid
/// is the scene grid re-dimensioned for the space).
struct ActionSpaceRules {
  ActionSpaceKind kind = ActionSpaceKind::ThreeDx;
  GridSpec grid;
  bool allows_movement = true;
  bool allows_continuous = false;
  bool allows_rot_x = false;
  bool allows_rot_y = false;
  bool annotated = true;
  bool include_home_obs = true;
};

ActionSpaceRules rules_for(ActionSpaceKind kind, const GridSpec& base_grid);
ActionSpaceRules rules_for(ActionSpaceKind kind);

enum class RejectReason { OutOfBounds, WrongTargetType, RotationNotAllowed, Revisit };
std::string to_string(RejectReason reason);

struct Rejection {
  RejectReason reason = RejectReason::WrongTargetType;
  std::string detail;
};

/// Base-frame position the action moves to.
Vec3 target_position(const ActionSpaceRules& rules, const Action& a);

/// Lattice vertex the action occupies for revisit bookkeeping; continuous
/// targets snap to their nearest vertex.
GridIndex snapped_vertex(const ActionSpaceRules& rules, const Action& a);

/// Checks run in the order bounds, target type, rotations, revisit, and the
/// first failure wins. nullopt means the action is valid.
std::optional<Rejection> validate(const ActionSpaceRules& rules, const Action& a,
                                  const std::set<GridIndex>& visited);

/// Pose for a validated action: target position with the top-down reference
/// orientation tilted by the absolute rot_x then rot_y commands (base axes;
/// never cumulative across steps).
Pose action_to_pose(const ActionSpaceRules& rules, const Action& a);

/// One-paragraph description of the rules, used in prompts and reports.
std::string describe_rules(const ActionSpaceRules& rules);

}  // namespace apsim
