// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "apsim/actionspace.hpp"

#include <random>

using namespace apsim;

TEST_CASE("rules_for: the eight-space capability table") {
  const auto nap = rules_for(ActionSpaceKind::NAP);
  CHECK_FALSE(nap.allows_movement);
  CHECK_FALSE(nap.allows_continuous);
  CHECK_FALSE(nap.allows_rot_x);
  CHECK_FALSE(nap.allows_rot_y);
  CHECK_FALSE(nap.annotated);
  CHECK(nap.include_home_obs);

  const auto twodna = rules_for(ActionSpaceKind::TwoDNA);
  CHECK(twodna.grid.dimensionality == GridDimensionality::TwoD);
  CHECK_FALSE(twodna.annotated);
  CHECK_FALSE(twodna.allows_continuous);

  const auto twoda = rules_for(ActionSpaceKind::TwoDA);
  CHECK(twoda.grid.dimensionality == GridDimensionality::TwoD);
  CHECK(twoda.annotated);

  const auto threedd = rules_for(ActionSpaceKind::ThreeDD);
  CHECK(threedd.grid.dimensionality == GridDimensionality::ThreeD);
  CHECK_FALSE(threedd.allows_continuous);

  const auto threedc = rules_for(ActionSpaceKind::ThreeDC);
  CHECK(threedc.allows_continuous);
  CHECK_FALSE(threedc.allows_rot_x);

  const auto threedx = rules_for(ActionSpaceKind::ThreeDx);
  CHECK(threedx.allows_continuous);
  CHECK(threedx.allows_rot_x);
  CHECK_FALSE(threedx.allows_rot_y);
  CHECK(threedx.include_home_obs);

  const auto threedxn = rules_for(ActionSpaceKind::ThreeDxN);
  CHECK(threedxn.allows_rot_x);
  CHECK_FALSE(threedxn.include_home_obs);

  const auto threedxy = rules_for(ActionSpaceKind::ThreeDxy);
  CHECK(threedxy.allows_rot_x);
  CHECK(threedxy.allows_rot_y);
}

TEST_CASE("action space names round trip") {
  for (ActionSpaceKind k : all_action_spaces()) {
    const auto parsed = parse_action_space(to_string(k));
    REQUIRE(parsed.has_value());
    CHECK(*parsed == k);
  }
  CHECK_FALSE(parse_action_space("4D").has_value());
  CHECK(to_string(ActionSpaceKind::TwoDNA) == "2DNA");
  CHECK(to_string(ActionSpaceKind::ThreeDxN) == "3DxN");
}

TEST_CASE("validate: example decisions") {
  const std::set<GridIndex> none;

  SUBCASE("3DC accepts an in-cube continuous point") {
    Action a;
    a.target = Vec3(0.0, 0.4, 0.2);
    CHECK_FALSE(validate(rules_for(ActionSpaceKind::ThreeDC), a, none).has_value());
  }

  SUBCASE("out-of-cube points report OutOfBounds even in discrete spaces") {
    Action a;
    a.target = Vec3(0.0, 0.4, 0.9);
    const auto rej = validate(rules_for(ActionSpaceKind::ThreeDD), a, none);
    REQUIRE(rej.has_value());
    CHECK(rej->reason == RejectReason::OutOfBounds);
  }

  SUBCASE("revisiting a vertex is rejected") {
    Action a;
    a.target = GridIndex{1, 2, 1};
    const std::set<GridIndex> visited = {GridIndex{1, 2, 1}};
    const auto rej = validate(rules_for(ActionSpaceKind::TwoDA), a, visited);
    REQUIRE(rej.has_value());
    CHECK(rej->reason == RejectReason::Revisit);
  }

  SUBCASE("continuous targets snapping to a visited vertex are revisits") {
    Action a;
    a.target = Vec3(0.11, 0.52, 0.12);  // snaps to (0.1, 0.5, 0.1)
    const std::set<GridIndex> visited = {GridIndex{2, 2, 1}};
    const auto rej = validate(rules_for(ActionSpaceKind::ThreeDx), a, visited);
    REQUIRE(rej.has_value());
    CHECK(rej->reason == RejectReason::Revisit);
  }

  SUBCASE("target kind must match the space") {
    Action vertex_in_continuous;
    vertex_in_continuous.target = GridIndex{0, 0, 1};
    auto rej = validate(rules_for(ActionSpaceKind::ThreeDC), vertex_in_continuous, none);
    REQUIRE(rej.has_value());
    CHECK(rej->reason == RejectReason::WrongTargetType);

    Action point_in_discrete;
    point_in_discrete.target = Vec3(0.1, 0.5, 0.1);
    rej = validate(rules_for(ActionSpaceKind::ThreeDD), point_in_discrete, none);
    REQUIRE(rej.has_value());
    CHECK(rej->reason == RejectReason::WrongTargetType);
  }

  SUBCASE("NAP admits no actions") {
    Action a;
    a.target = GridIndex{0, 0, 1};
    CHECK(validate(rules_for(ActionSpaceKind::NAP), a, none).has_value());
  }

  SUBCASE("rotations must come from the allowed set and axes") {
    Action a;
    a.target = Vec3(0.0, 0.4, 0.2);
    a.rot_x_deg = 35;
    CHECK_FALSE(validate(rules_for(ActionSpaceKind::ThreeDx), a, none).has_value());

    auto rej = validate(rules_for(ActionSpaceKind::ThreeDC), a, none);
    REQUIRE(rej.has_value());
    CHECK(rej->reason == RejectReason::RotationNotAllowed);

    a.rot_x_deg = 20;
    rej = validate(rules_for(ActionSpaceKind::ThreeDx), a, none);
    REQUIRE(rej.has_value());
    CHECK(rej->reason == RejectReason::RotationNotAllowed);

    a.rot_x_deg = 0;
    a.rot_y_deg = -35;
    rej = validate(rules_for(ActionSpaceKind::ThreeDx), a, none);
    REQUIRE(rej.has_value());
    CHECK(rej->reason == RejectReason::RotationNotAllowed);
    CHECK_FALSE(validate(rules_for(ActionSpaceKind::ThreeDxy), a, none).has_value());
  }

  SUBCASE("vertex indices outside the lattice are OutOfBounds") {
    Action a;
    a.target = GridIndex{0, 0, 0};  // below the first layer
    auto rej = validate(rules_for(ActionSpaceKind::ThreeDD), a, none);
    REQUIRE(rej.has_value());
    CHECK(rej->reason == RejectReason::OutOfBounds);
    a.target = GridIndex{4, 0, 1};
    rej = validate(rules_for(ActionSpaceKind::ThreeDD), a, none);
    REQUIRE(rej.has_value());
    CHECK(rej->reason == RejectReason::OutOfBounds);
  }
}

TEST_CASE("validate accepts every generated vertex when nothing is visited") {
  for (ActionSpaceKind kind :
       {ActionSpaceKind::TwoDNA, ActionSpaceKind::TwoDA, ActionSpaceKind::ThreeDD}) {
    const ActionSpaceRules rules = rules_for(kind);
    for (const auto& v : generate_vertices(rules.grid)) {
      Action a;
      a.target = v.index;
      CHECK_FALSE(validate(rules, a, {}).has_value());
    }
  }
}

TEST_CASE("action_to_pose: positions and orientations") {
  const ActionSpaceRules discrete = rules_for(ActionSpaceKind::ThreeDD);

  SUBCASE("vertex (0,0,1) lands on the first lattice corner, top-down") {
    Action a;
    a.target = GridIndex{0, 0, 1};
    const Pose p = action_to_pose(discrete, a);
    CHECK((p.position - Vec3(-0.3, 0.1, 0.1)).norm() < 1e-12);
    CHECK(quat_angle_deg(p.orientation, top_down_orientation()) == doctest::Approx(0.0));
  }

  SUBCASE("a 35-degree x tilt is 35 degrees from top-down") {
    const ActionSpaceRules rules = rules_for(ActionSpaceKind::ThreeDx);
    Action a;
    a.target = Vec3(0.0, 0.4, 0.3);
    a.rot_x_deg = 35;
    const Pose p = action_to_pose(rules, a);
    CHECK(std::abs(quat_angle_deg(p.orientation, top_down_orientation()) - 35.0) < 1e-6);
  }

  SUBCASE("zero rotations give exactly the top-down orientation") {
    const ActionSpaceRules rules = rules_for(ActionSpaceKind::ThreeDxy);
    Action a;
    a.target = Vec3(0.2, 0.6, 0.1);
    const Pose p = action_to_pose(rules, a);
    CHECK(p.orientation.angularDistance(top_down_orientation()) < 1e-12);
  }
}

TEST_CASE("rotations are absolute, never cumulative") {
  const ActionSpaceRules rules = rules_for(ActionSpaceKind::ThreeDxy);
  Action a;
  a.target = Vec3(0.0, 0.4, 0.2);
  a.rot_x_deg = 35;
  a.rot_y_deg = -35;
  const Pose first = action_to_pose(rules, a);
  const Pose second = action_to_pose(rules, a);  // same command after "moving"
  CHECK(quat_angle_deg(first.orientation, second.orientation) == doctest::Approx(0.0));
  CHECK((first.position - second.position).norm() == 0.0);
}

TEST_CASE("action_to_pose positions always satisfy the validate bounds") {
  std::mt19937_64 rng(51);
  const ActionSpaceRules rules = rules_for(ActionSpaceKind::ThreeDC);
  std::uniform_real_distribution<double> dx(-0.3, 0.3), dy(0.1, 0.7), dz(0.0, 0.3);
  for (int it = 0; it < 500; ++it) {
    Action a;
    a.target = Vec3(dx(rng), dy(rng), dz(rng));
    REQUIRE_FALSE(validate(rules, a, {}).has_value());
    CHECK(point_in_cube(rules.grid, action_to_pose(rules, a).position));
  }
  for (const auto& v : generate_vertices(rules_for(ActionSpaceKind::ThreeDD).grid)) {
    Action a;
    a.target = v.index;
    CHECK(point_in_cube(rules.grid, action_to_pose(rules_for(ActionSpaceKind::ThreeDD), a).position));
  }
}

TEST_CASE("describe_rules mentions the workspace and constraints") {
  const std::string text = describe_rules(rules_for(ActionSpaceKind::ThreeDx));
  CHECK(text.find("3Dx") != std::string::npos);
  CHECK(text.find("x axis") != std::string::npos);
  CHECK(text.find("visited") != std::string::npos);
  const std::string nap = describe_rules(rules_for(ActionSpaceKind::NAP));
  CHECK(nap.find("no camera movement") != std::string::npos);
}
