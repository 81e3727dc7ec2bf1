// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "apsim/agent.hpp"
#include "testutil.hpp"

using namespace apsim;

namespace {

EnhancedObservation observe_at(const SceneSpec& scene, const ActionSpaceRules& rules,
                               const Pose& pose) {
  return make_enhanced_observation(scene, rules, pose);
}

/// Scene whose hidden fact can be seen from the fixed front side view.
SceneSpec front_band_scene() {
  SceneSpec s;
  s.id = "front_band";
  ObjectSpec mug;
  mug.id = "mug";
  mug.shape = CylinderShape{0.04, 0.08};
  mug.pose.position = Vec3(0.0, 0.4, 0.05);
  mug.pose.orientation = Quat(Eigen::AngleAxisd(-M_PI / 2.0, Vec3::UnitX()));  // opening to -y
  mug.surface_attributes = {"wooden toy block beside it"};
  s.objects = {mug};
  s.hidden.owner_id = "mug";
  s.hidden.fact = "contains a marble";
  s.hidden.opening_center = Vec3(0.0, 0.36, 0.05);
  s.hidden.opening_normal = Vec3(0.0, -1.0, 0.0);
  s.hidden.cone_half_angle_deg = 30.0;
  s.hidden.min_distance = 0.1;
  s.hidden.max_distance = 0.5;
  s.markers = default_marker_ring(s.grid);
  s.home_pose = default_home_pose();
  s.goal_pose = look_at_pose(Vec3(0.0, 0.0, 0.15), Vec3(0.0, 0.4, 0.0));
  s.query = "What is inside the mug?";
  s.truth_answer = "marble";
  validate_scene(s);
  return s;
}

}  // namespace

TEST_CASE("normalize_text lowers, strips punctuation and collapses spaces") {
  CHECK(normalize_text("a Golf-Ball.") == "a golf ball");
  CHECK(normalize_text("  What is   inside?the mug ") == "what is inside the mug");
  CHECK(normalize_text("...") == "");
}

TEST_CASE("oracle analyzer: hidden-fact query") {
  const SceneSpec scene = testutil::upright_cup_scene();
  OracleAnalyzer oracle(scene);
  const ActionSpaceRules rules = rules_for(ActionSpaceKind::ThreeDx, scene.grid);
  const Query query{scene.query};

  SUBCASE("visible hidden fact gives the truth with full confidence") {
    const auto result = oracle.analyze(query, observe_at(scene, rules, scene.goal_pose));
    const Answer answer = std::get<Answer>(result);
    CHECK(answer.conclusive);
    CHECK(answer.text == "golf ball");
    CHECK(answer.confidence == doctest::Approx(1.0));
  }

  SUBCASE("invisible hidden fact is inconclusive with zero confidence") {
    const auto result = oracle.analyze(query, observe_at(scene, rules, scene.home_pose));
    const Answer answer = std::get<Answer>(result);
    CHECK_FALSE(answer.conclusive);
    CHECK(answer.confidence == doctest::Approx(0.0));
  }

  SUBCASE("repeated calls return identical answers") {
    const EnhancedObservation obs = observe_at(scene, rules, scene.goal_pose);
    const Answer a = std::get<Answer>(oracle.analyze(query, obs));
    const Answer b = std::get<Answer>(oracle.analyze(query, obs));
    CHECK(a.conclusive == b.conclusive);
    CHECK(a.text == b.text);
    CHECK(a.confidence == b.confidence);
  }
}

TEST_CASE("oracle analyzer: surface-attribute queries resolve from visible facts") {
  const SceneSpec scene = testutil::upright_cup_scene();
  OracleAnalyzer oracle(scene);
  const ActionSpaceRules rules = rules_for(ActionSpaceKind::ThreeDx, scene.grid);
  const EnhancedObservation home = observe_at(scene, rules, scene.home_pose);

  const auto result = oracle.analyze(Query{"Which box is on the table, a cracker box?"}, home);
  const Answer answer = std::get<Answer>(result);
  CHECK(answer.conclusive);
  CHECK(answer.text == "red cracker box");

  const Answer miss =
      std::get<Answer>(oracle.analyze(Query{"Is there a banana anywhere?"}, home));
  CHECK_FALSE(miss.conclusive);
}

TEST_CASE("knowledge bookkeeping: kappa grows by one, eta never changes") {
  const SceneSpec scene = testutil::upright_cup_scene();
  const ActionSpaceRules rules = rules_for(ActionSpaceKind::ThreeDD, scene.grid);
  const Query query{scene.query};
  Knowledge knowledge = make_initial_knowledge(rules, query);
  const InitialContext eta_before = knowledge.eta;
  const EnhancedObservation home = observe_at(scene, rules, scene.home_pose);

  GreedyPolicy greedy(scene);
  Pose pose = scene.home_pose;
  for (int step = 0; step < 5; ++step) {
    const size_t kappa_before = knowledge.kappa.size();
    const PolicyResult result = greedy.propose(pose, home, knowledge, &home, rules);
    const auto& proposal = std::get<Proposal>(result);
    CHECK(proposal.knowledge.kappa.size() == kappa_before + 1);
    CHECK(proposal.knowledge.kappa.back().step_index == static_cast<int>(kappa_before) + 1);
    knowledge = proposal.knowledge;
    pose = action_to_pose(rules, proposal.action);
  }
  CHECK(knowledge.eta.rules_text == eta_before.rules_text);
  CHECK(knowledge.eta.goal_statement == eta_before.goal_statement);
  CHECK((knowledge.eta.workspace_min - eta_before.workspace_min).norm() == 0.0);
  CHECK(visited_vertices(knowledge).size() == 5);
}

TEST_CASE("policies never propose a visited vertex and eventually exhaust") {
  const SceneSpec scene = testutil::upright_cup_scene();
  const ActionSpaceRules rules = rules_for(ActionSpaceKind::ThreeDD, scene.grid);
  const EnhancedObservation home = observe_at(scene, rules, scene.home_pose);
  const Query query{scene.query};

  auto drain = [&](ActivePerceptionPolicy& policy) {
    Knowledge knowledge = make_initial_knowledge(rules, query);
    Pose pose = scene.home_pose;
    int proposals = 0;
    while (true) {
      const PolicyResult result = policy.propose(pose, home, knowledge, &home, rules);
      if (std::holds_alternative<Exhausted>(result)) break;
      const auto& proposal = std::get<Proposal>(result);
      REQUIRE_FALSE(validate(rules, proposal.action, visited_vertices(knowledge)).has_value());
      knowledge = proposal.knowledge;
      pose = action_to_pose(rules, proposal.action);
      ++proposals;
      REQUIRE(proposals <= 48);
    }
    return proposals;
  };

  RandomPolicy random(99);
  CHECK(drain(random) == 48);
  GreedyPolicy greedy(scene);
  CHECK(drain(greedy) == 48);
}

TEST_CASE("random policy is deterministic under a fixed seed") {
  const SceneSpec scene = testutil::upright_cup_scene();
  const ActionSpaceRules rules = rules_for(ActionSpaceKind::ThreeDx, scene.grid);
  const EnhancedObservation home = observe_at(scene, rules, scene.home_pose);
  const Query query{scene.query};

  auto sequence = [&](uint64_t seed) {
    RandomPolicy policy(seed);
    Knowledge knowledge = make_initial_knowledge(rules, query);
    std::vector<std::string> out;
    Pose pose = scene.home_pose;
    for (int i = 0; i < 10; ++i) {
      const PolicyResult result = policy.propose(pose, home, knowledge, &home, rules);
      const auto& proposal = std::get<Proposal>(result);
      const GridIndex v = snapped_vertex(rules, proposal.action);
      out.push_back(std::to_string(v.i) + "," + std::to_string(v.j) + "," + std::to_string(v.k) +
                    ":" + std::to_string(proposal.action.rot_x_deg));
      knowledge = proposal.knowledge;
      pose = action_to_pose(rules, proposal.action);
    }
    return out;
  };
  CHECK(sequence(1234) == sequence(1234));
  CHECK(sequence(1234) != sequence(4321));
}

TEST_CASE("greedy policy heads straight for the opening") {
  SUBCASE("upright vessel: first pick is the vertex directly above, lowest layer") {
    const SceneSpec scene = testutil::upright_cup_scene();
    const ActionSpaceRules rules = rules_for(ActionSpaceKind::ThreeDD, scene.grid);
    GreedyPolicy greedy(scene);
    const Knowledge knowledge = make_initial_knowledge(rules, Query{scene.query});
    const EnhancedObservation home = observe_at(scene, rules, scene.home_pose);
    const PolicyResult result = greedy.propose(scene.home_pose, home, knowledge, &home, rules);
    const auto& proposal = std::get<Proposal>(result);
    CHECK(snapped_vertex(rules, proposal.action) == GridIndex{2, 2, 1});  // (0.1, 0.5, 0.1)
  }

  SUBCASE("inclined vessel: first pick carries the aligned tilt") {
    const SceneSpec scene = testutil::load_fixture("inclined.json");
    const ActionSpaceRules rules = rules_for(ActionSpaceKind::ThreeDx, scene.grid);
    GreedyPolicy greedy(scene);
    const Knowledge knowledge = make_initial_knowledge(rules, Query{scene.query});
    const EnhancedObservation home = observe_at(scene, rules, scene.home_pose);
    const PolicyResult result = greedy.propose(scene.home_pose, home, knowledge, &home, rules);
    const auto& proposal = std::get<Proposal>(result);
    CHECK(snapped_vertex(rules, proposal.action) == GridIndex{2, 2, 1});  // (0.1, 0.5, 0.1)
    CHECK(proposal.action.rot_x_deg == -35);
  }
}

TEST_CASE("fixed views: five poses, first conclusive answer wins") {
  SUBCASE("narrow upward cone defeats all five fixed views") {
    const SceneSpec scene = testutil::load_fixture("narrow_cone.json");
    OracleAnalyzer oracle(scene);
    const Answer answer = fixed_views_episode(scene, oracle, scene.camera);
    CHECK_FALSE(answer.conclusive);
  }

  SUBCASE("front-facing opening is resolved from the side band") {
    const SceneSpec scene = front_band_scene();
    OracleAnalyzer oracle(scene);
    const Answer answer = fixed_views_episode(scene, oracle, scene.camera);
    CHECK(answer.conclusive);
    CHECK(answer.text == "marble");
  }

  SUBCASE("surface-fact query resolves at the first view that sees the object") {
    SceneSpec scene = front_band_scene();
    scene.query = "Is there a toy block on the table?";
    scene.truth_answer = "toy block";
    validate_scene(scene);
    OracleAnalyzer oracle(scene);
    const Answer answer = fixed_views_episode(scene, oracle, scene.camera);
    CHECK(answer.conclusive);
    CHECK(answer.text.find("toy block") != std::string::npos);
  }

  SUBCASE("pose layout: four side views at 0.15 m plus the fixed top view") {
    const SceneSpec scene = testutil::upright_cup_scene();
    const auto poses = fixed_view_poses(scene);
    for (int i = 0; i < 4; ++i) CHECK(poses[i].position.z() == doctest::Approx(0.15));
    CHECK((poses[4].position - Vec3(-0.1, 0.3, 0.8)).norm() < 1e-12);
    CHECK(quat_angle_deg(poses[4].orientation, top_down_orientation()) == doctest::Approx(0.0));
  }
}
